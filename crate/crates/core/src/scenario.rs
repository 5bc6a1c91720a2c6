//! A fully specified simulation scene and its random realisations.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clusters::{generate_cluster_pair, ClusterPair, ClusterParams, EvolutionParams, LinkVisibility};
use crate::error::{Error, Result};
use crate::geometry::{PlanarArray, SceneGeometry, TerminalLayout, Vec3};
use crate::irs::cascaded_path_loss;
use crate::largescale::{db_to_power, path_loss_bu, sample_shadow_fading, LargeScaleParams};
use crate::rng::{rng_stream, StreamPath};
use crate::smallscale::{LosTrack, PairTracks, RayTrack};
use crate::SPEED_OF_LIGHT;

/// The three sub-channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Bi,
    Iu,
    Bu,
}

impl Link {
    pub const ALL: [Link; 3] = [Link::Bi, Link::Iu, Link::Bu];

    pub fn label(&self) -> &'static str {
        match self {
            Link::Bi => "bi",
            Link::Iu => "iu",
            Link::Bu => "bu",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Large-scale parameters of all three sub-channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleSet {
    pub scenario_name: String,
    pub bi: LargeScaleParams,
    pub iu: LargeScaleParams,
    pub bu: LargeScaleParams,
}

/// Sampled shadowing amplitudes and path-loss power gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeScaleFactors {
    pub sf_bi: f64,
    pub sf_iu: f64,
    pub sf_bu: f64,
    pub pl_biu: f64,
    pub pl_bu: f64,
}

impl LargeScaleFactors {
    pub const UNIT: Self = Self {
        sf_bi: 1.0,
        sf_iu: 1.0,
        sf_bu: 1.0,
        pl_biu: 1.0,
        pl_bu: 1.0,
    };

    /// Amplitude applied to the IRS cascade.
    pub fn cascade_amplitude(&self) -> f64 {
        self.sf_bi * self.sf_iu * self.pl_biu.sqrt()
    }

    /// Amplitude applied to the direct link.
    pub fn direct_amplitude(&self) -> f64 {
        self.sf_bu * self.pl_bu.sqrt()
    }
}

/// BS beam-steering settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringParams {
    pub doppler_hz: f64,
    /// Phase reference relative to BS element 1.
    pub reference: Vec3,
}

impl Default for SteeringParams {
    fn default() -> Self {
        Self {
            doppler_hz: 0.0,
            reference: Vec3::zeros(),
        }
    }
}

/// Static description of a scene: terminals, motion, carrier and cluster
/// statistics.
#[derive(Debug, Clone)]
pub struct Scenario {
    geometry: SceneGeometry,
    bs: TerminalLayout,
    irs: TerminalLayout,
    user: TerminalLayout,
    fc_hz: f64,
    v_bs: Vec3,
    v_user: Vec3,
    rician_k: f64,
    clusters: ClusterParams,
    large_scale: Option<LargeScaleSet>,
    steering: SteeringParams,
    bs_offsets: Vec<Vec3>,
    irs_offsets: Vec<Vec3>,
    user_offsets: Vec<Vec3>,
}

impl Scenario {
    pub fn new(
        geometry: SceneGeometry,
        bs: TerminalLayout,
        irs: TerminalLayout,
        user: TerminalLayout,
        fc_hz: f64,
        clusters: ClusterParams,
    ) -> Result<Self> {
        if !(fc_hz > 0.0 && fc_hz.is_finite()) {
            return Err(Error::domain("carrier frequency must be positive"));
        }
        if irs.planar().is_none() || bs.linear_array().is_none() || user.linear_array().is_none() {
            return Err(Error::domain("BS and USER must be linear arrays, the IRS planar"));
        }
        clusters.validate()?;
        Ok(Self {
            bs_offsets: bs.offsets(),
            irs_offsets: irs.offsets(),
            user_offsets: user.offsets(),
            geometry,
            bs,
            irs,
            user,
            fc_hz,
            v_bs: Vec3::zeros(),
            v_user: Vec3::zeros(),
            rician_k: 0.0,
            clusters,
            large_scale: None,
            steering: SteeringParams::default(),
        })
    }

    pub fn with_velocities(mut self, v_bs: Vec3, v_user: Vec3) -> Result<Self> {
        if v_bs.z != 0.0 || v_user.z != 0.0 {
            return Err(Error::domain("terminal velocities are horizontal"));
        }
        self.v_bs = v_bs;
        self.v_user = v_user;
        Ok(self)
    }

    pub fn with_rician_k(mut self, k: f64) -> Result<Self> {
        if !(k >= 0.0) {
            return Err(Error::domain(format!("Rician factor must be >= 0, got {k}")));
        }
        self.rician_k = k;
        Ok(self)
    }

    pub fn with_clusters(mut self, clusters: ClusterParams) -> Result<Self> {
        clusters.validate()?;
        self.clusters = clusters;
        Ok(self)
    }

    pub fn with_large_scale(mut self, ls: Option<LargeScaleSet>) -> Result<Self> {
        if let Some(ls) = &ls {
            ls.bi.validate()?;
            ls.iu.validate()?;
            ls.bu.validate()?;
        }
        self.large_scale = ls;
        Ok(self)
    }

    pub fn with_steering(mut self, steering: SteeringParams) -> Self {
        self.steering = steering;
        self
    }

    pub fn with_irs(mut self, irs: TerminalLayout) -> Result<Self> {
        if irs.planar().is_none() {
            return Err(Error::domain("IRS must be planar"));
        }
        self.irs_offsets = irs.offsets();
        self.irs = irs;
        Ok(self)
    }

    pub fn geometry(&self) -> &SceneGeometry {
        &self.geometry
    }

    pub fn bs(&self) -> &TerminalLayout {
        &self.bs
    }

    pub fn irs(&self) -> &TerminalLayout {
        &self.irs
    }

    pub fn irs_array(&self) -> &PlanarArray {
        self.irs.planar().expect("checked at construction")
    }

    pub fn user(&self) -> &TerminalLayout {
        &self.user
    }

    pub fn fc_hz(&self) -> f64 {
        self.fc_hz
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc_hz
    }

    pub fn v_bs(&self) -> Vec3 {
        self.v_bs
    }

    pub fn v_user(&self) -> Vec3 {
        self.v_user
    }

    pub fn rician_k(&self) -> f64 {
        self.rician_k
    }

    pub fn clusters(&self) -> &ClusterParams {
        &self.clusters
    }

    pub fn large_scale(&self) -> Option<&LargeScaleSet> {
        self.large_scale.as_ref()
    }

    pub fn steering(&self) -> &SteeringParams {
        &self.steering
    }

    fn layouts(&self, link: Link) -> (&TerminalLayout, &TerminalLayout) {
        match link {
            Link::Bi => (&self.bs, &self.irs),
            Link::Iu => (&self.irs, &self.user),
            Link::Bu => (&self.bs, &self.user),
        }
    }

    /// Element counts `(tx, rx)` of a sub-channel.
    pub fn link_dims(&self, link: Link) -> (usize, usize) {
        let (a, b) = self.layouts(link);
        (a.element_count(), b.element_count())
    }

    fn bs_position(&self, q: usize) -> Vec3 {
        self.bs_offsets[q]
    }

    fn irs_position(&self, r: usize) -> Vec3 {
        self.geometry.d_bi() + self.irs_offsets[r]
    }

    fn user_position(&self, p: usize) -> Vec3 {
        self.geometry.d_bu() + self.user_offsets[p]
    }

    /// Position at `t = 0` and velocity of tx element `i` (0-based).
    pub fn tx_state(&self, link: Link, i: usize) -> (Vec3, Vec3) {
        match link {
            Link::Bi | Link::Bu => (self.bs_position(i), self.v_bs),
            Link::Iu => (self.irs_position(i), Vec3::zeros()),
        }
    }

    /// Position at `t = 0` and velocity of rx element `j` (0-based).
    pub fn rx_state(&self, link: Link, j: usize) -> (Vec3, Vec3) {
        match link {
            Link::Bi => (self.irs_position(j), Vec3::zeros()),
            Link::Iu | Link::Bu => (self.user_position(j), self.v_user),
        }
    }

    /// Reference points around which first- and last-bounce clusters are
    /// placed: BS element 1, the IRS centre or USER element 1.
    pub fn reference_points(&self, link: Link) -> (Vec3, Vec3) {
        match link {
            Link::Bi => (Vec3::zeros(), self.geometry.d_bi()),
            Link::Iu => (self.geometry.d_bi(), self.geometry.d_bu()),
            Link::Bu => (Vec3::zeros(), self.geometry.d_bu()),
        }
    }

    pub fn los_track(&self, link: Link, i: usize, j: usize) -> LosTrack {
        let (p_tx, v_tx) = self.tx_state(link, i);
        let (p_rx, v_rx) = self.rx_state(link, j);
        LosTrack {
            origin: p_rx - p_tx,
            rate: v_rx - v_tx,
        }
    }

    /// LoS vector from tx element `i` to rx element `j` at time `t`.
    pub fn los_vector(&self, link: Link, i: usize, j: usize, t: f64) -> Vec3 {
        self.los_track(link, i, j).vector(t)
    }

    pub fn los_delay(&self, link: Link, i: usize, j: usize, t: f64) -> f64 {
        self.los_vector(link, i, j, t).norm() / SPEED_OF_LIGHT
    }

    /// Draws the visibility and clusters of one sub-channel for trial `k`.
    pub fn realize_link(&self, seed: u64, trial: u64, link: Link) -> Result<LinkRealization> {
        let base = StreamPath::trial(trial).name(link.label());
        let (tx_layout, rx_layout) = self.layouts(link);
        let mut rng = rng_stream(seed, &base.clone().name("visibility"));
        let visibility = LinkVisibility::evolve(
            tx_layout,
            rx_layout,
            &EvolutionParams::from(&self.clusters),
            &mut rng,
        )?;
        let (tx_ref, rx_ref) = self.reference_points(link);
        let clusters = (0..visibility.total())
            .map(|id| {
                let mut rng = rng_stream(seed, &base.clone().name("cluster").index(u64::from(id)));
                generate_cluster_pair(id, &self.clusters, &tx_ref, &rx_ref, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LinkRealization {
            link,
            visibility,
            clusters,
        })
    }

    pub fn realize(&self, seed: u64, trial: u64, links: &[Link]) -> Result<Realization> {
        let mut out = Realization {
            trial,
            bi: None,
            iu: None,
            bu: None,
        };
        for &link in links {
            let r = Some(self.realize_link(seed, trial, link)?);
            match link {
                Link::Bi => out.bi = r,
                Link::Iu => out.iu = r,
                Link::Bu => out.bu = r,
            }
        }
        Ok(out)
    }

    /// Ray tracks between tx element `i` and rx element `j`.
    pub fn pair_tracks(&self, lr: &LinkRealization, i: usize, j: usize) -> PairTracks {
        let (p_tx, v_tx) = self.tx_state(lr.link, i);
        let (p_rx, v_rx) = self.rx_state(lr.link, j);
        let ids = lr.visibility.pair_ids(i, j);
        let mut rays = Vec::with_capacity(ids.len() * self.clusters.rays_per_cluster);
        for id in ids {
            rays.extend(ray_tracks(&lr.clusters[id as usize], &p_tx, &v_tx, &p_rx, &v_rx));
        }
        PairTracks {
            tx: i,
            rx: j,
            los: self.los_track(lr.link, i, j),
            rays,
            power_decay_s: self.clusters.power_decay_s,
        }
    }

    /// Rician-combined transfer function of pair `(i, j)` at `(t, f)`.
    pub fn response(&self, lr: &LinkRealization, i: usize, j: usize, t: f64, f: f64) -> Result<Complex64> {
        self.pair_tracks(lr, i, j).response(t, f, self.fc_hz, self.rician_k)
    }

    /// Shadowing and path loss for trial `k` at time `t`.
    pub fn large_scale_factors(&self, seed: u64, trial: u64, t: f64) -> Result<LargeScaleFactors> {
        let Some(ls) = &self.large_scale else {
            return Ok(LargeScaleFactors::UNIT);
        };
        let mut rng = rng_stream(seed, &StreamPath::trial(trial).name("largescale"));
        let sf_bi = sample_shadow_fading(&ls.bi, &mut rng);
        let sf_iu = sample_shadow_fading(&ls.iu, &mut rng);
        let sf_bu = sample_shadow_fading(&ls.bu, &mut rng);
        let distances = self.irs_distances(t);
        let pl_biu = cascaded_path_loss(self.irs_array(), &distances, self.wavelength())?;
        let d_bu_km = self.los_vector(Link::Bu, 0, 0, t).norm() / 1000.0;
        let pl_bu = db_to_power(path_loss_bu(d_bu_km, self.fc_hz / 1e9, &ls.bu)?);
        Ok(LargeScaleFactors {
            sf_bi,
            sf_iu,
            sf_bu,
            pl_biu,
            pl_bu,
        })
    }

    /// `(r_t, r_r)` per IRS element from BS element 1 and to USER element 1.
    pub fn irs_distances(&self, t: f64) -> Vec<(f64, f64)> {
        (0..self.irs_offsets.len())
            .map(|r| {
                (
                    self.los_vector(Link::Bi, 0, r, t).norm(),
                    self.los_vector(Link::Iu, r, 0, t).norm(),
                )
            })
            .collect()
    }

    /// Departure (elevation, azimuth) from BS element 1 toward the IRS
    /// centre at time `t`.
    pub fn steering_direction(&self, t: f64) -> (f64, f64) {
        let d = self.geometry.d_bi() - self.v_bs * t;
        let n = d.norm();
        ((d.z / n).asin(), d.y.atan2(d.x))
    }

    /// `2π(f_c − f)`.
    pub fn angular_frequency(&self, f: f64) -> f64 {
        TAU * (self.fc_hz - f)
    }
}

/// Ray tracks of one cluster for a given tx/rx element state.
pub fn ray_tracks(c: &ClusterPair, p_tx: &Vec3, v_tx: &Vec3, p_rx: &Vec3, v_rx: &Vec3) -> Vec<RayTrack> {
    let tx_rate = c.first_velocity - v_tx;
    let rx_rate = c.last_velocity - v_rx;
    c.first_scatterers
        .iter()
        .zip(&c.last_scatterers)
        .enumerate()
        .map(|(m, (sa, sz))| RayTrack {
            cluster_id: c.id,
            ray_id: m as u32,
            tx_origin: sa - p_tx,
            tx_rate,
            rx_origin: sz - p_rx,
            rx_rate,
            virtual_delay_s: c.virtual_delay_s,
        })
        .collect()
}

/// Random state of one sub-channel in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRealization {
    pub link: Link,
    pub visibility: LinkVisibility,
    /// Indexed by cluster id.
    pub clusters: Vec<ClusterPair>,
}

/// Random state of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub trial: u64,
    pub bi: Option<LinkRealization>,
    pub iu: Option<LinkRealization>,
    pub bu: Option<LinkRealization>,
}

impl Realization {
    pub fn link(&self, link: Link) -> Result<&LinkRealization> {
        match link {
            Link::Bi => self.bi.as_ref(),
            Link::Iu => self.iu.as_ref(),
            Link::Bu => self.bu.as_ref(),
        }
        .ok_or_else(|| Error::domain(format!("sub-channel {link} was not realised")))
    }
}
