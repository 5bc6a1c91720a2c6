//! JSON scenario configuration.
//!
//! Keys carry their unit (`_m`, `_deg`, `_ghz`, `_ns`, ...). Angles are
//! converted to radians and K from dB to linear when the [`Scenario`] is
//! built. Errors point into the document with a JSON pointer.

use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::clusters::ClusterParams;
use crate::error::{Error, Result};
use crate::geometry::{velocity_2d, LinearArray, PlanarArray, SceneGeometry, TerminalLayout, Vec3};
use crate::irs::PhaseResolution;
use crate::largescale::LargeScaleParams;
use crate::scenario::{LargeScaleSet, Link, Scenario, SteeringParams};
use crate::stats::ArraySide;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    /// Monte-Carlo trials for ensemble statistics.
    #[serde(default = "one")]
    pub trials: u64,
    pub fc_ghz: f64,
    /// Rician factor in dB; `null` or absent means no LoS (K = 0).
    #[serde(default)]
    pub rician_k_db: Option<f64>,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub bs: LinearArrayConfig,
    #[serde(default)]
    pub user: LinearArrayConfig,
    #[serde(default)]
    pub irs: IrsConfig,
    #[serde(default)]
    pub motion: MotionConfig,
    #[serde(default)]
    pub clusters: ClusterConfig,
    #[serde(default)]
    pub phase_resolution: PhaseResolutionConfig,
    #[serde(default)]
    pub large_scale: Option<LargeScaleConfig>,
    #[serde(default)]
    pub steering: Option<SteeringConfig>,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub acf: AcfConfig,
    #[serde(default)]
    pub ccf: CcfConfig,
    #[serde(default)]
    pub doppler: DopplerConfig,
    #[serde(default)]
    pub ds_cdf: DsCdfConfig,
    #[serde(default)]
    pub cluster_evolve: ClusterEvolveConfig,
    #[serde(default)]
    pub link_budget: LinkBudgetConfig,
}

fn one() -> u64 {
    1
}
fn yes() -> bool {
    true
}

/// Two of the three displacement vectors; the third follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    pub d_bi_m: Option<[f64; 3]>,
    #[serde(default)]
    pub d_iu_m: Option<[f64; 3]>,
    #[serde(default)]
    pub d_bu_m: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LinearArrayConfig {
    #[serde(default = "one_usize")]
    pub elements: usize,
    /// Defaults to half a wavelength.
    #[serde(default)]
    pub spacing_m: Option<f64>,
    #[serde(default = "deg90")]
    pub azimuth_deg: f64,
    #[serde(default)]
    pub elevation_deg: f64,
}

fn one_usize() -> usize {
    1
}
fn deg90() -> f64 {
    90.0
}
fn deg180() -> f64 {
    180.0
}

impl Default for LinearArrayConfig {
    fn default() -> Self {
        Self {
            elements: 1,
            spacing_m: None,
            azimuth_deg: 90.0,
            elevation_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct IrsConfig {
    #[serde(default = "one_usize")]
    pub mx: usize,
    #[serde(default = "one_usize")]
    pub my: usize,
    #[serde(default)]
    pub spacing_x_m: Option<f64>,
    #[serde(default)]
    pub spacing_y_m: Option<f64>,
    #[serde(default = "deg180")]
    pub azimuth_x_deg: f64,
    #[serde(default)]
    pub elevation_x_deg: f64,
    #[serde(default)]
    pub azimuth_y_deg: f64,
    #[serde(default = "deg90")]
    pub elevation_y_deg: f64,
}

impl Default for IrsConfig {
    fn default() -> Self {
        Self {
            mx: 1,
            my: 1,
            spacing_x_m: None,
            spacing_y_m: None,
            azimuth_x_deg: 180.0,
            elevation_x_deg: 0.0,
            azimuth_y_deg: 0.0,
            elevation_y_deg: 90.0,
        }
    }
}

/// Horizontal speeds and headings. Cluster headings are drawn uniformly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    #[serde(default)]
    pub bs_speed_mps: f64,
    #[serde(default)]
    pub bs_azimuth_deg: f64,
    #[serde(default)]
    pub user_speed_mps: f64,
    #[serde(default)]
    pub user_azimuth_deg: f64,
    #[serde(default)]
    pub cluster_first_speed_mps: f64,
    #[serde(default)]
    pub cluster_last_speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(default = "d_birth")]
    pub birth_rate_per_m: f64,
    #[serde(default = "d_death")]
    pub death_rate_per_m: f64,
    /// Rate inside the survival exponent; the birth rate when absent.
    #[serde(default)]
    pub survival_rate_per_m: Option<f64>,
    #[serde(default = "d_dc")]
    pub correlation_distance_m: f64,
    #[serde(default = "d_rays")]
    pub rays_per_cluster: usize,
    #[serde(default = "d_sigma")]
    pub scatter_sigma_m: [f64; 3],
    #[serde(default = "d_tau")]
    pub mean_virtual_delay_ns: f64,
    #[serde(default = "d_gamma")]
    pub power_decay_ns: f64,
    #[serde(default = "d_dist")]
    pub center_distance_mean_m: f64,
    #[serde(default = "d_floor")]
    pub center_distance_floor_m: f64,
    #[serde(default = "d_elev")]
    pub center_elevation_max_deg: f64,
}

fn d_birth() -> f64 {
    80.0
}
fn d_death() -> f64 {
    4.0
}
fn d_dc() -> f64 {
    10.0
}
fn d_rays() -> usize {
    20
}
fn d_sigma() -> [f64; 3] {
    [2.0, 2.0, 1.0]
}
fn d_tau() -> f64 {
    40.0
}
fn d_gamma() -> f64 {
    60.0
}
fn d_dist() -> f64 {
    30.0
}
fn d_floor() -> f64 {
    5.0
}
fn d_elev() -> f64 {
    30.0
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            birth_rate_per_m: d_birth(),
            death_rate_per_m: d_death(),
            survival_rate_per_m: None,
            correlation_distance_m: d_dc(),
            rays_per_cluster: d_rays(),
            scatter_sigma_m: d_sigma(),
            mean_virtual_delay_ns: d_tau(),
            power_decay_ns: d_gamma(),
            center_distance_mean_m: d_dist(),
            center_distance_floor_m: d_floor(),
            center_elevation_max_deg: d_elev(),
        }
    }
}

/// `"continuous"` or `{"bits": b}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum PhaseResolutionConfig {
    #[default]
    Continuous,
    Bits(u32),
}

impl From<PhaseResolutionConfig> for PhaseResolution {
    fn from(p: PhaseResolutionConfig) -> Self {
        match p {
            PhaseResolutionConfig::Continuous => PhaseResolution::Continuous,
            PhaseResolutionConfig::Bits(b) => PhaseResolution::Bits(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LargeScaleConfig {
    #[serde(default)]
    pub scenario_name: String,
    #[serde(default = "LargeScaleParams::default")]
    pub bi: LargeScaleParams,
    #[serde(default = "LargeScaleParams::default")]
    pub iu: LargeScaleParams,
    #[serde(default = "LargeScaleParams::default")]
    pub bu: LargeScaleParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SteeringConfig {
    #[serde(default)]
    pub doppler_hz: f64,
    /// Phase reference relative to BS element 1.
    #[serde(default)]
    pub reference_m: [f64; 3],
}

/// Time-lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum LagGrid {
    List(Vec<f64>),
    Linear { start_s: f64, stop_s: f64, count: usize },
    /// Geometric spacing from `start_s` (> 0) to `stop_s`, optionally with a
    /// leading zero lag.
    Log {
        start_s: f64,
        stop_s: f64,
        count: usize,
        #[serde(default)]
        include_zero: bool,
    },
}

impl Default for LagGrid {
    fn default() -> Self {
        LagGrid::Linear {
            start_s: 0.0,
            stop_s: 0.1,
            count: 101,
        }
    }
}

impl LagGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let bad = |m: &str| Error::config("/time/lags", m);
        let out = match *self {
            LagGrid::List(ref v) => v.clone(),
            LagGrid::Linear { start_s, stop_s, count } => {
                if count == 0 || stop_s < start_s {
                    return Err(bad("linear grid needs count >= 1 and stop >= start"));
                }
                if count == 1 {
                    vec![start_s]
                } else {
                    let step = (stop_s - start_s) / (count - 1) as f64;
                    (0..count).map(|i| start_s + step * i as f64).collect()
                }
            }
            LagGrid::Log {
                start_s,
                stop_s,
                count,
                include_zero,
            } => {
                if count < 2 || !(start_s > 0.0) || stop_s <= start_s {
                    return Err(bad("log grid needs count >= 2 and 0 < start < stop"));
                }
                let r = (stop_s / start_s).ln() / (count - 1) as f64;
                let zero = include_zero.then_some(0.0);
                zero.into_iter()
                    .chain((0..count).map(|i| start_s * (r * i as f64).exp()))
                    .collect()
            }
        };
        if out.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(bad("lags must be finite and >= 0"));
        }
        if out.is_empty() {
            return Err(bad("lag grid is empty"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Anchor instants.
    #[serde(default = "zero_vec")]
    pub t_s: Vec<f64>,
    /// Frequency offset `f` from the carrier.
    #[serde(default)]
    pub f_offset_hz: f64,
    #[serde(default)]
    pub lags: LagGrid,
}

fn zero_vec() -> Vec<f64> {
    vec![0.0]
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_s: zero_vec(),
            f_offset_hz: 0.0,
            lags: LagGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Realisations to dump; independent of the ensemble trial count.
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default = "yes")]
    pub include_direct: bool,
    /// Dump taps of every element pair instead of element 1 only.
    #[serde(default)]
    pub all_pairs: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            trials: 1,
            include_direct: true,
            all_pairs: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum AcfMode {
    Subchannel,
    #[default]
    SingleElement,
    FullIrs,
}

/// Element indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AcfConfig {
    #[serde(default)]
    pub mode: AcfMode,
    /// Sub-channel for `subchannel` mode.
    #[serde(default = "bi")]
    pub link: Link,
    #[serde(default = "one_usize")]
    pub q: usize,
    #[serde(default = "one_usize")]
    pub r: usize,
    #[serde(default = "one_usize")]
    pub p: usize,
    /// Phase resolutions to evaluate; the scenario resolution when empty.
    #[serde(default)]
    pub resolutions: Vec<PhaseResolutionConfig>,
    /// Rician factors (dB, `null` = no LoS) for `full_irs`; the scenario K
    /// when empty.
    #[serde(default)]
    pub k_db_sweep: Vec<Option<f64>>,
    #[serde(default = "yes")]
    pub analytical: bool,
}

fn bi() -> Link {
    Link::Bi
}
fn bu() -> Link {
    Link::Bu
}

impl Default for AcfConfig {
    fn default() -> Self {
        Self {
            mode: AcfMode::default(),
            link: Link::Bi,
            q: 1,
            r: 1,
            p: 1,
            resolutions: Vec::new(),
            k_db_sweep: Vec::new(),
            analytical: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CcfConfig {
    #[serde(default = "bu")]
    pub link: Link,
    #[serde(default = "tx")]
    pub side: ArraySide,
    /// 1-based elements correlated against element 1; all when empty.
    #[serde(default)]
    pub elements: Vec<usize>,
    #[serde(default)]
    pub dt_s: f64,
}

fn tx() -> ArraySide {
    ArraySide::Tx
}

impl Default for CcfConfig {
    fn default() -> Self {
        Self {
            link: Link::Bu,
            side: ArraySide::Tx,
            elements: Vec::new(),
            dt_s: 0.0,
        }
    }
}

/// Which channel the Doppler spread is measured on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum DopplerTarget {
    /// BS → IRS element `r` → USER.
    #[default]
    Cascade,
    Bi,
    Iu,
    Bu,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DopplerConfig {
    #[serde(default)]
    pub target: DopplerTarget,
    /// USER speeds to sweep; the configured speed when empty.
    #[serde(default)]
    pub user_speeds_mps: Vec<f64>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub p: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DsCdfConfig {
    #[serde(default = "bi")]
    pub link: Link,
    #[serde(default = "one_usize")]
    pub tx: usize,
    #[serde(default = "one_usize")]
    pub rx: usize,
    /// Scatterer σ-triples; the cluster setting when empty.
    #[serde(default)]
    pub sigmas_m: Vec<[f64; 3]>,
}

impl Default for DsCdfConfig {
    fn default() -> Self {
        Self {
            link: Link::Bi,
            tx: 1,
            rx: 1,
            sigmas_m: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum EvolveTerminal {
    Bs,
    #[default]
    Irs,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ClusterEvolveConfig {
    #[serde(default)]
    pub terminal: EvolveTerminal,
    /// Independent evolutions summarised; the first one is exported.
    #[serde(default = "one")]
    pub runs: u64,
    /// Cluster ids in the visibility export; the initial clusters when absent.
    #[serde(default)]
    pub export_ids: Option<Vec<u32>>,
}

impl Default for ClusterEvolveConfig {
    fn default() -> Self {
        Self {
            terminal: EvolveTerminal::Irs,
            runs: 1,
            export_ids: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetConfig {
    #[serde(default)]
    pub transmit_power_dbm: f64,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut s = String::new();
    for seg in path.iter() {
        s.push('/');
        match seg {
            Segment::Seq { index } => s.push_str(&index.to_string()),
            Segment::Map { key } => s.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => s.push_str(variant),
            Segment::Unknown => s.push('?'),
        }
    }
    if s.is_empty() {
        s.push('/');
    }
    s
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

fn check(ok: bool, pointer: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(pointer, msg))
    }
}

fn finite3(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// `K` in dB to linear, with `None` meaning no LoS.
pub fn k_linear(k_db: Option<f64>) -> f64 {
    k_db.map_or(0.0, |k| 10f64.powf(k / 10.0))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            Error::config(pointer, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("/", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn schema() -> Result<String> {
        Ok(serde_json::to_string_pretty(&schemars::schema_for!(ScenarioConfig))?)
    }

    pub fn fc_hz(&self) -> f64 {
        self.fc_ghz * 1e9
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc_hz()
    }

    pub fn rician_k(&self) -> f64 {
        k_linear(self.rician_k_db)
    }

    pub fn phase_resolution(&self) -> PhaseResolution {
        self.phase_resolution.into()
    }

    pub fn validate(&self) -> Result<()> {
        check(self.fc_ghz.is_finite() && self.fc_ghz > 0.0, "/fc_ghz", "must be positive")?;
        check(self.trials >= 1, "/trials", "must be >= 1")?;
        if let Some(k) = self.rician_k_db {
            check(k.is_finite(), "/rician_k_db", "must be finite or null")?;
        }
        let g = &self.geometry;
        let given = [g.d_bi_m, g.d_iu_m, g.d_bu_m].iter().filter(|v| v.is_some()).count();
        check(given == 2, "/geometry", "exactly two of d_bi_m, d_iu_m, d_bu_m are required")?;
        for (name, v) in [("d_bi_m", g.d_bi_m), ("d_iu_m", g.d_iu_m), ("d_bu_m", g.d_bu_m)] {
            if let Some(v) = v {
                check(finite3(&v), &format!("/geometry/{name}"), "must be finite")?;
            }
        }
        for (name, a) in [("bs", &self.bs), ("user", &self.user)] {
            check(a.elements >= 1, &format!("/{name}/elements"), "must be >= 1")?;
            if let Some(s) = a.spacing_m {
                check(s > 0.0 && s.is_finite(), &format!("/{name}/spacing_m"), "must be positive")?;
            }
        }
        check(self.irs.mx >= 1, "/irs/mx", "must be >= 1")?;
        check(self.irs.my >= 1, "/irs/my", "must be >= 1")?;
        for (name, s) in [("spacing_x_m", self.irs.spacing_x_m), ("spacing_y_m", self.irs.spacing_y_m)] {
            if let Some(s) = s {
                check(s > 0.0 && s.is_finite(), &format!("/irs/{name}"), "must be positive")?;
            }
        }
        let m = &self.motion;
        for (name, v) in [
            ("bs_speed_mps", m.bs_speed_mps),
            ("user_speed_mps", m.user_speed_mps),
            ("cluster_first_speed_mps", m.cluster_first_speed_mps),
            ("cluster_last_speed_mps", m.cluster_last_speed_mps),
        ] {
            check(v.is_finite() && v >= 0.0, &format!("/motion/{name}"), "must be >= 0")?;
        }
        if let PhaseResolutionConfig::Bits(b) = self.phase_resolution {
            check((1..=16).contains(&b), "/phase_resolution/bits", "must be in 1..=16")?;
        }
        for (i, r) in self.acf.resolutions.iter().enumerate() {
            if let PhaseResolutionConfig::Bits(b) = r {
                check((1..=16).contains(b), &format!("/acf/resolutions/{i}/bits"), "must be in 1..=16")?;
            }
        }
        check(
            self.time.t_s.iter().all(|t| t.is_finite() && *t >= 0.0) && !self.time.t_s.is_empty(),
            "/time/t_s",
            "needs at least one finite instant >= 0",
        )?;
        self.time.lags.values()?;
        check(
            self.acf.q >= 1 && self.acf.r >= 1 && self.acf.p >= 1,
            "/acf",
            "element indices are 1-based",
        )?;
        check(self.acf.q <= self.bs.elements, "/acf/q", "exceeds the BS array")?;
        check(self.acf.p <= self.user.elements, "/acf/p", "exceeds the USER array")?;
        check(self.acf.r <= self.irs.mx * self.irs.my, "/acf/r", "exceeds the IRS")?;
        check(self.simulate.trials >= 1, "/simulate/trials", "must be >= 1")?;
        check(self.cluster_evolve.runs >= 1, "/cluster_evolve/runs", "must be >= 1")?;
        check(
            self.ds_cdf.sigmas_m.iter().all(|s| s.iter().all(|x| x.is_finite() && *x >= 0.0)),
            "/ds_cdf/sigmas_m",
            "σ entries must be >= 0",
        )?;
        check(
            self.doppler.user_speeds_mps.iter().all(|v| v.is_finite() && *v >= 0.0),
            "/doppler/user_speeds_mps",
            "speeds must be >= 0",
        )?;
        // the remaining cluster checks live with the parameters
        self.cluster_params()
            .validate()
            .map_err(|e| Error::config("/clusters", e.to_string()))?;
        Ok(())
    }

    pub fn cluster_params(&self) -> ClusterParams {
        let c = &self.clusters;
        ClusterParams {
            birth_rate: c.birth_rate_per_m,
            death_rate: c.death_rate_per_m,
            survival_exponent_rate: c.survival_rate_per_m.unwrap_or(c.birth_rate_per_m),
            correlation_distance_m: c.correlation_distance_m,
            rays_per_cluster: c.rays_per_cluster,
            scatter_sigma_m: c.scatter_sigma_m,
            mean_virtual_delay_s: c.mean_virtual_delay_ns * 1e-9,
            power_decay_s: c.power_decay_ns * 1e-9,
            center_distance_mean_m: c.center_distance_mean_m,
            center_distance_floor_m: c.center_distance_floor_m,
            center_elevation_max: deg(c.center_elevation_max_deg),
            speed_first_mps: self.motion.cluster_first_speed_mps,
            speed_last_mps: self.motion.cluster_last_speed_mps,
        }
    }

    pub fn scene_geometry(&self) -> SceneGeometry {
        let v = |a: [f64; 3]| Vec3::new(a[0], a[1], a[2]);
        let g = &self.geometry;
        match (g.d_bi_m, g.d_iu_m, g.d_bu_m) {
            (Some(bi), Some(iu), _) => SceneGeometry::from_bi_iu(v(bi), v(iu)),
            (Some(bi), None, Some(bu)) => SceneGeometry::from_bi_bu(v(bi), v(bu)),
            (None, Some(iu), Some(bu)) => SceneGeometry::from_iu_bu(v(iu), v(bu)),
            _ => unreachable!("validated"),
        }
    }

    fn linear(&self, a: &LinearArrayConfig) -> LinearArray {
        LinearArray {
            elements: a.elements,
            spacing_m: a.spacing_m.unwrap_or(self.wavelength() / 2.0),
            azimuth: deg(a.azimuth_deg),
            elevation: deg(a.elevation_deg),
        }
    }

    pub fn irs_array(&self) -> PlanarArray {
        let i = &self.irs;
        let half = self.wavelength() / 2.0;
        PlanarArray {
            mx: i.mx,
            my: i.my,
            spacing_x_m: i.spacing_x_m.unwrap_or(half),
            spacing_y_m: i.spacing_y_m.unwrap_or(half),
            azimuth_x: deg(i.azimuth_x_deg),
            elevation_x: deg(i.elevation_x_deg),
            azimuth_y: deg(i.azimuth_y_deg),
            elevation_y: deg(i.elevation_y_deg),
        }
    }

    pub fn bs_layout(&self) -> Result<TerminalLayout> {
        TerminalLayout::bs(self.linear(&self.bs))
    }

    pub fn user_layout(&self) -> Result<TerminalLayout> {
        TerminalLayout::user(self.linear(&self.user))
    }

    pub fn irs_layout(&self) -> Result<TerminalLayout> {
        TerminalLayout::irs(self.irs_array())
    }

    /// Builds the scenario with the configured USER speed.
    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_with_user_speed(self.motion.user_speed_mps)
    }

    pub fn scenario_with_user_speed(&self, user_speed_mps: f64) -> Result<Scenario> {
        let m = &self.motion;
        let mut s = Scenario::new(
            self.scene_geometry(),
            self.bs_layout()?,
            self.irs_layout()?,
            self.user_layout()?,
            self.fc_hz(),
            self.cluster_params(),
        )?
        .with_velocities(
            velocity_2d(m.bs_speed_mps, deg(m.bs_azimuth_deg)),
            velocity_2d(user_speed_mps, deg(m.user_azimuth_deg)),
        )?
        .with_rician_k(self.rician_k())?;
        if let Some(ls) = &self.large_scale {
            s = s.with_large_scale(Some(LargeScaleSet {
                scenario_name: ls.scenario_name.clone(),
                bi: ls.bi.clone(),
                iu: ls.iu.clone(),
                bu: ls.bu.clone(),
            }))?;
        }
        if let Some(st) = &self.steering {
            let r = st.reference_m;
            s = s.with_steering(SteeringParams {
                doppler_hz: st.doppler_hz,
                reference: Vec3::new(r[0], r[1], r[2]),
            });
        }
        Ok(s)
    }
}
