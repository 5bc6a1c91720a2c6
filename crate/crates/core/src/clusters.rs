//! Twin clusters, Gaussian scatterers and space-domain birth–death visibility.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{
    direction, lcs_to_gcs, velocity_2d, ArrayShape, RotationAngles, TerminalLayout, Vec3,
};

/// Cluster statistics, SI units and radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    /// Birth rate λ_B.
    pub birth_rate: f64,
    /// Death rate λ_D.
    pub death_rate: f64,
    /// Rate in the survival exponent; λ_B unless overridden.
    pub survival_exponent_rate: f64,
    /// Correlation factor D_C^A, metres.
    pub correlation_distance_m: f64,
    pub rays_per_cluster: usize,
    /// Scatterer standard deviations along the cluster LCS axes, metres.
    pub scatter_sigma_m: [f64; 3],
    pub mean_virtual_delay_s: f64,
    /// Decay constant γ_DS of the per-ray power profile.
    pub power_decay_s: f64,
    pub center_distance_mean_m: f64,
    pub center_distance_floor_m: f64,
    /// Centre elevations are uniform in `[-max, max]`.
    pub center_elevation_max: f64,
    pub speed_first_mps: f64,
    pub speed_last_mps: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            birth_rate: 80.0,
            death_rate: 4.0,
            survival_exponent_rate: 80.0,
            correlation_distance_m: 10.0,
            rays_per_cluster: 20,
            scatter_sigma_m: [2.0, 2.0, 1.0],
            mean_virtual_delay_s: 40e-9,
            power_decay_s: 60e-9,
            center_distance_mean_m: 30.0,
            center_distance_floor_m: 5.0,
            center_elevation_max: PI / 6.0,
            speed_first_mps: 0.0,
            speed_last_mps: 0.0,
        }
    }
}

impl ClusterParams {
    /// Mean initial cluster count `λ_B / λ_D`.
    pub fn mean_cluster_count(&self) -> f64 {
        self.birth_rate / self.death_rate
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("birth_rate", self.birth_rate),
            ("death_rate", self.death_rate),
            ("correlation_distance_m", self.correlation_distance_m),
            ("power_decay_s", self.power_decay_s),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("survival_exponent_rate", self.survival_exponent_rate),
            ("mean_virtual_delay_s", self.mean_virtual_delay_s),
            ("center_distance_mean_m", self.center_distance_mean_m),
            ("center_distance_floor_m", self.center_distance_floor_m),
            ("center_elevation_max", self.center_elevation_max),
            ("speed_first_mps", self.speed_first_mps),
            ("speed_last_mps", self.speed_last_mps),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.scatter_sigma_m.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::domain("scatter sigma must be >= 0"));
        }
        if self.rays_per_cluster == 0 {
            return Err(Error::domain("rays_per_cluster must be >= 1"));
        }
        if self.center_elevation_max > PI / 2.0 {
            return Err(Error::domain("center elevation bound exceeds π/2"));
        }
        Ok(())
    }
}

/// A first-bounce / last-bounce cluster pair with its paired scatterers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPair {
    pub id: u32,
    pub first_center: Vec3,
    pub last_center: Vec3,
    pub first_angles: RotationAngles,
    pub last_angles: RotationAngles,
    pub scatter_sigma_m: [f64; 3],
    /// Ray `m` bounces off `first_scatterers[m]` then `last_scatterers[m]`.
    pub first_scatterers: Vec<Vec3>,
    pub last_scatterers: Vec<Vec3>,
    pub virtual_delay_s: f64,
    pub first_velocity: Vec3,
    pub last_velocity: Vec3,
}

impl ClusterPair {
    pub fn ray_count(&self) -> usize {
        self.first_scatterers.len()
    }
}

fn draw_center<R: Rng + ?Sized>(
    params: &ClusterParams,
    reference: &Vec3,
    rng: &mut R,
) -> (Vec3, RotationAngles) {
    let az = rng.gen_range(-PI..PI);
    let el = if params.center_elevation_max > 0.0 {
        rng.gen_range(-params.center_elevation_max..=params.center_elevation_max)
    } else {
        0.0
    };
    let extra = if params.center_distance_mean_m > 0.0 {
        Exp::new(1.0 / params.center_distance_mean_m)
            .expect("positive rate")
            .sample(rng)
    } else {
        0.0
    };
    let d = params.center_distance_floor_m + extra;
    let angles = RotationAngles {
        bearing: az,
        downtilt: -el,
        slant: 0.0,
    };
    (reference + d * direction(az, el), angles)
}

/// Draws one point of the Gaussian scatterer density in the cluster LCS.
pub fn sample_scatterer_lcs<R: Rng + ?Sized>(sigma: &[f64; 3], rng: &mut R) -> Vec3 {
    let z: [f64; 3] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    Vec3::new(sigma[0] * z[0], sigma[1] * z[1], sigma[2] * z[2])
}

/// Draws cluster `id`. The first-bounce centre is placed around `tx_ref`,
/// the last-bounce centre around `rx_ref`.
pub fn generate_cluster_pair<R: Rng + ?Sized>(
    id: u32,
    params: &ClusterParams,
    tx_ref: &Vec3,
    rx_ref: &Vec3,
    rng: &mut R,
) -> Result<ClusterPair> {
    if params.scatter_sigma_m.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::domain("scatter sigma must be >= 0"));
    }
    let (first_center, first_angles) = draw_center(params, tx_ref, rng);
    let (last_center, last_angles) = draw_center(params, rx_ref, rng);
    let n = params.rays_per_cluster;
    let mut first = Vec::with_capacity(n);
    let mut last = Vec::with_capacity(n);
    for _ in 0..n {
        let a = sample_scatterer_lcs(&params.scatter_sigma_m, rng);
        let z = sample_scatterer_lcs(&params.scatter_sigma_m, rng);
        first.push(lcs_to_gcs(&a, &first_angles, &first_center));
        last.push(lcs_to_gcs(&z, &last_angles, &last_center));
    }
    let virtual_delay_s = if params.mean_virtual_delay_s > 0.0 {
        Exp::new(1.0 / params.mean_virtual_delay_s)
            .expect("positive rate")
            .sample(rng)
    } else {
        0.0
    };
    let first_velocity = velocity_2d(params.speed_first_mps, rng.gen_range(-PI..PI));
    let last_velocity = velocity_2d(params.speed_last_mps, rng.gen_range(-PI..PI));
    Ok(ClusterPair {
        id,
        first_center,
        last_center,
        first_angles,
        last_angles,
        scatter_sigma_m: params.scatter_sigma_m,
        first_scatterers: first,
        last_scatterers: last,
        virtual_delay_s,
        first_velocity,
        last_velocity,
    })
}

/// Draws clusters with ids `0..count` from one stream.
pub fn generate_cluster_pairs<R: Rng + ?Sized>(
    count: u32,
    params: &ClusterParams,
    tx_ref: &Vec3,
    rx_ref: &Vec3,
    rng: &mut R,
) -> Result<Vec<ClusterPair>> {
    (0..count)
        .map(|id| generate_cluster_pair(id, params, tx_ref, rx_ref, rng))
        .collect()
}

/// Translates every cluster by its velocity over `dt`.
pub fn advance_clusters(clusters: &[ClusterPair], dt: f64) -> Vec<ClusterPair> {
    clusters
        .iter()
        .map(|c| {
            let da = c.first_velocity * dt;
            let dz = c.last_velocity * dt;
            ClusterPair {
                first_center: c.first_center + da,
                last_center: c.last_center + dz,
                first_scatterers: c.first_scatterers.iter().map(|s| s + da).collect(),
                last_scatterers: c.last_scatterers.iter().map(|s| s + dz).collect(),
                ..c.clone()
            }
        })
        .collect()
}

/// Birth–death parameters of the visibility chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    pub birth_rate: f64,
    pub death_rate: f64,
    pub survival_exponent_rate: f64,
    pub correlation_distance_m: f64,
}

impl From<&ClusterParams> for EvolutionParams {
    fn from(p: &ClusterParams) -> Self {
        Self {
            birth_rate: p.birth_rate,
            death_rate: p.death_rate,
            survival_exponent_rate: p.survival_exponent_rate,
            correlation_distance_m: p.correlation_distance_m,
        }
    }
}

impl EvolutionParams {
    fn check(&self) -> Result<()> {
        if !(self.birth_rate > 0.0 && self.death_rate > 0.0 && self.correlation_distance_m > 0.0)
            || !(self.survival_exponent_rate >= 0.0)
        {
            return Err(Error::domain("birth/death rates and D_C must be positive"));
        }
        Ok(())
    }

    /// Probability that a cluster stays visible over one step of length
    /// `spacing` along an axis of elevation `elevation`.
    pub fn survival_probability(&self, spacing: f64, elevation: f64) -> f64 {
        (-self.survival_exponent_rate * spacing * elevation.cos().abs() / self.correlation_distance_m)
            .exp()
    }

    pub fn mean_count(&self) -> f64 {
        self.birth_rate / self.death_rate
    }
}

/// Visible cluster ids for every element of one array.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityTensor {
    nx: usize,
    ny: usize,
    /// Sorted ids per element, flat-index order.
    sets: Vec<Vec<u32>>,
    ids: Range<u32>,
}

impl VisibilityTensor {
    /// `(M_x, M_y)`; linear arrays report `(M, 1)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn element_count(&self) -> usize {
        self.sets.len()
    }

    /// Range of cluster ids that appear anywhere in this tensor's chain.
    pub fn id_range(&self) -> Range<u32> {
        self.ids.clone()
    }

    /// Sorted ids visible at element `e` (0-based flat index).
    pub fn visible_ids(&self, e: usize) -> &[u32] {
        &self.sets[e]
    }

    pub fn is_visible(&self, e: usize, id: u32) -> bool {
        self.sets[e].binary_search(&id).is_ok()
    }

    pub fn mean_visible_count(&self) -> f64 {
        self.sets.iter().map(Vec::len).sum::<usize>() as f64 / self.sets.len() as f64
    }

    /// Visibility indicator of one cluster over all elements.
    pub fn indicator(&self, id: u32) -> Vec<bool> {
        (0..self.sets.len()).map(|e| self.is_visible(e, id)).collect()
    }

    /// CSV with columns `x,y,cluster_id,visible` for the requested ids.
    pub fn write_csv<W: Write>(&self, w: W, ids: &[u32]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "y", "cluster_id", "visible"])?;
        for x in 0..self.nx {
            for y in 0..self.ny {
                let e = x * self.ny + y;
                for &id in ids {
                    out.write_record([
                        (x + 1).to_string(),
                        (y + 1).to_string(),
                        id.to_string(),
                        u8::from(self.is_visible(e, id)).to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

struct Chain<'a, R: Rng + ?Sized> {
    params: EvolutionParams,
    next_id: u32,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Chain<'_, R> {
    fn step(&mut self, prev: &[u32], survival: f64) -> Vec<u32> {
        let mut next: Vec<u32> = prev
            .iter()
            .copied()
            .filter(|_| self.rng.gen::<f64>() < survival)
            .collect();
        let mean_births = self.params.mean_count() * (1.0 - survival);
        let births = if mean_births > 0.0 {
            Poisson::new(mean_births).expect("positive mean").sample(self.rng) as u32
        } else {
            0
        };
        next.extend(self.next_id..self.next_id + births);
        self.next_id += births;
        next
    }

    fn run(&mut self, layout: &TerminalLayout, initial: Vec<u32>) -> VisibilityTensor {
        let start = self.next_id.min(initial.first().copied().unwrap_or(self.next_id));
        let (nx, ny, px, py) = match layout.shape() {
            ArrayShape::Linear(a) => {
                let p = self.params.survival_probability(a.spacing_m, a.elevation);
                (a.elements, 1, p, 1.0)
            }
            ArrayShape::Planar(p) => (
                p.mx,
                p.my,
                self.params.survival_probability(p.spacing_x_m, p.elevation_x),
                self.params.survival_probability(p.spacing_y_m, p.elevation_y),
            ),
        };
        // evolve the first column along X, then every row along Y from it
        let mut column = Vec::with_capacity(nx);
        column.push(initial);
        for x in 1..nx {
            let s = self.step(&column[x - 1], px);
            column.push(s);
        }
        let mut sets = vec![Vec::new(); nx * ny];
        for (x, head) in column.into_iter().enumerate() {
            let mut cur = head;
            for y in 0..ny {
                if y > 0 {
                    cur = self.step(&cur, py);
                }
                sets[x * ny + y] = cur.clone();
            }
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        VisibilityTensor {
            nx,
            ny,
            sets,
            ids: start..self.next_id,
        }
    }
}

fn initial_ids<R: Rng + ?Sized>(params: &EvolutionParams, rng: &mut R) -> Vec<u32> {
    let n = Poisson::new(params.mean_count()).expect("positive mean").sample(rng) as u32;
    (0..n).collect()
}

/// Birth–death evolution over one array with a fresh initial set.
pub fn evolve_visibility<R: Rng + ?Sized>(
    layout: &TerminalLayout,
    params: &EvolutionParams,
    rng: &mut R,
) -> Result<VisibilityTensor> {
    params.check()?;
    let init = initial_ids(params, rng);
    let mut chain = Chain {
        params: *params,
        next_id: init.len() as u32,
        rng,
    };
    Ok(chain.run(layout, init))
}

/// Visibility of one sub-channel: both array ends start from the same
/// initial clusters and evolve independently. A cluster born on one end is
/// visible from every element of the other end.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkVisibility {
    pub tx: VisibilityTensor,
    pub rx: VisibilityTensor,
    initial: u32,
    tx_born: Range<u32>,
    rx_born: Range<u32>,
}

impl LinkVisibility {
    pub fn evolve<R: Rng + ?Sized>(
        tx_layout: &TerminalLayout,
        rx_layout: &TerminalLayout,
        params: &EvolutionParams,
        rng: &mut R,
    ) -> Result<Self> {
        params.check()?;
        let init = initial_ids(params, rng);
        let initial = init.len() as u32;
        let mut chain = Chain {
            params: *params,
            next_id: initial,
            rng,
        };
        let tx = chain.run(tx_layout, init.clone());
        let tx_born = initial..chain.next_id;
        let rx = chain.run(rx_layout, init);
        let rx_born = tx_born.end..chain.next_id;
        Ok(Self {
            tx,
            rx,
            initial,
            tx_born,
            rx_born,
        })
    }

    pub fn initial_count(&self) -> u32 {
        self.initial
    }

    /// Total number of distinct cluster ids (`0..total`).
    pub fn total(&self) -> u32 {
        self.rx_born.end
    }

    /// Ids born along the tx array; visible from every rx element.
    pub fn tx_born(&self) -> Range<u32> {
        self.tx_born.clone()
    }

    /// Ids born along the rx array; visible from every tx element.
    pub fn rx_born(&self) -> Range<u32> {
        self.rx_born.clone()
    }

    /// Sorted cluster ids seen by tx element `i` and rx element `j`.
    pub fn pair_ids(&self, i: usize, j: usize) -> Vec<u32> {
        let tx = self.tx.visible_ids(i);
        let rx = self.rx.visible_ids(j);
        let mut out = Vec::with_capacity(tx.len().max(rx.len()));
        for &id in tx {
            if id >= self.initial || rx.binary_search(&id).is_ok() {
                out.push(id);
            }
        }
        out.extend(rx.iter().copied().filter(|id| self.rx_born.contains(id)));
        out
    }
}

/// Lag-1 autocorrelation of a 0/1 indicator laid out row-major on
/// `nx × ny`, pooled over neighbours along both axes.
pub fn lag1_autocorrelation(indicator: &[bool], nx: usize, ny: usize) -> f64 {
    let v: Vec<f64> = indicator.iter().map(|&b| f64::from(u8::from(b))).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    if var == 0.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut n = 0usize;
    for x in 0..nx {
        for y in 0..ny {
            let e = x * ny + y;
            if x + 1 < nx {
                acc += (v[e] - mean) * (v[e + ny] - mean);
                n += 1;
            }
            if y + 1 < ny {
                acc += (v[e] - mean) * (v[e + 1] - mean);
                n += 1;
            }
        }
    }
    acc / n as f64 / var
}
