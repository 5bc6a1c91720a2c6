//! Correlation functions, delay spread and Doppler spread.
//!
//! Expectations run over independent cluster/scatterer realisations with the
//! geometry fixed. The analytical curves keep only the per-ray diagonal terms
//! of each realisation and are averaged over the same realisations as the
//! simulated curves. Every curve is normalised by `√(R(t,0) R(t+Δt,0))`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{map_trials, run_trials, Merge};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::irs::{PhasePlan, PhaseResolution};
use crate::scenario::{Link, LinkRealization, Scenario};
use crate::smallscale::{rician_weights, PairTracks, RayTap, RayTrack};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Sim,
    Analytical,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Sim => "sim",
            CurveKind::Analytical => "analytical",
        })
    }
}

/// A correlation function sampled on a lag (or spacing) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub t: f64,
    pub f: f64,
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub kind: CurveKind,
    /// Monte-Carlo trials behind the curve.
    pub trials: u64,
    /// Free-form tag such as `continuous` or `k=5dB`.
    pub variant: String,
}

impl CorrelationCurve {
    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `max |(|a| − |b|)|` over the common grid.
    pub fn linf_gap(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max)
    }

    /// Mean magnitude over grid points with `lo <= x <= hi`.
    pub fn mean_magnitude(&self, lo: f64, hi: f64) -> f64 {
        let sel: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(_, v)| v.norm())
            .collect();
        sel.iter().sum::<f64>() / sel.len().max(1) as f64
    }
}

fn normalize(cross: &[Complex64], power0: f64, power: &[f64]) -> Vec<Complex64> {
    cross
        .iter()
        .zip(power)
        .map(|(c, p)| {
            let n = (power0 * p).sqrt();
            if n > 0.0 {
                c / n
            } else {
                ZERO
            }
        })
        .collect()
}

/// Components of one element pair at the instants `times`
/// (`times[0]` is the anchor).
#[derive(Debug, Clone)]
struct PairSeries {
    los: Vec<Complex64>,
    nlos: Vec<Complex64>,
    /// `Σ_a x_a(times[0]) x_a*(times[j])`.
    diag: Vec<Complex64>,
    /// `Σ_a |x_a(times[j])|²`.
    diag_power: Vec<f64>,
}

fn pair_series(tracks: &PairTracks, times: &[f64], w: f64, keep: Option<&mut Vec<Vec<Complex64>>>) -> PairSeries {
    let mut anchor = Vec::new();
    let mut cur = Vec::new();
    let mut out = PairSeries {
        los: Vec::with_capacity(times.len()),
        nlos: Vec::with_capacity(times.len()),
        diag: Vec::with_capacity(times.len()),
        diag_power: Vec::with_capacity(times.len()),
    };
    let mut kept = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        out.los.push(tracks.los_phasor(t, w));
        let buf = if j == 0 { &mut anchor } else { &mut cur };
        tracks.nlos_phasors(t, w, buf);
        let x = if j == 0 { &anchor } else { &cur };
        out.nlos.push(x.iter().sum());
        out.diag.push(anchor.iter().zip(x).map(|(a, b)| a * b.conj()).sum());
        out.diag_power.push(x.iter().map(|z| z.norm_sqr()).sum());
        if keep.is_some() {
            kept.push(x.clone());
        }
    }
    if let Some(k) = keep {
        *k = kept;
    }
    out
}

/// Trial sums for one sub-channel element pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMoments {
    ll: Vec<Complex64>,
    ln: Vec<Complex64>,
    nl: Vec<Complex64>,
    nn: Vec<Complex64>,
    /// `L(t_j) N*(t_j)`.
    cross_power: Vec<Complex64>,
    nlos_power: Vec<f64>,
    diag: Vec<Complex64>,
    diag_power: Vec<f64>,
    trials: u64,
}

impl LinkMoments {
    fn from_series(s: &PairSeries) -> Self {
        let (l0, n0) = (s.los[0], s.nlos[0]);
        Self {
            ll: s.los.iter().map(|l| l0 * l.conj()).collect(),
            ln: s.nlos.iter().map(|n| l0 * n.conj()).collect(),
            nl: s.los.iter().map(|l| n0 * l.conj()).collect(),
            nn: s.nlos.iter().map(|n| n0 * n.conj()).collect(),
            cross_power: s.los.iter().zip(&s.nlos).map(|(l, n)| l * n.conj()).collect(),
            nlos_power: s.nlos.iter().map(|n| n.norm_sqr()).collect(),
            diag: s.diag.clone(),
            diag_power: s.diag_power.clone(),
            trials: 1,
        }
    }

    /// Normalised simulated and analytical correlation at every instant,
    /// index 0 being the anchor itself.
    pub fn curves(&self, k: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let (wl, wn) = rician_weights(k)?;
        let (a2, b2, ab) = (wl * wl, wn * wn, wl * wn);
        let n = self.trials as f64;
        let sim: Vec<Complex64> = (0..self.ll.len())
            .map(|j| (self.ll[j] * a2 + (self.ln[j] + self.nl[j]) * ab + self.nn[j] * b2) / n)
            .collect();
        let sim_pow: Vec<f64> = (0..self.ll.len())
            .map(|j| (a2 * n + b2 * self.nlos_power[j] + 2.0 * ab * self.cross_power[j].re) / n)
            .collect();
        let ana: Vec<Complex64> = (0..self.ll.len())
            .map(|j| (self.ll[j] * a2 + self.diag[j] * b2) / n)
            .collect();
        let ana_pow: Vec<f64> = (0..self.ll.len())
            .map(|j| (a2 * n + b2 * self.diag_power[j]) / n)
            .collect();
        Ok((normalize(&sim, sim_pow[0], &sim_pow), normalize(&ana, ana_pow[0], &ana_pow)))
    }
}

impl Merge for LinkMoments {
    fn merge(self, o: Self) -> Self {
        Self {
            ll: self.ll.merge(o.ll),
            ln: self.ln.merge(o.ln),
            nl: self.nl.merge(o.nl),
            nn: self.nn.merge(o.nn),
            cross_power: self.cross_power.merge(o.cross_power),
            nlos_power: self.nlos_power.merge(o.nlos_power),
            diag: self.diag.merge(o.diag),
            diag_power: self.diag_power.merge(o.diag_power),
            trials: self.trials + o.trials,
        }
    }
}

/// Anchor plus lagged instants.
pub fn lag_times(t: f64, lags: &[f64]) -> Vec<f64> {
    std::iter::once(t).chain(lags.iter().map(|l| t + l)).collect()
}

/// Shared inputs of the ensemble estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfRequest {
    pub t: f64,
    /// Frequency offset from the carrier, Hz.
    pub f: f64,
    pub lags: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl AcfRequest {
    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("at least one trial is required"));
        }
        if self.lags.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::domain("lags must be finite and >= 0"));
        }
        Ok(())
    }
}

fn curve(req: &AcfRequest, values: Vec<Complex64>, kind: CurveKind, trials: u64, variant: &str) -> CorrelationCurve {
    CorrelationCurve {
        t: req.t,
        f: req.f,
        grid: req.lags.clone(),
        // drop the anchor itself
        values: values[1..].to_vec(),
        kind,
        trials,
        variant: variant.to_owned(),
    }
}

/// Analytical ACF of one element pair of one fixed realisation.
pub fn acf_analytical_subchannel(
    scenario: &Scenario,
    lr: &LinkRealization,
    i: usize,
    j: usize,
    t: f64,
    f: f64,
    lags: &[f64],
) -> Result<CorrelationCurve> {
    let tracks = scenario.pair_tracks(lr, i, j);
    let times = lag_times(t, lags);
    let m = LinkMoments::from_series(&pair_series(&tracks, &times, scenario.angular_frequency(f), None));
    let (_, ana) = m.curves(scenario.rician_k())?;
    let req = AcfRequest {
        t,
        f,
        lags: lags.to_vec(),
        trials: 1,
        seed: 0,
    };
    Ok(curve(&req, ana, CurveKind::Analytical, 1, "realisation"))
}

/// Trial-summed moments of one sub-channel element pair.
pub fn link_moments(scenario: &Scenario, link: Link, i: usize, j: usize, req: &AcfRequest) -> Result<LinkMoments> {
    req.check()?;
    let times = lag_times(req.t, &req.lags);
    let w = scenario.angular_frequency(req.f);
    run_trials(req.trials, |k| {
        let lr = scenario.realize_link(req.seed, k, link)?;
        let tracks = scenario.pair_tracks(&lr, i, j);
        Ok(LinkMoments::from_series(&pair_series(&tracks, &times, w, None)))
    })?
    .ok_or_else(|| Error::domain("no trials"))
}

/// Simulated and analytical ACF of one sub-channel element pair.
pub fn acf_subchannel(
    scenario: &Scenario,
    link: Link,
    i: usize,
    j: usize,
    req: &AcfRequest,
) -> Result<(CorrelationCurve, CorrelationCurve)> {
    let m = link_moments(scenario, link, i, j, req)?;
    let (sim, ana) = m.curves(scenario.rician_k())?;
    let tag = link.label();
    Ok((
        curve(req, sim, CurveKind::Sim, req.trials, tag),
        curve(req, ana, CurveKind::Analytical, req.trials, tag),
    ))
}

/// Result of the single-IRS-element cascade ACF.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleElementAcf {
    pub bi: (CorrelationCurve, CorrelationCurve),
    pub iu: (CorrelationCurve, CorrelationCurve),
    /// Cascade `(sim, analytical)` per phase resolution, in request order.
    pub cascade: Vec<(PhaseResolution, CorrelationCurve, CorrelationCurve)>,
}

/// Unit phase factor `Γ_r(t) Γ_r*(t+Δt)` at every instant.
fn irs_phase_factors(scenario: &Scenario, r: usize, times: &[f64], res: PhaseResolution) -> Result<Vec<Complex64>> {
    let g: Vec<Complex64> = times
        .iter()
        .map(|&t| {
            let plan = PhasePlan::new(1, 1, vec![crate::irs::element_phase_at(scenario, t, r)?], res, t)?;
            Ok(plan.reflection()[0])
        })
        .collect::<Result<_>>()?;
    Ok(g.iter().map(|x| g[0] * x.conj()).collect())
}

/// Single-element cascade ACF: the two sub-channel ACFs multiplied with the
/// IRS phase factor of element `r`.
pub fn acf_single_irs_element(
    scenario: &Scenario,
    (q, r, p): (usize, usize, usize),
    req: &AcfRequest,
    resolutions: &[PhaseResolution],
) -> Result<SingleElementAcf> {
    let bi = acf_subchannel(scenario, Link::Bi, q, r, req)?;
    let iu = acf_subchannel(scenario, Link::Iu, r, p, req)?;
    let times = lag_times(req.t, &req.lags);
    let mut cascade = Vec::new();
    for &res in resolutions {
        let ph = irs_phase_factors(scenario, r, &times, res)?;
        let combine = |a: &CorrelationCurve, b: &CorrelationCurve, kind| CorrelationCurve {
            values: a
                .values
                .iter()
                .zip(&b.values)
                .zip(&ph[1..])
                .map(|((x, y), z)| x * y * z)
                .collect(),
            kind,
            variant: res.label(),
            ..a.clone()
        };
        cascade.push((res, combine(&bi.0, &iu.0, CurveKind::Sim), combine(&bi.1, &iu.1, CurveKind::Analytical)));
    }
    Ok(SingleElementAcf { bi, iu, cascade })
}

/// One phase-plan / Rician-factor combination of the full-IRS estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullIrsVariant {
    pub resolution: PhaseResolution,
    pub k: f64,
}

/// Per-trial contribution to the full-IRS ACF, one entry per variant.
#[derive(Debug, Clone, PartialEq)]
pub struct FullIrsSample {
    sim_cross: Vec<Vec<Complex64>>,
    sim_power: Vec<Vec<f64>>,
    ana_cross: Vec<Vec<Complex64>>,
    ana_power: Vec<Vec<f64>>,
    trials: u64,
}

impl Merge for FullIrsSample {
    fn merge(self, o: Self) -> Self {
        Self {
            sim_cross: self.sim_cross.merge(o.sim_cross),
            sim_power: self.sim_power.merge(o.sim_power),
            ana_cross: self.ana_cross.merge(o.ana_cross),
            ana_power: self.ana_power.merge(o.ana_power),
            trials: self.trials + o.trials,
        }
    }
}

impl FullIrsSample {
    /// Normalised `(sim, analytical)` values for variant `v`, anchor first.
    pub fn curves(&self, v: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let sim = normalize(&self.sim_cross[v], self.sim_power[v][0], &self.sim_power[v]);
        let ana = if self.ana_cross.is_empty() {
            Vec::new()
        } else {
            normalize(&self.ana_cross[v], self.ana_power[v][0], &self.ana_power[v])
        };
        (sim, ana)
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }
}

/// Per-element components of one link for the full-IRS estimator.
struct ArraySeries {
    /// `[r][j]`.
    los: Vec<Vec<Complex64>>,
    nlos: Vec<Vec<Complex64>>,
    /// `[j]` → ray phasors of every element keyed by ray, `[r][ray]`.
    rays: Option<Vec<RayMatrix>>,
}

/// Ray phasors of all IRS elements at one instant on a shared ray index.
struct RayMatrix {
    rows: Vec<Vec<Complex64>>,
}

impl RayMatrix {
    /// `G(r1, r2) = Σ_a self[r1][a] · other[r2][a]*`.
    fn gram(&self, other: &RayMatrix) -> Vec<Vec<Complex64>> {
        self.rows
            .iter()
            .map(|a| {
                other
                    .rows
                    .iter()
                    .map(|b| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum())
                    .collect()
            })
            .collect()
    }
}

fn array_series(
    scenario: &Scenario,
    lr: &LinkRealization,
    pairs: &[(usize, usize)],
    times: &[f64],
    w: f64,
    analytical: bool,
) -> ArraySeries {
    let tracks: Vec<PairTracks> = pairs.iter().map(|&(i, j)| scenario.pair_tracks(lr, i, j)).collect();
    let mut los = Vec::with_capacity(pairs.len());
    let mut nlos = Vec::with_capacity(pairs.len());
    // shared ray index: (cluster, ray) over every id in the link
    let per_cluster = scenario.clusters().rays_per_cluster;
    let width = lr.clusters.len() * per_cluster;
    let mut rays: Option<Vec<RayMatrix>> = analytical.then(|| {
        times
            .iter()
            .map(|_| RayMatrix {
                rows: vec![vec![ZERO; width]; pairs.len()],
            })
            .collect()
    });
    let mut buf = Vec::new();
    for (e, tr) in tracks.iter().enumerate() {
        let mut l = Vec::with_capacity(times.len());
        let mut n = Vec::with_capacity(times.len());
        for (j, &t) in times.iter().enumerate() {
            l.push(tr.los_phasor(t, w));
            tr.nlos_phasors(t, w, &mut buf);
            n.push(buf.iter().sum());
            if let Some(m) = rays.as_mut() {
                let row = &mut m[j].rows[e];
                for (x, ray) in buf.iter().zip(&tr.rays) {
                    row[ray.cluster_id as usize * per_cluster + ray.ray_id as usize] = *x;
                }
            }
        }
        los.push(l);
        nlos.push(n);
    }
    ArraySeries { los, nlos, rays }
}

/// Trial contribution of the full-IRS cascade for BS element `q` and USER
/// element `p`, summing over every IRS element.
pub fn full_irs_sample(
    scenario: &Scenario,
    (q, p): (usize, usize),
    req: &AcfRequest,
    variants: &[FullIrsVariant],
    plans: &[Vec<Vec<Complex64>>],
    trial: u64,
    analytical: bool,
) -> Result<FullIrsSample> {
    let m = scenario.irs().element_count();
    let times = lag_times(req.t, &req.lags);
    let w = scenario.angular_frequency(req.f);
    let bi_lr = scenario.realize_link(req.seed, trial, Link::Bi)?;
    let iu_lr = scenario.realize_link(req.seed, trial, Link::Iu)?;
    let bi_pairs: Vec<_> = (0..m).map(|r| (q, r)).collect();
    let iu_pairs: Vec<_> = (0..m).map(|r| (r, p)).collect();
    let bi = array_series(scenario, &bi_lr, &bi_pairs, &times, w, analytical);
    let iu = array_series(scenario, &iu_lr, &iu_pairs, &times, w, analytical);
    let nt = times.len();

    // NLoS Gram matrices against the anchor and at equal times
    let grams = |s: &ArraySeries| -> Option<(Vec<Vec<Vec<Complex64>>>, Vec<Vec<Vec<Complex64>>>)> {
        s.rays.as_ref().map(|rm| {
            let lagged = rm.iter().map(|x| rm[0].gram(x)).collect();
            let same = rm.iter().map(|x| x.gram(x)).collect();
            (lagged, same)
        })
    };
    let g_bi = grams(&bi);
    let g_iu = grams(&iu);

    let mut out = FullIrsSample {
        sim_cross: Vec::with_capacity(variants.len()),
        sim_power: Vec::with_capacity(variants.len()),
        ana_cross: Vec::new(),
        ana_power: Vec::new(),
        trials: 1,
    };
    for (v, var) in variants.iter().enumerate() {
        let g = &plans[v];
        let (wl, wn) = rician_weights(var.k)?;
        let h: Vec<Complex64> = (0..nt)
            .map(|j| {
                (0..m)
                    .map(|r| {
                        (bi.los[r][j] * wl + bi.nlos[r][j] * wn) * (iu.los[r][j] * wl + iu.nlos[r][j] * wn) * g[j][r]
                    })
                    .sum()
            })
            .collect();
        out.sim_cross.push(h.iter().map(|x| h[0] * x.conj()).collect());
        out.sim_power.push(h.iter().map(|x| x.norm_sqr()).collect());
        if let (Some((bl, bs)), Some((il, is))) = (&g_bi, &g_iu) {
            let (a2, b2) = (wl * wl, wn * wn);
            // R(r1, r2) = a² L_r1(j1) L_r2*(j2) + b² G(r1, r2), per link
            let value = |j1: usize, j2: usize, gb: &Vec<Vec<Complex64>>, gi: &Vec<Vec<Complex64>>| -> Complex64 {
                let mut acc = ZERO;
                for r1 in 0..m {
                    let u1 = g[j1][r1];
                    for r2 in 0..m {
                        let rb = bi.los[r1][j1] * bi.los[r2][j2].conj() * a2 + gb[r1][r2] * b2;
                        let ri = iu.los[r1][j1] * iu.los[r2][j2].conj() * a2 + gi[r1][r2] * b2;
                        acc += rb * ri * u1 * g[j2][r2].conj();
                    }
                }
                acc
            };
            out.ana_cross.push((0..nt).map(|j| value(0, j, &bl[j], &il[j])).collect());
            out.ana_power.push((0..nt).map(|j| value(j, j, &bs[j], &is[j]).re).collect());
        }
    }
    Ok(out)
}

/// Reflection factors `[variant][instant][r]` for every variant.
pub fn variant_plans(scenario: &Scenario, times: &[f64], variants: &[FullIrsVariant]) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let mut cache: Vec<(PhaseResolution, Vec<Vec<Complex64>>)> = Vec::new();
    let mut out = Vec::with_capacity(variants.len());
    for v in variants {
        if let Some((_, p)) = cache.iter().find(|(r, _)| *r == v.resolution) {
            out.push(p.clone());
            continue;
        }
        let p: Vec<Vec<Complex64>> = times
            .iter()
            .map(|&t| Ok(PhasePlan::at(scenario, t, v.resolution)?.reflection()))
            .collect::<Result<_>>()?;
        cache.push((v.resolution, p.clone()));
        out.push(p);
    }
    Ok(out)
}

/// Per-trial samples of the full-IRS estimator, in trial order.
pub fn full_irs_samples(
    scenario: &Scenario,
    qp: (usize, usize),
    req: &AcfRequest,
    variants: &[FullIrsVariant],
    analytical: bool,
) -> Result<Vec<FullIrsSample>> {
    req.check()?;
    let plans = variant_plans(scenario, &lag_times(req.t, &req.lags), variants)?;
    map_trials(req.trials, |k| full_irs_sample(scenario, qp, req, variants, &plans, k, analytical))
}

/// Full-IRS cascade ACF for every variant: `(sim, analytical)` where the
/// analytical curve is present only when requested.
pub fn acf_full_irs(
    scenario: &Scenario,
    qp: (usize, usize),
    req: &AcfRequest,
    variants: &[FullIrsVariant],
    analytical: bool,
) -> Result<Vec<(CorrelationCurve, Option<CorrelationCurve>)>> {
    req.check()?;
    let plans = variant_plans(scenario, &lag_times(req.t, &req.lags), variants)?;
    let total = run_trials(req.trials, |k| full_irs_sample(scenario, qp, req, variants, &plans, k, analytical))?
        .ok_or_else(|| Error::domain("no trials"))?;
    Ok(full_irs_curves(req, variants, &total))
}

/// Turns summed samples into curves.
pub fn full_irs_curves(
    req: &AcfRequest,
    variants: &[FullIrsVariant],
    total: &FullIrsSample,
) -> Vec<(CorrelationCurve, Option<CorrelationCurve>)> {
    variants
        .iter()
        .enumerate()
        .map(|(v, var)| {
            let tag = format!("{} k={}", var.resolution.label(), var.k);
            let (sim, ana) = total.curves(v);
            let ana = (!ana.is_empty()).then(|| curve(req, ana, CurveKind::Analytical, total.trials, &tag));
            (curve(req, sim, CurveKind::Sim, total.trials, &tag), ana)
        })
        .collect()
}

/// Which end of a sub-channel the CCF sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum ArraySide {
    Tx,
    Rx,
}

/// Spatial CCF between element 1 at `t` and element `e` at `t + Δt` along
/// one end of `link`; the grid is the element separation in metres.
pub fn ccf_spatial(
    scenario: &Scenario,
    link: Link,
    side: ArraySide,
    elements: &[usize],
    t: f64,
    f: f64,
    dt: f64,
    trials: u64,
    seed: u64,
) -> Result<(CorrelationCurve, CorrelationCurve)> {
    if trials == 0 || elements.is_empty() {
        return Err(Error::domain("CCF needs trials and elements"));
    }
    let (n_tx, n_rx) = scenario.link_dims(link);
    let limit = match side {
        ArraySide::Tx => n_tx,
        ArraySide::Rx => n_rx,
    };
    if let Some(e) = elements.iter().find(|&&e| e >= limit) {
        return Err(Error::domain(format!("element {} outside the array ({limit})", e + 1)));
    }
    let pair = |e: usize| match side {
        ArraySide::Tx => (e, 0),
        ArraySide::Rx => (0, e),
    };
    let position = |e: usize| -> Vec3 {
        let (i, j) = pair(e);
        match side {
            ArraySide::Tx => scenario.tx_state(link, i).0,
            ArraySide::Rx => scenario.rx_state(link, j).0,
        }
    };
    let base = position(0);
    let grid: Vec<f64> = elements.iter().map(|&e| (position(e) - base).norm()).collect();
    let (wl, wn) = rician_weights(scenario.rician_k())?;
    let (a2, b2) = (wl * wl, wn * wn);
    let w = scenario.angular_frequency(f);
    let ne = elements.len();
    // layout: [sim cross | ana cross] complex, [sim pow0, sim pow e.., ana pow e.., ana pow0] real
    let total = run_trials(trials, |k| {
        let lr = scenario.realize_link(seed, k, link)?;
        let (i0, j0) = pair(0);
        let anchor = scenario.pair_tracks(&lr, i0, j0);
        let mut x0 = Vec::new();
        anchor.nlos_phasors(t, w, &mut x0);
        let h0 = anchor.los_phasor(t, w) * wl + x0.iter().sum::<Complex64>() * wn;
        let l0 = anchor.los_phasor(t, w);
        let mut cplx = vec![ZERO; 2 * ne];
        let mut real = vec![0.0; 2 + 2 * ne];
        real[0] = h0.norm_sqr();
        real[1 + 2 * ne] = a2 + b2 * x0.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut xe = Vec::new();
        for (n, &e) in elements.iter().enumerate() {
            let (i, j) = pair(e);
            let tr = scenario.pair_tracks(&lr, i, j);
            tr.nlos_phasors(t + dt, w, &mut xe);
            let le = tr.los_phasor(t + dt, w);
            let he = le * wl + xe.iter().sum::<Complex64>() * wn;
            cplx[n] = h0 * he.conj();
            real[1 + n] = he.norm_sqr();
            let diag = shared_ray_sum(&anchor.rays, &x0, &tr.rays, &xe);
            cplx[ne + n] = l0 * le.conj() * a2 + diag * b2;
            real[1 + ne + n] = a2 + b2 * xe.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        Ok((cplx, real))
    })?
    .ok_or_else(|| Error::domain("no trials"))?;
    let (cplx, real) = total;
    let n = trials as f64;
    let ana_p0 = real[1 + 2 * ne] / n;
    let sim = normalize(&cplx[..ne], real[0] / n, &real[1..1 + ne].iter().map(|p| p / n).collect::<Vec<_>>())
        .into_iter()
        .map(|z| z / n)
        .collect::<Vec<_>>();
    let ana = normalize(
        &cplx[ne..],
        ana_p0,
        &real[1 + ne..1 + 2 * ne].iter().map(|p| p / n).collect::<Vec<_>>(),
    )
    .into_iter()
    .map(|z| z / n)
    .collect::<Vec<_>>();
    let mk = |values, kind| CorrelationCurve {
        t,
        f,
        grid: grid.clone(),
        values,
        kind,
        trials,
        variant: format!("{link} {:?} dt={dt}", side).to_lowercase(),
    };
    Ok((mk(sim, CurveKind::Sim), mk(ana, CurveKind::Analytical)))
}

impl<A: Merge, B: Merge> Merge for (A, B) {
    fn merge(self, o: Self) -> Self {
        (self.0.merge(o.0), self.1.merge(o.1))
    }
}

/// `Σ x_a y_a*` over rays present in both lists (both sorted by
/// cluster then ray).
fn shared_ray_sum(ra: &[RayTrack], xa: &[Complex64], rb: &[RayTrack], xb: &[Complex64]) -> Complex64 {
    let key = |r: &RayTrack| (r.cluster_id, r.ray_id);
    let (mut i, mut j) = (0, 0);
    let mut acc = ZERO;
    while i < ra.len() && j < rb.len() {
        match key(&ra[i]).cmp(&key(&rb[j])) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += xa[i] * xb[j].conj();
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// RMS delay spread of `(power, delay)` pairs; powers are normalised here.
pub fn rms_delay_spread_weighted(taps: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = taps.iter().map(|(p, _)| p).sum();
    if taps.is_empty() || !(total > 0.0) {
        return Err(Error::domain("delay spread needs at least one tap with power"));
    }
    let mean = taps.iter().map(|(p, t)| p * t).sum::<f64>() / total;
    let var = taps.iter().map(|(p, t)| p * (t - mean) * (t - mean)).sum::<f64>() / total;
    Ok(var.max(0.0).sqrt())
}

/// RMS delay spread of a tap list.
pub fn rms_delay_spread(taps: &[RayTap]) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = taps.iter().map(|t| (t.power(), t.delay_s)).collect();
    rms_delay_spread_weighted(&pairs)
}

/// Empirical CDF of delay spread for one scatterer σ-triple.
#[derive(Debug, Clone, PartialEq)]
pub struct DsCdf {
    pub sigma_m: [f64; 3],
    /// Sorted delay spreads, seconds.
    pub values: Vec<f64>,
    /// Trials without any visible ray.
    pub skipped: u64,
}

impl DsCdf {
    /// `(value, P[DS ≤ value])` steps.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.values.len() as f64;
        self.values.iter().enumerate().map(|(i, v)| (*v, (i + 1) as f64 / n)).collect()
    }

    pub fn quantile(&self, q: f64) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        let idx = ((q * self.values.len() as f64).ceil() as usize).clamp(1, self.values.len()) - 1;
        self.values[idx]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// Delay-spread CDFs of the NLoS CIR of pair `(i, j)` of `link` at `t`,
/// one per σ-triple. Trials share streams across σ values.
pub fn ds_cdf(
    scenario: &Scenario,
    link: Link,
    (i, j): (usize, usize),
    t: f64,
    trials: u64,
    seed: u64,
    sigmas: &[[f64; 3]],
) -> Result<Vec<DsCdf>> {
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    sigmas
        .iter()
        .map(|sigma| {
            let mut params = scenario.clusters().clone();
            params.scatter_sigma_m = *sigma;
            let sc = scenario.clone().with_clusters(params)?;
            let ds = map_trials(trials, |k| {
                let lr = sc.realize_link(seed, k, link)?;
                let taps = sc.pair_tracks(&lr, i, j).nlos_cir(t, sc.fc_hz());
                Ok(if taps.is_empty() { None } else { Some(rms_delay_spread(&taps)?) })
            })?;
            let skipped = ds.iter().filter(|d| d.is_none()).count() as u64;
            let mut values: Vec<f64> = ds.into_iter().flatten().collect();
            values.sort_by(f64::total_cmp);
            Ok(DsCdf {
                sigma_m: *sigma,
                values,
                skipped,
            })
        })
        .collect()
}

/// Instantaneous Doppler of one ray; shrinking paths give positive values.
pub fn doppler_frequency(ray: &RayTrack, t: f64, wavelength: f64) -> f64 {
    ray.doppler_hz(t, wavelength)
}

/// Power-weighted standard deviation of `(weight, ν)` pairs.
pub fn local_doppler_spread(rays: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = rays.iter().map(|(w, _)| w).sum();
    if rays.is_empty() || !(total > 0.0) {
        return Err(Error::domain("Doppler spread needs at least one weighted ray"));
    }
    let mean = rays.iter().map(|(w, v)| w * v).sum::<f64>() / total;
    let var = rays.iter().map(|(w, v)| w * (v - mean) * (v - mean)).sum::<f64>() / total;
    Ok(var.max(0.0).sqrt())
}

/// `(P, ν)` for every ray of a pair at `t`.
pub fn ray_dopplers(tracks: &PairTracks, t: f64, wavelength: f64) -> Vec<(f64, f64)> {
    let (powers, _) = tracks.powers_and_delays(t);
    tracks
        .rays
        .iter()
        .zip(powers)
        .map(|(r, p)| (p, r.doppler_hz(t, wavelength)))
        .collect()
}

/// Local Doppler spread of the cascade through one IRS element: every
/// (BI ray, IU ray) combination with weight `P_a P_b` and shift `ν_a + ν_b`.
pub fn cascade_doppler_spread(bi: &PairTracks, iu: &PairTracks, t: f64, wavelength: f64) -> Result<f64> {
    let a = ray_dopplers(bi, t, wavelength);
    let b = ray_dopplers(iu, t, wavelength);
    // product weights make the two shifts independent: variances add
    let sa = local_doppler_spread(&a)?;
    let sb = local_doppler_spread(&b)?;
    Ok((sa * sa + sb * sb).sqrt())
}

/// Bootstrap resamples of `0..n` drawn from `rng`.
pub fn bootstrap_indices<R: Rng + ?Sized>(n: usize, resamples: usize, rng: &mut R) -> Vec<Vec<usize>> {
    (0..resamples)
        .map(|_| (0..n).map(|_| rng.gen_range(0..n)).collect())
        .collect()
}

/// Sum of `samples` at `idx` (duplicates counted).
pub fn resample_merge<T: Merge + Clone>(samples: &[T], idx: &[usize]) -> Option<T> {
    idx.iter().map(|&i| samples[i].clone()).reduce(Merge::merge)
}

/// Empirical `(lo, hi)` quantiles of `values`.
pub fn percentile_interval(values: &[f64], level: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let a = (1.0 - level) / 2.0;
    let lo = ((a * n as f64).floor() as usize).min(n - 1);
    let hi = (((1.0 - a) * n as f64).ceil() as usize).clamp(1, n) - 1;
    (v[lo], v[hi])
}
