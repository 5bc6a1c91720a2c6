//! Experiment orchestration behind the CLI subcommands.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::info;

use crate::assembly::channel_at;
use crate::clusters::{evolve_visibility, lag1_autocorrelation, EvolutionParams};
use crate::config::{AcfMode, DopplerTarget, EvolveTerminal, ScenarioConfig};
use crate::ensemble::{map_trials, with_threads};
use crate::error::{Error, Result};
use crate::irs::{cascaded_path_loss, received_power, PhasePlan, PhaseResolution};
use crate::largescale::{path_loss_bu, power_to_db};
use crate::output::{num, stat_file_name, write_curves, OutputDir, OutputRecord};
use crate::rng::{rng_stream, StreamPath};
use crate::scenario::{Link, Scenario};
use crate::stats::{
    acf_full_irs, acf_single_irs_element, acf_subchannel, cascade_doppler_spread, ccf_spatial, ds_cdf,
    local_doppler_spread, ray_dopplers, AcfRequest, ArraySide, CorrelationCurve, FullIrsVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Acf,
    Ccf,
    Doppler,
    DsCdf,
    ClusterEvolve,
    LinkBudget,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Simulate,
        Subcommand::Acf,
        Subcommand::Ccf,
        Subcommand::Doppler,
        Subcommand::DsCdf,
        Subcommand::ClusterEvolve,
        Subcommand::LinkBudget,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Acf => "acf",
            Subcommand::Ccf => "ccf",
            Subcommand::Doppler => "doppler",
            Subcommand::DsCdf => "ds-cdf",
            Subcommand::ClusterEvolve => "cluster-evolve",
            Subcommand::LinkBudget => "link-budget",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown subcommand {s}")))
    }
}

/// Runs `sub` with `config`, writing CSVs and `manifest.json` into `out`.
/// `threads = None` uses the machine default.
pub fn run_experiment(sub: Subcommand, config: &ScenarioConfig, out: &Path, threads: Option<usize>) -> Result<Vec<OutputRecord>> {
    config.validate()?;
    let mut dir = OutputDir::create(out)?;
    info!("{sub}: seed {} trials {} -> {}", config.seed, config.trials, out.display());
    with_threads(threads, || -> Result<()> {
        match sub {
            Subcommand::Simulate => simulate(config, &mut dir),
            Subcommand::Acf => acf(config, &mut dir),
            Subcommand::Ccf => ccf(config, &mut dir),
            Subcommand::Doppler => doppler(config, &mut dir),
            Subcommand::DsCdf => delay_spread(config, &mut dir),
            Subcommand::ClusterEvolve => cluster_evolve(config, &mut dir),
            Subcommand::LinkBudget => link_budget(config, &mut dir),
        }
    })??;
    dir.finish(sub.name(), config)
}

/// 1-based config index to 0-based, checked against `n`.
fn index(i: usize, n: usize, what: &str) -> Result<usize> {
    if i == 0 || i > n {
        return Err(Error::config(format!("/{what}"), format!("index {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

fn link_pair(s: &Scenario, link: Link, q: usize, r: usize, p: usize) -> Result<(usize, usize)> {
    let (a, b) = match link {
        Link::Bi => (q, r),
        Link::Iu => (r, p),
        Link::Bu => (q, p),
    };
    let (na, nb) = s.link_dims(link);
    Ok((index(a, na, "tx")?, index(b, nb, "rx")?))
}

fn simulate(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<()> {
    let s = cfg.scenario()?;
    let sim = &cfg.simulate;
    let links: Vec<Link> = if sim.include_direct {
        Link::ALL.to_vec()
    } else {
        vec![Link::Bi, Link::Iu]
    };
    let f = cfg.time.f_offset_hz;
    let res = cfg.phase_resolution();
    for &t in &cfg.time.t_s {
        let plan = PhasePlan::at(&s, t, res)?;
        let per_trial = map_trials(sim.trials, |k| {
            let real = s.realize(cfg.seed, k, &links)?;
            let ls = s.large_scale_factors(cfg.seed, k, t)?;
            let ch = channel_at(&s, &real, t, f, &plan, sim.include_direct, Some(&ls))?;
            let mut taps = Vec::new();
            for &link in &links {
                let lr = real.link(link)?;
                let (na, nb) = s.link_dims(link);
                let pairs: Vec<(usize, usize)> = if sim.all_pairs {
                    (0..na).flat_map(|i| (0..nb).map(move |j| (i, j))).collect()
                } else {
                    vec![(0, 0)]
                };
                for (i, j) in pairs {
                    let cir = s.pair_tracks(lr, i, j).cir(t, s.fc_hz(), s.rician_k())?;
                    taps.push((link, i, j, cir));
                }
            }
            Ok((ch, taps))
        })?;
        dir.write_csv(&stat_file_name("channel", t, cfg.fc_ghz), |w| {
            w.write_record(["trial", "p", "q", "real", "imag", "magnitude", "cascade_real", "cascade_imag"])?;
            for (k, (ch, _)) in per_trial.iter().enumerate() {
                for p in 0..ch.h.nrows() {
                    for q in 0..ch.h.ncols() {
                        let h = ch.h[(p, q)];
                        let c = ch.cascade[(p, q)];
                        w.write_record([
                            k.to_string(),
                            (p + 1).to_string(),
                            (q + 1).to_string(),
                            num(h.re),
                            num(h.im),
                            num(h.norm()),
                            num(c.re),
                            num(c.im),
                        ])?;
                    }
                }
            }
            Ok(())
        })?;
        dir.write_csv(&stat_file_name("cir", t, cfg.fc_ghz), |w| {
            w.write_record([
                "trial", "link", "tx", "rx", "kind", "cluster_id", "ray_id", "delay_s", "amplitude", "phase_rad",
            ])?;
            for (k, (_, taps)) in per_trial.iter().enumerate() {
                for (link, i, j, cir) in taps {
                    for tap in cir.taps() {
                        let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
                        w.write_record([
                            k.to_string(),
                            link.label().to_owned(),
                            (i + 1).to_string(),
                            (j + 1).to_string(),
                            if tap.is_los() { "los" } else { "nlos" }.to_owned(),
                            opt(tap.cluster_id),
                            opt(tap.ray_id),
                            num(tap.delay_s),
                            num(tap.amplitude),
                            num(tap.phase_rad),
                        ])?;
                    }
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn request(cfg: &ScenarioConfig, t: f64) -> Result<AcfRequest> {
    Ok(AcfRequest {
        t,
        f: cfg.time.f_offset_hz,
        lags: cfg.time.lags.values()?,
        trials: cfg.trials,
        seed: cfg.seed,
    })
}

fn resolutions(cfg: &ScenarioConfig) -> Vec<PhaseResolution> {
    if cfg.acf.resolutions.is_empty() {
        vec![cfg.phase_resolution()]
    } else {
        cfg.acf.resolutions.iter().map(|r| (*r).into()).collect()
    }
}

fn tagged(mut c: CorrelationCurve, tag: String) -> CorrelationCurve {
    c.variant = tag;
    c
}

fn acf(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<()> {
    let s = cfg.scenario()?;
    let a = &cfg.acf;
    for &t in &cfg.time.t_s {
        let req = request(cfg, t)?;
        let curves: Vec<CorrelationCurve> = match a.mode {
            AcfMode::Subchannel => {
                let (i, j) = link_pair(&s, a.link, a.q, a.r, a.p)?;
                let (sim, ana) = acf_subchannel(&s, a.link, i, j, &req)?;
                vec![sim, ana]
            }
            AcfMode::SingleElement => {
                let q = index(a.q, s.bs().element_count(), "acf/q")?;
                let r = index(a.r, s.irs().element_count(), "acf/r")?;
                let p = index(a.p, s.user().element_count(), "acf/p")?;
                let res = acf_single_irs_element(&s, (q, r, p), &req, &resolutions(cfg))?;
                let mut v = vec![res.bi.0, res.bi.1, res.iu.0, res.iu.1];
                for (r, sim, ana) in res.cascade {
                    let tag = format!("cascade {}", r.label());
                    v.push(tagged(sim, tag.clone()));
                    v.push(tagged(ana, tag));
                }
                v
            }
            AcfMode::FullIrs => {
                let q = index(a.q, s.bs().element_count(), "acf/q")?;
                let p = index(a.p, s.user().element_count(), "acf/p")?;
                let ks: Vec<f64> = if a.k_db_sweep.is_empty() {
                    vec![s.rician_k()]
                } else {
                    a.k_db_sweep.iter().map(|k| crate::config::k_linear(*k)).collect()
                };
                let variants: Vec<FullIrsVariant> = resolutions(cfg)
                    .into_iter()
                    .flat_map(|resolution| ks.iter().map(move |&k| FullIrsVariant { resolution, k }))
                    .collect();
                acf_full_irs(&s, (q, p), &req, &variants, a.analytical)?
                    .into_iter()
                    .flat_map(|(sim, ana)| std::iter::once(sim).chain(ana))
                    .collect()
            }
        };
        let refs: Vec<&CorrelationCurve> = curves.iter().collect();
        dir.write_csv(&stat_file_name("acf", t, cfg.fc_ghz), |w| write_curves(w, "lag_s", &refs))?;
    }
    Ok(())
}

fn ccf(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<()> {
    let s = cfg.scenario()?;
    let c = &cfg.ccf;
    let (na, nb) = s.link_dims(c.link);
    let n = match c.side {
        ArraySide::Tx => na,
        ArraySide::Rx => nb,
    };
    let elements: Vec<usize> = if c.elements.is_empty() {
        (0..n).collect()
    } else {
        c.elements
            .iter()
            .map(|&e| index(e, n, "ccf/elements"))
            .collect::<Result<_>>()?
    };
    for &t in &cfg.time.t_s {
        let (sim, ana) = ccf_spatial(
            &s,
            c.link,
            c.side,
            &elements,
            t,
            cfg.time.f_offset_hz,
            c.dt_s,
            cfg.trials,
            cfg.seed,
        )?;
        dir.write_csv(&stat_file_name("ccf", t, cfg.fc_ghz), |w| write_curves(w, "spacing_m", &[&sim, &ana]))?;
    }
    Ok(())
}

fn doppler(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<()> {
    let d = &cfg.doppler;
    let speeds = if d.user_speeds_mps.is_empty() {
        vec![cfg.motion.user_speed_mps]
    } else {
        d.user_speeds_mps.clone()
    };
    let (q, r, p) = (d.q.unwrap_or(1), d.r.unwrap_or(1), d.p.unwrap_or(1));
    for &t in &cfg.time.t_s {
        let mut rows = Vec::new();
        for &v in &speeds {
            let s = cfg.scenario_with_user_speed(v)?;
            let lam = s.wavelength();
            let spreads = map_trials(cfg.trials, |k| -> Result<Option<f64>> {
                let one = |link: Link| -> Result<Option<Vec<(f64, f64)>>> {
                    let (i, j) = link_pair(&s, link, q, r, p)?;
                    let lr = s.realize_link(cfg.seed, k, link)?;
                    let rays = ray_dopplers(&s.pair_tracks(&lr, i, j), t, lam);
                    Ok((!rays.is_empty()).then_some(rays))
                };
                match d.target {
                    DopplerTarget::Cascade => {
                        let (qi, ri) = link_pair(&s, Link::Bi, q, r, p)?;
                        let (_, pi) = link_pair(&s, Link::Iu, q, r, p)?;
                        let bi = s.realize_link(cfg.seed, k, Link::Bi)?;
                        let iu = s.realize_link(cfg.seed, k, Link::Iu)?;
                        let (tb, ti) = (s.pair_tracks(&bi, qi, ri), s.pair_tracks(&iu, ri, pi));
                        if tb.rays.is_empty() || ti.rays.is_empty() {
                            return Ok(None);
                        }
                        cascade_doppler_spread(&tb, &ti, t, lam).map(Some)
                    }
                    DopplerTarget::Bi => one(Link::Bi)?.map(|r| local_doppler_spread(&r)).transpose(),
                    DopplerTarget::Iu => one(Link::Iu)?.map(|r| local_doppler_spread(&r)).transpose(),
                    DopplerTarget::Bu => one(Link::Bu)?.map(|r| local_doppler_spread(&r)).transpose(),
                }
            })?;
            let vals: Vec<f64> = spreads.iter().flatten().copied().collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
            rows.push([
                num(v),
                num(mean),
                num((var / n).sqrt()),
                vals.len().to_string(),
                (spreads.len() - vals.len()).to_string(),
            ]);
        }
        dir.write_csv(&stat_file_name("doppler", t, cfg.fc_ghz), |w| {
            w.write_record(["user_speed_mps", "mean_spread_hz", "std_error_hz", "trials", "skipped"])?;
            for row in &rows {
                w.write_record(row)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn delay_spread(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<()> {
    let s = cfg.scenario()?;
    let d = &cfg.ds_cdf;
    let (na, nb) = s.link_dims(d.link);
    let pair = (index(d.tx, na, "ds_cdf/tx")?, index(d.rx, nb, "ds_cdf/rx")?);
    let sigmas = if d.sigmas_m.is_empty() {
        vec![cfg.clusters.scatter_sigma_m]
    } else {
        d.sigmas_m.clone()
    };
    for &t in &cfg.time.t_s {
        let cdfs = ds_cdf(&s, d.link, pair, t, cfg.trials, cfg.seed, &sigmas)?;
        dir.write_csv(&stat_file_name("ds_cdf", t, cfg.fc_ghz), |w| {
            w.write_record(["sigma_x_m", "sigma_y_m", "sigma_z_m", "delay_spread_s", "cdf", "skipped"])?;
            for c in &cdfs {
                for (x, p) in c.points() {
                    w.write_record([
                        num(c.sigma_m[0]),
                        num(c.sigma_m[1]),
                        num(c.sigma_m[2]),
                        num(x),
                        num(p),
                        c.skipped.to_string(),
                    ])?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn cluster_evolve(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<()> {
    let layout = match cfg.cluster_evolve.terminal {
        EvolveTerminal::Bs => cfg.bs_layout()?,
        EvolveTerminal::Irs => cfg.irs_layout()?,
        EvolveTerminal::User => cfg.user_layout()?,
    };
    let params = EvolutionParams::from(&cfg.cluster_params());
    let evolve = |k: u64| {
        let mut rng = rng_stream(cfg.seed, &StreamPath::root().name("cluster-evolve").index(k));
        evolve_visibility(&layout, &params, &mut rng)
    };
    let summary = map_trials(cfg.cluster_evolve.runs, |k| {
        let v = evolve(k)?;
        let (nx, ny) = v.dims();
        // mean lag-1 autocorrelation over the initial clusters that vary
        let acs: Vec<f64> = v
            .visible_ids(0)
            .iter()
            .map(|&id| lag1_autocorrelation(&v.indicator(id), nx, ny))
            .filter(|a| a.is_finite())
            .collect();
        let ac = if acs.is_empty() {
            f64::NAN
        } else {
            acs.iter().sum::<f64>() / acs.len() as f64
        };
        Ok((v.mean_visible_count(), v.visible_ids(0).len(), ac))
    })?;
    let first = evolve(0)?;
    let ids = match &cfg.cluster_evolve.export_ids {
        Some(ids) => ids.clone(),
        None => first.visible_ids(0).to_vec(),
    };
    let mut buf = Vec::new();
    first.write_csv(&mut buf, &ids)?;
    dir.write(&format!("visibility_{}GHz.csv", cfg.fc_ghz), &buf)?;
    dir.write_csv(&format!("cluster_evolve_{}GHz.csv", cfg.fc_ghz), |w| {
        w.write_record(["run", "mean_visible", "initial_clusters", "lag1_autocorrelation"])?;
        for (k, (m, n0, ac)) in summary.iter().enumerate() {
            w.write_record([k.to_string(), num(*m), n0.to_string(), num(*ac)])?;
        }
        Ok(())
    })?;
    Ok(())
}

fn link_budget(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<()> {
    let s = cfg.scenario()?;
    let res = cfg.phase_resolution();
    let p_tx = 10f64.powf((cfg.link_budget.transmit_power_dbm - 30.0) / 10.0);
    let lam = s.wavelength();
    let mut rows = Vec::new();
    for &t in &cfg.time.t_s {
        let dist = s.irs_distances(t);
        let cont = PhasePlan::at(&s, t, PhaseResolution::Continuous)?;
        let quant = PhasePlan::at(&s, t, res)?;
        let pl = cascaded_path_loss(s.irs_array(), &dist, lam)?;
        let pr_c = received_power(p_tx, s.irs_array(), &dist, cont.phases(), lam)?;
        let pr_q = received_power(p_tx, s.irs_array(), &dist, quant.phases(), lam)?;
        let d_bu = s.los_vector(Link::Bu, 0, 0, t).norm();
        let pl_bu = match s.large_scale() {
            Some(ls) => num(path_loss_bu(d_bu / 1000.0, s.fc_hz() / 1e9, &ls.bu)?),
            None => String::new(),
        };
        rows.push([
            num(t),
            num(d_bu),
            num(power_to_db(pl)),
            pl_bu,
            num(power_to_db(pr_c) + 30.0),
            num(power_to_db(pr_q) + 30.0),
            res.label(),
        ]);
        let mut buf = Vec::new();
        quant.write_csv(&mut buf)?;
        dir.write(&stat_file_name("irs_phases", t, cfg.fc_ghz), &buf)?;
    }
    dir.write_csv(&format!("link_budget_{}GHz.csv", cfg.fc_ghz), |w| {
        w.write_record([
            "t_s",
            "d_bu_m",
            "pl_biu_db",
            "pl_bu_db",
            "rx_power_continuous_dbm",
            "rx_power_quantized_dbm",
            "resolution",
        ])?;
        for row in &rows {
            w.write_record(row)?;
        }
        Ok(())
    })?;
    Ok(())
}
