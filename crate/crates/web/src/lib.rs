//! WebAssembly bindings for the single-page demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string; the
//! `*_json` functions hold the logic so they can be tested natively.

use irs_gbsm::clusters::{evolve_visibility, EvolutionParams};
use irs_gbsm::config::ScenarioConfig;
use irs_gbsm::irs::{PhasePlan, PhaseResolution};
use irs_gbsm::rng::{rng_stream, StreamPath};
use irs_gbsm::stats::{acf_full_irs, AcfRequest, FullIrsVariant};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a browser tab responsive.
const MAX_TRIALS: u32 = 2000;
const MAX_IRS_SIDE: u32 = 128;

fn base_config(fc_ghz: f64, mx: u32, my: u32) -> Result<ScenarioConfig, String> {
    let json = format!(
        r#"{{ "seed": 1, "fc_ghz": {fc_ghz},
              "geometry": {{ "d_bi_m": [0, 50, 0], "d_bu_m": [200, 0, 0] }},
              "irs": {{ "mx": {mx}, "my": {my} }},
              "motion": {{ "bs_speed_mps": 10, "user_speed_mps": 10, "user_azimuth_deg": 90 }} }}"#
    );
    ScenarioConfig::from_json(&json).map_err(|e| e.to_string())
}

fn resolution(bits: u32) -> Result<PhaseResolution, String> {
    match bits {
        0 => Ok(PhaseResolution::Continuous),
        1..=16 => Ok(PhaseResolution::Bits(bits)),
        _ => Err(format!("phase bits must be 0 (continuous) or 1..=16, got {bits}")),
    }
}

fn check_side(side: u32) -> Result<usize, String> {
    if side == 0 || side > MAX_IRS_SIDE {
        return Err(format!("IRS side must be in 1..={MAX_IRS_SIDE}, got {side}"));
    }
    Ok(side as usize)
}

#[derive(Debug, Serialize)]
pub struct AcfPlot {
    pub lags_s: Vec<f64>,
    pub continuous: Vec<f64>,
    pub quantized: Vec<f64>,
    pub bits: u32,
    pub trials: u64,
}

/// Time-ACF magnitude of the full IRS cascade with continuous and `bits`
/// phases, `side × side` IRS, at anchor `t_s`.
pub fn time_acf_json(side: u32, k_db: f64, bits: u32, trials: u32, t_s: f64, seed: u64) -> Result<String, String> {
    let side = check_side(side)?;
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be in 1..={MAX_TRIALS}"));
    }
    let quant = resolution(bits.max(1))?;
    let mut cfg = base_config(58.0, side as u32, side as u32)?;
    cfg.rician_k_db = k_db.is_finite().then_some(k_db);
    let s = cfg.scenario().map_err(|e| e.to_string())?;
    let lags_s: Vec<f64> = (0..=25).map(|i| 0.002 * i as f64).collect();
    let req = AcfRequest {
        t: t_s,
        f: 0.0,
        lags: lags_s.clone(),
        trials: trials.into(),
        seed,
    };
    let k = s.rician_k();
    let variants = [
        FullIrsVariant {
            resolution: PhaseResolution::Continuous,
            k,
        },
        FullIrsVariant { resolution: quant, k },
    ];
    let out = acf_full_irs(&s, (0, 0), &req, &variants, false).map_err(|e| e.to_string())?;
    let plot = AcfPlot {
        lags_s,
        continuous: out[0].0.magnitude(),
        quantized: out[1].0.magnitude(),
        bits: bits.max(1),
        trials: trials.into(),
    };
    serde_json::to_string(&plot).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct VisibilityMap {
    pub nx: usize,
    pub ny: usize,
    /// Visible clusters per element, row-major over `(x, y)`.
    pub counts: Vec<usize>,
    /// Indicator of the first cluster seen by element 1.
    pub first_cluster: Vec<u8>,
    pub mean_visible: f64,
}

/// Birth–death visibility over a `side × side` IRS.
pub fn visibility_map_json(
    side: u32,
    birth_rate: f64,
    death_rate: f64,
    elevation_x_deg: f64,
    elevation_y_deg: f64,
    seed: u64,
) -> Result<String, String> {
    let side = check_side(side)?;
    let mut cfg = base_config(58.0, side as u32, side as u32)?;
    cfg.clusters.birth_rate_per_m = birth_rate;
    cfg.clusters.death_rate_per_m = death_rate;
    cfg.irs.elevation_x_deg = elevation_x_deg;
    cfg.irs.elevation_y_deg = elevation_y_deg;
    cfg.validate().map_err(|e| e.to_string())?;
    let layout = cfg.irs_layout().map_err(|e| e.to_string())?;
    let params = EvolutionParams::from(&cfg.cluster_params());
    let mut rng = rng_stream(seed, &StreamPath::root().name("web").name("visibility"));
    let v = evolve_visibility(&layout, &params, &mut rng).map_err(|e| e.to_string())?;
    let (nx, ny) = v.dims();
    let counts = (0..v.element_count()).map(|e| v.visible_ids(e).len()).collect();
    let first_cluster = match v.visible_ids(0).first() {
        Some(&id) => v.indicator(id).into_iter().map(u8::from).collect(),
        None => vec![0; v.element_count()],
    };
    let map = VisibilityMap {
        nx,
        ny,
        counts,
        first_cluster,
        mean_visible: v.mean_visible_count(),
    };
    serde_json::to_string(&map).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct PhaseMap {
    pub mx: usize,
    pub my: usize,
    /// Applied phases in radians, row-major over `(x, y)`.
    pub phases: Vec<f64>,
    pub continuous: Vec<f64>,
}

/// Optimal (then quantised) IRS phases at time `t_s`.
pub fn phase_map_json(side: u32, fc_ghz: f64, bits: u32, t_s: f64) -> Result<String, String> {
    let side = check_side(side)?;
    let cfg = base_config(fc_ghz, side as u32, side as u32)?;
    let s = cfg.scenario().map_err(|e| e.to_string())?;
    let plan = PhasePlan::at(&s, t_s, resolution(bits)?).map_err(|e| e.to_string())?;
    let map = PhaseMap {
        mx: side,
        my: side,
        phases: plan.phases().to_vec(),
        continuous: plan.continuous_phases().to_vec(),
    };
    serde_json::to_string(&map).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn time_acf(side: u32, k_db: f64, bits: u32, trials: u32, t_s: f64, seed: u32) -> Result<String, JsError> {
    js(time_acf_json(side, k_db, bits, trials, t_s, seed.into()))
}

#[wasm_bindgen]
pub fn visibility_map(
    side: u32,
    birth_rate: f64,
    death_rate: f64,
    elevation_x_deg: f64,
    elevation_y_deg: f64,
    seed: u32,
) -> Result<String, JsError> {
    js(visibility_map_json(side, birth_rate, death_rate, elevation_x_deg, elevation_y_deg, seed.into()))
}

#[wasm_bindgen]
pub fn phase_map(side: u32, fc_ghz: f64, bits: u32, t_s: f64) -> Result<String, JsError> {
    js(phase_map_json(side, fc_ghz, bits, t_s))
}
