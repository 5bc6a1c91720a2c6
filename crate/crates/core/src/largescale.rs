//! Shadow fading and direct-link path loss.

use rand::Rng;
use rand_distr::StandardNormal;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Large-scale parameters of one sub-channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LargeScaleParams {
    /// Shadowing standard deviation, dB.
    #[serde(default = "default_sigma")]
    pub sigma_sf_db: f64,
    /// Shadowing mean, dB.
    #[serde(default)]
    pub mu_db: f64,
    /// Distance coefficient of the direct path-loss law.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Constant term of the direct path-loss law, dB.
    #[serde(default = "default_b")]
    pub b: f64,
    /// Frequency coefficient of the direct path-loss law.
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_sigma() -> f64 {
    4.0
}
fn default_a() -> f64 {
    22.0
}
fn default_b() -> f64 {
    28.0
}
fn default_c() -> f64 {
    20.0
}

impl Default for LargeScaleParams {
    fn default() -> Self {
        Self {
            sigma_sf_db: default_sigma(),
            mu_db: 0.0,
            a: default_a(),
            b: default_b(),
            c: default_c(),
        }
    }
}

impl LargeScaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sf_db >= 0.0) || !self.sigma_sf_db.is_finite() {
            return Err(Error::domain("sigma_sf_db must be finite and >= 0"));
        }
        if ![self.mu_db, self.a, self.b, self.c].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("large-scale coefficients must be finite"));
        }
        Ok(())
    }
}

/// Amplitude factor `x = 10^((μ + σ z)/20)`, so `10 log10(x²)` is normal.
pub fn sample_shadow_fading<R: Rng + ?Sized>(params: &LargeScaleParams, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    10f64.powf((params.mu_db + params.sigma_sf_db * z) / 20.0)
}

/// Direct-link path loss in dB: `−A log10 d − B − C log10 f`.
pub fn path_loss_bu(d_km: f64, f_ghz: f64, params: &LargeScaleParams) -> Result<f64> {
    if !(d_km > 0.0 && f_ghz > 0.0) {
        return Err(Error::domain(format!(
            "path loss needs positive distance and frequency (d={d_km} km, f={f_ghz} GHz)"
        )));
    }
    Ok(-params.a * d_km.log10() - params.b - params.c * f_ghz.log10())
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}
