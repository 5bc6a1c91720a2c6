//! IRS reflection phases, quantisation, received power and BS steering.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction, unflatten_index, PlanarArray, TerminalLayout, Vec3};
use crate::scenario::{Link, Scenario};

/// Phase-shift resolution of the IRS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseResolution {
    Continuous,
    Bits(u32),
}

impl PhaseResolution {
    pub fn apply(&self, phase: f64) -> f64 {
        match *self {
            PhaseResolution::Continuous => phase.rem_euclid(TAU),
            PhaseResolution::Bits(b) => quantize_phase(phase, b),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PhaseResolution::Continuous => "continuous".into(),
            PhaseResolution::Bits(b) => format!("{b}-bit"),
        }
    }
}

/// Phase maximising the received power through one element:
/// `mod(2π (r_t + r_r) / λ, 2π)`.
pub fn optimal_phase(r_t: f64, r_r: f64, wavelength: f64) -> Result<f64> {
    if !(r_t > 0.0 && r_r > 0.0 && wavelength > 0.0) {
        return Err(Error::domain(format!(
            "distances and wavelength must be positive (r_t={r_t}, r_r={r_r}, λ={wavelength})"
        )));
    }
    Ok((TAU * (r_t + r_r) / wavelength).rem_euclid(TAU))
}

/// The `2^bits` reachable phases `(2k + 1) π / 2^bits`, ascending.
pub fn quantization_levels(bits: u32) -> Vec<f64> {
    assert!((1..=16).contains(&bits), "phase resolution must be 1..=16 bits");
    let n = 1u32 << bits;
    (0..n).map(|k| (2 * k + 1) as f64 * PI / n as f64).collect()
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Nearest reachable phase under circular distance. Exact ties go to the
/// smaller level.
pub fn quantize_phase(phase: f64, bits: u32) -> f64 {
    const TIE: f64 = 1e-12;
    let phase = phase.rem_euclid(TAU);
    let mut best = f64::NAN;
    let mut best_d = f64::INFINITY;
    for level in quantization_levels(bits) {
        let d = circular_distance(phase, level);
        if d < best_d - TIE {
            best = level;
            best_d = d;
        }
    }
    best
}

/// Complex reflection factor applied by an element with phase `θ`.
///
/// Path phases in this crate carry `e^{+j2π f_c τ}`; the reflection enters
/// with the opposite sign so that the optimum phase co-phases the cascaded
/// LoS paths, as it does in the received-power expression.
pub fn reflection_coefficient(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, -theta)
}

/// Per-element reflection phases at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    mx: usize,
    my: usize,
    continuous: Vec<f64>,
    phases: Vec<f64>,
    resolution: PhaseResolution,
    timestamp: f64,
}

impl PhasePlan {
    pub fn new(
        mx: usize,
        my: usize,
        continuous: Vec<f64>,
        resolution: PhaseResolution,
        timestamp: f64,
    ) -> Result<Self> {
        if continuous.len() != mx * my {
            return Err(Error::domain(format!(
                "phase plan has {} phases for a {mx}x{my} IRS",
                continuous.len()
            )));
        }
        let continuous: Vec<f64> = continuous.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        let phases = continuous.iter().map(|&p| resolution.apply(p)).collect();
        Ok(Self {
            mx,
            my,
            continuous,
            phases,
            resolution,
            timestamp,
        })
    }

    /// Plan tracking the LoS geometry at time `t` (see [`element_phase_at`]).
    pub fn at(scenario: &Scenario, t: f64, resolution: PhaseResolution) -> Result<Self> {
        let p = scenario.irs_array();
        let continuous = (0..p.mx * p.my)
            .map(|r| element_phase_at(scenario, t, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(p.mx, p.my, continuous, resolution, t)
    }

    /// Applied phases, indexed by `r - 1`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn continuous_phases(&self) -> &[f64] {
        &self.continuous
    }

    pub fn resolution(&self) -> PhaseResolution {
        self.resolution
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn reflection(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| reflection_coefficient(p)).collect()
    }

    /// Same plan with a common offset added to every phase.
    pub fn shifted(&self, offset: f64) -> Self {
        let phases = self.phases.iter().map(|p| (p + offset).rem_euclid(TAU)).collect();
        Self {
            phases,
            ..self.clone()
        }
    }

    /// CSV with columns `r,x,y,phase_rad,quantized_phase_rad`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "x", "y", "phase_rad", "quantized_phase_rad"])?;
        for (i, (c, q)) in self.continuous.iter().zip(&self.phases).enumerate() {
            let (x, y) = unflatten_index(i + 1, self.mx, self.my)?;
            out.write_record([
                (i + 1).to_string(),
                x.to_string(),
                y.to_string(),
                c.to_string(),
                q.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Continuous phase `θ_r(t)` of IRS element `r` (0-based) tracking the LoS
/// distances from BS element 1 and to USER element 1 at time `t`.
pub fn element_phase_at(scenario: &Scenario, t: f64, r: usize) -> Result<f64> {
    let d_bi = scenario.los_vector(Link::Bi, 0, r, t).norm();
    let d_iu = scenario.los_vector(Link::Iu, r, 0, t).norm();
    optimal_phase(d_bi, d_iu, scenario.wavelength())
}

fn check_distances(distances: &[(f64, f64)], n: usize) -> Result<()> {
    if distances.len() != n {
        return Err(Error::domain(format!(
            "expected {n} distance pairs, got {}",
            distances.len()
        )));
    }
    if let Some((t, r)) = distances.iter().find(|(t, r)| !(*t > 0.0 && *r > 0.0)) {
        return Err(Error::domain(format!("non-positive distance ({t}, {r})")));
    }
    Ok(())
}

/// Received power through the IRS with per-element distances `(r_t, r_r)`
/// (flat-index order) and the given phases.
pub fn received_power(
    tx_power_w: f64,
    irs: &PlanarArray,
    distances: &[(f64, f64)],
    phases: &[f64],
    wavelength: f64,
) -> Result<f64> {
    let n = irs.mx * irs.my;
    check_distances(distances, n)?;
    if phases.len() != n {
        return Err(Error::domain("phase count does not match the IRS"));
    }
    let sum: Complex64 = distances
        .iter()
        .zip(phases)
        .map(|(&(rt, rr), &phi)| {
            let arg = -(TAU * (rr + rt) - wavelength * phi) / wavelength;
            Complex64::from_polar(1.0 / (rr * rt), arg)
        })
        .sum();
    Ok(tx_power_w * gain_prefactor(irs, wavelength) * sum.norm_sqr())
}

fn gain_prefactor(irs: &PlanarArray, wavelength: f64) -> f64 {
    irs.spacing_x_m * irs.spacing_y_m * wavelength * wavelength / (64.0 * PI.powi(3))
}

/// Path-loss gain of the IRS-assisted link with optimal phases.
pub fn cascaded_path_loss(irs: &PlanarArray, distances: &[(f64, f64)], wavelength: f64) -> Result<f64> {
    check_distances(distances, irs.mx * irs.my)?;
    let s: f64 = distances.iter().map(|(rt, rr)| 1.0 / (rt * rr)).sum();
    Ok(gain_prefactor(irs, wavelength) * s * s)
}

/// Unit-modulus BS weights pointing at the IRS centre.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub coefficients: Vec<Complex64>,
    /// Departure elevation θ and azimuth Φ, radians.
    pub elevation: f64,
    pub azimuth: f64,
    pub doppler_hz: f64,
}

/// `c_m = exp(j2π/λ <e(Ω), r_m> + j2π ν t)` with `r_m` the element position
/// relative to `reference` (measured from BS element 1).
pub fn steering_vector(
    bs: &TerminalLayout,
    elevation: f64,
    azimuth: f64,
    doppler_hz: f64,
    t: f64,
    wavelength: f64,
    reference: &Vec3,
) -> Result<SteeringVector> {
    if bs.linear_array().is_none() {
        return Err(Error::domain("steering vector needs a linear array"));
    }
    let e = direction(azimuth, elevation);
    let coefficients = bs
        .offsets()
        .iter()
        .map(|pos| {
            let rm = pos - reference;
            Complex64::from_polar(1.0, TAU * e.dot(&rm) / wavelength + TAU * doppler_hz * t)
        })
        .collect();
    Ok(SteeringVector {
        coefficients,
        elevation,
        azimuth,
        doppler_hz,
    })
}
