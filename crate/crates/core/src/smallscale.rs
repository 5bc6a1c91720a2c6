//! Time-varying small-scale CIR of one sub-channel element pair.
//!
//! Every ray is stored as two straight-line tracks: the vector from the tx
//! element to its first-bounce scatterer and from the rx element to its
//! last-bounce scatterer, each `origin + rate·t`. Path lengths, delays and
//! Doppler follow in closed form at any `t`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::SPEED_OF_LIGHT;

/// One resolved path of a CIR.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTap {
    pub delay_s: f64,
    pub amplitude: f64,
    /// `2π f_c τ` wrapped to `[0, 2π)`.
    pub phase_rad: f64,
    /// `None` for the LoS tap.
    pub cluster_id: Option<u32>,
    pub ray_id: Option<u32>,
}

impl RayTap {
    pub fn new(delay_s: f64, amplitude: f64, fc_hz: f64, cluster_id: Option<u32>, ray_id: Option<u32>) -> Self {
        Self {
            delay_s,
            amplitude,
            phase_rad: (TAU * fc_hz * delay_s).rem_euclid(TAU),
            cluster_id,
            ray_id,
        }
    }

    pub fn is_los(&self) -> bool {
        self.cluster_id.is_none()
    }

    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Rician-weighted CIR of one element pair at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelCir {
    pub tx: usize,
    pub rx: usize,
    pub t: f64,
    /// Linear Rician factor.
    pub k: f64,
    pub los: RayTap,
    pub nlos: Vec<RayTap>,
}

impl SubchannelCir {
    pub fn taps(&self) -> impl Iterator<Item = &RayTap> {
        std::iter::once(&self.los).chain(self.nlos.iter())
    }

    pub fn total_power(&self) -> f64 {
        self.taps().map(RayTap::power).sum()
    }
}

/// LoS and NLoS amplitude weights `(√(K/(K+1)), √(1/(K+1)))`.
pub fn rician_weights(k: f64) -> Result<(f64, f64)> {
    if !(k >= 0.0) {
        return Err(Error::domain(format!("Rician factor must be >= 0, got {k}")));
    }
    if k.is_infinite() {
        return Ok((1.0, 0.0));
    }
    Ok(((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt()))
}

/// Applies the Rician weights to a unit-power LoS tap and normalised NLoS taps.
pub fn compose_cir(
    tx: usize,
    rx: usize,
    t: f64,
    los: RayTap,
    nlos: Vec<RayTap>,
    k: f64,
) -> Result<SubchannelCir> {
    let (wl, wn) = rician_weights(k)?;
    let los = RayTap {
        amplitude: los.amplitude * wl,
        ..los
    };
    let nlos = nlos
        .into_iter()
        .map(|tap| RayTap {
            amplitude: tap.amplitude * wn,
            ..tap
        })
        .collect();
    Ok(SubchannelCir { tx, rx, t, k, los, nlos })
}

/// `H(t, f) = Σ a e^{j2π f_c τ} e^{−j2π f τ}` over all taps.
pub fn transfer_function(cir: &SubchannelCir, f: f64) -> Complex64 {
    cir.taps()
        .map(|tap| Complex64::from_polar(tap.amplitude, tap.phase_rad - TAU * f * tap.delay_s))
        .sum()
}

/// Delay of the ray `tx → s_first → (virtual link) → s_last → rx`, positions
/// taken at the same instant.
pub fn ray_delay(tx: &Vec3, s_first: &Vec3, s_last: &Vec3, rx: &Vec3, virtual_delay_s: f64) -> f64 {
    ((s_first - tx).norm() + (s_last - rx).norm()) / SPEED_OF_LIGHT + virtual_delay_s
}

/// Geometry of one NLoS ray over time.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTrack {
    pub cluster_id: u32,
    pub ray_id: u32,
    /// tx element → first-bounce scatterer at `t = 0`, and its rate of change.
    pub tx_origin: Vec3,
    pub tx_rate: Vec3,
    /// rx element → last-bounce scatterer at `t = 0`, and its rate of change.
    pub rx_origin: Vec3,
    pub rx_rate: Vec3,
    pub virtual_delay_s: f64,
}

impl RayTrack {
    pub fn tx_distance(&self, t: f64) -> f64 {
        (self.tx_origin + self.tx_rate * t).norm()
    }

    pub fn rx_distance(&self, t: f64) -> f64 {
        (self.rx_origin + self.rx_rate * t).norm()
    }

    /// Geometric path length `d(t)` excluding the virtual link.
    #[inline]
    pub fn path_length(&self, t: f64) -> f64 {
        self.tx_distance(t) + self.rx_distance(t)
    }

    #[inline]
    pub fn delay(&self, t: f64) -> f64 {
        self.path_length(t) / SPEED_OF_LIGHT + self.virtual_delay_s
    }

    /// `d/dt` of the path length.
    pub fn path_rate(&self, t: f64) -> f64 {
        let a = self.tx_origin + self.tx_rate * t;
        let b = self.rx_origin + self.rx_rate * t;
        let ra = if a.norm() > 0.0 { a.dot(&self.tx_rate) / a.norm() } else { 0.0 };
        let rb = if b.norm() > 0.0 { b.dot(&self.rx_rate) / b.norm() } else { 0.0 };
        ra + rb
    }

    /// Instantaneous Doppler; a shrinking path gives a positive shift.
    pub fn doppler_hz(&self, t: f64, wavelength: f64) -> f64 {
        -self.path_rate(t) / wavelength
    }
}

/// Direct-path geometry: the tx → rx vector is `origin + rate·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosTrack {
    pub origin: Vec3,
    pub rate: Vec3,
}

impl LosTrack {
    pub fn vector(&self, t: f64) -> Vec3 {
        self.origin + self.rate * t
    }

    pub fn length(&self, t: f64) -> f64 {
        self.vector(t).norm()
    }

    pub fn delay(&self, t: f64) -> f64 {
        self.length(t) / SPEED_OF_LIGHT
    }
}

/// All paths between one tx element and one rx element.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTracks {
    pub tx: usize,
    pub rx: usize,
    pub los: LosTrack,
    pub rays: Vec<RayTrack>,
    pub power_decay_s: f64,
}

impl PairTracks {
    /// Normalised ray powers `P ∝ exp(−(τ − τ_min)/γ)` at `t`, with delays.
    pub fn powers_and_delays(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let delays: Vec<f64> = self.rays.iter().map(|r| r.delay(t)).collect();
        let powers = normalized_powers(&delays, self.power_decay_s);
        (powers, delays)
    }

    /// `√P_a e^{j w τ_a}` for every ray with `w = 2π(f_c − f)`, written to
    /// `out`. Returns the summed power (1, or 0 without rays).
    pub fn nlos_phasors(&self, t: f64, w: f64, out: &mut Vec<Complex64>) -> f64 {
        out.clear();
        if self.rays.is_empty() {
            return 0.0;
        }
        let mut tau_min = f64::INFINITY;
        for r in &self.rays {
            let tau = r.delay(t);
            tau_min = tau_min.min(tau);
            // stash the delay in the real part until powers are known
            out.push(Complex64::new(tau, 0.0));
        }
        let inv_gamma = 1.0 / self.power_decay_s;
        let mut sum = 0.0;
        for x in out.iter_mut() {
            let tau = x.re;
            let p = (-(tau - tau_min) * inv_gamma).exp();
            sum += p;
            let (s, c) = (w * tau).sin_cos();
            *x = Complex64::new(c, s) * p.sqrt();
        }
        let norm = 1.0 / sum.sqrt();
        for x in out.iter_mut() {
            *x *= norm;
        }
        1.0
    }

    pub fn los_phasor(&self, t: f64, w: f64) -> Complex64 {
        let (s, c) = (w * self.los.delay(t)).sin_cos();
        Complex64::new(c, s)
    }

    /// Sum of the NLoS phasors.
    pub fn nlos_sum(&self, t: f64, w: f64, buf: &mut Vec<Complex64>) -> Complex64 {
        self.nlos_phasors(t, w, buf);
        buf.iter().sum()
    }

    /// Rician-combined response at `(t, f)`.
    pub fn response(&self, t: f64, f: f64, fc_hz: f64, k: f64) -> Result<Complex64> {
        let (wl, wn) = rician_weights(k)?;
        let w = TAU * (fc_hz - f);
        let mut buf = Vec::with_capacity(self.rays.len());
        Ok(self.los_phasor(t, w) * wl + self.nlos_sum(t, w, &mut buf) * wn)
    }

    pub fn los_tap(&self, t: f64, fc_hz: f64) -> RayTap {
        RayTap::new(self.los.delay(t), 1.0, fc_hz, None, None)
    }

    /// Unweighted NLoS taps (powers sum to 1).
    pub fn nlos_cir(&self, t: f64, fc_hz: f64) -> Vec<RayTap> {
        let (powers, delays) = self.powers_and_delays(t);
        self.rays
            .iter()
            .zip(powers.iter().zip(&delays))
            .map(|(r, (&p, &tau))| RayTap::new(tau, p.sqrt(), fc_hz, Some(r.cluster_id), Some(r.ray_id)))
            .collect()
    }

    pub fn cir(&self, t: f64, fc_hz: f64, k: f64) -> Result<SubchannelCir> {
        compose_cir(self.tx, self.rx, t, self.los_tap(t, fc_hz), self.nlos_cir(t, fc_hz), k)
    }

    /// Advances the pair's time origin by `dt`, as if every track had been
    /// rebuilt from positions at `dt`.
    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            los: LosTrack {
                origin: self.los.vector(dt),
                rate: self.los.rate,
            },
            rays: self
                .rays
                .iter()
                .map(|r| RayTrack {
                    tx_origin: r.tx_origin + r.tx_rate * dt,
                    rx_origin: r.rx_origin + r.rx_rate * dt,
                    ..r.clone()
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Exponential power-delay profile normalised to unit sum.
pub fn normalized_powers(delays: &[f64], decay_s: f64) -> Vec<f64> {
    let Some(tau_min) = delays.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let raw: Vec<f64> = delays.iter().map(|t| (-(t - tau_min) / decay_s).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const FC: f64 = 62e9;

    fn track(seed: f64) -> RayTrack {
        RayTrack {
            cluster_id: 0,
            ray_id: seed as u32,
            tx_origin: Vec3::new(30.0 + seed, 10.0 - seed, 2.0),
            tx_rate: Vec3::new(-3.0, 1.0 + 0.1 * seed, 0.0),
            rx_origin: Vec3::new(-20.0, 5.0 * seed, -1.0),
            rx_rate: Vec3::new(0.5, -7.0, 0.0),
            virtual_delay_s: 3e-8 * seed,
        }
    }

    #[test]
    fn ray_delay_examples() {
        // 100 m out to the first scatterer, 200 m back from the last one
        let tx = Vec3::zeros();
        let rx = Vec3::new(0.0, 50.0, 0.0);
        let sa = Vec3::new(100.0, 0.0, 0.0);
        let sz = Vec3::new(0.0, 50.0, 200.0);
        let d = ray_delay(&tx, &sa, &sz, &rx, 0.0);
        assert_abs_diff_eq!(d, 300.0 / SPEED_OF_LIGHT, epsilon = 1e-18);
        assert_relative_eq!(d, 1.0007e-6, max_relative = 1e-4);
        let d2 = ray_delay(&tx, &sa, &sz, &rx, 50e-9);
        assert_abs_diff_eq!(d2 - d, 50e-9, epsilon = 1e-18);
        let still = RayTrack {
            tx_rate: Vec3::zeros(),
            rx_rate: Vec3::zeros(),
            ..track(1.0)
        };
        assert_eq!(still.delay(0.0), still.delay(17.0));
    }

    #[test]
    fn track_matches_positions() {
        let r = track(2.0);
        let t = 0.37;
        let tx = Vec3::new(1.0, 2.0, 3.0);
        let rx = Vec3::new(-4.0, 0.5, 1.0);
        let s_first = tx + r.tx_origin + r.tx_rate * t;
        let s_last = rx + r.rx_origin + r.rx_rate * t;
        assert_relative_eq!(r.delay(t), ray_delay(&tx, &s_first, &s_last, &rx, r.virtual_delay_s), max_relative = 1e-14);
    }

    #[test]
    fn path_rate_matches_finite_difference() {
        for s in 0..5 {
            let r = track(s as f64);
            let t = 0.8;
            let h = 1e-5;
            let fd = (r.path_length(t + h) - r.path_length(t - h)) / (2.0 * h);
            assert_relative_eq!(r.path_rate(t), fd, max_relative = 1e-6);
            let tau_fd = (r.delay(t + h) - r.delay(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(tau_fd, r.path_rate(t) / SPEED_OF_LIGHT, epsilon = 1e-6);
        }
    }

    #[test]
    fn radial_doppler_sign() {
        // rx moving straight at its scatterer: path shrinks, shift positive
        let v = 10.0;
        let lam = SPEED_OF_LIGHT / FC;
        let r = RayTrack {
            cluster_id: 0,
            ray_id: 0,
            tx_origin: Vec3::new(5.0, 0.0, 0.0),
            tx_rate: Vec3::zeros(),
            rx_origin: Vec3::new(0.0, 40.0, 0.0),
            rx_rate: Vec3::new(0.0, -v, 0.0),
            virtual_delay_s: 0.0,
        };
        assert_relative_eq!(r.doppler_hz(0.0, lam), v / lam, max_relative = 1e-12);
    }

    #[test]
    fn compose_examples() {
        let los = RayTap::new(1e-6, 1.0, FC, None, None);
        let nlos = vec![RayTap::new(1.1e-6, 1.0, FC, Some(0), Some(0))];
        let c = compose_cir(0, 0, 0.0, los.clone(), nlos.clone(), 0.0).unwrap();
        assert_eq!(c.los.amplitude, 0.0);
        assert_eq!(c.nlos, nlos);
        let c = compose_cir(0, 0, 0.0, los.clone(), nlos.clone(), 1e12).unwrap();
        assert!(c.nlos[0].power() / c.total_power() < 1e-6);
        let c = compose_cir(0, 0, 0.0, los.clone(), nlos.clone(), 1.0).unwrap();
        assert_abs_diff_eq!(c.los.amplitude, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(c.nlos[0].amplitude, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(c.total_power(), 1.0, epsilon = 1e-12);
        assert!(compose_cir(0, 0, 0.0, los, nlos, -0.1).is_err());
    }

    #[test]
    fn transfer_function_oracle() {
        let taps = [(1e-7, 0.5), (2.5e-7, 0.3), (4e-7, 0.2)];
        let cir = SubchannelCir {
            tx: 0,
            rx: 0,
            t: 0.0,
            k: 0.0,
            los: RayTap::new(0.9e-7, 0.0, FC, None, None),
            nlos: taps
                .iter()
                .enumerate()
                .map(|(i, &(tau, a))| RayTap::new(tau, a, FC, Some(0), Some(i as u32)))
                .collect(),
        };
        let f = 3.3e6;
        // oracle: direct evaluation of Σ a exp(j2π (f_c − f) τ)
        let oracle: Complex64 = taps
            .iter()
            .map(|&(tau, a)| Complex64::from_polar(a, TAU * ((FC - f) * tau).rem_euclid(1.0)))
            .sum();
        let h = transfer_function(&cir, f);
        assert_abs_diff_eq!((h - oracle).norm(), 0.0, epsilon = 1e-9);
        let single = SubchannelCir {
            nlos: vec![RayTap::new(1e-6, 1.0, FC, Some(0), Some(0))],
            ..cir.clone()
        };
        let e = Complex64::from_polar(1.0, TAU * FC * 1e-6);
        assert_abs_diff_eq!((transfer_function(&single, 0.0) - e).norm(), 0.0, epsilon = 1e-9);
        // linear in amplitudes
        let mut doubled = cir.clone();
        for t in &mut doubled.nlos {
            t.amplitude *= 2.0;
        }
        assert_abs_diff_eq!((transfer_function(&doubled, f) - 2.0 * h).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tap_phase_difference() {
        let a = RayTap::new(1.234e-6, 1.0, FC, Some(0), Some(0));
        let b = RayTap::new(1.234e-6 + 3.7e-10, 1.0, FC, Some(0), Some(1));
        let expect = (TAU * FC * 3.7e-10).rem_euclid(TAU);
        let got = (b.phase_rad - a.phase_rad).rem_euclid(TAU);
        let d = (got - expect).abs();
        assert!(d.min(TAU - d) < 1e-6);
    }

    fn pair(n: usize) -> PairTracks {
        PairTracks {
            tx: 0,
            rx: 0,
            los: LosTrack {
                origin: Vec3::new(100.0, 0.0, 0.0),
                rate: Vec3::new(-10.0, 0.0, 0.0),
            },
            rays: (0..n).map(|i| track(i as f64)).collect(),
            power_decay_s: 60e-9,
        }
    }

    #[test]
    fn nlos_cir_counts_and_normalisation() {
        let p = pair(7);
        let taps = p.nlos_cir(0.2, FC);
        assert_eq!(taps.len(), 7);
        assert_abs_diff_eq!(taps.iter().map(RayTap::power).sum::<f64>(), 1.0, epsilon = 1e-12);
        for tap in &taps {
            assert!(tap.delay_s >= 0.0 && tap.amplitude >= 0.0);
        }
        let one = pair(1).nlos_cir(0.0, FC);
        assert_eq!(one[0].amplitude, 1.0);
        assert!(pair(0).nlos_cir(0.0, FC).is_empty());
        let cir = p.cir(0.2, FC, 3.0).unwrap();
        assert_abs_diff_eq!(cir.total_power(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn phasors_agree_with_taps() {
        let p = pair(5);
        let mut buf = Vec::new();
        let w = TAU * FC;
        p.nlos_phasors(0.3, w, &mut buf);
        let taps = p.nlos_cir(0.3, FC);
        for (x, tap) in buf.iter().zip(&taps) {
            let y = Complex64::from_polar(tap.amplitude, tap.phase_rad);
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-6);
        }
        let cir = p.cir(0.3, FC, 2.0).unwrap();
        let h = p.response(0.3, 0.0, FC, 2.0).unwrap();
        assert_abs_diff_eq!((transfer_function(&cir, 0.0) - h).norm(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn los_delay_rate() {
        let p = pair(0);
        let h = 1e-4;
        let rate = (p.los.delay(0.5 + h) - p.los.delay(0.5 - h)) / (2.0 * h);
        assert_relative_eq!(rate, -10.0 / SPEED_OF_LIGHT, max_relative = 1e-9);
    }

    #[test]
    fn doppler_matches_phase_increment() {
        // phase of e^{j2π f_c τ} advances by −2πνΔt for small Δt
        let r = track(3.0);
        let lam = SPEED_OF_LIGHT / FC;
        let (t, dt) = (0.4, 1e-7);
        let dphi = TAU * FC * (r.delay(t + dt) - r.delay(t));
        let nu = r.doppler_hz(t, lam);
        assert_relative_eq!(dphi, -TAU * nu * dt, max_relative = 1e-6);
    }

    #[test]
    fn shifted_tracks_match() {
        let p = pair(4);
        let s = p.shifted(0.75);
        for (a, b) in p.rays.iter().zip(&s.rays) {
            assert_relative_eq!(a.delay(1.0), b.delay(0.25), max_relative = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn powers_normalised(delays in proptest::collection::vec(0.0..5e-6f64, 1..50)) {
            let p = normalized_powers(&delays, 60e-9);
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
        }
    }
}
