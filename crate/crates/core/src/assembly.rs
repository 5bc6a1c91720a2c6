//! End-to-end channel: IRS cascade, direct link and BS steering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::irs::{steering_vector, PhasePlan, SteeringVector};
use crate::scenario::{LargeScaleFactors, Link, Realization, Scenario};

/// Sub-channel transfer functions at one `(t, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelResponses {
    /// `M_B × M_xy`, entry `(q, r)`.
    pub bi: DMatrix<Complex64>,
    /// `M_xy × M_U`, entry `(r, p)`.
    pub iu: DMatrix<Complex64>,
    /// `M_B × M_U`, entry `(q, p)`.
    pub bu: Option<DMatrix<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndChannel {
    pub t: f64,
    pub f: f64,
    /// `M_U × M_B`, entry `(p, q)`.
    pub h: DMatrix<Complex64>,
    /// IRS-assisted part of `h`, large-scale factor applied.
    pub cascade: DMatrix<Complex64>,
    /// Direct part of `h`, large-scale factor applied.
    pub direct: Option<DMatrix<Complex64>>,
    pub large_scale: LargeScaleFactors,
}

/// `h_qp = a_BU h_qp,BU + a_BIU Σ_r h_qr,BI h_rp,IU Γ_r`, returned as the
/// `M_U × M_B` matrix.
pub fn cascade(
    t: f64,
    f: f64,
    sub: &SubchannelResponses,
    reflection: &[Complex64],
    include_direct: bool,
    large_scale: Option<&LargeScaleFactors>,
) -> Result<EndToEndChannel> {
    let (mb, mxy) = sub.bi.shape();
    let (mxy2, mu) = sub.iu.shape();
    if mxy != mxy2 || reflection.len() != mxy {
        return Err(Error::domain(format!(
            "dimension mismatch: BI {mb}x{mxy}, IU {mxy2}x{mu}, {} reflection factors",
            reflection.len()
        )));
    }
    let ls = large_scale.copied().unwrap_or(LargeScaleFactors::UNIT);
    let mut cascade = DMatrix::<Complex64>::zeros(mu, mb);
    for p in 0..mu {
        for q in 0..mb {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..mxy {
                acc += sub.bi[(q, r)] * sub.iu[(r, p)] * reflection[r];
            }
            cascade[(p, q)] = acc * ls.cascade_amplitude();
        }
    }
    let direct = if include_direct {
        let bu = sub
            .bu
            .as_ref()
            .ok_or_else(|| Error::domain("direct link requested but not provided"))?;
        if bu.shape() != (mb, mu) {
            return Err(Error::domain("BU dimensions disagree with BI/IU"));
        }
        Some(bu.transpose() * Complex64::new(ls.direct_amplitude(), 0.0))
    } else {
        None
    };
    let h = match &direct {
        Some(d) => &cascade + d,
        None => cascade.clone(),
    };
    Ok(EndToEndChannel {
        t,
        f,
        h,
        cascade,
        direct,
        large_scale: ls,
    })
}

/// `H f` for a steering vector `f`.
pub fn apply_steering(h: &DMatrix<Complex64>, f: &SteeringVector) -> Result<DVector<Complex64>> {
    if h.ncols() != f.coefficients.len() {
        return Err(Error::domain(format!(
            "channel has {} columns, steering vector {} entries",
            h.ncols(),
            f.coefficients.len()
        )));
    }
    Ok(h * DVector::from_column_slice(&f.coefficients))
}

/// Sub-channel responses of every element pair in a realisation.
pub fn subchannel_responses(
    scenario: &Scenario,
    realization: &Realization,
    t: f64,
    f: f64,
    include_direct: bool,
) -> Result<SubchannelResponses> {
    let fill = |link: Link| -> Result<DMatrix<Complex64>> {
        let lr = realization.link(link)?;
        let (n_tx, n_rx) = scenario.link_dims(link);
        let mut m = DMatrix::zeros(n_tx, n_rx);
        for i in 0..n_tx {
            for j in 0..n_rx {
                m[(i, j)] = scenario.response(lr, i, j, t, f)?;
            }
        }
        Ok(m)
    };
    Ok(SubchannelResponses {
        bi: fill(Link::Bi)?,
        iu: fill(Link::Iu)?,
        bu: if include_direct { Some(fill(Link::Bu)?) } else { None },
    })
}

/// End-to-end channel of one realisation at `(t, f)` under `plan`.
pub fn channel_at(
    scenario: &Scenario,
    realization: &Realization,
    t: f64,
    f: f64,
    plan: &PhasePlan,
    include_direct: bool,
    large_scale: Option<&LargeScaleFactors>,
) -> Result<EndToEndChannel> {
    let sub = subchannel_responses(scenario, realization, t, f, include_direct)?;
    cascade(t, f, &sub, &plan.reflection(), include_direct, large_scale)
}

/// Steering vector toward the IRS centre at time `t`.
pub fn steering_at(scenario: &Scenario, t: f64) -> Result<SteeringVector> {
    let (el, az) = scenario.steering_direction(t);
    let s = scenario.steering();
    steering_vector(scenario.bs(), el, az, s.doppler_hz, t, scenario.wavelength(), &s.reference)
}
