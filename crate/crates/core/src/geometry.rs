//! Array element placement, IRS index mapping and coordinate rotation.
//!
//! World frame: origin at BS element 1 at `t = 0`. The IRS centre sits at
//! `D_BI`, USER element 1 at `D_BU = D_BI + D_IU`. BS and USER element offsets
//! are measured from their first element, IRS offsets from the panel centre.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Wrap an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land exactly on 2π for tiny negative inputs
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Unit vector for an azimuth/elevation pair.
pub fn direction(azimuth: f64, elevation: f64) -> Vec3 {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

/// Horizontal velocity vector; all motion in the model is planar.
pub fn velocity_2d(speed_mps: f64, azimuth: f64) -> Vec3 {
    let (s, c) = azimuth.sin_cos();
    Vec3::new(speed_mps * c, speed_mps * s, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalKind {
    Bs,
    User,
    Irs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearArray {
    pub elements: usize,
    pub spacing_m: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarArray {
    pub mx: usize,
    pub my: usize,
    pub spacing_x_m: f64,
    pub spacing_y_m: f64,
    pub azimuth_x: f64,
    pub elevation_x: f64,
    pub azimuth_y: f64,
    pub elevation_y: f64,
}

impl PlanarArray {
    /// `l_X`: spacing-scaled unit vector along the first panel axis.
    pub fn axis_x(&self) -> Vec3 {
        self.spacing_x_m * direction(self.azimuth_x, self.elevation_x)
    }

    /// `l_Y`: spacing-scaled unit vector along the second panel axis.
    pub fn axis_y(&self) -> Vec3 {
        self.spacing_y_m * direction(self.azimuth_y, self.elevation_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrayShape {
    Linear(LinearArray),
    Planar(PlanarArray),
}

/// Element layout of one terminal. BS and USER are uniform linear arrays,
/// the IRS a uniform planar array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalLayout {
    kind: TerminalKind,
    shape: ArrayShape,
}

fn check_spacing(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

impl TerminalLayout {
    fn linear(kind: TerminalKind, mut a: LinearArray) -> Result<Self> {
        if a.elements == 0 {
            return Err(Error::domain("array needs at least one element"));
        }
        check_spacing("element spacing", a.spacing_m)?;
        a.azimuth = wrap_angle(a.azimuth);
        a.elevation = wrap_angle(a.elevation);
        Ok(Self {
            kind,
            shape: ArrayShape::Linear(a),
        })
    }

    pub fn bs(a: LinearArray) -> Result<Self> {
        Self::linear(TerminalKind::Bs, a)
    }

    pub fn user(a: LinearArray) -> Result<Self> {
        Self::linear(TerminalKind::User, a)
    }

    pub fn irs(mut a: PlanarArray) -> Result<Self> {
        if a.mx == 0 || a.my == 0 {
            return Err(Error::domain("IRS needs at least one element per axis"));
        }
        check_spacing("IRS x spacing", a.spacing_x_m)?;
        check_spacing("IRS y spacing", a.spacing_y_m)?;
        a.azimuth_x = wrap_angle(a.azimuth_x);
        a.elevation_x = wrap_angle(a.elevation_x);
        a.azimuth_y = wrap_angle(a.azimuth_y);
        a.elevation_y = wrap_angle(a.elevation_y);
        Ok(Self {
            kind: TerminalKind::Irs,
            shape: ArrayShape::Planar(a),
        })
    }

    pub fn kind(&self) -> TerminalKind {
        self.kind
    }

    pub fn shape(&self) -> &ArrayShape {
        &self.shape
    }

    pub fn planar(&self) -> Option<&PlanarArray> {
        match &self.shape {
            ArrayShape::Planar(p) => Some(p),
            ArrayShape::Linear(_) => None,
        }
    }

    pub fn linear_array(&self) -> Option<&LinearArray> {
        match &self.shape {
            ArrayShape::Linear(l) => Some(l),
            ArrayShape::Planar(_) => None,
        }
    }

    pub fn element_count(&self) -> usize {
        match &self.shape {
            ArrayShape::Linear(a) => a.elements,
            ArrayShape::Planar(p) => p.mx * p.my,
        }
    }

    /// Offset of element `index` (1-based) from the terminal reference point:
    /// the first element for linear arrays, the panel centre for the IRS.
    pub fn element_offset(&self, index: usize) -> Result<Vec3> {
        let n = self.element_count();
        if index == 0 || index > n {
            return Err(Error::domain(format!(
                "element index {index} outside 1..={n}"
            )));
        }
        Ok(match &self.shape {
            ArrayShape::Linear(a) => {
                (index - 1) as f64 * a.spacing_m * direction(a.azimuth, a.elevation)
            }
            ArrayShape::Planar(p) => {
                let (x, y) = unflatten_index(index, p.mx, p.my)?;
                let wx = (p.mx as f64 + 1.0) / 2.0 - x as f64;
                let wy = y as f64 - (p.my as f64 + 1.0) / 2.0;
                wx * p.axis_x() + wy * p.axis_y()
            }
        })
    }

    /// All element offsets in flat-index order (0-based position `i` holds
    /// element `i + 1`).
    pub fn offsets(&self) -> Vec<Vec3> {
        (1..=self.element_count())
            .map(|i| self.element_offset(i).expect("index in range"))
            .collect()
    }
}

/// Row-major flat index of IRS element `(x, y)`; all indices 1-based.
pub fn flatten_index(x: usize, y: usize, my: usize) -> Result<usize> {
    if x == 0 || y == 0 || y > my {
        return Err(Error::domain(format!(
            "element ({x}, {y}) invalid for {my} columns"
        )));
    }
    Ok((x - 1) * my + y)
}

/// Inverse of [`flatten_index`]. Uses `x = ⌈r / M_y⌉`, which stays correct
/// on the last column where a plain `r mod M_y` would give `y = 0`.
pub fn unflatten_index(r: usize, mx: usize, my: usize) -> Result<(usize, usize)> {
    if my == 0 || r == 0 || r > mx * my {
        return Err(Error::domain(format!(
            "flat index {r} outside 1..={}",
            mx * my
        )));
    }
    let x = r.div_ceil(my);
    let y = r - (x - 1) * my;
    Ok((x, y))
}

/// The three inter-terminal vectors. `D_BU = D_BI + D_IU` holds bit-exactly
/// for the stored values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneGeometry {
    d_bi: Vec3,
    d_iu: Vec3,
    d_bu: Vec3,
}

impl SceneGeometry {
    pub fn from_bi_iu(d_bi: Vec3, d_iu: Vec3) -> Self {
        Self {
            d_bi,
            d_iu,
            d_bu: d_bi + d_iu,
        }
    }

    /// Derives `D_IU = D_BU - D_BI`, then stores `D_BU` as the recomputed sum.
    pub fn from_bi_bu(d_bi: Vec3, d_bu: Vec3) -> Self {
        Self::from_bi_iu(d_bi, d_bu - d_bi)
    }

    pub fn from_iu_bu(d_iu: Vec3, d_bu: Vec3) -> Self {
        Self::from_bi_iu(d_bu - d_iu, d_iu)
    }

    /// BS element 1 to IRS centre.
    pub fn d_bi(&self) -> Vec3 {
        self.d_bi
    }

    /// IRS centre to USER element 1.
    pub fn d_iu(&self) -> Vec3 {
        self.d_iu
    }

    /// BS element 1 to USER element 1.
    pub fn d_bu(&self) -> Vec3 {
        self.d_bu
    }
}

/// Bearing (α), downtilt (β) and slant (γ) angles of a local frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotationAngles {
    pub bearing: f64,
    pub downtilt: f64,
    pub slant: f64,
}

/// `R = R_z(α) R_y(β) R_x(γ)`.
pub fn rotation_matrix(angles: &RotationAngles) -> Mat3 {
    let (sa, ca) = angles.bearing.sin_cos();
    let (sb, cb) = angles.downtilt.sin_cos();
    let (sg, cg) = angles.slant.sin_cos();
    let rz = Mat3::new(ca, -sa, 0.0, sa, ca, 0.0, 0.0, 0.0, 1.0);
    let ry = Mat3::new(cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb);
    let rx = Mat3::new(1.0, 0.0, 0.0, 0.0, cg, -sg, 0.0, sg, cg);
    rz * ry * rx
}

/// Local (cluster-centred) to global coordinates. The row-vector relation
/// `[x', y', z'] = [x, y, z] R` maps global to local, so the inverse is
/// `p_gcs = origin + R p_lcs`.
pub fn lcs_to_gcs(point_lcs: &Vec3, angles: &RotationAngles, origin_gcs: &Vec3) -> Vec3 {
    origin_gcs + rotation_matrix(angles) * point_lcs
}

pub fn gcs_to_lcs(point_gcs: &Vec3, angles: &RotationAngles, origin_gcs: &Vec3) -> Vec3 {
    rotation_matrix(angles).transpose() * (point_gcs - origin_gcs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bs(n: usize, spacing: f64, az: f64, el: f64) -> TerminalLayout {
        TerminalLayout::bs(LinearArray {
            elements: n,
            spacing_m: spacing,
            azimuth: az,
            elevation: el,
        })
        .unwrap()
    }

    fn irs(mx: usize, my: usize) -> TerminalLayout {
        TerminalLayout::irs(PlanarArray {
            mx,
            my,
            spacing_x_m: 0.01,
            spacing_y_m: 0.02,
            azimuth_x: 0.3,
            elevation_x: 0.2,
            azimuth_y: 1.4,
            elevation_y: -0.5,
        })
        .unwrap()
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(flatten_index(1, 1, 4).unwrap(), 1);
        assert_eq!(flatten_index(2, 3, 4).unwrap(), 7);
        assert_eq!(flatten_index(3, 4, 4).unwrap(), 12);
        assert!(flatten_index(0, 1, 4).is_err());
        assert!(flatten_index(1, 5, 4).is_err());
    }

    #[test]
    fn unflatten_examples() {
        assert_eq!(unflatten_index(1, 4, 4).unwrap(), (1, 1));
        assert_eq!(unflatten_index(7, 4, 4).unwrap(), (2, 3));
        // last column: a literal `r mod M_y` would give y = 0 here
        assert_eq!(unflatten_index(8, 4, 4).unwrap(), (2, 4));
        assert!(unflatten_index(0, 4, 4).is_err());
        assert!(unflatten_index(17, 4, 4).is_err());
    }

    #[test]
    fn index_round_trip_exhaustive() {
        for mx in 1..=16 {
            for my in 1..=16 {
                for x in 1..=mx {
                    for y in 1..=my {
                        let r = flatten_index(x, y, my).unwrap();
                        assert!(r >= 1 && r <= mx * my);
                        assert_eq!(unflatten_index(r, mx, my).unwrap(), (x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn element_offset_examples() {
        let b = bs(4, 0.5, 0.7, -0.3);
        assert_eq!(b.element_offset(1).unwrap(), Vec3::zeros());
        let b0 = bs(2, 0.5, 0.0, 0.0);
        assert_abs_diff_eq!(b0.element_offset(2).unwrap(), Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        let c = irs(3, 3);
        let r = flatten_index(2, 2, 3).unwrap();
        assert_abs_diff_eq!(c.element_offset(r).unwrap(), Vec3::zeros(), epsilon = 1e-15);
        assert!(c.element_offset(0).is_err());
        assert!(c.element_offset(10).is_err());
    }

    #[test]
    fn linear_offset_norms() {
        let b = bs(8, 0.37, 1.1, 0.4);
        for q in 1..=8 {
            let n = b.element_offset(q).unwrap().norm();
            assert_abs_diff_eq!(n, (q - 1) as f64 * 0.37, epsilon = 1e-12);
        }
    }

    #[test]
    fn irs_axis_steps() {
        let c = irs(4, 5);
        let p = *c.planar().unwrap();
        // one step along x (decreasing weight) and along y
        let a = c.element_offset(flatten_index(1, 1, 5).unwrap()).unwrap();
        let bx = c.element_offset(flatten_index(2, 1, 5).unwrap()).unwrap();
        let by = c.element_offset(flatten_index(1, 2, 5).unwrap()).unwrap();
        assert_abs_diff_eq!((a - bx).norm(), p.spacing_x_m, epsilon = 1e-12);
        assert_abs_diff_eq!((by - a).norm(), p.spacing_y_m, epsilon = 1e-12);
    }

    #[test]
    fn invalid_layouts() {
        assert!(TerminalLayout::bs(LinearArray {
            elements: 0,
            spacing_m: 1.0,
            azimuth: 0.0,
            elevation: 0.0
        })
        .is_err());
        assert!(TerminalLayout::user(LinearArray {
            elements: 2,
            spacing_m: 0.0,
            azimuth: 0.0,
            elevation: 0.0
        })
        .is_err());
    }

    #[test]
    fn angles_are_wrapped() {
        let b = bs(2, 1.0, 3.0 * PI, -3.5 * PI);
        let a = b.linear_array().unwrap();
        assert!(a.azimuth >= -PI && a.azimuth < PI);
        assert!(a.elevation >= -PI && a.elevation < PI);
        assert_abs_diff_eq!(wrap_angle(PI), -PI, epsilon = 1e-15);
    }

    #[test]
    fn scene_sum_is_exact() {
        let g = SceneGeometry::from_bi_bu(Vec3::new(0.1, 100.3, 7.0), Vec3::new(200.7, 0.2, 1.5));
        assert_eq!(g.d_bu(), g.d_bi() + g.d_iu());
        let g = SceneGeometry::from_iu_bu(Vec3::new(0.1, -3.0, 7.0), Vec3::new(0.3, 0.2, 0.1));
        assert_eq!(g.d_bu(), g.d_bi() + g.d_iu());
    }

    #[test]
    fn rotation_examples() {
        assert_abs_diff_eq!(rotation_matrix(&RotationAngles::default()), Mat3::identity(), epsilon = 1e-15);
        let r = rotation_matrix(&RotationAngles {
            bearing: PI / 2.0,
            downtilt: 0.0,
            slant: 0.0,
        });
        let expect = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(r, expect, epsilon = 1e-15);
    }

    #[test]
    fn lcs_examples() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(lcs_to_gcs(&p, &RotationAngles::default(), &Vec3::zeros()), p);
        let a = RotationAngles {
            bearing: PI / 2.0,
            downtilt: 0.0,
            slant: 0.0,
        };
        let out = lcs_to_gcs(&Vec3::new(1.0, 0.0, 0.0), &a, &Vec3::zeros());
        // direct 3x3 multiply oracle
        let m = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let v = [1.0, 0.0, 0.0];
        let oracle: Vec<f64> = m
            .iter()
            .map(|row| row.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect();
        assert_abs_diff_eq!(out, Vec3::new(oracle[0], oracle[1], oracle[2]), epsilon = 1e-15);
        assert_abs_diff_eq!(out, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn rotation_is_orthonormal(a in -PI..PI, b in -PI..PI, g in -PI..PI) {
            let r = rotation_matrix(&RotationAngles { bearing: a, downtilt: b, slant: g });
            let e = r.transpose() * r - Mat3::identity();
            prop_assert!(e.abs().max() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn lcs_round_trip(a in -PI..PI, b in -PI..PI, g in -PI..PI,
                          x in -100.0..100.0f64, y in -100.0..100.0f64, z in -100.0..100.0f64,
                          ox in -50.0..50.0f64, oy in -50.0..50.0f64, oz in -50.0..50.0f64) {
            let ang = RotationAngles { bearing: a, downtilt: b, slant: g };
            let o = Vec3::new(ox, oy, oz);
            let p = Vec3::new(x, y, z);
            let back = gcs_to_lcs(&lcs_to_gcs(&p, &ang, &o), &ang, &o);
            prop_assert!((back - p).abs().max() < 1e-12);
        }
    }
}
