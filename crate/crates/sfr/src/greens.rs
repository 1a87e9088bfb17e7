//! Free-field Green's functions of the Helmholtz equation in 2D and 3D,
//! plus the boundary-normal derivative of the 2D kernel.
//!
//! Conventions: harmonic time dependence matching the outgoing Hankel
//! function of the first kind, so
//!
//! * 2D: `G(y, r) = -(i/4) H0_1(k d)`
//! * 3D: `G(y, r) = exp(i k d) / (4 pi d)`
//!
//! with `d = |r - y|`. The normal derivative is taken with respect to the
//! boundary point `y` along the outward normal `n`:
//!
//! `dG/dn_y = (i k / 4) H1_1(k d) ((y - r) . n) / d`
//!
//! which follows from `d/dz H0_1(z) = -H1_1(z)`; the sign convention is
//! pinned by a finite-difference property test.

use crate::special_math::{bessel_j0, bessel_j1, bessel_y0, bessel_y1, Complex64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Two points closer than this are treated as coincident (singular kernel).
pub const COINCIDENCE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum GreensError {
    /// Source and evaluation point closer than the coincidence threshold.
    CoincidentPoints { distance: f64 },
    /// Normal vector is not unit length.
    NotUnitLength { norm: f64 },
    /// Wavenumber must be finite and positive.
    InvalidWavenumber { value: f64 },
}

impl fmt::Display for GreensError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GreensError::CoincidentPoints { distance } => {
                write!(f, "singular evaluation: points coincide (distance {distance:e})")
            }
            GreensError::NotUnitLength { norm } => {
                write!(f, "normal vector is not unit length (norm {norm})")
            }
            GreensError::InvalidWavenumber { value } => {
                write!(f, "wavenumber must be positive and finite, got {value}")
            }
        }
    }
}

impl std::error::Error for GreensError {}

/// A point in the horizontal plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A point in 3D space, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance_to(&self, other: Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Unit-length direction in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVec2 {
    x: f64,
    y: f64,
}

impl UnitVec2 {
    /// Accepts components already unit length within 1e-12.
    pub fn new(x: f64, y: f64) -> Result<Self, GreensError> {
        let norm_sq = x * x + y * y;
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(GreensError::NotUnitLength { norm: norm_sq.sqrt() });
        }
        Ok(Self { x, y })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(x: f64, y: f64) -> Result<Self, GreensError> {
        let norm = x.hypot(y);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(GreensError::NotUnitLength { norm });
        }
        Ok(Self { x: x / norm, y: y / norm })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn flipped(&self) -> Self {
        Self { x: -self.x, y: -self.y }
    }
}

/// Spatial frequency k = omega / c = 2 pi f / c, rad/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavenumber(f64);

impl Wavenumber {
    pub fn new(k: f64) -> Result<Self, GreensError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(GreensError::InvalidWavenumber { value: k });
        }
        Ok(Self(k))
    }

    /// k for a temporal frequency in Hz at speed of sound c in m/s.
    pub fn from_frequency(freq_hz: f64, c: f64) -> Result<Self, GreensError> {
        Self::new(2.0 * PI * freq_hz / c)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// 2D free-field Green's function, -(i/4) H0_1(k |r - y|).
pub fn green_2d(y: Point2, r: Point2, k: Wavenumber) -> Result<Complex64, GreensError> {
    let d = y.distance_to(r);
    if d <= COINCIDENCE_THRESHOLD {
        return Err(GreensError::CoincidentPoints { distance: d });
    }
    let kd = k.value() * d;
    // -(i/4)(J0 + i Y0) = Y0/4 - i J0/4
    Ok(Complex64::new(0.25 * bessel_y0(kd), -0.25 * bessel_j0(kd)))
}

/// Derivative of `green_2d` with respect to the boundary point `y`, taken
/// along the direction `n`.
pub fn green_2d_normal_derivative(
    y: Point2,
    r: Point2,
    k: Wavenumber,
    n: UnitVec2,
) -> Result<Complex64, GreensError> {
    normal_derivative_raw(y, r, k, n.x(), n.y())
}

/// Same as `green_2d_normal_derivative` but without the unit-norm guarantee;
/// the result is linear in (nx, ny).
fn normal_derivative_raw(
    y: Point2,
    r: Point2,
    k: Wavenumber,
    nx: f64,
    ny: f64,
) -> Result<Complex64, GreensError> {
    let d = y.distance_to(r);
    if d <= COINCIDENCE_THRESHOLD {
        return Err(GreensError::CoincidentPoints { distance: d });
    }
    let kd = k.value() * d;
    let cos_angle = ((y.x - r.x) * nx + (y.y - r.y) * ny) / d;
    let scale = 0.25 * k.value() * cos_angle;
    // (i k c / 4)(J1 + i Y1) = -k c Y1 / 4 + i k c J1 / 4
    Ok(Complex64::new(-scale * bessel_y1(kd), scale * bessel_j1(kd)))
}

/// 3D free-field Green's function, exp(i k d) / (4 pi d).
pub fn green_3d(y: Point3, r: Point3, k: Wavenumber) -> Result<Complex64, GreensError> {
    let d = y.distance_to(r);
    if d <= COINCIDENCE_THRESHOLD {
        return Err(GreensError::CoincidentPoints { distance: d });
    }
    let kd = k.value() * d;
    let scale = 1.0 / (4.0 * PI * d);
    Ok(Complex64::new(scale * kd.cos(), scale * kd.sin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn green_2d_frozen_value_at_unit_distance() {
        let k = Wavenumber::new(1.0).unwrap();
        let g = green_2d(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), k).unwrap();
        assert!((g.re - 0.022_064_24).abs() < 1e-8, "re = {}", g.re);
        assert!((g.im - (-0.191_299_42)).abs() < 1e-8, "im = {}", g.im);
    }

    #[test]
    fn green_2d_reciprocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = Wavenumber::new(4.2).unwrap();
        for _ in 0..100 {
            let a = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let b = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if a.distance_to(b) < 1e-3 {
                continue;
            }
            assert_eq!(green_2d(a, b, k).unwrap(), green_2d(b, a, k).unwrap());
        }
    }

    #[test]
    fn coincident_points_error() {
        let k = Wavenumber::new(1.0).unwrap();
        let p = Point2::new(0.3, 0.4);
        assert!(matches!(
            green_2d(p, p, k),
            Err(GreensError::CoincidentPoints { .. })
        ));
        let n = UnitVec2::new(1.0, 0.0).unwrap();
        assert!(green_2d_normal_derivative(p, p, k, n).is_err());
        let q = Point3::new(1.0, 2.0, 3.0);
        assert!(green_3d(q, q, k).is_err());
    }

    #[test]
    fn normal_derivative_vanishes_for_perpendicular_normal() {
        let k = Wavenumber::new(3.0).unwrap();
        let y = Point2::new(1.0, 0.0);
        let r = Point2::new(0.0, 0.0);
        let n = UnitVec2::new(0.0, 1.0).unwrap(); // perpendicular to y - r
        let g = green_2d_normal_derivative(y, r, k, n).unwrap();
        assert_eq!(g, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn normal_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-6;
        for _ in 0..100 {
            let r = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let ang: f64 = rng.gen_range(0.0..2.0 * PI);
            let d = rng.gen_range(0.1..3.0);
            let y = Point2::new(r.x + d * ang.cos(), r.y + d * ang.sin());
            let k = Wavenumber::new(rng.gen_range(0.5..20.0)).unwrap();
            let nang: f64 = rng.gen_range(0.0..2.0 * PI);
            let n = UnitVec2::new(nang.cos(), nang.sin()).unwrap();

            let exact = green_2d_normal_derivative(y, r, k, n).unwrap();
            let plus = green_2d(Point2::new(y.x + h * n.x(), y.y + h * n.y()), r, k).unwrap();
            let minus = green_2d(Point2::new(y.x - h * n.x(), y.y - h * n.y()), r, k).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            assert!(
                (exact - fd).norm() < 1e-6,
                "exact {exact} vs fd {fd} (d = {d}, k = {})",
                k.value()
            );
        }
    }

    #[test]
    fn normal_derivative_flip_negates_exactly() {
        let k = Wavenumber::new(2.0).unwrap();
        let y = Point2::new(1.3, -0.2);
        let r = Point2::new(0.1, 0.5);
        let n = UnitVec2::normalized(0.6, -1.1).unwrap();
        let a = green_2d_normal_derivative(y, r, k, n).unwrap();
        let b = green_2d_normal_derivative(y, r, k, n.flipped()).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn normal_derivative_is_linear_in_direction() {
        let k = Wavenumber::new(5.0).unwrap();
        let y = Point2::new(0.9, 1.4);
        let r = Point2::new(0.0, 0.2);
        let (a1, b1) = (0.3, -0.8);
        let (a2, b2) = (1.7, 0.4);
        let (alpha, beta) = (2.5, -0.75);
        let f1 = normal_derivative_raw(y, r, k, a1, b1).unwrap();
        let f2 = normal_derivative_raw(y, r, k, a2, b2).unwrap();
        let combined =
            normal_derivative_raw(y, r, k, alpha * a1 + beta * a2, alpha * b1 + beta * b2).unwrap();
        assert!((combined - (alpha * f1 + beta * f2)).norm() < 1e-12);
    }

    #[test]
    fn green_2d_satisfies_helmholtz_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-4;
        for _ in 0..50 {
            let y = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let ang: f64 = rng.gen_range(0.0..2.0 * PI);
            let d = rng.gen_range(0.1..2.0);
            let r = Point2::new(y.x + d * ang.cos(), y.y + d * ang.sin());
            let k = Wavenumber::new(rng.gen_range(1.0..15.0)).unwrap();

            let g = |p: Point2| green_2d(y, p, k).unwrap();
            let center = g(r);
            let lap = (g(Point2::new(r.x + h, r.y))
                + g(Point2::new(r.x - h, r.y))
                + g(Point2::new(r.x, r.y + h))
                + g(Point2::new(r.x, r.y - h))
                - 4.0 * center)
                / (h * h);
            let residual = lap + k.value() * k.value() * center;
            let scale = k.value() * k.value() * center.norm();
            assert!(
                residual.norm() / scale < 1e-3,
                "relative Helmholtz residual {} at d = {d}, k = {}",
                residual.norm() / scale,
                k.value()
            );
        }
    }

    #[test]
    fn green_2d_magnitude_decays_with_distance() {
        let k = Wavenumber::new(5.0).unwrap();
        let y = Point2::new(0.0, 0.0);
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let d = 0.01 + 9.99 * i as f64 / 999.0;
            let g = green_2d(y, Point2::new(d, 0.0), k).unwrap();
            assert!(g.norm() < prev, "|G| not decreasing at d = {d}");
            prev = g.norm();
        }
    }

    #[test]
    fn green_3d_values() {
        let k = Wavenumber::new(2.7).unwrap();
        let g = green_3d(Point3::new(0.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), k).unwrap();
        assert!((g.norm() - 1.0 / (4.0 * PI)).abs() < 1e-12);

        // full-period phase: d = 2, k = pi
        let k = Wavenumber::new(PI).unwrap();
        let g = green_3d(Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0), k).unwrap();
        assert!((g.re - 1.0 / (8.0 * PI)).abs() < 1e-12);
        assert!(g.im.abs() < 1e-12);
    }

    #[test]
    fn wavenumber_rejects_nonpositive() {
        assert!(Wavenumber::new(0.0).is_err());
        assert!(Wavenumber::new(-1.0).is_err());
        assert!(Wavenumber::new(f64::NAN).is_err());
        assert!(Wavenumber::from_frequency(343.0, 343.0).is_ok());
    }

    #[test]
    fn unit_vec_validation() {
        assert!(UnitVec2::new(1.0, 0.0).is_ok());
        assert!(UnitVec2::new(0.5, 0.5).is_err());
        let v = UnitVec2::normalized(3.0, 4.0).unwrap();
        assert!((v.x() - 0.6).abs() < 1e-15);
        assert!((v.y() - 0.8).abs() < 1e-15);
    }
}
