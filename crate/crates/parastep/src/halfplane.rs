//! Geometry of the upper half-plane ℍ = {z : Im z > 0}.
//!
//! Points, the pseudo-hyperbolic and hyperbolic distances, and the Cayley
//! transfer to the unit disk used for cross-checks. Everything here is a
//! pure function of immutable values.

use num_complex::Complex64;
use thiserror::Error;

/// Smallest admissible imaginary part; below this a point is treated as a
/// boundary point and rejected rather than silently underflowing.
pub const MIN_IMAG: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum PointError {
    #[error("point is not in the open upper half-plane (y = {0})")]
    NotInUpperHalfPlane(f64),
    #[error("coordinate is not finite")]
    NotFinite,
}

/// A point of the open upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    x: f64,
    y: f64,
}

impl HPoint {
    /// Builds a point, rejecting non-finite coordinates and `y < MIN_IMAG`.
    pub fn new(x: f64, y: f64) -> Result<Self, PointError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(PointError::NotFinite);
        }
        if y < MIN_IMAG {
            return Err(PointError::NotInUpperHalfPlane(y));
        }
        Ok(Self { x, y })
    }

    /// The base point i.
    pub fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Result<Self, PointError> {
        Self::new(z.re, z.im)
    }

    /// arg z, in (0, π) for points of ℍ.
    pub fn arg(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn abs(&self) -> f64 {
        self.to_complex().norm()
    }
}

impl std::fmt::Display for HPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}i", self.x, self.y)
    }
}

/// A possibly infinite nonnegative quantity, used for moment integrals that
/// may diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PositiveInfinity,
}

impl ExtendedReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(*v),
            ExtendedReal::PositiveInfinity => None,
        }
    }
}

impl std::fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PositiveInfinity => write!(f, "inf"),
        }
    }
}

/// Pseudo-hyperbolic distance on ℍ: ρ(z, w) = |z − w| / |z − w̄|.
///
/// Lies in [0, 1), vanishes iff z = w, and is invariant under Möbius
/// self-maps of ℍ.
pub fn pseudo_hyperbolic(z: HPoint, w: HPoint) -> f64 {
    let a = z.to_complex();
    let b = w.to_complex();
    let num = (a - b).norm();
    let den = (a - b.conj()).norm();
    num / den
}

/// Hyperbolic distance, the monotone transform arctanh ρ. Reporting only.
pub fn hyperbolic_distance(z: HPoint, w: HPoint) -> f64 {
    pseudo_hyperbolic(z, w).atanh()
}

/// Cayley transfer ℍ → 𝔻, fixed as z ↦ (z − i)/(z + i).
pub fn cayley_to_disk(z: HPoint) -> Complex64 {
    let z = z.to_complex();
    let i = Complex64::new(0.0, 1.0);
    (z - i) / (z + i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> HPoint {
        HPoint::new(x, y).unwrap()
    }

    #[test]
    fn constructor_rejects_boundary_and_nan() {
        assert!(HPoint::new(0.0, 0.0).is_err());
        assert!(HPoint::new(0.0, -1.0).is_err());
        assert!(HPoint::new(0.0, 1e-301).is_err());
        assert!(HPoint::new(f64::NAN, 1.0).is_err());
        assert!(HPoint::new(0.0, f64::INFINITY).is_err());
        assert!(HPoint::new(5.0, 1e-299).is_ok());
    }

    #[test]
    fn pseudo_hyperbolic_identities() {
        assert_eq!(pseudo_hyperbolic(p(0.0, 1.0), p(0.0, 1.0)), 0.0);
        assert!((pseudo_hyperbolic(p(0.0, 1.0), p(0.0, 2.0)) - 1.0 / 3.0).abs() < 1e-15);
        let r = pseudo_hyperbolic(p(1.0, 1.0), p(2.0, 1.0));
        assert!((r - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_distance_values() {
        assert_eq!(hyperbolic_distance(p(0.0, 1.0), p(0.0, 1.0)), 0.0);
        let d = hyperbolic_distance(p(0.0, 1.0), p(0.0, 2.0));
        assert!((d - (1.0f64 / 3.0).atanh()).abs() < 1e-15);
        assert_eq!(hyperbolic_distance(p(5.0, 1.0), p(5.0, 1.0)), 0.0);
    }

    #[test]
    fn cayley_pins() {
        let c = cayley_to_disk(p(0.0, 1.0));
        assert!(c.norm() < 1e-15);
        let c = cayley_to_disk(p(0.0, 2.0));
        assert!((c - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let c = cayley_to_disk(p(1.0, 1.0));
        assert!((c - Complex64::new(0.2, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn symmetry() {
        let (a, b) = (p(0.3, 0.7), p(-2.0, 5.0));
        assert_eq!(pseudo_hyperbolic(a, b), pseudo_hyperbolic(b, a));
    }
}
