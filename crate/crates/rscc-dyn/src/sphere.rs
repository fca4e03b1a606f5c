//! Points of the Riemann sphere and the chordal metric.

use num_complex::Complex64;
use std::fmt;

/// A point of the Riemann sphere: a finite complex number or the point at
/// infinity. Finite points always have finite components; constructors
/// saturate non-finite values to [`ExtendedComplex::Infinity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtendedComplex {
    pub fn finite(re: f64, im: f64) -> Self {
        Self::from_complex(Complex64::new(re, im))
    }

    /// Wraps a complex value, saturating overflow/NaN to infinity.
    pub fn from_complex(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            ExtendedComplex::Finite(z)
        } else {
            ExtendedComplex::Infinity
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedComplex::Infinity)
    }

    pub fn value(&self) -> Option<Complex64> {
        match self {
            ExtendedComplex::Finite(z) => Some(*z),
            ExtendedComplex::Infinity => None,
        }
    }

    /// Squared modulus; infinity maps to `f64::INFINITY`.
    pub fn norm_sqr(&self) -> f64 {
        match self {
            ExtendedComplex::Finite(z) => z.norm_sqr(),
            ExtendedComplex::Infinity => f64::INFINITY,
        }
    }
}

impl From<Complex64> for ExtendedComplex {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl fmt::Display for ExtendedComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedComplex::Finite(z) => write!(f, "{}+{}i", z.re, z.im),
            ExtendedComplex::Infinity => write!(f, "inf"),
        }
    }
}

/// Chordal metric on the sphere:
/// `d(z,w) = 2|z-w| / sqrt((1+|z|^2)(1+|w|^2))`, `d(z,inf) = 2/sqrt(1+|z|^2)`.
/// Symmetric, with range [0, 2]; antipodal points (e.g. 0 and inf) are at
/// distance 2.
pub fn spherical_distance(a: ExtendedComplex, b: ExtendedComplex) -> f64 {
    use ExtendedComplex::*;
    match (a, b) {
        (Infinity, Infinity) => 0.0,
        (Finite(z), Infinity) | (Infinity, Finite(z)) => 2.0 / (1.0 + z.norm_sqr()).sqrt(),
        (Finite(z), Finite(w)) => {
            let num = 2.0 * (z - w).norm();
            // take the square roots separately so the product cannot overflow
            num / ((1.0 + z.norm_sqr()).sqrt() * (1.0 + w.norm_sqr()).sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(re: f64, im: f64) -> ExtendedComplex {
        ExtendedComplex::finite(re, im)
    }

    #[test]
    fn antipodal_origin_and_infinity() {
        assert_eq!(spherical_distance(pt(0.0, 0.0), ExtendedComplex::Infinity), 2.0);
    }

    #[test]
    fn identity_is_zero() {
        let z = pt(0.3, -1.7);
        assert_eq!(spherical_distance(z, z), 0.0);
        assert_eq!(
            spherical_distance(ExtendedComplex::Infinity, ExtendedComplex::Infinity),
            0.0
        );
    }

    #[test]
    fn chordal_value_at_plus_minus_one() {
        // 2*|1-(-1)| / sqrt((1+1)(1+1)) = 4/2 = 2
        let d = spherical_distance(pt(1.0, 0.0), pt(-1.0, 0.0));
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn saturates_non_finite_values() {
        assert!(ExtendedComplex::finite(f64::INFINITY, 0.0).is_infinite());
        assert!(ExtendedComplex::finite(0.0, f64::NAN).is_infinite());
    }

    #[test]
    fn range_is_at_most_two() {
        let pts = [pt(1e8, 0.0), pt(-3.0, 4.0), pt(0.0, 0.0), ExtendedComplex::Infinity];
        for &a in &pts {
            for &b in &pts {
                let d = spherical_distance(a, b);
                assert!((0.0..=2.0 + 1e-12).contains(&d));
                assert_eq!(d, spherical_distance(b, a));
            }
        }
    }
}
