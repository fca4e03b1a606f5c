//! Complex polynomials, Horner evaluation, and certified escape radii.

use crate::error::Error;
use crate::sphere::ExtendedComplex;
use num_complex::Complex64;

/// A non-constant polynomial with complex coefficients, stored in ascending
/// degree order (`coeffs[k]` multiplies `z^k`). The leading coefficient is
/// nonzero and every coefficient is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, Error> {
        if coeffs.len() < 2 {
            return Err(Error::Degree("polynomial must have degree >= 1".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Param("polynomial coefficients must be finite".into()));
        }
        let lead = coeffs[coeffs.len() - 1];
        if lead.norm_sqr() == 0.0 {
            return Err(Error::Degree("leading coefficient must be nonzero".into()));
        }
        Ok(Polynomial { coeffs })
    }

    /// Convenience constructor from real coefficients, ascending degree.
    pub fn from_real(coeffs: &[f64]) -> Result<Self, Error> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Horner evaluation on the finite plane. May return non-finite values on
    /// overflow; callers that need sphere semantics use [`Polynomial::eval`].
    #[inline]
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        let mut acc = self.coeffs[self.coeffs.len() - 1];
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * z + c;
        }
        acc
    }

    /// Total evaluation on the sphere: a polynomial of degree >= 1 fixes
    /// infinity, and finite results that overflow the float range saturate to
    /// infinity.
    pub fn eval(&self, z: ExtendedComplex) -> ExtendedComplex {
        match z {
            ExtendedComplex::Infinity => ExtendedComplex::Infinity,
            ExtendedComplex::Finite(z) => ExtendedComplex::from_complex(self.eval_complex(z)),
        }
    }
}

/// Growth margin at radius `r`: `|a_d| r - sum_{k<d} |a_k| r^{k+1-d}`.
///
/// For `r >= 1` this is strictly increasing, and `margin(r) >= g` implies
/// `|h(z)| >= g |z|` for every `|z| >= r` via the coefficient bound
/// `|h(z)| >= |a_d||z|^d - sum_{k<d} |a_k||z|^k`.
fn growth_margin(p: &Polynomial, r: f64) -> f64 {
    let d = p.degree();
    let mut m = p.coeffs()[d].norm() * r;
    for k in 0..d {
        m -= p.coeffs()[k].norm() * r.powi(k as i32 + 1 - d as i32);
    }
    m
}

/// Smallest radius `R >= 1` (up to bisection accuracy, rounded upward so the
/// certificate holds) such that every polynomial in the family satisfies
/// `|h(z)| >= growth * |z|` for all `|z| >= R`. Consequently
/// `U = {|z| > R} ∪ {inf}` is forward invariant for the whole family and
/// entering `U` certifies escape to infinity.
///
/// Uses the conservative coefficient bound above (doubling then bisection on a
/// monotone margin); over-estimating `R` only delays escape certification.
pub fn escape_radius(polys: &[Polynomial], growth: f64) -> Result<f64, Error> {
    if !(growth > 1.0) {
        return Err(Error::Param(format!("growth factor must exceed 1, got {growth}")));
    }
    if polys.is_empty() {
        return Err(Error::Param("escape radius needs at least one polynomial".into()));
    }
    let mut family_r: f64 = 1.0;
    for p in polys {
        if p.degree() < 2 {
            return Err(Error::Degree(format!(
                "escape radius requires degree >= 2, got degree {}",
                p.degree()
            )));
        }
        let r = if growth_margin(p, 1.0) >= growth {
            1.0
        } else {
            let mut hi = 2.0;
            while growth_margin(p, hi) < growth {
                hi *= 2.0;
            }
            let mut lo = hi / 2.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if growth_margin(p, mid) >= growth {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        family_r = family_r.max(r);
    }
    Ok(family_r)
}
