//! Built-in example systems and their closed-form oracles.
//!
//! The oracles live here, apart from the estimators they validate, so
//! verification never shares a code path with the machinery under test.

use crate::error::Error;
use crate::poly::Polynomial;
use crate::rscc::{FiniteMeasureOnPoly, RsccModel, State, StateSpace};
use crate::sphere::ExtendedComplex;
use std::sync::Arc;

/// Parameters of the built-in systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleSpec {
    /// Reinforcement state update `u(p, x) = (1-alpha) p + alpha x` on
    /// `W = [0, 1]` with `P(p, {1}) = p`; maps `z^2` and `z^2/2`.
    Reinforcement { alpha: f64 },
    /// Same dynamics truncated to `W = [eps, 1-eps]` (update clamped), which
    /// keeps both indices uniformly admissible.
    Truncated { alpha: f64, epsilon: f64 },
    /// Two-regime model on `W = [0,1] x {0,1}`: component 0 iterates `z^2`,
    /// component 1 iterates `(z-3)^2 + 3`; both components are stochastically
    /// closed.
    TwoComponent,
}

impl ExampleSpec {
    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            ExampleSpec::Reinforcement { alpha } => {
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::Param(format!("alpha must lie in [0, 1), got {alpha}")));
                }
            }
            ExampleSpec::Truncated { alpha, epsilon } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Param(format!("alpha must lie in (0, 1), got {alpha}")));
                }
                if !(epsilon > 0.0 && epsilon < 0.5) {
                    return Err(Error::Param(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
                }
            }
            ExampleSpec::TwoComponent => {}
        }
        Ok(())
    }
}

pub fn poly_square() -> Polynomial {
    Polynomial::from_real(&[0.0, 0.0, 1.0]).unwrap()
}

pub fn poly_half_square() -> Polynomial {
    Polynomial::from_real(&[0.0, 0.0, 0.5]).unwrap()
}

/// `(z-3)^2 + 3 = z^2 - 6z + 12`; fixes 3.
pub fn poly_shifted_square() -> Polynomial {
    Polynomial::from_real(&[12.0, -6.0, 1.0]).unwrap()
}

/// Builds the requested example system.
pub fn build_example(spec: &ExampleSpec) -> Result<RsccModel, Error> {
    spec.validate()?;
    match *spec {
        ExampleSpec::Reinforcement { alpha } => RsccModel::new(
            StateSpace::Interval { lo: 0.0, hi: 1.0 },
            2,
            Arc::new(move |w: State, x: usize| {
                let c = (1.0 - alpha) * w.coord + alpha * x as f64;
                State::new(c.clamp(0.0, 1.0))
            }),
            Arc::new(|w: State, buf: &mut [f64]| {
                buf[1] = w.coord;
                buf[0] = 1.0 - w.coord;
            }),
            vec![
                FiniteMeasureOnPoly::dirac(poly_square()),
                FiniteMeasureOnPoly::dirac(poly_half_square()),
            ],
        ),
        ExampleSpec::Truncated { alpha, epsilon } => RsccModel::new(
            StateSpace::Interval { lo: epsilon, hi: 1.0 - epsilon },
            2,
            Arc::new(move |w: State, x: usize| {
                let c = (1.0 - alpha) * w.coord + alpha * x as f64;
                State::new(c.clamp(epsilon, 1.0 - epsilon))
            }),
            Arc::new(|w: State, buf: &mut [f64]| {
                buf[1] = w.coord;
                buf[0] = 1.0 - w.coord;
            }),
            vec![
                FiniteMeasureOnPoly::dirac(poly_square()),
                FiniteMeasureOnPoly::dirac(poly_half_square()),
            ],
        ),
        ExampleSpec::TwoComponent => RsccModel::new(
            StateSpace::IntervalTimesBit { lo: 0.0, hi: 1.0 },
            4,
            // Indices 0/1 keep the component bit; indices 2/3 land in
            // component 1, so each component is stochastically closed under
            // its own admissible indices.
            Arc::new(|w: State, x: usize| {
                let half = (w.coord / 2.0).clamp(0.0, 1.0);
                let upper = ((w.coord + 1.0) / 2.0).clamp(0.0, 1.0);
                match x {
                    0 => State::with_bit(half, w.bit),
                    1 => State::with_bit(upper, w.bit),
                    2 => State::with_bit(half, 1),
                    _ => State::with_bit(upper, 1),
                }
            }),
            Arc::new(|w: State, buf: &mut [f64]| {
                if w.bit == 0 {
                    buf.copy_from_slice(&[0.5, 0.5, 0.0, 0.0]);
                } else {
                    buf.copy_from_slice(&[0.0, 0.0, 0.5, 0.5]);
                }
            }),
            vec![
                FiniteMeasureOnPoly::dirac(poly_square()),
                FiniteMeasureOnPoly::dirac(poly_square()),
                FiniteMeasureOnPoly::dirac(poly_shifted_square()),
                FiniteMeasureOnPoly::dirac(poly_shifted_square()),
            ],
        ),
    }
}

/// Closed-form escape value of the reinforcement model at `z = 2`.
///
/// The point 2 is fixed by `z^2/2` and escapes as soon as index 0 is ever
/// selected, so the escape probability is one minus the product of the
/// conditional index-1 probabilities `p_1 = p`, `p_{n+1} = (1-alpha) p_n +
/// alpha`, i.e. `1 - prod_{n>=0} (1 - (1-alpha)^n (1-p))`. The product is
/// truncated once the factor deficit drops below 1e-15. Strictly decreasing
/// in `p`, valued in (0, 1).
pub fn reinforcement_escape_value_at_two(alpha: f64, p: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
    let mut prod = 1.0;
    let mut pn = p;
    while 1.0 - pn >= 1e-15 {
        prod *= pn;
        pn = (1.0 - alpha) * pn + alpha;
    }
    1.0 - prod
}

/// A closed-form statewise escape value, where one is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleValue {
    Zero,
    One,
    Value(f64),
    /// The region where no closed form is available (the annulus
    /// `1 < |z| <= 2` at interior states away from `z = 2`).
    Unresolved,
}

/// Statewise escape probability of a built-in model where it is known in
/// closed form; tests must treat `Unresolved` as "no expectation", never as 0.
pub fn statewise_oracle(spec: &ExampleSpec, w0: State, z: ExtendedComplex) -> OracleValue {
    let zc = match z {
        ExtendedComplex::Infinity => return OracleValue::One,
        ExtendedComplex::Finite(zc) => zc,
    };
    let r = zc.norm();
    match *spec {
        ExampleSpec::Reinforcement { alpha } => {
            let p = w0.coord;
            if p == 0.0 {
                return if r <= 1.0 { OracleValue::Zero } else { OracleValue::One };
            }
            if p == 1.0 {
                return if r <= 2.0 { OracleValue::Zero } else { OracleValue::One };
            }
            if r <= 1.0 {
                OracleValue::Zero
            } else if r > 2.0 {
                OracleValue::One
            } else if zc.im == 0.0 && zc.re == 2.0 && alpha > 0.0 {
                OracleValue::Value(reinforcement_escape_value_at_two(alpha, p))
            } else {
                OracleValue::Unresolved
            }
        }
        ExampleSpec::Truncated { .. } => {
            if r <= 1.0 {
                OracleValue::Zero
            } else if r > 2.0 || (zc.im == 0.0 && zc.re == 2.0) {
                OracleValue::One
            } else {
                OracleValue::Unresolved
            }
        }
        ExampleSpec::TwoComponent => {
            if w0.bit == 0 {
                if r <= 1.0 {
                    OracleValue::Zero
                } else {
                    OracleValue::One
                }
            } else if (zc - num_complex::Complex64::new(3.0, 0.0)).norm() <= 1.0 {
                OracleValue::Zero
            } else {
                OracleValue::One
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_zero_freezes_the_state() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.0 }).unwrap();
        let w = State::new(0.37);
        assert_eq!(model.update_state(w, 0), w);
        assert_eq!(model.update_state(w, 1), w);
    }

    #[test]
    fn reinforcement_update_value() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        assert_eq!(model.update_state(State::new(0.4), 1), State::new(0.7));
    }

    #[test]
    fn truncated_update_clamps_at_epsilon() {
        let model = build_example(&ExampleSpec::Truncated { alpha: 0.5, epsilon: 0.1 }).unwrap();
        assert_eq!(model.update_state(State::new(0.15), 0), State::new(0.1));
    }

    #[test]
    fn truncated_indices_uniformly_admissible() {
        let model = build_example(&ExampleSpec::Truncated { alpha: 0.5, epsilon: 0.1 }).unwrap();
        for &p in &[0.1, 0.33, 0.5, 0.9] {
            assert!(model.transition_prob(State::new(p), 0) >= 0.1);
            assert!(model.transition_prob(State::new(p), 1) >= 0.1);
        }
    }

    #[test]
    fn two_component_update_and_admissibility() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        assert_eq!(model.update_state(State::with_bit(0.5, 0), 2), State::with_bit(0.25, 1));
        assert_eq!(model.transition_prob(State::with_bit(0.5, 0), 2), 0.0);
        assert_eq!(model.transition_prob(State::with_bit(0.5, 0), 3), 0.0);
        assert_eq!(model.transition_prob(State::with_bit(0.5, 1), 2), 0.5);
        // component 1 is closed: indices 2/3 keep the bit at 1
        assert_eq!(model.update_state(State::with_bit(0.5, 1), 2).bit, 1);
        assert_eq!(model.update_state(State::with_bit(0.5, 1), 3).bit, 1);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(build_example(&ExampleSpec::Reinforcement { alpha: 1.0 }).is_err());
        assert!(build_example(&ExampleSpec::Truncated { alpha: 0.5, epsilon: 0.5 }).is_err());
        assert!(build_example(&ExampleSpec::Truncated { alpha: 0.0, epsilon: 0.1 }).is_err());
    }

    #[test]
    fn escape_value_monotone_in_p_and_interior() {
        for ai in 1..=10 {
            let alpha = ai as f64 / 11.0;
            let mut prev = f64::INFINITY;
            for pi in 1..=10 {
                let p = pi as f64 / 11.0;
                let v = reinforcement_escape_value_at_two(alpha, p);
                assert!(v > 0.0 && v < 1.0, "value {v} not interior at ({alpha}, {p})");
                assert!(v < prev, "not strictly decreasing in p at ({alpha}, {p})");
                prev = v;
            }
        }
    }

    #[test]
    fn statewise_oracle_known_regions() {
        let reinforcement = ExampleSpec::Reinforcement { alpha: 0.5 };
        assert_eq!(
            statewise_oracle(&reinforcement, State::new(0.0), ExtendedComplex::finite(0.5, 0.0)),
            OracleValue::Zero
        );
        assert_eq!(
            statewise_oracle(
                &ExampleSpec::Truncated { alpha: 0.5, epsilon: 0.1 },
                State::new(0.4),
                ExtendedComplex::finite(2.0, 0.0)
            ),
            OracleValue::One
        );
        assert_eq!(
            statewise_oracle(&ExampleSpec::TwoComponent, State::with_bit(0.3, 1), ExtendedComplex::finite(3.5, 0.0)),
            OracleValue::Zero
        );
        assert_eq!(
            statewise_oracle(&reinforcement, State::new(0.5), ExtendedComplex::finite(1.5, 0.0)),
            OracleValue::Unresolved
        );
    }
}
