//! JSON model configuration.
//!
//! A model document carries the state space, the index count, update and
//! transition rules (builtin names with parameters, or explicit tables over a
//! finite state space), and one atom list per index. Polynomials serialize as
//! arrays of `[re, im]` coefficient pairs in ascending degree.

use crate::error::Error;
use crate::poly::Polynomial;
use crate::rscc::{FiniteMeasureOnPoly, RsccModel, State, StateSpace};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub state_space: StateSpaceConfig,
    pub index_count: usize,
    pub update: UpdateConfig,
    pub transition: TransitionConfig,
    pub measures: Vec<Vec<AtomConfig>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpaceConfig {
    Interval { lo: f64, hi: f64 },
    IntervalTimesBit { lo: f64, hi: f64 },
    FinitePoints { points: Vec<StateConfig> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateConfig {
    pub coord: f64,
    #[serde(default)]
    pub bit: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateConfig {
    Reinforcement { alpha: f64 },
    Truncated { alpha: f64, epsilon: f64 },
    TwoComponent {},
    /// `map[i][x]`: index of the successor point of finite state `i` under
    /// index `x`. Only valid with a finite state space.
    Table { map: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionConfig {
    Reinforcement {},
    Truncated {},
    TwoComponent {},
    /// `rows[i][x] = P(point_i, {x})`. Only valid with a finite state space.
    Table { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomConfig {
    pub poly: Vec<[f64; 2]>,
    pub weight: f64,
}

impl AtomConfig {
    pub fn to_polynomial(&self) -> Result<Polynomial, Error> {
        Polynomial::new(self.poly.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }
}

fn space_from_config(cfg: &StateSpaceConfig) -> StateSpace {
    match cfg {
        StateSpaceConfig::Interval { lo, hi } => StateSpace::Interval { lo: *lo, hi: *hi },
        StateSpaceConfig::IntervalTimesBit { lo, hi } => {
            StateSpace::IntervalTimesBit { lo: *lo, hi: *hi }
        }
        StateSpaceConfig::FinitePoints { points } => StateSpace::FinitePoints {
            points: points.iter().map(|p| State::with_bit(p.coord, p.bit)).collect(),
        },
    }
}

/// Builds a validated model from a configuration document.
pub fn build_model(cfg: &ModelConfig) -> Result<RsccModel, Error> {
    let space = space_from_config(&cfg.state_space);
    let measures = cfg
        .measures
        .iter()
        .map(|atoms| {
            let list = atoms
                .iter()
                .map(|a| Ok((a.to_polynomial()?, a.weight)))
                .collect::<Result<Vec<_>, Error>>()?;
            FiniteMeasureOnPoly::new(list)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    if measures.len() != cfg.index_count {
        return Err(Error::Config(format!(
            "expected {} measure entries, found {}",
            cfg.index_count,
            measures.len()
        )));
    }

    let update: Arc<dyn Fn(State, usize) -> State + Send + Sync> = match &cfg.update {
        UpdateConfig::Reinforcement { alpha } => {
            let alpha = *alpha;
            if !(0.0..1.0).contains(&alpha) {
                return Err(Error::Config(format!("alpha must lie in [0, 1), got {alpha}")));
            }
            Arc::new(move |w: State, x: usize| {
                State::new(((1.0 - alpha) * w.coord + alpha * x as f64).clamp(0.0, 1.0))
            })
        }
        UpdateConfig::Truncated { alpha, epsilon } => {
            let (alpha, eps) = (*alpha, *epsilon);
            if !(alpha > 0.0 && alpha < 1.0 && eps > 0.0 && eps < 0.5) {
                return Err(Error::Config("truncated update needs alpha in (0,1), epsilon in (0,1/2)".into()));
            }
            Arc::new(move |w: State, x: usize| {
                State::new(((1.0 - alpha) * w.coord + alpha * x as f64).clamp(eps, 1.0 - eps))
            })
        }
        UpdateConfig::TwoComponent {} => Arc::new(|w: State, x: usize| {
            let half = (w.coord / 2.0).clamp(0.0, 1.0);
            let upper = ((w.coord + 1.0) / 2.0).clamp(0.0, 1.0);
            match x {
                0 => State::with_bit(half, w.bit),
                1 => State::with_bit(upper, w.bit),
                2 => State::with_bit(half, 1),
                _ => State::with_bit(upper, 1),
            }
        }),
        UpdateConfig::Table { map } => {
            let points = match &space {
                StateSpace::FinitePoints { points } => points.clone(),
                _ => {
                    return Err(Error::Config(
                        "update tables require a finite_points state space".into(),
                    ))
                }
            };
            if map.len() != points.len() || map.iter().any(|r| r.len() != cfg.index_count) {
                return Err(Error::Config("update table shape mismatch".into()));
            }
            if map.iter().flatten().any(|&j| j >= points.len()) {
                return Err(Error::Config("update table points outside the state space".into()));
            }
            let map = map.clone();
            let lookup = points.clone();
            Arc::new(move |w: State, x: usize| {
                let i = lookup
                    .iter()
                    .position(|&p| p == w)
                    .expect("state validated to lie in the finite space");
                lookup[map[i][x]]
            })
        }
    };

    let transition: Arc<dyn Fn(State, &mut [f64]) + Send + Sync> = match &cfg.transition {
        TransitionConfig::Reinforcement {} | TransitionConfig::Truncated {} => {
            Arc::new(|w: State, buf: &mut [f64]| {
                buf[1] = w.coord;
                buf[0] = 1.0 - w.coord;
            })
        }
        TransitionConfig::TwoComponent {} => Arc::new(|w: State, buf: &mut [f64]| {
            if w.bit == 0 {
                buf.copy_from_slice(&[0.5, 0.5, 0.0, 0.0]);
            } else {
                buf.copy_from_slice(&[0.0, 0.0, 0.5, 0.5]);
            }
        }),
        TransitionConfig::Table { rows } => {
            let points = match &space {
                StateSpace::FinitePoints { points } => points.clone(),
                _ => {
                    return Err(Error::Config(
                        "transition tables require a finite_points state space".into(),
                    ))
                }
            };
            if rows.len() != points.len() || rows.iter().any(|r| r.len() != cfg.index_count) {
                return Err(Error::Config("transition table shape mismatch".into()));
            }
            let rows = rows.clone();
            let lookup = points;
            Arc::new(move |w: State, buf: &mut [f64]| {
                let i = lookup
                    .iter()
                    .position(|&p| p == w)
                    .expect("state validated to lie in the finite space");
                buf.copy_from_slice(&rows[i]);
            })
        }
    };

    RsccModel::new(space, cfg.index_count, update, transition, measures)
}

pub fn load_model(path: &Path) -> Result<RsccModel, Error> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ModelConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
    build_model(&cfg)
}
