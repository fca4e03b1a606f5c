//! The random system with complete connections: state space, index law,
//! update map, polynomial measures, and path sampling.

use crate::error::Error;
use crate::poly::Polynomial;
use crate::stream::PathRng;
use rand::Rng;
use std::fmt;
use std::sync::Arc;

/// A point of the state space. `coord` is the continuous coordinate; `bit` is
/// the discrete factor and stays 0 for plain interval spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub coord: f64,
    pub bit: u8,
}

impl State {
    pub fn new(coord: f64) -> Self {
        State { coord, bit: 0 }
    }

    pub fn with_bit(coord: f64, bit: u8) -> Self {
        State { coord, bit }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.coord, self.bit)
    }
}

/// Compact metric state space of the system.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpace {
    /// `[lo, hi]` with the Euclidean metric.
    Interval { lo: f64, hi: f64 },
    /// `[lo, hi] x {0, 1}` with metric `|s-t| + |i-j|`.
    IntervalTimesBit { lo: f64, hi: f64 },
    /// A finite point set with the discrete metric.
    FinitePoints { points: Vec<State> },
}

impl StateSpace {
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            StateSpace::Interval { lo, hi } | StateSpace::IntervalTimesBit { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::Param(format!("interval bounds must satisfy lo < hi, got [{lo}, {hi}]")));
                }
            }
            StateSpace::FinitePoints { points } => {
                if points.is_empty() {
                    return Err(Error::Param("finite state space needs at least one point".into()));
                }
            }
        }
        Ok(())
    }

    pub fn metric(&self, a: State, b: State) -> f64 {
        match self {
            StateSpace::Interval { .. } => (a.coord - b.coord).abs(),
            StateSpace::IntervalTimesBit { .. } => {
                (a.coord - b.coord).abs() + (a.bit as i32 - b.bit as i32).abs() as f64
            }
            StateSpace::FinitePoints { .. } => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn contains(&self, s: State) -> bool {
        const TOL: f64 = 1e-9;
        match self {
            StateSpace::Interval { lo, hi } => {
                s.bit == 0 && s.coord >= lo - TOL && s.coord <= hi + TOL
            }
            StateSpace::IntervalTimesBit { lo, hi } => {
                (s.bit == 0 || s.bit == 1) && s.coord >= lo - TOL && s.coord <= hi + TOL
            }
            StateSpace::FinitePoints { points } => points.iter().any(|&p| p == s),
        }
    }

    /// Deterministic sample used by load-time validation.
    pub fn validation_sample(&self, n: usize) -> Vec<State> {
        match self {
            StateSpace::Interval { lo, hi } => linspace(*lo, *hi, n).map(State::new).collect(),
            StateSpace::IntervalTimesBit { lo, hi } => {
                let per_bit = (n / 2).max(2);
                let mut v: Vec<State> =
                    linspace(*lo, *hi, per_bit).map(|c| State::with_bit(c, 0)).collect();
                v.extend(linspace(*lo, *hi, per_bit).map(|c| State::with_bit(c, 1)));
                v
            }
            StateSpace::FinitePoints { points } => points.clone(),
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// Uniform discretization of a state space: `n_per_factor` nodes per
/// continuous factor, times the discrete factors. Bit spaces store the bit-0
/// block first, then the bit-1 block.
#[derive(Debug, Clone)]
pub struct WGrid {
    pub space: StateSpace,
    pub n_per_factor: usize,
    pub nodes: Vec<State>,
}

impl WGrid {
    pub fn new(space: &StateSpace, n_per_factor: usize) -> Result<Self, Error> {
        space.validate()?;
        if n_per_factor < 2 {
            return Err(Error::Param("state grid needs at least 2 nodes per factor".into()));
        }
        let nodes = match space {
            StateSpace::Interval { lo, hi } => {
                linspace(*lo, *hi, n_per_factor).map(State::new).collect()
            }
            StateSpace::IntervalTimesBit { lo, hi } => {
                let mut v: Vec<State> =
                    linspace(*lo, *hi, n_per_factor).map(|c| State::with_bit(c, 0)).collect();
                v.extend(linspace(*lo, *hi, n_per_factor).map(|c| State::with_bit(c, 1)));
                v
            }
            StateSpace::FinitePoints { points } => points.clone(),
        };
        Ok(WGrid { space: space.clone(), n_per_factor, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node nearest to `s`; ties round up. For bit spaces the
    /// bit must match exactly (updates keep it in {0, 1}).
    pub fn nearest(&self, s: State) -> usize {
        match &self.space {
            StateSpace::Interval { lo, hi } => self.nearest_on_axis(s.coord, *lo, *hi),
            StateSpace::IntervalTimesBit { lo, hi } => {
                let j = self.nearest_on_axis(s.coord, *lo, *hi);
                s.bit.min(1) as usize * self.n_per_factor + j
            }
            StateSpace::FinitePoints { points } => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, &p) in points.iter().enumerate() {
                    let d = self.space.metric(p, s);
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                best
            }
        }
    }

    fn nearest_on_axis(&self, coord: f64, lo: f64, hi: f64) -> usize {
        let step = (hi - lo) / (self.n_per_factor - 1) as f64;
        // round half up, then clamp to the grid
        let j = ((coord - lo) / step + 0.5).floor();
        (j.max(0.0) as usize).min(self.n_per_factor - 1)
    }
}

/// A finitely supported probability measure on polynomials.
#[derive(Debug, Clone)]
pub struct FiniteMeasureOnPoly {
    atoms: Vec<(Polynomial, f64)>,
    cdf: Vec<f64>,
}

impl FiniteMeasureOnPoly {
    pub fn new(atoms: Vec<(Polynomial, f64)>) -> Result<Self, Error> {
        if atoms.is_empty() {
            return Err(Error::Param("measure needs at least one atom".into()));
        }
        let mut sum = 0.0;
        for (_, w) in &atoms {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(Error::Param(format!("atom weight must lie in (0, 1], got {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Param(format!("atom weights must sum to 1, got {sum}")));
        }
        let mut cdf = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (_, w) in &atoms {
            acc += w;
            cdf.push(acc);
        }
        Ok(FiniteMeasureOnPoly { atoms, cdf })
    }

    pub fn dirac(p: Polynomial) -> Self {
        FiniteMeasureOnPoly { atoms: vec![(p, 1.0)], cdf: vec![1.0] }
    }

    pub fn atoms(&self) -> &[(Polynomial, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Inverse-CDF draw of an atom index; single-atom measures consume no
    /// randomness.
    #[inline]
    pub fn sample_atom(&self, rng: &mut PathRng) -> usize {
        if self.atoms.len() == 1 {
            return 0;
        }
        let u: f64 = rng.gen();
        for (i, &c) in self.cdf.iter().enumerate() {
            if u <= c {
                return i;
            }
        }
        self.atoms.len() - 1
    }
}

type UpdateFn = dyn Fn(State, usize) -> State + Send + Sync;
type TransitionFn = dyn Fn(State, &mut [f64]) + Send + Sync;

/// A polynomial RSCC: compact state space, finite index set, update map,
/// state-dependent index law, and one finitely supported polynomial measure
/// per index. Immutable and cheap to clone; sampling is pure given an
/// explicit random stream.
#[derive(Clone)]
pub struct RsccModel {
    pub space: StateSpace,
    pub n_indices: usize,
    update: Arc<UpdateFn>,
    transition: Arc<TransitionFn>,
    pub measures: Vec<FiniteMeasureOnPoly>,
}

impl fmt::Debug for RsccModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RsccModel")
            .field("space", &self.space)
            .field("n_indices", &self.n_indices)
            .field("measures", &self.measures.len())
            .finish()
    }
}

impl RsccModel {
    /// Builds and validates a model. Validation samples the state space at
    /// 1024 points and requires each transition row to be a probability
    /// vector (hard error) and the update map to stay inside the space (hard
    /// error); a large jump of `w -> P(w, x)` over close states only logs a
    /// warning, since continuity cannot be decided from samples.
    pub fn new(
        space: StateSpace,
        n_indices: usize,
        update: Arc<UpdateFn>,
        transition: Arc<TransitionFn>,
        measures: Vec<FiniteMeasureOnPoly>,
    ) -> Result<Self, Error> {
        space.validate()?;
        if n_indices == 0 {
            return Err(Error::Param("index set must be nonempty".into()));
        }
        if n_indices > 64 {
            return Err(Error::Param("index sets larger than 64 are not supported".into()));
        }
        if measures.len() != n_indices {
            return Err(Error::Validation(format!(
                "expected {} measures, got {}",
                n_indices,
                measures.len()
            )));
        }
        let model = RsccModel { space, n_indices, update, transition, measures };
        model.validate_on_sample()?;
        Ok(model)
    }

    fn validate_on_sample(&self) -> Result<(), Error> {
        let sample = self.space.validation_sample(1024);
        let mut row = vec![0.0; self.n_indices];
        for &w in &sample {
            self.transition_row(w, &mut row);
            let mut sum = 0.0;
            for (x, &p) in row.iter().enumerate() {
                if !((-1e-12..=1.0 + 1e-12).contains(&p)) {
                    return Err(Error::Validation(format!(
                        "P({w}, {{{x}}}) = {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "transition row at {w} sums to {sum}, expected 1"
                )));
            }
            for x in 0..self.n_indices {
                let next = self.update_state(w, x);
                if !self.space.contains(next) {
                    return Err(Error::Validation(format!(
                        "update({w}, {x}) = {next} leaves the state space"
                    )));
                }
            }
        }
        // statistical continuity check on close pairs; advisory only
        if let StateSpace::Interval { .. } | StateSpace::IntervalTimesBit { .. } = self.space {
            let mut other = vec![0.0; self.n_indices];
            let mut worst = 0.0f64;
            for pair in sample.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if a.bit != b.bit {
                    continue;
                }
                let d = self.space.metric(a, b);
                if d <= 0.0 || d > 1e-2 {
                    continue;
                }
                self.transition_row(a, &mut row);
                self.transition_row(b, &mut other);
                for x in 0..self.n_indices {
                    worst = worst.max((row[x] - other[x]).abs());
                }
            }
            if worst > 0.1 {
                log::warn!(
                    "transition law jumps by {worst:.3} across adjacent sample states; \
                     w -> P(w, x) may be discontinuous"
                );
            }
        }
        Ok(())
    }

    /// Writes the index distribution `P(w, .)` into `buf` (length `n_indices`).
    #[inline]
    pub fn transition_row(&self, w: State, buf: &mut [f64]) {
        debug_assert_eq!(buf.len(), self.n_indices);
        (self.transition)(w, buf);
    }

    pub fn transition_prob(&self, w: State, x: usize) -> f64 {
        let mut buf = vec![0.0; self.n_indices];
        self.transition_row(w, &mut buf);
        buf[x]
    }

    #[inline]
    pub fn update_state(&self, w: State, x: usize) -> State {
        (self.update)(w, x)
    }

    /// Inverse-CDF index draw over the fixed order `0..n_indices`; ties at
    /// CDF boundaries resolve to the lower index. Degenerate rows (some
    /// `P(w, x) = 1`) consume no randomness; `consumed` reports whether the
    /// stream was used.
    #[inline]
    pub fn sample_index(
        &self,
        w: State,
        rng: &mut PathRng,
        row: &mut [f64],
        consumed: &mut bool,
    ) -> usize {
        self.transition_row(w, row);
        if let Some(x) = row.iter().position(|&p| p >= 1.0) {
            return x;
        }
        *consumed = true;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_admissible = 0;
        for (x, &p) in row.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last_admissible = x;
            if u <= acc {
                return x;
            }
        }
        last_admissible
    }

    /// Samples the coupled index/polynomial path of length `n` from `w0`:
    /// draw `x_k ~ P(w_{k-1}, .)`, draw an atom of the selected measure, set
    /// `w_k = u(w_{k-1}, x_k)`.
    pub fn sample_path(&self, w0: State, n: usize, rng: &mut PathRng) -> PathSample {
        let mut indices = Vec::with_capacity(n);
        let mut poly_choices = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n + 1);
        states.push(w0);
        let mut row = vec![0.0; self.n_indices];
        let mut w = w0;
        let mut consumed = false;
        for _ in 0..n {
            let x = self.sample_index(w, rng, &mut row, &mut consumed);
            let atom = self.measures[x].sample_atom(rng);
            w = self.update_state(w, x);
            indices.push(x);
            poly_choices.push(atom);
            states.push(w);
        }
        PathSample { indices, states, poly_choices }
    }

    /// Smallest degree among all atoms of all measures.
    pub fn min_atom_degree(&self) -> usize {
        self.measures
            .iter()
            .flat_map(|m| m.atoms().iter().map(|(p, _)| p.degree()))
            .min()
            .unwrap_or(0)
    }

    /// All atom polynomials of the family, ungrouped.
    pub fn family_atoms(&self) -> Vec<Polynomial> {
        self.measures
            .iter()
            .flat_map(|m| m.atoms().iter().map(|(p, _)| p.clone()))
            .collect()
    }
}

/// One sampled realization: indices `x_1..x_n`, states `w_0..w_n`, and the
/// atom chosen from each selected measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub indices: Vec<usize>,
    pub states: Vec<State>,
    pub poly_choices: Vec<usize>,
}

impl PathSample {
    /// Exact replay check: `states[k] = update(states[k-1], indices[k])`.
    pub fn is_consistent(&self, model: &RsccModel) -> bool {
        if self.states.len() != self.indices.len() + 1
            || self.poly_choices.len() != self.indices.len()
        {
            return false;
        }
        self.indices.iter().enumerate().all(|(k, &x)| {
            model.update_state(self.states[k], x) == self.states[k + 1]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_example, ExampleSpec};
    use crate::stream::rng_for;

    #[test]
    fn wgrid_nearest_rounds_ties_up() {
        let space = StateSpace::Interval { lo: 0.0, hi: 1.0 };
        let grid = WGrid::new(&space, 3).unwrap(); // nodes 0, 0.5, 1
        assert_eq!(grid.nearest(State::new(0.24)), 0);
        assert_eq!(grid.nearest(State::new(0.25)), 1); // tie rounds up
        assert_eq!(grid.nearest(State::new(0.76)), 2);
        assert_eq!(grid.nearest(State::new(-3.0)), 0);
        assert_eq!(grid.nearest(State::new(9.0)), 2);
    }

    #[test]
    fn wgrid_bit_blocks() {
        let space = StateSpace::IntervalTimesBit { lo: 0.0, hi: 1.0 };
        let grid = WGrid::new(&space, 4).unwrap();
        assert_eq!(grid.len(), 8);
        assert_eq!(grid.nearest(State::with_bit(1.0, 0)), 3);
        assert_eq!(grid.nearest(State::with_bit(0.0, 1)), 4);
    }

    #[test]
    fn boundary_states_are_deterministic() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let mut row = vec![0.0; 2];
        let mut consumed = false;
        let mut rng = rng_for(1, &[]);
        for _ in 0..32 {
            assert_eq!(model.sample_index(State::new(0.0), &mut rng, &mut row, &mut consumed), 0);
            assert_eq!(model.sample_index(State::new(1.0), &mut rng, &mut row, &mut consumed), 1);
        }
        assert!(!consumed, "degenerate rows must not consume randomness");
    }

    #[test]
    fn empirical_index_frequency_matches_law() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let mut row = vec![0.0; 2];
        let mut consumed = false;
        let mut rng = rng_for(42, &[9]);
        let n = 1_000_000;
        let mut ones = 0usize;
        for _ in 0..n {
            if model.sample_index(State::new(0.3), &mut rng, &mut row, &mut consumed) == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / n as f64;
        // binomial 3-sigma bound at q = 0.3: 0.00137
        assert!((freq - 0.3).abs() < 0.002, "freq = {freq}");
    }

    #[test]
    fn absorbing_path_stays_put() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let mut rng = rng_for(7, &[]);
        let path = model.sample_path(State::new(0.0), 16, &mut rng);
        assert!(path.indices.iter().all(|&x| x == 0));
        assert!(path.states.iter().all(|&s| s == State::new(0.0)));
        assert!(path.is_consistent(&model));
    }

    #[test]
    fn cylinder_probability_matches_product_formula() {
        // two-step cylinder [1, 1] from w0 = 0.5 at alpha = 0.5:
        // p1 = 0.5, p2 = (1 - alpha) p1 + alpha = 0.75, so P = 0.375
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let n = 1_000_000;
        let mut hits = 0usize;
        for rep in 0..n {
            let mut rng = rng_for(42, &[11, rep as u64]);
            let path = model.sample_path(State::new(0.5), 2, &mut rng);
            if path.indices == [1, 1] {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        // 3-sigma bound at q = 0.375: 0.00145
        assert!((freq - 0.375).abs() < 0.002, "freq = {freq}");
    }

    #[test]
    fn two_component_keeps_bit_from_component_zero() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let mut rng = rng_for(3, &[5]);
        let path = model.sample_path(State::with_bit(0.7, 0), 64, &mut rng);
        assert!(path.indices.iter().all(|&x| x == 0 || x == 1));
        assert!(path.states.iter().all(|s| s.bit == 0));
        assert!(path.is_consistent(&model));
    }

    #[test]
    fn identical_seed_identical_path() {
        let model = build_example(&ExampleSpec::Truncated { alpha: 0.5, epsilon: 0.1 }).unwrap();
        let a = model.sample_path(State::new(0.4), 64, &mut rng_for(5, &[1]));
        let b = model.sample_path(State::new(0.4), 64, &mut rng_for(5, &[1]));
        assert_eq!(a, b);
    }

    #[test]
    fn markov_two_step_chi_square() {
        // w0 = 0.5, alpha = 0.5: the two-step state w2 is one of four atoms
        // whose exact probabilities follow from composing one-step kernels.
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let atoms = [(0.125, 0.375), (0.375, 0.125), (0.625, 0.125), (0.875, 0.375)];
        let n = 20_000;
        let mut counts = [0usize; 4];
        for rep in 0..n {
            let mut rng = rng_for(42, &[13, rep as u64]);
            let path = model.sample_path(State::new(0.5), 2, &mut rng);
            let w2 = path.states[2].coord;
            let slot = atoms.iter().position(|&(v, _)| (w2 - v).abs() < 1e-12).unwrap();
            counts[slot] += 1;
        }
        let mut chi2 = 0.0;
        for (slot, &(_, q)) in atoms.iter().enumerate() {
            let expected = q * n as f64;
            let diff = counts[slot] as f64 - expected;
            chi2 += diff * diff / expected;
        }
        // chi-square 0.999 quantile at 3 degrees of freedom
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn invalid_measure_weights_rejected() {
        let p = Polynomial::from_real(&[0.0, 0.0, 1.0]).unwrap();
        assert!(FiniteMeasureOnPoly::new(vec![(p.clone(), 0.5), (p, 0.4)]).is_err());
    }
}
