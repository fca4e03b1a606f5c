//! Monte Carlo escape probabilities, escape maps over grids, and the
//! admissible-word search for smallest filled-in Julia sets.

use crate::error::Error;
use crate::exec;
use crate::rscc::{RsccModel, State};
use crate::sphere::ExtendedComplex;
use crate::stream::{self, domain};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashSet;

/// Simulation parameters for escape estimation.
///
/// `radius` must be a valid escape radius for the union of the family's
/// supports (see [`crate::poly::escape_radius`]); an orbit is certified to
/// tend to infinity the moment it leaves `|z| <= radius`. Orbits that survive
/// `max_steps` without certification count as non-escaped, which biases the
/// estimate downward by at most the probability of escape after `max_steps`;
/// the truncated count is reported verbatim.
#[derive(Debug, Clone, Copy)]
pub struct EscapeParams {
    pub radius: f64,
    pub max_steps: usize,
    pub samples: usize,
    pub seed: u64,
    /// Word-search boundedness threshold; defaults to `radius`.
    pub bounded_box: f64,
}

impl EscapeParams {
    pub fn new(radius: f64) -> Self {
        EscapeParams { radius, max_steps: 200, samples: 10_000, seed: 42, bounded_box: radius }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.radius >= 1.0) {
            return Err(Error::Param(format!("radius must be >= 1, got {}", self.radius)));
        }
        if self.max_steps == 0 || self.samples == 0 {
            return Err(Error::Param("max_steps and samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// Monte Carlo estimate of a statewise escape probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeEstimate {
    pub estimate: f64,
    pub samples: usize,
    pub std_error: f64,
    pub escaped_count: usize,
    pub truncated_count: usize,
}

impl EscapeEstimate {
    fn from_counts(escaped: usize, truncated: usize, samples: usize) -> Self {
        let p = escaped as f64 / samples as f64;
        EscapeEstimate {
            estimate: p,
            samples,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            escaped_count: escaped,
            truncated_count: truncated,
        }
    }
}

fn require_certifiable(model: &RsccModel) -> Result<(), Error> {
    if model.min_atom_degree() < 2 {
        return Err(Error::Radius(
            "escape certification needs every atom polynomial to have degree >= 2".into(),
        ));
    }
    Ok(())
}

/// Outcome of one simulated path.
struct PathOutcome {
    escaped: bool,
    consumed_randomness: bool,
}

#[inline]
fn run_path(
    model: &RsccModel,
    w0: State,
    z0: Complex64,
    params: &EscapeParams,
    rng: &mut stream::PathRng,
    row: &mut [f64],
    check_invariance: bool,
) -> PathOutcome {
    let r2 = params.radius * params.radius;
    let mut w = w0;
    let mut z = z0;
    let mut consumed = false;
    for _ in 0..params.max_steps {
        let x = model.sample_index(w, rng, row, &mut consumed);
        let measure = &model.measures[x];
        if measure.len() > 1 {
            consumed = true;
        }
        let atom = measure.sample_atom(rng);
        z = measure.atoms()[atom].0.eval_complex(z);
        let n2 = z.norm_sqr();
        if !n2.is_finite() || n2 > r2 {
            if check_invariance && n2.is_finite() {
                debug_assert!(
                    model.family_atoms().iter().all(|p| {
                        let image = p.eval_complex(z).norm_sqr();
                        !image.is_finite() || image > r2
                    }),
                    "forward invariance violated beyond the escape radius"
                );
            }
            return PathOutcome { escaped: true, consumed_randomness: consumed };
        }
        w = model.update_state(w, x);
    }
    PathOutcome { escaped: false, consumed_randomness: consumed }
}

/// Estimates the probability that the orbit of `z` tends to infinity when the
/// system starts at `w0`, over `params.samples` independent paths. `z = inf`
/// returns estimate 1 immediately. Replicate `r` draws from the stream
/// derived from `(params.seed, r)`, so the result is independent of
/// scheduling; a path whose first replicate consumed no randomness is fully
/// deterministic and is counted once for all replicates.
pub fn estimate_escape_probability(
    model: &RsccModel,
    w0: State,
    z: ExtendedComplex,
    params: &EscapeParams,
) -> Result<EscapeEstimate, Error> {
    params.validate()?;
    require_certifiable(model)?;
    let z0 = match z {
        ExtendedComplex::Infinity => {
            return Ok(EscapeEstimate::from_counts(params.samples, 0, params.samples));
        }
        ExtendedComplex::Finite(z0) => z0,
    };
    let mut row = vec![0.0; model.n_indices];
    let mut escaped = 0usize;
    let mut rng = stream::rng_for(params.seed, &[domain::REPLICATE, 0]);
    let first = run_path(model, w0, z0, params, &mut rng, &mut row, cfg!(debug_assertions));
    if !first.consumed_randomness {
        let n = if first.escaped { params.samples } else { 0 };
        return Ok(EscapeEstimate::from_counts(n, params.samples - n, params.samples));
    }
    if first.escaped {
        escaped += 1;
    }
    for rep in 1..params.samples {
        let mut rng = stream::rng_for(params.seed, &[domain::REPLICATE, rep as u64]);
        if run_path(model, w0, z0, params, &mut rng, &mut row, false).escaped {
            escaped += 1;
        }
    }
    Ok(EscapeEstimate::from_counts(escaped, params.samples - escaped, params.samples))
}

/// Square grid of evaluation points: `n x n` nodes spanning
/// `[-half_extent, half_extent]^2` inclusive, row-major with the imaginary
/// axis as the slow index (row `iy` holds `im = node(iy)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZGrid {
    pub half_extent: f64,
    pub n: usize,
}

impl ZGrid {
    pub fn new(half_extent: f64, n: usize) -> Result<Self, Error> {
        if !(half_extent > 0.0) {
            return Err(Error::Param(format!("grid extent must be positive, got {half_extent}")));
        }
        Ok(ZGrid { half_extent, n })
    }

    /// Coordinate of axis node `j`; a 1-node grid sits at the center.
    pub fn axis(&self, j: usize) -> f64 {
        if self.n <= 1 {
            return 0.0;
        }
        if j + 1 == self.n {
            return self.half_extent;
        }
        -self.half_extent + 2.0 * self.half_extent * j as f64 / (self.n - 1) as f64
    }

    pub fn node(&self, iy: usize, ix: usize) -> Complex64 {
        Complex64::new(self.axis(ix), self.axis(iy))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.len());
        for iy in 0..self.n {
            for ix in 0..self.n {
                v.push(self.node(iy, ix));
            }
        }
        v
    }
}

/// A per-cell escape map over a square grid.
#[derive(Debug, Clone)]
pub struct EscapeMap {
    pub grid: ZGrid,
    pub w0: State,
    pub cells: Vec<EscapeEstimate>,
}

/// Escape estimates at arbitrary points; point `i` uses the stream family
/// derived from `(params.seed, CELL, i)`, making the output deterministic for
/// a fixed seed regardless of the parallel schedule.
pub fn escape_estimates_at(
    model: &RsccModel,
    w0: State,
    points: &[ExtendedComplex],
    params: &EscapeParams,
) -> Result<Vec<EscapeEstimate>, Error> {
    params.validate()?;
    require_certifiable(model)?;
    let results = exec::map_indexed(points.len(), |i| {
        let cell_params = EscapeParams {
            seed: stream::derive(params.seed, &[domain::CELL, i as u64]),
            ..*params
        };
        estimate_escape_probability(model, w0, points[i], &cell_params)
            .expect("parameters validated above")
    });
    Ok(results)
}

/// Batch evaluation of the escape probability over a square grid.
pub fn escape_map(
    model: &RsccModel,
    w0: State,
    grid: &ZGrid,
    params: &EscapeParams,
) -> Result<EscapeMap, Error> {
    let points: Vec<ExtendedComplex> =
        grid.points().into_iter().map(ExtendedComplex::Finite).collect();
    let cells = escape_estimates_at(model, w0, &points, params)?;
    Ok(EscapeMap { grid: *grid, w0, cells })
}

/// Verdict of the finite-depth admissible-word search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriState {
    /// Every admissible word through the search depth kept the point within
    /// the bounded box (finite-depth heuristic).
    InFilled,
    /// Some admissible word sent the point beyond the escape radius, which
    /// certifies a positive escape probability.
    NotInFilled,
    /// Neither verdict: some node landed between the bounded box and the
    /// escape radius.
    Unknown,
}

/// Parameters of the admissible-word search.
#[derive(Debug, Clone, Copy)]
pub struct WordSearchParams {
    pub depth: usize,
    pub radius: f64,
    /// Boundedness threshold for the `InFilled` verdict; defaults to `radius`.
    pub bound: f64,
    /// Branches with `P(w, x)` at or below this are inadmissible.
    pub admissibility_cutoff: f64,
    /// Hard cap on explored nodes; exceeding it is an error.
    pub node_budget: usize,
}

impl WordSearchParams {
    pub fn new(depth: usize, radius: f64) -> Self {
        WordSearchParams {
            depth,
            radius,
            bound: radius,
            admissibility_cutoff: 1e-15,
            node_budget: 1_000_000,
        }
    }
}

const QUANTUM: f64 = 1e-9;

#[derive(PartialEq, Eq, Hash)]
struct NodeKey {
    re: i64,
    im: i64,
    admissible: u64,
}

fn node_key(z: Complex64, admissible: u64) -> NodeKey {
    NodeKey { re: (z.re / QUANTUM).round() as i64, im: (z.im / QUANTUM).round() as i64, admissible }
}

/// Breadth-first search over admissible words from `(w0, z)`, branching over
/// indices with `P(w, {x}) > cutoff` and over the atoms of each selected
/// measure. Returns `NotInFilled` (certified) as soon as any node leaves the
/// escape radius; returns `InFilled` when every node through `depth` stays
/// within the bounded box; otherwise `Unknown`.
///
/// Frontier nodes are deduplicated by quantized point value together with the
/// admissible index set of their state; every explored node corresponds to a
/// genuinely admissible word, so escape certificates are exact, while the
/// merged search keeps regime-structured systems (where whole state blocks
/// share one admissible set) to a linear frontier.
pub fn filled_in_membership(
    model: &RsccModel,
    w0: State,
    z: ExtendedComplex,
    search: &WordSearchParams,
) -> Result<TriState, Error> {
    if search.depth == 0 {
        return Err(Error::Param("word search depth must be >= 1".into()));
    }
    require_certifiable(model)?;
    let z0 = match z {
        ExtendedComplex::Infinity => return Ok(TriState::NotInFilled),
        ExtendedComplex::Finite(z0) => z0,
    };
    let r2 = search.radius * search.radius;
    let b2 = search.bound * search.bound;
    if z0.norm_sqr() > r2 {
        // every admissible word escalates a point already beyond the radius
        return Ok(TriState::NotInFilled);
    }
    let mut row = vec![0.0; model.n_indices];
    let admissible_mask = |model: &RsccModel, w: State, row: &mut [f64]| -> u64 {
        model.transition_row(w, row);
        let mut mask = 0u64;
        for (x, &p) in row.iter().enumerate() {
            if p > search.admissibility_cutoff {
                mask |= 1 << x;
            }
        }
        mask
    };

    let mut frontier: Vec<(State, Complex64)> = vec![(w0, z0)];
    let mut explored = 1usize;
    let mut saw_gray = false;
    for _ in 0..search.depth {
        let mut next: Vec<(State, Complex64)> = Vec::with_capacity(frontier.len() * 2);
        let mut seen: HashSet<NodeKey> = HashSet::with_capacity(frontier.len() * 2);
        for &(w, zc) in &frontier {
            let mask = admissible_mask(model, w, &mut row);
            for x in 0..model.n_indices {
                if mask & (1 << x) == 0 {
                    continue;
                }
                let w_next = model.update_state(w, x);
                let child_mask = admissible_mask(model, w_next, &mut row);
                for (poly, _) in model.measures[x].atoms() {
                    let z_next = poly.eval_complex(zc);
                    let n2 = z_next.norm_sqr();
                    if !n2.is_finite() || n2 > r2 {
                        return Ok(TriState::NotInFilled);
                    }
                    if n2 > b2 {
                        saw_gray = true;
                    }
                    if seen.insert(node_key(z_next, child_mask)) {
                        explored += 1;
                        if explored > search.node_budget {
                            return Err(Error::Branching(search.node_budget));
                        }
                        next.push((w_next, z_next));
                    }
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    if saw_gray {
        Ok(TriState::Unknown)
    } else {
        Ok(TriState::InFilled)
    }
}

/// Per-cell cross-validation of the word search against the Monte Carlo
/// estimator.
#[derive(Debug, Clone)]
pub struct ZeroSetCell {
    pub z: Complex64,
    pub membership: TriState,
    pub estimate: EscapeEstimate,
    /// `None` when the word search was inconclusive.
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ZeroSetReport {
    pub cells: Vec<ZeroSetCell>,
    /// Fraction of decided cells that agree; vacuously 1 when nothing was
    /// decided.
    pub agreement_fraction: f64,
    pub decided: usize,
    pub unknown: usize,
}

/// Cross-validates the zero set of the escape probability against the
/// filled-in verdicts: a certified `NotInFilled` cell must see at least one
/// escaping sample (sampling floor `1/samples`), and an `InFilled` cell must
/// see none within the step truncation.
pub fn check_zero_set_agreement(
    model: &RsccModel,
    w0: State,
    grid: &ZGrid,
    params: &EscapeParams,
    search: &WordSearchParams,
) -> Result<ZeroSetReport, Error> {
    let points = grid.points();
    let estimates = escape_estimates_at(
        model,
        w0,
        &points.iter().map(|&z| ExtendedComplex::Finite(z)).collect::<Vec<_>>(),
        params,
    )?;
    let verdicts: Vec<Result<TriState, Error>> = exec::map_indexed(points.len(), |i| {
        filled_in_membership(model, w0, ExtendedComplex::Finite(points[i]), search)
    });
    let mut cells = Vec::with_capacity(points.len());
    let mut decided = 0usize;
    let mut agreeing = 0usize;
    let mut unknown = 0usize;
    for ((z, estimate), verdict) in points.into_iter().zip(estimates).zip(verdicts) {
        let membership = verdict?;
        let agrees = match membership {
            TriState::NotInFilled => Some(estimate.escaped_count >= 1),
            TriState::InFilled => Some(estimate.escaped_count == 0),
            TriState::Unknown => None,
        };
        match agrees {
            Some(true) => {
                decided += 1;
                agreeing += 1;
            }
            Some(false) => decided += 1,
            None => unknown += 1,
        }
        cells.push(ZeroSetCell { z, membership, estimate, agrees });
    }
    let agreement_fraction = if decided == 0 { 1.0 } else { agreeing as f64 / decided as f64 };
    Ok(ZeroSetReport { cells, agreement_fraction, decided, unknown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_example, ExampleSpec};
    use crate::poly::escape_radius;

    fn reinforcement() -> (RsccModel, f64) {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        (model, r)
    }

    #[test]
    fn deterministic_boundary_values() {
        let (model, r) = reinforcement();
        let params = EscapeParams { samples: 1000, ..EscapeParams::new(r) };
        let est =
            estimate_escape_probability(&model, State::new(0.0), ExtendedComplex::finite(1.5, 0.0), &params)
                .unwrap();
        assert_eq!(est.estimate, 1.0);
        let est =
            estimate_escape_probability(&model, State::new(1.0), ExtendedComplex::finite(1.5, 0.0), &params)
                .unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.truncated_count, est.samples);
    }

    #[test]
    fn infinity_escapes_immediately() {
        let (model, r) = reinforcement();
        let params = EscapeParams { samples: 64, ..EscapeParams::new(r) };
        let est =
            estimate_escape_probability(&model, State::new(0.5), ExtendedComplex::Infinity, &params)
                .unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.escaped_count, 64);
    }

    #[test]
    fn interior_state_matches_product_oracle() {
        let (model, r) = reinforcement();
        let params = EscapeParams {
            samples: 100_000,
            max_steps: 300,
            seed: 42,
            ..EscapeParams::new(r)
        };
        let est =
            estimate_escape_probability(&model, State::new(0.5), ExtendedComplex::finite(2.0, 0.0), &params)
                .unwrap();
        let oracle = crate::models::reinforcement_escape_value_at_two(0.5, 0.5);
        let tol = (3.0 * est.std_error).max(0.01);
        assert!(
            (est.estimate - oracle).abs() <= tol,
            "estimate {} vs oracle {oracle}",
            est.estimate
        );
    }

    #[test]
    fn estimate_fields_are_consistent() {
        let (model, r) = reinforcement();
        let params = EscapeParams { samples: 500, seed: 7, ..EscapeParams::new(r) };
        let est =
            estimate_escape_probability(&model, State::new(0.3), ExtendedComplex::finite(1.8, 0.3), &params)
                .unwrap();
        assert!((0.0..=1.0).contains(&est.estimate));
        assert_eq!(est.estimate, est.escaped_count as f64 / est.samples as f64);
        assert!(est.escaped_count + est.truncated_count <= est.samples);
        let se = (est.estimate * (1.0 - est.estimate) / est.samples as f64).sqrt();
        assert_eq!(est.std_error, se);
    }

    #[test]
    fn local_constancy_inside_and_outside() {
        let (model, r) = reinforcement();
        let params = EscapeParams { samples: 200, seed: 5, ..EscapeParams::new(r) };
        let mut rng = crate::stream::rng_for(99, &[]);
        use rand::Rng;
        for &p in &[0.0, 0.25, 0.5, 1.0] {
            for _ in 0..10 {
                let angle: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                let inner = Complex64::from_polar(rng.gen::<f64>() * 0.9, angle);
                let est = estimate_escape_probability(
                    &model,
                    State::new(p),
                    ExtendedComplex::Finite(inner),
                    &params,
                )
                .unwrap();
                assert_eq!(est.estimate, 0.0, "inside the unit disk at p={p}");
                let outer = Complex64::from_polar(2.0 + rng.gen::<f64>(), angle);
                let est = estimate_escape_probability(
                    &model,
                    State::new(p),
                    ExtendedComplex::Finite(outer),
                    &params,
                )
                .unwrap();
                assert_eq!(est.estimate, 1.0, "outside |z|=2 at p={p}");
            }
        }
    }

    #[test]
    fn escape_map_unit_disk_silhouette() {
        let (model, r) = reinforcement();
        let grid = ZGrid::new(3.0, 33).unwrap();
        let params = EscapeParams { samples: 50, seed: 11, ..EscapeParams::new(r) };
        let map = escape_map(&model, State::new(0.0), &grid, &params).unwrap();
        for (i, cell) in map.cells.iter().enumerate() {
            let z = grid.node(i / grid.n, i % grid.n);
            let expected = if z.norm() <= 1.0 { 0.0 } else { 1.0 };
            assert_eq!(cell.estimate, expected, "at z = {z}");
        }
    }

    #[test]
    fn two_component_map_marks_shifted_disk() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = ZGrid::new(5.0, 21).unwrap();
        let params = EscapeParams { samples: 40, seed: 3, ..EscapeParams::new(r) };
        let map = escape_map(&model, State::with_bit(0.5, 1), &grid, &params).unwrap();
        for (i, cell) in map.cells.iter().enumerate() {
            let z = grid.node(i / grid.n, i % grid.n);
            let expected = if (z - Complex64::new(3.0, 0.0)).norm() <= 1.0 { 0.0 } else { 1.0 };
            assert_eq!(cell.estimate, expected, "at z = {z}");
        }
    }

    #[test]
    fn word_search_verdicts() {
        let (model, r) = reinforcement();
        let search = WordSearchParams { bound: 4.0, ..WordSearchParams::new(20, r) };
        let v = filled_in_membership(&model, State::new(0.5), ExtendedComplex::finite(0.5, 0.0), &search)
            .unwrap();
        assert_eq!(v, TriState::InFilled);
        let v = filled_in_membership(&model, State::new(0.5), ExtendedComplex::finite(1.5, 0.0), &search)
            .unwrap();
        assert_eq!(v, TriState::NotInFilled);
        let model2 = build_example(&ExampleSpec::TwoComponent).unwrap();
        let r2 = escape_radius(&model2.family_atoms(), 2.0).unwrap();
        let search2 = WordSearchParams::new(25, r2);
        let v = filled_in_membership(&model2, State::with_bit(0.2, 1), ExtendedComplex::finite(3.0, 0.0), &search2)
            .unwrap();
        assert_eq!(v, TriState::InFilled);
    }

    #[test]
    fn word_search_infinity_is_excluded() {
        let (model, r) = reinforcement();
        let search = WordSearchParams::new(5, r);
        let v = filled_in_membership(&model, State::new(0.5), ExtendedComplex::Infinity, &search).unwrap();
        assert_eq!(v, TriState::NotInFilled);
    }

    #[test]
    fn zero_set_agreement_vacuous_on_empty_grid() {
        let (model, r) = reinforcement();
        let grid = ZGrid::new(1.0, 0).unwrap();
        let params = EscapeParams { samples: 10, ..EscapeParams::new(r) };
        let search = WordSearchParams::new(5, r);
        let report =
            check_zero_set_agreement(&model, State::new(0.0), &grid, &params, &search).unwrap();
        assert_eq!(report.agreement_fraction, 1.0);
        assert_eq!(report.decided, 0);
    }

    #[test]
    fn degree_one_atom_is_rejected() {
        use crate::poly::Polynomial;
        use crate::rscc::{FiniteMeasureOnPoly, StateSpace};
        use std::sync::Arc;
        let affine = Polynomial::from_real(&[0.5, 0.5]).unwrap();
        let model = RsccModel::new(
            StateSpace::Interval { lo: 0.0, hi: 1.0 },
            1,
            Arc::new(|w, _| w),
            Arc::new(|_, buf: &mut [f64]| buf[0] = 1.0),
            vec![FiniteMeasureOnPoly::dirac(affine)],
        )
        .unwrap();
        let params = EscapeParams::new(4.0);
        let err = estimate_escape_probability(
            &model,
            State::new(0.0),
            ExtendedComplex::finite(0.0, 0.0),
            &params,
        );
        assert!(matches!(err, Err(Error::Radius(_))));
    }
}
