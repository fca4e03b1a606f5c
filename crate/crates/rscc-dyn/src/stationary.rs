//! Discretized state kernel, stationary distributions, ergodic components,
//! stationary-averaged escape probabilities, and essential filled-in sets.

use crate::error::Error;
use crate::escape::{self, EscapeEstimate, EscapeParams, TriState, WordSearchParams, ZGrid};
use crate::exec;
use crate::rscc::{RsccModel, WGrid};
use crate::sphere::ExtendedComplex;
use crate::stream::{self, domain};
use num_complex::Complex64;
use serde::Serialize;

/// Support cutoff of the kernel's transition graph.
const SUPPORT_EPS: f64 = 1e-15;

/// Row-stochastic discretization of the induced state kernel: from node `w`,
/// mass `P(w, {x})` is deposited on the node nearest to `u(w, x)` (ties round
/// up).
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    pub grid: WGrid,
    /// Row-major `n x n` matrix.
    pub matrix: Vec<f64>,
    pub n: usize,
}

pub fn discretize_kernel(model: &RsccModel, n_per_factor: usize) -> Result<DiscreteKernel, Error> {
    let grid = WGrid::new(&model.space, n_per_factor)?;
    let n = grid.len();
    let mut matrix = vec![0.0; n * n];
    let mut row = vec![0.0; model.n_indices];
    for (i, &w) in grid.nodes.iter().enumerate() {
        model.transition_row(w, &mut row);
        for (x, &p) in row.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let j = grid.nearest(model.update_state(w, x));
            matrix[i * n + j] += p;
        }
        let sum: f64 = matrix[i * n..(i + 1) * n].iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!("kernel row {i} sums to {sum}")));
        }
    }
    Ok(DiscreteKernel { grid, matrix, n })
}

impl DiscreteKernel {
    /// `out = weights . Q` (one step of the dual operator).
    pub fn propagate(&self, weights: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = &self.matrix[i * self.n..(i + 1) * self.n];
            for (j, &q) in row.iter().enumerate() {
                if q != 0.0 {
                    out[j] += w * q;
                }
            }
        }
    }
}

/// A probability vector over state nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub weights: Vec<f64>,
}

impl StateDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self, Error> {
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::Param("distribution weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Param(format!("distribution weights sum to {sum}, expected 1")));
        }
        Ok(StateDistribution { weights })
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        StateDistribution { weights }
    }

    pub fn uniform(n: usize) -> Self {
        StateDistribution { weights: vec![1.0 / n as f64; n] }
    }

    /// Uniform over a subset, zero elsewhere.
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut weights = vec![0.0; n];
        for &i in support {
            weights[i] = 1.0 / support.len() as f64;
        }
        StateDistribution { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Total variation distance `1/2 sum |a_i - b_i|`.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Result of the stationary-distribution iteration.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub distribution: StateDistribution,
    /// Exact stationarity residual `TV(pi Q, pi)` of the returned vector.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates the dual kernel operator from `init`, tracking both the plain
/// power iterate and its Cesaro average, and returns whichever first reaches
/// stationarity residual `<= tol` (the Cesaro average covers periodic
/// chains). Hitting `n_iter` returns the better of the two with
/// `converged = false`.
pub fn compute_stationary(
    kernel: &DiscreteKernel,
    init: &StateDistribution,
    n_iter: usize,
    tol: f64,
) -> StationaryResult {
    let n = kernel.n;
    assert_eq!(init.len(), n, "init distribution must match the kernel grid");
    let mut mu = init.weights.clone();
    let mut mu_next = vec![0.0; n];
    let mut cesaro_sum = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut k = 0usize;
    while k < n_iter {
        kernel.propagate(&mu, &mut mu_next);
        k += 1;
        for (s, &v) in cesaro_sum.iter_mut().zip(&mu_next) {
            *s += v;
        }
        let power_residual = tv_distance(&mu_next, &mu);
        std::mem::swap(&mut mu, &mut mu_next);
        if power_residual <= tol {
            return StationaryResult {
                distribution: StateDistribution { weights: mu },
                residual: power_residual,
                iterations: k,
                converged: true,
            };
        }
        if k % 16 == 0 {
            let cesaro: Vec<f64> = cesaro_sum.iter().map(|&s| s / k as f64).collect();
            kernel.propagate(&cesaro, &mut scratch);
            let cesaro_residual = tv_distance(&scratch, &cesaro);
            if cesaro_residual <= tol {
                return StationaryResult {
                    distribution: StateDistribution { weights: cesaro },
                    residual: cesaro_residual,
                    iterations: k,
                    converged: true,
                };
            }
        }
    }
    // no convergence: return the better of the two candidates
    kernel.propagate(&mu, &mut scratch);
    let power_residual = tv_distance(&scratch, &mu);
    let cesaro: Vec<f64> = cesaro_sum.iter().map(|&s| s / k.max(1) as f64).collect();
    kernel.propagate(&cesaro, &mut scratch);
    let cesaro_residual = tv_distance(&scratch, &cesaro);
    if power_residual <= cesaro_residual {
        StationaryResult {
            distribution: StateDistribution { weights: mu },
            residual: power_residual,
            iterations: k,
            converged: false,
        }
    } else {
        StationaryResult {
            distribution: StateDistribution { weights: cesaro },
            residual: cesaro_residual,
            iterations: k,
            converged: false,
        }
    }
}

/// A closed recurrent class of the discretized kernel together with its
/// stationary distribution (embedded in the full node space).
#[derive(Debug, Clone)]
pub struct ErgodicComponent {
    pub nodes: Vec<usize>,
    pub stationary: StateDistribution,
    pub residual: f64,
}

/// Strongly-connected-component analysis of the kernel's support graph;
/// closed classes (no edge leaving the class) are returned sorted by their
/// smallest node index, each with the stationary distribution of the
/// restricted chain.
pub fn enumerate_ergodic_components(
    kernel: &DiscreteKernel,
    n_iter: usize,
    tol: f64,
) -> Vec<ErgodicComponent> {
    let n = kernel.n;
    let mut adj = vec![Vec::new(); n];
    let mut radj = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if kernel.matrix[i * n + j] > SUPPORT_EPS {
                adj[i].push(j);
                radj[j].push(i);
            }
        }
    }
    let sccs = kosaraju(&adj, &radj);
    let mut component_of = vec![0usize; n];
    for (c, comp) in sccs.iter().enumerate() {
        for &v in comp {
            component_of[v] = c;
        }
    }
    let mut closed: Vec<Vec<usize>> = sccs
        .into_iter()
        .filter(|comp| {
            comp.iter().all(|&v| adj[v].iter().all(|&to| component_of[to] == component_of[v]))
        })
        .map(|mut comp| {
            comp.sort_unstable();
            comp
        })
        .collect();
    closed.sort_by_key(|comp| comp[0]);

    closed
        .into_iter()
        .map(|nodes| {
            let m = nodes.len();
            // restricted, renormalized kernel of the closed class
            let mut sub = vec![0.0; m * m];
            for (a, &i) in nodes.iter().enumerate() {
                let mut row_sum = 0.0;
                for (b, &j) in nodes.iter().enumerate() {
                    let q = kernel.matrix[i * n + j];
                    sub[a * m + b] = q;
                    row_sum += q;
                }
                for b in 0..m {
                    sub[a * m + b] /= row_sum;
                }
            }
            let sub_kernel = DiscreteKernel {
                grid: kernel.grid.clone(),
                matrix: sub,
                n: m,
            };
            let result =
                compute_stationary(&sub_kernel, &StateDistribution::uniform(m), n_iter, tol);
            let mut weights = vec![0.0; n];
            for (a, &i) in nodes.iter().enumerate() {
                weights[i] = result.distribution.weights[a];
            }
            ErgodicComponent {
                nodes,
                stationary: StateDistribution { weights },
                residual: result.residual,
            }
        })
        .collect()
}

/// Iterative Kosaraju: SCCs in reverse topological order of discovery.
fn kosaraju(adj: &[Vec<usize>], radj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        stack.push((start, 0));
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let to = adj[v][*next];
                *next += 1;
                if !visited[to] {
                    visited[to] = true;
                    stack.push((to, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for &start in order.iter().rev() {
        if assigned[start] {
            continue;
        }
        let mut comp = vec![start];
        assigned[start] = true;
        let mut work = vec![start];
        while let Some(v) = work.pop() {
            for &to in &radj[v] {
                if !assigned[to] {
                    assigned[to] = true;
                    comp.push(to);
                    work.push(to);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Escape estimates of every state node at a fixed point of the sphere,
/// computed once and shared across all averagings so that affinity in the
/// distribution is exact.
#[derive(Debug, Clone)]
pub struct NodeEscapeTable {
    pub z: ExtendedComplex,
    pub estimates: Vec<EscapeEstimate>,
}

pub fn node_escape_table(
    model: &RsccModel,
    grid: &WGrid,
    z: ExtendedComplex,
    params: &EscapeParams,
) -> Result<NodeEscapeTable, Error> {
    params.validate()?;
    if model.min_atom_degree() < 2 {
        return Err(Error::Radius(
            "escape certification needs every atom polynomial to have degree >= 2".into(),
        ));
    }
    let estimates = exec::map_indexed(grid.len(), |i| {
        let node_params = EscapeParams {
            seed: stream::derive(params.seed, &[domain::NODE, i as u64]),
            ..*params
        };
        escape::estimate_escape_probability(model, grid.nodes[i], z, &node_params)
            .expect("parameters and atoms validated above")
    });
    Ok(NodeEscapeTable { z, estimates })
}

impl NodeEscapeTable {
    /// `sum_i pi_i * estimate_i`, folded in node order.
    pub fn averaged(&self, pi: &StateDistribution) -> f64 {
        assert_eq!(pi.len(), self.estimates.len());
        pi.weights
            .iter()
            .zip(&self.estimates)
            .map(|(&w, e)| w * e.estimate)
            .sum()
    }
}

/// Stationary-averaged escape probability at `z` under `pi`: the average of
/// per-node statewise estimates against the distribution. Deterministic for a
/// fixed seed.
pub fn stationary_averaged_escape(
    model: &RsccModel,
    grid: &WGrid,
    pi: &StateDistribution,
    z: ExtendedComplex,
    params: &EscapeParams,
) -> Result<f64, Error> {
    Ok(node_escape_table(model, grid, z, params)?.averaged(pi))
}

/// The interval of stationary-averaged escape values at a point, with the
/// ergodic components attaining each endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumInterval {
    pub lo: f64,
    pub hi: f64,
    pub attaining_lo: usize,
    pub attaining_hi: usize,
}

/// Evaluates the averaged escape probability at `z` under every ergodic
/// stationary distribution (sharing one per-node estimate table) and returns
/// the attained interval; ties resolve to the lower component index.
pub fn escape_spectrum(
    model: &RsccModel,
    grid: &WGrid,
    components: &[ErgodicComponent],
    z: ExtendedComplex,
    params: &EscapeParams,
) -> Result<SpectrumInterval, Error> {
    if components.is_empty() {
        return Err(Error::Param("need at least one ergodic component".into()));
    }
    let table = node_escape_table(model, grid, z, params)?;
    let values: Vec<f64> = components.iter().map(|c| table.averaged(&c.stationary)).collect();
    let mut lo = 0usize;
    let mut hi = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v < values[lo] {
            lo = i;
        }
        if v > values[hi] {
            hi = i;
        }
    }
    Ok(SpectrumInterval { lo: values[lo], hi: values[hi], attaining_lo: lo, attaining_hi: hi })
}

/// Grid cells that are `InFilled` for every positive-mass node of `B`.
///
/// Returns one flag per grid cell (row-major). Errors with [`Error::EmptyMass`]
/// when `B` carries no mass under `pi`.
pub fn pi_essential_filled_in(
    model: &RsccModel,
    grid: &WGrid,
    pi: &StateDistribution,
    b: &[usize],
    zgrid: &ZGrid,
    search: &WordSearchParams,
) -> Result<Vec<bool>, Error> {
    let mass: f64 = b.iter().map(|&i| pi.weights[i]).sum();
    if mass <= 0.0 {
        return Err(Error::EmptyMass);
    }
    let supported: Vec<usize> = b.iter().copied().filter(|&i| pi.weights[i] > 0.0).collect();
    let points = zgrid.points();
    let flags: Vec<Result<bool, Error>> = exec::map_indexed(points.len(), |c| {
        let z = ExtendedComplex::Finite(points[c]);
        for &i in &supported {
            match escape::filled_in_membership(model, grid.nodes[i], z, search)? {
                TriState::InFilled => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    });
    flags.into_iter().collect()
}

/// Report of the two-set essential filled-in criterion: when two disjoint
/// positive-mass state sets have nonempty, disjoint essential filled-in sets,
/// the averaged escape probability is everywhere positive yet below 1
/// somewhere.
#[derive(Debug, Clone)]
pub struct EssentialReport {
    pub cells_b1: Vec<bool>,
    pub cells_b2: Vec<bool>,
    pub nonempty: (bool, bool),
    pub disjoint: bool,
    /// Minimum averaged escape value over the sampled points.
    pub min_averaged: f64,
    /// A point inside the first essential set, where the averaged value
    /// stays below 1.
    pub witness_z0: Option<Complex64>,
    pub witness_value: f64,
}

pub fn essential_criterion(
    model: &RsccModel,
    grid: &WGrid,
    pi: &StateDistribution,
    b1: &[usize],
    b2: &[usize],
    zgrid: &ZGrid,
    search: &WordSearchParams,
    params: &EscapeParams,
    sample_points: &[ExtendedComplex],
) -> Result<EssentialReport, Error> {
    let cells_b1 = pi_essential_filled_in(model, grid, pi, b1, zgrid, search)?;
    let cells_b2 = pi_essential_filled_in(model, grid, pi, b2, zgrid, search)?;
    let nonempty = (cells_b1.iter().any(|&f| f), cells_b2.iter().any(|&f| f));
    let disjoint = cells_b1.iter().zip(&cells_b2).all(|(&a, &b)| !(a && b));
    let mut min_averaged = f64::INFINITY;
    for (i, &z) in sample_points.iter().enumerate() {
        let p = EscapeParams { seed: stream::derive(params.seed, &[71, i as u64]), ..*params };
        min_averaged = min_averaged.min(stationary_averaged_escape(model, grid, pi, z, &p)?);
    }
    let points = zgrid.points();
    let witness_z0 = cells_b1.iter().position(|&f| f).map(|c| points[c]);
    let witness_value = match witness_z0 {
        Some(z) => stationary_averaged_escape(
            model,
            grid,
            pi,
            ExtendedComplex::Finite(z),
            params,
        )?,
        None => f64::NAN,
    };
    Ok(EssentialReport {
        cells_b1,
        cells_b2,
        nonempty,
        disjoint,
        min_averaged,
        witness_z0,
        witness_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_example, ExampleSpec};
    use crate::poly::escape_radius;

    #[test]
    fn kernel_rows_at_absorbing_nodes() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let kernel = discretize_kernel(&model, 17).unwrap();
        let n = kernel.n;
        assert_eq!(kernel.matrix[0], 1.0, "p = 0 is a point mass on itself");
        assert_eq!(kernel.matrix[(n - 1) * n + (n - 1)], 1.0, "p = 1 likewise");
    }

    #[test]
    fn kernel_rows_for_dyadic_updates() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let kernel = discretize_kernel(&model, 5).unwrap();
        // node (s = 0.5, bit 0) is index 2; children s/2 = 0.25 (node 1) and
        // (s+1)/2 = 0.75 (node 3), both in the bit-0 block
        let n = kernel.n;
        assert_eq!(kernel.matrix[2 * n + 1], 0.5);
        assert_eq!(kernel.matrix[2 * n + 3], 0.5);
    }

    #[test]
    fn stationary_of_absorbing_chain() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let kernel = discretize_kernel(&model, 17).unwrap();
        let init = StateDistribution::dirac(kernel.n, 0);
        let result = compute_stationary(&kernel, &init, 10_000, 1e-10);
        assert!(result.converged);
        assert_eq!(result.distribution.weights[0], 1.0);
    }

    #[test]
    fn component_counts_for_builtin_models() {
        let cases = [
            (ExampleSpec::Reinforcement { alpha: 0.5 }, 2usize),
            (ExampleSpec::Truncated { alpha: 0.5, epsilon: 0.1 }, 1),
            (ExampleSpec::TwoComponent, 2),
        ];
        for (spec, expected) in cases {
            let model = build_example(&spec).unwrap();
            for n_w in [16, 32] {
                let kernel = discretize_kernel(&model, n_w).unwrap();
                let comps = enumerate_ergodic_components(&kernel, 100_000, 1e-9);
                assert_eq!(comps.len(), expected, "{spec:?} at n_w = {n_w}");
                for c in &comps {
                    assert!(c.residual <= 1e-8, "residual {}", c.residual);
                }
            }
        }
    }

    #[test]
    fn two_component_classes_split_by_bit() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let kernel = discretize_kernel(&model, 16).unwrap();
        let comps = enumerate_ergodic_components(&kernel, 100_000, 1e-9);
        assert_eq!(comps.len(), 2);
        assert!(comps[0].nodes.iter().all(|&i| kernel.grid.nodes[i].bit == 0));
        assert!(comps[1].nodes.iter().all(|&i| kernel.grid.nodes[i].bit == 1));
    }

    #[test]
    fn truncated_stationary_is_unique() {
        let model = build_example(&ExampleSpec::Truncated { alpha: 0.5, epsilon: 0.1 }).unwrap();
        let kernel = discretize_kernel(&model, 33).unwrap();
        let a = compute_stationary(&kernel, &StateDistribution::dirac(kernel.n, 0), 100_000, 1e-10);
        let b = compute_stationary(
            &kernel,
            &StateDistribution::dirac(kernel.n, kernel.n - 1),
            100_000,
            1e-10,
        );
        assert!(a.converged && b.converged);
        assert!(tv_distance(&a.distribution.weights, &b.distribution.weights) < 1e-8);
    }

    #[test]
    fn averaged_escape_of_two_component_is_half_at_zero() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = WGrid::new(&model.space, 64).unwrap();
        let pi = StateDistribution::uniform(grid.len());
        let params = EscapeParams { samples: 100, seed: 42, ..EscapeParams::new(r) };
        let t0 = stationary_averaged_escape(
            &model,
            &grid,
            &pi,
            ExtendedComplex::finite(0.0, 0.0),
            &params,
        )
        .unwrap();
        assert_eq!(t0, 0.5);
    }

    #[test]
    fn averaged_escape_at_infinity_is_one() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = WGrid::new(&model.space, 8).unwrap();
        let pi = StateDistribution::uniform(grid.len());
        let params = EscapeParams { samples: 10, ..EscapeParams::new(r) };
        let t = stationary_averaged_escape(&model, &grid, &pi, ExtendedComplex::Infinity, &params)
            .unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn spectrum_on_reinforcement_annulus() {
        let model = build_example(&ExampleSpec::Reinforcement { alpha: 0.5 }).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let kernel = discretize_kernel(&model, 16).unwrap();
        let comps = enumerate_ergodic_components(&kernel, 100_000, 1e-9);
        let params = EscapeParams { samples: 500, seed: 42, ..EscapeParams::new(r) };
        let s = escape_spectrum(
            &model,
            &kernel.grid,
            &comps,
            ExtendedComplex::finite(1.5, 0.0),
            &params,
        )
        .unwrap();
        assert_eq!((s.lo, s.hi), (0.0, 1.0));
        assert_eq!(s.attaining_hi, 0, "p = 0 escapes on the annulus");
        assert_eq!(s.attaining_lo, 1, "p = 1 stays bounded there");
    }

    #[test]
    fn affinity_is_exact_under_shared_estimates() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = WGrid::new(&model.space, 32).unwrap();
        let n = grid.len();
        let comp0: Vec<usize> = (0..32).collect();
        let comp1: Vec<usize> = (32..64).collect();
        let pi1 = StateDistribution::uniform_on(n, &comp0);
        let pi2 = StateDistribution::uniform_on(n, &comp1);
        let params = EscapeParams { samples: 200, seed: 9, ..EscapeParams::new(r) };
        let table =
            node_escape_table(&model, &grid, ExtendedComplex::finite(1.4, 0.2), &params).unwrap();
        let t1 = table.averaged(&pi1);
        let t2 = table.averaged(&pi2);
        for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mix: Vec<f64> = pi1
                .weights
                .iter()
                .zip(&pi2.weights)
                .map(|(&a, &b)| theta * a + (1.0 - theta) * b)
                .collect();
            let tm = table.averaged(&StateDistribution { weights: mix });
            assert_eq!(tm, theta * t1 + (1.0 - theta) * t2);
            assert!(tm >= t1.min(t2) && tm <= t1.max(t2));
        }
    }

    #[test]
    fn essential_sets_disjoint_for_two_component() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = WGrid::new(&model.space, 8).unwrap();
        let pi = StateDistribution::uniform(grid.len());
        let b1: Vec<usize> = (0..8).collect();
        let b2: Vec<usize> = (8..16).collect();
        let zgrid = ZGrid::new(5.0, 33).unwrap();
        let search = WordSearchParams::new(20, r);
        let c1 = pi_essential_filled_in(&model, &grid, &pi, &b1, &zgrid, &search).unwrap();
        let c2 = pi_essential_filled_in(&model, &grid, &pi, &b2, &zgrid, &search).unwrap();
        assert!(c1.iter().any(|&f| f));
        assert!(c2.iter().any(|&f| f));
        assert!(c1.iter().zip(&c2).all(|(&a, &b)| !(a && b)));
        let points = zgrid.points();
        for (c, &flag) in c1.iter().enumerate() {
            if flag {
                assert!(points[c].norm() <= 1.0 + 0.25, "B1 cells hug the unit disk");
            }
        }
    }

    #[test]
    fn empty_mass_is_an_error() {
        let model = build_example(&ExampleSpec::TwoComponent).unwrap();
        let r = escape_radius(&model.family_atoms(), 2.0).unwrap();
        let grid = WGrid::new(&model.space, 4).unwrap();
        let pi = StateDistribution::uniform_on(grid.len(), &[0, 1, 2, 3]);
        let zgrid = ZGrid::new(2.0, 3).unwrap();
        let search = WordSearchParams::new(5, r);
        let err = pi_essential_filled_in(&model, &grid, &pi, &[4, 5], &zgrid, &search);
        assert!(matches!(err, Err(Error::EmptyMass)));
    }
}
