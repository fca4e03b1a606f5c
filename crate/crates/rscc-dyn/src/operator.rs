//! Discretized functions on the product of the sphere and the state space,
//! and the transition operator iterated to its escape fixed point.

use crate::error::Error;
use crate::escape::ZGrid;
use crate::exec;
use crate::rscc::{RsccModel, WGrid};
use num_complex::Complex64;
use std::sync::Arc;

/// Discretization of the product space: an `n x n` grid over
/// `[-L, L]^2` plus one dedicated node for infinity, times a uniform state
/// grid. Requires `L >= radius` so that points beyond the box are certified
/// escaped and may read the infinity node.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    pub z: ZGrid,
    pub w: WGrid,
    /// Escape radius the grid was built for.
    pub radius: f64,
}

impl ProductGrid {
    pub fn new(z: ZGrid, w: WGrid, radius: f64) -> Result<Self, Error> {
        if z.n < 2 {
            return Err(Error::Param("product grid needs at least a 2x2 spatial grid".into()));
        }
        if !(z.half_extent >= radius) {
            return Err(Error::Param(format!(
                "grid extent {} must cover the escape radius {radius}",
                z.half_extent
            )));
        }
        Ok(ProductGrid { z, w, radius })
    }

    /// Number of spatial nodes including the infinity node.
    pub fn n_spatial(&self) -> usize {
        self.z.len() + 1
    }

    pub fn infinity_index(&self) -> usize {
        self.z.len()
    }

    pub fn n_states(&self) -> usize {
        self.w.len()
    }

    pub fn len(&self) -> usize {
        self.n_spatial() * self.n_states()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A real-valued function on the product grid, stored as one contiguous slice
/// per state node.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<ProductGrid>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn constant(grid: Arc<ProductGrid>, value: f64) -> Self {
        let n = grid.len();
        GridFunction { grid, values: vec![value; n] }
    }

    #[inline]
    pub fn index(&self, w: usize, zi: usize) -> usize {
        w * self.grid.n_spatial() + zi
    }

    pub fn value(&self, w: usize, zi: usize) -> f64 {
        self.values[self.index(w, zi)]
    }

    /// The spatial slice attached to state node `w`.
    pub fn slice(&self, w: usize) -> &[f64] {
        let n = self.grid.n_spatial();
        &self.values[w * n..(w + 1) * n]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest jump between spatially adjacent nodes, maximized over state
    /// slices. A discontinuity of the limit shows up as an O(1) jump that
    /// does not shrink under grid refinement.
    pub fn max_adjacent_jump(&self) -> f64 {
        let n = self.grid.z.n;
        let mut worst = 0.0f64;
        for w in 0..self.grid.n_states() {
            let s = self.slice(w);
            for iy in 0..n {
                for ix in 0..n {
                    let v = s[iy * n + ix];
                    if ix + 1 < n {
                        worst = worst.max((v - s[iy * n + ix + 1]).abs());
                    }
                    if iy + 1 < n {
                        worst = worst.max((v - s[(iy + 1) * n + ix]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// The test function of the escape iteration: 0 on `|z| <= R`, 1 from
/// `|z| >= 2R` outward and at the infinity node, linear in `log|z|` in
/// between, independent of the state.
pub fn make_test_function(grid: &Arc<ProductGrid>) -> GridFunction {
    let radius = grid.radius;
    let mut f = GridFunction::constant(grid.clone(), 0.0);
    let n = grid.z.n;
    for w in 0..grid.n_states() {
        for iy in 0..n {
            for ix in 0..n {
                let z = grid.z.node(iy, ix);
                let idx = f.index(w, iy * n + ix);
                f.values[idx] = ramp(z.norm(), radius);
            }
        }
        let idx = f.index(w, grid.infinity_index());
        f.values[idx] = 1.0;
    }
    f
}

/// The log-linear ramp of the test function.
pub fn ramp(modulus: f64, radius: f64) -> f64 {
    if modulus <= radius {
        0.0
    } else if modulus >= 2.0 * radius {
        1.0
    } else {
        (modulus / radius).ln() / std::f64::consts::LN_2
    }
}

/// Bilinear stencil of an image point: four node indices and weights, or the
/// infinity node when the image leaves the box.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    idx: [u32; 4],
    wts: [f64; 4],
}

/// The transition operator bound to a model and a grid, with precomputed
/// image stencils (per index and atom, over spatial nodes) and precomputed
/// state projections `w -> nearest node of u(w, x)`.
pub struct TransitionOperator {
    grid: Arc<ProductGrid>,
    /// stencils[x][atom][zi]
    stencils: Vec<Vec<Vec<Stencil>>>,
    /// atom_wts[x][atom]: weight of each atom within its measure
    atom_wts: Vec<Vec<f64>>,
    /// wproj[w][x]: destination state node
    wproj: Vec<Vec<usize>>,
    /// prow[w][x]: transition probabilities at node w
    prow: Vec<Vec<f64>>,
    n_indices: usize,
}

impl TransitionOperator {
    pub fn new(model: &RsccModel, grid: Arc<ProductGrid>) -> Result<Self, Error> {
        let n = grid.z.n;
        let inf = grid.infinity_index() as u32;
        let l = grid.z.half_extent;
        let step = 2.0 * l / (n - 1) as f64;
        let mut stencils = Vec::with_capacity(model.n_indices);
        let mut atom_wts = Vec::with_capacity(model.n_indices);
        for x in 0..model.n_indices {
            atom_wts.push(
                model.measures[x].atoms().iter().map(|(_, w)| *w).collect::<Vec<f64>>(),
            );
            let mut per_atom = Vec::with_capacity(model.measures[x].len());
            for (poly, _) in model.measures[x].atoms() {
                let mut table = Vec::with_capacity(grid.n_spatial());
                for iy in 0..n {
                    for ix in 0..n {
                        let image = poly.eval_complex(grid.z.node(iy, ix));
                        table.push(locate(image, l, step, n, inf));
                    }
                }
                // the infinity node maps to itself under every polynomial
                table.push(Stencil { idx: [inf; 4], wts: [1.0, 0.0, 0.0, 0.0] });
                per_atom.push(table);
            }
            stencils.push(per_atom);
        }
        let mut wproj = Vec::with_capacity(grid.n_states());
        let mut prow = Vec::with_capacity(grid.n_states());
        let mut buf = vec![0.0; model.n_indices];
        for &wnode in &grid.w.nodes {
            model.transition_row(wnode, &mut buf);
            prow.push(buf.clone());
            wproj.push(
                (0..model.n_indices)
                    .map(|x| grid.w.nearest(model.update_state(wnode, x)))
                    .collect(),
            );
        }
        Ok(TransitionOperator {
            grid,
            stencils,
            atom_wts,
            wproj,
            prow,
            n_indices: model.n_indices,
        })
    }

    pub fn grid(&self) -> &Arc<ProductGrid> {
        &self.grid
    }

    /// One application, writing into `out`. Parallel over state slices; the
    /// result is independent of the schedule (pure arithmetic, disjoint
    /// writes).
    ///
    /// Each node value is an average of sampled values of `f` and is clamped
    /// to the hull of those samples, which keeps the Markov-operator
    /// invariants (constants preserved, positivity, sup-norm non-expansive)
    /// exact in floating point.
    pub fn apply_into(&self, f: &GridFunction, out: &mut GridFunction) {
        let nsp = self.grid.n_spatial();
        let stencils = &self.stencils;
        let atom_wts = &self.atom_wts;
        let wproj = &self.wproj;
        let prow = &self.prow;
        let n_indices = self.n_indices;
        exec::for_each_chunk_mut(&mut out.values, nsp, |w, slice| {
            for zi in 0..nsp {
                let mut acc = 0.0;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for x in 0..n_indices {
                    let p = prow[w][x];
                    if p <= 0.0 {
                        continue;
                    }
                    let dest = f.slice(wproj[w][x]);
                    let mut inner = 0.0;
                    for (atom, table) in stencils[x].iter().enumerate() {
                        let s = &table[zi];
                        let v0 = dest[s.idx[0] as usize];
                        let v1 = dest[s.idx[1] as usize];
                        let v2 = dest[s.idx[2] as usize];
                        let v3 = dest[s.idx[3] as usize];
                        let mut v =
                            v0 * s.wts[0] + v1 * s.wts[1] + v2 * s.wts[2] + v3 * s.wts[3];
                        let cmin = v0.min(v1).min(v2.min(v3));
                        let cmax = v0.max(v1).max(v2.max(v3));
                        v = v.clamp(cmin, cmax);
                        lo = lo.min(v);
                        hi = hi.max(v);
                        inner += atom_wts[x][atom] * v;
                    }
                    acc += p * inner;
                }
                slice[zi] = acc.clamp(lo, hi);
            }
        });
    }

    pub fn apply(&self, f: &GridFunction) -> GridFunction {
        let mut out = GridFunction::constant(self.grid.clone(), 0.0);
        self.apply_into(f, &mut out);
        out
    }
}

fn locate(image: Complex64, l: f64, step: f64, n: usize, inf: u32) -> Stencil {
    if !image.re.is_finite()
        || !image.im.is_finite()
        || image.re.abs() > l
        || image.im.abs() > l
    {
        return Stencil { idx: [inf; 4], wts: [1.0, 0.0, 0.0, 0.0] };
    }
    let ux = ((image.re + l) / step).clamp(0.0, (n - 1) as f64);
    let uy = ((image.im + l) / step).clamp(0.0, (n - 1) as f64);
    let ix = (ux.floor() as usize).min(n - 2);
    let iy = (uy.floor() as usize).min(n - 2);
    let fx = ux - ix as f64;
    let fy = uy - iy as f64;
    let base = (iy * n + ix) as u32;
    Stencil {
        idx: [base, base + 1, base + n as u32, base + n as u32 + 1],
        wts: [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy],
    }
}

/// One application of the transition operator; convenience wrapper that
/// builds the bound operator first. Iteration loops should construct
/// [`TransitionOperator`] once instead.
pub fn apply_transition_operator(
    model: &RsccModel,
    f: &GridFunction,
) -> Result<GridFunction, Error> {
    let op = TransitionOperator::new(model, f.grid.clone())?;
    Ok(op.apply(f))
}

/// Result of the escape fixed-point iteration.
#[derive(Debug, Clone)]
pub struct IterationResult {
    pub function: GridFunction,
    /// Sup-norm step differences, one per application.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Iterates `f <- M f` from the test function until the sup-norm step
/// difference drops below `tol` or `n_max` applications were made. A residual
/// plateau above `tol` is reported through `converged = false`, never as an
/// error; the best iterate is returned either way.
pub fn iterate_to_escape(
    model: &RsccModel,
    grid: Arc<ProductGrid>,
    n_max: usize,
    tol: f64,
) -> Result<IterationResult, Error> {
    if n_max == 0 || !(tol > 0.0) {
        return Err(Error::Param("need n_max >= 1 and tol > 0".into()));
    }
    let op = TransitionOperator::new(model, grid.clone())?;
    let mut f = make_test_function(&grid);
    let mut g = GridFunction::constant(grid.clone(), 0.0);
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..n_max {
        op.apply_into(&f, &mut g);
        let nsp = grid.n_spatial();
        let residual = exec::max_indexed(grid.n_states(), |w| {
            let a = &f.values[w * nsp..(w + 1) * nsp];
            let b = &g.values[w * nsp..(w + 1) * nsp];
            a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        });
        history.push(residual);
        std::mem::swap(&mut f, &mut g);
        if residual < tol {
            converged = true;
            break;
        }
    }
    let iterations = history.len();
    Ok(IterationResult { function: f, residual_history: history, converged, iterations })
}
