//! Sample paths of `X^β_t = ∫ M_β(t,s) dX_s` as moving averages of
//! simulated increments.
//!
//! The integral runs over the whole past. A uniform grid alone reaches back to
//! `grid.t_min`; an optional [`TailExtension`] adds geometrically growing
//! cells further left so that long-memory kernels (`β` close to 1/2) keep
//! their variance at modest cost. The variance still missing beyond the last
//! cell is bounded in closed form and checked against a budget.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_hurst_range, invalid, Error, Result};
use crate::frac_ops::check_truncation_budget;
use crate::grid::TimeGrid;
use crate::kernels::ma_cell_avg;
use crate::levy::{IncrementSampler, JumpSource};
use crate::rng::replicate_rng;

/// Geometric cells `[-|t_min| r^{k+1}, -|t_min| r^k]` left of the grid, up
/// to `-horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailExtension {
    pub horizon: f64,
    pub ratio: f64,
}

impl Default for TailExtension {
    fn default() -> Self {
        Self {
            horizon: 1e15,
            ratio: 1.05,
        }
    }
}

/// All simulation cells in time order: the tail (if any), then the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLayout {
    grid: TimeGrid,
    edges: Vec<f64>,
    n_tail: usize,
}

impl SimulationLayout {
    pub fn new(grid: TimeGrid, tail: Option<TailExtension>) -> Result<Self> {
        let mut tail_edges = Vec::new();
        if let Some(t) = tail {
            if grid.t_min() >= 0.0 {
                return Err(invalid("grid.t_min", "a tail extension needs t_min < 0"));
            }
            if !(t.ratio > 1.0 && t.horizon > -grid.t_min()) {
                return Err(invalid(
                    "tail",
                    format!("need ratio > 1 and horizon > |t_min|, got {t:?}"),
                ));
            }
            let mut e = grid.t_min();
            while -e < t.horizon {
                e = (e * t.ratio).max(-t.horizon);
                tail_edges.push(e);
            }
            tail_edges.reverse();
        }
        let n_tail = tail_edges.len();
        let mut edges = tail_edges;
        edges.extend(grid.edges());
        Ok(Self {
            grid,
            edges,
            n_tail,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Leftmost point reached by the simulation.
    pub fn start(&self) -> f64 {
        self.edges[0]
    }

    pub fn n_cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn n_tail(&self) -> usize {
        self.n_tail
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cell(&self, c: usize) -> (f64, f64) {
        (self.edges[c], self.edges[c + 1])
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Moving-average weights of `X^β_t` for every cell, trimmed after the
    /// last cell that can be nonzero.
    pub fn kernel_weights(&self, t: f64, beta: f64) -> Vec<f64> {
        let end = self.edges.partition_point(|&e| e < t.max(0.0)).min(self.n_cells());
        (0..end)
            .map(|c| {
                let (a, b) = self.cell(c);
                ma_cell_avg(t, a, b, beta)
            })
            .collect()
    }

    /// `Σ_c w_c(t) ΔX_c` at each time.
    pub fn moving_average(&self, increments: &[f64], beta: f64, times: &[f64]) -> Vec<f64> {
        times
            .iter()
            .map(|&t| dot(&self.kernel_weights(t, beta), increments))
            .collect()
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Variance bookkeeping for the cut-off past.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationReport {
    /// `-start` of the layout.
    pub horizon: f64,
    /// Time at which the bound is evaluated (largest output time).
    pub at_t: f64,
    /// Upper bound on the missing fraction of `Var(X^β_t)`.
    pub relative_deficit: f64,
}

/// Many paths of `X^β` at fixed output times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub beta: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    /// Path-major: `values[p * times.len() + k]` is path `p` at `times[k]`.
    pub values: Vec<f64>,
    pub truncation: TruncationReport,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        if self.times.is_empty() {
            0
        } else {
            self.values.len() / self.times.len()
        }
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.times.len();
        &self.values[p * n..(p + 1) * n]
    }

    /// Values of every path at output time index `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_paths()).map(|p| self.path(p)[k]).collect()
    }
}

/// Simulator with precomputed kernel weights; every path is a pure function
/// of `(seed, path index)`.
#[derive(Debug, Clone)]
pub struct FlpSimulator {
    layout: SimulationLayout,
    beta: f64,
    sampler: IncrementSampler,
    times: Vec<f64>,
    weights: Vec<Vec<f64>>,
    truncation: TruncationReport,
}

impl FlpSimulator {
    /// `times = None` selects every grid edge `>= 0`. `budget` is the largest
    /// admissible relative variance deficit at the last output time.
    pub fn new(
        source: JumpSource,
        beta: f64,
        layout: SimulationLayout,
        times: Option<Vec<f64>>,
        budget: f64,
    ) -> Result<Self> {
        check_hurst_range("beta", beta)?;
        let grid = *layout.grid();
        let times = match times {
            Some(t) => {
                for &x in &t {
                    grid.require_inside("times", x)?;
                }
                t
            }
            None => grid.edges().filter(|&e| e >= -1e-12 * grid.step()).map(|e| e.max(0.0)).collect(),
        };
        if times.is_empty() {
            return Err(invalid("times", "no output times (the grid has no edge >= 0)"));
        }
        let at_t = times.iter().fold(0.0f64, |m, &t| m.max(t));
        let horizon = -layout.start();
        if horizon <= 0.0 && at_t > 0.0 {
            return Err(Error::TruncationBudget {
                deficit: f64::INFINITY,
                relative: f64::INFINITY,
                budget: 100.0 * budget,
                required_t_min: -crate::frac_ops::required_horizon(at_t, beta, budget),
            });
        }
        let relative_deficit = check_truncation_budget(at_t, beta, horizon, budget)?;
        let sampler = IncrementSampler::new(source, &layout.widths())?;
        let weights = times.iter().map(|&t| layout.kernel_weights(t, beta)).collect();
        Ok(Self {
            layout,
            beta,
            sampler,
            times,
            weights,
            truncation: TruncationReport {
                horizon,
                at_t,
                relative_deficit,
            },
        })
    }

    pub fn layout(&self) -> &SimulationLayout {
        &self.layout
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn truncation(&self) -> TruncationReport {
        self.truncation
    }

    /// Increments of path `path` on every layout cell.
    pub fn increments(&self, seed: u64, path: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n_cells()];
        self.sampler.sample_into(&mut replicate_rng(seed, path), &mut out);
        out
    }

    /// `X^β` at the output times from a given increment vector.
    pub fn evaluate(&self, increments: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| dot(w, increments)).collect()
    }

    pub fn simulate(&self, n_paths: usize, seed: u64) -> PathSet {
        let values: Vec<Vec<f64>> = (0..n_paths as u64)
            .into_par_iter()
            .map(|p| self.evaluate(&self.increments(seed, p)))
            .collect();
        PathSet {
            beta: self.beta,
            seed,
            times: self.times.clone(),
            values: values.into_iter().flatten().collect(),
            truncation: self.truncation,
        }
    }
}

/// `n_paths` paths of `X^β` at the nonnegative grid edges, with the default
/// tail extension and a 1% variance budget.
pub fn simulate_flp_paths(
    source: &JumpSource,
    beta: f64,
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    let tail = (grid.t_min() < 0.0).then(TailExtension::default);
    let layout = SimulationLayout::new(grid, tail)?;
    let sim = FlpSimulator::new(source.clone(), beta, layout, None, 0.01)?;
    Ok(sim.simulate(n_paths, seed))
}

/// `X^α` at every layout edge, the input of [`transform_alpha_to_beta`].
pub fn path_at_edges(layout: &SimulationLayout, increments: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_hurst_range("alpha", alpha)?;
    Ok(layout.moving_average(increments, alpha, layout.edges()))
}

/// Rebuilds `X^β_t` from a path of `X^α` (`α < β`) by integrating the
/// moving-average kernel of order `β - α` against the increments of `X^α`:
///
/// `X^β_t = ∫ ((t-s)_+^{β-α} - (-s)_+^{β-α}) / Γ(β-α+1) dX^α_s`.
pub fn transform_alpha_to_beta(
    layout: &SimulationLayout,
    alpha_edges: &[f64],
    alpha: f64,
    beta: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    check_hurst_range("alpha", alpha)?;
    check_hurst_range("beta", beta)?;
    if alpha >= beta {
        return Err(invalid("alpha", format!("need alpha < beta, got {alpha} >= {beta}")));
    }
    if alpha_edges.len() != layout.edges().len() {
        return Err(Error::GridMismatch);
    }
    let dx: Vec<f64> = alpha_edges.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(layout.moving_average(&dx, beta - alpha, times))
}

/// One row of [`empirical_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub mean: f64,
    pub var: f64,
    /// Standard error of `mean`.
    pub stderr_mean: f64,
    /// Standard error of `var`.
    pub stderr_var: f64,
}

/// Unbiased mean and variance of each column, with standard errors.
pub fn sample_moments(t: f64, xs: &[f64]) -> Result<MomentRow> {
    let n = xs.len();
    if n < 2 {
        return Err(invalid("paths", format!("need at least 2 samples, got {n}")));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (nf - 1.0);
    let m2n = m2 / nf;
    let m4n = m4 / nf;
    Ok(MomentRow {
        t,
        mean,
        var,
        stderr_mean: (var / nf).sqrt(),
        stderr_var: ((m4n - m2n * m2n).max(0.0) / nf).sqrt(),
    })
}

/// Moments at each requested output time (times must be among `paths.times`).
pub fn empirical_moments(paths: &PathSet, times: &[f64]) -> Result<Vec<MomentRow>> {
    if paths.n_paths() == 0 {
        return Err(invalid("paths", "empty path set"));
    }
    times
        .iter()
        .map(|&t| {
            let k = paths
                .times
                .iter()
                .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
                .ok_or_else(|| invalid("t", format!("{t} is not an output time")))?;
            sample_moments(t, &paths.column(k))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyModel;

    fn two_point() -> JumpSource {
        LevyModel::two_point(2.0, 1.0).unwrap().exact_source().unwrap()
    }

    #[test]
    fn tail_edges_grow_geometrically() {
        let g = TimeGrid::new(-1.0, 1.0, 20).unwrap();
        let l = SimulationLayout::new(
            g,
            Some(TailExtension {
                horizon: 100.0,
                ratio: 2.0,
            }),
        )
        .unwrap();
        assert_eq!(l.start(), -100.0);
        assert_eq!(&l.edges()[..l.n_tail() + 1], &[-100.0, -64.0, -32.0, -16.0, -8.0, -4.0, -2.0, -1.0]);
        assert_eq!(l.n_cells(), 27);
    }

    #[test]
    fn zero_time_is_zero_and_runs_are_reproducible() {
        let g = TimeGrid::new(-1.0, 1.0, 40).unwrap();
        let a = simulate_flp_paths(&two_point(), 0.25, g, 8, 5).unwrap();
        let b = simulate_flp_paths(&two_point(), 0.25, g, 8, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.times[0], 0.0);
        assert!(a.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_past_violates_the_budget() {
        let g = TimeGrid::new(-1.0, 1.0, 40).unwrap();
        let layout = SimulationLayout::new(g, None).unwrap();
        let err = FlpSimulator::new(two_point(), 0.4, layout, None, 0.01).unwrap_err();
        assert!(matches!(err, Error::TruncationBudget { .. }), "{err}");
        let g = TimeGrid::new(0.0, 1.0, 40).unwrap();
        assert!(simulate_flp_paths(&two_point(), 0.25, g, 2, 0).is_err());
    }

    #[test]
    fn beta_range_and_transform_order() {
        let g = TimeGrid::new(-1.0, 1.0, 40).unwrap();
        assert!(simulate_flp_paths(&two_point(), 0.6, g, 2, 0).is_err());
        let l = SimulationLayout::new(g, None).unwrap();
        let edges = vec![0.0; l.edges().len()];
        assert!(transform_alpha_to_beta(&l, &edges, 0.3, 0.3, &[1.0]).is_err());
        let z = transform_alpha_to_beta(&l, &edges, 0.1, 0.3, &[0.5, 1.0]).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
    }

    #[test]
    fn moments_of_constant_paths() {
        let row = sample_moments(1.0, &[0.0; 5]).unwrap();
        assert_eq!((row.mean, row.var), (0.0, 0.0));
        assert!(sample_moments(1.0, &[1.0]).is_err());
    }

    #[test]
    fn transformed_kernel_is_positive_inside() {
        let g = TimeGrid::new(-1.0, 1.0, 40).unwrap();
        let l = SimulationLayout::new(g, None).unwrap();
        let w = l.kernel_weights(1.0, 0.2);
        for c in 20..40 {
            assert!(w[c] > 0.0);
        }
    }
}
