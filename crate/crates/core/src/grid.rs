//! Uniform time grids and piecewise-constant grid functions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A uniform partition of `[t_min, t_max]` into `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_min: f64,
    t_max: f64,
    n_cells: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, n_cells: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite()) || t_max <= t_min {
            return Err(invalid("grid", format!("need t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if n_cells == 0 {
            return Err(invalid("grid", "n_cells must be positive"));
        }
        Ok(Self {
            t_min,
            t_max,
            n_cells,
        })
    }

    /// Grid with step as close to `h` as possible (the cell count is rounded).
    pub fn with_step(t_min: f64, t_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("h", format!("step must be positive, got {h}")));
        }
        let n = ((t_max - t_min) / h).round().max(1.0) as usize;
        Self::new(t_min, t_max, n)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / self.n_cells as f64
    }

    /// Left edge of cell `i`; `edge(n_cells)` is `t_max`.
    pub fn edge(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.t_max
        } else {
            self.t_min + i as f64 * self.step()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.t_min + (i as f64 + 0.5) * self.step()
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.edge(i), self.edge(i + 1))
    }

    pub fn edges(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_cells).map(|i| self.edge(i))
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    /// Index of the cell containing `t`; `t_max` belongs to the last cell.
    pub fn cell_of(&self, t: f64) -> Option<usize> {
        if !self.contains(t) {
            return None;
        }
        let i = ((t - self.t_min) / self.step()).floor() as usize;
        Some(i.min(self.n_cells - 1))
    }

    /// Index of the edge closest to `t`, if it lies within `tol` of it.
    pub fn edge_index(&self, t: f64, tol: f64) -> Option<usize> {
        if !self.contains(t) {
            return None;
        }
        let i = ((t - self.t_min) / self.step()).round() as usize;
        ((self.edge(i) - t).abs() <= tol).then_some(i)
    }

    pub(crate) fn require_inside(&self, name: &'static str, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(invalid(
                name,
                format!("{t} lies outside the grid [{}, {}]", self.t_min, self.t_max),
            ))
        }
    }
}

/// Cell averages of a real function on a [`TimeGrid`]. Outside the grid the
/// function is taken to be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(invalid(
                "values",
                format!("expected {} cell values, got {}", grid.n_cells(), values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_cells()],
        }
    }

    /// Samples `f` at the cell centers.
    pub fn from_centers(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_cells()).map(|i| f(grid.center(i))).collect();
        Self { grid, values }
    }

    /// Exact cell averages of the indicator of `[a, b]`.
    pub fn indicator(grid: TimeGrid, a: f64, b: f64) -> Self {
        let h = grid.step();
        let values = (0..grid.n_cells())
            .map(|i| {
                let (l, r) = grid.cell(i);
                ((r.min(b) - l.max(a)).max(0.0)) / h
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-constant value at `t` (zero outside the grid).
    pub fn value_at(&self, t: f64) -> f64 {
        self.grid.cell_of(t).map_or(0.0, |i| self.values[i])
    }

    /// `∫ f g dt` for two functions on the same grid.
    pub fn dot(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.step())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.step()).sqrt()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(GridFunction {
            grid: self.grid,
            values,
        })
    }

    pub(crate) fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::with_step(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn edges_and_cells() {
        let g = TimeGrid::with_step(-1.0, 1.0, 0.25).unwrap();
        assert_eq!(g.n_cells(), 8);
        assert_eq!(g.edge(4), 0.0);
        assert_eq!(g.edge(8), 1.0);
        assert_eq!(g.cell_of(1.0), Some(7));
        assert_eq!(g.cell_of(-1.0), Some(0));
        assert_eq!(g.cell_of(1.5), None);
        assert_eq!(g.edge_index(0.5, 1e-12), Some(6));
        assert_eq!(g.edge_index(0.6, 1e-12), None);
    }

    #[test]
    fn indicator_averages() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let f = GridFunction::indicator(g, 0.1, 0.5);
        assert!((f.values()[0] - 0.6).abs() < 1e-15);
        assert!((f.values()[1] - 1.0).abs() < 1e-15);
        assert_eq!(f.values()[2], 0.0);
        assert!((f.l2_norm().powi(2) - (0.36 * 0.25 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = GridFunction::zeros(TimeGrid::new(0.0, 1.0, 4).unwrap());
        let b = GridFunction::zeros(TimeGrid::new(0.0, 1.0, 5).unwrap());
        assert_eq!(a.dot(&b), Err(Error::GridMismatch));
    }
}
