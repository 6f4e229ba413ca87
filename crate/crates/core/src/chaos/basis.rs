use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::levy::Atom;

/// Discretization of `U = ℝ × ℝ₀`: time cells times mark atoms.
///
/// Basis index `k = i * n_marks + j` pairs cell `i` with mark `j` and
/// carries the weight `w_k = h · w_j`. The functions `e_k = 1_{cell × {y_j}} /
/// √w_k` are orthonormal in `L²(π)` of the discrete measure. `order` caps the
/// chaos order of every element built on the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    grid: TimeGrid,
    marks: Vec<Atom>,
    order: usize,
}

impl Basis {
    pub fn new(grid: TimeGrid, marks: Vec<Atom>, order: usize) -> Result<Arc<Self>> {
        if marks.is_empty() {
            return Err(invalid("marks", "at least one mark atom is required"));
        }
        for m in &marks {
            if m.size == 0.0 || !m.size.is_finite() || !(m.mass > 0.0 && m.mass.is_finite()) {
                return Err(invalid("marks", format!("bad mark atom {m:?}")));
            }
        }
        if grid.n_cells() * marks.len() > u32::MAX as usize {
            return Err(invalid("basis", "too many basis functions"));
        }
        Ok(Arc::new(Self { grid, marks, order }))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn marks(&self) -> &[Atom] {
        &self.marks
    }

    pub fn n_marks(&self) -> usize {
        self.marks.len()
    }

    /// Chaos order cap `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions.
    pub fn dim(&self) -> usize {
        self.grid.n_cells() * self.marks.len()
    }

    pub fn index(&self, cell: usize, mark: usize) -> usize {
        cell * self.marks.len() + mark
    }

    pub fn cell_mark(&self, k: usize) -> (usize, usize) {
        (k / self.marks.len(), k % self.marks.len())
    }

    /// `π`-weight `w_k = h w_j`.
    pub fn weight(&self, k: usize) -> f64 {
        self.grid.step() * self.marks[k % self.marks.len()].mass
    }

    pub fn sqrt_weight(&self, k: usize) -> f64 {
        self.weight(k).sqrt()
    }

    /// `Σ_j y_j² w_j`, the second moment of the discrete marks.
    pub fn mark_second_moment(&self) -> f64 {
        self.marks.iter().map(|m| m.size * m.size * m.mass).sum()
    }

    /// Same basis with another order cap.
    pub fn with_order(&self, order: usize) -> Arc<Self> {
        Arc::new(Self {
            grid: self.grid,
            marks: self.marks.clone(),
            order,
        })
    }

    pub(crate) fn check_same(a: &Arc<Basis>, b: &Arc<Basis>) -> Result<()> {
        if Arc::ptr_eq(a, b) || **a == **b {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }
}
