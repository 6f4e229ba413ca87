use serde::{Deserialize, Serialize};

use super::element::ChaosElement;
use crate::error::{invalid, Result};
use crate::hermite;

/// Which distribution-space norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NormMode {
    /// `Σ_α c_α² Π_k (1 + rank_k)^{-2p α_k}`, `rank_k = k + 1` in the
    /// lexicographic (cell, mark) order of the basis. A monitoring proxy,
    /// not equivalent to the Kondratiev norm.
    GridProxy,
    /// For a first-chaos element with separable kernel `y · k(u)`:
    /// `m2 Σ_{n<=n_h} (n+1)^{-2p} ⟨k, ξ_n⟩²` with Hermite functions `ξ_n`.
    HermiteFirstChaos { n_h: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    /// Relative tail bound for truncated expansions (0 for the grid proxy).
    pub relative_tail: f64,
}

pub fn distribution_norm(f: &ChaosElement, p: f64, mode: NormMode) -> Result<NormReport> {
    if !(p > 1.0) {
        return Err(invalid("p", format!("need p > 1, got {p}")));
    }
    match mode {
        NormMode::GridProxy => Ok(NormReport {
            value: grid_proxy_norm(f, p),
            relative_tail: 0.0,
        }),
        NormMode::HermiteFirstChaos { n_h } => hermite_first_chaos(f, p, n_h),
    }
}

pub fn grid_proxy_norm(f: &ChaosElement, p: f64) -> f64 {
    f.terms()
        .iter()
        .map(|(a, c)| {
            let w: f64 = a
                .pairs()
                .map(|(k, n)| ((k + 2) as f64).powf(-2.0 * p * n as f64))
                .product();
            c * c * w
        })
        .sum::<f64>()
        .sqrt()
}

fn hermite_first_chaos(f: &ChaosElement, p: f64, n_h: usize) -> Result<NormReport> {
    let basis = f.basis();
    if f.terms().iter().any(|(a, _)| a.order() != 1) {
        return Err(invalid("F", "hermite_first_chaos needs a pure first-chaos element"));
    }
    if n_h < 4 {
        return Err(invalid("n_h", "need at least 4 Hermite functions"));
    }
    if f.is_empty() {
        return Ok(NormReport {
            value: 0.0,
            relative_tail: 0.0,
        });
    }
    let h = basis.grid().step();
    let c = f.first_chaos_coeffs();
    let marks = basis.marks();
    let mut kernel = vec![0.0; basis.grid().n_cells()];
    for (i, k) in kernel.iter_mut().enumerate() {
        let per_mark: Vec<f64> = marks
            .iter()
            .enumerate()
            .map(|(j, m)| c[basis.index(i, j)] / (m.size * (h * m.mass).sqrt()))
            .collect();
        let v = per_mark[0];
        if per_mark.iter().any(|x| (x - v).abs() > 1e-9 * v.abs().max(1e-300)) {
            return Err(invalid("F", format!("kernel on cell {i} is not of the form y·k(u)")));
        }
        *k = v;
    }
    let coeffs = hermite::cell_coefficients(basis.grid(), &kernel, n_h);
    let s = hermite::weighted_sum(&coeffs, p)?;
    Ok(NormReport {
        value: (basis.mark_second_moment() * s.value).sqrt(),
        relative_tail: s.relative_tail,
    })
}
