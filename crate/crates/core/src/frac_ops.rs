//! Riemann–Liouville fractional integrals of piecewise-constant functions.
//!
//! `I^β_-` looks to the right (`∫_t^∞ (s-t)^{β-1} f(s) ds / Γ(β)`), `I^β_+`
//! to the left. On a uniform grid the cell averages of `I^β_± f` are a
//! discrete convolution of `f` with the exact weights of
//! [`rl_conv_weights`](crate::kernels::rl_conv_weights), so no quadrature ever
//! touches the singularity. Values outside the grid count as zero.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{check_hurst_range, invalid, Error, Result};
use crate::grid::{GridFunction, TimeGrid};
use crate::kernels::{gamma, ma_cell_avg, rl_conv_weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `I^β_-`: integrates over `s > t`.
    Minus,
    /// `I^β_+`: integrates over `s < t`.
    Plus,
}

/// How the discrete convolution is evaluated. Both give the same numbers up
/// to rounding; `Auto` switches to the FFT above a few hundred cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvMethod {
    Direct,
    Fft,
    #[default]
    Auto,
}

fn check_order(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(invalid("beta", format!("{beta} is outside (0, 1)")))
    }
}

/// Cell averages of `I^β_± f`.
pub fn rl_fractional_integral(f: &GridFunction, beta: f64, side: Side) -> Result<GridFunction> {
    rl_fractional_integral_with(f, beta, side, ConvMethod::Auto)
}

pub fn rl_fractional_integral_with(
    f: &GridFunction,
    beta: f64,
    side: Side,
    method: ConvMethod,
) -> Result<GridFunction> {
    check_order(beta)?;
    let grid = *f.grid();
    let w = rl_conv_weights(beta, grid.step(), grid.n_cells());
    GridFunction::new(grid, rl_convolve(f.values(), &w, side, method))
}

/// `out_i = Σ_{d>=0} w_d v_{i+d}` (minus side) or `Σ_{d>=0} w_d v_{i-d}` (plus).
pub fn rl_convolve(values: &[f64], weights: &[f64], side: Side, method: ConvMethod) -> Vec<f64> {
    let n = values.len();
    let use_fft = match method {
        ConvMethod::Direct => false,
        ConvMethod::Fft => true,
        ConvMethod::Auto => n > 256,
    };
    match (side, use_fft) {
        (Side::Plus, false) => (0..n)
            .map(|i| (0..=i).map(|d| weights[d] * values[i - d]).sum())
            .collect(),
        (Side::Minus, false) => (0..n)
            .map(|i| (0..n - i).map(|d| weights[d] * values[i + d]).sum())
            .collect(),
        (Side::Plus, true) => fft_causal(values, weights),
        (Side::Minus, true) => {
            let rev: Vec<f64> = values.iter().rev().copied().collect();
            let mut out = fft_causal(&rev, weights);
            out.reverse();
            out
        }
    }
}

// Σ_{d<=i} w_d v_{i-d} through a zero-padded FFT.
fn fft_causal(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |x: &[f64]| {
        let mut v = vec![Complex64::new(0.0, 0.0); size];
        for (slot, &x) in v.iter_mut().zip(x.iter().take(n)) {
            slot.re = x;
        }
        v
    };
    let mut a = pad(values);
    let mut b = pad(weights);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..n].iter().map(|c| c.re * scale).collect()
}

/// Cell averages of the moving-average kernel
/// `M_β(t,u) = ((t-u)_+^β - (-u)_+^β)/Γ(β+1)` over the cells of `grid`,
/// computed from exact cell integrals. Paired with the per-cell increments
/// `ΔX`, `Σ w_i ΔX_i` is the Wiener integral that defines `X^β_t`.
pub fn indicator_kernel_weights(t: f64, beta: f64, grid: &TimeGrid) -> Result<GridFunction> {
    check_hurst_range("beta", beta)?;
    grid.require_inside("t", t)?;
    let values = (0..grid.n_cells())
        .map(|i| {
            let (a, b) = grid.cell(i);
            ma_cell_avg(t, a, b, beta)
        })
        .collect();
    GridFunction::new(*grid, values)
}

/// `‖M_β(t,·)‖²_{L²(ℝ)} = |t|^{2β+1} / (Γ(2β+2) sin(π(β+1/2)))`, the variance
/// of `X^β_t` per unit of `m2`.
pub fn kernel_l2_norm_sq(t: f64, beta: f64) -> f64 {
    t.abs().powf(2.0 * beta + 1.0) / (gamma(2.0 * beta + 2.0) * (PI * (beta + 0.5)).sin())
}

/// Upper bound on `m2 ∫_{-∞}^{-L} M_β(t,u)² du`, the variance of `X^β_t`
/// (for `t > 0`) lost by starting the grid at `-L`.
pub fn truncation_deficit_bound(t: f64, beta: f64, horizon: f64, m2: f64) -> f64 {
    let g = gamma(beta + 1.0);
    m2 * (t * beta).powi(2) * horizon.powf(2.0 * beta - 1.0) / ((1.0 - 2.0 * beta) * g * g)
}

/// Smallest horizon `L` for which the deficit bound at `t` is at most
/// `budget` times the full variance of `X^β_t`.
pub fn required_horizon(t: f64, beta: f64, budget: f64) -> f64 {
    let g = gamma(beta + 1.0);
    let target = budget * kernel_l2_norm_sq(t, beta);
    let c = (t * beta).powi(2) / ((1.0 - 2.0 * beta) * g * g);
    (target / c).powf(1.0 / (2.0 * beta - 1.0))
}

/// Checks that a grid reaching back to `-horizon` represents at least
/// `1 - budget` of the variance of `X^β_t`.
pub fn check_truncation_budget(t: f64, beta: f64, horizon: f64, budget: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let deficit = truncation_deficit_bound(t, beta, horizon, 1.0);
    let relative = deficit / kernel_l2_norm_sq(t, beta);
    if relative > budget {
        return Err(Error::TruncationBudget {
            deficit,
            relative: 100.0 * relative,
            budget: 100.0 * budget,
            required_t_min: -required_horizon(t, beta, budget),
        });
    }
    Ok(relative)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(grid: TimeGrid) -> GridFunction {
        GridFunction::from_centers(grid, |s| {
            if s.abs() < 1.0 {
                (-1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn fft_matches_direct() {
        let g = TimeGrid::new(-2.0, 2.0, 700).unwrap();
        let f = bump(g);
        for side in [Side::Minus, Side::Plus] {
            let a = rl_fractional_integral_with(&f, 0.3, side, ConvMethod::Direct).unwrap();
            let b = rl_fractional_integral_with(&f, 0.3, side, ConvMethod::Fft).unwrap();
            let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn indicator_image_is_the_moving_average_kernel() {
        let g = TimeGrid::new(-1.0, 2.0, 300).unwrap();
        let beta = 0.25;
        let chi = GridFunction::indicator(g, 0.0, 1.0);
        let i = rl_fractional_integral(&chi, beta, Side::Minus).unwrap();
        let w = indicator_kernel_weights(1.0, beta, &g).unwrap();
        for (x, y) in i.values().iter().zip(w.values()) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        // Pointwise value 1/Γ(β+1) at s = 0 is approached at rate h^β near the kink.
        let c = g.cell_of(0.0 + 1e-9).unwrap();
        let target = 1.0 / gamma(1.25);
        assert!((i.values()[c] - target).abs() < 2.0 * g.step().powf(beta));
    }

    #[test]
    fn zero_in_zero_out_and_range() {
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let z = GridFunction::zeros(g);
        assert!(rl_fractional_integral(&z, 0.4, Side::Plus)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(rl_fractional_integral(&z, 1.0, Side::Plus).is_err());
        assert!(indicator_kernel_weights(0.5, 0.6, &g).is_err());
        assert!(indicator_kernel_weights(2.0, 0.3, &g).is_err());
        assert!(indicator_kernel_weights(0.0, 0.3, &g)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn weights_vanish_after_t() {
        let g = TimeGrid::new(-1.0, 2.0, 30).unwrap();
        let w = indicator_kernel_weights(1.0, 0.3, &g).unwrap();
        for i in 20..30 {
            assert_eq!(w.values()[i], 0.0);
        }
    }

    #[test]
    fn parts_formula_is_exact_on_the_grid() {
        let g = TimeGrid::new(-2.0, 2.0, 400).unwrap();
        let f = bump(g);
        let h = GridFunction::from_centers(g, |s| (3.0 * s).sin() * (-s * s).exp());
        let lhs = f.dot(&rl_fractional_integral(&h, 0.35, Side::Plus).unwrap()).unwrap();
        let rhs = h.dot(&rl_fractional_integral(&f, 0.35, Side::Minus).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn budget_names_the_required_start() {
        let err = check_truncation_budget(1.0, 0.4, 10.0, 0.01).unwrap_err();
        match err {
            Error::TruncationBudget { required_t_min, .. } => {
                assert!(check_truncation_budget(1.0, 0.4, -required_t_min * 1.001, 0.01).is_ok());
            }
            e => panic!("{e}"),
        }
    }
}
