//! Hermite-function norms of first-chaos kernels.
//!
//! With `ξ_n = ψ_{n-1}` (`n >= 1`) the normalized Hermite functions, the
//! weighted sum `Σ_n (n+1)^{-2p} ⟨k, ξ_n⟩²` measures a kernel `k` on `ℝ`
//! in the negative Sobolev-type scale. For the fractional noise the kernel is
//! `(t-·)_+^{β-1}`; its coefficients are computed by quadrature with a
//! substitution that removes the singularity at `u = t`.

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::kernels::{gamma, gl16};

/// Fills `out[m] = ψ_m(x)` for `m < out.len()` by the stable three-term
/// recurrence.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for m in 1..out.len() - 1 {
        let mf = m as f64;
        out[m + 1] = (2.0 / (mf + 1.0)).sqrt() * x * out[m] - (mf / (mf + 1.0)).sqrt() * out[m - 1];
    }
}

/// Beyond this radius every `ψ_m`, `m < n`, is negligible.
fn support_radius(n: usize) -> f64 {
    (2.0 * n as f64 + 1.0).sqrt() + 12.0
}

// Accumulates Σ_nodes weight · g(u) · ψ_m(u) into acc.
fn accumulate(acc: &mut [f64], buf: &mut [f64], u: f64, w: f64) {
    hermite_functions(u, buf);
    for (a, p) in acc.iter_mut().zip(buf.iter()) {
        *a += w * p;
    }
}

/// `⟨(t-·)_+^{β-1}, ξ_n⟩` for `n = 1..=n_h`.
pub fn rl_kernel_coefficients(t: f64, beta: f64, n_h: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n_h];
    let mut buf = vec![0.0; n_h];
    let radius = support_radius(n_h);
    if t < -radius {
        return acc;
    }
    let gl = gl16();
    let left = -radius;
    // Near part [t - δ, t]: u = t - r^{1/β} turns (t-u)^{β-1} du into dr/β.
    let delta = 0.05f64.min(t - left);
    let r_max = delta.powf(beta);
    let panels = 8;
    for q in 0..panels {
        let (a, b) = (r_max * q as f64 / panels as f64, r_max * (q + 1) as f64 / panels as f64);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in gl.iter() {
            let r = mid + half * x;
            accumulate(&mut acc, &mut buf, t - r.powf(1.0 / beta), w * half / beta);
        }
    }
    // Far part [left, t - δ], panels no wider than half their distance to t.
    let mut right = t - delta;
    while right > left {
        let width = (0.5 * (t - right)).min(0.05).min(right - left);
        let a = right - width;
        let (mid, half) = (0.5 * (a + right), 0.5 * width);
        if mid - half > radius {
            right = a;
            continue;
        }
        for (x, w) in gl.iter() {
            let u = mid + half * x;
            accumulate(&mut acc, &mut buf, u, w * half * (t - u).powf(beta - 1.0));
        }
        right = a;
    }
    acc
}

/// `⟨k, ξ_n⟩` for a piecewise-constant `k` (cell values on `grid`).
pub fn cell_coefficients(grid: &TimeGrid, values: &[f64], n_h: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n_h];
    let mut buf = vec![0.0; n_h];
    let radius = support_radius(n_h);
    let gl = gl16();
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let (a, b) = grid.cell(i);
        let (a, b) = (a.max(-radius), b.min(radius));
        if b <= a {
            continue;
        }
        let panels = ((b - a) / 0.05).ceil().max(1.0) as usize;
        let width = (b - a) / panels as f64;
        for q in 0..panels {
            let mid = a + (q as f64 + 0.5) * width;
            for (x, w) in gl.iter() {
                accumulate(&mut acc, &mut buf, mid + 0.5 * width * x, v * w * 0.5 * width);
            }
        }
    }
    acc
}

/// A weighted Hermite sum with an estimate of the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HermiteSum {
    /// `Σ_{n<=n_h} (n+1)^{-2p} c_n²`.
    pub value: f64,
    /// Bound on the tail `n > n_h` relative to `value`, assuming the
    /// coefficients stay below their maximum over the last quarter.
    pub relative_tail: f64,
}

/// `Σ_n (n+1)^{-2p} c_n²` where `coeffs[n-1] = c_n`.
pub fn weighted_sum(coeffs: &[f64], p: f64) -> Result<HermiteSum> {
    if !(p > 1.0) {
        return Err(invalid("p", format!("need p > 1, got {p}")));
    }
    let n_h = coeffs.len();
    let value: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| ((m + 2) as f64).powf(-2.0 * p) * c * c)
        .sum();
    let recent = coeffs[3 * n_h / 4..].iter().fold(0.0f64, |m, c| m.max(c * c));
    let tail = recent * ((n_h + 1) as f64).powf(1.0 - 2.0 * p) / (2.0 * p - 1.0);
    Ok(HermiteSum {
        value,
        relative_tail: if value > 0.0 { tail / value } else { 0.0 },
    })
}

/// `‖Ẋ^β_t‖²` in the Hermite norm: `m2/Γ(β)² Σ (n+1)^{-2p} ⟨(t-·)_+^{β-1}, ξ_n⟩²`.
pub fn noise_norm_sq(beta: f64, t: f64, p: f64, n_h: usize, m2: f64) -> Result<HermiteSum> {
    let c = rl_kernel_coefficients(t, beta, n_h);
    let s = weighted_sum(&c, p)?;
    let g = gamma(beta);
    Ok(HermiteSum {
        value: m2 * s.value / (g * g),
        ..s
    })
}

/// `‖Ẋ^β_t - Ẋ^β_s‖²` in the Hermite norm.
pub fn noise_increment_norm_sq(beta: f64, t: f64, s: f64, p: f64, n_h: usize, m2: f64) -> Result<HermiteSum> {
    if t == s {
        return Ok(HermiteSum {
            value: 0.0,
            relative_tail: 0.0,
        });
    }
    let ct = rl_kernel_coefficients(t, beta, n_h);
    let cs = rl_kernel_coefficients(s, beta, n_h);
    let d: Vec<f64> = ct.iter().zip(&cs).map(|(a, b)| a - b).collect();
    let r = weighted_sum(&d, p)?;
    let g = gamma(beta);
    Ok(HermiteSum {
        value: m2 * r.value / (g * g),
        ..r
    })
}

/// Least-squares fit of `log ‖Ẋ_t - Ẋ_s‖²` against `log |t-s|`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HolderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// `(|t-s|, ‖Ẋ_t - Ẋ_s‖²)` per pair.
    pub points: Vec<(f64, f64)>,
}

pub fn holder_noise_check(beta: f64, p: f64, pairs: &[(f64, f64)], n_h: usize) -> Result<HolderFit> {
    crate::error::check_hurst_range("beta", beta)?;
    if pairs.len() < 4 {
        return Err(invalid("pairs", format!("need at least 4 (t, s) pairs, got {}", pairs.len())));
    }
    let mut points = Vec::with_capacity(pairs.len());
    for &(t, s) in pairs {
        if t == s {
            return Err(invalid("pairs", "t = s carries no slope information"));
        }
        let v = noise_increment_norm_sq(beta, t, s, p, n_h, 1.0)?.value;
        points.push(((t - s).abs(), v));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(HolderFit {
        slope,
        intercept,
        residual,
        points,
    })
}

/// Pairs `(t0 + d, t0)` with `d` log-spaced over `[d_min, d_max]`.
pub fn log_spaced_pairs(t0: f64, d_min: f64, d_max: f64, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            let d = d_min * (d_max / d_min).powf(f);
            (t0 + d, t0)
        })
        .collect()
}
