//! Reference values computed independently of `fraclevy`.
//!
//! Everything here is plain tanh-sinh quadrature of the defining integrals.
//! No code is shared with the main crate, so agreement is evidence rather
//! than a restatement.

use quadrature::double_exponential::integrate;
use statrs::function::gamma::gamma;

const TOL: f64 = 1e-14;

/// Tanh-sinh on `n` equal panels.
fn panels(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let w = (b - a) / n as f64;
    (0..n)
        .map(|i| integrate(&f, a + i as f64 * w, a + (i + 1) as f64 * w, TOL).integral)
        .sum()
}

/// `∫_a^b f`, where `f` behaves like `|x - e|^β` at either end `e`: each half
/// is mapped by `x = e ± w^{1/β}`, which turns the kink into a smooth factor.
fn kinked(f: impl Fn(f64) -> f64, a: f64, b: f64, beta: f64) -> f64 {
    let m = 0.5 * (a + b);
    let k = 1.0 / beta;
    let wmax = (m - a).powf(beta);
    let left = panels(|w| f(a + w.powf(k)) * k * w.powf(k - 1.0), 0.0, wmax, 4);
    let right = panels(|w| f(b - w.powf(k)) * k * w.powf(k - 1.0), 0.0, wmax, 4);
    left + right
}

/// `∫_{-∞}^{end} f(u) du` for `f` decaying like `|u|^{2β-2}`: `[end-1, end]`
/// directly, the rest through `u = end - v^{-1/(1-2β)}`, which makes the
/// integrand bounded at `v = 0`.
fn left_tail(f: impl Fn(f64) -> f64, end: f64, beta: f64) -> f64 {
    let k = 1.0 / (1.0 - 2.0 * beta);
    let near = kinked(&f, end - 1.0, end, beta);
    let far = panels(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let x = v.powf(-k);
            f(end - x) * k * x / v
        },
        0.0,
        1.0,
        8,
    );
    near + far
}

/// Moving-average kernel `((t-u)_+^β - (-u)_+^β) / Γ(β+1)`.
pub fn ma_kernel(t: f64, u: f64, beta: f64) -> f64 {
    let v = if u >= t {
        0.0
    } else if u >= 0.0 {
        (t - u).powf(beta)
    } else {
        // (x+t)^β - x^β with x = -u, free of cancellation for large x
        let x = -u;
        x.powf(beta) * (beta * (t / x).ln_1p()).exp_m1()
    };
    v / gamma(beta + 1.0)
}

/// `‖I^β_- χ_{[0,t]}‖²_{L²(ℝ)}` for `t > 0`.
pub fn indicator_image_l2_sq(t: f64, beta: f64) -> f64 {
    let f = |u: f64| ma_kernel(t, u, beta).powi(2);
    kinked(f, 0.0, t, beta) + left_tail(f, 0.0, beta)
}

/// `∫ M_β(s,u) M_β(t,u) du` for `0 < s <= t`.
pub fn ma_covariance(s: f64, t: f64, beta: f64) -> f64 {
    let f = |u: f64| ma_kernel(s, u, beta) * ma_kernel(t, u, beta);
    kinked(f, 0.0, s, beta) + kinked(f, s, t, beta) + left_tail(f, 0.0, beta)
}

/// `(I^β_- g)(u) = (1/Γ(β)) ∫_u^∞ (s-u)^{β-1} g(s) ds` for `g` continuous on
/// `[a, b]` and zero outside.
///
/// For `a < u < b` the singular part is integrated in closed form:
/// `∫_u^b (s-u)^{β-1} g(s) ds = g(u)(b-u)^β/β + ∫_u^b (s-u)^{β-1}(g(s)-g(u)) ds`.
pub fn rl_minus_at(g: &dyn Fn(f64) -> f64, a: f64, b: f64, beta: f64, u: f64) -> f64 {
    if u >= b {
        return 0.0;
    }
    let v = if u <= a {
        panels(|s| (s - u).powf(beta - 1.0) * g(s), a, b, 8)
    } else {
        let gu = g(u);
        gu * (b - u).powf(beta) / beta + panels(|s| (s - u).powf(beta - 1.0) * (g(s) - gu), u, b, 8)
    };
    v / gamma(beta)
}

/// `‖I^β_- g‖²_{L²(ℝ)}` for `g` supported in `[a, b]`.
pub fn rl_minus_l2_sq(g: &dyn Fn(f64) -> f64, a: f64, b: f64, beta: f64) -> f64 {
    let f = |u: f64| rl_minus_at(g, a, b, beta, u).powi(2);
    panels(f, a, b, 16) + left_tail(f, a, beta)
}

/// `∫_{|x|>ε} x² ν(dx)` for the tempered-stable density `C e^{-M|x|} / |x|^{1+Y}`.
pub fn tempered_stable_second_moment(c: f64, m: f64, y: f64, eps: f64) -> f64 {
    let f = |x: f64| c * x.powf(1.0 - y) * (-m * x).exp();
    let near = if eps < 1.0 { panels(f, eps, 1.0, 4) } else { 0.0 };
    let start = eps.max(1.0);
    // x = start + (1-v)/v on (0, 1]
    let far = panels(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            f(start + (1.0 - v) / v) / (v * v)
        },
        0.0,
        1.0,
        8,
    );
    2.0 * (near + far)
}

/// Normalized Hermite function `ψ_n(x) = (2ⁿ n! √π)^{-1/2} H_n(x) e^{-x²/2}`
/// from the explicit sum for `H_n`. Accurate for moderate `n` and `|x|`.
pub fn hermite_function(n: u32, x: f64) -> f64 {
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let mut h = 0.0;
    for m in 0..=n / 2 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        h += sign * (2.0 * x).powi((n - 2 * m) as i32) / (fact(m) * fact(n - 2 * m));
    }
    h *= fact(n);
    let norm = (2f64.powi(n as i32) * fact(n) * std::f64::consts::PI.sqrt()).sqrt();
    h / norm * (-0.5 * x * x).exp()
}

/// `∫ (t-u)_+^{β-1} ψ_n(u) du`, with the singular part at `u = t` taken in
/// closed form as in [`rl_minus_at`].
pub fn rl_hermite_coefficient(t: f64, beta: f64, n: u32) -> f64 {
    // ψ_n is negligible below u = -(2n+1)^{1/2} - 12.
    let lo = -(2.0 * n as f64 + 1.0).sqrt() - 12.0;
    if t <= lo {
        return 0.0;
    }
    let psi_t = hermite_function(n, t);
    let len = t - lo;
    let cells = (len / 0.25).ceil() as usize;
    psi_t * len.powf(beta) / beta
        + panels(|u| (t - u).powf(beta - 1.0) * (hermite_function(n, u) - psi_t), lo, t, cells)
}
