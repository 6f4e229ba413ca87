//! Closed-form integrals of the power-law kernels behind the Riemann–Liouville
//! operators, the moving-average kernel of `X^β`, and the fractional noise.
//!
//! Every routine here integrates across the `(·)^{β-1}` singularity with exact
//! antiderivatives. Where two large antiderivatives nearly cancel (cells far
//! from the singular points) the integrand is smooth, and Gauss–Legendre on a
//! cancellation-free form of the integrand is used instead.

use std::sync::OnceLock;

/// `Γ(x)`.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `x_+^p`.
#[inline]
pub fn pos_pow(x: f64, p: f64) -> f64 {
    if x > 0.0 {
        x.powf(p)
    } else {
        0.0
    }
}

/// `(y + d)^p - y^p` for `y >= 0`, `d >= 0`, without cancellation.
#[inline]
pub fn pow_step(y: f64, d: f64, p: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return d.powf(p);
    }
    y.powf(p) * (p * (d / y).ln_1p()).exp_m1()
}

/// `∫_a^b (t-u)_+^q du` for `q > -1`.
pub fn power_cell(t: f64, a: f64, b: f64, q: f64) -> f64 {
    if t <= a {
        0.0
    } else if t <= b {
        (t - a).powf(q + 1.0) / (q + 1.0)
    } else {
        pow_step(t - b, b - a, q + 1.0) / (q + 1.0)
    }
}

/// `(1/Γ(β)) ∫_a^b (t-u)_+^{β-1} du`: the Riemann–Liouville kernel integrated
/// over one cell.
pub fn rl_cell(t: f64, a: f64, b: f64, beta: f64) -> f64 {
    power_cell(t, a, b, beta - 1.0) / gamma(beta)
}

/// Moving-average kernel `M_β(t,u) = ((t-u)_+^β - (-u)_+^β) / Γ(β+1)`.
pub fn ma_kernel(t: f64, u: f64, beta: f64) -> f64 {
    ma_kernel_raw(t, u, beta) / gamma(beta + 1.0)
}

#[inline]
fn ma_kernel_raw(t: f64, u: f64, beta: f64) -> f64 {
    let x = t - u;
    let y = -u;
    if y <= 0.0 {
        pos_pow(x, beta)
    } else if x <= 0.0 {
        -y.powf(beta)
    } else if t >= 0.0 {
        pow_step(y, t, beta)
    } else {
        -pow_step(x, -t, beta)
    }
}

/// `∫_a^b M_β(t,u) du`.
pub fn ma_cell(t: f64, a: f64, b: f64, beta: f64) -> f64 {
    if t == 0.0 || b <= a {
        return 0.0;
    }
    let singular = t.min(0.0);
    let raw = if b < singular && singular - b >= 4.0 * (b - a) {
        panelled(a, b, singular, |u| ma_kernel_raw(t, u, beta))
    } else {
        power_cell(t, a, b, beta) - power_cell(0.0, a, b, beta)
    };
    raw / gamma(beta + 1.0)
}

/// Cell average of `M_β(t,·)` over `[a, b]`.
pub fn ma_cell_avg(t: f64, a: f64, b: f64, beta: f64) -> f64 {
    ma_cell(t, a, b, beta) / (b - a)
}

/// For the time step `[s0, s1]` and a basis cell `[a, b]`, returns
/// `(∫ Q(s) ds, ∫ θ(s) Q(s) ds)` over the step, where
/// `Q(s) = (1/Γ(β)) ∫_a^b (s-u)_+^{β-1} du` and `θ = (s-s0)/(s1-s0)`.
///
/// These are the exact weights of the fractional noise integrated against
/// the two hat functions of a linear interpolant on the step.
pub fn noise_step_moments(s0: f64, s1: f64, a: f64, b: f64, beta: f64) -> (f64, f64) {
    let tau = s1 - s0;
    if s1 <= a || tau <= 0.0 {
        return (0.0, 0.0);
    }
    if s0 - b >= 4.0 * tau {
        let gl = gl16();
        let (mut m0, mut m1) = (0.0, 0.0);
        for (x, w) in gl.iter() {
            let s = s0 + 0.5 * tau * (x + 1.0);
            let q = rl_cell(s, a, b, beta);
            m0 += w * q;
            m1 += w * q * (s - s0) / tau;
        }
        return (0.5 * tau * m0, 0.5 * tau * m1);
    }
    let g = gamma(beta + 1.0);
    let j0 = |c: f64| (pos_pow(s1 - c, beta + 1.0) - pos_pow(s0 - c, beta + 1.0)) / (beta + 1.0);
    let j1 = |c: f64| {
        (tau * pos_pow(s1 - c, beta + 1.0) / (beta + 1.0)
            - (pos_pow(s1 - c, beta + 2.0) - pos_pow(s0 - c, beta + 2.0))
                / ((beta + 1.0) * (beta + 2.0)))
            / tau
    };
    ((j0(a) - j0(b)) / g, (j1(a) - j1(b)) / g)
}

/// Cell-averaged convolution weights of `I^β` acting on piecewise-constant
/// functions: `ω_d = h^β/Γ(β+2) · Δ²[(d)^{β+1}]` for lags `d = 0..n`.
pub fn rl_conv_weights(beta: f64, h: f64, n: usize) -> Vec<f64> {
    let scale = h.powf(beta) / gamma(beta + 2.0);
    (0..n).map(|d| scale * second_difference(d, beta + 1.0)).collect()
}

/// `(d+1)^p - 2 d^p + (d-1)_+^p` evaluated without cancellation for large `d`.
fn second_difference(d: usize, p: f64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let df = d as f64;
    if d < 8 {
        return (df + 1.0).powf(p) - 2.0 * df.powf(p) + (df - 1.0).powf(p);
    }
    // d^p * 2 Σ_k C(p, 2k) d^{-2k}
    let x2 = 1.0 / (df * df);
    let mut binom = 1.0;
    let mut k = 0.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for _ in 0..12 {
        binom *= (p - k) / (k + 1.0) * (p - k - 1.0) / (k + 2.0);
        k += 2.0;
        power *= x2;
        sum += binom * power;
    }
    2.0 * df.powf(p) * sum
}

/// Integrates a smooth `f` over `[a, b]` left of a singular point, using
/// panels no wider than a quarter of their distance to the singularity.
fn panelled(a: f64, b: f64, singular: f64, f: impl Fn(f64) -> f64) -> f64 {
    let gl = gl16();
    let mut total = 0.0;
    let mut right = b;
    while right > a {
        let width = (0.25 * (singular - right)).min(right - a);
        let left = if right - width <= a { a } else { right - width };
        let (mid, half) = (0.5 * (left + right), 0.5 * (right - left));
        total += half * gl.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>();
        right = left;
    }
    total
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * self.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }
}

pub(crate) fn gl16() -> &'static GaussLegendre {
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(16))
}
