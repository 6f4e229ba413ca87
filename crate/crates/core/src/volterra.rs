//! Linear Wick–Volterra equations
//!
//! `U(t) = a(t) + ∫_0^t b(t,s) U(s) ds + ∫_0^t σ(t,s) U(s) ◇ Ẋ^β_s ds`
//!
//! on a uniform mesh of `[0, T]`. The drift integral uses the trapezoid rule.
//! In the noise integral `σ(t,·)U(·)` is interpolated linearly on each step and
//! integrated exactly against `Ẋ^β`, which is where the kernel singularity
//! lives. All three backends solve this same discrete equation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{noise_element, Basis, ChaosElement, MultiIndex, TestFunction};
use crate::error::{check_hurst_range, invalid, Error, Result};
use crate::kernels::noise_step_moments;

/// Scalars or chaos elements: whatever the resolvent series can be summed in.
pub trait WickRing: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    /// `self += c · (a ◇ b)`.
    fn add_wick(&mut self, c: f64, a: &Self, b: &Self) -> Result<()>;
    fn add_scaled(&mut self, c: f64, a: &Self) -> Result<()>;
    fn size(&self) -> f64;
    /// `self += c Σ_i xs[i] ◇ ys[i]`.
    fn add_dot(&mut self, c: f64, xs: &[Self], ys: &[Self]) -> Result<()> {
        for (x, y) in xs.iter().zip(ys) {
            self.add_wick(c, x, y)?;
        }
        Ok(())
    }
}

impl WickRing for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_wick(&mut self, c: f64, a: &Self, b: &Self) -> Result<()> {
        *self += c * a * b;
        Ok(())
    }
    fn add_scaled(&mut self, c: f64, a: &Self) -> Result<()> {
        *self += c * a;
        Ok(())
    }
    fn size(&self) -> f64 {
        self.abs()
    }
    fn add_dot(&mut self, c: f64, xs: &[Self], ys: &[Self]) -> Result<()> {
        *self += c * xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>();
        Ok(())
    }
}

impl WickRing for ChaosElement {
    fn zero_like(&self) -> Self {
        ChaosElement::zero(self.basis())
    }
    fn add_wick(&mut self, c: f64, a: &Self, b: &Self) -> Result<()> {
        *self = self.axpy(c, &a.wick(b)?)?;
        Ok(())
    }
    fn add_scaled(&mut self, c: f64, a: &Self) -> Result<()> {
        *self = self.axpy(c, a)?;
        Ok(())
    }
    fn size(&self) -> f64 {
        self.l2_norm()
    }
}

/// Values `K(t_i, t_j)` for `0 <= j <= i <= n` on the mesh `t_i = i·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle<T> {
    n: usize,
    step: f64,
    data: Vec<T>,
}

impl<T> Triangle<T> {
    pub fn from_fn(n: usize, step: f64, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for i in 0..=n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { n, step, data }
    }

    /// Index of the last mesh node.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        assert!(j <= i && i <= self.n, "({i}, {j}) is outside the triangle");
        &self.data[i * (i + 1) / 2 + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let s = i * (i + 1) / 2;
        &self.data[s..s + i + 1]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Triangle<U> {
        Triangle {
            n: self.n,
            step: self.step,
            data: self.data.iter().map(f).collect(),
        }
    }
}

// (L ⊛ R)(t_i, t_j) = ∫_{t_j}^{t_i} L(t_i, u) ◇ R(u, t_j) du by the trapezoid rule.
fn convolve<T: WickRing>(left: &Triangle<T>, right: &Triangle<T>) -> Result<Triangle<T>> {
    let n = left.n;
    let step = left.step;
    // Columns of `right`, so that the inner sum runs over contiguous memory.
    let cols: Vec<Vec<T>> = (0..=n).map(|j| (j..=n).map(|l| right.get(l, j).clone()).collect()).collect();
    let rows: Vec<Vec<T>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let li = left.row(i);
            (0..=i)
                .map(|j| {
                    let mut acc = li[0].zero_like();
                    if i == j {
                        return Ok(acc);
                    }
                    let col = &cols[j][..=i - j];
                    acc.add_wick(0.5 * step, &li[j], &col[0])?;
                    acc.add_wick(0.5 * step, &li[i], &col[i - j])?;
                    acc.add_dot(step, &li[j + 1..i], &col[1..i - j])?;
                    Ok(acc)
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Triangle {
        n,
        step,
        data: rows.into_iter().flatten().collect(),
    })
}

fn max_size<T: WickRing>(t: &Triangle<T>) -> f64 {
    t.data.iter().map(WickRing::size).fold(0.0, f64::max)
}

/// Partial sum `H = Σ_{n<=n_max} K_n` of the resolvent series with
/// `K_1 = K`, `K_{n+1}(t,s) = ∫_s^t K_n(t,u) ◇ K(u,s) du`.
#[derive(Debug, Clone)]
pub struct Resolvent<T> {
    pub kernel: Triangle<T>,
    /// `max_{t,s} |K_n(t,s)|` for each summed term.
    pub term_norms: Vec<f64>,
}

impl<T> Resolvent<T> {
    /// Size of the last summed term, the convergence certificate.
    pub fn last_term_norm(&self) -> f64 {
        self.term_norms.last().copied().unwrap_or(0.0)
    }
}

/// Three consecutive non-decreasing steps in a sequence of term norms.
fn stalled(norms: &[f64]) -> bool {
    let n = norms.len();
    n >= 4 && norms[n - 4..].windows(2).all(|w| w[1] >= w[0] && w[1] > 0.0)
}

pub fn resolvent_kernel<T: WickRing>(k: &Triangle<T>, n_max: usize) -> Result<Resolvent<T>> {
    if n_max == 0 {
        return Err(invalid("n_max", "need at least one term"));
    }
    let mut h = k.clone();
    let mut term = k.clone();
    let mut norms = vec![max_size(k)];
    for _ in 1..n_max {
        if norms.last() == Some(&0.0) {
            break;
        }
        term = convolve(&term, k)?;
        for (acc, t) in h.data.iter_mut().zip(&term.data) {
            acc.add_scaled(1.0, t)?;
        }
        norms.push(max_size(&term));
        if stalled(&norms) {
            return Err(Error::Divergence(norms));
        }
    }
    Ok(Resolvent {
        kernel: h,
        term_norms: norms,
    })
}

/// `H - K - ∫_s^t H(t,u) ◇ K(u,s) du` on the triangle.
pub fn resolvent_residual<T: WickRing>(k: &Triangle<T>, h: &Triangle<T>) -> Result<Triangle<T>> {
    let mut r = convolve(h, k)?;
    for ((r, hv), kv) in r.data.iter_mut().zip(&h.data).zip(&k.data) {
        let mut v = hv.clone();
        v.add_scaled(-1.0, kv)?;
        v.add_scaled(-1.0, r)?;
        *r = v;
    }
    Ok(r)
}

/// Largest entry of a triangle, in the ring's own size.
pub fn triangle_sup<T: WickRing>(t: &Triangle<T>) -> f64 {
    max_size(t)
}

/// Deterministic kernels `k(t, s)` on `s <= t`, in terms of `r = t - s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelPreset {
    Zero,
    Constant { value: f64 },
    /// `scale · e^{rate · r}`.
    Exponential { scale: f64, rate: f64 },
    /// `Σ_k coeffs[k] r^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl KernelPreset {
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let r = t - s;
        match self {
            KernelPreset::Zero => 0.0,
            KernelPreset::Constant { value } => *value,
            KernelPreset::Exponential { scale, rate } => scale * (rate * r).exp(),
            KernelPreset::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            KernelPreset::Zero => true,
            KernelPreset::Constant { value } => *value == 0.0,
            KernelPreset::Exponential { scale, .. } => *scale == 0.0,
            KernelPreset::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
        }
    }

    /// `max |k|` over `0 <= r <= horizon`, sampled on `n + 1` points plus the
    /// ends (exact for the constant and exponential kernels).
    pub fn sup(&self, horizon: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| self.eval(horizon * i as f64 / n.max(1) as f64, 0.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `∫ (1-θ) Ẋ^β ds` and `∫ θ Ẋ^β ds` over each mesh step, as first-chaos
/// elements (`θ` the local coordinate of the step).
pub fn noise_step_elements(basis: &Arc<Basis>, beta: f64, times: &[f64]) -> Result<(Vec<ChaosElement>, Vec<ChaosElement>)> {
    check_hurst_range("beta", beta)?;
    let grid = basis.grid();
    let h = grid.step();
    let mut a_steps = Vec::with_capacity(times.len().saturating_sub(1));
    let mut b_steps = Vec::with_capacity(times.len().saturating_sub(1));
    for w in times.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let mut ca = vec![0.0; basis.dim()];
        let mut cb = vec![0.0; basis.dim()];
        for i in 0..grid.n_cells() {
            let (a, b) = grid.cell(i);
            if a >= s1 {
                break;
            }
            let (m0, m1) = noise_step_moments(s0, s1, a, b, beta);
            for (j, atom) in basis.marks().iter().enumerate() {
                let c = atom.size * (atom.mass / h).sqrt();
                ca[basis.index(i, j)] = c * (m0 - m1);
                cb[basis.index(i, j)] = c * m1;
            }
        }
        a_steps.push(ChaosElement::first_chaos(basis, &ca)?);
        b_steps.push(ChaosElement::first_chaos(basis, &cb)?);
    }
    Ok((a_steps, b_steps))
}

/// `Σ c_i x_i` in one pass.
pub(crate) fn combine(basis: &Arc<Basis>, parts: &[(f64, &ChaosElement)]) -> Result<ChaosElement> {
    let terms = parts
        .iter()
        .filter(|(c, _)| *c != 0.0)
        .flat_map(|(c, x)| x.terms().iter().map(move |(a, v)| (a.clone(), c * v)));
    let mut out = ChaosElement::from_terms(basis, terms)?;
    if parts.iter().any(|(_, x)| x.overflow()) {
        let dropped = parts.iter().map(|(c, x)| c.abs() * x.dropped_mass()).sum();
        out.mark_overflow(dropped);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct VolterraProblem {
    basis: Arc<Basis>,
    beta: f64,
    horizon: f64,
    n_steps: usize,
    forcing: Vec<ChaosElement>,
    b: KernelPreset,
    sigma: KernelPreset,
    kernel_bound: Option<f64>,
}

impl VolterraProblem {
    /// `forcing[n]` is `a(t_n)` on the mesh `t_n = n T / n_steps`.
    pub fn new(
        basis: &Arc<Basis>,
        beta: f64,
        horizon: f64,
        n_steps: usize,
        forcing: Vec<ChaosElement>,
        b: KernelPreset,
        sigma: KernelPreset,
    ) -> Result<Self> {
        check_hurst_range("beta", beta)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be positive"));
        }
        let g = basis.grid();
        if g.t_min() > 0.0 || g.t_max() < horizon * (1.0 - 1e-12) {
            return Err(invalid(
                "grid",
                format!("basis grid [{}, {}] must contain [0, {horizon}]", g.t_min(), g.t_max()),
            ));
        }
        if forcing.len() != n_steps + 1 {
            return Err(invalid("forcing", format!("need {} mesh values, got {}", n_steps + 1, forcing.len())));
        }
        for f in &forcing {
            if **f.basis() != **basis {
                return Err(Error::BasisMismatch);
            }
        }
        for (name, k) in [("b", &b), ("sigma", &sigma)] {
            if !k.sup(horizon, n_steps).is_finite() {
                return Err(invalid(name, "kernel is not bounded on the triangle"));
            }
        }
        Ok(Self {
            basis: basis.clone(),
            beta,
            horizon,
            n_steps,
            forcing,
            b,
            sigma,
            kernel_bound: None,
        })
    }

    /// Same forcing element at every mesh time.
    pub fn with_constant_forcing(
        a: &ChaosElement,
        beta: f64,
        horizon: f64,
        n_steps: usize,
        b: KernelPreset,
        sigma: KernelPreset,
    ) -> Result<Self> {
        Self::new(a.basis(), beta, horizon, n_steps, vec![a.clone(); n_steps + 1], b, sigma)
    }

    /// Gauge bound `M` on `sup ‖b + σ Ẋ^β_s‖` (grid-proxy norm, `p = 2`).
    /// When exceeded the solve still runs, but stops at the first sign of
    /// divergence.
    pub fn with_kernel_bound(mut self, m: f64) -> Self {
        self.kernel_bound = Some(m);
        self
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.horizon * n as f64 / self.n_steps as f64).collect()
    }

    pub fn forcing(&self) -> &[ChaosElement] {
        &self.forcing
    }

    pub fn b(&self) -> &KernelPreset {
        &self.b
    }

    pub fn sigma(&self) -> &KernelPreset {
        &self.sigma
    }

    /// `K(t_i, t_j) = b(t_i,t_j) + σ(t_i,t_j) Ẋ^β_{t_j}` with the noise taken
    /// at the mesh point itself.
    pub fn kernel_triangle(&self) -> Result<Triangle<ChaosElement>> {
        let times = self.times();
        let noise: Vec<ChaosElement> = times
            .iter()
            .map(|&s| noise_element(self.beta, s, &self.basis))
            .collect::<Result<_>>()?;
        let one = ChaosElement::constant(&self.basis, 1.0);
        let mut err = None;
        let tri = Triangle::from_fn(self.n_steps, self.step(), |i, j| {
            let (t, s) = (times[i], times[j]);
            match combine(&self.basis, &[(self.b.eval(t, s), &one), (self.sigma.eval(t, s), &noise[j])]) {
                Ok(e) => e,
                Err(e) => {
                    err.get_or_insert(e);
                    ChaosElement::zero(&self.basis)
                }
            }
        });
        err.map_or(Ok(tri), Err)
    }

    /// Whether `sup ‖K(t,s)‖ <= M` in the grid-proxy gauge, if a bound is set.
    pub fn gauge_ok(&self) -> Result<bool> {
        let Some(m) = self.kernel_bound else {
            return Ok(true);
        };
        let times = self.times();
        let mut sup = 0.0f64;
        for (j, &s) in times.iter().enumerate() {
            let noise = noise_element(self.beta, s, &self.basis)?;
            for &t in &times[j..] {
                let k = noise.scale(self.sigma.eval(t, s)).axpy(
                    self.b.eval(t, s),
                    &ChaosElement::constant(&self.basis, 1.0),
                )?;
                sup = sup.max(crate::chaos::grid_proxy_norm(&k, 2.0));
            }
        }
        Ok(sup <= m)
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    ChaosPicard,
    ChaosResolvent,
    /// One scalar Volterra equation per probe.
    SCollocation(Vec<TestFunction>),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::ChaosPicard => "chaos_picard",
            Backend::ChaosResolvent => "chaos_resolvent",
            Backend::SCollocation(_) => "s_collocation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChaosSolution {
    pub times: Vec<f64>,
    pub values: Vec<ChaosElement>,
    /// Picard update sizes, or resolvent term sizes (sup over `t` of the
    /// coefficient 2-norm).
    pub update_norms: Vec<f64>,
    /// Largest Fock norm that the order cap drops when the discrete operator
    /// is applied once more to the returned solution: the truncation
    /// residual of the untruncated equation.
    pub dropped_mass: f64,
    /// `dropped_mass · (1/2)^{N+1} / √(N+1)!`, the residual's S-transform
    /// bound at probes of gauge `<= 1/2` (every dropped term has order
    /// `> N`).
    pub residual_bound: f64,
    /// `residual_bound <= 1e-6`.
    pub certified: bool,
}

impl ChaosSolution {
    pub fn s_transform(&self, eta: &TestFunction) -> Result<Vec<f64>> {
        self.values.iter().map(|u| u.s_transform(eta)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CollocationSolution {
    pub times: Vec<f64>,
    /// `values[probe][n] = S U(t_n)(η_probe)`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub enum VolterraSolution {
    Chaos(ChaosSolution),
    Collocation(CollocationSolution),
}

impl VolterraSolution {
    pub fn times(&self) -> &[f64] {
        match self {
            VolterraSolution::Chaos(c) => &c.times,
            VolterraSolution::Collocation(c) => &c.times,
        }
    }

    pub fn as_chaos(&self) -> Option<&ChaosSolution> {
        match self {
            VolterraSolution::Chaos(c) => Some(c),
            VolterraSolution::Collocation(_) => None,
        }
    }

    /// `(t, probe, S U(t)(η_probe))` rows. Collocation solutions must be
    /// queried with the probes they were solved for.
    pub fn s_table(&self, probes: &[TestFunction]) -> Result<Vec<(f64, usize, f64)>> {
        let per_probe: Vec<Vec<f64>> = match self {
            VolterraSolution::Chaos(c) => probes.iter().map(|p| c.s_transform(p)).collect::<Result<_>>()?,
            VolterraSolution::Collocation(c) => {
                if c.values.len() != probes.len() {
                    return Err(invalid("probes", "collocation solution was solved for a different probe set"));
                }
                c.values.clone()
            }
        };
        let times = self.times();
        let mut rows = Vec::with_capacity(times.len() * probes.len());
        for (n, &t) in times.iter().enumerate() {
            for (p, v) in per_probe.iter().enumerate() {
                rows.push((t, p, v[n]));
            }
        }
        Ok(rows)
    }
}

// The discrete operator, shared by both chaos backends.
struct Operator<'a> {
    p: &'a VolterraProblem,
    times: Vec<f64>,
    // A_m + B_{m-1}: the noise weight of node m in rows n > m.
    full: Vec<ChaosElement>,
    // B_{n-1}: the noise weight of node n in its own row.
    diag: Vec<ChaosElement>,
}

impl<'a> Operator<'a> {
    fn new(p: &'a VolterraProblem) -> Result<Self> {
        let times = p.times();
        let basis = &p.basis;
        let n = p.n_steps;
        let (a, b) = noise_step_elements(basis, p.beta, &times)?;
        let zero = ChaosElement::zero(basis);
        let full = (0..=n)
            .map(|m| {
                let am = if m < n { &a[m] } else { &zero };
                let bm = if m >= 1 { &b[m - 1] } else { &zero };
                am.add(bm)
            })
            .collect::<Result<_>>()?;
        let diag = (0..=n).map(|m| if m >= 1 { b[m - 1].clone() } else { zero.clone() }).collect();
        Ok(Self { p, times, full, diag })
    }

    fn apply(&self, u: &[ChaosElement]) -> Result<Vec<ChaosElement>> {
        let p = self.p;
        let basis = &p.basis;
        let tau = p.step();
        let with_noise = !p.sigma.is_zero();
        let (pf, pd): (Vec<ChaosElement>, Vec<ChaosElement>) = if with_noise {
            let pf = u.par_iter().zip(&self.full).map(|(x, w)| x.wick(w)).collect::<Result<_>>()?;
            let pd = u.par_iter().zip(&self.diag).map(|(x, w)| x.wick(w)).collect::<Result<_>>()?;
            (pf, pd)
        } else {
            (Vec::new(), Vec::new())
        };
        (0..u.len())
            .into_par_iter()
            .map(|n| {
                if n == 0 {
                    return Ok(ChaosElement::zero(basis));
                }
                let t = self.times[n];
                let mut parts: Vec<(f64, &ChaosElement)> = Vec::with_capacity(2 * n + 2);
                for m in 0..=n {
                    let s = self.times[m];
                    let w = if m == 0 || m == n { 0.5 } else { 1.0 };
                    parts.push((tau * w * p.b.eval(t, s), &u[m]));
                    if with_noise {
                        let noise = if m < n { &pf[m] } else { &pd[n] };
                        parts.push((p.sigma.eval(t, s), noise));
                    }
                }
                combine(basis, &parts)
            })
            .collect()
    }
}

fn sup_l2(a: &[ChaosElement], b: &[ChaosElement]) -> Result<f64> {
    let mut m = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        m = m.max(x.sub(y)?.l2_norm());
    }
    Ok(m)
}

fn ratios(norms: &[f64]) -> Vec<f64> {
    norms.windows(2).map(|w| w[1] / w[0]).collect()
}

pub fn solve_volterra(p: &VolterraProblem, backend: &Backend, tol: f64, max_iter: usize) -> Result<VolterraSolution> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    match backend {
        Backend::ChaosPicard => picard(p, tol, max_iter).map(VolterraSolution::Chaos),
        Backend::ChaosResolvent => neumann(p, tol, max_iter).map(VolterraSolution::Chaos),
        Backend::SCollocation(probes) => collocation(p, probes).map(VolterraSolution::Collocation),
    }
}

pub(crate) const CERTIFY_GAUGE: f64 = 0.5;
pub(crate) const CERTIFY_TOL: f64 = 1e-6;

/// `(dropped, bound, certified)` for the truncation residual of one more
/// operator application.
pub(crate) fn certificate(order: usize, dropped: f64) -> (f64, f64, bool) {
    let n = order as i32 + 1;
    let factorial: f64 = (1..=n).map(f64::from).product();
    let bound = dropped * CERTIFY_GAUGE.powi(n) / factorial.sqrt();
    (dropped, bound, bound <= CERTIFY_TOL)
}

fn certify(op: &Operator, values: &[ChaosElement]) -> Result<(f64, f64, bool)> {
    let clean: Vec<ChaosElement> = values.iter().map(ChaosElement::without_overflow).collect();
    let dropped = op.apply(&clean)?.iter().map(|v| v.dropped_mass()).fold(0.0, f64::max);
    Ok(certificate(op.p.basis.order(), dropped))
}

fn picard(p: &VolterraProblem, tol: f64, max_iter: usize) -> Result<ChaosSolution> {
    let op = Operator::new(p)?;
    let monitor = !p.gauge_ok()?;
    let mut u = p.forcing.clone();
    let mut norms = Vec::new();
    for _ in 0..max_iter {
        let ku = op.apply(&u)?;
        let next: Vec<ChaosElement> = p.forcing.iter().zip(&ku).map(|(a, k)| a.add(k)).collect::<Result<_>>()?;
        let d = sup_l2(&next, &u)?;
        norms.push(d);
        u = next;
        if d < tol {
            let (dropped_mass, residual_bound, certified) = certify(&op, &u)?;
            return Ok(ChaosSolution {
                times: op.times.clone(),
                dropped_mass,
                residual_bound,
                certified,
                values: u,
                update_norms: norms,
            });
        }
        if monitor && stalled(&norms) {
            return Err(Error::Divergence(norms));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_update: norms.last().copied().unwrap_or(f64::NAN),
        ratios: ratios(&norms),
    })
}

fn neumann(p: &VolterraProblem, tol: f64, max_iter: usize) -> Result<ChaosSolution> {
    let op = Operator::new(p)?;
    let mut term = p.forcing.clone();
    let mut sum = p.forcing.clone();
    let mut norms = Vec::new();
    for _ in 0..max_iter {
        term = op.apply(&term)?;
        let size = term.iter().map(|x| x.l2_norm()).fold(0.0, f64::max);
        norms.push(size);
        sum = sum.iter().zip(&term).map(|(s, t)| s.add(t)).collect::<Result<_>>()?;
        if size < tol {
            let (dropped_mass, residual_bound, certified) = certify(&op, &sum)?;
            return Ok(ChaosSolution {
                times: op.times.clone(),
                dropped_mass,
                residual_bound,
                certified,
                values: sum,
                update_norms: norms,
            });
        }
        if stalled(&norms) {
            return Err(Error::Divergence(norms));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_update: norms.last().copied().unwrap_or(f64::NAN),
        ratios: ratios(&norms),
    })
}

fn collocation(p: &VolterraProblem, probes: &[TestFunction]) -> Result<CollocationSolution> {
    if probes.is_empty() {
        return Err(invalid("probes", "collocation needs at least one probe"));
    }
    let times = p.times();
    let (a, b) = noise_step_elements(&p.basis, p.beta, &times)?;
    let n = p.n_steps;
    let tau = p.step();
    let values = probes
        .par_iter()
        .map(|eta| {
            eta.check_admissible()?;
            let sa: Vec<f64> = p.forcing.iter().map(|x| x.s_transform(eta)).collect::<Result<_>>()?;
            let s_a: Vec<f64> = a.iter().map(|x| x.s_transform(eta)).collect::<Result<_>>()?;
            let s_b: Vec<f64> = b.iter().map(|x| x.s_transform(eta)).collect::<Result<_>>()?;
            let mut u = vec![0.0; n + 1];
            u[0] = sa[0];
            for i in 1..=n {
                let t = times[i];
                let mut rhs = sa[i];
                for m in 0..i {
                    let s = times[m];
                    let w = if m == 0 { 0.5 } else { 1.0 };
                    let noise = s_a[m] + if m >= 1 { s_b[m - 1] } else { 0.0 };
                    rhs += (tau * w * p.b.eval(t, s) + p.sigma.eval(t, s) * noise) * u[m];
                }
                let diag = 1.0 - 0.5 * tau * p.b.eval(t, t) - p.sigma.eval(t, t) * s_b[i - 1];
                if diag.abs() < 1e-12 {
                    return Err(invalid("n_steps", "singular implicit step; refine the mesh"));
                }
                u[i] = rhs / diag;
            }
            Ok(u)
        })
        .collect::<Result<_>>()?;
    Ok(CollocationSolution { times, values })
}

/// The constant term of each solution value; useful for deterministic problems.
pub fn constant_terms(values: &[ChaosElement]) -> Vec<f64> {
    values.iter().map(|v| v.coeff(&MultiIndex::zero())).collect()
}
