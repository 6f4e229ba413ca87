//! Wick-affine SDEs
//!
//! `dU/dt = b(U) + σ(U) ◇ Ẋ^β_t`, `U(0) = U0`, with `b(U) = b0 + b1 ◇ U` and
//! `σ(U) = σ0 + σ1 ◇ U`, solved by Picard iteration of the integral form on a
//! uniform mesh of `[0, T]`. The discretization is the one of
//! [`crate::volterra`]: trapezoid drift, exact noise weights against a
//! piecewise-linear `σ(U)`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::chaos::{fractional_levy_element, grid_proxy_norm, noise_element, Basis, ChaosElement, MultiIndex};
use crate::error::{check_hurst_range, invalid, Error, Result};
use crate::volterra::{certificate, noise_step_elements, KernelPreset, VolterraProblem};

pub use crate::hermite::{holder_noise_check, log_spaced_pairs, HolderFit};

/// `F(U) = c0 + c1 ◇ U`.
#[derive(Debug, Clone, PartialEq)]
pub struct WickAffineCoefficient {
    pub c0: ChaosElement,
    pub c1: ChaosElement,
}

impl WickAffineCoefficient {
    pub fn new(c0: ChaosElement, c1: ChaosElement) -> Result<Self> {
        if **c0.basis() != **c1.basis() {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { c0, c1 })
    }

    pub fn zero(basis: &Arc<Basis>) -> Self {
        Self {
            c0: ChaosElement::zero(basis),
            c1: ChaosElement::zero(basis),
        }
    }

    /// `F(U) = c ◇ U` with a deterministic `c`.
    pub fn linear(basis: &Arc<Basis>, c: f64) -> Self {
        Self {
            c0: ChaosElement::zero(basis),
            c1: ChaosElement::constant(basis, c),
        }
    }

    pub fn apply(&self, u: &ChaosElement) -> Result<ChaosElement> {
        self.c0.add(&self.c1.wick(u)?)
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_empty() && self.c1.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SdeProblem {
    pub u0: ChaosElement,
    pub b: WickAffineCoefficient,
    pub sigma: WickAffineCoefficient,
    pub beta: f64,
    pub horizon: f64,
    pub n_steps: usize,
}

impl SdeProblem {
    pub fn new(
        u0: ChaosElement,
        b: WickAffineCoefficient,
        sigma: WickAffineCoefficient,
        beta: f64,
        horizon: f64,
        n_steps: usize,
    ) -> Result<Self> {
        check_hurst_range("beta", beta)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be positive"));
        }
        let basis = u0.basis();
        for e in [&b.c0, &b.c1, &sigma.c0, &sigma.c1] {
            if **e.basis() != **basis {
                return Err(Error::BasisMismatch);
            }
        }
        let g = basis.grid();
        if g.t_min() > 0.0 || g.t_max() < horizon * (1.0 - 1e-12) {
            return Err(invalid(
                "grid",
                format!("basis grid [{}, {}] must contain [0, {horizon}]", g.t_min(), g.t_max()),
            ));
        }
        Ok(Self {
            u0,
            b,
            sigma,
            beta,
            horizon,
            n_steps,
        })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        self.u0.basis()
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.horizon * n as f64 / self.n_steps as f64).collect()
    }

    /// The same equation as a Wick–Volterra problem. Needs deterministic
    /// `b1`, `σ1`; the constant parts go into the forcing
    /// `a(t) = U0 + t b0 + σ0 ◇ X^β_t`.
    pub fn to_volterra(&self) -> Result<VolterraProblem> {
        let deterministic = |e: &ChaosElement| e.max_order() == 0;
        if !deterministic(&self.b.c1) || !deterministic(&self.sigma.c1) {
            return Err(invalid("b1/sigma1", "only deterministic Wick multipliers give a Volterra kernel"));
        }
        let basis = self.basis();
        let forcing = self
            .times()
            .iter()
            .map(|&t| {
                let x = fractional_levy_element(self.beta, t, basis)?;
                self.u0.axpy(t, &self.b.c0)?.add(&self.sigma.c0.wick(&x)?)
            })
            .collect::<Result<_>>()?;
        VolterraProblem::new(
            basis,
            self.beta,
            self.horizon,
            self.n_steps,
            forcing,
            KernelPreset::Constant {
                value: self.b.c1.constant_term(),
            },
            KernelPreset::Constant {
                value: self.sigma.c1.constant_term(),
            },
        )
    }
}

/// Constants of the Lipschitz and linear-growth conditions in the weighted
/// gauge `‖F‖_p² = Σ_α c_α² Π_k (k+2)^{-2p α_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CoefficientReport {
    pub gauge_p: f64,
    /// Operator norm of `Y ↦ b1 ◇ Y` on the truncated space.
    pub lip_b: f64,
    pub lip_sigma: f64,
    /// `max(‖b0‖, lip_b)`, so that `‖b(Y)‖ <= growth_b (1 + ‖Y‖)`.
    pub growth_b: f64,
    pub growth_sigma: f64,
    /// `M = max_t ‖Ẋ^β_t‖` over the mesh.
    pub noise_bound: f64,
    /// `lip_b + lip_sigma · M`.
    pub c_eff: f64,
    /// `C (1 + M)` with `C = max(growth_b, growth_sigma)`.
    pub growth_bound: f64,
    /// `h · c_eff` for the mesh step `h`.
    pub step_guard: f64,
}

/// Multi-indices of order `<= order` supported on `support`.
fn enumerate_indices(support: &[usize], order: usize, cap: usize) -> Result<Vec<MultiIndex>> {
    fn rec(support: &[usize], left: usize, cur: &mut Vec<(usize, u32)>, out: &mut Vec<MultiIndex>, cap: usize) -> bool {
        out.push(MultiIndex::from_pairs(cur.iter().copied()));
        if out.len() > cap {
            return false;
        }
        for (i, &k) in support.iter().enumerate() {
            for c in 1..=left as u32 {
                cur.push((k, c));
                let ok = rec(&support[i + 1..], left - c as usize, cur, out, cap);
                cur.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    let mut out = Vec::new();
    if !rec(support, order, &mut Vec::new(), &mut out, cap) {
        return Err(invalid(
            "c1",
            format!("more than {cap} multi-indices on the multiplier's support; lower the chaos order"),
        ));
    }
    Ok(out)
}

fn gauge_weight(a: &MultiIndex, p: f64) -> f64 {
    a.pairs().map(|(k, n)| ((k + 2) as f64).powf(-p * n as f64)).product()
}

/// Operator norm of `Y ↦ c ◇ Y` (order-capped) in the `p`-weighted gauge,
/// by power iteration on `MᵀM`.
pub fn wick_multiplier_norm(c: &ChaosElement, p: f64) -> Result<f64> {
    if c.is_empty() {
        return Ok(0.0);
    }
    let order = c.basis().order();
    let mut support: Vec<usize> = c.terms().iter().flat_map(|(a, _)| a.pairs().map(|(k, _)| k)).collect();
    support.sort_unstable();
    support.dedup();
    let indices = enumerate_indices(&support, order, 400_000)?;
    let pos: FxHashMap<&MultiIndex, usize> = indices.iter().enumerate().map(|(i, a)| (a, i)).collect();
    // The weights are multiplicative, so in weighted coordinates the map is
    // plain Wick multiplication by the weighted multiplier.
    let mut entries = Vec::new();
    for (col, b) in indices.iter().enumerate() {
        for (a, v) in c.terms() {
            if a.order() + b.order() <= order {
                let row = pos[&a.add(b)];
                entries.push((row, col, v * gauge_weight(a, p)));
            }
        }
    }
    let n = indices.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut est = 0.0f64;
    for _ in 0..500 {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        y.fill(0.0);
        for &(r, c, v) in &entries {
            y[r] += v * x[c];
        }
        z.fill(0.0);
        for &(r, c, v) in &entries {
            z[c] += v * y[r];
        }
        let next = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        std::mem::swap(&mut x, &mut z);
        if (next - est).abs() <= 1e-12 * next {
            return Ok(next);
        }
        est = next;
    }
    Ok(est)
}

pub fn validate_coefficients(p: &SdeProblem, gauge_p: f64) -> Result<CoefficientReport> {
    if !(gauge_p > 1.0) {
        return Err(invalid("gauge_p", format!("need p > 1, got {gauge_p}")));
    }
    let lip_b = wick_multiplier_norm(&p.b.c1, gauge_p)?;
    let lip_sigma = wick_multiplier_norm(&p.sigma.c1, gauge_p)?;
    let growth_b = grid_proxy_norm(&p.b.c0, gauge_p).max(lip_b);
    let growth_sigma = grid_proxy_norm(&p.sigma.c0, gauge_p).max(lip_sigma);
    let mut noise_bound = 0.0f64;
    if !p.sigma.is_zero() {
        for t in p.times() {
            noise_bound = noise_bound.max(grid_proxy_norm(&noise_element(p.beta, t, p.basis())?, gauge_p));
        }
    }
    let c_eff = lip_b + lip_sigma * noise_bound;
    Ok(CoefficientReport {
        gauge_p,
        lip_b,
        lip_sigma,
        growth_b,
        growth_sigma,
        noise_bound,
        c_eff,
        growth_bound: growth_b.max(growth_sigma) * (1.0 + noise_bound),
        step_guard: p.step() * c_eff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    Zero,
    U0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialGuess,
    pub gauge_p: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            initial: InitialGuess::U0,
            gauge_p: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdeSolution {
    pub times: Vec<f64>,
    pub values: Vec<ChaosElement>,
    /// `sup_t ‖U^{(m+1)}(t) - U^{(m)}(t)‖` per iteration, in the
    /// unweighted coefficient norm (which dominates every gauge norm).
    pub update_norms: Vec<f64>,
    pub report: CoefficientReport,
    pub dropped_mass: f64,
    pub residual_bound: f64,
    pub certified: bool,
}

impl SdeSolution {
    /// Ratios of successive update norms.
    pub fn decay_ratios(&self) -> Vec<f64> {
        self.update_norms.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn s_transform(&self, eta: &crate::chaos::TestFunction) -> Result<Vec<f64>> {
        self.values.iter().map(|u| u.s_transform(eta)).collect()
    }
}

pub fn picard_solve(p: &SdeProblem, tol: f64, max_iter: usize) -> Result<SdeSolution> {
    picard_solve_with(
        p,
        &PicardOptions {
            tol,
            max_iter,
            ..Default::default()
        },
    )
}

struct Sweep<'a> {
    p: &'a SdeProblem,
    a_steps: Vec<ChaosElement>,
    b_steps: Vec<ChaosElement>,
}

impl Sweep<'_> {
    // U0 + ∫_0^{t_n} [b(U) + σ(U) ◇ Ẋ] ds for the whole path U.
    fn apply(&self, u: &[ChaosElement]) -> Result<Vec<ChaosElement>> {
        let p = self.p;
        let tau = p.step();
        let bu: Vec<ChaosElement> = u.par_iter().map(|x| p.b.apply(x)).collect::<Result<_>>()?;
        let su: Vec<ChaosElement> = u.par_iter().map(|x| p.sigma.apply(x)).collect::<Result<_>>()?;
        let inc: Vec<ChaosElement> = (0..p.n_steps)
            .into_par_iter()
            .map(|m| {
                let left = su[m].wick(&self.a_steps[m])?;
                let right = su[m + 1].wick(&self.b_steps[m])?;
                crate::volterra::combine(
                    p.basis(),
                    &[(0.5 * tau, &bu[m]), (0.5 * tau, &bu[m + 1]), (1.0, &left), (1.0, &right)],
                )
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(u.len());
        out.push(p.u0.clone());
        for d in &inc {
            let next = out.last().expect("non-empty").add(d)?;
            out.push(next);
        }
        Ok(out)
    }
}

pub fn picard_solve_with(p: &SdeProblem, opts: &PicardOptions) -> Result<SdeSolution> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {}", opts.tol)));
    }
    let report = validate_coefficients(p, opts.gauge_p)?;
    if report.step_guard >= 0.5 {
        return Err(Error::StepGuard {
            value: report.step_guard,
        });
    }
    let times = p.times();
    let (a_steps, b_steps) = noise_step_elements(p.basis(), p.beta, &times)?;
    let sweep = Sweep { p, a_steps, b_steps };
    let mut u = match opts.initial {
        InitialGuess::Zero => vec![ChaosElement::zero(p.basis()); p.n_steps + 1],
        InitialGuess::U0 => vec![p.u0.clone(); p.n_steps + 1],
    };
    let mut norms = Vec::new();
    for _ in 0..opts.max_iter {
        let next = sweep.apply(&u)?;
        let mut d = 0.0f64;
        for (x, y) in next.iter().zip(&u) {
            d = d.max(x.sub(y)?.l2_norm());
        }
        norms.push(d);
        u = next;
        if d < opts.tol {
            let clean: Vec<ChaosElement> = u.iter().map(ChaosElement::without_overflow).collect();
            let dropped = sweep.apply(&clean)?.iter().map(|v| v.dropped_mass()).fold(0.0, f64::max);
            let (dropped_mass, residual_bound, certified) = certificate(p.basis().order(), dropped);
            return Ok(SdeSolution {
                times,
                values: u,
                update_norms: norms,
                report,
                dropped_mass,
                residual_bound,
                certified,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_update: norms.last().copied().unwrap_or(f64::NAN),
        ratios: norms.windows(2).map(|w| w[1] / w[0]).collect(),
    })
}
