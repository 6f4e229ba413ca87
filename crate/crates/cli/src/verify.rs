//! Property suites. Each check records the measured value, the tolerance and
//! the comparison, so the JSON report is self-describing.

use std::sync::Arc;
use std::time::Instant;

use anyhow::Result;
use fraclevy::chaos::{fractional_levy_element, Basis, ChaosElement, MultiIndex, TestFunction};
use fraclevy::frac_ops::{kernel_l2_norm_sq, rl_fractional_integral, Side};
use fraclevy::levy::{Atom, LevyModel};
use fraclevy::paths::{empirical_moments, path_at_edges, transform_alpha_to_beta, FlpSimulator, SimulationLayout, TailExtension};
use fraclevy::probe::{probe_set, random_probe};
use fraclevy::rng::{replicate_rng, Rng};
use fraclevy::sde::{holder_noise_check, log_spaced_pairs, picard_solve, picard_solve_with, InitialGuess, PicardOptions, SdeProblem, WickAffineCoefficient};
use fraclevy::skorohod::{fractional_transform_integrand, skorohod_frac, skorohod_pjm, skorohod_via_kernel};
use fraclevy::volterra::{
    constant_terms, resolvent_kernel, resolvent_residual, solve_volterra, Backend, KernelPreset, VolterraProblem,
    VolterraSolution,
};
use fraclevy::{GridFunction, TimeGrid};
use rand::Rng as _;
use serde::Serialize;

use crate::config::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Isometry,
    Operators,
    Wick,
    Skorohod,
    Volterra,
    Sde,
    Hoelder,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Isometry,
        Suite::Operators,
        Suite::Wick,
        Suite::Skorohod,
        Suite::Volterra,
        Suite::Sde,
        Suite::Hoelder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Isometry => "isometry",
            Suite::Operators => "operators",
            Suite::Wick => "wick",
            Suite::Skorohod => "skorohod",
            Suite::Volterra => "volterra",
            Suite::Sde => "sde",
            Suite::Hoelder => "hoelder",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(suite: Suite, name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::Below => value < tolerance,
            Relation::AtLeast => value >= tolerance,
        };
        Self {
            suite: suite.name(),
            name: name.into(),
            value,
            relation,
            tolerance,
            pass,
        }
    }

    /// A check that could not even be computed.
    fn failed(suite: Suite, name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self {
            suite: suite.name(),
            name: format!("{}: {err}", name.into()),
            value: f64::NAN,
            relation: Relation::AtMost,
            tolerance: 0.0,
            pass: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteTiming {
    pub suite: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub timings: Vec<SuiteTiming>,
}

/// `‖I^β_- χ_{[0,t]}‖²`, the variance of `X^β_t` per unit of `m2`. The
/// default is the closed form; tests plug in an independent quadrature.
pub type IsometryReference = dyn Fn(f64, f64) -> f64 + Sync;

pub struct Options<'a> {
    pub tolerances: Tolerances,
    pub seed: u64,
    pub isometry_paths: usize,
    pub isometry_betas: Vec<f64>,
    pub isometry_reference: &'a IsometryReference,
}

impl Default for Options<'_> {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            seed: 2024,
            isometry_paths: 100_000,
            isometry_betas: vec![0.1, 0.25, 0.4],
            isometry_reference: &kernel_l2_norm_sq,
        }
    }
}

pub fn run(suite: Suite, opts: &Options) -> Report {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut checks = Vec::new();
    let mut timings = Vec::new();
    for s in suites {
        let start = Instant::now();
        let mut out = Vec::new();
        let res = match s {
            Suite::Isometry => isometry(opts, &mut out),
            Suite::Operators => operators(opts, &mut out),
            Suite::Wick => wick(opts, &mut out),
            Suite::Skorohod => skorohod(opts, &mut out),
            Suite::Volterra => volterra(opts, &mut out),
            Suite::Sde => sde(opts, &mut out),
            Suite::Hoelder => hoelder(opts, &mut out),
            Suite::All => unreachable!(),
        };
        if let Err(e) = res {
            out.push(Check::failed(s, "suite aborted", e));
        }
        checks.extend(out);
        timings.push(SuiteTiming {
            suite: s.name(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Report {
        passed: checks.iter().all(|c| c.pass),
        checks,
        timings,
    }
}

// Small reference problems ---------------------------------------------------

fn bump(s: f64) -> f64 {
    let x = (s - 0.5) / 0.3;
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

fn two_marks(n_cells: usize, order: usize) -> Result<Arc<Basis>> {
    let g = TimeGrid::new(-1.0, 1.0, n_cells)?;
    let marks = vec![Atom { size: 1.0, mass: 0.75 }, Atom { size: -0.5, mass: 1.5 }];
    Ok(Basis::new(g, marks, order)?)
}

fn unit_mark(t_min: f64, order: usize) -> Result<Arc<Basis>> {
    let g = TimeGrid::new(t_min, 1.0, 8)?;
    Ok(Basis::new(g, vec![Atom { size: 1.0, mass: 1.0 }], order)?)
}

fn random_element(basis: &Arc<Basis>, max_order: usize, terms: usize, rng: &mut Rng) -> Result<ChaosElement> {
    let dim = basis.dim();
    let t: Vec<(MultiIndex, f64)> = (0..terms)
        .map(|_| {
            let ord = rng.random_range(0..=max_order);
            let idx = MultiIndex::from_pairs((0..ord).map(|_| (rng.random_range(0..dim), 1)));
            (idx, rng.random_range(-1.0..1.0))
        })
        .collect();
    Ok(ChaosElement::from_terms(basis, t)?)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// Suites ----------------------------------------------------------------------

fn isometry(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Isometry;
    let source = LevyModel::two_point(2.0, 1.0)?.exact_source()?;
    let m2 = source.second_moment();
    let grid = TimeGrid::new(-1.0, 1.0, 400)?;
    for (i, &beta) in opts.isometry_betas.iter().enumerate() {
        let layout = SimulationLayout::new(grid, Some(TailExtension::default()))?;
        let sim = FlpSimulator::new(source.clone(), beta, layout, Some(vec![1.0]), 0.01)?;
        let paths = sim.simulate(opts.isometry_paths, opts.seed.wrapping_add(i as u64));
        let row = empirical_moments(&paths, &[1.0])?[0];
        let target = m2 * (opts.isometry_reference)(1.0, beta);
        let z = (row.var - target).abs() / row.stderr_var;
        out.push(Check::new(
            s,
            format!("Var(X_1) beta={beta}: |var - reference| / stderr ({} paths)", opts.isometry_paths),
            z,
            Relation::AtMost,
            opts.tolerances.isometry_sigmas,
        ));
    }
    Ok(())
}

fn operators(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Operators;
    let tol = &opts.tolerances;
    let grid = TimeGrid::with_step(-1.0, 1.0, 1e-3)?;
    let f = GridFunction::from_centers(grid, bump);
    let two = rl_fractional_integral(&rl_fractional_integral(&f, 0.2, Side::Minus)?, 0.1, Side::Minus)?;
    let one = rl_fractional_integral(&f, 0.3, Side::Minus)?;
    let e = two.combine(1.0, &one, -1.0)?.l2_norm() / one.l2_norm();
    out.push(Check::new(s, "semigroup I^0.1 I^0.2 vs I^0.3, relative L2, h=1e-3", e, Relation::AtMost, tol.semigroup_rel));

    let grid = TimeGrid::with_step(-1.0, 1.5, 1e-3)?;
    let f = GridFunction::from_centers(grid, bump);
    let g = GridFunction::from_centers(grid, |s| bump(s - 0.4) - 0.5 * bump(s + 0.3));
    let scale = f.l2_norm() * g.l2_norm();
    let mut worst: f64 = 0.0;
    for beta in [0.1, 0.25, 0.4] {
        let lhs = f.dot(&rl_fractional_integral(&g, beta, Side::Plus)?)?;
        let rhs = g.dot(&rl_fractional_integral(&f, beta, Side::Minus)?)?;
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    out.push(Check::new(s, "integration by parts, scaled residual", worst, Relation::AtMost, tol.parts_rel));
    Ok(())
}

fn wick(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Wick;
    let b = two_marks(8, 6)?;
    let mut rng = replicate_rng(opts.seed, 1);
    let mut worst: f64 = 0.0;
    let mut overflowed = 0;
    for i in 0..100 {
        let f = random_element(&b, 3, 12, &mut rng)?;
        let g = random_element(&b, 3, 12, &mut rng)?;
        let eta = random_probe(&b, 0.6, opts.seed, i)?;
        let fg = f.wick(&g)?;
        overflowed += usize::from(fg.overflow());
        worst = worst.max((fg.s_transform(&eta)? - f.s_transform(&eta)? * g.s_transform(&eta)?).abs());
    }
    out.push(Check::new(s, "|S(F◇G) - SF·SG| over 100 triples, N=6, |α|<=3", worst, Relation::AtMost, opts.tolerances.wick_s));
    out.push(Check::new(s, "overflowing products among the 100", overflowed as f64, Relation::AtMost, 0.0));
    Ok(())
}

fn skorohod(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Skorohod;
    let tol = &opts.tolerances;
    let b = two_marks(8, 4)?;
    let mut rng = replicate_rng(opts.seed, 2);
    let g: Vec<ChaosElement> = (0..b.dim()).map(|_| random_element(&b, 2, 5, &mut rng)).collect::<Result<_>>()?;
    let d = skorohod_pjm(&g)?;
    let mut worst: f64 = 0.0;
    for eta in probe_set(&b, 10, 0.7, opts.seed)? {
        let v = eta.values();
        let rhs: f64 = (0..b.dim()).map(|k| Ok(g[k].s_transform(&eta)? * v[k] * b.weight(k))).sum::<Result<f64>>()?;
        worst = worst.max((d.s_transform(&eta)? - rhs).abs());
    }
    out.push(Check::new(s, "S(δ(G))(η) = ∫ SG·η, 10 probes", worst, Relation::AtMost, tol.skorohod_exact));

    let b = two_marks(8, 3)?;
    let f: Vec<ChaosElement> = (0..8).map(|_| random_element(&b, 2, 6, &mut rng)).collect::<Result<_>>()?;
    let probes = probe_set(&b, 10, 0.7, opts.seed + 1)?;
    let mut worst: f64 = 0.0;
    for beta in [0.1, 0.25, 0.4] {
        let a = skorohod_frac(&f, beta, None)?;
        let k = skorohod_via_kernel(&f, beta)?;
        for eta in &probes {
            worst = worst.max((a.s_transform(eta)? - k.s_transform(eta)?).abs());
        }
    }
    out.push(Check::new(s, "δ^β(F) = ∫ F ◇ Ẋ^β vs kernel route, 10 probes", worst, Relation::AtMost, tol.skorohod_grid));

    let b = two_marks(8, 5)?;
    let y = random_element(&b, 2, 6, &mut rng)?;
    let f: Vec<ChaosElement> = (0..8).map(|_| random_element(&b, 2, 4, &mut rng)).collect::<Result<_>>()?;
    let yf: Vec<ChaosElement> = f.iter().map(|e| y.wick(e)).collect::<Result<_, _>>()?;
    let lhs = y.wick(&skorohod_frac(&f, 0.25, None)?)?;
    let rhs = skorohod_frac(&yf, 0.25, None)?;
    let mut worst: f64 = 0.0;
    for eta in probe_set(&b, 10, 0.7, opts.seed + 2)? {
        worst = worst.max((lhs.s_transform(&eta)? - rhs.s_transform(&eta)?).abs());
    }
    out.push(Check::new(s, "Y ◇ δ^β(F) = δ^β(Y ◇ F), 10 probes", worst, Relation::AtMost, tol.commutation));

    transform(opts, out)
}

// α = 0.1 → β = 0.3 at h = 1e-3: pathwise on shared increments, and on
// S-transforms of the integrals of a chaos integrand.
fn transform(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Skorohod;
    let tol = &opts.tolerances;
    let (alpha, beta) = (0.1, 0.3);
    let source = LevyModel::two_point(2.0, 1.0)?.exact_source()?;
    let grid = TimeGrid::with_step(-1.0, 1.0, 1e-3)?;
    let layout = SimulationLayout::new(grid, Some(TailExtension::default()))?;
    let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
    let sim = FlpSimulator::new(source, beta, layout.clone(), Some(times.clone()), 0.01)?;
    let mut worst: f64 = 0.0;
    for path in 0..3 {
        let dx = sim.increments(opts.seed, path);
        let direct = sim.evaluate(&dx);
        let via = transform_alpha_to_beta(&layout, &path_at_edges(&layout, &dx, alpha)?, alpha, beta, &times)?;
        worst = worst.max(max_gap(&direct, &via) / sup(&direct));
    }
    out.push(Check::new(s, "transform: X^β from X^α pathwise, relative sup, 3 paths", worst, Relation::AtMost, tol.transform_path_rel));

    let b = {
        let g = TimeGrid::new(-1.0, 1.0, 2000)?;
        Basis::new(g, vec![Atom { size: 1.0, mass: 0.5 }, Atom { size: -1.0, mass: 0.5 }], 2)?
    };
    let g = *b.grid();
    let mut rng = replicate_rng(opts.seed, 3);
    let picks: Vec<(usize, f64)> = (0..3).map(|_| (rng.random_range(0..b.dim()), rng.random_range(-1.0..1.0))).collect();
    let f: Vec<ChaosElement> = (0..g.n_cells())
        .map(|i| {
            let v = bump(g.center(i));
            let terms = std::iter::once((MultiIndex::zero(), v)).chain(picks.iter().map(|&(k, c)| (MultiIndex::unit(k), c * v)));
            ChaosElement::from_terms(&b, terms)
        })
        .collect::<Result<_, _>>()?;
    let direct = skorohod_frac(&f, beta, None)?;
    let via = skorohod_frac(&fractional_transform_integrand(&f, alpha, beta)?, alpha, None)?;
    let probes = probe_set(&b, 10, 0.5, opts.seed + 3)?;
    let sd: Vec<f64> = probes.iter().map(|e| direct.s_transform(e)).collect::<Result<_, _>>()?;
    let sv: Vec<f64> = probes.iter().map(|e| via.s_transform(e)).collect::<Result<_, _>>()?;
    out.push(Check::new(
        s,
        "transform: δ^β(F) vs δ^α(I^{β-α}_- F), relative sup over 10 probes",
        max_gap(&sd, &sv) / sup(&sd),
        Relation::AtMost,
        tol.transform_s,
    ));
    Ok(())
}

fn s_values(sol: &VolterraSolution, probes: &[TestFunction]) -> Result<Vec<f64>> {
    Ok(sol.s_table(probes)?.into_iter().map(|r| r.2).collect())
}

fn volterra(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Volterra;
    let tol = &opts.tolerances;
    let b = unit_mark(0.0, 3)?;
    let one = ChaosElement::constant(&b, 1.0);
    let p = VolterraProblem::with_constant_forcing(&one, 0.25, 1.0, 1000, KernelPreset::Constant { value: 1.0 }, KernelPreset::Zero)?;
    let sol = solve_volterra(&p, &Backend::ChaosPicard, 1e-13, 200)?;
    let u1 = constant_terms(&sol.as_chaos().expect("chaos backend").values)[1000];
    out.push(Check::new(s, "b=1 constant kernel: |U(1) - e|", (u1 - std::f64::consts::E).abs(), Relation::AtMost, tol.volterra_exp));

    let b = unit_mark(0.0, 6)?;
    let one = ChaosElement::constant(&b, 1.0);
    let mut rng = replicate_rng(opts.seed, 4);
    let c: Vec<f64> = (0..b.dim()).map(|_| rng.random_range(-0.2..0.2)).collect();
    let a = ChaosElement::first_chaos(&b, &c)?.add(&one)?;
    let problems = [
        VolterraProblem::with_constant_forcing(&one, 0.25, 1.0, 32, KernelPreset::Zero, KernelPreset::Constant { value: 0.5 })?,
        VolterraProblem::new(
            &b,
            0.35,
            1.0,
            32,
            (0..=32).map(|n| a.scale(1.0 + 0.5 * (n as f64 / 32.0))).collect(),
            KernelPreset::Exponential { scale: rng.random_range(-1.0..1.0), rate: -0.5 },
            KernelPreset::Polynomial { coeffs: vec![rng.random_range(-0.4..0.4), 0.2] },
        )?,
    ];
    let probes = probe_set(&b, 10, 0.5, opts.seed + 4)?;
    for (i, p) in problems.iter().enumerate() {
        let coll = s_values(&solve_volterra(p, &Backend::SCollocation(probes.clone()), 1e-13, 200)?, &probes)?;
        for backend in [Backend::ChaosPicard, Backend::ChaosResolvent] {
            let sol = solve_volterra(p, &backend, 1e-13, 200)?;
            let gap = max_gap(&s_values(&sol, &probes)?, &coll);
            out.push(Check::new(
                s,
                format!("problem {i}: {} vs s_collocation, 10 probes", backend.name()),
                gap,
                Relation::AtMost,
                tol.volterra_backends,
            ));
        }
    }

    let b = unit_mark(0.0, 4)?;
    let one = ChaosElement::constant(&b, 1.0);
    let p = VolterraProblem::with_constant_forcing(
        &one,
        0.25,
        1.0,
        16,
        KernelPreset::Exponential { scale: 0.5, rate: -1.0 },
        KernelPreset::Constant { value: 0.3 },
    )?;
    let k = p.kernel_triangle()?;
    let h = resolvent_kernel(&k, 30)?;
    let r = resolvent_residual(&k, &h.kernel)?;
    let probes = probe_set(&b, 10, 0.5, opts.seed + 5)?;
    let mut worst: f64 = 0.0;
    for i in 0..=16 {
        for j in 0..=i {
            for eta in &probes {
                worst = worst.max(r.get(i, j).s_transform(eta)?.abs());
            }
        }
    }
    out.push(Check::new(s, "resolvent identity residual, 10 probes", worst, Relation::AtMost, tol.resolvent_residual));
    Ok(())
}

fn wick_linear(b: &Arc<Basis>, c: f64, n_steps: usize) -> Result<SdeProblem> {
    let one = ChaosElement::constant(b, 1.0);
    Ok(SdeProblem::new(one, WickAffineCoefficient::zero(b), WickAffineCoefficient::linear(b, c), 0.25, 1.0, n_steps)?)
}

fn sde(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Sde;
    let tol = &opts.tolerances;
    let b = unit_mark(-1.0, 6)?;
    let probes = probe_set(&b, 10, 0.5, opts.seed + 6)?;
    let c = 0.8;
    let sol = picard_solve(&wick_linear(&b, c, 256)?, 1e-12, 100)?;
    let mut worst: f64 = 0.0;
    for eta in &probes {
        let su = sol.s_transform(eta)?;
        for (k, &t) in sol.times.iter().enumerate() {
            let x = fractional_levy_element(0.25, t, &b)?.s_transform(eta)?;
            worst = worst.max((su[k] - (c * x).exp()).abs());
        }
    }
    out.push(Check::new(s, "dU = 0.8 U ◇ dX^β: |SU - exp(0.8 SX^β)|, 10 probes", worst, Relation::AtMost, tol.sde_wick_exp));
    let ratios = sol.decay_ratios();
    let late = ratios.get(2..).unwrap_or(&[]);
    let r_max = if late.is_empty() { f64::INFINITY } else { late.iter().cloned().fold(0.0, f64::max) };
    out.push(Check::new(s, "largest Picard decay ratio after iteration 3", r_max, Relation::Below, 1.0));

    let b2 = unit_mark(-1.0, 2)?;
    let one = ChaosElement::constant(&b2, 1.0);
    let p = SdeProblem::new(one, WickAffineCoefficient::linear(&b2, 1.0), WickAffineCoefficient::zero(&b2), 0.25, 1.0, 1000)?;
    let sol = picard_solve(&p, 1e-12, 200)?;
    let gap = sol.times.iter().zip(&sol.values).fold(0.0f64, |m, (&t, u)| m.max((u.constant_term() - t.exp()).abs()));
    out.push(Check::new(s, "deterministic drift b1=1: sup |U(t) - e^t|", gap, Relation::AtMost, tol.sde_exp));

    // Constant parts keep the zero start from collapsing onto U0 after one sweep.
    let c = |x: f64| ChaosElement::constant(&b, x);
    let p = SdeProblem::new(
        c(1.0),
        WickAffineCoefficient::new(c(0.3), c(0.5))?,
        WickAffineCoefficient::new(c(0.2), c(0.8))?,
        0.25,
        1.0,
        64,
    )?;
    let from_u0 = picard_solve(&p, 1e-12, 100)?;
    let from_zero = picard_solve_with(&p, &PicardOptions { initial: InitialGuess::Zero, ..PicardOptions::default() })?;
    let mut worst: f64 = 0.0;
    for eta in &probes {
        worst = worst.max(max_gap(&from_u0.s_transform(eta)?, &from_zero.s_transform(eta)?));
    }
    out.push(Check::new(s, "uniqueness: Picard from U0 vs from 0", worst, Relation::AtMost, tol.sde_uniqueness));

    let one = ChaosElement::constant(&b, 1.0);
    let p = SdeProblem::new(one, WickAffineCoefficient::linear(&b, 0.5), WickAffineCoefficient::linear(&b, 0.6), 0.25, 1.0, 64)?;
    let sol = picard_solve(&p, 1e-12, 100)?;
    let v = solve_volterra(&p.to_volterra()?, &Backend::SCollocation(probes.clone()), 1e-12, 100)?;
    let per_probe: Vec<Vec<f64>> = probes.iter().map(|e| sol.s_transform(e)).collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    // rows are time-major, one per probe
    for (i, (_, k, val)) in v.s_table(&probes)?.into_iter().enumerate() {
        worst = worst.max((per_probe[k][i / probes.len()] - val).abs());
    }
    out.push(Check::new(s, "SDE vs its Volterra form (s_collocation)", worst, Relation::AtMost, tol.sde_consistency));
    Ok(())
}

fn hoelder(opts: &Options, out: &mut Vec<Check>) -> Result<()> {
    let s = Suite::Hoelder;
    let pairs = log_spaced_pairs(0.5, 1e-3, 1e-1, 8);
    let mut slopes = Vec::new();
    for beta in [0.1, 0.25, 0.4] {
        let fit = holder_noise_check(beta, 2.0, &pairs, 128)?;
        out.push(Check::new(
            s,
            format!("log-log slope of ‖Ẋ_t - Ẋ_s‖² at beta={beta}, p=2 (tolerance {}·2β)", opts.tolerances.holder_factor),
            fit.slope,
            Relation::AtLeast,
            2.0 * beta * opts.tolerances.holder_factor,
        ));
        slopes.push(fit.slope);
    }
    let up = slopes.windows(2).all(|w| w[1] > w[0]);
    let down = slopes.windows(2).all(|w| w[1] < w[0]);
    out.push(Check::new(s, "slope is monotone in beta (1 = yes)", f64::from(u8::from(up || down)), Relation::AtLeast, 1.0));
    Ok(())
}
