//! Executes one experiment. Everything is computed in memory first, so a
//! numerical failure leaves no partial run directory behind.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fraclevy::chaos::{text::to_text, Basis, ChaosElement, TestFunction};
use fraclevy::frac_ops::{rl_fractional_integral, Side};
use fraclevy::levy::IncrementSampler;
use fraclevy::paths::{empirical_moments, sample_moments, FlpSimulator, MomentRow, SimulationLayout, TailExtension, TruncationReport};
use fraclevy::probe::probe_set;
use fraclevy::rng::replicate_rng;
use fraclevy::sde::{picard_solve_with, validate_coefficients, CoefficientReport, InitialGuess, PicardOptions, SdeProblem, WickAffineCoefficient};
use fraclevy::volterra::{solve_volterra, Backend, VolterraProblem, VolterraSolution};
use fraclevy::GridFunction;
use serde::{Deserialize, Serialize};

use crate::config::{BackendName, Config, Experiment};
use crate::manifest::{sha256_hex, FileEntry, Manifest, Versions, MANIFEST};
use crate::table::{csv_bytes, num};

pub const SUMMARY: &str = "summary.json";
pub const CONFIG_COPY: &str = "config.json";

/// Everything `emit-plotdata` needs beyond the CSV files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub kind: String,
    pub beta: f64,
    /// Second moment of the jump measure actually simulated or used for marks.
    pub m2: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiener: Option<WienerSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub n_paths: usize,
    pub paths_written: usize,
    pub truncation_horizon: f64,
    pub truncation_relative_deficit: f64,
    /// Per moment time, including the standard error of the variance.
    pub moments: Vec<Moment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Moment {
    pub t: f64,
    pub mean: f64,
    pub var: f64,
    pub stderr_mean: f64,
    pub stderr_var: f64,
}

impl From<MomentRow> for Moment {
    fn from(r: MomentRow) -> Self {
        Self {
            t: r.t,
            mean: r.mean,
            var: r.var,
            stderr_mean: r.stderr_mean,
            stderr_var: r.stderr_var,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WienerSummary {
    pub n_paths: usize,
    pub sample: Moment,
    /// `m2 · h Σ (I^β_- g)_i²`: the exact variance of the grid estimator.
    pub grid_var: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub backend: String,
    pub basis_dim: usize,
    pub order: usize,
    pub n_steps: usize,
    pub n_probes: usize,
    /// Picard updates or resolvent term sizes, one per iteration.
    pub update_norms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientReport>,
    /// The same constants at other gauge exponents, since no admissible `p`
    /// is known in advance.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gauge_sensitivity: Vec<CoefficientReport>,
}

/// Files of one run, in write order.
#[derive(Default)]
struct Artifacts(Vec<(String, Vec<u8>)>);

impl Artifacts {
    fn add(&mut self, name: impl Into<String>, body: Vec<u8>) {
        self.0.push((name.into(), body));
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

pub fn config_hash(cfg: &Config) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

pub fn run_dir(cfg: &Config, out_root: &Path) -> PathBuf {
    match &cfg.output.dir {
        Some(d) => out_root.join(d),
        None => out_root.join(format!("{}-{}", cfg.kind(), &config_hash(cfg)[..12])),
    }
}

pub fn execute(cfg: &Config, out_root: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let mut art = Artifacts::default();
    let summary = match &cfg.experiment {
        Experiment::Simulate { .. } => simulate(cfg, &mut art)?,
        Experiment::Wiener { .. } => wiener(cfg, &mut art)?,
        Experiment::Volterra { .. } => volterra(cfg, &mut art)?,
        Experiment::Sde { .. } => sde(cfg, &mut art)?,
    };
    art.add(SUMMARY, json(&summary)?);
    art.add(CONFIG_COPY, json(cfg)?);

    let dir = run_dir(cfg, out_root);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::with_capacity(art.0.len());
    for (name, body) in &art.0 {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        files.push(FileEntry::of(name, body));
    }
    let manifest = Manifest {
        kind: cfg.kind().to_owned(),
        seed: cfg.seed(),
        config_sha256: config_hash(cfg),
        versions: Versions::default(),
        files,
    };
    std::fs::write(dir.join(MANIFEST), json(&manifest)?)?;
    Ok(RunOutput { dir, manifest })
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut body = serde_json::to_vec_pretty(v)?;
    body.push(b'\n');
    Ok(body)
}

fn simulate(cfg: &Config, art: &mut Artifacts) -> Result<Summary> {
    let Experiment::Simulate { beta, n_paths, seed, ref moment_times, paths_written } = cfg.experiment else {
        unreachable!()
    };
    let grid = cfg.time_grid()?;
    let tail = (grid.t_min() < 0.0).then(TailExtension::default);
    let layout = SimulationLayout::new(grid, tail)?;
    let mut times: Vec<f64> = grid.edges().filter(|&e| e >= -1e-12 * grid.step()).map(|e| e.max(0.0)).collect();
    if let Some(extra) = moment_times {
        times.extend(extra.iter().copied());
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * grid.step());
    }
    let source = cfg.jump_source()?;
    let sim = FlpSimulator::new(source.clone(), beta, layout, Some(times.clone()), cfg.solver.truncation_budget)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let paths = sim.simulate(n_paths, seed);
    let TruncationReport { horizon, relative_deficit, .. } = sim.truncation();

    let written = paths_written.unwrap_or(n_paths.min(1000)).min(n_paths);
    let rows = (0..written).flat_map(|p| {
        let path = paths.path(p);
        paths.times.iter().zip(path).map(move |(&t, &v)| vec![num(t), p.to_string(), num(v)])
    });
    art.add("paths.csv", csv_bytes(&["t", "path_id", "value"], rows)?);

    let mt: Vec<f64> = match moment_times {
        Some(m) => m
            .iter()
            .map(|&t| *paths.times.iter().min_by(|a, b| (*a - t).abs().total_cmp(&(*b - t).abs())).expect("times"))
            .collect(),
        None => paths.times.clone(),
    };
    let moments = empirical_moments(&paths, &mt)?;
    let rows = moments
        .iter()
        .map(|r| vec![num(r.t), num(r.mean), num(r.var), num(r.stderr_mean)]);
    art.add("moments.csv", csv_bytes(&["t", "mean", "var", "stderr"], rows)?);

    Ok(Summary {
        kind: cfg.kind().into(),
        beta,
        m2: source.second_moment(),
        seed,
        simulate: Some(SimulateSummary {
            n_paths,
            paths_written: written,
            truncation_horizon: horizon,
            truncation_relative_deficit: relative_deficit,
            moments: moments.into_iter().map(Moment::from).collect(),
        }),
        wiener: None,
        solve: None,
    })
}

fn wiener(cfg: &Config, art: &mut Artifacts) -> Result<Summary> {
    let Experiment::Wiener { beta, n_paths, seed, ref integrand } = cfg.experiment else {
        unreachable!()
    };
    let grid = cfg.time_grid()?;
    let g = match *integrand {
        crate::config::Integrand::Indicator { a, b } => GridFunction::indicator(grid, a, b),
        _ => GridFunction::from_centers(grid, |s| integrand.eval(s)),
    };
    // I^β_- g once; each draw is then a dot product with the increments.
    let ig = rl_fractional_integral(&g, beta, Side::Minus)?;
    let source = cfg.jump_source()?;
    let sampler = IncrementSampler::new(source.clone(), &vec![grid.step(); grid.n_cells()])?;
    let mut buf = vec![0.0; grid.n_cells()];
    let draws: Vec<f64> = (0..n_paths as u64)
        .map(|r| {
            sampler.sample_into(&mut replicate_rng(seed, r), &mut buf);
            ig.values().iter().zip(&buf).map(|(a, b)| a * b).sum()
        })
        .collect();
    let rows = draws.iter().enumerate().map(|(i, &v)| vec![i.to_string(), num(v)]);
    art.add("samples.csv", csv_bytes(&["path_id", "value"], rows)?);
    let m2 = source.second_moment();
    let sample = sample_moments(0.0, &draws)?;
    let grid_var = m2 * grid.step() * ig.values().iter().map(|x| x * x).sum::<f64>();
    Ok(Summary {
        kind: cfg.kind().into(),
        beta,
        m2,
        seed,
        simulate: None,
        wiener: Some(WienerSummary {
            n_paths,
            sample: sample.into(),
            grid_var,
        }),
        solve: None,
    })
}

fn probes_csv(probes: &[TestFunction]) -> Result<Vec<u8>> {
    let rows = probes
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.coeffs().iter().enumerate().map(move |(k, &c)| vec![i.to_string(), k.to_string(), num(c)]).collect::<Vec<_>>());
    csv_bytes(&["eta_id", "k", "coeff"], rows)
}

fn s_table_csv(rows: &[(f64, usize, f64)]) -> Result<Vec<u8>> {
    csv_bytes(&["t", "eta_id", "value"], rows.iter().map(|&(t, k, v)| vec![num(t), k.to_string(), num(v)]))
}

fn dump_chaos(art: &mut Artifacts, values: &[ChaosElement], every: usize) {
    if every == 0 {
        return;
    }
    let last = values.len() - 1;
    for (n, u) in values.iter().enumerate() {
        if n % every == 0 || n == last {
            art.add(format!("chaos/u_{n:05}.txt"), to_text(u).into_bytes());
        }
    }
}

fn volterra(cfg: &Config, art: &mut Artifacts) -> Result<Summary> {
    let Experiment::Volterra { beta, horizon, n_steps, order, forcing, ref b, ref sigma, n_probes, seed } = cfg.experiment
    else {
        unreachable!()
    };
    let basis = Basis::new(cfg.time_grid()?, cfg.atoms()?, order)?;
    let a = ChaosElement::constant(&basis, forcing);
    let problem = VolterraProblem::with_constant_forcing(&a, beta, horizon, n_steps, b.clone(), sigma.clone())?;
    let probes = probe_set(&basis, n_probes, cfg.solver.probe_gauge, seed)?;
    let backend = match cfg.solver.backend {
        BackendName::ChaosPicard => Backend::ChaosPicard,
        BackendName::ChaosResolvent => Backend::ChaosResolvent,
        BackendName::SCollocation => Backend::SCollocation(probes.clone()),
    };
    let sol = solve_volterra(&problem, &backend, cfg.solver.tol, cfg.solver.max_iter)?;
    art.add("s_table.csv", s_table_csv(&sol.s_table(&probes)?)?);
    art.add("probes.csv", probes_csv(&probes)?);
    let mut solve = SolveSummary {
        backend: backend.name().into(),
        basis_dim: basis.dim(),
        order,
        n_steps,
        n_probes,
        update_norms: Vec::new(),
        dropped_mass: None,
        residual_bound: None,
        certified: None,
        coefficients: None,
        gauge_sensitivity: Vec::new(),
    };
    if let VolterraSolution::Chaos(c) = &sol {
        dump_chaos(art, &c.values, cfg.output.dump_every);
        solve.update_norms = c.update_norms.clone();
        solve.dropped_mass = Some(c.dropped_mass);
        solve.residual_bound = Some(c.residual_bound);
        solve.certified = Some(c.certified);
    }
    Ok(Summary {
        kind: cfg.kind().into(),
        beta,
        m2: basis.mark_second_moment(),
        seed,
        simulate: None,
        wiener: None,
        solve: Some(solve),
    })
}

fn sde(cfg: &Config, art: &mut Artifacts) -> Result<Summary> {
    let Experiment::Sde { beta, horizon, n_steps, order, u0, b, sigma, n_probes, seed } = cfg.experiment else {
        unreachable!()
    };
    let basis = Basis::new(cfg.time_grid()?, cfg.atoms()?, order)?;
    let c = |x: f64| ChaosElement::constant(&basis, x);
    let drift = WickAffineCoefficient::new(c(b.c0), c(b.c1))?;
    let noise = WickAffineCoefficient::new(c(sigma.c0), c(sigma.c1))?;
    let problem = SdeProblem::new(c(u0), drift, noise, beta, horizon, n_steps)?;
    let opts = PicardOptions {
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        initial: InitialGuess::U0,
        gauge_p: cfg.solver.gauge_p,
    };
    let sol = picard_solve_with(&problem, &opts)?;
    let mut ps = vec![1.5, 2.0, 3.0, 4.0, cfg.solver.gauge_p];
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let gauge_sensitivity = ps
        .into_iter()
        .map(|p| validate_coefficients(&problem, p))
        .collect::<Result<Vec<_>, _>>()?;
    let probes = probe_set(&basis, n_probes, cfg.solver.probe_gauge, seed)?;
    let mut rows = Vec::with_capacity(sol.times.len() * probes.len());
    let per_probe: Vec<Vec<f64>> = probes.iter().map(|p| sol.s_transform(p)).collect::<Result<_, _>>()?;
    for (n, &t) in sol.times.iter().enumerate() {
        for (k, v) in per_probe.iter().enumerate() {
            rows.push((t, k, v[n]));
        }
    }
    art.add("s_table.csv", s_table_csv(&rows)?);
    art.add("probes.csv", probes_csv(&probes)?);
    dump_chaos(art, &sol.values, cfg.output.dump_every);
    Ok(Summary {
        kind: cfg.kind().into(),
        beta,
        m2: basis.mark_second_moment(),
        seed,
        simulate: None,
        wiener: None,
        solve: Some(SolveSummary {
            backend: "picard".into(),
            basis_dim: basis.dim(),
            order,
            n_steps,
            n_probes,
            update_norms: sol.update_norms.clone(),
            dropped_mass: Some(sol.dropped_mass),
            residual_bound: Some(sol.residual_bound),
            certified: Some(sol.certified),
            coefficients: Some(sol.report.clone()),
            gauge_sensitivity,
        }),
    })
}
