//! The experiment file: one JSON document with the blocks `model`, `grid`,
//! `experiment`, `solver` and `output`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fraclevy::levy::{discretize_measure, Atom, JumpSource, LevyModel};
use fraclevy::volterra::KernelPreset;
use fraclevy::TimeGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub experiment: Experiment,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoPoint {
        rate: f64,
        jump: f64,
    },
    /// Sampled exactly; the chaos basis uses its discretized marks.
    GaussianCompound {
        rate: f64,
        jump_sd: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_atoms")]
        n_atoms_per_side: usize,
    },
    /// Symmetric `C e^{-M|x|} / |x|^{1+Y}`, cut at `epsilon` and replaced by
    /// atoms for sampling and for the chaos basis.
    TemperedStable {
        scale: f64,
        tempering: f64,
        index: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_atoms")]
        n_atoms_per_side: usize,
        #[serde(default = "yes")]
        compensate: bool,
    },
}

fn default_epsilon() -> f64 {
    0.05
}
fn default_atoms() -> usize {
    8
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Paths of `X^β` at every grid edge `>= 0`.
    Simulate {
        beta: f64,
        n_paths: usize,
        seed: u64,
        /// Times for `moments.csv`; defaults to every output time.
        #[serde(default)]
        moment_times: Option<Vec<f64>>,
        /// Paths written to `paths.csv` (all of them by default).
        #[serde(default)]
        paths_written: Option<usize>,
    },
    /// Monte-Carlo draws of `∫ g δX^β` for a deterministic integrand.
    Wiener {
        beta: f64,
        n_paths: usize,
        seed: u64,
        integrand: Integrand,
    },
    Volterra {
        beta: f64,
        horizon: f64,
        n_steps: usize,
        order: usize,
        /// Constant deterministic forcing `a(t) = forcing`.
        forcing: f64,
        b: KernelPreset,
        sigma: KernelPreset,
        #[serde(default = "default_probes")]
        n_probes: usize,
        seed: u64,
    },
    Sde {
        beta: f64,
        horizon: f64,
        n_steps: usize,
        order: usize,
        u0: f64,
        b: AffineSpec,
        sigma: AffineSpec,
        #[serde(default = "default_probes")]
        n_probes: usize,
        seed: u64,
    },
}

fn default_probes() -> usize {
    10
}

/// `F(U) = c0 + c1 ◇ U` with deterministic `c0`, `c1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Integrand {
    Indicator { a: f64, b: f64 },
    /// `exp(-1/(1-x²))` with `x = (s - center)/half_width`.
    Bump { center: f64, half_width: f64 },
}

impl Integrand {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Integrand::Indicator { a, b } => {
                if s >= a && s < b {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::Bump { center, half_width } => {
                let x = (s - center) / half_width;
                if x.abs() < 1.0 {
                    (-1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendName {
    ChaosPicard,
    ChaosResolvent,
    SCollocation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub backend: BackendName,
    pub tol: f64,
    pub max_iter: usize,
    pub gauge_p: f64,
    /// Gauge of the probe test functions, in `(0, 1)`.
    pub probe_gauge: f64,
    /// Largest relative variance deficit from the truncated past.
    pub truncation_budget: f64,
    /// Tolerance overrides for `verify`.
    pub tolerances: Tolerances,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            backend: BackendName::ChaosPicard,
            tol: 1e-12,
            max_iter: 200,
            gauge_p: 2.0,
            probe_gauge: 0.5,
            truncation_budget: 0.01,
            tolerances: Tolerances::default(),
        }
    }
}

/// Acceptance tolerances; the defaults are the documented targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub isometry_sigmas: f64,
    pub semigroup_rel: f64,
    pub parts_rel: f64,
    pub wick_s: f64,
    pub skorohod_exact: f64,
    pub skorohod_grid: f64,
    pub transform_path_rel: f64,
    pub transform_s: f64,
    pub commutation: f64,
    pub volterra_exp: f64,
    pub volterra_backends: f64,
    pub resolvent_residual: f64,
    pub sde_wick_exp: f64,
    pub sde_exp: f64,
    pub sde_uniqueness: f64,
    pub sde_consistency: f64,
    pub holder_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            isometry_sigmas: 3.0,
            semigroup_rel: 1e-2,
            parts_rel: 1e-6,
            wick_s: 1e-10,
            skorohod_exact: 1e-10,
            skorohod_grid: 1e-6,
            transform_path_rel: 5e-2,
            transform_s: 5e-2,
            commutation: 1e-8,
            volterra_exp: 1e-4,
            volterra_backends: 1e-6,
            resolvent_residual: 1e-6,
            sde_wick_exp: 1e-6,
            sde_exp: 1e-4,
            sde_uniqueness: 1e-8,
            sde_consistency: 1e-6,
            holder_factor: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Run directory, relative to the output root.
    pub dir: Option<PathBuf>,
    /// Sparse chaos dumps of the solution at every `dump_every`-th mesh time
    /// (0 disables them).
    pub dump_every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            dump_every: 8,
        }
    }
}

fn field(name: &str, reason: impl std::fmt::Display) -> anyhow::Error {
    anyhow::anyhow!("config field `{name}`: {reason}")
}

fn beta_ok(name: &str, beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 0.5 {
        Ok(())
    } else {
        Err(field(name, format!("{beta} is outside the admissible range (0, 1/2)")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| anyhow::anyhow!("config does not parse: {e}"))?;
        c.validate()?;
        Ok(c)
    }

    pub fn seed(&self) -> u64 {
        match self.experiment {
            Experiment::Simulate { seed, .. }
            | Experiment::Wiener { seed, .. }
            | Experiment::Volterra { seed, .. }
            | Experiment::Sde { seed, .. } => seed,
        }
    }

    pub fn set_seed(&mut self, new: u64) {
        match &mut self.experiment {
            Experiment::Simulate { seed, .. }
            | Experiment::Wiener { seed, .. }
            | Experiment::Volterra { seed, .. }
            | Experiment::Sde { seed, .. } => *seed = new,
        }
    }

    pub fn beta(&self) -> f64 {
        match self.experiment {
            Experiment::Simulate { beta, .. }
            | Experiment::Wiener { beta, .. }
            | Experiment::Volterra { beta, .. }
            | Experiment::Sde { beta, .. } => beta,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.experiment {
            Experiment::Simulate { .. } => "simulate",
            Experiment::Wiener { .. } => "wiener",
            Experiment::Volterra { .. } => "volterra",
            Experiment::Sde { .. } => "sde",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.t_min.is_finite() && g.t_max.is_finite() && g.t_min < g.t_max) {
            return Err(field("grid.t_min", format!("need t_min < t_max, got [{}, {}]", g.t_min, g.t_max)));
        }
        if g.n_cells == 0 {
            return Err(field("grid.n_cells", "must be at least 1"));
        }
        beta_ok("experiment.beta", self.beta())?;
        match &self.experiment {
            Experiment::Simulate { n_paths, moment_times, .. } => {
                if *n_paths < 2 {
                    return Err(field("experiment.n_paths", "need at least 2 paths"));
                }
                if g.t_max <= 0.0 {
                    return Err(field("grid.t_max", "simulation needs t_max > 0"));
                }
                for &t in moment_times.iter().flatten() {
                    if !(0.0..=g.t_max).contains(&t) {
                        return Err(field("experiment.moment_times", format!("{t} is outside [0, t_max]")));
                    }
                }
            }
            Experiment::Wiener { n_paths, .. } => {
                if *n_paths < 2 {
                    return Err(field("experiment.n_paths", "need at least 2 paths"));
                }
            }
            Experiment::Volterra { horizon, n_steps, n_probes, .. } | Experiment::Sde { horizon, n_steps, n_probes, .. } => {
                positive("experiment.horizon", *horizon)?;
                if *n_steps == 0 {
                    return Err(field("experiment.n_steps", "must be at least 1"));
                }
                if *n_probes == 0 {
                    return Err(field("experiment.n_probes", "must be at least 1"));
                }
                if g.t_min > 0.0 || g.t_max < *horizon {
                    return Err(field("grid", format!("[{}, {}] must contain [0, horizon = {horizon}]", g.t_min, g.t_max)));
                }
            }
        }
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        if s.max_iter == 0 {
            return Err(field("solver.max_iter", "must be at least 1"));
        }
        if !(s.gauge_p > 1.0) {
            return Err(field("solver.gauge_p", format!("need p > 1, got {}", s.gauge_p)));
        }
        if !(s.probe_gauge > 0.0 && s.probe_gauge < 1.0) {
            return Err(field("solver.probe_gauge", format!("must lie in (0, 1), got {}", s.probe_gauge)));
        }
        positive("solver.truncation_budget", s.truncation_budget)?;
        self.levy_model()?;
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.t_min, self.grid.t_max, self.grid.n_cells).map_err(|e| field("grid", e))
    }

    pub fn levy_model(&self) -> Result<LevyModel> {
        let m = match self.model {
            ModelSpec::TwoPoint { rate, jump } => LevyModel::two_point(rate, jump),
            ModelSpec::GaussianCompound { rate, jump_sd, .. } => LevyModel::gaussian_compound(rate, jump_sd),
            ModelSpec::TemperedStable { scale, tempering, index, .. } => {
                LevyModel::tempered_stable(scale, tempering, index)
            }
        };
        m.map_err(|e| field("model", e))
    }

    /// Atoms used for sampling and as the marks of the chaos basis.
    pub fn atoms(&self) -> Result<Vec<Atom>> {
        let model = self.levy_model()?;
        let (eps, n, comp) = match self.model {
            ModelSpec::TemperedStable { epsilon, n_atoms_per_side, compensate, .. } => (epsilon, n_atoms_per_side, compensate),
            ModelSpec::GaussianCompound { epsilon, n_atoms_per_side, .. } => (epsilon, n_atoms_per_side, true),
            ModelSpec::TwoPoint { .. } => (0.0, 1, false),
        };
        if let Some(atoms) = model.measure().atoms() {
            return Ok(atoms);
        }
        let d = discretize_measure(&model, eps, n, comp).map_err(|e| field("model", e))?;
        Ok(d.atoms)
    }

    /// Exact sampler when the model has one, else the discretized atoms.
    pub fn jump_source(&self) -> Result<JumpSource> {
        let model = self.levy_model()?;
        match model.exact_source() {
            Ok(s) => Ok(s),
            Err(_) => Ok(JumpSource::Atoms(self.atoms()?)),
        }
    }

    pub fn m2(&self) -> Result<f64> {
        Ok(self.jump_source()?.second_moment())
    }
}

/// Reads the config, rejecting the run before any output is written.
pub fn load(path: &Path, seed: Option<u64>) -> Result<Config> {
    let mut c = Config::from_path(path)?;
    if let Some(s) = seed {
        c.set_seed(s);
    }
    Ok(c)
}
