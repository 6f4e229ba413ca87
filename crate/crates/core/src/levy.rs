//! Mean-zero, square-integrable pure-jump Lévy models.
//!
//! A model is either a finite list of atoms or a symmetric density. Densities
//! of infinite activity are simulated through [`DiscretizedMeasure`], which
//! keeps the jumps of size `|x| >= ε` as quadrature atoms.

use rand::Rng as _;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::quad;
use crate::rng::{replicate_rng, Rng};

/// A jump size carrying a finite mass of the Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub size: f64,
    pub mass: f64,
}

/// The Lévy measure `ν` of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevyMeasure {
    /// Arbitrary finite atomic measure; must have zero mean.
    Atoms { atoms: Vec<Atom> },
    /// `(rate/2)(δ_jump + δ_{-jump})`.
    TwoPoint { rate: f64, jump: f64 },
    /// Compound Poisson with `N(0, jump_sd²)` marks: `ν(dx) = rate · φ_σ(x) dx`.
    GaussianCompound { rate: f64, jump_sd: f64 },
    /// `ν(dx) = scale · e^{-tempering|x|} |x|^{-1-index} dx`, `0 <= index < 2`.
    /// Infinite activity; `index = 0` is the variance-gamma case.
    TemperedStable {
        scale: f64,
        tempering: f64,
        index: f64,
    },
}

impl LevyMeasure {
    /// Atoms of an atomic measure, `None` for densities.
    pub fn atoms(&self) -> Option<Vec<Atom>> {
        match *self {
            LevyMeasure::Atoms { ref atoms } => Some(atoms.clone()),
            LevyMeasure::TwoPoint { rate, jump } => Some(vec![
                Atom {
                    size: jump,
                    mass: 0.5 * rate,
                },
                Atom {
                    size: -jump,
                    mass: 0.5 * rate,
                },
            ]),
            _ => None,
        }
    }

    /// Density of `ν` at `x`. Rejects `x = 0` and atomic measures.
    pub fn density(&self, x: f64) -> Result<f64> {
        if x == 0.0 || !x.is_finite() {
            return Err(invalid("x", format!("Lévy density is not defined at {x}")));
        }
        match *self {
            LevyMeasure::GaussianCompound { rate, jump_sd } => {
                let z = x / jump_sd;
                Ok(rate * (-0.5 * z * z).exp() / (jump_sd * (2.0 * std::f64::consts::PI).sqrt()))
            }
            LevyMeasure::TemperedStable {
                scale,
                tempering,
                index,
            } => {
                let a = x.abs();
                Ok(scale * (-tempering * a).exp() * a.powf(-1.0 - index))
            }
            _ => Err(invalid("measure", "atomic measures have no density")),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        match *self {
            LevyMeasure::Atoms { ref atoms } => {
                for a in atoms {
                    if a.size == 0.0 || !a.size.is_finite() {
                        return Err(invalid("atoms", format!("jump size {} is not allowed", a.size)));
                    }
                    positive("atoms.mass", a.mass)?;
                }
                let mean: f64 = atoms.iter().map(|a| a.size * a.mass).sum();
                let scale: f64 = atoms.iter().map(|a| (a.size * a.mass).abs()).sum();
                if mean.abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::DegenerateModel(format!(
                        "atomic measure has mean {mean:e}; only mean-zero models are supported"
                    )));
                }
                Ok(())
            }
            LevyMeasure::TwoPoint { rate, jump } => {
                positive("rate", rate)?;
                positive("jump", jump.abs())
            }
            LevyMeasure::GaussianCompound { rate, jump_sd } => {
                positive("rate", rate)?;
                positive("jump_sd", jump_sd)
            }
            LevyMeasure::TemperedStable {
                scale,
                tempering,
                index,
            } => {
                positive("scale", scale)?;
                if !(tempering >= 0.0 && tempering.is_finite()) {
                    return Err(invalid("tempering", format!("must be >= 0, got {tempering}")));
                }
                if !(0.0..2.0).contains(&index) {
                    return Err(invalid("index", format!("must lie in [0, 2), got {index}")));
                }
                Ok(())
            }
        }
    }

    /// `∫ x² ν(dx)`: exact for atoms and Gaussian marks, adaptive quadrature
    /// otherwise. A divergent integral is reported as an error.
    pub fn second_moment(&self) -> Result<f64> {
        match *self {
            LevyMeasure::GaussianCompound { rate, jump_sd } => Ok(rate * jump_sd * jump_sd),
            LevyMeasure::TemperedStable { index, .. } => {
                // x = s^{1/(2-Y)} removes the x^{1-Y} singularity at 0.
                let e = 1.0 / (2.0 - index);
                let near = quad::integrate(
                    |s| {
                        if s <= 0.0 {
                            return self.near_origin_limit();
                        }
                        let x = s.powf(e);
                        x * x * self.density(x).unwrap_or(0.0) * e * x / s
                    },
                    0.0,
                    1.0,
                    1e-11,
                    0.0,
                )?;
                let far = quad::integrate_to_infinity(
                    |x| x * x * self.density(x).unwrap_or(0.0),
                    1.0,
                    1e-11,
                    0.0,
                )
                .map_err(|e| Error::DegenerateModel(format!("second moment diverges ({e})")))?;
                Ok(2.0 * (near.value + far.value))
            }
            _ => Ok(self
                .atoms()
                .expect("atomic")
                .iter()
                .map(|a| a.size * a.size * a.mass)
                .sum()),
        }
    }

    // Value of the substituted second-moment integrand at s = 0.
    fn near_origin_limit(&self) -> f64 {
        match *self {
            LevyMeasure::TemperedStable { scale, index, .. } => scale / (2.0 - index),
            _ => 0.0,
        }
    }

    /// `∫_{|x| >= eps} x² ν(dx)`.
    pub fn second_moment_beyond(&self, eps: f64) -> Result<f64> {
        if let Some(atoms) = self.atoms() {
            return Ok(atoms
                .iter()
                .filter(|a| a.size.abs() >= eps)
                .map(|a| a.size * a.size * a.mass)
                .sum());
        }
        if eps <= 0.0 {
            return self.second_moment();
        }
        let r = quad::integrate_to_infinity(
            |x| x * x * self.density(x).unwrap_or(0.0),
            eps,
            1e-11,
            0.0,
        )?;
        Ok(2.0 * r.value)
    }

    /// `(∫ ν, ∫ x² ν)` over `[l, r]` with `0 < l < r`, integrated in `ln x`.
    fn cell_moments(&self, l: f64, r: f64) -> Result<(f64, f64)> {
        let f = |v: f64| {
            let x = v.exp();
            x * self.density(x).unwrap_or(0.0)
        };
        let mass = quad::integrate(f, l.ln(), r.ln(), 1e-11, 0.0)?.value;
        let second = quad::integrate(|v| f(v) * v.exp() * v.exp(), l.ln(), r.ln(), 1e-11, 0.0)?.value;
        Ok((mass, second))
    }

    fn natural_scale(&self) -> f64 {
        match *self {
            LevyMeasure::GaussianCompound { jump_sd, .. } => jump_sd,
            LevyMeasure::TemperedStable { tempering, .. } => 1.0 / tempering,
            _ => 1.0,
        }
    }
}

/// A validated Lévy model together with its second moment `m2 = ∫x²ν(dx)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyModel {
    name: String,
    measure: LevyMeasure,
    m2: f64,
}

impl LevyModel {
    pub fn new(name: impl Into<String>, measure: LevyMeasure) -> Result<Self> {
        measure.validate()?;
        let m2 = measure.second_moment()?;
        if m2 == 0.0 {
            return Err(Error::DegenerateModel("empty Lévy measure (X ≡ 0)".into()));
        }
        if !m2.is_finite() {
            return Err(Error::DegenerateModel(format!("second moment is {m2}")));
        }
        Ok(Self {
            name: name.into(),
            measure,
            m2,
        })
    }

    /// Symmetric two-point compound Poisson: jumps `±jump` at total rate `rate`.
    pub fn two_point(rate: f64, jump: f64) -> Result<Self> {
        Self::new("two_point", LevyMeasure::TwoPoint { rate, jump })
    }

    pub fn gaussian_compound(rate: f64, jump_sd: f64) -> Result<Self> {
        Self::new("gaussian_compound", LevyMeasure::GaussianCompound { rate, jump_sd })
    }

    pub fn tempered_stable(scale: f64, tempering: f64, index: f64) -> Result<Self> {
        Self::new(
            "tempered_stable",
            LevyMeasure::TemperedStable {
                scale,
                tempering,
                index,
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    /// `∫ x² ν(dx)`.
    pub fn second_moment(&self) -> f64 {
        self.m2
    }

    /// Jump source for exact simulation. Infinite-activity models have none
    /// and must go through [`discretize_measure`].
    pub fn exact_source(&self) -> Result<JumpSource> {
        match *self.measure() {
            LevyMeasure::GaussianCompound { rate, jump_sd } => {
                Ok(JumpSource::GaussianCompound { rate, jump_sd })
            }
            LevyMeasure::TemperedStable { .. } => Err(invalid(
                "model",
                "infinite activity: exact jump-by-jump sampling is impossible, \
                 sample from a discretized measure instead",
            )),
            _ => Ok(JumpSource::Atoms(self.measure.atoms().expect("atomic"))),
        }
    }
}

/// Finite stand-in for `ν`: atoms on `|x| >= epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedMeasure {
    pub atoms: Vec<Atom>,
    pub epsilon: f64,
    /// `m2(source) - Σ w y²` before any compensation.
    pub m2_lost: f64,
    /// Factor applied to every weight when compensation was requested.
    pub compensation: Option<f64>,
    pub source_m2: f64,
}

impl DiscretizedMeasure {
    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.size * a.size * a.mass).sum()
    }

    pub fn source(&self) -> JumpSource {
        JumpSource::Atoms(self.atoms.clone())
    }
}

/// Replaces a density by `n_atoms_per_side` atoms per half-line on
/// geometric cells between `eps` and a cutoff where the remaining second
/// moment is negligible. Each cell becomes one atom carrying its mass and its
/// second moment exactly. Atomic measures pass through unchanged.
pub fn discretize_measure(
    model: &LevyModel,
    eps: f64,
    n_atoms_per_side: usize,
    compensate: bool,
) -> Result<DiscretizedMeasure> {
    if n_atoms_per_side == 0 {
        return Err(invalid("n_atoms_per_side", "must be at least 1"));
    }
    let m2 = model.second_moment();
    let measure = model.measure();
    if let Some(atoms) = measure.atoms() {
        return Ok(DiscretizedMeasure {
            atoms,
            epsilon: 0.0,
            m2_lost: 0.0,
            compensation: None,
            source_m2: m2,
        });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("epsilon", format!("must be positive for densities, got {eps}")));
    }
    let mut cutoff = (2.0 * eps).max(measure.natural_scale());
    for _ in 0..200 {
        let tail = measure.second_moment_beyond(cutoff)?;
        if tail <= 1e-15 * m2 {
            break;
        }
        cutoff *= 2.0;
    }
    let ratio = (cutoff / eps).powf(1.0 / n_atoms_per_side as f64);
    let mut atoms = Vec::with_capacity(2 * n_atoms_per_side);
    let mut left = eps;
    for k in 0..n_atoms_per_side {
        let right = if k + 1 == n_atoms_per_side {
            cutoff
        } else {
            left * ratio
        };
        let (mass, second) = measure.cell_moments(left, right)?;
        if mass > 0.0 && second > 0.0 {
            let size = (second / mass).sqrt();
            atoms.push(Atom { size, mass });
            atoms.push(Atom { size: -size, mass });
        }
        left = right;
    }
    if atoms.is_empty() {
        return Err(invalid(
            "epsilon",
            format!("no Lévy mass retained on |x| >= {eps}"),
        ));
    }
    let kept: f64 = atoms.iter().map(|a| a.size * a.size * a.mass).sum();
    let m2_lost = (m2 - kept).max(0.0);
    let compensation = compensate.then(|| m2 / kept);
    if let Some(c) = compensation {
        for a in &mut atoms {
            a.mass *= c;
        }
    }
    Ok(DiscretizedMeasure {
        atoms,
        epsilon: eps,
        m2_lost,
        compensation,
        source_m2: m2,
    })
}

/// Something increments can be drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpSource {
    /// Independent Poisson counts per atom, compensated.
    Atoms(Vec<Atom>),
    /// Poisson number of `N(0, jump_sd²)` marks, summed exactly.
    GaussianCompound { rate: f64, jump_sd: f64 },
}

impl JumpSource {
    pub fn second_moment(&self) -> f64 {
        match self {
            JumpSource::Atoms(a) => a.iter().map(|a| a.size * a.size * a.mass).sum(),
            JumpSource::GaussianCompound { rate, jump_sd } => rate * jump_sd * jump_sd,
        }
    }
}

/// Per-cell increment sampler for a fixed list of cell widths. Poisson laws
/// are built once per distinct width.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    source: JumpSource,
    cell_law: Vec<usize>,
    laws: Vec<Vec<Option<Poisson<f64>>>>,
    drift: Vec<f64>,
}

impl IncrementSampler {
    pub fn new(source: JumpSource, widths: &[f64]) -> Result<Self> {
        let rates: Vec<f64> = match &source {
            JumpSource::Atoms(a) => a.iter().map(|a| a.mass).collect(),
            JumpSource::GaussianCompound { rate, .. } => vec![*rate],
        };
        // Compensator: Σ y w per unit time, exactly zero for mean-zero ν.
        let drift_rate = match &source {
            JumpSource::Atoms(a) => {
                let d: f64 = a.iter().map(|a| a.size * a.mass).sum();
                let scale: f64 = a.iter().map(|a| (a.size * a.mass).abs()).sum();
                if d.abs() <= 1e-12 * scale {
                    0.0
                } else {
                    d
                }
            }
            JumpSource::GaussianCompound { .. } => 0.0,
        };
        let mut distinct: Vec<u64> = Vec::new();
        let mut cell_law = Vec::with_capacity(widths.len());
        let mut laws = Vec::new();
        let mut drift = Vec::new();
        for &w in widths {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid("widths", format!("cell width {w} is not allowed")));
            }
            let key = w.to_bits();
            let idx = match distinct.iter().position(|&k| k == key) {
                Some(i) => i,
                None => {
                    distinct.push(key);
                    let per_atom = rates
                        .iter()
                        .map(|&r| {
                            let mean = r * w;
                            if mean > 0.0 {
                                Poisson::new(mean)
                                    .map(Some)
                                    .map_err(|e| invalid("widths", format!("Poisson({mean}): {e}")))
                            } else {
                                Ok(None)
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    laws.push(per_atom);
                    drift.push(drift_rate * w);
                    distinct.len() - 1
                }
            };
            cell_law.push(idx);
        }
        Ok(Self {
            source,
            cell_law,
            laws,
            drift,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cell_law.len()
    }

    /// Fills `out` with one compensated increment per cell.
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        assert_eq!(out.len(), self.cell_law.len());
        for (o, &law) in out.iter_mut().zip(&self.cell_law) {
            let laws = &self.laws[law];
            *o = match &self.source {
                JumpSource::Atoms(atoms) => {
                    let mut x = 0.0;
                    for (a, p) in atoms.iter().zip(laws) {
                        if let Some(p) = p {
                            x += a.size * p.sample(rng);
                        }
                    }
                    x - self.drift[law]
                }
                JumpSource::GaussianCompound { jump_sd, .. } => match &laws[0] {
                    Some(p) => {
                        let n: f64 = p.sample(rng);
                        if n > 0.0 {
                            let z: f64 = rng.sample(StandardNormal);
                            jump_sd * n.sqrt() * z
                        } else {
                            0.0
                        }
                    }
                    None => 0.0,
                },
            };
        }
    }
}

/// One replicate of the per-cell increments on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSample {
    pub step: f64,
    pub increments: Vec<f64>,
    pub seed: u64,
    pub replicate: u64,
}

/// Increments of the compensated process on every cell of `grid`, drawn from
/// stream `replicate` of `seed`.
pub fn sample_increments(
    source: &JumpSource,
    grid: &TimeGrid,
    seed: u64,
    replicate: u64,
) -> Result<IncrementSample> {
    let widths = vec![grid.step(); grid.n_cells()];
    let sampler = IncrementSampler::new(source.clone(), &widths)?;
    let mut increments = vec![0.0; grid.n_cells()];
    sampler.sample_into(&mut replicate_rng(seed, replicate), &mut increments);
    Ok(IncrementSample {
        step: grid.step(),
        increments,
        seed,
        replicate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_second_moment() {
        assert_eq!(LevyModel::two_point(2.0, 1.0).unwrap().second_moment(), 2.0);
    }

    #[test]
    fn empty_and_biased_measures_are_rejected() {
        let empty = LevyMeasure::Atoms { atoms: vec![] };
        assert_eq!(empty.second_moment().unwrap(), 0.0);
        assert!(matches!(LevyModel::new("empty", empty), Err(Error::DegenerateModel(_))));
        let biased = LevyMeasure::Atoms {
            atoms: vec![Atom { size: 1.0, mass: 1.0 }],
        };
        assert!(LevyModel::new("biased", biased).is_err());
        let zero = LevyMeasure::Atoms {
            atoms: vec![Atom { size: 0.0, mass: 1.0 }],
        };
        assert!(LevyModel::new("zero", zero).is_err());
    }

    #[test]
    fn density_rejects_origin() {
        let m = LevyModel::tempered_stable(1.0, 2.0, 0.5).unwrap();
        assert!(m.measure().density(0.0).is_err());
        assert!(m.measure().density(0.3).unwrap() > 0.0);
    }

    #[test]
    fn untempered_stable_has_no_second_moment() {
        assert!(LevyModel::tempered_stable(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn tempered_stable_second_moment_closed_form() {
        let m = LevyModel::tempered_stable(1.0, 2.0, 0.5).unwrap();
        let exact = 2.0 * crate::kernels::gamma(1.5) / 2f64.powf(1.5);
        assert!((m.second_moment() - exact).abs() < 1e-9 * exact);
        // Variance-gamma edge of the family.
        let vg = LevyModel::tempered_stable(1.0, 1.0, 0.0).unwrap();
        assert!((vg.second_moment() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn atomic_measures_pass_through_discretization() {
        let m = LevyModel::two_point(2.0, 1.0).unwrap();
        let d = discretize_measure(&m, 0.1, 4, true).unwrap();
        assert_eq!(d.atoms.len(), 2);
        assert_eq!(d.m2_lost, 0.0);
        assert!(discretize_measure(&m, 0.1, 0, false).is_err());
    }

    #[test]
    fn discretization_loses_less_with_smaller_epsilon() {
        let m = LevyModel::tempered_stable(1.0, 2.0, 0.5).unwrap();
        let coarse = discretize_measure(&m, 0.1, 16, false).unwrap();
        let fine = discretize_measure(&m, 0.05, 16, false).unwrap();
        assert!(fine.m2_lost < coarse.m2_lost);
        assert!(coarse.second_moment() <= m.second_moment());
        let beyond = m.measure().second_moment_beyond(0.1).unwrap();
        assert!((coarse.second_moment() - beyond).abs() < 1e-9 * beyond);
        let comp = discretize_measure(&m, 0.1, 16, true).unwrap();
        assert!((comp.second_moment() - m.second_moment()).abs() < 1e-12 * m.second_moment());
    }

    #[test]
    fn huge_epsilon_retains_nothing() {
        let m = LevyModel::gaussian_compound(1.0, 1.0).unwrap();
        assert!(discretize_measure(&m, 100.0, 4, false).is_err());
    }

    #[test]
    fn infinite_activity_has_no_exact_source() {
        let m = LevyModel::tempered_stable(1.0, 2.0, 0.5).unwrap();
        assert!(m.exact_source().is_err());
    }

    #[test]
    fn zero_width_cells_and_determinism() {
        let src = LevyModel::two_point(2.0, 1.0).unwrap().exact_source().unwrap();
        let s = IncrementSampler::new(src.clone(), &[0.0, 0.5, 0.0]).unwrap();
        let mut out = [1.0; 3];
        s.sample_into(&mut replicate_rng(1, 0), &mut out);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[2], 0.0);
        let g = TimeGrid::new(-1.0, 1.0, 64).unwrap();
        let a = sample_increments(&src, &g, 9, 2).unwrap();
        let b = sample_increments(&src, &g, 9, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_marks_moments() {
        let src = LevyModel::gaussian_compound(3.0, 0.5).unwrap().exact_source().unwrap();
        let s = IncrementSampler::new(src, &[0.5]).unwrap();
        let mut rng = replicate_rng(3, 0);
        let n = 200_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        let mut x = [0.0];
        for _ in 0..n {
            s.sample_into(&mut rng, &mut x);
            sum += x[0];
            sq += x[0] * x[0];
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let target = 3.0 * 0.25 * 0.5;
        assert!(mean.abs() < 4.0 * (target / n as f64).sqrt());
        assert!((var - target).abs() < 0.03 * target);
    }
}
