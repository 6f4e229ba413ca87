use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::basis::Basis;
use super::multi_index::MultiIndex;
use crate::error::{check_hurst_range, invalid, Error, Result};
use crate::kernels::{ma_cell_avg, rl_cell};

/// Truncated chaos expansion `F = Σ_α c_α K_α`, normalized so that
/// `S(K_α)(η) = Π_k η_k^{α_k}`.
///
/// With this normalization the Wick product is the Cauchy product of the
/// coefficient families. The usual pairing `⟨C_n, f_n⟩` carries the factor
/// `n!` relative to the symmetric kernel; here it is absorbed into `c_α`.
///
/// Terms are kept sorted by multi-index. Any operation that has to drop
/// terms of order `> N` sets the sticky `overflow` flag and adds the Fock
/// norm `(Σ α! c_α²)^{1/2}` of the dropped part to `dropped`.
#[derive(Debug, Clone)]
pub struct ChaosElement {
    basis: Arc<Basis>,
    terms: Vec<(MultiIndex, f64)>,
    overflow: bool,
    dropped: f64,
}

impl PartialEq for ChaosElement {
    fn eq(&self, other: &Self) -> bool {
        *self.basis == *other.basis && self.terms == other.terms && self.overflow == other.overflow
    }
}

impl ChaosElement {
    pub fn zero(basis: &Arc<Basis>) -> Self {
        Self {
            basis: basis.clone(),
            terms: Vec::new(),
            overflow: false,
            dropped: 0.0,
        }
    }

    pub fn constant(basis: &Arc<Basis>, c: f64) -> Self {
        let mut e = Self::zero(basis);
        if c != 0.0 {
            e.terms.push((MultiIndex::zero(), c));
        }
        e
    }

    /// Builds an element from arbitrary terms; repeated indices are summed.
    pub fn from_terms(
        basis: &Arc<Basis>,
        terms: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self> {
        let mut map: FxHashMap<MultiIndex, f64> = FxHashMap::default();
        for (a, c) in terms {
            if a.order() > basis.order() {
                return Err(invalid(
                    "terms",
                    format!("index {a} has order {} > {}", a.order(), basis.order()),
                ));
            }
            if a.max_index().is_some_and(|k| k >= basis.dim()) {
                return Err(invalid("terms", format!("index {a} exceeds the basis dimension {}", basis.dim())));
            }
            if !c.is_finite() {
                return Err(invalid("terms", format!("non-finite coefficient {c}")));
            }
            *map.entry(a).or_insert(0.0) += c;
        }
        Ok(Self::from_map(basis, map, false, 0.0))
    }

    fn from_map(basis: &Arc<Basis>, map: FxHashMap<MultiIndex, f64>, overflow: bool, dropped: f64) -> Self {
        let mut terms: Vec<(MultiIndex, f64)> = map.into_iter().filter(|t| t.1 != 0.0).collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Self {
            basis: basis.clone(),
            terms,
            overflow,
            dropped,
        }
    }

    /// First-chaos element with coefficient `coeffs[k]` on `ε_k`.
    pub fn first_chaos(basis: &Arc<Basis>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(invalid(
                "coeffs",
                format!("expected {} coefficients, got {}", basis.dim(), coeffs.len()),
            ));
        }
        if basis.order() == 0 && coeffs.iter().any(|&c| c != 0.0) {
            return Err(invalid("coeffs", "basis order 0 holds constants only"));
        }
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| (MultiIndex::unit(k), c))
            .collect();
        Ok(Self {
            basis: basis.clone(),
            terms,
            overflow: false,
            dropped: 0.0,
        })
    }

    /// `⟨C_1, f⟩` for a function on `U` given by its value `f_k` on each
    /// basis cell: the compensated-measure integral `∫ f dÑ`.
    pub fn from_kernel(basis: &Arc<Basis>, values: &[f64]) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(invalid("values", format!("expected {} values", basis.dim())));
        }
        let c: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(k, v)| v * basis.sqrt_weight(k))
            .collect();
        Self::first_chaos(basis, &c)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn terms(&self) -> &[(MultiIndex, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn overflow(&self) -> bool {
        self.overflow
    }

    /// Sum of the Fock norms `(Σ α! c_α²)^{1/2}` of the parts dropped by
    /// truncation, scaled along with the element. At a test function of
    /// gauge `g` a dropped part of order `n` has S-transform at most its
    /// norm times `gⁿ / √n!`.
    pub fn dropped_mass(&self) -> f64 {
        self.dropped
    }

    pub fn coeff(&self, a: &MultiIndex) -> f64 {
        self.terms
            .binary_search_by(|t| t.0.cmp(a))
            .map_or(0.0, |i| self.terms[i].1)
    }

    /// `c_0`, the expectation.
    pub fn constant_term(&self) -> f64 {
        self.coeff(&MultiIndex::zero())
    }

    /// Highest order present.
    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.0.order()).max().unwrap_or(0)
    }

    /// Dense first-chaos coefficients.
    pub fn first_chaos_coeffs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.dim()];
        for (a, c) in &self.terms {
            if a.order() == 1 {
                out[a.max_index().expect("order 1")] = *c;
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.1.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.1.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.1 * t.1).sum::<f64>().sqrt()
    }

    /// Same element, marked as overflowed (used when a caller detects lost
    /// mass outside the element itself).
    /// The same coefficients with the overflow record cleared.
    pub fn without_overflow(&self) -> Self {
        Self {
            overflow: false,
            dropped: 0.0,
            ..self.clone()
        }
    }

    pub(crate) fn mark_overflow(&mut self, dropped: f64) {
        self.overflow = true;
        self.dropped += dropped;
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale_mut(c);
        out
    }

    pub fn scale_mut(&mut self, c: f64) {
        self.dropped *= c.abs();
        if c == 0.0 {
            self.terms.clear();
        } else {
            for t in &mut self.terms {
                t.1 *= c;
            }
        }
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &ChaosElement) -> Result<Self> {
        Basis::check_same(&self.basis, &other.basis)?;
        let (a, b) = (&self.terms, &other.terms);
        let mut terms = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => std::cmp::Ordering::Less,
                _ => std::cmp::Ordering::Greater,
            };
            match ord {
                std::cmp::Ordering::Less => {
                    terms.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    if b[j].1 * c != 0.0 {
                        terms.push((b[j].0.clone(), c * b[j].1));
                    }
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let v = a[i].1 + c * b[j].1;
                    if v != 0.0 {
                        terms.push((a[i].0.clone(), v));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(Self {
            basis: self.basis.clone(),
            terms,
            overflow: self.overflow || other.overflow,
            dropped: self.dropped + c.abs() * other.dropped,
        })
    }

    pub fn add(&self, other: &ChaosElement) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &ChaosElement) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Wick product: the Cauchy product `(F◇G)_γ = Σ_{α+β=γ} F_α G_β`,
    /// truncated at order `N`.
    pub fn wick(&self, other: &ChaosElement) -> Result<Self> {
        Basis::check_same(&self.basis, &other.basis)?;
        let cap = self.basis.order();
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let large_orders: Vec<usize> = large.terms.iter().map(|t| t.0.order()).collect();
        let mut map: FxHashMap<MultiIndex, f64> = FxHashMap::default();
        map.reserve(large.terms.len());
        let mut lost: FxHashMap<MultiIndex, f64> = FxHashMap::default();
        let mut overflow = false;
        for (a, ca) in &small.terms {
            let oa = a.order();
            for ((b, cb), &ob) in large.terms.iter().zip(&large_orders) {
                let v = ca * cb;
                if oa + ob > cap {
                    if v != 0.0 {
                        overflow = true;
                        *lost.entry(a.add(b)).or_insert(0.0) += v;
                    }
                    continue;
                }
                *map.entry(a.add(b)).or_insert(0.0) += v;
            }
        }
        let dropped = lost.iter().map(|(g, v)| g.factorial() * v * v).sum::<f64>().sqrt();
        Ok(Self::from_map(
            &self.basis,
            map,
            overflow || self.overflow || other.overflow,
            dropped + self.dropped + other.dropped,
        ))
    }

    /// `F^{◇n}`.
    pub fn wick_power(&self, n: usize) -> Result<Self> {
        let mut out = ChaosElement::constant(&self.basis, 1.0);
        for _ in 0..n {
            out = out.wick(self)?;
        }
        Ok(out)
    }

    /// `S(F)(η) = Σ_α c_α Π_k η_k^{α_k}`; rejects `η` with gauge `>= 1`.
    pub fn s_transform(&self, eta: &TestFunction) -> Result<f64> {
        Basis::check_same(&self.basis, &eta.basis)?;
        eta.check_admissible()?;
        Ok(self.s_transform_unchecked(&eta.coeffs))
    }

    pub(crate) fn s_transform_unchecked(&self, eta: &[f64]) -> f64 {
        self.terms.iter().map(|(a, c)| c * a.monomial(eta)).sum()
    }
}

/// A test function `η` on `U` through its coefficients `η_k = ⟨e_k, η⟩_π`.
/// The gauge is the `ℓ²` norm of the coefficients (the `L²(π)` norm of the
/// piecewise-constant `η`); S-transforms accept only gauge `< 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    basis: Arc<Basis>,
    coeffs: Vec<f64>,
    gauge: f64,
}

impl TestFunction {
    pub fn from_coeffs(basis: &Arc<Basis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(invalid("coeffs", format!("expected {} coefficients", basis.dim())));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coeffs", "non-finite test-function coefficient"));
        }
        let gauge = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(Self {
            basis: basis.clone(),
            coeffs,
            gauge,
        })
    }

    /// From the value `v_k` of `η` on each basis cell: `η_k = v_k √w_k`.
    pub fn from_values(basis: &Arc<Basis>, values: &[f64]) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(invalid("values", format!("expected {} values", basis.dim())));
        }
        let c = values
            .iter()
            .enumerate()
            .map(|(k, v)| v * basis.sqrt_weight(k))
            .collect();
        Self::from_coeffs(basis, c)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Values `v_k = η_k / √w_k` on the basis cells.
    pub fn values(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c / self.basis.sqrt_weight(k))
            .collect()
    }

    pub fn gauge(&self) -> f64 {
        self.gauge
    }

    pub fn check_admissible(&self) -> Result<()> {
        if self.gauge < 1.0 {
            Ok(())
        } else {
            Err(Error::Inadmissible { gauge: self.gauge })
        }
    }
}

/// Fractional Lévy noise `Ẋ^β_t = ⟨C_1, λ_t⟩` with
/// `λ_t(u,y) = y (t-u)_+^{β-1} / Γ(β)`, averaged exactly over each cell.
///
/// The cell containing `u = t` keeps the integral over its part left of `t`,
/// so the kernel stays finite. At a cell edge `t = e_i` the cell to the right
/// is empty and the singular mass sits in cell `i - 1`.
pub fn noise_element(beta: f64, t: f64, basis: &Arc<Basis>) -> Result<ChaosElement> {
    check_hurst_range("beta", beta)?;
    basis.grid().require_inside("t", t)?;
    let grid = basis.grid();
    let h = grid.step();
    let mut c = vec![0.0; basis.dim()];
    let last = grid.cell_of(t).expect("inside");
    for i in 0..=last {
        let (a, b) = grid.cell(i);
        let q = rl_cell(t, a, b, beta);
        for (j, m) in basis.marks().iter().enumerate() {
            c[basis.index(i, j)] = m.size * (m.mass / h).sqrt() * q;
        }
    }
    ChaosElement::first_chaos(basis, &c)
}

/// `X^β_t = ⟨C_1, y M_β(t,·)⟩` with exact cell averages of the kernel.
pub fn fractional_levy_element(beta: f64, t: f64, basis: &Arc<Basis>) -> Result<ChaosElement> {
    check_hurst_range("beta", beta)?;
    basis.grid().require_inside("t", t)?;
    let grid = basis.grid();
    let h = grid.step();
    let mut c = vec![0.0; basis.dim()];
    for i in 0..grid.n_cells() {
        let (a, b) = grid.cell(i);
        let m = ma_cell_avg(t, a, b, beta);
        if m == 0.0 {
            continue;
        }
        for (j, atom) in basis.marks().iter().enumerate() {
            c[basis.index(i, j)] = atom.size * m * (h * atom.mass).sqrt();
        }
    }
    ChaosElement::first_chaos(basis, &c)
}

/// Wick exponential `Σ_n F^{◇n}/n!`.
///
/// The constant part factors out exactly, `exp◇(c_0 + F') = e^{c_0}
/// exp◇(F')`, and the series of `F'` terminates at order `N`.
pub fn wick_exp(f: &ChaosElement) -> Result<ChaosElement> {
    let c0 = f.constant_term();
    if c0.abs() > 20.0 {
        return Err(invalid("F", format!("constant term {c0} exceeds 20 in magnitude")));
    }
    let rest = f.axpy(-c0, &ChaosElement::constant(f.basis(), 1.0))?;
    let mut sum = ChaosElement::constant(f.basis(), 1.0);
    let mut power = sum.clone();
    for n in 1..=f.basis().order() {
        power = power.wick(&rest)?;
        power.scale_mut(1.0 / n as f64);
        if power.is_empty() && !power.overflow() {
            break;
        }
        sum = sum.add(&power)?;
    }
    sum.scale_mut(c0.exp());
    Ok(sum)
}
