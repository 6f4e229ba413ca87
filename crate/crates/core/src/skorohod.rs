//! Skorohod integrals against the compensated jump measure and against
//! fractional Lévy noise, plus the pathwise Wiener integral.

use std::sync::Arc;

use rand_distr::{Distribution, Poisson};
use rustc_hash::FxHashMap;

use crate::chaos::{Basis, ChaosElement, MultiIndex};
use crate::error::{check_hurst_range, invalid, Error, Result};
use crate::frac_ops::{rl_convolve, rl_fractional_integral, ConvMethod, Side};
use crate::grid::GridFunction;
use crate::kernels::{noise_step_moments, rl_conv_weights};
use crate::levy::IncrementSample;
use crate::rng::replicate_rng;

fn common_basis(family: &[ChaosElement]) -> Result<Arc<Basis>> {
    let first = family.first().ok_or_else(|| invalid("F", "empty integrand family"))?;
    let basis = first.basis().clone();
    for f in family {
        if !(Arc::ptr_eq(f.basis(), &basis) || **f.basis() == *basis) {
            return Err(Error::BasisMismatch);
        }
    }
    Ok(basis)
}

/// `δ(G)` for a family indexed by basis index `k`:
/// `δ(G)_{α+ε_k} += G(k)_α √w_k`.
pub fn skorohod_pjm(g: &[ChaosElement]) -> Result<ChaosElement> {
    let basis = common_basis(g)?;
    if g.len() != basis.dim() {
        return Err(invalid(
            "G",
            format!("expected one element per basis index ({}), got {}", basis.dim(), g.len()),
        ));
    }
    let mut terms = Vec::new();
    let mut dropped = 0.0;
    let mut overflow = false;
    for (k, gk) in g.iter().enumerate() {
        let s = basis.sqrt_weight(k);
        overflow |= gk.overflow();
        dropped += gk.dropped_mass();
        for (a, c) in gk.terms() {
            if a.order() + 1 > basis.order() {
                overflow = true;
                dropped += a.with_unit(k).factorial().sqrt() * (c * s).abs();
                continue;
            }
            terms.push((a.with_unit(k), c * s));
        }
    }
    finish(&basis, terms, overflow, dropped)
}

fn finish(
    basis: &Arc<Basis>,
    terms: Vec<(MultiIndex, f64)>,
    overflow: bool,
    dropped: f64,
) -> Result<ChaosElement> {
    let mut out = ChaosElement::from_terms(basis, terms)?;
    if overflow {
        out.mark_overflow(dropped);
    }
    Ok(out)
}

/// `δ^β(F) = ∫ F(s) ◇ Ẋ^β_s ds` for `F` given per grid cell, restricted to
/// the cells where `mask` is true.
///
/// On each cell `F` is frozen and the noise is integrated exactly:
/// `δ^β(F) = Σ_m F(m) ◇ ∫_{cell m} Ẋ^β_s ds`, where the cell integral of the
/// noise is the first-chaos element `X^β_{e_{m+1}} - X^β_{e_m}`.
pub fn skorohod_frac(f: &[ChaosElement], beta: f64, mask: Option<&[bool]>) -> Result<ChaosElement> {
    check_hurst_range("beta", beta)?;
    let basis = common_basis(f)?;
    let grid = *basis.grid();
    if f.len() != grid.n_cells() {
        return Err(invalid(
            "F",
            format!("expected one element per grid cell ({}), got {}", grid.n_cells(), f.len()),
        ));
    }
    if mask.is_some_and(|m| m.len() != grid.n_cells()) {
        return Err(Error::GridMismatch);
    }
    let n = grid.n_cells();
    let h = grid.step();
    // ∫_{cell d} Q(s, cell 0) ds; the grid is uniform so this depends on the lag only.
    let (a0, b0) = grid.cell(0);
    let lag: Vec<f64> = (0..n)
        .map(|d| {
            let (s0, s1) = grid.cell(d);
            noise_step_moments(s0, s1, a0, b0, beta).0
        })
        .collect();
    let mut overflow = false;
    let mut dropped = 0.0;
    let mut series: FxHashMap<MultiIndex, Vec<(usize, f64)>> = FxHashMap::default();
    for (m, fm) in f.iter().enumerate() {
        overflow |= fm.overflow();
        if mask.is_some_and(|mask| !mask[m]) {
            continue;
        }
        dropped += fm.dropped_mass();
        for (al, c) in fm.terms() {
            series.entry(al.clone()).or_default().push((m, *c));
        }
    }
    let scales: Vec<f64> = basis.marks().iter().map(|a| a.size * (a.mass / h).sqrt()).collect();
    let mut terms = Vec::new();
    let mut acc = vec![0.0; n];
    for (al, cells) in &series {
        acc.fill(0.0);
        for &(m, c) in cells {
            for (i, slot) in acc[..=m].iter_mut().enumerate() {
                *slot += c * lag[m - i];
            }
        }
        let fits = al.order() < basis.order();
        for (i, &v) in acc.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (j, &sc) in scales.iter().enumerate() {
                if fits {
                    terms.push((al.with_unit(basis.index(i, j)), v * sc));
                } else {
                    overflow = true;
                    dropped += al.with_unit(basis.index(i, j)).factorial().sqrt() * (v * sc).abs();
                }
            }
        }
    }
    finish(&basis, terms, overflow, dropped)
}

/// `δ(K^β F)` with `(K^β F)(u, y) = y (I^β_- F)(u)`, `I^β_-` acting on the
/// cell averages of every chaos coefficient. Equal to [`skorohod_frac`]; the
/// two are coded independently so that the identity can be tested.
pub fn skorohod_via_kernel(f: &[ChaosElement], beta: f64) -> Result<ChaosElement> {
    check_hurst_range("beta", beta)?;
    let basis = common_basis(f)?;
    let transformed = apply_rl_minus(f, beta)?;
    let mut g = Vec::with_capacity(basis.dim());
    for fi in &transformed {
        for atom in basis.marks() {
            g.push(fi.scale(atom.size));
        }
    }
    skorohod_pjm(&g)
}

/// `I^γ_-` applied coefficient-wise in time to a cell-indexed family.
fn apply_rl_minus(f: &[ChaosElement], gamma_order: f64) -> Result<Vec<ChaosElement>> {
    let basis = common_basis(f)?;
    let grid = *basis.grid();
    if f.len() != grid.n_cells() {
        return Err(Error::GridMismatch);
    }
    let n = grid.n_cells();
    let w = rl_conv_weights(gamma_order, grid.step(), n);
    let mut indices: Vec<MultiIndex> = f.iter().flat_map(|e| e.terms().iter().map(|t| t.0.clone())).collect();
    indices.sort_unstable();
    indices.dedup();
    let mut per_cell: Vec<Vec<(MultiIndex, f64)>> = vec![Vec::new(); n];
    for a in &indices {
        let series: Vec<f64> = f.iter().map(|e| e.coeff(a)).collect();
        let out = rl_convolve(&series, &w, Side::Minus, ConvMethod::Auto);
        for (cell, v) in out.into_iter().enumerate() {
            if v != 0.0 {
                per_cell[cell].push((a.clone(), v));
            }
        }
    }
    let overflow = f.iter().any(|e| e.overflow());
    per_cell
        .into_iter()
        .map(|terms| {
            let mut e = ChaosElement::from_terms(&basis, terms)?;
            if overflow {
                e.mark_overflow(0.0);
            }
            Ok(e)
        })
        .collect()
}

/// The integrand `I^{β-α}_- F` for which `δ^α(I^{β-α}_- F) = δ^β(F)`.
pub fn fractional_transform_integrand(
    f: &[ChaosElement],
    alpha: f64,
    beta: f64,
) -> Result<Vec<ChaosElement>> {
    check_hurst_range("alpha", alpha)?;
    check_hurst_range("beta", beta)?;
    if alpha >= beta {
        return Err(invalid("alpha", format!("need alpha < beta, got {alpha} >= {beta}")));
    }
    apply_rl_minus(f, beta - alpha)
}

/// `∫ g δX^β = ∫ (I^β_- g)(t) dX_t` for deterministic `g`, evaluated on one
/// sampled increment vector of the same grid.
pub fn wiener_integral_pathwise(g: &GridFunction, beta: f64, increments: &IncrementSample) -> Result<f64> {
    check_hurst_range("beta", beta)?;
    let grid = g.grid();
    if increments.increments.len() != grid.n_cells() || increments.step != grid.step() {
        return Err(Error::GridMismatch);
    }
    let ig = rl_fractional_integral(g, beta, Side::Minus)?;
    Ok(ig.values().iter().zip(&increments.increments).map(|(a, b)| a * b).sum())
}

/// One draw of `∫ f dÑ = Σ_k f_k (N_k - w_k)` for the first-chaos element
/// `⟨C_1, f⟩`, with independent `N_k ~ Poisson(w_k)` jump counts per basis
/// cell. Higher-order terms are rejected.
pub fn sample_first_chaos(f: &ChaosElement, seed: u64, replicate: u64) -> Result<f64> {
    if f.max_order() > 1 {
        return Err(invalid("F", "only constant plus first-chaos elements can be sampled"));
    }
    let basis = f.basis();
    let mut rng = replicate_rng(seed, replicate);
    let c = f.first_chaos_coeffs();
    let mut x = f.constant_term();
    for (k, &ck) in c.iter().enumerate() {
        let w = basis.weight(k);
        let n: f64 = Poisson::new(w)
            .map_err(|e| invalid("basis", format!("Poisson({w}): {e}")))?
            .sample(&mut rng);
        if ck != 0.0 {
            x += ck / w.sqrt() * (n - w);
        }
    }
    Ok(x)
}
