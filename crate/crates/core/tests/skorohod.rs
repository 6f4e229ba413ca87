mod common;

use std::sync::Arc;

use common::{random_element, rng, small_basis};
use fraclevy::chaos::{fractional_levy_element, Basis, ChaosElement, MultiIndex};
use fraclevy::frac_ops::{indicator_kernel_weights, rl_fractional_integral, Side};
use fraclevy::levy::{sample_increments, Atom, LevyModel};
use fraclevy::paths::sample_moments;
use fraclevy::probe::probe_set;
use fraclevy::skorohod::{
    fractional_transform_integrand, sample_first_chaos, skorohod_frac, skorohod_pjm, skorohod_via_kernel,
    wiener_integral_pathwise,
};
use fraclevy::{GridFunction, TimeGrid};
use fraclevy_oracle as oracle;
use rand::Rng;

fn bump(s: f64) -> f64 {
    let x = (s - 0.5) / 0.3;
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

#[test]
fn pjm_integral_s_identity() {
    let b = small_basis(4);
    let mut r = rng(21);
    let g: Vec<ChaosElement> = (0..b.dim()).map(|_| random_element(&b, 2, 5, &mut r)).collect();
    let d = skorohod_pjm(&g).unwrap();
    assert!(!d.overflow());
    for eta in probe_set(&b, 10, 0.7, 22).unwrap() {
        let v = eta.values();
        let rhs: f64 = (0..b.dim()).map(|k| g[k].s_transform(&eta).unwrap() * v[k] * b.weight(k)).sum();
        let lhs = d.s_transform(&eta).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }
}

#[test]
fn skorohod_integrals_are_linear() {
    let b = small_basis(4);
    let mut r = rng(23);
    let f: Vec<ChaosElement> = (0..8).map(|_| random_element(&b, 2, 4, &mut r)).collect();
    let g: Vec<ChaosElement> = (0..8).map(|_| random_element(&b, 2, 4, &mut r)).collect();
    let comb: Vec<ChaosElement> = f.iter().zip(&g).map(|(x, y)| x.scale(2.0).axpy(-3.0, y).unwrap()).collect();
    let lhs = skorohod_frac(&comb, 0.3, None).unwrap();
    let rhs = skorohod_frac(&f, 0.3, None)
        .unwrap()
        .scale(2.0)
        .axpy(-3.0, &skorohod_frac(&g, 0.3, None).unwrap())
        .unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs_coeff() <= 1e-14);
    let zero = vec![ChaosElement::zero(&b); 8];
    assert!(skorohod_frac(&zero, 0.3, None).unwrap().is_empty());
}

#[test]
fn fractional_integral_equals_the_kernel_route() {
    let b = small_basis(3);
    let mut r = rng(24);
    let f: Vec<ChaosElement> = (0..8).map(|_| random_element(&b, 2, 6, &mut r)).collect();
    for beta in [0.1, 0.25, 0.4] {
        let a = skorohod_frac(&f, beta, None).unwrap();
        let k = skorohod_via_kernel(&f, beta).unwrap();
        for eta in probe_set(&b, 10, 0.7, 25).unwrap() {
            let (x, y) = (a.s_transform(&eta).unwrap(), k.s_transform(&eta).unwrap());
            assert!((x - y).abs() <= 1e-6, "{beta}: {x} vs {y}");
        }
    }
}

fn line_basis(n: usize, order: usize) -> Arc<Basis> {
    let g = TimeGrid::new(-1.0, 1.0, n).unwrap();
    Basis::new(g, vec![Atom { size: 1.0, mass: 0.5 }, Atom { size: -1.0, mass: 0.5 }], order).unwrap()
}

#[test]
fn deterministic_integrand_gives_the_wiener_integral() {
    let b = line_basis(400, 1);
    let g = *b.grid();
    let beta = 0.25;
    let gf = GridFunction::from_centers(g, bump);
    let f: Vec<ChaosElement> = gf.values().iter().map(|&v| ChaosElement::constant(&b, v)).collect();
    let d = skorohod_frac(&f, beta, None).unwrap().first_chaos_coeffs();
    let img = rl_fractional_integral(&gf, beta, Side::Minus).unwrap();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..b.dim() {
        let (i, j) = b.cell_mark(k);
        let w = b.marks()[j].size * img.values()[i] * b.sqrt_weight(k);
        worst = worst.max((d[k] - w).abs());
        scale = scale.max(w.abs());
    }
    assert!(worst <= 2e-2 * scale, "{worst} vs {scale}");
}

#[test]
fn change_of_parameter_in_the_integrand() {
    let b = line_basis(2000, 2);
    let g = *b.grid();
    let mut r = rng(26);
    let picks: Vec<(usize, f64)> = (0..3).map(|_| (r.random_range(0..b.dim()), r.random_range(-1.0..1.0))).collect();
    let f: Vec<ChaosElement> = (0..g.n_cells())
        .map(|i| {
            let s = bump(g.center(i));
            let terms = std::iter::once((MultiIndex::zero(), s))
                .chain(picks.iter().map(|&(k, c)| (MultiIndex::unit(k), c * s)));
            ChaosElement::from_terms(&b, terms).unwrap()
        })
        .collect();
    let (alpha, beta) = (0.1, 0.3);
    let direct = skorohod_frac(&f, beta, None).unwrap();
    let via = skorohod_frac(&fractional_transform_integrand(&f, alpha, beta).unwrap(), alpha, None).unwrap();
    for eta in probe_set(&b, 10, 0.5, 27).unwrap() {
        let (x, y) = (direct.s_transform(&eta).unwrap(), via.s_transform(&eta).unwrap());
        assert!((x - y).abs() <= 1e-4 * x.abs().max(1e-3), "{x} vs {y}");
    }
    // deterministic part: the first-chaos kernels agree
    let det: Vec<ChaosElement> = f.iter().map(|e| ChaosElement::constant(&b, e.constant_term())).collect();
    let k1 = skorohod_frac(&det, beta, None).unwrap().first_chaos_coeffs();
    let k2 = skorohod_frac(&fractional_transform_integrand(&det, alpha, beta).unwrap(), alpha, None)
        .unwrap()
        .first_chaos_coeffs();
    let sup = k1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap = k1.iter().zip(&k2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap <= 1e-2 * sup, "{gap} vs {sup}");
    assert!(fractional_transform_integrand(&f, beta, alpha).is_err());
}

#[test]
fn wick_multiplication_commutes_with_the_integral() {
    let b = small_basis(5);
    let mut r = rng(28);
    let y = random_element(&b, 2, 6, &mut r);
    let f: Vec<ChaosElement> = (0..8).map(|_| random_element(&b, 2, 4, &mut r)).collect();
    let yf: Vec<ChaosElement> = f.iter().map(|e| y.wick(e).unwrap()).collect();
    let lhs = y.wick(&skorohod_frac(&f, 0.25, None).unwrap()).unwrap();
    let rhs = skorohod_frac(&yf, 0.25, None).unwrap();
    assert!(!lhs.overflow() && !rhs.overflow());
    for eta in probe_set(&b, 10, 0.7, 29).unwrap() {
        let (a, c) = (lhs.s_transform(&eta).unwrap(), rhs.s_transform(&eta).unwrap());
        assert!((a - c).abs() <= 1e-8);
    }
}

#[test]
fn masks_restrict_the_integral() {
    let b = small_basis(3);
    let mut r = rng(30);
    let f: Vec<ChaosElement> = (0..8).map(|_| random_element(&b, 2, 4, &mut r)).collect();
    let left: Vec<bool> = (0..8).map(|i| i < 3).collect();
    let right: Vec<bool> = left.iter().map(|x| !x).collect();
    let whole = skorohod_frac(&f, 0.2, None).unwrap();
    let parts = skorohod_frac(&f, 0.2, Some(&left))
        .unwrap()
        .add(&skorohod_frac(&f, 0.2, Some(&right)).unwrap())
        .unwrap();
    assert!(whole.sub(&parts).unwrap().max_abs_coeff() <= 1e-14);
    assert!(skorohod_frac(&f, 0.2, Some(&[true; 3])).is_err());
}

#[test]
fn indicator_integrand_reproduces_the_path() {
    let grid = TimeGrid::new(-4.0, 1.0, 500).unwrap();
    let source = LevyModel::two_point(2.0, 1.0).unwrap().exact_source().unwrap();
    let inc = sample_increments(&source, &grid, 31, 0).unwrap();
    let chi = GridFunction::indicator(grid, 0.0, 0.6);
    let w = indicator_kernel_weights(0.6, 0.3, &grid).unwrap();
    let path: f64 = w.values().iter().zip(&inc.increments).map(|(a, b)| a * b).sum();
    let wiener = wiener_integral_pathwise(&chi, 0.3, &inc).unwrap();
    assert!((path - wiener).abs() <= 1e-12 * (1.0 + path.abs()));
    let zero = wiener_integral_pathwise(&GridFunction::zeros(grid), 0.3, &inc).unwrap();
    assert_eq!(zero, 0.0);
    let other = sample_increments(&source, &TimeGrid::new(-4.0, 1.0, 50).unwrap(), 31, 0).unwrap();
    assert!(wiener_integral_pathwise(&chi, 0.3, &other).is_err());
}

#[test]
fn wiener_integral_variance_matches_quadrature() {
    // zero-mean integrand, so I^β_- g decays fast and a short past suffices
    let g = |s: f64| bump(s) - bump(s - 0.6);
    let grid = TimeGrid::new(-6.0, 1.5, 1500).unwrap();
    let gf = GridFunction::from_centers(grid, g);
    let source = LevyModel::two_point(2.0, 1.0).unwrap().exact_source().unwrap();
    let beta = 0.25;
    let xs: Vec<f64> = (0..20_000)
        .map(|p| wiener_integral_pathwise(&gf, beta, &sample_increments(&source, &grid, 32, p).unwrap()).unwrap())
        .collect();
    let m = sample_moments(0.0, &xs).unwrap();
    let target = 2.0 * oracle::rl_minus_l2_sq(&g, 0.2, 1.4, beta);
    assert!((m.var - target).abs() < 3.0 * m.stderr_var, "{} vs {target} ± {}", m.var, m.stderr_var);
    assert!(m.mean.abs() < 3.0 * m.stderr_mean);
}

#[test]
fn sampled_first_chaos_has_the_isometric_variance() {
    let b = small_basis(1);
    let f = fractional_levy_element(0.25, 0.75, &b).unwrap();
    let xs: Vec<f64> = (0..40_000).map(|p| sample_first_chaos(&f, 33, p).unwrap()).collect();
    let m = sample_moments(0.0, &xs).unwrap();
    let target: f64 = f.first_chaos_coeffs().iter().map(|c| c * c).sum();
    assert!((m.var - target).abs() < 3.0 * m.stderr_var, "{} vs {target}", m.var);
    assert!(m.mean.abs() < 3.0 * m.stderr_mean);
    let b2 = small_basis(2);
    let second = ChaosElement::from_terms(&b2, [(MultiIndex::from_pairs([(0, 2)]), 1.0)]).unwrap();
    assert!(sample_first_chaos(&second, 1, 0).is_err());
}

#[test]
fn deterministic_pjm_integrand_is_the_first_chaos() {
    let b = small_basis(2);
    let vals: Vec<f64> = (0..b.dim()).map(|k| (k as f64 * 0.7).sin()).collect();
    let g: Vec<ChaosElement> = vals.iter().map(|&v| ChaosElement::constant(&b, v)).collect();
    let d = skorohod_pjm(&g).unwrap();
    let direct = ChaosElement::from_kernel(&b, &vals).unwrap();
    assert!(d.sub(&direct).unwrap().max_abs_coeff() <= 1e-15);
}
