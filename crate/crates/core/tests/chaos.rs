mod common;

use common::{max_gap, random_element, rng, small_basis};
use fraclevy::chaos::text::{from_text, to_text};
use fraclevy::chaos::{
    distribution_norm, fractional_levy_element, noise_element, wick_exp, Basis, ChaosElement, MultiIndex, NormMode,
    TestFunction,
};
use fraclevy::frac_ops::{rl_fractional_integral, Side};
use fraclevy::hermite::rl_kernel_coefficients;
use fraclevy::levy::Atom;
use fraclevy::probe::{probe_set, random_probe};
use fraclevy::{Error, GridFunction, TimeGrid};
use fraclevy_oracle as oracle;
use rand::Rng;

#[test]
fn s_transform_turns_wick_into_multiplication() {
    let b = small_basis(6);
    let mut r = rng(1);
    for i in 0..100 {
        let f = random_element(&b, 3, 12, &mut r);
        let g = random_element(&b, 3, 12, &mut r);
        let eta = random_probe(&b, 0.6, 2, i).unwrap();
        let fg = f.wick(&g).unwrap();
        assert!(!fg.overflow());
        let lhs = fg.s_transform(&eta).unwrap();
        let rhs = f.s_transform(&eta).unwrap() * g.s_transform(&eta).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10, "{i}: {lhs} vs {rhs}");
    }
}

#[test]
fn wick_algebra_laws() {
    let b = small_basis(6);
    let mut r = rng(2);
    let one = ChaosElement::constant(&b, 1.0);
    for _ in 0..20 {
        let [f, g, h] = [0, 1, 2].map(|_| random_element(&b, 2, 8, &mut r));
        assert_eq!(f.wick(&one).unwrap(), f);
        let fg = f.wick(&g).unwrap();
        assert!(fg.sub(&g.wick(&f).unwrap()).unwrap().max_abs_coeff() <= 1e-10);
        let left = fg.wick(&h).unwrap();
        let right = f.wick(&g.wick(&h).unwrap()).unwrap();
        assert!(left.sub(&right).unwrap().max_abs_coeff() <= 1e-10);
        let dist = f.wick(&g.add(&h).unwrap()).unwrap();
        let sum = fg.add(&f.wick(&h).unwrap()).unwrap();
        assert!(dist.sub(&sum).unwrap().max_abs_coeff() <= 1e-14);
    }
}

#[test]
fn s_transform_is_linear_and_normalized() {
    let b = small_basis(4);
    let mut r = rng(3);
    let probes = probe_set(&b, 10, 0.5, 4).unwrap();
    for eta in &probes {
        assert_eq!(ChaosElement::constant(&b, 1.0).s_transform(eta).unwrap(), 1.0);
        let f = random_element(&b, 3, 10, &mut r);
        let g = random_element(&b, 3, 10, &mut r);
        let lhs = f.scale(2.5).axpy(-0.75, &g).unwrap().s_transform(eta).unwrap();
        let rhs = 2.5 * f.s_transform(eta).unwrap() - 0.75 * g.s_transform(eta).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12);
    }
}

#[test]
fn first_chaos_pairs_with_the_test_function() {
    let b = small_basis(4);
    let mut r = rng(5);
    let fv: Vec<f64> = (0..b.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
    let gv: Vec<f64> = (0..b.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
    let f = ChaosElement::from_kernel(&b, &fv).unwrap();
    let g = ChaosElement::from_kernel(&b, &gv).unwrap();
    for eta in probe_set(&b, 10, 0.9, 6).unwrap() {
        let v = eta.values();
        // ⟨f, η⟩_π as a plain sum over cells and marks
        let pair = |x: &[f64]| (0..b.dim()).map(|k| x[k] * v[k] * b.weight(k)).sum::<f64>();
        assert!((f.s_transform(&eta).unwrap() - pair(&fv)).abs() <= 1e-12);
        let fg = f.wick(&g).unwrap();
        assert!(fg.terms().iter().all(|(a, _)| a.order() == 2));
        assert!((fg.s_transform(&eta).unwrap() - pair(&fv) * pair(&gv)).abs() <= 1e-12);
    }
}

#[test]
fn inadmissible_test_functions_are_rejected() {
    let b = small_basis(2);
    let mut c = vec![0.0; b.dim()];
    c[3] = 1.25;
    let eta = TestFunction::from_coeffs(&b, c).unwrap();
    let err = ChaosElement::constant(&b, 1.0).s_transform(&eta).unwrap_err();
    assert!(matches!(err, Error::Inadmissible { gauge } if gauge == 1.25));
    assert!(err.to_string().contains("1.25"));
}

#[test]
fn truncation_is_flagged_and_sticky() {
    let b = small_basis(2);
    let x = ChaosElement::first_chaos(&b, &vec![0.5; b.dim()]).unwrap();
    let x3 = x.wick(&x).unwrap().wick(&x).unwrap();
    assert!(x3.overflow() && x3.dropped_mass() > 0.0);
    let later = x3.add(&ChaosElement::constant(&b, 1.0)).unwrap().scale(2.0);
    assert!(later.overflow());
    assert!(x.wick(&x).unwrap().overflow() == false);
}

#[test]
fn composing_across_bases_fails() {
    let a = small_basis(3);
    let b = small_basis(4);
    let f = ChaosElement::constant(&a, 1.0);
    let g = ChaosElement::constant(&b, 1.0);
    assert!(matches!(f.wick(&g), Err(Error::BasisMismatch)));
}

fn fine_basis() -> std::sync::Arc<Basis> {
    let g = TimeGrid::new(-2.0, 2.0, 400).unwrap();
    let marks = vec![Atom { size: 1.0, mass: 0.5 }, Atom { size: -2.0, mass: 0.25 }, Atom { size: 0.3, mass: 2.0 }];
    Basis::new(g, marks, 2).unwrap()
}

fn smooth_eta(b: &std::sync::Arc<Basis>) -> TestFunction {
    let g = b.grid();
    let vals: Vec<f64> = (0..b.dim())
        .map(|k| {
            let (i, j) = b.cell_mark(k);
            let s = g.center(i);
            0.2 * (-(s - 0.3) * (s - 0.3)).exp() * (1.0 + j as f64) * (3.0 * s).cos()
        })
        .collect();
    TestFunction::from_values(b, &vals).unwrap()
}

#[test]
fn process_element_matches_the_double_integral() {
    let b = fine_basis();
    let g = *b.grid();
    let eta = smooth_eta(&b);
    let v = eta.values();
    for beta in [0.1, 0.25, 0.4] {
        for t in [0.5, 1.0, 1.7] {
            let x = fractional_levy_element(beta, t, &b).unwrap();
            let img = rl_fractional_integral(&GridFunction::indicator(g, 0.0, t), beta, Side::Minus).unwrap();
            let mut direct = 0.0;
            for i in 0..g.n_cells() {
                for (j, m) in b.marks().iter().enumerate() {
                    direct += img.values()[i] * m.size * v[b.index(i, j)] * m.mass * g.step();
                }
            }
            let s = x.s_transform(&eta).unwrap();
            assert!((s - direct).abs() <= 1e-8, "{beta} {t}: {s} vs {direct}");
        }
    }
}

#[test]
fn noise_element_matches_the_right_sided_integral() {
    let b = fine_basis();
    let g = *b.grid();
    let eta = smooth_eta(&b);
    let v = eta.values();
    for beta in [0.1, 0.25, 0.4] {
        for t in [0.0, 0.51234, 1.3] {
            let s = noise_element(beta, t, &b).unwrap().s_transform(&eta).unwrap();
            // ∫ y (I^β_+ η(·,y))(t) ν(dy), cell by cell by quadrature
            let mut q = 0.0;
            for i in 0..g.n_cells() {
                let (a, c) = g.cell(i);
                if a >= t {
                    break;
                }
                // mirrored: ∫_a^{min(c,t)} (t-s)^{β-1} ds = ∫_{-min(c,t)}^{-a} (s'+t)^{β-1} ds'
                let (lo, hi) = (-c.min(t), -a);
                let cell = if c >= t {
                    // u = lo sits on the singularity: let the oracle treat it as interior
                    let ind = |s: f64| if s >= lo { 1.0 } else { 0.0 };
                    oracle::rl_minus_at(&ind, lo - 0.5, hi, beta, -t)
                } else {
                    oracle::rl_minus_at(&|_| 1.0, lo, hi, beta, -t)
                };
                for (j, m) in b.marks().iter().enumerate() {
                    q += m.size * m.mass * v[b.index(i, j)] * cell;
                }
            }
            assert!((s - q).abs() <= 1e-6, "{beta} {t}: {s} vs {q}");
        }
    }
}

#[test]
fn noise_integrates_to_the_process() {
    let beta = 0.25;
    let mut errs = Vec::new();
    for n in [200, 800] {
        let g = TimeGrid::new(-1.0, 1.0, n).unwrap();
        let b = Basis::new(g, vec![Atom { size: 1.0, mass: 1.0 }], 1).unwrap();
        let mut sum = ChaosElement::zero(&b);
        for i in 0..n {
            let c = g.center(i);
            if c > 0.0 && c < 1.0 {
                sum = sum.axpy(g.step(), &noise_element(beta, c, &b).unwrap()).unwrap();
            }
        }
        let x = fractional_levy_element(beta, 1.0, &b).unwrap();
        let rel = sum.sub(&x).unwrap().l2_norm() / x.l2_norm();
        errs.push(rel);
        let c = noise_element(beta, 0.3, &b).unwrap().first_chaos_coeffs();
        let first_after = g.cell_of(0.3).unwrap() + 1;
        assert!(c[first_after..].iter().all(|&x| x == 0.0));
    }
    assert!(errs[0] < 0.05 && errs[1] < 0.6 * errs[0], "{errs:?}");
}

#[test]
fn noise_kernel_is_separable_in_the_mark() {
    let g = TimeGrid::new(-1.0, 1.0, 16).unwrap();
    let one = Basis::new(g, vec![Atom { size: 1.0, mass: 1.0 }], 1).unwrap();
    let three = Basis::new(g, vec![Atom { size: 2.0, mass: 0.5 }, Atom { size: -1.0, mass: 3.0 }, Atom { size: 0.1, mass: 1.0 }], 1).unwrap();
    let base = noise_element(0.3, 0.4, &one).unwrap().first_chaos_coeffs();
    let c = noise_element(0.3, 0.4, &three).unwrap().first_chaos_coeffs();
    for k in 0..three.dim() {
        let (i, j) = three.cell_mark(k);
        let m = three.marks()[j];
        // coefficient / (y √w) is the kernel cell average on cell i
        let kernel = c[k] / (m.size * three.sqrt_weight(k)) * three.grid().step();
        let reference = base[i] / one.sqrt_weight(i) * one.grid().step();
        assert!((kernel - reference).abs() <= 1e-14 * reference.abs().max(1.0));
    }
}

#[test]
fn wick_exponential() {
    let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
    let b = Basis::new(g, vec![Atom { size: 1.0, mass: 0.75 }, Atom { size: -0.5, mass: 1.5 }], 8).unwrap();
    let mut r = rng(9);
    assert_eq!(wick_exp(&ChaosElement::zero(&b)).unwrap(), ChaosElement::constant(&b, 1.0));
    let c: Vec<f64> = (0..b.dim()).map(|_| r.random_range(-0.1..0.1)).collect();
    let f = ChaosElement::first_chaos(&b, &c).unwrap().add(&ChaosElement::constant(&b, 0.3)).unwrap();
    let e = wick_exp(&f).unwrap();
    let e_neg = wick_exp(&f.scale(-1.0)).unwrap();
    for eta in probe_set(&b, 10, 0.9, 10).unwrap() {
        let s = e.s_transform(&eta).unwrap();
        assert!((s - f.s_transform(&eta).unwrap().exp()).abs() <= 1e-8);
    }
    let prod = e.without_overflow().wick(&e_neg.without_overflow()).unwrap();
    let one = ChaosElement::constant(&b, 1.0);
    for eta in probe_set(&b, 10, 0.9, 11).unwrap() {
        assert!((prod.s_transform(&eta).unwrap() - 1.0).abs() <= 1e-8);
    }
    assert!((prod.constant_term() - one.constant_term()).abs() <= 1e-14);
}

#[test]
fn grid_proxy_norm_properties() {
    let b = small_basis(4);
    let mut r = rng(12);
    let f = random_element(&b, 3, 15, &mut r);
    assert_eq!(distribution_norm(&ChaosElement::zero(&b), 2.0, NormMode::GridProxy).unwrap().value, 0.0);
    let n = distribution_norm(&f, 2.0, NormMode::GridProxy).unwrap().value;
    let n3 = distribution_norm(&f.scale(-3.0), 2.0, NormMode::GridProxy).unwrap().value;
    assert!((n3 - 3.0 * n).abs() <= 1e-12 * n3);
    assert!(distribution_norm(&f, 3.0, NormMode::GridProxy).unwrap().value < n);
    assert!(distribution_norm(&f, 1.0, NormMode::GridProxy).is_err());
}

#[test]
fn hermite_norm_of_the_noise() {
    let g = TimeGrid::new(-30.0, 2.0, 8_000).unwrap();
    let b = Basis::new(g, vec![Atom { size: 1.0, mass: 1.0 }, Atom { size: -1.0, mass: 1.0 }], 1).unwrap();
    let x = noise_element(0.25, 1.0, &b).unwrap();
    let mode = NormMode::HermiteFirstChaos { n_h: 256 };
    let r2 = distribution_norm(&x, 2.0, mode).unwrap();
    assert!(r2.relative_tail < 0.01, "{}", r2.relative_tail);
    let r3 = distribution_norm(&x, 3.0, mode).unwrap();
    assert!(r3.value < r2.value);
    let r2_64 = distribution_norm(&x, 2.0, NormMode::HermiteFirstChaos { n_h: 64 }).unwrap();
    assert!(r2_64.value <= r2.value && (r2.value - r2_64.value) < 0.01 * r2.value);
    let s = distribution_norm(&x.scale(2.0), 2.0, mode).unwrap();
    assert!((s.value - 2.0 * r2.value).abs() <= 1e-12 * s.value);
    let mut c = vec![0.0; b.dim()];
    c[b.dim() - 1] = 1.0; // kernel y·k(u) breaks: only one mark is hit
    let lopsided = ChaosElement::first_chaos(&b, &c).unwrap();
    assert!(distribution_norm(&lopsided, 2.0, mode).is_err());
}

#[test]
fn hermite_coefficients_match_quadrature() {
    for beta in [0.1, 0.25, 0.4] {
        let c = rl_kernel_coefficients(0.7, beta, 24);
        for n in [0u32, 1, 2, 7, 15, 23] {
            let o = oracle::rl_hermite_coefficient(0.7, beta, n);
            assert!((c[n as usize] - o).abs() < 1e-9, "{beta} {n}: {} vs {o}", c[n as usize]);
        }
    }
}

#[test]
fn text_round_trip() {
    let b = small_basis(6);
    let mut r = rng(13);
    let f = random_element(&b, 3, 30, &mut r);
    assert_eq!(from_text(&b, &to_text(&f)).unwrap(), f);
    let mut o = f.wick(&f).unwrap().wick(&f).unwrap();
    o = o.scale(1.0 / 3.0);
    let back = from_text(&b, &to_text(&o)).unwrap();
    assert_eq!(back, o);
    assert!(back.overflow() == o.overflow());
    assert_eq!(to_text(&ChaosElement::zero(&b)).lines().count(), 3);
    let one = from_text(&b, &to_text(&ChaosElement::constant(&b, 2.0))).unwrap();
    assert_eq!(one.coeff(&MultiIndex::zero()), 2.0);
    assert!(max_gap(&[0.0], &[0.0]) == 0.0);
}
