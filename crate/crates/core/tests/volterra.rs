mod common;

use std::sync::Arc;

use common::{max_gap, rng};
use fraclevy::chaos::{Basis, ChaosElement, TestFunction};
use fraclevy::levy::Atom;
use fraclevy::probe::probe_set;
use fraclevy::volterra::{
    constant_terms, resolvent_kernel, resolvent_residual, solve_volterra, triangle_sup, Backend, KernelPreset,
    Triangle, VolterraProblem, VolterraSolution,
};
use fraclevy::{Error, TimeGrid};
use rand::Rng;

fn basis(order: usize) -> Arc<Basis> {
    let g = TimeGrid::new(0.0, 1.0, 8).unwrap();
    Basis::new(g, vec![Atom { size: 1.0, mass: 1.0 }], order).unwrap()
}

fn s_values(sol: &VolterraSolution, probes: &[TestFunction]) -> Vec<f64> {
    sol.s_table(probes).unwrap().into_iter().map(|r| r.2).collect()
}

#[test]
fn scalar_resolvent_of_a_constant_kernel() {
    let k = Triangle::from_fn(1000, 1e-3, |_, _| 1.0f64);
    let h = resolvent_kernel(&k, 20).unwrap();
    let v = *h.kernel.get(1000, 0);
    assert!((v - std::f64::consts::E).abs() < 1e-4, "{v}");
    assert!(h.last_term_norm() < 1e-15);
    let half = *h.kernel.get(1000, 500);
    assert!((half - 0.5f64.exp()).abs() < 1e-4);

    let zero = Triangle::from_fn(50, 0.02, |_, _| 0.0f64);
    assert_eq!(triangle_sup(&resolvent_kernel(&zero, 20).unwrap().kernel), 0.0);
}

#[test]
fn resolvent_identity_holds_for_a_noisy_kernel() {
    let b = basis(4);
    let one = ChaosElement::constant(&b, 1.0);
    let p = VolterraProblem::with_constant_forcing(
        &one,
        0.25,
        1.0,
        16,
        KernelPreset::Exponential { scale: 0.5, rate: -1.0 },
        KernelPreset::Constant { value: 0.3 },
    )
    .unwrap();
    let k = p.kernel_triangle().unwrap();
    let h = resolvent_kernel(&k, 30).unwrap();
    let r = resolvent_residual(&k, &h.kernel).unwrap();
    let probes = probe_set(&b, 10, 0.5, 40).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=16 {
        for j in 0..=i {
            for eta in &probes {
                worst = worst.max(r.get(i, j).s_transform(eta).unwrap().abs());
            }
        }
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn growing_kernel_is_reported_as_divergent() {
    let k = Triangle::from_fn(40, 1.0, |_, _| 3.0f64);
    assert!(matches!(resolvent_kernel(&k, 40), Err(Error::Divergence(_))));
}

#[test]
fn deterministic_problem_gives_the_exponential() {
    let b = basis(3);
    let one = ChaosElement::constant(&b, 1.0);
    let p = VolterraProblem::with_constant_forcing(
        &one,
        0.25,
        1.0,
        1000,
        KernelPreset::Constant { value: 1.0 },
        KernelPreset::Zero,
    )
    .unwrap();
    let sol = solve_volterra(&p, &Backend::ChaosPicard, 1e-13, 200).unwrap();
    let c = sol.as_chaos().unwrap();
    let u1 = constant_terms(&c.values)[1000];
    assert!((u1 - std::f64::consts::E).abs() < 1e-4, "{u1}");
    assert!(c.values.iter().all(|u| u.terms().iter().all(|(a, v)| a.is_zero() || v.abs() <= 1e-12)));
    assert!(c.certified);
}

#[test]
fn zero_kernels_return_the_forcing() {
    let b = basis(3);
    let mut r = rng(41);
    let forcing: Vec<ChaosElement> = (0..=8)
        .map(|_| {
            let c: Vec<f64> = (0..b.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
            ChaosElement::first_chaos(&b, &c).unwrap()
        })
        .collect();
    let p = VolterraProblem::new(&b, 0.3, 1.0, 8, forcing.clone(), KernelPreset::Zero, KernelPreset::Zero).unwrap();
    for backend in [Backend::ChaosPicard, Backend::ChaosResolvent] {
        let sol = solve_volterra(&p, &backend, 1e-12, 10).unwrap();
        assert_eq!(sol.as_chaos().unwrap().values, forcing, "{}", backend.name());
    }
}

fn check_backends(p: &VolterraProblem, probes: &[TestFunction]) {
    let coll = s_values(&solve_volterra(p, &Backend::SCollocation(probes.to_vec()), 1e-13, 200).unwrap(), probes);
    for backend in [Backend::ChaosPicard, Backend::ChaosResolvent] {
        let sol = solve_volterra(p, &backend, 1e-13, 200).unwrap();
        let c = sol.as_chaos().unwrap();
        assert!(c.certified, "{}: bound {}", backend.name(), c.residual_bound);
        let gap = max_gap(&s_values(&sol, probes), &coll);
        assert!(gap <= 1e-6, "{}: {gap}", backend.name());
    }
}

#[test]
fn multiplicative_noise_backends_agree() {
    let b = basis(6);
    let probes = probe_set(&b, 10, 0.5, 42).unwrap();
    let one = ChaosElement::constant(&b, 1.0);
    let p = VolterraProblem::with_constant_forcing(&one, 0.25, 1.0, 32, KernelPreset::Zero, KernelPreset::Constant { value: 0.5 })
        .unwrap();
    check_backends(&p, &probes);
}

#[test]
fn random_problems_backends_agree() {
    let b = basis(6);
    let probes = probe_set(&b, 10, 0.5, 43).unwrap();
    let mut r = rng(44);
    let c: Vec<f64> = (0..b.dim()).map(|_| r.random_range(-0.2..0.2)).collect();
    let a = ChaosElement::first_chaos(&b, &c).unwrap().add(&ChaosElement::constant(&b, 1.0)).unwrap();
    let forcing: Vec<ChaosElement> = (0..=32).map(|n| a.scale(1.0 + 0.5 * (n as f64 / 32.0))).collect();
    let p = VolterraProblem::new(
        &b,
        0.35,
        1.0,
        32,
        forcing,
        KernelPreset::Exponential { scale: r.random_range(-1.0..1.0), rate: -0.5 },
        KernelPreset::Polynomial { coeffs: vec![r.random_range(-0.4..0.4), 0.2] },
    )
    .unwrap();
    check_backends(&p, &probes);
}

#[test]
fn too_few_iterations_is_a_non_convergence_error() {
    let b = basis(3);
    let one = ChaosElement::constant(&b, 1.0);
    let p = VolterraProblem::with_constant_forcing(&one, 0.25, 1.0, 16, KernelPreset::Constant { value: 1.0 }, KernelPreset::Zero)
        .unwrap();
    let err = solve_volterra(&p, &Backend::ChaosPicard, 1e-14, 3).unwrap_err();
    assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }), "{err}");
}

#[test]
fn gauge_bound_is_checked() {
    let b = basis(3);
    let one = ChaosElement::constant(&b, 1.0);
    let p = VolterraProblem::with_constant_forcing(&one, 0.25, 1.0, 8, KernelPreset::Constant { value: 1.0 }, KernelPreset::Constant { value: 1.0 })
        .unwrap();
    assert!(p.clone().with_kernel_bound(1e3).gauge_ok().unwrap());
    let tight = p.with_kernel_bound(0.5);
    assert!(!tight.gauge_ok().unwrap());
    // still solved, with divergence monitoring
    assert!(solve_volterra(&tight, &Backend::ChaosPicard, 1e-12, 100).is_ok());
}

#[test]
fn problems_outside_the_basis_grid_are_rejected() {
    let b = basis(2);
    let one = ChaosElement::constant(&b, 1.0);
    assert!(VolterraProblem::with_constant_forcing(&one, 0.25, 2.0, 8, KernelPreset::Zero, KernelPreset::Zero).is_err());
    assert!(VolterraProblem::with_constant_forcing(&one, 0.55, 1.0, 8, KernelPreset::Zero, KernelPreset::Zero).is_err());
}
