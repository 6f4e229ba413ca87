use fraclevy::levy::LevyModel;
use fraclevy::paths::{
    empirical_moments, path_at_edges, sample_moments, simulate_flp_paths, transform_alpha_to_beta, FlpSimulator,
    PathSet, SimulationLayout, TailExtension,
};
use fraclevy::{Error, TimeGrid};
use fraclevy_oracle as oracle;

fn two_point() -> fraclevy::levy::JumpSource {
    LevyModel::two_point(2.0, 1.0).unwrap().exact_source().unwrap()
}

fn column_at(paths: &PathSet, t: f64) -> Vec<f64> {
    let k = paths.times.iter().position(|&s| (s - t).abs() < 1e-9).unwrap();
    paths.column(k)
}

#[test]
fn variance_and_covariance_match_quadrature() {
    let grid = TimeGrid::new(-1.0, 2.0, 300).unwrap();
    let beta = 0.25;
    let paths = simulate_flp_paths(&two_point(), beta, grid, 20_000, 11).unwrap();
    let rows = empirical_moments(&paths, &[0.0, 0.5, 1.0, 2.0]).unwrap();
    assert_eq!((rows[0].mean, rows[0].var), (0.0, 0.0));
    let m2 = 2.0;
    for r in &rows[1..] {
        let target = m2 * oracle::indicator_image_l2_sq(r.t, beta);
        assert!((r.var - target).abs() < 3.0 * r.stderr_var, "t={}: {} vs {target} ± {}", r.t, r.var, r.stderr_var);
        assert!(r.mean.abs() < 3.0 * r.stderr_mean);
    }
    // variance / t^{2β+1} is flat
    let ratios: Vec<f64> = rows[1..].iter().map(|r| r.var / r.t.powf(2.0 * beta + 1.0)).collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!((hi - lo) / lo <= 0.10, "{ratios:?}");

    let (xs, xt) = (column_at(&paths, 0.5), column_at(&paths, 1.0));
    let prod: Vec<f64> = xs.iter().zip(&xt).map(|(a, b)| a * b).collect();
    let cov = sample_moments(0.0, &prod).unwrap();
    let target = m2 * oracle::ma_covariance(0.5, 1.0, beta);
    assert!((cov.mean - target).abs() < 3.0 * cov.stderr_mean, "{} vs {target}", cov.mean);
}

#[test]
fn simulation_is_deterministic_and_starts_at_zero() {
    let grid = TimeGrid::new(-1.0, 1.0, 64).unwrap();
    let a = simulate_flp_paths(&two_point(), 0.3, grid, 50, 5).unwrap();
    let b = simulate_flp_paths(&two_point(), 0.3, grid, 50, 5).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.times[0], 0.0);
    assert!((0..50).all(|p| a.path(p)[0] == 0.0));
    assert_ne!(a.values, simulate_flp_paths(&two_point(), 0.3, grid, 50, 6).unwrap().values);
}

#[test]
fn standard_error_scales_with_path_count() {
    let grid = TimeGrid::new(-1.0, 1.0, 32).unwrap();
    let small = simulate_flp_paths(&two_point(), 0.25, grid, 4_000, 1).unwrap();
    let large = simulate_flp_paths(&two_point(), 0.25, grid, 16_000, 1).unwrap();
    let s = empirical_moments(&small, &[1.0]).unwrap()[0].stderr_mean;
    let l = empirical_moments(&large, &[1.0]).unwrap()[0].stderr_mean;
    assert!((s / l - 2.0).abs() < 0.15, "{}", s / l);
}

#[test]
fn short_past_without_tail_violates_the_budget() {
    let grid = TimeGrid::new(-1.0, 1.0, 20).unwrap();
    let layout = SimulationLayout::new(grid, None).unwrap();
    let err = FlpSimulator::new(two_point(), 0.25, layout, None, 0.01).unwrap_err();
    let Error::TruncationBudget { required_t_min, .. } = err else {
        panic!("{err}")
    };
    assert!(required_t_min < -100.0);
    let tail = SimulationLayout::new(grid, Some(TailExtension::default())).unwrap();
    let sim = FlpSimulator::new(two_point(), 0.25, tail, None, 0.01).unwrap();
    assert!(sim.truncation().relative_deficit < 1e-3);
}

#[test]
fn alpha_route_reproduces_the_beta_path() {
    let grid = TimeGrid::with_step(-1.0, 1.0, 1e-3).unwrap();
    let layout = SimulationLayout::new(grid, Some(TailExtension::default())).unwrap();
    let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
    let sim = FlpSimulator::new(two_point(), 0.3, layout.clone(), Some(times.clone()), 0.01).unwrap();
    for path in 0..3 {
        let dx = sim.increments(9, path);
        let direct = sim.evaluate(&dx);
        let xa = path_at_edges(&layout, &dx, 0.1).unwrap();
        let via = transform_alpha_to_beta(&layout, &xa, 0.1, 0.3, &times).unwrap();
        let sup = direct.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let gap = direct.iter().zip(&via).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap <= 5e-2 * sup, "path {path}: {gap} vs {sup}");
    }
    let zero = vec![0.0; layout.edges().len()];
    assert!(transform_alpha_to_beta(&layout, &zero, 0.1, 0.3, &times).unwrap().iter().all(|&v| v == 0.0));
    assert!(transform_alpha_to_beta(&layout, &zero, 0.3, 0.3, &times).is_err());
}

#[test]
fn moments_of_constant_paths() {
    let zeros = vec![0.0; 10];
    let m = sample_moments(1.0, &zeros).unwrap();
    assert_eq!((m.mean, m.var, m.stderr_mean), (0.0, 0.0, 0.0));
    assert!(sample_moments(1.0, &[1.0]).is_err());
}
