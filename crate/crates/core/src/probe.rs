//! Seeded sets of admissible test functions ("probes").
//!
//! Equality in the distribution space is checked through S-transforms on a
//! small generic probe set. A probe has independent Gaussian coefficients
//! rescaled to a prescribed gauge, so the set is a pure function of
//! `(basis, count, gauge, seed)`.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

use crate::chaos::{Basis, TestFunction};
use crate::error::{invalid, Result};
use crate::rng::replicate_rng;

pub fn random_probe(basis: &Arc<Basis>, gauge: f64, seed: u64, index: u64) -> Result<TestFunction> {
    if !(gauge > 0.0 && gauge < 1.0) {
        return Err(invalid("gauge", format!("probe gauge must lie in (0, 1), got {gauge}")));
    }
    let mut rng = replicate_rng(seed, index);
    let mut c: Vec<f64> = (0..basis.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut c {
        *x *= gauge / norm;
    }
    TestFunction::from_coeffs(basis, c)
}

pub fn probe_set(basis: &Arc<Basis>, count: usize, gauge: f64, seed: u64) -> Result<Vec<TestFunction>> {
    (0..count as u64).map(|i| random_probe(basis, gauge, seed, i)).collect()
}
