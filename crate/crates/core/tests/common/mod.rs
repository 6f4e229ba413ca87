#![allow(dead_code)]

use std::sync::Arc;

use fraclevy::chaos::{Basis, ChaosElement, MultiIndex};
use fraclevy::levy::Atom;
use fraclevy::TimeGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 8 cells on [-1, 1] with two marks.
pub fn small_basis(order: usize) -> Arc<Basis> {
    let g = TimeGrid::new(-1.0, 1.0, 8).unwrap();
    let marks = vec![Atom { size: 1.0, mass: 0.75 }, Atom { size: -0.5, mass: 1.5 }];
    Basis::new(g, marks, order).unwrap()
}

/// `terms` random terms of order at most `max_order`, coefficients in [-1, 1].
pub fn random_element(basis: &Arc<Basis>, max_order: usize, terms: usize, rng: &mut ChaCha8Rng) -> ChaosElement {
    let dim = basis.dim();
    let t: Vec<(MultiIndex, f64)> = (0..terms)
        .map(|_| {
            let ord = rng.random_range(0..=max_order);
            let idx = MultiIndex::from_pairs((0..ord).map(|_| (rng.random_range(0..dim), 1)));
            (idx, rng.random_range(-1.0..1.0))
        })
        .collect();
    ChaosElement::from_terms(basis, t).unwrap()
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
