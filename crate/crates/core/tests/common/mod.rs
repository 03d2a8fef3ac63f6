#![allow(dead_code)]

use dynjsq_core::{DegreeDistribution, OccupancyState};
use proptest::prelude::*;

/// Distribution with finite support in `0..=max_degree` from integer weights.
pub fn dist_from_weights(weights: &[u32], mass_at_infinity: f64) -> DegreeDistribution {
    let total: u32 = weights.iter().sum();
    let finite = 1.0 - mass_at_infinity;
    let mut masses: Vec<(u32, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0)
        .map(|(d, &w)| (d as u32, finite * f64::from(w) / f64::from(total)))
        .collect();
    // absorb rounding so the total is one to the last bit we can control
    let sum: f64 = masses.iter().map(|&(_, p)| p).sum::<f64>() + mass_at_infinity;
    masses.last_mut().unwrap().1 += 1.0 - sum;
    DegreeDistribution::new(masses, mass_at_infinity).unwrap()
}

pub fn finite_dist() -> impl Strategy<Value = DegreeDistribution> {
    proptest::collection::vec(0u32..10, 9)
        .prop_filter("some mass", |w| w.iter().any(|&x| x > 0))
        .prop_map(|w| dist_from_weights(&w, 0.0))
}

/// Nonincreasing sequence in `[0, 1)` of the given length, after `q(0) = 1`.
pub fn ordered_tail(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, len).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

pub fn state(tail: &[f64]) -> OccupancyState {
    let mut v = vec![1.0];
    v.extend_from_slice(tail);
    OccupancyState::new(v).unwrap()
}
