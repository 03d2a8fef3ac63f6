mod common;

use common::dist_from_weights;
use dynjsq_core::equilibrium::{
    equilibrium_point, mean_response_time, optimal_lower_bound, phase_transition_bounds,
    phi_convexity_bound_check, small_ctmc_stationary,
};
use dynjsq_core::fluid::fluid_rhs;
use dynjsq_core::{DegreeDistribution, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dist(rng: &mut ChaCha8Rng) -> DegreeDistribution {
    let len = rng.random_range(1..=6);
    let mut w: Vec<u32> = (0..len).map(|_| rng.random_range(0..10)).collect();
    if w.iter().all(|&x| x == 0) {
        w[len - 1] = 1;
    }
    let p_inf = if rng.random_bool(0.3) {
        rng.random_range(0.0..0.5)
    } else {
        0.0
    };
    dist_from_weights(&w, p_inf)
}

fn close_or_below(a: f64, b: f64) -> bool {
    a <= b * (1.0 + 1e-9) + 1e-300
}

#[test]
fn first_level_is_exactly_lambda() {
    for lambda in [0.1, 0.5, 0.9, 0.95, 0.999] {
        for dist in [
            DegreeDistribution::point_mass(0),
            DegreeDistribution::point_mass(2),
            DegreeDistribution::new([(1, 0.3), (4, 0.7)], 0.0).unwrap(),
        ] {
            assert_eq!(equilibrium_point(lambda, &dist).unwrap().get(1), lambda);
        }
    }
}

#[test]
fn sandwiched_between_phase_transition_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let dist = random_dist(&mut rng);
        let lambda = rng.random_range(0.05..0.99);
        let eq = equilibrium_point(lambda, &dist).unwrap();
        for i in 2..=8 {
            let (lo, hi) = phase_transition_bounds(lambda, &dist, i).unwrap();
            let q = eq.get(i);
            if q == 0.0 {
                // below the storage floor
                assert!(lo < 1e-14, "{dist:?} i = {i}");
                continue;
            }
            assert!(
                close_or_below(lo, q),
                "{dist:?} λ={lambda} i={i}: {lo} > {q}"
            );
            assert!(
                close_or_below(q, hi),
                "{dist:?} λ={lambda} i={i}: {q} > {hi}"
            );
        }
    }
}

#[test]
fn bounds_reject_bad_input() {
    assert!(matches!(
        phase_transition_bounds(0.5, &DegreeDistribution::point_mass(1), 1),
        Err(Error::IndexOutOfRange { .. })
    ));
    assert_eq!(
        phase_transition_bounds(0.5, &DegreeDistribution::degenerate(), 2),
        Err(Error::NoFiniteSupport)
    );
}

#[test]
fn point_mass_attains_lower_bound() {
    for d in 0..=4u32 {
        for lambda in [0.3, 0.7, 0.9] {
            let eq = equilibrium_point(lambda, &DegreeDistribution::point_mass(d)).unwrap();
            for i in 1..=5 {
                let bound = optimal_lower_bound(lambda, f64::from(d), i);
                let q = eq.get(i);
                if bound < 1e-14 {
                    continue;
                }
                assert!(
                    (q - bound).abs() <= 1e-12 * bound.max(1e-300) + 1e-15,
                    "d={d} i={i}"
                );
            }
        }
    }
}

#[test]
fn point_mass_beats_spread_with_same_mean() {
    let lambda = 0.9;
    for d in 1..=4u32 {
        let point = equilibrium_point(lambda, &DegreeDistribution::point_mass(d)).unwrap();
        for spread in 1..=d {
            let two = DegreeDistribution::new([(d - spread, 0.5), (d + spread, 0.5)], 0.0).unwrap();
            let eq = equilibrium_point(lambda, &two).unwrap();
            for i in 1..=6 {
                assert!(
                    point.get(i) <= eq.get(i) + 1e-15,
                    "d={d} spread={spread} i={i}"
                );
            }
            assert!(mean_response_time(&point) <= mean_response_time(&eq));
        }
    }
}

proptest! {
    #[test]
    fn lower_bound_holds_for_any_mean(
        w in proptest::collection::vec(0u32..10, 1..7).prop_filter("mass", |w| w.iter().any(|&x| x > 0)),
        lambda in 0.05f64..0.99,
    ) {
        let dist = dist_from_weights(&w, 0.0);
        let eq = equilibrium_point(lambda, &dist).unwrap();
        for i in 1..=8 {
            let bound = optimal_lower_bound(lambda, dist.mean(), i);
            prop_assert!(bound <= 1e-14 || close_or_below(bound, eq.get(i)));
            prop_assert!(eq.get(i) <= lambda.powi(i as i32) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn convexity_chain(
        w in proptest::collection::vec(0u32..10, 1..7).prop_filter("mass", |w| w.iter().any(|&x| x > 0)),
        c in 0.0f64..=1.0,
    ) {
        let dist = dist_from_weights(&w, 0.0);
        let b = phi_convexity_bound_check(c, &dist, dist.mean());
        prop_assert!(b.phi >= b.piecewise - 1e-12);
        prop_assert!(b.piecewise >= b.power - 1e-12);
    }
}

#[test]
fn fixed_point_of_fluid_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let dist = random_dist(&mut rng);
        let lambda = rng.random_range(0.05..0.95);
        let eq = equilibrium_point(lambda, &dist).unwrap();
        let rhs = fluid_rhs(eq.values(), lambda, &dist);
        let worst = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(worst < 1e-12, "{dist:?} λ={lambda}: {worst}");
    }
}

#[test]
fn ctmc_single_server_is_geometric() {
    let q = small_ctmc_stationary(1, 0.5, 60).unwrap();
    for i in 1..=6 {
        assert!((q.get(i) - 0.5f64.powi(i as i32)).abs() < 1e-9, "i = {i}");
    }
}

#[test]
fn ctmc_rejects_large_systems() {
    assert!(matches!(
        small_ctmc_stationary(3, 2.7, 40),
        Err(Error::StateSpaceTooLarge { .. })
    ));
    assert!(matches!(
        small_ctmc_stationary(1, 0.9, 5),
        Err(Error::CapTooSmall { .. })
    ));
}
