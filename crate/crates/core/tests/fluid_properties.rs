mod common;

use common::{dist_from_weights, finite_dist, ordered_tail, state};
use dynjsq_core::fluid::{
    alpha_n, beta_n, dispatch_probability, fluid_rhs, FluidIntegrator, FluidSolution,
};
use dynjsq_core::{DegreeDistribution, OccupancyState};
use proptest::prelude::*;

/// `a_i` through the `m(q) = max{i : q(i) = 1}` case split.
fn dispatch_probability_by_cases(
    q: &[f64],
    i: usize,
    lambda: f64,
    dist: &DegreeDistribution,
) -> f64 {
    let get = |j: usize| q.get(j).copied().unwrap_or(0.0);
    let m = (0..q.len()).rev().find(|&j| q[j] == 1.0).unwrap();
    let p_inf = dist.mass_at_infinity();
    if i == 0 || i < m {
        1.0
    } else if i == m {
        1.0 - p_inf.min((1.0 - get(i + 1)) / lambda)
    } else {
        let qi = get(i);
        qi * dist.pgf(qi)
    }
}

fn dist_with_escape() -> impl Strategy<Value = DegreeDistribution> {
    (
        proptest::collection::vec(0u32..10, 6).prop_filter("mass", |w| w.iter().any(|&x| x > 0)),
        prop_oneof![Just(0.0), Just(1.0), 0.0f64..1.0],
    )
        .prop_map(|(w, p_inf)| {
            if p_inf == 1.0 {
                DegreeDistribution::degenerate()
            } else {
                dist_from_weights(&w, p_inf)
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn compact_and_case_split_forms_agree(
        ones in 0usize..4,
        tail in ordered_tail(5),
        lambda in 0.05f64..2.0,
        dist in dist_with_escape(),
    ) {
        let mut values = vec![1.0; ones + 1];
        values.extend(tail);
        let q = OccupancyState::new(values).unwrap();
        for i in 0..q.values().len() + 2 {
            let compact = dispatch_probability(&q, i, lambda, &dist);
            let cases = dispatch_probability_by_cases(q.values(), i, lambda, &dist);
            prop_assert!((compact - cases).abs() <= 1e-12, "i = {i}: {compact} vs {cases}");
        }
    }
}

fn integrate(
    q0: &OccupancyState,
    lambda: f64,
    dist: &DegreeDistribution,
    horizon: f64,
    h: f64,
    stride: usize,
) -> FluidSolution {
    FluidIntegrator::new(lambda, dist)
        .step(h)
        .record_stride(stride)
        .run(q0, horizon)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// Coordinatewise order of initial conditions persists.
    #[test]
    fn order_is_preserved(
        a in ordered_tail(6),
        b in ordered_tail(6),
        lambda in 0.1f64..0.99,
        dist in finite_dist(),
    ) {
        let low: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let high: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let lo = integrate(&state(&low), lambda, &dist, 10.0, 1e-3, 100);
        let hi = integrate(&state(&high), lambda, &dist, 10.0, 1e-3, 100);
        for (x, y) in lo.states.iter().zip(&hi.states) {
            let len = x.values().len().max(y.values().len());
            for i in 0..len {
                prop_assert!(x.get(i) <= y.get(i) + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// `‖x(t) − y(t)‖₁ <= ‖x(0) − y(0)‖₁ e^{3Lt}` with `L` the Lipschitz
    /// modulus of `x ↦ x φ(x)` on `[0, 1]`.
    #[test]
    fn continuous_in_initial_condition(
        base in ordered_tail(5),
        noise in proptest::collection::vec(-0.05f64..0.05, 5),
        lambda in 0.1f64..0.99,
        dist in finite_dist(),
    ) {
        let x0 = state(&base);
        let perturbed: Vec<f64> = std::iter::once(1.0)
            .chain(base.iter().zip(&noise).map(|(v, e)| v + e))
            .collect();
        let y0 = OccupancyState::projected(perturbed);
        let lipschitz = dist.pgf(1.0) + dist.pgf_derivative(1.0);
        let gap0 = x0.l1_distance(&y0);
        let xs = integrate(&x0, lambda, &dist, 5.0, 1e-3, 100);
        let ys = integrate(&y0, lambda, &dist, 5.0, 1e-3, 100);
        for ((t, x), y) in xs.times.iter().zip(&xs.states).zip(&ys.states) {
            let bound = gap0 * (3.0 * lipschitz * t).exp();
            prop_assert!(x.l1_distance(y) <= bound + 1e-12, "t = {t}");
        }
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let dist = DegreeDistribution::point_mass(2);
    let q0 = state(&[0.6, 0.2, 0.02]);
    let horizon = 2.0;
    let reference = integrate(&q0, 0.9, &dist, horizon, 0.1 / 64.0, usize::MAX);
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            integrate(&q0, 0.9, &dist, horizon, h, usize::MAX)
                .final_state()
                .l1_distance(reference.final_state())
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.5, "observed order {order}, errors {errors:?}");
    }
}

#[test]
fn trajectory_slope_matches_rhs() {
    let dist = DegreeDistribution::new([(1, 0.5), (3, 0.5)], 0.0).unwrap();
    let h = 1e-3;
    let sol = integrate(&state(&[0.5, 0.1]), 0.8, &dist, 1.0, h, 1);
    for k in [100, 400, 800] {
        let rhs = fluid_rhs(&sol.states[k], 0.8, &dist);
        for (i, slope) in rhs.iter().enumerate().skip(1) {
            let fd = (sol.states[k + 1].get(i) - sol.states[k - 1].get(i)) / (2.0 * h);
            assert!(
                (fd - slope).abs() < 1e-5,
                "t = {}, i = {i}: {fd} vs {slope}",
                sol.times[k]
            );
        }
    }
}

#[test]
fn alpha_matches_combinatorial_count() {
    fn binom(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    }
    for n in 1..=12u64 {
        for k in 0..=n {
            let x = k as f64 / n as f64;
            for d in 0..=n + 1 {
                let exact = binom(k, d) / binom(n, d);
                let got = alpha_n(n as usize, d as usize, x);
                if d > n {
                    assert_eq!(got, 0.0);
                } else {
                    assert!((got - exact).abs() < 1e-12, "n={n} k={k} d={d}");
                }
            }
        }
    }
}

#[test]
fn beta_approaches_limit_uniformly() {
    let dist = DegreeDistribution::point_mass(3);
    let errors: Vec<f64> = [100usize, 1_000, 10_000]
        .iter()
        .map(|&n| {
            (0..=100)
                .map(|k| {
                    let x = k as f64 / 100.0;
                    (beta_n(n, x, &dist) - x * dist.pgf(x)).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors[2] < 0.01, "{errors:?}");
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}
