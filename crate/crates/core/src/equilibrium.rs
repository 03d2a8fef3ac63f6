//! Equilibrium occupancy `q*`, mean response time and bounds on `q*`.
//!
//! Also hosts a dense exact solver for tiny systems (`n <= 3`), used to
//! validate the simulator.

use alloc::vec::Vec;

use crate::model::{powu, DegreeDistribution, OccupancyState};
use crate::{Error, Result};

pub const DEFAULT_FLOOR: f64 = 1e-14;
pub const DEFAULT_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    values: OccupancyState,
    lambda: f64,
}

impl EquilibriumPoint {
    pub fn values(&self) -> &OccupancyState {
        &self.values
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `q*(i)`, zero below the truncation floor.
    pub fn get(&self, i: usize) -> f64 {
        self.values.get(i)
    }
}

pub fn equilibrium_point(lambda: f64, dist: &DegreeDistribution) -> Result<EquilibriumPoint> {
    equilibrium_point_with(lambda, dist, DEFAULT_FLOOR, DEFAULT_CAP)
}

/// `q*(0) = 1`, `q*(1) = λ`, `q*(i) = λ q*(i−1) φ(q*(i−1))`, stopping once a
/// value drops below `floor` (that value is not stored) or `cap` levels exist.
pub fn equilibrium_point_with(
    lambda: f64,
    dist: &DegreeDistribution,
    floor: f64,
    cap: usize,
) -> Result<EquilibriumPoint> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::LoadOutOfRange { lambda });
    }
    let mut values = alloc::vec![1.0, lambda];
    while values.len() <= cap {
        let prev = values[values.len() - 1];
        let next = lambda * prev * dist.pgf(prev);
        if next < floor {
            break;
        }
        values.push(next);
    }
    Ok(EquilibriumPoint {
        values: OccupancyState::from_raw(values),
        lambda,
    })
}

/// `R = Σ_{i>=1} q*(i) / λ`.
pub fn mean_response_time(eq: &EquilibriumPoint) -> f64 {
    eq.values.tasks_per_server() / eq.lambda
}

/// Geometric (`m = 0`) or doubly exponential (`m > 0`) bounds on `q*(i)`,
/// `i >= 2`, where `m` is the smallest degree with positive mass.
pub fn phase_transition_bounds(
    lambda: f64,
    dist: &DegreeDistribution,
    i: usize,
) -> Result<(f64, f64)> {
    let m = dist.min_support().ok_or(Error::NoFiniteSupport)?;
    if i < 2 {
        return Err(Error::IndexOutOfRange { index: i, min: 2 });
    }
    let pm = dist.mass(m);
    let finite = 1.0 - dist.mass_at_infinity();
    if m == 0 {
        let k = (i - 1) as f64;
        Ok((
            lambda * libm::pow(lambda * pm, k),
            lambda * libm::pow(lambda * finite, k),
        ))
    } else {
        let m = f64::from(m);
        let growth = libm::pow(m + 1.0, (i - 1) as f64);
        let exponent = (growth - 1.0) / m;
        let base = libm::pow(lambda, growth);
        Ok((
            base * libm::pow(lambda * pm, exponent),
            base * libm::pow(lambda * finite, exponent),
        ))
    }
}

/// Lower bound on `q*(i)` over distributions with mean at most `d_mean` and
/// no mass at infinity; attained by the point mass at an integer `d_mean`.
pub fn optimal_lower_bound(lambda: f64, d_mean: f64, i: usize) -> f64 {
    if d_mean == 0.0 {
        libm::pow(lambda, i as f64)
    } else {
        let exponent = (libm::pow(d_mean + 1.0, i as f64) - 1.0) / d_mean;
        libm::pow(lambda, exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityBounds {
    pub phi: f64,
    /// Chord of `x ↦ c^x` between `⌊d⌋` and `⌊d⌋ + 1`, evaluated at `d`.
    pub piecewise: f64,
    pub power: f64,
}

/// The chain `φ(c) >= piecewise(d) >= c^d` for a distribution with mean at
/// most `d`; the caller asserts the ordering.
pub fn phi_convexity_bound_check(c: f64, dist: &DegreeDistribution, d: f64) -> ConvexityBounds {
    let fl = libm::floor(d);
    let frac = d - fl;
    let k = fl as u32;
    ConvexityBounds {
        phi: dist.pgf(c),
        piecewise: (1.0 - frac) * powu(c, k) + frac * powu(c, k + 1),
        power: libm::pow(c, d),
    }
}

/// Largest state space accepted by [`small_ctmc_stationary`].
pub const CTMC_STATE_LIMIT: usize = 2500;
/// Largest stationary mass allowed on states with a queue at the cap.
pub const CTMC_CAP_MASS: f64 = 1e-8;

/// Expected stationary occupancy of `n` servers with total arrival rate
/// `lambda_n`, every task joining a globally shortest queue (smallest index
/// on ties), queues truncated at `queue_cap` (arrivals finding every queue
/// at the cap are dropped).
pub fn small_ctmc_stationary(n: usize, lambda_n: f64, queue_cap: usize) -> Result<OccupancyState> {
    if n == 0 || n > 3 {
        return Err(Error::ConfigInvalid(alloc::format!(
            "n = {n}: only 1..=3 servers"
        )));
    }
    if !(lambda_n.is_finite() && lambda_n >= 0.0) {
        return Err(Error::ConfigInvalid(alloc::format!(
            "lambda_n = {lambda_n}"
        )));
    }
    let base = queue_cap + 1;
    let states = base.pow(n as u32);
    if states > CTMC_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: CTMC_STATE_LIMIT,
        });
    }
    let decode = |s: usize| -> Vec<usize> {
        let mut x = Vec::with_capacity(n);
        let mut r = s;
        for _ in 0..n {
            x.push(r % base);
            r /= base;
        }
        x
    };
    let encode = |x: &[usize]| -> usize { x.iter().rev().fold(0, |acc, &v| acc * base + v) };

    // a[j][k]: transposed generator, so that A π = 0 is the balance system
    let mut a = alloc::vec![0.0f64; states * states];
    for s in 0..states {
        let x = decode(s);
        let mut out = 0.0;
        let target = (0..n).min_by_key(|&v| (x[v], v)).expect("n >= 1");
        if x[target] < queue_cap && lambda_n > 0.0 {
            let mut y = x.clone();
            y[target] += 1;
            a[encode(&y) * states + s] += lambda_n;
            out += lambda_n;
        }
        for v in 0..n {
            if x[v] > 0 {
                let mut y = x.clone();
                y[v] -= 1;
                a[encode(&y) * states + s] += 1.0;
                out += 1.0;
            }
        }
        a[s * states + s] -= out;
    }
    // replace the last balance equation by normalization
    for s in 0..states {
        a[(states - 1) * states + s] = 1.0;
    }
    let mut b = alloc::vec![0.0; states];
    b[states - 1] = 1.0;
    let pi = solve_dense(&mut a, &mut b, states)?;

    let mut at_cap = 0.0;
    let mut at_least = alloc::vec![0.0; base];
    for (s, &p) in pi.iter().enumerate() {
        let x = decode(s);
        if x.contains(&queue_cap) {
            at_cap += p;
        }
        for &v in &x {
            for level in at_least.iter_mut().take(v + 1).skip(1) {
                *level += p;
            }
        }
    }
    if queue_cap > 0 && at_cap > CTMC_CAP_MASS {
        return Err(Error::CapTooSmall {
            mass_at_cap: at_cap,
        });
    }
    let mut values: Vec<f64> = at_least.iter().map(|m| m / n as f64).collect();
    values[0] = 1.0;
    while values.len() > 1 && values.last().is_some_and(|&v| v <= 0.0) {
        values.pop();
    }
    Ok(OccupancyState::projected(values))
}

/// Gaussian elimination with partial pivoting on a row-major `dim × dim` system.
fn solve_dense(a: &mut [f64], b: &mut [f64], dim: usize) -> Result<Vec<f64>> {
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&r, &s| libm::fabs(a[r * dim + col]).total_cmp(&libm::fabs(a[s * dim + col])))
            .expect("non-empty range");
        if libm::fabs(a[pivot * dim + col]) < 1e-300 {
            return Err(Error::SingularSystem);
        }
        if pivot != col {
            for k in 0..dim {
                a.swap(pivot * dim + k, col * dim + k);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * dim + col];
        for row in col + 1..dim {
            let factor = a[row * dim + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..dim {
                a[row * dim + k] -= factor * a[col * dim + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = alloc::vec![0.0; dim];
    for row in (0..dim).rev() {
        let mut acc = b[row];
        for k in row + 1..dim {
            acc -= a[row * dim + k] * x[k];
        }
        x[row] = acc / a[row * dim + row];
    }
    Ok(x)
}
