//! Fluid-limit dynamics of the occupancy state.
//!
//! For `i >= 1`,
//! `dq(i)/dt = λ [a_{i-1}(q) − a_i(q)] − [q(i) − q(i+1)]`, where `a_0 = 1` and
//! `a_i(q) = q(i) φ(q(i)) + [p(∞) − (1 − q(i+1))/λ]^+ 1{q(i) = 1}`.
//!
//! Integration uses classical fixed-step RK4 followed by a projection back
//! onto the ordered set `1 = q(0) >= q(1) >= ... >= 0`.

use alloc::vec::Vec;

use crate::model::{DegreeDistribution, OccupancyState};
use crate::{Error, Result};

/// `q(i)` counts as one from this distance below.
pub const BOUNDARY_EPS: f64 = 1e-9;
/// A new level is appended whenever the last stored level exceeds this.
pub const TAIL_EPS: f64 = 1e-10;
/// Largest projection correction tolerated after one step.
pub const MAX_PROJECTION_CORRECTION: f64 = 1e-6;

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::DomainError { x })
    }
}

/// `φ(x) = Σ x^d p(d)`; note `φ(1) = 1 − p(∞)`.
pub fn phi(x: f64, dist: &DegreeDistribution) -> Result<f64> {
    check_unit(x)?;
    Ok(dist.pgf(x))
}

pub fn phi_prime(x: f64, dist: &DegreeDistribution) -> Result<f64> {
    check_unit(x)?;
    Ok(dist.pgf_derivative(x))
}

#[inline]
fn level(q: &[f64], i: usize) -> f64 {
    q.get(i).copied().unwrap_or(0.0)
}

fn dispatch_probability_raw(q: &[f64], i: usize, lambda: f64, dist: &DegreeDistribution) -> f64 {
    if i == 0 {
        return 1.0;
    }
    // stage values of the integrator may leave [0, 1] slightly
    let qi = level(q, i).clamp(0.0, 1.0);
    let mut a = qi * dist.pgf(qi);
    let p_inf = dist.mass_at_infinity();
    if qi >= 1.0 - BOUNDARY_EPS && p_inf > 0.0 && lambda > 0.0 {
        let next = level(q, i + 1).clamp(0.0, 1.0);
        a += (p_inf - (1.0 - next) / lambda).max(0.0);
    }
    a
}

/// Limiting probability `a_i(q)` that a task joins a server with at least `i` tasks.
pub fn dispatch_probability(
    q: &OccupancyState,
    i: usize,
    lambda: f64,
    dist: &DegreeDistribution,
) -> f64 {
    dispatch_probability_raw(q.values(), i, lambda, dist)
}

fn rhs_into(q: &[f64], lambda: f64, dist: &DegreeDistribution, out: &mut [f64]) {
    let len = q.len();
    debug_assert_eq!(out.len(), len);
    if len == 0 {
        return;
    }
    out[0] = 0.0;
    let mut a_prev = 1.0;
    for i in 1..len {
        let a_i = if lambda > 0.0 {
            dispatch_probability_raw(q, i, lambda, dist)
        } else {
            0.0
        };
        out[i] = lambda * (a_prev - a_i) - (q[i] - level(q, i + 1));
        a_prev = a_i;
    }
}

/// `dq(i)/dt` for `i = 0..=i_max`, with `q(i_max + 1) = 0` and `dq(0)/dt = 0`.
pub fn fluid_rhs(q: &OccupancyState, lambda: f64, dist: &DegreeDistribution) -> Vec<f64> {
    let mut out = alloc::vec![0.0; q.values().len()];
    rhs_into(q.values(), lambda, dist, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidSolution {
    pub times: Vec<f64>,
    pub states: Vec<OccupancyState>,
    /// Highest level carried by the integrator at the end of the run.
    pub i_max_used: usize,
    pub step: f64,
    pub record_stride: usize,
}

impl FluidSolution {
    pub fn final_state(&self) -> &OccupancyState {
        self.states
            .last()
            .expect("at least the initial state is recorded")
    }
}

/// Fixed-step RK4 integrator for the fluid ODE.
#[derive(Debug, Clone)]
pub struct FluidIntegrator<'a> {
    lambda: f64,
    dist: &'a DegreeDistribution,
    step: f64,
    record_stride: usize,
}

impl<'a> FluidIntegrator<'a> {
    /// Defaults: `h = 1e-3`, every step recorded.
    pub fn new(lambda: f64, dist: &'a DegreeDistribution) -> Self {
        Self {
            lambda,
            dist,
            step: 1e-3,
            record_stride: 1,
        }
    }

    pub fn step(mut self, h: f64) -> Self {
        self.step = h;
        self
    }

    /// Record every `stride`-th step (the final step is always recorded).
    pub fn record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn run(&self, q0: &OccupancyState, horizon: f64) -> Result<FluidSolution> {
        let h = self.step;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::ConfigInvalid(alloc::format!(
                "step {h} must be positive"
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::ConfigInvalid(alloc::format!(
                "lambda {} must be finite and >= 0",
                self.lambda
            )));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::ConfigInvalid(alloc::format!(
                "horizon {horizon} invalid"
            )));
        }
        let steps = libm::round(horizon / h) as usize;
        if libm::fabs(steps as f64 * h - horizon) > 1e-6 * horizon.max(h) {
            return Err(Error::ConfigInvalid(alloc::format!(
                "horizon {horizon} is not a multiple of the step {h}"
            )));
        }

        let mut y = q0.values().to_vec();
        extend_tail(&mut y);
        let mut times = alloc::vec![0.0];
        let mut states = alloc::vec![OccupancyState::from_raw(y.clone())];

        let mut k1 = Vec::new();
        let mut k2 = Vec::new();
        let mut k3 = Vec::new();
        let mut k4 = Vec::new();
        let mut stage = Vec::new();
        for k in 1..=steps {
            let len = y.len();
            for buf in [&mut k1, &mut k2, &mut k3, &mut k4, &mut stage] {
                buf.resize(len, 0.0);
            }
            rhs_into(&y, self.lambda, self.dist, &mut k1);
            axpy(&y, 0.5 * h, &k1, &mut stage);
            rhs_into(&stage, self.lambda, self.dist, &mut k2);
            axpy(&y, 0.5 * h, &k2, &mut stage);
            rhs_into(&stage, self.lambda, self.dist, &mut k3);
            axpy(&y, h, &k3, &mut stage);
            rhs_into(&stage, self.lambda, self.dist, &mut k4);
            for i in 0..len {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }

            let correction = project(&mut y);
            let t = k as f64 * h;
            if correction > MAX_PROJECTION_CORRECTION {
                return Err(Error::StepTooLarge {
                    time: t,
                    correction,
                });
            }
            extend_tail(&mut y);
            if k % self.record_stride == 0 || k == steps {
                times.push(t);
                states.push(OccupancyState::from_raw(y.clone()));
            }
        }
        Ok(FluidSolution {
            times,
            states,
            i_max_used: y.len() - 1,
            step: h,
            record_stride: self.record_stride,
        })
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64], out: &mut [f64]) {
    for ((o, &yi), &xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

/// Clamp to `[0, 1]`, then sweep upward with `q(i) <- min(q(i), q(i-1))`.
/// Returns the largest change made.
fn project(y: &mut [f64]) -> f64 {
    let mut worst: f64 = libm::fabs(y[0] - 1.0);
    y[0] = 1.0;
    for i in 1..y.len() {
        let target = y[i].clamp(0.0, 1.0).min(y[i - 1]);
        worst = worst.max(libm::fabs(target - y[i]));
        y[i] = target;
    }
    worst
}

fn extend_tail(y: &mut Vec<f64>) {
    while y.last().is_some_and(|&v| v > TAIL_EPS) {
        y.push(0.0);
    }
}

/// RK4 from `q0` over `[0, horizon]` with step `h`, recording every step.
pub fn integrate_fluid(
    q0: &OccupancyState,
    lambda: f64,
    dist: &DegreeDistribution,
    horizon: f64,
    h: f64,
) -> Result<FluidSolution> {
    FluidIntegrator::new(lambda, dist).step(h).run(q0, horizon)
}

/// Probability that `d` servers drawn without replacement out of `n` all
/// lie in a subset holding a fraction `x` of the servers.
pub fn alpha_n(n: usize, d: usize, x: f64) -> f64 {
    if d > n {
        return 0.0;
    }
    let nf = n as f64;
    let mut prod = 1.0;
    for m in 0..d {
        let m = m as f64;
        let factor = ((nf * x - m) / (nf - m)).max(0.0);
        if factor == 0.0 {
            return 0.0;
        }
        prod *= factor;
    }
    prod
}

/// Finite-`n` dispatch probability `Σ_{d<n} α_n(d+1, x) p_n(d)`.
pub fn beta_n(n: usize, x: f64, dist: &DegreeDistribution) -> f64 {
    dist.masses()
        .iter()
        .filter(|&&(d, _)| (d as usize) < n)
        .map(|&(d, p)| alpha_n(n, d as usize + 1, x) * p)
        .sum()
}
