//! Graph resampling schedules and the separation diagnostics `Δ_n(T)`, `Σ_n(T)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapLaw {
    Deterministic,
    /// Uniform on `(0, 1/μ]`.
    UniformHalfOpen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResamplingSchedule {
    /// Resample right after every `kappa + 1` arrivals.
    EveryKArrivals { kappa: u64 },
    /// Independent clock whose gaps never exceed `1 / rate`.
    BoundedGap { rate: f64, gap: GapLaw },
    /// Poisson process of the given rate.
    PoissonRenewal { rate: f64 },
}

/// When the next resampling happens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextResampling {
    At(f64),
    /// Driven by arrivals; see [`ResamplingSchedule::triggers_after`].
    ArrivalTriggered,
}

impl ResamplingSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ResamplingSchedule::EveryKArrivals { .. } => Ok(()),
            ResamplingSchedule::BoundedGap { rate, .. }
            | ResamplingSchedule::PoissonRenewal { rate } => {
                if rate.is_finite() && rate > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSchedule(format!(
                        "rate must be positive, got {rate}"
                    )))
                }
            }
        }
    }

    /// Name used in configuration files.
    pub fn name(&self) -> &'static str {
        match self {
            ResamplingSchedule::EveryKArrivals { .. } => "every_k_arrivals",
            ResamplingSchedule::BoundedGap {
                gap: GapLaw::Deterministic,
                ..
            } => "bounded_gap_deterministic",
            ResamplingSchedule::BoundedGap {
                gap: GapLaw::UniformHalfOpen,
                ..
            } => "bounded_gap_uniform",
            ResamplingSchedule::PoissonRenewal { .. } => "poisson",
        }
    }

    pub fn next_resampling_time<R: Rng + ?Sized>(
        &self,
        current_time: f64,
        rng: &mut R,
    ) -> NextResampling {
        match *self {
            ResamplingSchedule::EveryKArrivals { .. } => NextResampling::ArrivalTriggered,
            ResamplingSchedule::BoundedGap {
                rate,
                gap: GapLaw::Deterministic,
            } => NextResampling::At(current_time + 1.0 / rate),
            ResamplingSchedule::BoundedGap {
                rate,
                gap: GapLaw::UniformHalfOpen,
            } => {
                let u: f64 = rng.random();
                NextResampling::At(current_time + (1.0 - u) / rate)
            }
            ResamplingSchedule::PoissonRenewal { rate } => {
                let e: f64 = Exp1.sample(rng);
                NextResampling::At(current_time + e / rate)
            }
        }
    }

    /// Whether an arrival-driven schedule fires once `arrivals_since_last`
    /// arrivals have been dispatched since the previous resampling.
    pub fn triggers_after(&self, arrivals_since_last: u64) -> bool {
        match *self {
            ResamplingSchedule::EveryKArrivals { kappa } => arrivals_since_last > kappa,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntervalCounts {
    pub arrivals: u64,
    pub departures: u64,
}

/// Resampling epochs and arrival/departure counts between them.
///
/// `intervals[m]` counts events in `(σ^m, σ^{m+1}]` with `σ^0 = 0`; the last
/// entry is the open interval after the final resampling, so there is always
/// one more interval than resampling time.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    resample_times: Vec<f64>,
    intervals: Vec<IntervalCounts>,
}

impl Default for EventLog {
    fn default() -> Self {
        Self::new()
    }
}

impl EventLog {
    pub fn new() -> Self {
        Self {
            resample_times: Vec::new(),
            intervals: alloc::vec![IntervalCounts::default()],
        }
    }

    /// Assembles a log from parts; `intervals.len()` must be `resample_times.len() + 1`.
    pub fn from_parts(resample_times: Vec<f64>, intervals: Vec<IntervalCounts>) -> Self {
        Self {
            resample_times,
            intervals,
        }
    }

    pub fn record_arrival(&mut self) {
        self.current().arrivals += 1;
    }

    pub fn record_departure(&mut self) {
        self.current().departures += 1;
    }

    pub fn record_resampling(&mut self, time: f64) {
        self.resample_times.push(time);
        self.intervals.push(IntervalCounts::default());
    }

    fn current(&mut self) -> &mut IntervalCounts {
        self.intervals
            .last_mut()
            .expect("log always has an open interval")
    }

    pub fn resample_times(&self) -> &[f64] {
        &self.resample_times
    }

    pub fn intervals(&self) -> &[IntervalCounts] {
        &self.intervals
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationDiagnostics {
    /// Longest time spent without resampling over `[0, T]`.
    pub delta: f64,
    pub sigma: f64,
    pub resamplings: usize,
    pub max_indegree: usize,
    pub per_interval: Vec<IntervalCounts>,
}

/// `Δ_n(T)` and `Σ_n(T)` for a log covering `[0, horizon]`.
///
/// `Σ_n(T) = Σ_m [(d⁻+1)(A_m + D_m − 1)A_m + A_m²] / n²` over all
/// `R_n(T) + 1` intervals, the last one truncated at the horizon.
pub fn compute_diagnostics(
    log: &EventLog,
    max_indegree: usize,
    n: usize,
    horizon: f64,
) -> Result<SeparationDiagnostics> {
    if log.intervals.is_empty() {
        return Err(Error::EmptyLog);
    }
    if log.intervals.len() != log.resample_times.len() + 1 {
        return Err(Error::MalformedLog(format!(
            "{} intervals for {} resampling times",
            log.intervals.len(),
            log.resample_times.len()
        )));
    }
    let mut prev = 0.0;
    let mut delta: f64 = 0.0;
    for &t in &log.resample_times {
        if t < prev || t > horizon {
            return Err(Error::MalformedLog(format!(
                "resampling time {t} out of order or beyond horizon {horizon}"
            )));
        }
        delta = delta.max(t - prev);
        prev = t;
    }
    delta = delta.max(horizon - prev);

    let weight = (max_indegree + 1) as f64;
    let n2 = (n as f64) * (n as f64);
    let sigma = log
        .intervals
        .iter()
        .map(|c| {
            let a = c.arrivals as f64;
            let d = c.departures as f64;
            if c.arrivals == 0 {
                0.0
            } else {
                (weight * (a + d - 1.0) * a + a * a) / n2
            }
        })
        .sum();

    Ok(SeparationDiagnostics {
        delta,
        sigma,
        resamplings: log.resample_times.len(),
        max_indegree,
        per_interval: log.intervals.clone(),
    })
}
