//! Flat JSON experiment configs and named presets.

use std::path::Path;

use dynjsq_core::engine::{GraphSchedule, Routing, SimConfig, TieBreak};
use dynjsq_core::graphs::{GraphKind, GraphLaw};
use dynjsq_core::resampling::{GapLaw, ResamplingSchedule};
use dynjsq_core::{DegreeDistribution, OccupancyState, QueueVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Resampling rate: a number or a rule evaluated at `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Value(f64),
    /// `"log_n"` or `"log_log_n"`.
    Rule(String),
}

impl Rate {
    pub fn evaluate(&self, n: usize) -> Result<f64, CliError> {
        let nf = n as f64;
        let r = match self {
            Rate::Value(v) => *v,
            Rate::Rule(s) if s == "log_n" => nf.ln(),
            Rate::Rule(s) if s == "log_log_n" => nf.ln().ln(),
            Rate::Rule(s) => return Err(CliError::Config(format!("unknown rate rule {s:?}"))),
        };
        if r.is_finite() && r > 0.0 {
            Ok(r)
        } else {
            Err(CliError::Config(format!(
                "resampling rate {r} at n = {n} is not positive"
            )))
        }
    }
}

/// Every key is optional; [`Config::resolve`] merges a preset and fills
/// defaults so the result names every setting explicitly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Total arrival rate; takes precedence over `load`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_n: Option<f64>,
    /// Arrival rate per server.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<f64>,
    /// `graph`, `power_of_d` or `independent`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    /// Outdegree for `d_regular`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_grid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_queues: Option<Vec<u32>>,
    /// Fluid start when `initial_queues` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_occupancy: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_servers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_hubs: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_break: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid_step: Option<f64>,
    /// Minimum number of `q` columns in CSV output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

pub const PRESETS: &[&str] = &[
    "appendix_a_ring",
    "appendix_a_triangles",
    "appendix_a_doublestar_static",
    "appendix_a_doublestar_dynamic",
    "appendix_a_ring_static",
    "appendix_a_triangles_static",
];

pub fn preset(name: &str) -> Result<Config, CliError> {
    let base = Config {
        n: Some(1500),
        load: Some(0.9),
        routing: Some("graph".into()),
        horizon: Some(10.0),
        record_grid: Some(0.1),
        ..Config::default()
    };
    let poisson = |graph: &str, rule: &str| Config {
        graph: Some(graph.into()),
        schedule: Some("poisson".into()),
        rate: Some(Rate::Rule(rule.into())),
        ..base.clone()
    };
    let fixed = |graph: &str| Config {
        graph: Some(graph.into()),
        schedule: Some("static".into()),
        horizon: Some(100.0),
        record_grid: Some(0.5),
        ..base.clone()
    };
    Ok(match name {
        "appendix_a_ring" => poisson("ring", "log_log_n"),
        "appendix_a_triangles" => poisson("disjoint_triangles", "log_log_n"),
        "appendix_a_doublestar_dynamic" => poisson("double_star", "log_n"),
        "appendix_a_ring_static" => fixed("ring"),
        "appendix_a_triangles_static" => fixed("disjoint_triangles"),
        "appendix_a_doublestar_static" => Config {
            track_hubs: Some(true),
            ..fixed("double_star")
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}; known: {}",
                PRESETS.join(", ")
            )))
        }
    })
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),*) => {
        Config { $($field: $top.$field.or($base.$field),)* }
    };
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Keys set here win over those of `base`.
    pub fn over(self, base: Config) -> Config {
        overlay!(
            self,
            base,
            preset,
            n,
            lambda_n,
            load,
            routing,
            graph,
            degree,
            dist,
            schedule,
            kappa,
            rate,
            horizon,
            record_grid,
            average_window,
            initial_queues,
            initial_occupancy,
            track_servers,
            track_hubs,
            tie_break,
            seed,
            fluid_step,
            levels
        )
    }

    /// Applies the preset, fills defaults and validates. The result has no
    /// preset key and re-resolves to itself.
    pub fn resolve(self) -> Result<Config, CliError> {
        let mut c = match self.preset.clone() {
            Some(name) => {
                let mut own = self;
                own.preset = None;
                own.over(preset(&name)?)
            }
            None => self,
        };
        let n =
            c.n.ok_or_else(|| CliError::Config("missing key n".into()))?;
        if c.lambda_n.is_none() {
            let load = c
                .load
                .ok_or_else(|| CliError::Config("one of lambda_n or load is required".into()))?;
            c.lambda_n = Some(load * n as f64);
        }
        let routing = c.routing.get_or_insert_with(|| "graph".into()).clone();
        let horizon = c
            .horizon
            .ok_or_else(|| CliError::Config("missing key horizon".into()))?;
        c.record_grid.get_or_insert(horizon / 100.0);
        c.average_window.get_or_insert([horizon / 2.0, horizon]);
        c.tie_break.get_or_insert_with(|| "smallest_index".into());
        c.seed.get_or_insert(0);
        c.fluid_step.get_or_insert(1e-3);
        c.levels.get_or_insert(4);
        c.track_servers.get_or_insert_with(Vec::new);
        if routing == "graph" {
            let graph = c.graph.get_or_insert_with(|| "ring".into()).clone();
            c.schedule.get_or_insert_with(|| "static".into());
            c.track_hubs.get_or_insert(graph == "double_star");
        } else {
            c.track_hubs.get_or_insert(false);
        }
        c.sim_config()?;
        Ok(c)
    }

    fn req<T: Clone>(v: &Option<T>, key: &str) -> Result<T, CliError> {
        v.clone()
            .ok_or_else(|| CliError::Config(format!("missing key {key}")))
    }

    pub fn distribution(&self) -> Result<Option<DegreeDistribution>, CliError> {
        self.dist.as_deref().map(parse_distribution).transpose()
    }

    fn graph_law(&self, n: usize) -> Result<GraphLaw, CliError> {
        let kind = match Self::req(&self.graph, "graph")?.as_str() {
            "ring" => GraphKind::Ring,
            "disjoint_triangles" => GraphKind::DisjointTriangles,
            "double_star" => GraphKind::DoubleStar,
            "complete" => GraphKind::Complete,
            "d_regular" => {
                GraphKind::DeterministicDRegularDirected(Self::req(&self.degree, "degree")?)
            }
            "configuration" => GraphKind::ConfigurationByDegree(
                self.distribution()?
                    .ok_or_else(|| CliError::Config("configuration graph needs dist".into()))?,
            ),
            other => return Err(CliError::Config(format!("unknown graph {other:?}"))),
        };
        Ok(GraphLaw::new(kind, n)?)
    }

    fn graph_schedule(&self, n: usize) -> Result<GraphSchedule, CliError> {
        let rate = || Self::req(&self.rate, "rate")?.evaluate(n);
        let schedule = match Self::req(&self.schedule, "schedule")?.as_str() {
            "static" => return Ok(GraphSchedule::Static),
            "every_k_arrivals" => ResamplingSchedule::EveryKArrivals {
                kappa: self.kappa.unwrap_or(0),
            },
            "bounded_gap_deterministic" => ResamplingSchedule::BoundedGap {
                rate: rate()?,
                gap: GapLaw::Deterministic,
            },
            "bounded_gap_uniform" => ResamplingSchedule::BoundedGap {
                rate: rate()?,
                gap: GapLaw::UniformHalfOpen,
            },
            "poisson" => ResamplingSchedule::PoissonRenewal { rate: rate()? },
            other => return Err(CliError::Config(format!("unknown schedule {other:?}"))),
        };
        Ok(GraphSchedule::Resample(schedule))
    }

    /// Engine configuration of a resolved config.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let n = Self::req(&self.n, "n")?;
        let routing = match Self::req(&self.routing, "routing")?.as_str() {
            "graph" => Routing::Graph {
                law: self.graph_law(n)?,
                schedule: self.graph_schedule(n)?,
            },
            "power_of_d" => Routing::PowerOfD(
                self.distribution()?
                    .ok_or_else(|| CliError::Config("power_of_d routing needs dist".into()))?,
            ),
            "independent" => Routing::Independent,
            other => return Err(CliError::Config(format!("unknown routing {other:?}"))),
        };
        let [a, b] = Self::req(&self.average_window, "average_window")?;
        let mut cfg = SimConfig::new(
            n,
            Self::req(&self.lambda_n, "lambda_n")?,
            routing,
            Self::req(&self.horizon, "horizon")?,
        )
        .with_seed(Self::req(&self.seed, "seed")?)
        .with_record_grid(Self::req(&self.record_grid, "record_grid")?)
        .with_average_window(a, b);
        cfg.initial = self.initial_queues.clone().map(QueueVector::new);
        cfg.track_servers = self.track_servers.clone().unwrap_or_default();
        cfg.track_hubs = self.track_hubs.unwrap_or(false);
        cfg.tie_break = match self.tie_break.as_deref().unwrap_or("smallest_index") {
            "smallest_index" => TieBreak::SmallestIndex,
            "uniform_random" => TieBreak::UniformRandom,
            other => return Err(CliError::Config(format!("unknown tie_break {other:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Per-server load, limiting degree distribution and start state for
    /// the matching fluid run.
    pub fn fluid_inputs(&self) -> Result<(f64, DegreeDistribution, OccupancyState), CliError> {
        let n = Self::req(&self.n, "n")?;
        let lambda = Self::req(&self.lambda_n, "lambda_n")? / n as f64;
        let dist = match (self.distribution()?, self.routing.as_deref()) {
            (Some(d), _) => d,
            (None, Some("independent")) => DegreeDistribution::point_mass(0),
            (None, Some("graph")) => match self.graph.as_deref() {
                // limiting pmf of the fixed-degree topologies
                Some("ring" | "disjoint_triangles" | "double_star") => {
                    DegreeDistribution::point_mass(2)
                }
                _ => self.graph_law(n)?.outdegree_pmf(),
            },
            _ => return Err(CliError::Config("fluid run needs dist".into())),
        };
        let start = match (&self.initial_queues, &self.initial_occupancy) {
            (Some(q), _) => QueueVector::new(q.clone()).occupancy(),
            (None, Some(values)) => OccupancyState::new(values.clone())?,
            (None, None) => OccupancyState::empty(),
        };
        Ok((lambda, dist, start))
    }
}

/// Parses `"d:mass,..."`; masses may be fractions `a/b` and `d` may be
/// `inf` for the mass at infinity.
pub fn parse_distribution(text: &str) -> Result<DegreeDistribution, CliError> {
    let bad = |msg: String| CliError::Config(format!("distribution {text:?}: {msg}"));
    let mut masses = Vec::new();
    let mut p_inf = 0.0;
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (d, m) = item
            .split_once(':')
            .ok_or_else(|| bad(format!("entry {item:?} is not d:mass")))?;
        let mass = parse_mass(m.trim()).ok_or_else(|| bad(format!("bad mass {m:?}")))?;
        match d.trim() {
            "inf" => p_inf += mass,
            d => masses.push((
                d.parse::<u32>()
                    .map_err(|_| bad(format!("bad degree {d:?}")))?,
                mass,
            )),
        }
    }
    Ok(DegreeDistribution::new(masses, p_inf)?)
}

fn parse_mass(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}
