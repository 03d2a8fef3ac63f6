//! CSV trajectories, JSON summaries and the sim-vs-fluid comparison.

use std::fmt::Write as _;

use dynjsq_core::engine::Trajectory;
use dynjsq_core::fluid::FluidSolution;
use dynjsq_core::resampling::SeparationDiagnostics;
use dynjsq_core::OccupancyState;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::CliError;

fn q_header(levels: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=levels {
        write!(h, ",q{i}").unwrap();
    }
    h
}

fn push_levels(row: &mut String, q: &OccupancyState, levels: usize) {
    for i in 1..=levels {
        write!(row, ",{}", q.get(i)).unwrap();
    }
}

fn column_count(states: &[OccupancyState], min_levels: usize) -> usize {
    states
        .iter()
        .map(|s| s.i_max())
        .fold(min_levels.max(1), usize::max)
}

/// `t,q1,...,qK` with `K >= min_levels`, then hub and server columns when tracked.
pub fn trajectory_csv(tr: &Trajectory, min_levels: usize) -> String {
    let levels = column_count(&tr.states, min_levels);
    let mut out = q_header(levels);
    if tr.hub_track.is_some() {
        out.push_str(",hub1_len,hub2_len,above_central_frac");
    }
    for track in &tr.server_tracks {
        write!(out, ",server_{}", track.server).unwrap();
    }
    out.push('\n');
    let n = tr.n as f64;
    for (k, (t, q)) in tr.times.iter().zip(&tr.states).enumerate() {
        write!(out, "{t}").unwrap();
        push_levels(&mut out, q, levels);
        if let Some(h) = &tr.hub_track {
            write!(
                out,
                ",{},{},{}",
                h.hub1_len[k],
                h.hub2_len[k],
                f64::from(h.above_central[k]) / n
            )
            .unwrap();
        }
        for track in &tr.server_tracks {
            write!(out, ",{}", track.lengths[k]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn fluid_csv(sol: &FluidSolution, min_levels: usize) -> String {
    let levels = column_count(&sol.states, min_levels);
    let mut out = q_header(levels);
    out.push('\n');
    for (t, q) in sol.times.iter().zip(&sol.states) {
        write!(out, "{t}").unwrap();
        push_levels(&mut out, q, levels);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub delta: f64,
    pub sigma: f64,
    pub resamplings: usize,
    pub max_indegree: usize,
}

impl From<&SeparationDiagnostics> for DiagnosticsSummary {
    fn from(d: &SeparationDiagnostics) -> Self {
        Self {
            delta: d.delta,
            sigma: d.sigma,
            resamplings: d.resamplings,
            max_indegree: d.max_indegree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub replication: u64,
    pub n: usize,
    pub average_window: [f64; 2],
    /// `q(1), q(2), ...` averaged over the window.
    pub time_average: Vec<f64>,
    pub mean_tasks_per_server: f64,
    pub arrivals: u64,
    pub departures: u64,
    pub diagnostics: Option<DiagnosticsSummary>,
    pub config: Config,
}

impl Summary {
    pub fn new(tr: &Trajectory, config: &Config, replication: u64) -> Self {
        let avg = &tr.time_average;
        Self {
            seed: config.seed.unwrap_or(0),
            replication,
            n: tr.n,
            average_window: [tr.average_window.0, tr.average_window.1],
            time_average: avg.values()[1..].to_vec(),
            mean_tasks_per_server: avg.tasks_per_server(),
            arrivals: tr.arrivals,
            departures: tr.departures,
            diagnostics: tr.diagnostics.as_ref().map(Into::into),
            config: config.clone(),
        }
    }
}

/// Time column and `q` columns of a trajectory CSV; other columns are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyTable {
    pub times: Vec<f64>,
    /// `rows[k][i - 1]` is `q(i)` at `times[k]`.
    pub rows: Vec<Vec<f64>>,
}

impl OccupancyTable {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |msg: String| CliError::Runtime(format!("csv: {msg}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .split(',')
            .collect();
        if header.first() != Some(&"t") {
            return Err(bad("first column must be t".into()));
        }
        let q_cols: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                h.strip_prefix('q')
                    .is_some_and(|r| r.parse::<usize>().is_ok())
            })
            .map(|(j, _)| j)
            .collect();
        for (k, &j) in q_cols.iter().enumerate() {
            if header[j] != format!("q{}", k + 1) {
                return Err(bad(format!("unexpected column {}", header[j])));
            }
        }
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let cells: Vec<&str> = line.split(',').collect();
            let num = |j: usize| -> Result<f64, CliError> {
                cells
                    .get(j)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| bad(format!("line {}: bad cell {j}", lineno + 2)))
            };
            times.push(num(0)?);
            rows.push(q_cols.iter().map(|&j| num(j)).collect::<Result<_, _>>()?);
        }
        if times.is_empty() {
            return Err(bad("no rows".into()));
        }
        Ok(Self { times, rows })
    }

    fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    fn nearest(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k == self.times.len() || t - self.times[k - 1] <= self.times[k] - t {
            k - 1
        } else {
            k
        }
    }

    fn get(&self, k: usize, i: usize) -> f64 {
        self.rows[k].get(i - 1).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `sup_t |q_a(t, i) − q_b(t, i)|` for `i = 1, 2, ...`.
    pub sup_abs_diff: Vec<f64>,
    pub tol: f64,
    pub levels_checked: usize,
    pub pass: bool,
}

/// Aligns `b` to the grid of `a` by nearest time.
pub fn compare(
    a: &OccupancyTable,
    b: &OccupancyTable,
    tol: f64,
    levels: usize,
) -> Result<Comparison, CliError> {
    let slack = 0.5 * a.spacing().max(b.spacing()) + 1e-9;
    let (a0, a1) = (a.times[0], *a.times.last().unwrap());
    let (b0, b1) = (b.times[0], *b.times.last().unwrap());
    if (a0 - b0).abs() > slack || (a1 - b1).abs() > slack {
        return Err(CliError::MismatchedGrids(format!(
            "[{a0}, {a1}] vs [{b0}, {b1}]"
        )));
    }
    let width = a.rows[0].len().max(b.rows[0].len());
    let mut sup = vec![0.0f64; width];
    for (k, &t) in a.times.iter().enumerate() {
        let j = b.nearest(t);
        for (i, s) in sup.iter_mut().enumerate() {
            *s = s.max((a.get(k, i + 1) - b.get(j, i + 1)).abs());
        }
    }
    let levels_checked = levels.min(width);
    let pass = sup[..levels_checked].iter().all(|&d| d < tol);
    Ok(Comparison {
        sup_abs_diff: sup,
        tol,
        levels_checked,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> OccupancyTable {
        OccupancyTable::parse(text).unwrap()
    }

    #[test]
    fn identical_tables() {
        let t = table("t,q1,q2\n0,0,0\n0.5,0.2,0.1\n1,0.3,0.1\n");
        let c = compare(&t, &t, 0.05, 4).unwrap();
        assert_eq!(c.sup_abs_diff, vec![0.0, 0.0]);
        assert!(c.pass);
    }

    #[test]
    fn nearest_alignment_and_missing_levels() {
        let a = table("t,q1\n0,0\n1,0.5\n");
        let b = table("t,q1,q2\n0,0,0\n0.25,0.1,0\n0.5,0.2,0\n0.75,0.3,0\n1,0.4,0.05\n");
        let c = compare(&a, &b, 0.05, 4).unwrap();
        assert!((c.sup_abs_diff[0] - 0.1).abs() < 1e-12);
        assert!((c.sup_abs_diff[1] - 0.05).abs() < 1e-12);
        assert!(!c.pass);
    }

    #[test]
    fn horizons_must_match() {
        let a = table("t,q1\n0,0\n1,0.5\n");
        let b = table("t,q1\n0,0\n1,0.5\n2,0.5\n");
        assert!(matches!(
            compare(&a, &b, 0.05, 4),
            Err(CliError::MismatchedGrids(_))
        ));
    }

    #[test]
    fn rejects_bad_csv() {
        assert!(OccupancyTable::parse("").is_err());
        assert!(OccupancyTable::parse("x,q1\n0,1\n").is_err());
        assert!(OccupancyTable::parse("t,q1\n0,abc\n").is_err());
        assert!(OccupancyTable::parse("t,q2\n0,1\n").is_err());
    }
}
