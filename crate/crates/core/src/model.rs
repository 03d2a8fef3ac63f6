//! Domain types shared by the simulator and the fluid solver.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Tolerance on the total mass of a [`DegreeDistribution`].
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Outdegree pmf with finite support plus an explicit atom at infinity.
///
/// Only strictly positive finite masses are stored, sorted by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    masses: Vec<(u32, f64)>,
    mass_at_infinity: f64,
}

impl DegreeDistribution {
    /// Validates `(degree, mass)` pairs and the mass at infinity.
    ///
    /// Repeated degrees are merged by adding their masses.
    pub fn new<I>(masses: I, mass_at_infinity: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        if !(0.0..=1.0).contains(&mass_at_infinity) {
            return Err(Error::NegativeMass {
                degree: None,
                mass: mass_at_infinity,
            });
        }
        let mut merged: Vec<(u32, f64)> = Vec::new();
        for (d, p) in masses {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::NegativeMass {
                    degree: Some(d),
                    mass: p,
                });
            }
            match merged.iter_mut().find(|(e, _)| *e == d) {
                Some((_, acc)) => *acc += p,
                None => merged.push((d, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        merged.sort_by_key(|&(d, _)| d);
        let total = merged.iter().map(|&(_, p)| p).sum::<f64>() + mass_at_infinity;
        if libm::fabs(total - 1.0) > PROBABILITY_TOLERANCE {
            return Err(Error::NotAProbability { total });
        }
        Ok(Self {
            masses: merged,
            mass_at_infinity,
        })
    }

    pub fn point_mass(degree: u32) -> Self {
        Self {
            masses: alloc::vec![(degree, 1.0)],
            mass_at_infinity: 0.0,
        }
    }

    /// All mass at infinity: `φ ≡ 0`.
    pub fn degenerate() -> Self {
        Self {
            masses: Vec::new(),
            mass_at_infinity: 1.0,
        }
    }

    /// Uniform distribution over the given degrees (repeats add up).
    pub fn uniform(degrees: &[u32]) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::NotAProbability { total: 0.0 });
        }
        let w = 1.0 / degrees.len() as f64;
        Self::new(degrees.iter().map(|&d| (d, w)), 0.0)
    }

    /// Positive finite masses, sorted by degree.
    pub fn masses(&self) -> &[(u32, f64)] {
        &self.masses
    }

    pub fn mass_at_infinity(&self) -> f64 {
        self.mass_at_infinity
    }

    pub fn mass(&self, degree: u32) -> f64 {
        self.masses
            .iter()
            .find(|&&(d, _)| d == degree)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Smallest degree with positive mass, `None` when all mass is at infinity.
    pub fn min_support(&self) -> Option<u32> {
        self.masses.first().map(|&(d, _)| d)
    }

    pub fn max_support(&self) -> Option<u32> {
        self.masses.last().map(|&(d, _)| d)
    }

    /// `Σ d·p(d)` over the finite support.
    pub fn mean(&self) -> f64 {
        self.masses.iter().map(|&(d, p)| d as f64 * p).sum()
    }

    /// Generating function `φ(x) = Σ x^d p(d)` without a domain check.
    pub fn pgf(&self, x: f64) -> f64 {
        self.masses.iter().map(|&(d, p)| p * powu(x, d)).sum()
    }

    /// `φ'(x) = Σ d·x^(d-1) p(d)` without a domain check.
    pub fn pgf_derivative(&self, x: f64) -> f64 {
        self.masses
            .iter()
            .filter(|&&(d, _)| d > 0)
            .map(|&(d, p)| d as f64 * p * powu(x, d - 1))
            .sum()
    }
}

#[inline]
pub(crate) fn powu(x: f64, e: u32) -> f64 {
    // exponentiation by squaring; exact for the small integer powers used in tests
    let mut base = x;
    let mut exp = e;
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// Per-server task counts `X(u)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueueVector {
    counts: Vec<u32>,
}

impl QueueVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            counts: alloc::vec![0; n],
        }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn occupancy(&self) -> OccupancyState {
        occupancy_from_queues(self)
    }
}

/// `q(i)`: fraction of servers with at least `i` tasks, stored up to the
/// last level with positive mass; the tail beyond is implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyState {
    values: Vec<f64>,
}

impl OccupancyState {
    /// Checks `q(0) = 1`, entries in `[0, 1]` and `q(i+1) <= q(i)` exactly.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        match values.first() {
            Some(1.0) => {}
            Some(&v) => return Err(Error::InvalidOccupancy(format!("q(0) = {v}, expected 1"))),
            None => return Err(Error::InvalidOccupancy("no entries".into())),
        }
        for (i, w) in values.windows(2).enumerate() {
            if !(0.0..=1.0).contains(&w[1]) {
                return Err(Error::InvalidOccupancy(format!(
                    "q({}) = {} outside [0, 1]",
                    i + 1,
                    w[1]
                )));
            }
            if w[1] > w[0] {
                return Err(Error::InvalidOccupancy(format!(
                    "q({}) = {} exceeds q({}) = {}",
                    i + 1,
                    w[1],
                    i,
                    w[0]
                )));
            }
        }
        Ok(Self { values })
    }

    /// The empty system `(1, 0, 0, ...)`.
    pub fn empty() -> Self {
        Self {
            values: alloc::vec![1.0],
        }
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(Self::new(values.clone()).is_ok());
        Self { values }
    }

    /// Clamps into `[0, 1]`, forces `q(0) = 1` and sweeps `q(i) <- min(q(i), q(i-1))`.
    pub fn projected(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Self::empty();
        }
        values[0] = 1.0;
        for i in 1..values.len() {
            let v = values[i].clamp(0.0, 1.0);
            values[i] = if v > values[i - 1] { values[i - 1] } else { v };
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `q(i)`, zero beyond the stored levels.
    pub fn get(&self, i: usize) -> f64 {
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Highest stored level.
    pub fn i_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `Σ_{i>=1} q(i)`, the mean number of tasks per server.
    pub fn tasks_per_server(&self) -> f64 {
        self.values[1..].iter().sum()
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        let len = self.values.len().max(other.values.len());
        (0..len)
            .map(|i| libm::fabs(self.get(i) - other.get(i)))
            .sum()
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        let len = self.values.len().max(other.values.len());
        (0..len)
            .map(|i| libm::fabs(self.get(i) - other.get(i)))
            .fold(0.0, f64::max)
    }
}

/// `q(i) = #{u : X(u) >= i} / n`.
pub fn occupancy_from_queues(queues: &QueueVector) -> OccupancyState {
    let n = queues.n();
    if n == 0 {
        return OccupancyState::empty();
    }
    let max = queues.counts.iter().copied().max().unwrap_or(0) as usize;
    // at_least[i] = #{u : X(u) >= i}, built from a histogram of exact counts
    let mut at_least = alloc::vec![0usize; max + 2];
    for &c in &queues.counts {
        at_least[c as usize] += 1;
    }
    for i in (0..=max).rev() {
        at_least[i] += at_least[i + 1];
    }
    let values = at_least[..=max]
        .iter()
        .map(|&c| c as f64 / n as f64)
        .collect();
    OccupancyState::from_raw(values)
}

/// Simple directed graph on `0..n` in compressed adjacency form.
///
/// Self-loops are never stored: the dispatch neighborhood of `u` always
/// includes `u` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSnapshot {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl GraphSnapshot {
    /// Builds a snapshot from per-node out-neighbor lists, which are sorted.
    pub fn from_adjacency(mut lists: Vec<Vec<u32>>) -> Result<Self> {
        let n = lists.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        for (u, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            for (k, &v) in list.iter().enumerate() {
                if v as usize >= n {
                    return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
                }
                if v as usize == u {
                    return Err(Error::InvalidGraph(format!("self-loop at {u}")));
                }
                if k > 0 && list[k - 1] == v {
                    return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
                }
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        Ok(Self { offsets, targets })
    }

    /// Graph without edges.
    pub fn isolated(n: usize) -> Self {
        Self {
            offsets: alloc::vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn out_neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn outdegree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn indegrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0usize; self.n()];
        for &v in &self.targets {
            deg[v as usize] += 1;
        }
        deg
    }
}
