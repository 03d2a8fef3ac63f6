//! Permutation-invariant random graph laws.
//!
//! Fixed topologies are built on canonical labels and then relabeled by a
//! fresh uniform permutation, so every node is statistically equivalent.
//! Undirected topologies are stored with both edge directions.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::model::{DegreeDistribution, GraphSnapshot};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Ring,
    DisjointTriangles,
    /// Two hubs adjacent to each other and to every leaf; leaves have degree 2.
    DoubleStar,
    Complete,
    /// `u -> u+1, ..., u+d (mod n)`, relabeled.
    DeterministicDRegularDirected(u32),
    /// Each node draws its outdegree from the distribution and picks that
    /// many distinct out-neighbors uniformly.
    ConfigurationByDegree(DegreeDistribution),
}

impl GraphKind {
    /// Name used in configuration files.
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::Ring => "ring",
            GraphKind::DisjointTriangles => "disjoint_triangles",
            GraphKind::DoubleStar => "double_star",
            GraphKind::Complete => "complete",
            GraphKind::DeterministicDRegularDirected(_) => "d_regular",
            GraphKind::ConfigurationByDegree(_) => "configuration",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaw {
    kind: GraphKind,
    n: usize,
}

impl GraphLaw {
    pub fn new(kind: GraphKind, n: usize) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidLaw(msg));
        if n == 0 {
            return invalid("n must be at least 1".into());
        }
        match &kind {
            GraphKind::Ring if n < 3 => return invalid(format!("ring needs n >= 3, got {n}")),
            GraphKind::DisjointTriangles if n % 3 != 0 => {
                return invalid(format!("disjoint triangles need n divisible by 3, got {n}"))
            }
            GraphKind::DoubleStar if n < 3 => {
                return invalid(format!("double star needs n >= 3, got {n}"))
            }
            GraphKind::DeterministicDRegularDirected(d) if *d as usize >= n => {
                return invalid(format!("d-regular law needs d < n, got d = {d}, n = {n}"))
            }
            _ => {}
        }
        Ok(Self { kind, n })
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GraphSnapshot {
        sample_graph(self, rng)
    }

    /// Exact outdegree pmf `p_n` of a uniformly chosen node under this law.
    pub fn outdegree_pmf(&self) -> DegreeDistribution {
        let n = self.n;
        match &self.kind {
            GraphKind::Ring | GraphKind::DisjointTriangles => DegreeDistribution::point_mass(2),
            GraphKind::DoubleStar if n == 3 => DegreeDistribution::point_mass(2),
            GraphKind::DoubleStar => {
                let nf = n as f64;
                DegreeDistribution::new([(2, (nf - 2.0) / nf), (n as u32 - 1, 2.0 / nf)], 0.0)
                    .expect("double-star pmf sums to one")
            }
            GraphKind::Complete => DegreeDistribution::point_mass(n as u32 - 1),
            GraphKind::DeterministicDRegularDirected(d) => DegreeDistribution::point_mass(*d),
            GraphKind::ConfigurationByDegree(dist) => capped_distribution(dist, n as u32 - 1),
        }
    }
}

/// Moves mass at degrees above `cap`, and the mass at infinity, onto `cap`.
fn capped_distribution(dist: &DegreeDistribution, cap: u32) -> DegreeDistribution {
    let mut masses: Vec<(u32, f64)> = Vec::new();
    let mut overflow = dist.mass_at_infinity();
    for &(d, p) in dist.masses() {
        if d > cap {
            overflow += p;
        } else {
            masses.push((d, p));
        }
    }
    if overflow > 0.0 {
        masses.push((cap, overflow));
    }
    DegreeDistribution::new(masses, 0.0).expect("capping preserves total mass")
}

/// Draws a degree; mass above `cap` (including infinity) lands on `cap`.
pub(crate) fn sample_degree<R: Rng + ?Sized>(
    dist: &DegreeDistribution,
    cap: u32,
    rng: &mut R,
) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(d, p) in dist.masses() {
        acc += p;
        if u < acc {
            return d.min(cap);
        }
    }
    // mass at infinity, or rounding shortfall in the cumulative sum
    if dist.mass_at_infinity() > 0.0 {
        cap
    } else {
        dist.max_support().map_or(cap, |d| d.min(cap))
    }
}

/// One draw from `law`.
pub fn sample_graph<R: Rng + ?Sized>(law: &GraphLaw, rng: &mut R) -> GraphSnapshot {
    let n = law.n;
    let lists = match &law.kind {
        GraphKind::ConfigurationByDegree(dist) => configuration_lists(dist, n, rng),
        kind => {
            let base = base_topology(kind, n);
            let mut perm: Vec<u32> = (0..n as u32).collect();
            perm.shuffle(rng);
            let mut relabeled = alloc::vec![Vec::new(); n];
            for (u, list) in base.into_iter().enumerate() {
                relabeled[perm[u] as usize] = list.into_iter().map(|v| perm[v as usize]).collect();
            }
            relabeled
        }
    };
    GraphSnapshot::from_adjacency(lists).expect("generators emit simple graphs")
}

fn base_topology(kind: &GraphKind, n: usize) -> Vec<Vec<u32>> {
    let nu = n as u32;
    match kind {
        GraphKind::Ring => (0..nu)
            .map(|u| alloc::vec![(u + nu - 1) % nu, (u + 1) % nu])
            .collect(),
        GraphKind::DisjointTriangles => (0..nu)
            .map(|u| {
                let b = u - u % 3;
                (b..b + 3).filter(|&v| v != u).collect()
            })
            .collect(),
        GraphKind::DoubleStar => {
            // nodes 0 and 1 are the hubs
            let mut lists: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
            lists[0] = (1..nu).collect();
            lists[1] = (0..nu).filter(|&v| v != 1).collect();
            for list in lists.iter_mut().skip(2) {
                *list = alloc::vec![0, 1];
            }
            lists
        }
        GraphKind::Complete => (0..nu)
            .map(|u| (0..nu).filter(|&v| v != u).collect())
            .collect(),
        GraphKind::DeterministicDRegularDirected(d) => (0..nu)
            .map(|u| (1..=*d).map(|k| (u + k) % nu).collect())
            .collect(),
        GraphKind::ConfigurationByDegree(_) => unreachable!("configuration graphs have no base"),
    }
}

fn configuration_lists<R: Rng + ?Sized>(
    dist: &DegreeDistribution,
    n: usize,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    let cap = n as u32 - 1;
    (0..n)
        .map(|u| {
            let d = sample_degree(dist, cap, rng) as usize;
            // positions among the n-1 other nodes, shifted past u
            index::sample(rng, n - 1, d)
                .into_iter()
                .map(|k| if k >= u { k as u32 + 1 } else { k as u32 })
                .collect()
        })
        .collect()
}

/// Empirical outdegree pmf of a snapshot.
pub fn empirical_outdegree(graph: &GraphSnapshot) -> DegreeDistribution {
    let n = graph.n();
    if n == 0 {
        return DegreeDistribution::point_mass(0);
    }
    let mut counts: Vec<(u32, usize)> = Vec::new();
    for u in 0..n {
        let d = graph.outdegree(u) as u32;
        match counts.iter_mut().find(|(e, _)| *e == d) {
            Some((_, c)) => *c += 1,
            None => counts.push((d, 1)),
        }
    }
    DegreeDistribution::new(
        counts.into_iter().map(|(d, c)| (d, c as f64 / n as f64)),
        0.0,
    )
    .expect("empirical frequencies sum to one")
}

/// Largest indegree `d^-` in the snapshot.
pub fn max_indegree(graph: &GraphSnapshot) -> usize {
    graph.indegrees().into_iter().max().unwrap_or(0)
}

/// The two nodes of largest outdegree, ties to the smaller index.
pub fn hubs(graph: &GraphSnapshot) -> (usize, usize) {
    let mut best = (usize::MAX, usize::MAX);
    let mut deg = (0usize, 0usize);
    for u in 0..graph.n() {
        let d = graph.outdegree(u);
        if best.0 == usize::MAX || d > deg.0 {
            best = (u, best.0);
            deg = (d, deg.0);
        } else if best.1 == usize::MAX || d > deg.1 {
            best.1 = u;
            deg.1 = d;
        }
    }
    if best.1 == usize::MAX {
        best.1 = best.0;
    }
    if best.0 > best.1 {
        (best.1, best.0)
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedSequence, Stream};
    use alloc::vec;

    fn rng(seed: u64) -> crate::rng::SimRng {
        SeedSequence::new(seed, 0).stream(Stream::Graph)
    }

    #[test]
    fn ring_has_two_neighbors_each() {
        let law = GraphLaw::new(GraphKind::Ring, 4).unwrap();
        let g = law.sample(&mut rng(1));
        for u in 0..4 {
            assert_eq!(g.outdegree(u), 2);
            for &v in g.out_neighbors(u) {
                assert!(g.has_edge(v as usize, u));
            }
        }
        // a 4-cycle: each node misses exactly its antipode
        for u in 0..4 {
            let missing: Vec<usize> = (0..4).filter(|&v| v != u && !g.has_edge(u, v)).collect();
            assert_eq!(missing.len(), 1);
        }
    }

    #[test]
    fn double_star_degrees() {
        let law = GraphLaw::new(GraphKind::DoubleStar, 12).unwrap();
        let g = law.sample(&mut rng(2));
        let mut degs: Vec<usize> = (0..12).map(|u| g.outdegree(u)).collect();
        degs.sort_unstable();
        assert_eq!(degs, [vec![2; 10], vec![11, 11]].concat());
        assert_eq!(max_indegree(&g), 11);
        let (h1, h2) = hubs(&g);
        assert_eq!(g.outdegree(h1), 11);
        assert_eq!(g.outdegree(h2), 11);
        assert!(h1 < h2);
    }

    #[test]
    fn complete_on_three() {
        let law = GraphLaw::new(GraphKind::Complete, 3).unwrap();
        let g = law.sample(&mut rng(3));
        assert_eq!(g.out_neighbors(0), &[1, 2]);
        assert_eq!(g.out_neighbors(1), &[0, 2]);
        assert_eq!(g.out_neighbors(2), &[0, 1]);
    }

    #[test]
    fn exact_pmfs() {
        let ds = GraphLaw::new(GraphKind::DoubleStar, 12)
            .unwrap()
            .outdegree_pmf();
        assert!((ds.mass(2) - 10.0 / 12.0).abs() < 1e-15);
        assert!((ds.mass(11) - 2.0 / 12.0).abs() < 1e-15);
        for n in [3, 7, 100] {
            let ring = GraphLaw::new(GraphKind::Ring, n).unwrap().outdegree_pmf();
            assert_eq!(ring, DegreeDistribution::point_mass(2));
        }
    }

    #[test]
    fn empirical_pmf_of_regular_configuration() {
        let law = GraphLaw::new(
            GraphKind::ConfigurationByDegree(DegreeDistribution::point_mass(3)),
            100,
        )
        .unwrap();
        let g = law.sample(&mut rng(4));
        assert_eq!(empirical_outdegree(&g), DegreeDistribution::point_mass(3));
    }

    #[test]
    fn configuration_caps_large_degrees() {
        let dist = DegreeDistribution::new([(1, 0.5)], 0.5).unwrap();
        let law = GraphLaw::new(GraphKind::ConfigurationByDegree(dist), 5).unwrap();
        let pmf = law.outdegree_pmf();
        assert_eq!(pmf.mass(4), 0.5);
        let g = law.sample(&mut rng(5));
        for u in 0..5 {
            assert!(matches!(g.outdegree(u), 1 | 4));
        }
    }

    #[test]
    fn max_indegree_examples() {
        let ring = GraphLaw::new(GraphKind::Ring, 5)
            .unwrap()
            .sample(&mut rng(6));
        assert_eq!(max_indegree(&ring), 2);
        assert_eq!(max_indegree(&GraphSnapshot::isolated(4)), 0);
    }

    #[test]
    fn invalid_laws() {
        assert!(GraphLaw::new(GraphKind::DisjointTriangles, 10).is_err());
        assert!(GraphLaw::new(GraphKind::DeterministicDRegularDirected(5), 5).is_err());
        assert!(GraphLaw::new(GraphKind::Ring, 2).is_err());
        assert!(GraphLaw::new(GraphKind::DisjointTriangles, 9).is_ok());
    }

    #[test]
    fn triangles_and_shift_graph() {
        let g = GraphLaw::new(GraphKind::DisjointTriangles, 9)
            .unwrap()
            .sample(&mut rng(7));
        for u in 0..9 {
            let nb = g.out_neighbors(u);
            assert_eq!(nb.len(), 2);
            // the two neighbors are adjacent to each other
            assert!(g.has_edge(nb[0] as usize, nb[1] as usize));
        }
        let g = GraphLaw::new(GraphKind::DeterministicDRegularDirected(3), 10)
            .unwrap()
            .sample(&mut rng(8));
        assert!((0..10).all(|u| g.outdegree(u) == 3));
        assert_eq!(g.indegrees(), vec![3; 10]);
    }
}
