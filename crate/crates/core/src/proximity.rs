//! Statistics of proximity `f(G, v, S)`: how close a vertex sits to a set of
//! discovered targeted vertices, together with analytic bounds on how far one
//! protected vertex can move them.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow;
use crate::graph::{Graph, VertexId, VertexSet};

/// A statistic evaluated at `v` relative to the discovered set `S` (`v ∉ S`).
pub trait ProximityStatistic {
    fn evaluate(&self, g: &Graph, v: VertexId, s: &VertexSet) -> Result<BigRational>;

    /// Scores for many candidates at once; the default evaluates one by one.
    fn evaluate_many(&self, g: &Graph, candidates: &[VertexId], s: &VertexSet) -> Result<Vec<f64>> {
        candidates
            .iter()
            .map(|&v| {
                self.evaluate(g, v, s)
                    .map(|x| x.to_f64().unwrap_or(f64::NAN))
            })
            .collect()
    }

    /// Upper bound on the targeted sensitivity in graphs of maximum degree `d_max`.
    fn sensitivity_bound(&self, _d_max: usize) -> f64 {
        f64::INFINITY
    }

    /// Upper bound on the impact cardinality in graphs of maximum degree `d_max`.
    fn impact_cardinality_bound(&self, _d_max: usize) -> f64 {
        f64::INFINITY
    }
}

/// The built-in statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "sop", rename_all = "lowercase")]
pub enum Sop {
    /// Common neighbors.
    #[serde(rename = "cn")]
    CommonNeighbors,
    /// Simple paths of length at most `k`.
    Path {
        k: usize,
    },
    Triangle,
    /// Length-bounded flow.
    Flow {
        k: usize,
    },
}

impl Sop {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Sop::Path { k: 0 } | Sop::Flow { k: 0 } => {
                Err(Error::invalid("length bound k must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Sop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sop::CommonNeighbors => f.write_str("CN"),
            Sop::Path { k } => write!(f, "Path_{k}"),
            Sop::Triangle => f.write_str("Triangle"),
            Sop::Flow { k } => write!(f, "Flow_{k}"),
        }
    }
}

fn integer(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_args(g: &Graph, v: VertexId, s: &VertexSet) -> Result<()> {
    if !g.contains(v) {
        return Err(Error::invalid(format!("vertex {v} out of range")));
    }
    if s.contains(&v) {
        return Err(Error::invalid(format!(
            "vertex {v} belongs to the discovered set"
        )));
    }
    Ok(())
}

/// Neighbors of `v` that also neighbor some member of `s`.
pub fn common_neighbors(g: &Graph, v: VertexId, s: &VertexSet) -> Result<u64> {
    check_args(g, v, s)?;
    let count = g
        .neighbors(v)
        .iter()
        .filter(|&&u| g.neighbors(u).iter().any(|w| s.contains(w)))
        .count();
    Ok(count as u64)
}

/// Simple paths from `v` of length at most `k` that end in `s`.
///
/// A path passing through one member of `s` and ending at another counts once
/// for each member it ends at.
pub fn path_count(g: &Graph, v: VertexId, s: &VertexSet, k: usize) -> Result<u64> {
    check_args(g, v, s)?;
    if k == 0 {
        return Err(Error::invalid("path length bound k must be at least 1"));
    }
    fn walk(g: &Graph, at: VertexId, s: &VertexSet, left: usize, on_path: &mut [bool]) -> u64 {
        let mut total = 0;
        for &next in g.neighbors(at) {
            if on_path[next] {
                continue;
            }
            if s.contains(&next) {
                total += 1;
            }
            if left > 1 {
                on_path[next] = true;
                total += walk(g, next, s, left - 1, on_path);
                on_path[next] = false;
            }
        }
        total
    }
    if s.is_empty() {
        return Ok(0);
    }
    let mut on_path = vec![false; g.vertex_count()];
    on_path[v] = true;
    Ok(walk(g, v, s, k, &mut on_path))
}

/// Pairs `{a, b} ⊆ s` closing a triangle with `v`.
pub fn triangle_sop(g: &Graph, v: VertexId, s: &VertexSet) -> Result<u64> {
    check_args(g, v, s)?;
    let adjacent: Vec<VertexId> = g
        .neighbors(v)
        .iter()
        .copied()
        .filter(|u| s.contains(u))
        .collect();
    let mut count = 0;
    for (i, &a) in adjacent.iter().enumerate() {
        count += adjacent[i + 1..]
            .iter()
            .filter(|&&b| g.has_edge(a, b))
            .count() as u64;
    }
    Ok(count)
}

/// `Flow_k(v, s)`.
pub fn flow_sop(g: &Graph, v: VertexId, s: &VertexSet, k: usize) -> Result<BigRational> {
    check_args(g, v, s)?;
    flow::flow_value(g, v, s, k)
}

impl ProximityStatistic for Sop {
    fn evaluate(&self, g: &Graph, v: VertexId, s: &VertexSet) -> Result<BigRational> {
        match *self {
            Sop::CommonNeighbors => common_neighbors(g, v, s).map(integer),
            Sop::Path { k } => path_count(g, v, s, k).map(integer),
            Sop::Triangle => triangle_sop(g, v, s).map(integer),
            Sop::Flow { k } => flow_sop(g, v, s, k),
        }
    }

    fn evaluate_many(&self, g: &Graph, candidates: &[VertexId], s: &VertexSet) -> Result<Vec<f64>> {
        match self {
            Sop::CommonNeighbors => {
                // Mark N(S) once, then count marked neighbors per candidate.
                let mut near = vec![false; g.vertex_count()];
                for &m in s {
                    for &u in g.neighbors(m) {
                        near[u] = true;
                    }
                }
                candidates
                    .iter()
                    .map(|&v| {
                        check_args(g, v, s)?;
                        Ok(g.neighbors(v).iter().filter(|&&u| near[u]).count() as f64)
                    })
                    .collect()
            }
            _ => candidates
                .iter()
                .map(|&v| {
                    self.evaluate(g, v, s)
                        .map(|x| x.to_f64().unwrap_or(f64::NAN))
                })
                .collect(),
        }
    }

    fn sensitivity_bound(&self, d: usize) -> f64 {
        let d = d as f64;
        match *self {
            Sop::CommonNeighbors => 1.0,
            Sop::Path { k: 1 } => 0.0,
            Sop::Path { k } => (k - 1) as f64 * d.powi(k as i32 - 1),
            Sop::Triangle | Sop::Flow { .. } => d,
        }
    }

    /// CN: the rewired vertex plus its old and new neighbors, `2d` in total.
    /// Triangle and Path_1 only change at the rewired vertex itself. Path_k and
    /// Flow_k change only within distance `k - 1` of it in either graph.
    fn impact_cardinality_bound(&self, d: usize) -> f64 {
        let d = d as f64;
        let ball = |k: usize| 1.0 + 2.0 * (1..k).map(|j| d.powi(j as i32)).sum::<f64>();
        match *self {
            Sop::CommonNeighbors => 2.0 * d,
            Sop::Triangle | Sop::Path { k: 1 } => 1.0,
            Sop::Path { k } | Sop::Flow { k } => ball(k),
        }
    }
}

/// A statistic bundled with the maximum degree its bounds are evaluated at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SopDescriptor {
    pub sop: Sop,
    pub d_max: usize,
}

impl SopDescriptor {
    pub fn new(sop: Sop, d_max: usize) -> Result<Self> {
        sop.validate()?;
        Ok(SopDescriptor { sop, d_max })
    }

    /// Take `d_max` from the concrete graph.
    pub fn for_graph(sop: Sop, g: &Graph) -> Result<Self> {
        Self::new(sop, g.max_degree())
    }

    pub fn sensitivity(&self) -> f64 {
        self.sop.sensitivity_bound(self.d_max)
    }

    pub fn impact_cardinality(&self) -> f64 {
        self.sop.impact_cardinality_bound(self.d_max)
    }
}

/// Result of a sampled search for the worst neighboring pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityProbe {
    /// Largest `|f(G, t, S) - f(G', t, S)|` seen over targeted `t`.
    pub max_change: BigRational,
    /// Maximum degree (over both graphs) of the pair realizing `max_change`.
    pub d_max_at_max: usize,
    /// Largest maximum degree seen in any sampled pair.
    pub largest_d_max: usize,
    /// Pairs whose change exceeded the statistic's own bound at that pair's degree.
    pub bound_violations: usize,
}

impl SensitivityProbe {
    pub fn max_change_f64(&self) -> f64 {
        self.max_change.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImpactProbe {
    /// Most vertices (of any kind) changed by one rewiring.
    pub all_vertices: usize,
    /// Most targeted vertices changed by one rewiring.
    pub targeted_vertices: usize,
    /// Pairs where the all-vertex count exceeded the statistic's bound.
    pub bound_violations: usize,
}

/// A random neighboring pair `(G, G')` for exhaustive checks on small graphs.
#[derive(Clone, Debug)]
pub struct NeighborPair {
    pub original: Graph,
    pub rewired: Graph,
    pub targeted: VertexSet,
    pub rewired_vertex: VertexId,
}

impl NeighborPair {
    pub fn d_max(&self) -> usize {
        self.original.max_degree().max(self.rewired.max_degree())
    }
}

/// Draw a random graph, partition and protected-vertex rewiring on `n` vertices.
///
/// Edge density is itself random so both sparse and dense pairs show up. Half
/// of the rewirings replace the neighborhood with its complement.
pub fn random_neighbor_pair(n: usize, src: &mut crate::dp::NoiseSource) -> NeighborPair {
    loop {
        let p = 0.2 + 0.6 * src.uniform();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if src.uniform() < p {
                    edges.push((u, v));
                }
            }
        }
        let original = Graph::from_edges(n, edges).expect("valid edges");
        let targeted: VertexSet = (0..n).filter(|_| src.uniform() < 0.5).collect();
        let protected: Vec<VertexId> = (0..n).filter(|v| !targeted.contains(v)).collect();
        if protected.is_empty() || targeted.is_empty() {
            continue;
        }
        let u = protected[(src.uniform() * protected.len() as f64) as usize];
        let new_neighbors: VertexSet = if src.uniform() < 0.5 {
            (0..n)
                .filter(|&w| w != u && !original.has_edge(u, w))
                .collect()
        } else {
            (0..n).filter(|&w| w != u && src.uniform() < 0.5).collect()
        };
        let rewired =
            crate::graph::rewire_vertex(&original, u, &new_neighbors).expect("valid rewiring");
        return NeighborPair {
            original,
            rewired,
            targeted,
            rewired_vertex: u,
        };
    }
}

fn subsets(items: &[VertexId]) -> impl Iterator<Item = VertexSet> + '_ {
    (0u32..1 << items.len()).map(move |mask| {
        items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| v)
            .collect()
    })
}

const MAX_BRUTE_FORCE_N: usize = 8;

/// Sampled lower bound on the targeted sensitivity of `sop` over graphs on `n`
/// vertices: every targeted `t` and every `S ⊆ T \ {t}` of each sampled pair.
pub fn brute_force_targeted_sensitivity<F: ProximityStatistic + ?Sized>(
    sop: &F,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SensitivityProbe> {
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::invalid(format!(
            "brute force needs n <= {MAX_BRUTE_FORCE_N}"
        )));
    }
    let mut src = crate::dp::NoiseSource::new(seed, 0);
    let mut probe = SensitivityProbe {
        max_change: BigRational::zero(),
        d_max_at_max: 0,
        largest_d_max: 0,
        bound_violations: 0,
    };
    for _ in 0..trials {
        let pair = random_neighbor_pair(n, &mut src);
        let d = pair.d_max();
        probe.largest_d_max = probe.largest_d_max.max(d);
        let bound = sop.sensitivity_bound(d);
        let mut worst = BigRational::zero();
        for &t in &pair.targeted {
            let others: Vec<VertexId> = pair.targeted.iter().copied().filter(|&x| x != t).collect();
            for s in subsets(&others) {
                let a = sop.evaluate(&pair.original, t, &s)?;
                let b = sop.evaluate(&pair.rewired, t, &s)?;
                let change = if a > b { a - b } else { b - a };
                if change > worst {
                    worst = change;
                }
            }
        }
        let exceeds = match BigRational::from_float(bound) {
            Some(b) => worst > b,
            None => false,
        };
        if exceeds {
            probe.bound_violations += 1;
        }
        if worst > probe.max_change {
            probe.max_change = worst;
            probe.d_max_at_max = d;
        }
    }
    Ok(probe)
}

/// Sampled lower bound on the impact cardinality of `sop` over graphs on `n`
/// vertices, counting changed vertices overall and among the targeted.
pub fn brute_force_impact_cardinality<F: ProximityStatistic + ?Sized>(
    sop: &F,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ImpactProbe> {
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::invalid(format!(
            "brute force needs n <= {MAX_BRUTE_FORCE_N}"
        )));
    }
    let mut src = crate::dp::NoiseSource::new(seed, 0);
    let mut probe = ImpactProbe {
        all_vertices: 0,
        targeted_vertices: 0,
        bound_violations: 0,
    };
    for _ in 0..trials {
        let pair = random_neighbor_pair(n, &mut src);
        impact_on_pair(sop, &pair, &mut probe)?;
    }
    Ok(probe)
}

/// Fold one neighboring pair into an impact probe (all `S ⊆ T`).
pub fn impact_on_pair<F: ProximityStatistic + ?Sized>(
    sop: &F,
    pair: &NeighborPair,
    probe: &mut ImpactProbe,
) -> Result<()> {
    let bound = sop.impact_cardinality_bound(pair.d_max());
    let targeted: Vec<VertexId> = pair.targeted.iter().copied().collect();
    for s in subsets(&targeted) {
        let mut all = 0;
        let mut among_targeted = 0;
        for v in pair.original.vertices().filter(|v| !s.contains(v)) {
            if sop.evaluate(&pair.original, v, &s)? != sop.evaluate(&pair.rewired, v, &s)? {
                all += 1;
                if pair.targeted.contains(&v) {
                    among_targeted += 1;
                }
            }
        }
        if all as f64 > bound {
            probe.bound_violations += 1;
        }
        probe.all_vertices = probe.all_vertices.max(all);
        probe.targeted_vertices = probe.targeted_vertices.max(among_targeted);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn set(xs: &[VertexId]) -> VertexSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn cn_on_path() {
        let g = generators::path(3);
        assert_eq!(common_neighbors(&g, 0, &set(&[2])).unwrap(), 1);
        assert_eq!(common_neighbors(&g, 0, &set(&[])).unwrap(), 0);
    }

    #[test]
    fn cn_matches_intersection_oracle() {
        let g = generators::gnp(8, 0.5, 42);
        let s = set(&[5, 6]);
        let near: VertexSet = s
            .iter()
            .flat_map(|&m| g.neighbors(m).iter().copied())
            .collect();
        let expected = g.neighbors(0).iter().filter(|u| near.contains(u)).count() as u64;
        assert_eq!(common_neighbors(&g, 0, &s).unwrap(), expected);
    }

    #[test]
    fn path_count_examples() {
        let edge = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(path_count(&edge, 0, &set(&[1]), 1).unwrap(), 1);
        let p = generators::path(4);
        assert_eq!(path_count(&p, 0, &set(&[3]), 2).unwrap(), 0);
        assert_eq!(path_count(&p, 0, &set(&[3]), 3).unwrap(), 1);
        let k4 = generators::complete(4);
        assert_eq!(path_count(&k4, 0, &set(&[3]), 3).unwrap(), 5);
        assert!(path_count(&k4, 0, &set(&[3]), 0).is_err());
    }

    #[test]
    fn triangle_examples() {
        let tri = generators::complete(3);
        assert_eq!(triangle_sop(&tri, 0, &set(&[1, 2])).unwrap(), 1);
        assert_eq!(triangle_sop(&tri, 0, &set(&[1])).unwrap(), 0);
        let k5 = generators::complete(5);
        assert_eq!(triangle_sop(&k5, 0, &set(&[1, 2, 3])).unwrap(), 3);
    }

    #[test]
    fn flow_examples() {
        let g = Graph::from_edges(5, [(0, 2), (2, 4), (1, 3), (3, 4)]).unwrap();
        assert_eq!(flow_sop(&g, 4, &set(&[0, 1]), 2).unwrap(), integer(2));
        assert_eq!(flow_sop(&g, 4, &set(&[0, 1]), 1).unwrap(), integer(0));
    }

    #[test]
    fn v_in_s_is_rejected() {
        let g = generators::path(3);
        for sop in [
            Sop::CommonNeighbors,
            Sop::Path { k: 2 },
            Sop::Triangle,
            Sop::Flow { k: 2 },
        ] {
            assert!(sop.evaluate(&g, 1, &set(&[1, 2])).is_err(), "{sop}");
        }
    }

    #[test]
    fn bounds_table() {
        let d = 4;
        assert_eq!(Sop::CommonNeighbors.sensitivity_bound(d), 1.0);
        assert_eq!(Sop::Path { k: 1 }.sensitivity_bound(d), 0.0);
        assert_eq!(Sop::Path { k: 2 }.sensitivity_bound(d), 4.0);
        assert_eq!(Sop::Path { k: 3 }.sensitivity_bound(d), 32.0);
        assert_eq!(Sop::Triangle.sensitivity_bound(d), 4.0);
        assert_eq!(Sop::Flow { k: 3 }.sensitivity_bound(d), 4.0);
        assert_eq!(Sop::CommonNeighbors.impact_cardinality_bound(d), 8.0);
        assert_eq!(
            Sop::Path { k: 3 }.impact_cardinality_bound(d),
            1.0 + 2.0 * (4.0 + 16.0)
        );
    }

    #[test]
    fn many_matches_single() {
        let g = generators::gnp(15, 0.3, 3);
        let s = set(&[2, 7, 11]);
        let cands: Vec<VertexId> = g.vertices().filter(|v| !s.contains(v)).collect();
        for sop in [Sop::CommonNeighbors, Sop::Path { k: 2 }, Sop::Triangle] {
            let many = sop.evaluate_many(&g, &cands, &s).unwrap();
            for (&v, &x) in cands.iter().zip(&many) {
                assert_eq!(sop.evaluate(&g, v, &s).unwrap().to_f64().unwrap(), x);
            }
        }
    }

    #[test]
    fn serde_shape() {
        let s: Sop = serde_json::from_str(r#"{"sop":"cn"}"#).unwrap();
        assert_eq!(s, Sop::CommonNeighbors);
        let s: Sop = serde_json::from_str(r#"{"sop":"path","k":3}"#).unwrap();
        assert_eq!(s, Sop::Path { k: 3 });
        let s: Sop = serde_json::from_str(r#"{"sop":"flow","k":2}"#).unwrap();
        assert_eq!(s, Sop::Flow { k: 2 });
        assert!(SopDescriptor::new(Sop::Flow { k: 0 }, 3).is_err());
    }

    struct Constant;
    impl ProximityStatistic for Constant {
        fn evaluate(&self, _: &Graph, _: VertexId, _: &VertexSet) -> Result<BigRational> {
            Ok(integer(7))
        }
    }

    #[test]
    fn constant_statistic_has_no_impact() {
        let probe = brute_force_impact_cardinality(&Constant, 6, 50, 1).unwrap();
        assert_eq!(probe.all_vertices, 0);
        let sens = brute_force_targeted_sensitivity(&Constant, 6, 50, 1).unwrap();
        assert!(sens.max_change.is_zero());
    }

    #[test]
    fn path1_impact_spares_targeted_vertices() {
        let probe = brute_force_impact_cardinality(&Sop::Path { k: 1 }, 6, 200, 3).unwrap();
        assert_eq!(probe.targeted_vertices, 0);
        assert!(probe.all_vertices > 0);
        assert_eq!(probe.bound_violations, 0);
    }

    #[test]
    fn cn_impact_on_stars() {
        for leaves in 2..=7 {
            let g = generators::star(leaves);
            let d_pairs = [VertexSet::new(), (1..=leaves).step_by(2).collect()];
            for targeted in [set(&[1, 2]), (1..=leaves).collect::<VertexSet>()] {
                for new in &d_pairs {
                    let rewired = crate::graph::rewire_vertex(&g, 0, new).unwrap();
                    let pair = NeighborPair {
                        original: g.clone(),
                        rewired,
                        targeted: targeted.clone(),
                        rewired_vertex: 0,
                    };
                    let mut probe = ImpactProbe {
                        all_vertices: 0,
                        targeted_vertices: 0,
                        bound_violations: 0,
                    };
                    impact_on_pair(&Sop::CommonNeighbors, &pair, &mut probe).unwrap();
                    assert_eq!(probe.bound_violations, 0);
                    assert!(probe.all_vertices as f64 <= 2.0 * pair.d_max() as f64);
                }
            }
        }
    }

    #[test]
    fn cn_monotone_in_s_on_small_graphs() {
        for seed in 0..30 {
            let g = generators::gnp(7, 0.4, seed);
            let others: Vec<VertexId> = (1..7).collect();
            for s in subsets(&others) {
                for extra in 1..7 {
                    let mut bigger = s.clone();
                    bigger.insert(extra);
                    assert!(
                        common_neighbors(&g, 0, &s).unwrap()
                            <= common_neighbors(&g, 0, &bigger).unwrap()
                    );
                }
            }
        }
    }
}
