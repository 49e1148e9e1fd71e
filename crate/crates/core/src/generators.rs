//! Small synthetic graph families for tests, benchmarks and desk-scale experiments.

use rand::Rng;

use crate::dp::NoiseSource;
use crate::graph::{Graph, VertexId};

/// Erdős–Rényi G(n, p), pairs visited in lexicographic order.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut src = NoiseSource::new(seed, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if src.uniform() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("generated edges are valid")
}

/// G(n, p) with each edge given a weight uniform in `1..=max_weight`.
pub fn weighted_gnp(n: usize, p: f64, max_weight: u64, seed: u64) -> Graph {
    let mut src = NoiseSource::new(seed, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if src.uniform() < p {
                let w = src.rng().random_range(1..=max_weight);
                edges.push((u, v, w));
            }
        }
    }
    Graph::from_weighted_edges(n, edges).expect("generated edges are valid")
}

/// Star with center 0 and leaves `1..=leaves`.
pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l))).expect("valid star")
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("valid path")
}

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).expect("valid clique")
}

/// Watts–Strogatz small world: ring lattice joining each vertex to its
/// `half_degree` clockwise neighbors, each lattice edge rewired with
/// probability `beta` to a uniformly random endpoint.
pub fn small_world(n: usize, half_degree: usize, beta: f64, seed: u64) -> Graph {
    assert!(
        n > 2 * half_degree + 1,
        "ring too small for the lattice degree"
    );
    let mut src = NoiseSource::new(seed, 0);
    let mut edges: std::collections::BTreeSet<(VertexId, VertexId)> =
        std::collections::BTreeSet::new();
    for u in 0..n {
        for j in 1..=half_degree {
            let v = (u + j) % n;
            edges.insert((u.min(v), u.max(v)));
        }
    }
    for u in 0..n {
        for j in 1..=half_degree {
            let v = (u + j) % n;
            let key = (u.min(v), u.max(v));
            if src.uniform() >= beta || !edges.contains(&key) {
                continue;
            }
            let w = src.rng().random_range(0..n);
            let candidate = (u.min(w), u.max(w));
            if w != u && !edges.contains(&candidate) {
                edges.remove(&key);
                edges.insert(candidate);
            }
        }
    }
    Graph::from_edges(n, edges).expect("generated edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(gnp(30, 0.2, 5), gnp(30, 0.2, 5));
        assert_ne!(gnp(30, 0.2, 5), gnp(30, 0.2, 6));
        assert_eq!(small_world(100, 3, 0.1, 2), small_world(100, 3, 0.1, 2));
    }

    #[test]
    fn small_world_keeps_edge_count() {
        let g = small_world(200, 4, 0.2, 1);
        assert_eq!(g.edge_count(), 800);
    }

    #[test]
    fn families_have_expected_shape() {
        assert_eq!(star(5).degree(0), 5);
        assert_eq!(path(4).edge_count(), 3);
        assert_eq!(complete(5).edge_count(), 10);
        let w = weighted_gnp(20, 0.5, 3, 1);
        assert!(w
            .edges()
            .iter()
            .all(|&(u, v)| (1..=3).contains(&w.weight(u, v).unwrap())));
    }
}
