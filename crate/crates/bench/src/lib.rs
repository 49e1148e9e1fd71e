//! Shared fixtures for the benchmarks.

use pdpsearch::generators::small_world;
use pdpsearch::{infect, Graph, InfectionConfig, Population};

/// A small-world graph with an infected population seeded at vertex 0.
pub fn infected_small_world(n: usize, q: f64) -> (Graph, Population) {
    let g = small_world(n, 3, 0.1, 1);
    let cfg = InfectionConfig {
        seed_vertex: 0,
        p: 0.5,
        q,
        rounds: 8,
        rng_seed: 7,
        protect_seed: true,
    };
    let pop = infect(&g, &cfg).expect("valid infection config");
    (g, pop)
}
