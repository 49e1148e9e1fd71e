//! Synthetic targeted populations from a spread-then-immunity process.

use serde::{Deserialize, Serialize};

use crate::dp::NoiseSource;
use crate::error::{Error, Result};
use crate::graph::{Graph, Population, VertexId, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfectionConfig {
    pub seed_vertex: VertexId,
    /// Per-round infection probability.
    pub p: f64,
    /// Immunity probability.
    pub q: f64,
    pub rounds: usize,
    pub rng_seed: u64,
    /// Keep the seed infected through the immunity phase.
    #[serde(default = "default_true")]
    pub protect_seed: bool,
}

fn default_true() -> bool {
    true
}

impl InfectionConfig {
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if !g.contains(self.seed_vertex) {
            return Err(Error::invalid(format!(
                "seed vertex {} out of range",
                self.seed_vertex
            )));
        }
        for (name, x) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1], got {x}"
                )));
            }
        }
        if self.rounds == 0 {
            return Err(Error::invalid("infection needs at least one round"));
        }
        Ok(())
    }
}

/// Infected set before immunity.
///
/// Every round draws one uniform per vertex in id order; an uninfected vertex
/// adjacent to the set infected at the start of the round joins if its draw is
/// below `p`. Runs with equal `rng_seed` share draws, so the result grows with `p`.
pub fn spread(g: &Graph, cfg: &InfectionConfig) -> Result<VertexSet> {
    cfg.validate(g)?;
    let mut src = NoiseSource::new(cfg.rng_seed, 0);
    spread_with(g, cfg, &mut src)
}

fn spread_with(g: &Graph, cfg: &InfectionConfig, src: &mut NoiseSource) -> Result<VertexSet> {
    let n = g.vertex_count();
    let mut infected = vec![false; n];
    infected[cfg.seed_vertex] = true;
    for _ in 0..cfg.rounds {
        let exposed: Vec<bool> = (0..n)
            .map(|v| !infected[v] && g.neighbors(v).iter().any(|&u| infected[u]))
            .collect();
        for v in 0..n {
            let u = src.uniform();
            if exposed[v] && u < cfg.p {
                infected[v] = true;
            }
        }
    }
    Ok((0..n).filter(|&v| infected[v]).collect())
}

/// Run spread and immunity; survivors form the targeted population.
pub fn infect(g: &Graph, cfg: &InfectionConfig) -> Result<Population> {
    cfg.validate(g)?;
    let mut src = NoiseSource::new(cfg.rng_seed, 0);
    let infected = spread_with(g, cfg, &mut src)?;
    let mut survivors = Vec::with_capacity(infected.len());
    for v in g.vertices() {
        let nu = src.uniform();
        let keep = nu > cfg.q || (cfg.protect_seed && v == cfg.seed_vertex);
        if keep && infected.contains(&v) {
            survivors.push(v);
        }
    }
    Population::new(g.vertex_count(), survivors)
}
