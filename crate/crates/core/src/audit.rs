//! Empirical privacy checks on neighboring graphs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dp::{Epsilon, NoiseSource};
use crate::error::{Error, Result};
use crate::graph::{rewire_vertex, Graph, Population, VertexId, VertexSet};
use crate::proximity::{Sop, SopDescriptor};
use crate::search::{search_com, sfs, NoiseMode};

/// A component search instance on two graphs differing in one protected vertex.
#[derive(Clone, Debug)]
pub struct SearchComPair {
    pub original: Graph,
    pub rewired: Graph,
    pub population: Population,
    pub discovered: VertexSet,
    pub investigated: VertexSet,
}

impl SearchComPair {
    /// Both graphs must have the same vertex set and the same population, and
    /// differ only in edges at one protected vertex.
    pub fn new(
        original: Graph,
        rewired_vertex: VertexId,
        new_neighbors: &VertexSet,
        population: Population,
        discovered: VertexSet,
        investigated: VertexSet,
    ) -> Result<Self> {
        if population.is_targeted(rewired_vertex) {
            return Err(Error::invalid(format!(
                "vertex {rewired_vertex} is targeted, not protected"
            )));
        }
        if !discovered.is_subset(&investigated) {
            return Err(Error::invalid("discovered vertices must be investigated"));
        }
        if discovered.iter().any(|&v| !population.is_targeted(v)) {
            return Err(Error::invalid("discovered set contains a protected vertex"));
        }
        let rewired = rewire_vertex(&original, rewired_vertex, new_neighbors)?;
        Ok(SearchComPair {
            original,
            rewired,
            population,
            discovered,
            investigated,
        })
    }

    /// The fixed 6-vertex pair used by the acceptance suite and `check-privacy`.
    ///
    /// Targeted: 0, 1 (found) and 4, 5. Protected: 2, 3. Vertex 3 moves from
    /// {1, 4} to {2, 5}, which changes the common-neighbor scores of 4 and 5.
    pub fn six_vertex() -> Self {
        let g = Graph::from_edges(6, [(0, 1), (0, 2), (1, 3), (3, 4), (2, 4), (4, 5)])
            .expect("valid fixture");
        let pop = Population::new(6, [0, 1, 4, 5]).expect("valid fixture");
        SearchComPair::new(
            g,
            3,
            &VertexSet::from([2, 5]),
            pop,
            VertexSet::from([0, 1]),
            VertexSet::from([0, 1, 2, 3]),
        )
        .expect("valid fixture")
    }

    /// Larger of the two maximum degrees, so bounds hold on both graphs.
    pub fn d_max(&self) -> usize {
        self.original.max_degree().max(self.rewired.max_degree())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutcomeRatio {
    /// Returned vertex, `None` when the search came back empty.
    pub outcome: Option<VertexId>,
    pub count_original: u64,
    pub count_rewired: u64,
    /// |ln(p_original / p_rewired)|.
    pub abs_log_ratio: f64,
    /// Three standard errors of the log ratio.
    pub slack: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub epsilon: f64,
    pub runs: u64,
    pub outcomes: Vec<OutcomeRatio>,
}

impl RatioReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

/// Settings for [`searchcom_ratio_test`].
#[derive(Clone, Copy, Debug)]
pub struct RatioTest {
    pub sop: Sop,
    pub epsilon: Epsilon,
    pub threshold: f64,
    pub mode: NoiseMode,
    pub runs: u64,
    pub seed: u64,
}

/// Distribution of the component search outcome on one graph. Run `i` uses
/// noise stream `stream_offset + i`.
pub fn searchcom_outcomes(
    g: &Graph,
    pair: &SearchComPair,
    test: &RatioTest,
    stream_offset: u64,
) -> Result<BTreeMap<Option<VertexId>, u64>> {
    let sop = SopDescriptor::new(test.sop, pair.d_max())?;
    let mut counts = BTreeMap::new();
    for i in 0..test.runs {
        let oracle = pair.population.oracle();
        let mut investigated = pair.investigated.clone();
        let mut src = NoiseSource::new(test.seed, stream_offset + i);
        let out = search_com(
            g,
            &oracle,
            &pair.discovered,
            &mut investigated,
            &sop,
            test.epsilon,
            test.threshold,
            test.mode,
            &mut src,
        )?;
        *counts.entry(out).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Compare outcome frequencies on the two graphs of `pair`.
///
/// An outcome passes when `|ln(p / p')| <= ε + 3σ`, with σ the delta-method
/// standard error of the log ratio of two binomial proportions. An outcome
/// never seen on one side is scored with half a count there.
pub fn searchcom_ratio_test(pair: &SearchComPair, test: &RatioTest) -> Result<RatioReport> {
    if test.runs == 0 {
        return Err(Error::invalid("ratio test needs at least one run"));
    }
    let a = searchcom_outcomes(&pair.original, pair, test, 0)?;
    let b = searchcom_outcomes(&pair.rewired, pair, test, test.runs)?;
    let n = test.runs as f64;
    let mut keys: Vec<Option<VertexId>> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let outcomes = keys
        .into_iter()
        .map(|outcome| {
            let ca = a.get(&outcome).copied().unwrap_or(0);
            let cb = b.get(&outcome).copied().unwrap_or(0);
            let pa = (ca as f64).max(0.5) / n;
            let pb = (cb as f64).max(0.5) / n;
            let sigma = ((1.0 - pa) / (n * pa) + (1.0 - pb) / (n * pb)).sqrt();
            let abs_log_ratio = (pa / pb).ln().abs();
            let slack = 3.0 * sigma;
            OutcomeRatio {
                outcome,
                count_original: ca,
                count_rewired: cb,
                abs_log_ratio,
                slack,
                passed: abs_log_ratio <= test.epsilon.value() + slack,
            }
        })
        .collect();
    Ok(RatioReport {
        epsilon: test.epsilon.value(),
        runs: test.runs,
        outcomes,
    })
}

/// A rewiring under which statistic-first search answers differently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SfsCounterexample {
    pub rewired_vertex: VertexId,
    pub new_neighbors: VertexSet,
    pub original: Vec<VertexId>,
    pub rewired: Vec<VertexId>,
}

/// Try every rewiring of every protected vertex and compare the search output
/// from `seed`. Returns the number of rewirings checked, or the first mismatch.
pub fn sfs_rewiring_check(
    g: &Graph,
    pop: &Population,
    seed: VertexId,
) -> Result<std::result::Result<usize, SfsCounterexample>> {
    let n = g.vertex_count();
    if n > 16 {
        return Err(Error::invalid(
            "exhaustive rewiring check is limited to 16 vertices",
        ));
    }
    let base = sfs(g, pop, seed)?.targeted;
    let mut checked = 0;
    for v in pop.protected() {
        let others: Vec<VertexId> = (0..n).filter(|&u| u != v).collect();
        for mask in 0u32..(1 << others.len()) {
            let nbrs: VertexSet = others
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &u)| u)
                .collect();
            let g2 = rewire_vertex(g, v, &nbrs)?;
            let out = sfs(&g2, pop, seed)?.targeted;
            checked += 1;
            if out != base {
                return Ok(Err(SfsCounterexample {
                    rewired_vertex: v,
                    new_neighbors: nbrs,
                    original: base,
                    rewired: out,
                }));
            }
        }
    }
    Ok(Ok(checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proximity::common_neighbors;

    #[test]
    fn fixture_changes_scores() {
        let pair = SearchComPair::six_vertex();
        let score = |g: &Graph, v| common_neighbors(g, v, &pair.discovered).unwrap();
        assert_ne!(
            (score(&pair.original, 4), score(&pair.original, 5)),
            (score(&pair.rewired, 4), score(&pair.rewired, 5))
        );
    }

    #[test]
    fn rejects_targeted_rewiring() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let pop = Population::new(3, [0, 2]).unwrap();
        assert!(SearchComPair::new(
            g,
            2,
            &VertexSet::from([0]),
            pop,
            VertexSet::from([0]),
            VertexSet::from([0])
        )
        .is_err());
    }

    #[test]
    fn small_ratio_test_runs() {
        let pair = SearchComPair::six_vertex();
        let test = RatioTest {
            sop: Sop::CommonNeighbors,
            epsilon: Epsilon::new(1.0).unwrap(),
            threshold: 2.0,
            mode: NoiseMode::Conservative,
            runs: 2000,
            seed: 4,
        };
        let report = searchcom_ratio_test(&pair, &test).unwrap();
        let total: u64 = report.outcomes.iter().map(|o| o.count_original).sum();
        assert_eq!(total, 2000);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn sfs_check_on_path() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let pop = Population::new(4, [0, 2]).unwrap();
        // Vertices 1 and 3 are protected, 2^3 rewirings each.
        assert_eq!(sfs_rewiring_check(&g, &pop, 0).unwrap(), Ok(16));
    }
}
