//! Targeted search: statistic-first search inside a component, component search
//! between components, and the non-private and private drivers alternating them.
//!
//! Every oracle query is recorded in a [`SearchTrace`] with a 1-based budget
//! index. Ties are always broken by ascending vertex id.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::dp::{
    noise_scale, risk_multiplier, sample_laplace, Epsilon, NoiseSource, PrivacyLedger,
};
use crate::error::{Error, Result};
use crate::graph::{Graph, IdentityOracle, Population, VertexId, VertexSet};
use crate::proximity::{ProximityStatistic, SopDescriptor};

/// Noise calibration for component search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Lap(4Δ/ε) on scores, Lap(2·IC/ε) on the stopping threshold.
    #[default]
    Conservative,
    /// Lap(Δ/ε) on scores, Lap(2·IC/ε) on the stopping threshold.
    Standard,
}

impl NoiseMode {
    fn score_multiplier(self) -> f64 {
        match self {
            NoiseMode::Conservative => 4.0,
            NoiseMode::Standard => 1.0,
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conservative" => Ok(NoiseMode::Conservative),
            "standard" => Ok(NoiseMode::Standard),
            other => Err(Error::invalid(format!("unknown noise mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    SeedConfirmation,
    Sfs,
    ComponentSearch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub vertex: VertexId,
    pub targeted: bool,
    /// 1-based position in the overall query sequence.
    pub budget_index: usize,
    pub phase: Phase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Discovery {
    pub vertex: VertexId,
    /// 0 for a pre-confirmed seed.
    pub budget_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComponentEvent {
    pub budget_index: usize,
    pub seed: VertexId,
    pub ledger: PrivacyLedger,
    /// Basic-composition epsilon spent when the component was entered.
    pub epsilon: f64,
    pub risk_multiplier: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    /// A component search used up its (noisy) stopping threshold.
    ComponentBudget,
    /// All requested component rounds ran.
    Rounds,
    /// No uninvestigated vertex was left.
    Exhausted,
    /// The caller's query cap was reached.
    QueryBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchTrace {
    pub queries: Vec<QueryRecord>,
    pub discoveries: Vec<Discovery>,
    pub component_events: Vec<ComponentEvent>,
    pub ledger: PrivacyLedger,
    pub halted_by: HaltReason,
}

impl SearchTrace {
    fn new(ledger: PrivacyLedger) -> Self {
        SearchTrace {
            queries: Vec::new(),
            discoveries: Vec::new(),
            component_events: Vec::new(),
            ledger,
            halted_by: HaltReason::Rounds,
        }
    }

    pub fn budget_used(&self) -> usize {
        self.queries.len()
    }

    pub fn discovered_list(&self) -> Vec<VertexId> {
        self.discoveries.iter().map(|d| d.vertex).collect()
    }

    /// Targeted vertices found using at most `budget` queries.
    pub fn discovered_within(&self, budget: usize) -> usize {
        self.discoveries
            .iter()
            .take_while(|d| d.budget_index <= budget)
            .count()
    }

    pub fn components_within(&self, budget: usize) -> usize {
        self.component_events
            .iter()
            .take_while(|e| e.budget_index <= budget)
            .count()
    }

    /// Epsilon reported by the last component event within `budget`.
    pub fn epsilon_within(&self, budget: usize) -> f64 {
        self.component_events
            .iter()
            .take_while(|e| e.budget_index <= budget)
            .last()
            .map_or(0.0, |e| e.epsilon)
    }

    /// Check the structural invariants every trace must satisfy.
    pub fn check_invariants(&self, pop: &Population) -> std::result::Result<(), String> {
        let mut seen = BTreeSet::new();
        for (i, q) in self.queries.iter().enumerate() {
            if q.budget_index != i + 1 {
                return Err(format!("query {i} has budget index {}", q.budget_index));
            }
            if !seen.insert(q.vertex) {
                return Err(format!("vertex {} queried twice", q.vertex));
            }
            if q.targeted != pop.is_targeted(q.vertex) {
                return Err(format!("wrong oracle answer recorded for {}", q.vertex));
            }
        }
        for (i, d) in self.discoveries.iter().enumerate() {
            let confirmed = self
                .queries
                .iter()
                .any(|q| q.vertex == d.vertex && q.targeted && q.budget_index == d.budget_index);
            let preconfirmed_seed = i == 0 && d.budget_index == 0 && pop.is_targeted(d.vertex);
            if !confirmed && !preconfirmed_seed {
                return Err(format!(
                    "discovery {} is not backed by a positive query",
                    d.vertex
                ));
            }
        }
        if self
            .discoveries
            .windows(2)
            .any(|w| w[0].budget_index >= w[1].budget_index)
        {
            return Err("discoveries out of budget order".into());
        }
        Ok(())
    }
}

/// Parameters shared by [`target`] and [`ptarget`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchParams {
    pub sop: SopDescriptor,
    /// Number of targeted components to look for (`k`).
    pub components: usize,
    /// Failed queries allowed per component search (`N`).
    pub stop_threshold: usize,
    pub epsilon: Epsilon,
    pub mode: NoiseMode,
    /// Spend one query confirming the seed instead of assuming it is targeted.
    pub confirm_seed: bool,
    /// Stop after this many queries overall.
    pub max_queries: Option<usize>,
}

impl SearchParams {
    pub fn new(sop: SopDescriptor, components: usize, stop_threshold: usize) -> Self {
        SearchParams {
            sop,
            components,
            stop_threshold,
            epsilon: Epsilon::INFINITE,
            mode: NoiseMode::Conservative,
            confirm_seed: false,
            max_queries: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: Epsilon) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_queries(mut self, cap: usize) -> Self {
        self.max_queries = Some(cap);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::invalid("number of components k must be at least 1"));
        }
        if self.stop_threshold == 0 {
            return Err(Error::invalid("stopping threshold N must be at least 1"));
        }
        self.sop.sop.validate()
    }
}

enum ComponentOutcome {
    Found(VertexId),
    Halted(HaltReason),
}

/// Mutable state of one search run.
struct Session<'a> {
    g: &'a Graph,
    oracle: IdentityOracle<'a>,
    investigated: Vec<bool>,
    discovered: VertexSet,
    trace: SearchTrace,
    max_queries: Option<usize>,
}

impl<'a> Session<'a> {
    fn new(
        g: &'a Graph,
        pop: &'a Population,
        ledger: PrivacyLedger,
        max_queries: Option<usize>,
    ) -> Result<Self> {
        if pop.vertex_count() != g.vertex_count() {
            return Err(Error::invalid("population and graph sizes differ"));
        }
        Ok(Session {
            g,
            oracle: pop.oracle(),
            investigated: vec![false; g.vertex_count()],
            discovered: VertexSet::new(),
            trace: SearchTrace::new(ledger),
            max_queries,
        })
    }

    fn budget_exhausted(&self) -> bool {
        self.max_queries
            .is_some_and(|cap| self.trace.queries.len() >= cap)
    }

    /// Returns `None` when the query cap is reached.
    fn query(&mut self, v: VertexId, phase: Phase) -> Option<bool> {
        if self.budget_exhausted() {
            return None;
        }
        debug_assert!(!self.investigated[v], "vertex {v} queried twice");
        let targeted = self.oracle.query(v);
        self.investigated[v] = true;
        self.trace.queries.push(QueryRecord {
            vertex: v,
            targeted,
            budget_index: self.trace.queries.len() + 1,
            phase,
        });
        Some(targeted)
    }

    fn discover(&mut self, v: VertexId) {
        self.discovered.insert(v);
        self.trace.discoveries.push(Discovery {
            vertex: v,
            budget_index: self.trace.queries.len(),
        });
    }

    fn enter_component(&mut self, seed: VertexId) {
        let ledger = self.trace.ledger;
        let epsilon = ledger.basic();
        self.trace.component_events.push(ComponentEvent {
            budget_index: self.trace.queries.len(),
            seed,
            ledger,
            epsilon,
            risk_multiplier: risk_multiplier(epsilon),
        });
    }

    fn start(&mut self, pop: &Population, seed: VertexId, confirm: bool) -> Result<()> {
        if !self.g.contains(seed) {
            return Err(Error::invalid(format!("seed vertex {seed} out of range")));
        }
        if confirm {
            match self.query(seed, Phase::SeedConfirmation) {
                Some(true) => {}
                Some(false) => return Err(Error::InvalidSeed(seed)),
                None => {
                    return Err(Error::invalid(
                        "query cap leaves no room to confirm the seed",
                    ))
                }
            }
        } else if !pop.is_targeted(seed) {
            return Err(Error::InvalidSeed(seed));
        }
        self.investigated[seed] = true;
        self.enter_component(seed);
        self.discover(seed);
        Ok(())
    }

    /// Grow the component of the confirmed vertex `start`, examining the
    /// frontier in descending Path_1 order. Returns `false` if the query cap
    /// interrupted it.
    fn sfs(&mut self, start: VertexId) -> bool {
        // Edges from each frontier vertex into the component found so far.
        let mut links = vec![0u64; self.g.vertex_count()];
        let mut frontier: BTreeSet<(Reverse<u64>, VertexId)> = BTreeSet::new();
        let g = self.g;
        let mut grow = |v: VertexId,
                        investigated: &[bool],
                        frontier: &mut BTreeSet<(Reverse<u64>, VertexId)>| {
            for &x in g.neighbors(v) {
                if investigated[x] {
                    continue;
                }
                frontier.remove(&(Reverse(links[x]), x));
                links[x] += 1;
                frontier.insert((Reverse(links[x]), x));
            }
        };
        grow(start, &self.investigated, &mut frontier);
        while let Some(&(key, x)) = frontier.iter().next() {
            match self.query(x, Phase::Sfs) {
                None => return false,
                Some(targeted) => {
                    frontier.remove(&(key, x));
                    if targeted {
                        self.discover(x);
                        grow(x, &self.investigated, &mut frontier);
                    }
                }
            }
        }
        true
    }

    fn uninvestigated(&self) -> Vec<VertexId> {
        self.g
            .vertices()
            .filter(|&v| !self.investigated[v])
            .collect()
    }

    /// Component search on exact statistic values, at most `limit` queries.
    fn exact_component_search(
        &mut self,
        sop: &SopDescriptor,
        limit: usize,
    ) -> Result<ComponentOutcome> {
        let candidates = self.uninvestigated();
        let mut scored: Vec<(BigRational, VertexId)> = candidates
            .into_iter()
            .map(|v| {
                sop.sop
                    .evaluate(self.g, v, &self.discovered)
                    .map(|f| (f, v))
            })
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        self.walk_ranking(scored.into_iter().map(|(_, v)| v), limit as f64)
    }

    /// Component search on noisy values with a noisy stopping threshold.
    fn private_component_search(
        &mut self,
        sop: &SopDescriptor,
        epsilon: Epsilon,
        threshold: f64,
        mode: NoiseMode,
        src: &mut NoiseSource,
    ) -> Result<ComponentOutcome> {
        let candidates = self.uninvestigated();
        let order = noisy_ranking(
            self.g,
            &candidates,
            &self.discovered,
            sop,
            epsilon,
            threshold,
            mode,
            src,
        )?;
        self.walk_ranking(order.ranking.into_iter(), order.noisy_threshold)
    }

    fn walk_ranking(
        &mut self,
        ranking: impl Iterator<Item = VertexId>,
        threshold: f64,
    ) -> Result<ComponentOutcome> {
        let mut count = 0usize;
        for v in ranking {
            if (count as f64) >= threshold {
                return Ok(ComponentOutcome::Halted(HaltReason::ComponentBudget));
            }
            match self.query(v, Phase::ComponentSearch) {
                None => return Ok(ComponentOutcome::Halted(HaltReason::QueryBudget)),
                Some(true) => return Ok(ComponentOutcome::Found(v)),
                Some(false) => count += 1,
            }
        }
        Ok(ComponentOutcome::Halted(HaltReason::Exhausted))
    }
}

struct NoisyRanking {
    noisy_threshold: f64,
    ranking: Vec<VertexId>,
}

/// Draw the noisy threshold, then one noisy score per candidate in ascending id
/// order, and rank candidates by descending noisy score.
#[allow(clippy::too_many_arguments)]
fn noisy_ranking(
    g: &Graph,
    candidates: &[VertexId],
    discovered: &VertexSet,
    sop: &SopDescriptor,
    epsilon: Epsilon,
    threshold: f64,
    mode: NoiseMode,
    src: &mut NoiseSource,
) -> Result<NoisyRanking> {
    let threshold_scale = noise_scale(2.0 * sop.impact_cardinality(), epsilon)?;
    let score_scale = noise_scale(mode.score_multiplier() * sop.sensitivity(), epsilon)?;
    let noisy_threshold = threshold + sample_laplace(threshold_scale, src)?;
    let scores = sop.sop.evaluate_many(g, candidates, discovered)?;
    let mut noisy: Vec<(f64, VertexId)> = Vec::with_capacity(candidates.len());
    for (&v, &f) in candidates.iter().zip(&scores) {
        noisy.push((f + sample_laplace(score_scale, src)?, v));
    }
    noisy.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(NoisyRanking {
        noisy_threshold,
        ranking: noisy.into_iter().map(|(_, v)| v).collect(),
    })
}

/// Output of a standalone statistic-first search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SfsOutput {
    /// Targeted vertices in discovery order, seed first.
    pub targeted: Vec<VertexId>,
    pub investigated: VertexSet,
    pub queries: Vec<QueryRecord>,
}

/// Explore the targeted component of `seed`, which must be targeted.
pub fn sfs(g: &Graph, pop: &Population, seed: VertexId) -> Result<SfsOutput> {
    let mut session = Session::new(g, pop, PrivacyLedger::new(Epsilon::INFINITE), None)?;
    session.start(pop, seed, false)?;
    session.sfs(seed);
    Ok(SfsOutput {
        targeted: session.trace.discovered_list(),
        investigated: session
            .g
            .vertices()
            .filter(|&v| session.investigated[v])
            .collect(),
        queries: session.trace.queries,
    })
}

/// One private component search.
///
/// Scores every vertex outside `investigated`, perturbs them, and queries in
/// descending noisy order until a targeted vertex turns up (returned) or the
/// noisy threshold `threshold + Lap(2·IC/ε)` of failed queries is used up.
/// Queried vertices are added to `investigated`.
#[allow(clippy::too_many_arguments)]
pub fn search_com(
    g: &Graph,
    oracle: &IdentityOracle<'_>,
    discovered: &VertexSet,
    investigated: &mut VertexSet,
    sop: &SopDescriptor,
    epsilon: Epsilon,
    threshold: f64,
    mode: NoiseMode,
    src: &mut NoiseSource,
) -> Result<Option<VertexId>> {
    if threshold < 1.0 {
        return Err(Error::invalid("stopping threshold must be at least 1"));
    }
    let candidates: Vec<VertexId> = g.vertices().filter(|v| !investigated.contains(v)).collect();
    if let Some(&v) = discovered.iter().find(|&&v| !investigated.contains(&v)) {
        return Err(Error::invalid(format!(
            "discovered vertex {v} is not investigated"
        )));
    }
    let order = noisy_ranking(
        g,
        &candidates,
        discovered,
        sop,
        epsilon,
        threshold,
        mode,
        src,
    )?;
    for (count, v) in order.ranking.into_iter().enumerate() {
        if (count as f64) >= order.noisy_threshold {
            return Ok(None);
        }
        investigated.insert(v);
        if oracle.query(v) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// Non-private targeting: SFS, then exact-argmax component search allowing
/// `stop_threshold` failed queries, for `components - 1` rounds.
pub fn target(
    g: &Graph,
    pop: &Population,
    seed: VertexId,
    params: &SearchParams,
) -> Result<SearchTrace> {
    params.validate()?;
    let session = Session::new(
        g,
        pop,
        PrivacyLedger::new(Epsilon::INFINITE),
        params.max_queries,
    )?;
    run_rounds(session, pop, seed, params, |s| {
        s.exact_component_search(&params.sop, params.stop_threshold)
    })
}

/// Private targeting: as [`target`] but each component search is noisy with
/// parameter `params.epsilon`, and each one is charged to the ledger.
pub fn ptarget(
    g: &Graph,
    pop: &Population,
    seed: VertexId,
    params: &SearchParams,
    src: &mut NoiseSource,
) -> Result<SearchTrace> {
    params.validate()?;
    let session = Session::new(
        g,
        pop,
        PrivacyLedger::new(params.epsilon),
        params.max_queries,
    )?;
    run_rounds(session, pop, seed, params, |s| {
        s.private_component_search(
            &params.sop,
            params.epsilon,
            params.stop_threshold as f64,
            params.mode,
            src,
        )
    })
}

fn run_rounds(
    mut session: Session<'_>,
    pop: &Population,
    seed: VertexId,
    params: &SearchParams,
    mut component_search: impl FnMut(&mut Session<'_>) -> Result<ComponentOutcome>,
) -> Result<SearchTrace> {
    session.start(pop, seed, params.confirm_seed)?;
    let mut halted = if session.sfs(seed) {
        HaltReason::Rounds
    } else {
        HaltReason::QueryBudget
    };
    if halted == HaltReason::Rounds {
        for _ in 1..params.components {
            session.trace.ledger.record_round();
            match component_search(&mut session)? {
                ComponentOutcome::Found(v) => {
                    session.enter_component(v);
                    session.discover(v);
                    if !session.sfs(v) {
                        halted = HaltReason::QueryBudget;
                        break;
                    }
                }
                ComponentOutcome::Halted(reason) => {
                    halted = reason;
                    break;
                }
            }
        }
    }
    session.trace.halted_by = halted;
    Ok(session.trace)
}
