//! Undirected graphs with optional integer edge weights, the targeted/protected
//! partition, and ground-truth component extraction.
//!
//! Vertex ids are dense (`0..n`). Every neighbor list is sorted ascending, which
//! fixes the iteration order of every algorithm built on top of this module.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::io::BufRead;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type VertexSet = BTreeSet<VertexId>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<VertexId>>,
    /// Canonical edge list, `u < v`, sorted.
    edges: Vec<(VertexId, VertexId)>,
    /// Aligned with `edges` when the graph is weighted.
    weights: Option<Vec<u64>>,
}

impl Graph {
    /// Unweighted graph; duplicate pairs collapse to one edge.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            set.insert(Self::check_pair(n, u, v)?);
        }
        Ok(Self::assemble(n, set.into_iter().collect(), None))
    }

    /// Weighted graph; weights of duplicate pairs are summed.
    pub fn from_weighted_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId, u64)>,
    {
        let mut merged: BTreeMap<(VertexId, VertexId), u64> = BTreeMap::new();
        for (u, v, w) in edges {
            if w == 0 {
                return Err(Error::invalid(format!("edge ({u}, {v}) has weight 0")));
            }
            *merged.entry(Self::check_pair(n, u, v)?).or_default() += w;
        }
        let (edges, weights) = merged.into_iter().unzip();
        Ok(Self::assemble(n, edges, Some(weights)))
    }

    pub fn empty(n: usize) -> Self {
        Self::assemble(n, Vec::new(), None)
    }

    fn check_pair(n: usize, u: VertexId, v: VertexId) -> Result<(VertexId, VertexId)> {
        if u >= n || v >= n {
            return Err(Error::invalid(format!(
                "edge ({u}, {v}) out of range for {n} vertices"
            )));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop on vertex {u}")));
        }
        Ok((u.min(v), u.max(v)))
    }

    fn assemble(n: usize, edges: Vec<(VertexId, VertexId)>, weights: Option<Vec<u64>>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph {
            adjacency,
            edges,
            weights,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.adjacency.len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        u < self.adjacency.len() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Canonical edges with `u < v`, sorted.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<u64> {
        let weights = self.weights.as_ref()?;
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok().map(|i| weights[i])
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.adjacency.len()
    }

    /// Canonical text form: a `# n <count>` header then one `u v [w]` line per edge.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("# n {}\n", self.vertex_count());
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            match &self.weights {
                Some(w) => writeln!(out, "{u} {v} {}", w[i]),
                None => writeln!(out, "{u} {v}"),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Maps dense vertex ids back to the labels found in an input file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    labels: Vec<String>,
    index: HashMap<String, VertexId>,
}

impl IdMap {
    /// Numeric labels sort numerically and come first; the rest sort lexicographically.
    fn from_labels(labels: impl IntoIterator<Item = String>) -> Self {
        let mut labels: Vec<String> = labels
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        labels.sort_by(|a, b| match (a.parse::<u64>(), b.parse::<u64>()) {
            (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
            (Ok(_), Err(_)) => std::cmp::Ordering::Less,
            (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
            (Err(_), Err(_)) => a.cmp(b),
        });
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        IdMap { labels, index }
    }

    /// Identity map for graphs built in memory.
    pub fn identity(n: usize) -> Self {
        Self::from_labels((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn id(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    pub fn resolve(&self, label: &str) -> Result<VertexId> {
        self.id(label)
            .ok_or_else(|| Error::invalid(format!("unknown vertex label {label:?}")))
    }

    /// `<id>\t<label>` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(out, "{i}\t{l}").expect("writing to a String cannot fail");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (id, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: "expected `<id>\\t<label>`".into(),
            })?;
            let id: usize = id.trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad id {id:?}"),
            })?;
            if id != labels.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("ids must be dense and ordered, found {id}"),
                });
            }
            labels.push(label.to_string());
        }
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(IdMap { labels, index })
    }
}

#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: IdMap,
}

/// Parse a whitespace-separated edge list (`u v` or `u v w`, `#` comments).
///
/// In weighted mode a missing weight counts as 1 and duplicate lines sum their
/// weights. In unweighted mode a weight column is validated and ignored, and
/// duplicate lines collapse.
pub fn load_edge_list<R: BufRead>(reader: R, weighted: bool) -> Result<LoadedGraph> {
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let weight = match fields.len() {
            2 => 1,
            3 => match fields[2].parse::<u64>() {
                Ok(w) if w >= 1 => w,
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("weight must be a positive integer, got {:?}", fields[2]),
                    })
                }
            },
            k => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 2 or 3 fields, got {k}"),
                })
            }
        };
        if fields[0] == fields[1] {
            return Err(Error::SelfLoop {
                line: lineno,
                label: fields[0].to_string(),
            });
        }
        records.push((fields[0].to_string(), fields[1].to_string(), weight));
    }

    let ids = IdMap::from_labels(records.iter().flat_map(|(u, v, _)| [u.clone(), v.clone()]));
    let n = ids.len();
    let resolved = records
        .iter()
        .map(|(u, v, w)| (ids.index[u], ids.index[v], *w));
    let graph = if weighted {
        Graph::from_weighted_edges(n, resolved)?
    } else {
        Graph::from_edges(n, resolved.map(|(u, v, _)| (u, v)))?
    };
    Ok(LoadedGraph { graph, ids })
}

/// Keep exactly the edges of weight `>= min_weight`; the vertex set is unchanged.
pub fn sparsify_by_weight(g: &Graph, min_weight: u64) -> Result<Graph> {
    let weights = g
        .weights
        .as_ref()
        .ok_or_else(|| Error::invalid("sparsify_by_weight needs a weighted graph"))?;
    if min_weight == 0 {
        return Err(Error::invalid("min_weight must be positive"));
    }
    let kept = g
        .edges
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w >= min_weight)
        .map(|(&(u, v), &w)| (u, v, w));
    Graph::from_weighted_edges(g.vertex_count(), kept)
}

/// Replace every edge incident to `v` with edges to `new_neighbors`.
///
/// Edges that survive keep their weight; new edges of a weighted graph get weight 1.
pub fn rewire_vertex(g: &Graph, v: VertexId, new_neighbors: &VertexSet) -> Result<Graph> {
    let n = g.vertex_count();
    if v >= n {
        return Err(Error::invalid(format!("vertex {v} out of range")));
    }
    if let Some(&u) = new_neighbors.iter().find(|&&u| u >= n) {
        return Err(Error::invalid(format!("vertex {u} out of range")));
    }
    if new_neighbors.contains(&v) {
        return Err(Error::invalid(format!("vertex {v} cannot neighbor itself")));
    }
    let mut out: Vec<(VertexId, VertexId, u64)> = Vec::with_capacity(g.edge_count());
    for (i, &(a, b)) in g.edges.iter().enumerate() {
        let w = g.weights.as_ref().map_or(1, |ws| ws[i]);
        if a == v || b == v {
            let other = if a == v { b } else { a };
            if new_neighbors.contains(&other) {
                out.push((a, b, w));
            }
        } else {
            out.push((a, b, w));
        }
    }
    for &u in new_neighbors {
        if !g.has_edge(v, u) {
            out.push((u.min(v), u.max(v), 1));
        }
    }
    if g.is_weighted() {
        Graph::from_weighted_edges(n, out)
    } else {
        Graph::from_edges(n, out.into_iter().map(|(a, b, _)| (a, b)))
    }
}

/// The hidden partition of `V` into targeted and protected vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Population {
    targeted: Vec<bool>,
}

impl Population {
    pub fn new(n: usize, targeted: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        let mut flags = vec![false; n];
        for t in targeted {
            if t >= n {
                return Err(Error::invalid(format!("targeted vertex {t} out of range")));
            }
            flags[t] = true;
        }
        Ok(Population { targeted: flags })
    }

    pub fn vertex_count(&self) -> usize {
        self.targeted.len()
    }

    pub fn is_targeted(&self, v: VertexId) -> bool {
        self.targeted[v]
    }

    pub fn targeted(&self) -> VertexSet {
        self.members(true)
    }

    pub fn protected(&self) -> VertexSet {
        self.members(false)
    }

    pub fn targeted_count(&self) -> usize {
        self.targeted.iter().filter(|&&t| t).count()
    }

    fn members(&self, targeted: bool) -> VertexSet {
        self.targeted
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == targeted)
            .map(|(v, _)| v)
            .collect()
    }

    /// A fresh identity oracle with its own query counter.
    pub fn oracle(&self) -> IdentityOracle<'_> {
        IdentityOracle {
            population: self,
            queried: (0..self.targeted.len())
                .map(|_| AtomicBool::new(false))
                .collect(),
            queries: AtomicU64::new(0),
        }
    }
}

/// Membership oracle counting distinct first-time queries.
#[derive(Debug)]
pub struct IdentityOracle<'a> {
    population: &'a Population,
    queried: Vec<AtomicBool>,
    queries: AtomicU64,
}

impl IdentityOracle<'_> {
    pub fn query(&self, v: VertexId) -> bool {
        if !self.queried[v].swap(true, Ordering::Relaxed) {
            self.queries.fetch_add(1, Ordering::Relaxed);
        }
        self.population.is_targeted(v)
    }

    pub fn was_queried(&self, v: VertexId) -> bool {
        self.queried[v].load(Ordering::Relaxed)
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Connected components of the subgraph induced on the targeted vertices.
///
/// Each component is sorted; components are ordered by their smallest member.
pub fn targeted_components(g: &Graph, pop: &Population) -> Vec<Vec<VertexId>> {
    let mut seen = vec![false; g.vertex_count()];
    let mut components = Vec::new();
    for start in g.vertices() {
        if seen[start] || !pop.is_targeted(start) {
            continue;
        }
        seen[start] = true;
        let mut component = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if !seen[w] && pop.is_targeted(w) {
                    seen[w] = true;
                    component.push(w);
                    queue.push_back(w);
                }
            }
        }
        component.sort_unstable();
        components.push(component);
    }
    components
}

/// Parse a partition file: one targeted vertex label per line, `#` comments.
pub fn read_partition<R: BufRead>(reader: R, ids: &IdMap) -> Result<Population> {
    let mut targeted = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let label = line.split('#').next().unwrap_or("").trim();
        if label.is_empty() {
            continue;
        }
        let id = ids.id(label).ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: format!("unknown vertex label {label:?}"),
        })?;
        targeted.push(id);
    }
    Population::new(ids.len(), targeted)
}

pub fn partition_to_text(pop: &Population, ids: &IdMap) -> String {
    let mut out = String::new();
    for v in pop.targeted() {
        writeln!(out, "{}", ids.label(v)).expect("writing to a String cannot fail");
    }
    out
}
