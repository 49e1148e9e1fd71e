//! Length-bounded flow `Flow_k(v, T)` as a linear program over a layered network.
//!
//! The network holds `k + 1` copies of the vertex set. A source feeds every target
//! `t` at layer 1 with unit capacity, and each undirected edge `{i, j}` becomes
//! the arcs `i^l -> j^(l+1)` and `j^l -> i^(l+1)` for `l` in `1..=k`, all copies
//! of one edge sharing a single unit capacity. Every copy of `v` beyond layer 1
//! is merged into the sink, so flow reaching `v` early terminates there instead
//! of passing through it.
//!
//! The LP is solved by a dense primal simplex with Bland's rule, exactly over
//! rationals by default. Every solution carries a dual certificate that
//! [`verify_certificate`] checks independently of the solver.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Arithmetic the simplex can run on.
pub trait LpNumber: Clone + fmt::Debug + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }
    fn lt(&self, other: &Self) -> bool {
        other.sub(self).is_positive()
    }
    fn to_f64(&self) -> f64;
}

impl LpNumber for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Floating mode; magnitudes below this count as zero.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

impl LpNumber for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_TOLERANCE
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_TOLERANCE
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Endpoint {
    Source,
    Sink,
    /// Index into [`LayeredNetwork::nodes`].
    Node(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LayerNode {
    pub vertex: VertexId,
    /// 1-based layer.
    pub layer: usize,
}

/// One LP variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FlowArc {
    pub tail: Endpoint,
    pub head: Endpoint,
    /// 0 for source arcs, otherwise the layer of the tail.
    pub layer: usize,
    /// Original edge `(u, w)` traversed as `u -> w`; `None` for source arcs.
    pub edge: Option<(VertexId, VertexId)>,
    /// Index into [`LayeredNetwork::couplings`]; `None` for source arcs.
    pub coupling: Option<usize>,
    /// Target fed by a source arc.
    pub target: Option<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayeredNetwork {
    pub k: usize,
    pub sink_vertex: VertexId,
    pub targets: Vec<VertexId>,
    /// Internal layered vertices that survived pruning.
    pub nodes: Vec<LayerNode>,
    pub arcs: Vec<FlowArc>,
    /// Original edges (`u < w`) with at least one surviving arc.
    pub couplings: Vec<(VertexId, VertexId)>,
    /// Variable count of the full construction, `|T| + 2|E|k`.
    pub unpruned_variables: usize,
}

impl LayeredNetwork {
    pub fn layer_count(&self) -> usize {
        self.k + 1
    }

    pub fn variable_count(&self) -> usize {
        self.arcs.len()
    }

    /// CPLEX LP text for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let name = |a: &FlowArc| match (a.target, a.edge) {
            (Some(t), _) => format!("z_s_{t}"),
            (None, Some((u, w))) => format!("z_{}_{u}_{w}", a.layer),
            _ => unreachable!("every arc is a source arc or an edge copy"),
        };
        let terms = |ids: &[usize], sign: &str| -> String {
            ids.iter()
                .map(|&i| format!("{sign} {}", name(&self.arcs[i])))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(
            w,
            "\\ Flow_{} into vertex {} from targets {:?}",
            self.k, self.sink_vertex, self.targets
        );
        let _ = writeln!(w, "Maximize");
        let sources: Vec<usize> = (0..self.arcs.len())
            .filter(|&i| self.arcs[i].tail == Endpoint::Source)
            .collect();
        let obj = terms(&sources, "+");
        let _ = writeln!(
            w,
            " flow: {}",
            if obj.is_empty() {
                "0 z_none".into()
            } else {
                obj
            }
        );
        let _ = writeln!(w, "Subject To");
        for (ni, node) in self.nodes.iter().enumerate() {
            let inflow: Vec<usize> = (0..self.arcs.len())
                .filter(|&i| self.arcs[i].head == Endpoint::Node(ni))
                .collect();
            let outflow: Vec<usize> = (0..self.arcs.len())
                .filter(|&i| self.arcs[i].tail == Endpoint::Node(ni))
                .collect();
            let _ = writeln!(
                w,
                " conserve_{}_{}: {} {} = 0",
                node.layer,
                node.vertex,
                terms(&inflow, "+"),
                terms(&outflow, "-")
            );
        }
        for (ci, &(u, v)) in self.couplings.iter().enumerate() {
            let members: Vec<usize> = (0..self.arcs.len())
                .filter(|&i| self.arcs[i].coupling == Some(ci))
                .collect();
            let _ = writeln!(w, " edge_{u}_{v}: {} <= 1", terms(&members, "+"));
        }
        for &i in &sources {
            let _ = writeln!(
                w,
                " cap_{}: + {} <= 1",
                name(&self.arcs[i]),
                name(&self.arcs[i])
            );
        }
        let _ = writeln!(w, "End");
        out
    }
}

/// Build the pruned layered network for `Flow_k(v, targets)`.
pub fn build_layered_network(
    g: &Graph,
    v: VertexId,
    targets: &BTreeSet<VertexId>,
    k: usize,
) -> Result<LayeredNetwork> {
    if !g.contains(v) {
        return Err(Error::invalid(format!("vertex {v} out of range")));
    }
    if k == 0 {
        return Err(Error::invalid("flow length bound k must be at least 1"));
    }
    if targets.is_empty() {
        return Err(Error::invalid("flow needs a nonempty target set"));
    }
    if targets.contains(&v) {
        return Err(Error::invalid(format!("vertex {v} is in the target set")));
    }
    if let Some(&t) = targets.iter().find(|&&t| !g.contains(t)) {
        return Err(Error::invalid(format!("target {t} out of range")));
    }

    let n = g.vertex_count();
    // Layered vertex (x, l) has id (l - 1) * n + x for l in 1..=k+1.
    let lid = |x: VertexId, l: usize| (l - 1) * n + x;
    let endpoint = |x: VertexId, l: usize| -> Option<usize> {
        if x == v {
            None
        } else {
            Some(lid(x, l))
        }
    };

    // Raw arcs over layered ids; `None` head means the sink.
    struct Raw {
        tail: Option<usize>,
        head: Option<usize>,
        layer: usize,
        edge: Option<(VertexId, VertexId)>,
        target: Option<VertexId>,
    }
    let mut raw = Vec::new();
    for &t in targets {
        raw.push(Raw {
            tail: None,
            head: Some(lid(t, 1)),
            layer: 0,
            edge: None,
            target: Some(t),
        });
    }
    let mut unpruned = targets.len();
    for layer in 1..=k {
        for &(a, b) in g.edges() {
            for (from, to) in [(a, b), (b, a)] {
                unpruned += 1;
                if from == v {
                    // Copies of v past layer 1 are the sink and emit nothing.
                    continue;
                }
                raw.push(Raw {
                    tail: Some(lid(from, layer)),
                    head: endpoint(to, layer + 1),
                    layer,
                    edge: Some((from, to)),
                    target: None,
                });
            }
        }
    }

    let total = n * (k + 1);
    let mut out_arcs: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut in_arcs: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (i, a) in raw.iter().enumerate() {
        if let Some(t) = a.tail {
            out_arcs[t].push(i);
        }
        if let Some(h) = a.head {
            in_arcs[h].push(i);
        }
    }
    let mut reachable = vec![false; total];
    let mut queue: VecDeque<usize> = raw
        .iter()
        .filter(|a| a.tail.is_none())
        .filter_map(|a| a.head)
        .collect();
    for &x in &queue {
        reachable[x] = true;
    }
    while let Some(x) = queue.pop_front() {
        for &ai in &out_arcs[x] {
            if let Some(h) = raw[ai].head {
                if !reachable[h] {
                    reachable[h] = true;
                    queue.push_back(h);
                }
            }
        }
    }
    let mut coreachable = vec![false; total];
    let mut queue: VecDeque<usize> = raw
        .iter()
        .filter(|a| a.head.is_none())
        .filter_map(|a| a.tail)
        .collect();
    for &x in &queue {
        coreachable[x] = true;
    }
    while let Some(x) = queue.pop_front() {
        for &ai in &in_arcs[x] {
            if let Some(t) = raw[ai].tail {
                if !coreachable[t] {
                    coreachable[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    let keep_tail = |t: Option<usize>| t.is_none_or(|x| reachable[x] && coreachable[x]);
    let keep_head = |h: Option<usize>| h.is_none_or(|x| reachable[x] && coreachable[x]);

    let mut node_index: Vec<Option<usize>> = vec![None; total];
    let mut nodes = Vec::new();
    for (id, slot) in node_index.iter_mut().enumerate() {
        if reachable[id] && coreachable[id] {
            *slot = Some(nodes.len());
            nodes.push(LayerNode {
                vertex: id % n,
                layer: id / n + 1,
            });
        }
    }
    let to_endpoint = |x: Option<usize>, missing: Endpoint| match x {
        None => missing,
        Some(id) => Endpoint::Node(node_index[id].expect("kept node")),
    };

    let mut couplings: Vec<(VertexId, VertexId)> = Vec::new();
    let mut arcs = Vec::new();
    for a in raw
        .iter()
        .filter(|a| keep_tail(a.tail) && keep_head(a.head))
    {
        let coupling = a.edge.map(|(x, y)| {
            let key = (x.min(y), x.max(y));
            match couplings.iter().position(|&c| c == key) {
                Some(ci) => ci,
                None => {
                    couplings.push(key);
                    couplings.len() - 1
                }
            }
        });
        arcs.push(FlowArc {
            tail: to_endpoint(a.tail, Endpoint::Source),
            head: to_endpoint(a.head, Endpoint::Sink),
            layer: a.layer,
            edge: a.edge,
            coupling,
            target: a.target,
        });
    }

    Ok(LayeredNetwork {
        k,
        sink_vertex: v,
        targets: targets.iter().copied().collect(),
        nodes,
        arcs,
        couplings,
        unpruned_variables: unpruned,
    })
}

/// Dual solution of the flow LP.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualCertificate<T> {
    /// Free multiplier per conservation constraint (aligned with `nodes`).
    pub potentials: Vec<T>,
    /// Nonnegative multiplier per shared edge capacity (aligned with `couplings`).
    pub edge_prices: Vec<T>,
    /// Nonnegative multiplier per unit source capacity (aligned with `targets`).
    pub source_prices: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSolution<T = BigRational> {
    pub value: T,
    /// Flow on each arc, aligned with [`LayeredNetwork::arcs`].
    pub assignment: Vec<T>,
    pub certificate: DualCertificate<T>,
}

/// Rows of the `A x <= b` form handed to the simplex.
enum Row {
    /// `sign * (inflow - outflow) <= 0` at node `node`.
    Conservation {
        node: usize,
        sign: i8,
    },
    Edge(usize),
    Source(usize),
}

/// Solve the LP exactly or in floating point, depending on `T`.
pub fn solve_flow_lp<T: LpNumber>(net: &LayeredNetwork) -> FlowSolution<T> {
    let nvars = net.arcs.len();
    let mut rows = Vec::new();
    for node in 0..net.nodes.len() {
        rows.push(Row::Conservation { node, sign: 1 });
        rows.push(Row::Conservation { node, sign: -1 });
    }
    rows.extend((0..net.couplings.len()).map(Row::Edge));
    rows.extend((0..net.targets.len()).map(Row::Source));

    let coefficient = |row: &Row, arc: &FlowArc| -> i64 {
        match *row {
            Row::Conservation { node, sign } => {
                let mut c = 0;
                if arc.head == Endpoint::Node(node) {
                    c += 1;
                }
                if arc.tail == Endpoint::Node(node) {
                    c -= 1;
                }
                c * i64::from(sign)
            }
            Row::Edge(ci) => i64::from(arc.coupling == Some(ci)),
            Row::Source(ti) => i64::from(arc.target == Some(net.targets[ti])),
        }
    };
    let a: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| net.arcs.iter().map(|arc| coefficient(r, arc)).collect())
        .collect();
    let b: Vec<i64> = rows
        .iter()
        .map(|r| match r {
            Row::Conservation { .. } => 0,
            _ => 1,
        })
        .collect();
    let c: Vec<i64> = net
        .arcs
        .iter()
        .map(|arc| i64::from(arc.tail == Endpoint::Source))
        .collect();

    let (x, y, value) = simplex_max::<T>(&a, &b, &c);
    debug_assert_eq!(x.len(), nvars);

    let mut potentials = vec![T::zero(); net.nodes.len()];
    let mut edge_prices = vec![T::zero(); net.couplings.len()];
    let mut source_prices = vec![T::zero(); net.targets.len()];
    for (row, yi) in rows.iter().zip(y) {
        match *row {
            Row::Conservation { node, sign: 1 } => potentials[node] = potentials[node].add(&yi),
            Row::Conservation { node, .. } => potentials[node] = potentials[node].sub(&yi),
            Row::Edge(ci) => edge_prices[ci] = yi,
            Row::Source(ti) => source_prices[ti] = yi,
        }
    }
    FlowSolution {
        value,
        assignment: x,
        certificate: DualCertificate {
            potentials,
            edge_prices,
            source_prices,
        },
    }
}

/// Primal simplex for `max c.x` s.t. `A x <= b`, `x >= 0`, with `b >= 0`.
///
/// Starts from the all-slack basis. Entering and leaving variables follow
/// Bland's smallest-index rule, so the pivot sequence is deterministic and
/// cannot cycle. Returns the primal point, the row duals and the optimum.
fn simplex_max<T: LpNumber>(a: &[Vec<i64>], b: &[i64], c: &[i64]) -> (Vec<T>, Vec<T>, T) {
    let m = a.len();
    let nvars = c.len();
    let width = nvars + m + 1;
    let rhs = width - 1;
    let num = |v: i64| -> T {
        match v {
            0 => T::zero(),
            1 => T::one(),
            -1 => T::zero().sub(&T::one()),
            _ => {
                let mut acc = T::zero();
                for _ in 0..v.unsigned_abs() {
                    acc = acc.add(&T::one());
                }
                if v < 0 {
                    T::zero().sub(&acc)
                } else {
                    acc
                }
            }
        }
    };

    let mut tableau: Vec<Vec<T>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![T::zero(); width];
        for (j, &aij) in a[i].iter().enumerate() {
            if aij != 0 {
                row[j] = num(aij);
            }
        }
        row[nvars + i] = T::one();
        row[rhs] = num(b[i]);
        tableau.push(row);
    }
    let mut objective = vec![T::zero(); width];
    for (j, &cj) in c.iter().enumerate() {
        if cj != 0 {
            objective[j] = num(-cj);
        }
    }
    let mut basis: Vec<usize> = (nvars..nvars + m).collect();

    while let Some(entering) = (0..width - 1).find(|&j| objective[j].is_negative()) {
        let mut leaving: Option<(usize, T)> = None;
        for i in 0..m {
            if !tableau[i][entering].is_positive() {
                continue;
            }
            let ratio = tableau[i][rhs].div(&tableau[i][entering]);
            let better = match &leaving {
                None => true,
                Some((li, best)) => ratio.lt(best) || (!best.lt(&ratio) && basis[i] < basis[*li]),
            };
            if better {
                leaving = Some((i, ratio));
            }
        }
        let (pivot_row, _) = leaving.expect("flow LP is bounded by its unit capacities");
        pivot(&mut tableau, &mut objective, pivot_row, entering);
        basis[pivot_row] = entering;
    }

    let mut x = vec![T::zero(); nvars];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < nvars {
            x[bv] = tableau[i][rhs].clone();
        }
    }
    let y = (0..m).map(|i| objective[nvars + i].clone()).collect();
    let value = objective[rhs].clone();
    (x, y, value)
}

fn pivot<T: LpNumber>(tableau: &mut [Vec<T>], objective: &mut [T], row: usize, col: usize) {
    let inv = T::one().div(&tableau[row][col]);
    let support: Vec<usize> = (0..tableau[row].len())
        .filter(|&j| !tableau[row][j].is_zero())
        .collect();
    for &j in &support {
        tableau[row][j] = tableau[row][j].mul(&inv);
    }
    let pivot_row = tableau[row].clone();
    let eliminate = |target: &mut [T]| {
        let factor = target[col].clone();
        if factor.is_zero() {
            return;
        }
        for &j in &support {
            target[j] = target[j].sub(&factor.mul(&pivot_row[j]));
        }
        // Exact in rational mode; removes drift in floating mode.
        target[col] = T::zero();
    };
    for (i, r) in tableau.iter_mut().enumerate() {
        if i != row {
            eliminate(r);
        }
    }
    eliminate(objective);
}

/// Check primal feasibility, dual feasibility and equal objectives.
pub fn verify_certificate<T: LpNumber>(net: &LayeredNetwork, sol: &FlowSolution<T>) -> bool {
    let x = &sol.assignment;
    let cert = &sol.certificate;
    if x.len() != net.arcs.len()
        || cert.potentials.len() != net.nodes.len()
        || cert.edge_prices.len() != net.couplings.len()
        || cert.source_prices.len() != net.targets.len()
    {
        return false;
    }
    if x.iter().any(LpNumber::is_negative) {
        return false;
    }

    let mut balance = vec![T::zero(); net.nodes.len()];
    let mut edge_load = vec![T::zero(); net.couplings.len()];
    let mut primal = T::zero();
    for (arc, xa) in net.arcs.iter().zip(x) {
        if let Endpoint::Node(h) = arc.head {
            balance[h] = balance[h].add(xa);
        }
        if let Endpoint::Node(t) = arc.tail {
            balance[t] = balance[t].sub(xa);
        }
        if let Some(ci) = arc.coupling {
            edge_load[ci] = edge_load[ci].add(xa);
        }
        if arc.tail == Endpoint::Source {
            if T::one().lt(xa) {
                return false;
            }
            primal = primal.add(xa);
        }
    }
    if !balance.iter().all(LpNumber::is_zero) || edge_load.iter().any(|l| T::one().lt(l)) {
        return false;
    }
    if !primal.sub(&sol.value).is_zero() {
        return false;
    }

    if cert
        .edge_prices
        .iter()
        .chain(&cert.source_prices)
        .any(LpNumber::is_negative)
    {
        return false;
    }
    let potential = |e: Endpoint| match e {
        Endpoint::Node(i) => cert.potentials[i].clone(),
        _ => T::zero(),
    };
    for arc in &net.arcs {
        let mut reduced = potential(arc.head).sub(&potential(arc.tail));
        if let Some(ci) = arc.coupling {
            reduced = reduced.add(&cert.edge_prices[ci]);
        }
        if let Some(t) = arc.target {
            let ti = net
                .targets
                .iter()
                .position(|&x| x == t)
                .expect("target listed");
            reduced = reduced.add(&cert.source_prices[ti]);
        }
        let cost = if arc.tail == Endpoint::Source {
            T::one()
        } else {
            T::zero()
        };
        if reduced.lt(&cost) {
            return false;
        }
    }
    let dual = cert
        .edge_prices
        .iter()
        .chain(&cert.source_prices)
        .fold(T::zero(), |acc, p| acc.add(p));
    dual.sub(&sol.value).is_zero()
}

/// `Flow_k(v, targets)` exactly; zero when `targets` is empty.
pub fn flow_value(
    g: &Graph,
    v: VertexId,
    targets: &BTreeSet<VertexId>,
    k: usize,
) -> Result<BigRational> {
    if targets.is_empty() {
        if k == 0 {
            return Err(Error::invalid("flow length bound k must be at least 1"));
        }
        return Ok(BigRational::from_integer(BigInt::zero()));
    }
    let net = build_layered_network(g, v, targets, k)?;
    Ok(solve_flow_lp::<BigRational>(&net).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn set(xs: &[VertexId]) -> BTreeSet<VertexId> {
        xs.iter().copied().collect()
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn exact(g: &Graph, v: VertexId, t: &[VertexId], k: usize) -> (LayeredNetwork, FlowSolution) {
        let net = build_layered_network(g, v, &set(t), k).unwrap();
        let sol = solve_flow_lp::<BigRational>(&net);
        assert!(verify_certificate(&net, &sol));
        (net, sol)
    }

    #[test]
    fn path_construction() {
        // t=0, a=1, v=2
        let g = generators::path(3);
        let (net, sol) = exact(&g, 2, &[0], 2);
        assert_eq!(net.layer_count(), 3);
        assert_eq!(net.unpruned_variables, 1 + 2 * 2 * 2);
        assert_eq!(net.variable_count(), 3);
        assert_eq!(sol.value, rat(1));
    }

    #[test]
    fn k1_keeps_only_direct_edges() {
        // targets 0 and 1; 0 adjacent to v=3, 1 only via 2.
        let g = Graph::from_edges(4, [(0, 3), (1, 2), (2, 3)]).unwrap();
        let (net, sol) = exact(&g, 3, &[0, 1], 1);
        let layer_arcs: Vec<_> = net.arcs.iter().filter_map(|a| a.edge).collect();
        assert_eq!(layer_arcs, vec![(0, 3)]);
        assert_eq!(sol.value, rat(1));
    }

    #[test]
    fn disconnected_gives_zero() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let (net, sol) = exact(&g, 3, &[0], 3);
        assert!(net.arcs.is_empty());
        assert_eq!(sol.value, rat(0));
    }

    #[test]
    fn two_disjoint_paths() {
        // t1=0 - a=2 - v=4, t2=1 - b=3 - v=4
        let g = Graph::from_edges(5, [(0, 2), (2, 4), (1, 3), (3, 4)]).unwrap();
        assert_eq!(exact(&g, 4, &[0, 1], 2).1.value, rat(2));
    }

    #[test]
    fn coupled_instance_f1() {
        // t1=0, t2=1, a=2, v=3
        let g = Graph::from_edges(4, [(0, 2), (1, 2), (2, 3)]).unwrap();
        let (_, sol) = exact(&g, 3, &[0, 1], 2);
        assert_eq!(sol.value, rat(1));
    }

    #[test]
    fn shorter_paths_count_at_larger_k() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        for k in 1..=4 {
            assert_eq!(exact(&g, 1, &[0], k).1.value, rat(1), "k={k}");
        }
    }

    #[test]
    fn floating_mode_agrees() {
        let g = generators::gnp(12, 0.35, 4);
        let net = build_layered_network(&g, 0, &set(&[3, 5, 7, 9]), 3).unwrap();
        let exact = solve_flow_lp::<BigRational>(&net);
        let float = solve_flow_lp::<f64>(&net);
        assert!(verify_certificate(&net, &float));
        assert!((LpNumber::to_f64(&exact.value) - float.value).abs() < 1e-9);
    }

    #[test]
    fn perturbed_assignment_fails_verification() {
        let g = Graph::from_edges(4, [(0, 2), (1, 2), (2, 3)]).unwrap();
        let (net, mut sol) = exact(&g, 3, &[0, 1], 2);
        // Push a second unit through the shared (a, v) edge.
        for x in &mut sol.assignment {
            *x = rat(1);
        }
        sol.value = rat(2);
        assert!(!verify_certificate(&net, &sol));
    }

    #[test]
    fn wrong_dual_fails_verification() {
        let g = generators::path(3);
        let (net, mut sol) = exact(&g, 2, &[0], 2);
        for p in &mut sol.certificate.edge_prices {
            *p = rat(0);
        }
        for p in &mut sol.certificate.source_prices {
            *p = rat(0);
        }
        assert!(!verify_certificate(&net, &sol));
    }

    #[test]
    fn empty_network_zero_flow_verifies() {
        let g = Graph::empty(3);
        let (net, sol) = exact(&g, 2, &[0, 1], 2);
        assert!(net.arcs.is_empty() && net.nodes.is_empty());
        assert_eq!(sol.value, rat(0));
    }

    #[test]
    fn argument_errors() {
        let g = generators::path(3);
        assert!(build_layered_network(&g, 2, &set(&[]), 2).is_err());
        assert!(build_layered_network(&g, 2, &set(&[2]), 2).is_err());
        assert!(build_layered_network(&g, 2, &set(&[0]), 0).is_err());
        assert!(build_layered_network(&g, 7, &set(&[0]), 1).is_err());
        assert_eq!(flow_value(&g, 2, &set(&[]), 2).unwrap(), rat(0));
    }

    #[test]
    fn solve_is_deterministic() {
        let g = generators::gnp(10, 0.4, 8);
        let net = build_layered_network(&g, 1, &set(&[0, 4, 6]), 3).unwrap();
        assert_eq!(
            solve_flow_lp::<BigRational>(&net),
            solve_flow_lp::<BigRational>(&net)
        );
    }

    #[test]
    fn lp_dump_mentions_every_constraint_family() {
        let g = Graph::from_edges(4, [(0, 2), (1, 2), (2, 3)]).unwrap();
        let net = build_layered_network(&g, 3, &set(&[0, 1]), 2).unwrap();
        let lp = net.to_lp_format();
        assert!(lp.starts_with("\\ Flow_2"));
        assert!(lp.contains("Maximize"));
        assert!(lp.contains("conserve_2_2:"));
        assert!(lp.contains("edge_2_3:"));
        assert!(lp.contains("cap_z_s_0:"));
        assert!(lp.trim_end().ends_with("End"));
    }
}
