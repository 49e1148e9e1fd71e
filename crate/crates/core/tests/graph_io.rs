use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;

use pdpsearch::generators;
use pdpsearch::graph::{load_edge_list, rewire_vertex, sparsify_by_weight, targeted_components};
use pdpsearch::{Graph, Population, VertexId, VertexSet};
use proptest::prelude::*;

const FIXTURE: &str = include_str!("fixtures/edges_seed3.txt");

// Expected values printed by fixtures/make_edges.py.
#[test]
fn fixture_counts_match_python_oracle() {
    let loaded = load_edge_list(Cursor::new(FIXTURE), true).unwrap();
    let g = &loaded.graph;
    assert_eq!(g.vertex_count(), 8);
    assert_eq!(g.edge_count(), 16);
    assert_eq!(g.max_degree(), 6);
    let total: u64 = g
        .edges()
        .iter()
        .map(|&(u, v)| g.weight(u, v).unwrap())
        .sum();
    assert_eq!(total, 38);
    assert_eq!(sparsify_by_weight(g, 2).unwrap().edge_count(), 10);
    assert_eq!(sparsify_by_weight(g, 4).unwrap().edge_count(), 5);
    let expected = [
        ("12", 4),
        ("3", 5),
        ("7", 4),
        ("alice", 2),
        ("bob", 4),
        ("carol", 5),
        ("dave", 2),
        ("eve", 6),
    ];
    for (label, degree) in expected {
        assert_eq!(
            g.degree(loaded.ids.resolve(label).unwrap()),
            degree,
            "{label}"
        );
    }
    let order: Vec<&str> = (0..8).map(|v| loaded.ids.label(v)).collect();
    assert_eq!(
        order,
        ["3", "7", "12", "alice", "bob", "carol", "dave", "eve"]
    );
}

#[test]
fn unweighted_load_collapses_duplicates() {
    let loaded = load_edge_list(Cursor::new(FIXTURE), false).unwrap();
    assert_eq!(loaded.graph.edge_count(), 16);
    assert!(!loaded.graph.is_weighted());
}

#[test]
fn canonical_text_round_trips() {
    let loaded = load_edge_list(Cursor::new(FIXTURE), true).unwrap();
    let text = loaded.graph.to_edge_list_string();
    let again = load_edge_list(Cursor::new(text.as_str()), true).unwrap();
    assert_eq!(again.graph, loaded.graph);
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            Graph::from_edges(n, pairs.into_iter().filter(|(u, v)| u != v)).unwrap()
        })
    })
}

fn arb_graph_and_population(max_n: usize) -> impl Strategy<Value = (Graph, Population)> {
    arb_graph(max_n).prop_flat_map(|g| {
        let n = g.vertex_count();
        proptest::collection::vec(any::<bool>(), n).prop_map(move |flags| {
            let pop = Population::new(n, (0..n).filter(|&v| flags[v])).unwrap();
            (g.clone(), pop)
        })
    })
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Union-find over targeted-targeted edges.
fn union_find_components(g: &Graph, pop: &Population) -> BTreeSet<Vec<VertexId>> {
    let n = g.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(u, v) in g.edges() {
        if pop.is_targeted(u) && pop.is_targeted(v) {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            parent[a] = b;
        }
    }
    let mut groups: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for v in (0..n).filter(|&v| pop.is_targeted(v)) {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().push(v);
    }
    groups.into_values().collect()
}

proptest! {
    #[test]
    fn components_match_union_find((g, pop) in arb_graph_and_population(14)) {
        let comps = targeted_components(&g, &pop);
        let set: BTreeSet<Vec<VertexId>> = comps.iter().cloned().collect();
        prop_assert_eq!(set, union_find_components(&g, &pop));
        prop_assert!(comps.windows(2).all(|w| w[0][0] < w[1][0]));
    }

    #[test]
    fn rewire_only_touches_one_vertex(g in arb_graph(10), pick in any::<prop::sample::Index>(), mask in any::<u16>()) {
        let n = g.vertex_count();
        let v = pick.index(n);
        let nbrs: VertexSet = (0..n).filter(|&u| u != v && mask >> u & 1 == 1).collect();
        let h = rewire_vertex(&g, v, &nbrs).unwrap();
        let got: VertexSet = h.neighbors(v).iter().copied().collect();
        prop_assert_eq!(&got, &nbrs);
        for a in 0..n {
            for b in 0..n {
                if a != v && b != v {
                    prop_assert_eq!(g.has_edge(a, b), h.has_edge(a, b));
                }
            }
        }
    }

    #[test]
    fn sparsify_keeps_heavy_edges(n in 3usize..25, p in 0.1f64..0.9, w in 1u64..5, seed in any::<u64>()) {
        let g = generators::weighted_gnp(n, p, 4, seed);
        let s = sparsify_by_weight(&g, w).unwrap();
        let expected = g.edges().iter().filter(|&&(u, v)| g.weight(u, v).unwrap() >= w).count();
        prop_assert_eq!(s.edge_count(), expected);
        prop_assert_eq!(s.vertex_count(), n);
        for &(u, v) in s.edges() {
            prop_assert_eq!(s.weight(u, v), g.weight(u, v));
        }
    }

    #[test]
    fn neighbor_lists_sorted_and_symmetric(g in arb_graph(15)) {
        for v in g.vertices() {
            prop_assert!(g.neighbors(v).windows(2).all(|w| w[0] < w[1]));
            for &u in g.neighbors(v) {
                prop_assert!(g.neighbors(u).contains(&v));
            }
        }
    }
}
