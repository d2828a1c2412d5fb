mod common;

use std::collections::BTreeSet;

use dynmatch::graph::*;
use proptest::prelude::*;

#[test]
fn single_insert_sets_degrees() {
    let mut g = DynamicGraph::new(4);
    g.apply_update(&UpdateEvent::insert(0, 1)).unwrap();
    assert!(g.has_edge(0, 1));
    assert_eq!(
        (0..4).map(|v| g.degree(v)).collect::<Vec<_>>(),
        vec![1, 1, 0, 0]
    );
}

#[test]
fn insert_then_delete_is_empty() {
    let mut g = DynamicGraph::new(4);
    g.apply_update(&UpdateEvent::insert(0, 1)).unwrap();
    g.apply_update(&UpdateEvent::delete(1, 0)).unwrap();
    assert_eq!(g.edge_count(), 0);
    assert!(g.edges().is_empty());
    assert!((0..4).all(|v| g.degree(v) == 0));
}

#[test]
fn duplicate_insert_rejected_without_change() {
    let mut g = DynamicGraph::new(4);
    g.apply_update(&UpdateEvent::insert(0, 1)).unwrap();
    let err = g.apply_update(&UpdateEvent::insert(0, 1)).unwrap_err();
    assert!(matches!(err, GraphError::DuplicateInsert(..)));
    assert_eq!(g.edges(), vec![(0, 1)]);
}

#[test]
fn malformed_updates_rejected() {
    let mut g = DynamicGraph::new(3);
    assert!(matches!(
        g.apply_update(&UpdateEvent::insert(1, 1)),
        Err(GraphError::SelfLoop(1))
    ));
    assert!(matches!(
        g.apply_update(&UpdateEvent::insert(0, 3)),
        Err(GraphError::OutOfRange { .. })
    ));
    assert!(matches!(
        g.apply_update(&UpdateEvent::delete(0, 2)),
        Err(GraphError::MissingDelete(..))
    ));
}

#[test]
fn triangle_membership() {
    let mut g = DynamicGraph::from_edges(4, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    assert!(g.has_edge(0, 2) && g.has_edge(2, 0));
    assert!(!g.has_edge(0, 3));
    assert!(g.edge_exists(0, 9).is_err());
    g.apply_update(&UpdateEvent::delete(1, 2)).unwrap();
    assert!(!g.has_edge(1, 2));
}

#[test]
fn validate_examples() {
    let g = DynamicGraph::from_edges(4, &[(0, 1), (2, 3), (1, 2)]).unwrap();
    assert_eq!(
        validate(&g, Solution::Matching(&[(0, 1), (2, 3)]))
            .unwrap()
            .value,
        2.0
    );
    assert_eq!(
        validate(&g, Solution::Matching(&[(0, 1), (1, 2)])),
        Err(Violation::VertexReused(1))
    );

    let tri = DynamicGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let mut x = FractionalMatching::new(3);
    for (u, v) in [(0, 1), (1, 2), (0, 2)] {
        x.set(u, v, 0.5);
    }
    assert!((validate(&tri, Solution::Fractional(&x)).unwrap().value - 1.5).abs() < 1e-12);
    x.set(0, 1, 0.75);
    assert!(matches!(
        validate(&tri, Solution::Fractional(&x)),
        Err(Violation::FractionalDegree { .. })
    ));
}

#[test]
fn validate_b_matching_caps() {
    let g = DynamicGraph::from_edges(2, &[(0, 1)]).unwrap();
    let ok = BMatching::from_parts(vec![3, 2], [((0, 1), 2)]);
    assert_eq!(validate(&g, Solution::BMatching(&ok)).unwrap().value, 2.0);
    let over = BMatching::from_parts(vec![3, 2], [((0, 1), 3)]);
    assert!(matches!(
        validate(&g, Solution::BMatching(&over)),
        Err(Violation::CapacityExceeded { vertex: 1, .. })
    ));
}

#[test]
fn stream_roundtrip() {
    let text = "# n 5\n# left 2\ni 0 3\ni 1 4\nq\nd 0 3\n";
    let s = UpdateStream::parse(text).unwrap();
    assert_eq!(s.vertex_count(), 5);
    assert_eq!(s.left, Some(2));
    assert_eq!(s.updates().count(), 3);
    assert_eq!(UpdateStream::parse(&s.render()).unwrap(), s);
    assert!(UpdateStream::parse("i 0\n").is_err());
}

/// Naive validator: edges exist, no vertex used twice.
fn naive_matching_ok(g: &DynamicGraph, edges: &[Edge]) -> bool {
    let mut seen = BTreeSet::new();
    edges
        .iter()
        .all(|&(u, v)| u != v && g.has_edge(u, v) && seen.insert(u) && seen.insert(v))
}

proptest! {
    #[test]
    fn random_updates_keep_index_consistent(ops in prop::collection::vec((0usize..12, 0usize..12, any::<bool>()), 0..200)) {
        let mut g = DynamicGraph::new(12);
        let mut reference = BTreeSet::new();
        let mut log = Vec::new();
        for (u, v, ins) in ops {
            if u == v { continue; }
            let e = canon(u, v);
            let ev = if ins { UpdateEvent::insert(u, v) } else { UpdateEvent::delete(u, v) };
            let ok = g.apply_update(&ev).is_ok();
            let expect = if ins { reference.insert(e) } else { reference.remove(&e) };
            prop_assert_eq!(ok, expect);
            if ok { log.push(ev); }
        }
        prop_assert!(g.check_consistency().is_ok());
        prop_assert_eq!(g.edges(), reference.iter().copied().collect::<Vec<_>>());
        let degree_sum: usize = (0..12).map(|v| g.degree(v)).sum();
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
        for u in 0..12 {
            for v in 0..12 {
                prop_assert_eq!(g.has_edge(u, v), u != v && reference.contains(&canon(u, v)));
            }
        }
        let mut replay = DynamicGraph::new(12);
        for ev in &log { replay.apply_update(ev).unwrap(); }
        prop_assert_eq!(replay.edges(), g.edges());
    }

    #[test]
    fn validator_matches_naive(seed in 0u64..500, picks in prop::collection::vec((0usize..8, 0usize..8), 0..6)) {
        let sg = common::random_graph(8, 0.5, seed);
        let g = DynamicGraph::from_edges(8, sg.edges()).unwrap();
        let ok = validate(&g, Solution::Matching(&picks)).is_ok();
        prop_assert_eq!(ok, naive_matching_ok(&g, &picks));
    }
}
