use std::collections::BTreeSet;

use dynmatch::graph::{canon, DynamicGraph, SimpleGraph, StreamItem, UpdateKind};
use dynmatch::oracles;
use dynmatch_harness::workload::*;

fn workload(g: Generator, n: usize, horizon: usize, seed: u64) -> Workload {
    Workload {
        horizon,
        window: n,
        ..Workload::new(g, n, seed)
    }
}

fn replay(stream: &dynmatch::graph::UpdateStream) -> DynamicGraph {
    let mut g = DynamicGraph::new(stream.vertex_count());
    for ev in stream.updates() {
        g.apply_update(ev).expect("generated streams are valid");
    }
    g
}

#[test]
fn planted_matching_has_known_mu() {
    let s = generate(&workload(Generator::PlantedMatching, 100, 100, 4)).unwrap();
    assert_eq!(s.updates().count(), 100);
    assert!(s.updates().all(|e| e.kind == UpdateKind::Insert));
    let g = replay(&s);
    assert_eq!(oracles::blossom(&SimpleGraph::from(&g)).len(), 50);
    // The planted pairing covers every vertex once.
    let covered: BTreeSet<usize> = (0..100).filter(|&v| g.degree(v) > 0).collect();
    assert_eq!(covered.len(), 100);
}

#[test]
fn sliding_window_deletes_event_from_w_steps_back() {
    let w = 200;
    let wl = Workload {
        window: w,
        ..workload(Generator::SlidingWindow, 120, 1000, 2)
    };
    let s = generate(&wl).unwrap();
    let inserts: Vec<_> = s
        .updates()
        .filter(|e| e.kind == UpdateKind::Insert)
        .map(|e| e.edge())
        .collect();
    let deletes: Vec<_> = s
        .updates()
        .filter(|e| e.kind == UpdateKind::Delete)
        .map(|e| e.edge())
        .collect();
    assert!(!deletes.is_empty());
    for (i, d) in deletes.iter().enumerate() {
        assert_eq!(*d, inserts[i]);
    }
    let mut live = 0usize;
    for ev in s.updates() {
        live = if ev.kind == UpdateKind::Insert {
            live + 1
        } else {
            live - 1
        };
        assert!(live <= w);
    }
    replay(&s);
}

#[test]
fn same_seed_same_bytes() {
    for g in [
        Generator::RandomEr,
        Generator::RandomBipartite,
        Generator::SlidingWindow,
        Generator::PlantedMatching,
    ] {
        let a = generate(&workload(g, 80, 800, 9)).unwrap().render();
        let b = generate(&workload(g, 80, 800, 9)).unwrap().render();
        let c = generate(&workload(g, 80, 800, 10)).unwrap().render();
        assert_eq!(a, b, "{g}");
        assert_ne!(a, c, "{g}");
    }
}

#[test]
fn bipartite_churn_respects_sides() {
    let s = generate(&workload(Generator::RandomBipartite, 60, 2000, 1)).unwrap();
    let l = s.left.unwrap();
    assert_eq!(l, left_size(60));
    assert!(s.updates().all(|e| (e.u < l) != (e.v < l)));
    let g = replay(&s);
    assert!(g.edge_count() > 0);
}

#[test]
fn query_markers_follow_cadence() {
    let wl = Workload {
        query_every: 10,
        ..workload(Generator::RandomEr, 40, 100, 3)
    };
    let s = generate(&wl).unwrap();
    assert_eq!(
        s.items
            .iter()
            .filter(|i| matches!(i, StreamItem::Query))
            .count(),
        10
    );
}

#[test]
fn invalid_parameters_rejected() {
    assert!(generate(&workload(Generator::RandomEr, 1, 10, 0)).is_err());
    assert!(generate(&Workload {
        density: 1.5,
        ..workload(Generator::RandomEr, 10, 10, 0)
    })
    .is_err());
    assert!(generate(&workload(Generator::PlantedMatching, 100, 10, 0)).is_err());
    assert!(generate(&workload(Generator::AdaptiveAdversary, 10, 10, 0)).is_err());
    assert!("nope".parse::<Generator>().is_err());
    assert_eq!(
        "sliding-window".parse::<Generator>().unwrap(),
        Generator::SlidingWindow
    );
}

#[test]
fn sampler_draws_absent_pairs() {
    let sampler = PairSampler {
        n: 6,
        left: Some(3),
    };
    assert_eq!(sampler.pairs(), 9);
    let mut pool = EdgePool::default();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    while let Some(e) = sampler.draw_absent(&mut rng, &pool) {
        assert!(pool.insert(canon(e.0, e.1)));
    }
    assert_eq!(pool.len(), 9);
}
