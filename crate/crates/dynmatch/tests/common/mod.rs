//! Independent reference implementations used only by tests.
#![allow(dead_code)]

use dynmatch::graph::{canon, Edge, SimpleGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> SimpleGraph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    SimpleGraph::new(n, edges)
}

pub fn random_bipartite(l: usize, r_: usize, p: f64, seed: u64) -> SimpleGraph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..l {
        for v in l..l + r_ {
            if r.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    SimpleGraph::new(l + r_, edges)
}

/// Maximum matching size by plain recursion over the lowest free vertex.
pub fn brute_mu(n: usize, edges: &[Edge]) -> usize {
    fn go(v: usize, n: usize, used: &mut Vec<bool>, adj: &[Vec<usize>]) -> usize {
        let mut v = v;
        while v < n && used[v] {
            v += 1;
        }
        if v >= n {
            return 0;
        }
        used[v] = true;
        let mut best = go(v + 1, n, used, adj);
        for &w in &adj[v] {
            if !used[w] {
                used[w] = true;
                best = best.max(1 + go(v + 1, n, used, adj));
                used[w] = false;
            }
        }
        used[v] = false;
        best
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    go(0, n, &mut vec![false; n], &adj)
}

/// Greedy over `order`, returning the matched partner of every vertex.
pub fn greedy_partners(n: usize, order: &[Edge]) -> Vec<Option<usize>> {
    let mut mate = vec![None; n];
    for &(u, v) in order {
        if u != v && mate[u].is_none() && mate[v].is_none() {
            mate[u] = Some(v);
            mate[v] = Some(u);
        }
    }
    mate
}

/// Whether every edge has an endpoint in the vertex set given by `mask`.
pub fn covers(edges: &[Edge], mask: u64) -> bool {
    edges
        .iter()
        .all(|&(u, v)| mask >> u & 1 == 1 || mask >> v & 1 == 1)
}

/// Minimum vertex cover by enumerating subsets (n ≤ 20).
pub fn brute_min_cover(n: usize, edges: &[Edge]) -> usize {
    (0u64..1 << n)
        .filter(|&m| covers(edges, m))
        .map(|m| m.count_ones() as usize)
        .min()
        .unwrap_or(0)
}

pub fn sorted(mut e: Vec<Edge>) -> Vec<Edge> {
    for x in e.iter_mut() {
        *x = canon(x.0, x.1);
    }
    e.sort_unstable();
    e
}
