//! Exact and exhaustive reference algorithms. Ground truth for tests and
//! acceptance runs; none of this sits on the estimator hot path.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::graph::{canon, BMatching, Edge, Matching, SimpleGraph, VertexId};
use crate::prf;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance with {n} vertices exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("graph is not bipartite")]
    NotBipartite,
}

pub const GENERAL_EXACT_CAP: usize = 64;
pub const AUG3_CAP: usize = 24;
pub const EXHAUSTIVE_CAP: usize = 24;

/// Rank of an edge: a real key in [0,1) plus a total tie-break.
#[derive(Clone, Copy, Debug)]
pub struct Rank {
    pub key: f64,
    pub tie: u128,
}

impl PartialEq for Rank {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Rank {}
impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(self.tie.cmp(&other.tie))
    }
}

#[inline]
pub fn pair_tie(u: usize, v: usize) -> u128 {
    let (a, b) = canon(u, v);
    ((a as u128) << 64) | b as u128
}

/// Seeded ranks over unordered vertex pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankFunction {
    pub seed: u64,
}

impl RankFunction {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    #[inline]
    pub fn rank(&self, u: VertexId, v: VertexId) -> Rank {
        let (a, b) = canon(u, v);
        Rank {
            key: prf::unit(prf::prf2(self.seed, a as u64, b as u64)),
            tie: pair_tie(a, b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMode {
    Bipartite,
    General,
}

/// Maximum matching and its size.
pub fn max_matching_exact(
    g: &SimpleGraph,
    mode: ExactMode,
) -> Result<(usize, Matching), OracleError> {
    let m = match mode {
        ExactMode::Bipartite => {
            let side = g.two_coloring().ok_or(OracleError::NotBipartite)?;
            hopcroft_karp(g, &side)
        }
        ExactMode::General => {
            if g.n() > GENERAL_EXACT_CAP {
                return Err(OracleError::TooLarge {
                    n: g.n(),
                    cap: GENERAL_EXACT_CAP,
                });
            }
            blossom(g)
        }
    };
    Ok((m.len(), m))
}

/// Hopcroft–Karp on a graph whose proper 2-coloring is `side`.
pub fn hopcroft_karp(g: &SimpleGraph, side: &[bool]) -> Matching {
    const INF: u32 = u32::MAX;
    let n = g.n();
    let mut m = Matching::new(n);
    let left: Vec<usize> = (0..n).filter(|&v| side[v]).collect();
    let mut dist = vec![INF; n];
    loop {
        let mut queue = VecDeque::new();
        for &u in &left {
            if m.is_matched(u) {
                dist[u] = INF;
            } else {
                dist[u] = 0;
                queue.push_back(u);
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                match m.partner(v) {
                    None => found = true,
                    Some(w) if dist[w] == INF => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut iter = vec![0usize; n];
        for &u in &left {
            if !m.is_matched(u) {
                hk_augment(g, &mut m, &mut dist, &mut iter, u);
            }
        }
    }
    m
}

fn hk_augment(
    g: &SimpleGraph,
    m: &mut Matching,
    dist: &mut [u32],
    iter: &mut [usize],
    root: usize,
) -> bool {
    // Iterative DFS along layered edges.
    let mut stack: Vec<usize> = vec![root];
    let mut via: Vec<usize> = Vec::new();
    while let Some(&u) = stack.last() {
        let ns = g.neighbors(u);
        if iter[u] >= ns.len() {
            dist[u] = u32::MAX;
            stack.pop();
            via.pop();
            continue;
        }
        let v = ns[iter[u]];
        iter[u] += 1;
        match m.partner(v) {
            None => {
                via.push(v);
                // stack[i] is matched to via[i]
                for (i, &x) in stack.iter().enumerate() {
                    let y = via[i];
                    if let Some(old) = m.partner(x) {
                        m.remove(x, old);
                    }
                    if let Some(old) = m.partner(y) {
                        m.remove(y, old);
                    }
                    m.add(x, y);
                }
                return true;
            }
            Some(w) if dist[w] == dist[u].wrapping_add(1) => {
                via.push(v);
                stack.push(w);
            }
            _ => {}
        }
    }
    false
}

/// Edmonds' blossom algorithm; no size cap.
pub fn blossom(g: &SimpleGraph) -> Matching {
    Blossom::new(g).run().0
}

/// Blossom plus the number of elementary steps it took.
pub fn blossom_with_work(g: &SimpleGraph) -> (Matching, u64) {
    Blossom::new(g).run()
}

struct Blossom<'g> {
    g: &'g SimpleGraph,
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    mark: Vec<bool>,
    work: u64,
}

const NIL: usize = usize::MAX;

impl<'g> Blossom<'g> {
    fn new(g: &'g SimpleGraph) -> Self {
        let n = g.n();
        Self {
            g,
            mate: vec![NIL; n],
            parent: vec![NIL; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
            mark: vec![false; n],
            work: 0,
        }
    }

    fn run(mut self) -> (Matching, u64) {
        let n = self.g.n();
        self.work += (n + self.g.edges().len()) as u64;
        for &(u, v) in self.g.edges() {
            if self.mate[u] == NIL && self.mate[v] == NIL {
                self.mate[u] = v;
                self.mate[v] = u;
            }
        }
        for root in 0..n {
            if self.mate[root] != NIL {
                continue;
            }
            if let Some(mut v) = self.find_path(root) {
                while v != NIL {
                    let pv = self.parent[v];
                    let ppv = self.mate[pv];
                    self.mate[v] = pv;
                    self.mate[pv] = v;
                    v = ppv;
                }
            }
        }
        let mut m = Matching::new(n);
        for u in 0..n {
            let v = self.mate[u];
            if v != NIL && u < v {
                m.add(u, v);
            }
        }
        (m, self.work)
    }

    fn lca(&mut self, mut a: usize, mut b: usize) -> usize {
        self.work += self.mark.len() as u64;
        self.mark.iter_mut().for_each(|x| *x = false);
        loop {
            a = self.base[a];
            self.mark[a] = true;
            if self.mate[a] == NIL {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if self.mark[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    fn find_path(&mut self, root: usize) -> Option<usize> {
        let n = self.g.n();
        self.work += 3 * n as u64;
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = NIL);
        for i in 0..n {
            self.base[i] = i;
        }
        self.used[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            self.work += self.g.neighbors(v).len() as u64;
            for idx in 0..self.g.neighbors(v).len() {
                let to = self.g.neighbors(v)[idx];
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NIL && self.parent[self.mate[to]] != NIL) {
                    let cur = self.lca(v, to);
                    self.work += 2 * n as u64;
                    self.in_blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NIL {
                    self.parent[to] = v;
                    if self.mate[to] == NIL {
                        return Some(to);
                    }
                    let t = self.mate[to];
                    self.used[t] = true;
                    queue.push_back(t);
                }
            }
        }
        None
    }
}

/// Exhaustive maximum matching by memoized branching; n ≤ 24.
pub fn max_matching_exhaustive(g: &SimpleGraph) -> Result<usize, OracleError> {
    if g.n() > EXHAUSTIVE_CAP {
        return Err(OracleError::TooLarge {
            n: g.n(),
            cap: EXHAUSTIVE_CAP,
        });
    }
    let adj: Vec<u32> = (0..g.n())
        .map(|v| g.neighbors(v).iter().fold(0u32, |a, &w| a | (1 << w)))
        .collect();
    fn best(mask: u32, adj: &[u32], memo: &mut FxHashMap<u32, usize>) -> usize {
        if mask == 0 {
            return 0;
        }
        if let Some(&r) = memo.get(&mask) {
            return r;
        }
        let v = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << v);
        let mut r = best(rest, adj, memo);
        let mut cand = adj[v] & rest;
        while cand != 0 {
            let u = cand.trailing_zeros();
            cand &= cand - 1;
            r = r.max(1 + best(rest & !(1 << u), adj, memo));
        }
        memo.insert(mask, r);
        r
    }
    let full = if g.n() == 32 {
        u32::MAX
    } else {
        (1u32 << g.n()) - 1
    };
    Ok(best(full, &adj, &mut FxHashMap::default()))
}

/// Greedy over `order`: add each edge whose endpoints are both free.
pub fn greedy_in_order(n: usize, order: impl IntoIterator<Item = Edge>) -> Matching {
    let mut m = Matching::new(n);
    for (u, v) in order {
        if u != v && !m.is_matched(u) && !m.is_matched(v) {
            m.add(u, v);
        }
    }
    m
}

/// GMM(G, π): scan edges in increasing rank.
pub fn greedy_maximal_matching(g: &SimpleGraph, ranks: &RankFunction) -> Matching {
    let mut order: Vec<(Rank, Edge)> = g
        .edges()
        .iter()
        .map(|&(u, v)| (ranks.rank(u, v), (u, v)))
        .collect();
    order.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    greedy_in_order(g.n(), order.into_iter().map(|(_, e)| e))
}

pub fn is_maximal(g: &SimpleGraph, m: &Matching) -> bool {
    g.edges()
        .iter()
        .all(|&(u, v)| m.is_matched(u) || m.is_matched(v))
}

/// One copy per listed edge while both endpoints have residual capacity,
/// then rescans the distinct edges of `order` until nothing more fits.
pub fn maximal_b_matching_reference(g: &SimpleGraph, caps: &[u32], order: &[Edge]) -> BMatching {
    let mut b = BMatching::new(caps.to_vec());
    for &(u, v) in order {
        if g.has_edge(u, v) {
            b.add_copies(u, v, 1);
        }
    }
    let mut distinct: Vec<Edge> = Vec::new();
    let mut seen = rustc_hash::FxHashSet::default();
    for &(u, v) in order {
        if g.has_edge(u, v) && seen.insert(canon(u, v)) {
            distinct.push((u, v));
        }
    }
    loop {
        let mut added = false;
        for &(u, v) in &distinct {
            added |= b.add_copies(u, v, 1) > 0;
        }
        if !added {
            break;
        }
    }
    b
}

/// True iff no edge of `eligible` can take one more copy.
pub fn is_maximal_b_matching(b: &BMatching, eligible: &[Edge]) -> bool {
    eligible
        .iter()
        .all(|&(u, v)| b.residual(u) == 0 || b.residual(v) == 0)
}

/// Maximum number of vertex-disjoint length-3 augmenting paths w.r.t. `m`.
///
/// Restricted to M plus the edges between matched and free vertices, every
/// augmenting path has length three, so the answer is μ of that graph − |M|.
pub fn count_disjoint_3aug(g: &SimpleGraph, m: &Matching) -> Result<usize, OracleError> {
    if g.n() > AUG3_CAP {
        return Err(OracleError::TooLarge {
            n: g.n(),
            cap: AUG3_CAP,
        });
    }
    Ok(disjoint_3aug_uncapped(g, m))
}

pub(crate) fn disjoint_3aug_uncapped(g: &SimpleGraph, m: &Matching) -> usize {
    let keep = g
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| m.contains(u, v) || (m.is_matched(u) != m.is_matched(v)));
    let h = SimpleGraph::new(g.n(), keep);
    blossom(&h).len() - m.len()
}

/// Edges of `g` with both endpoints unmatched by `m`.
pub fn uncovered_edges(g: &SimpleGraph, m: &Matching) -> Vec<Edge> {
    g.edges()
        .iter()
        .copied()
        .filter(|&(u, v)| !m.is_matched(u) && !m.is_matched(v))
        .collect()
}

/// Whether some U with |U| ≤ ε·μ makes `m` maximal in G[V∖U]: a minimum
/// vertex cover question on the uncovered subgraph.
pub fn amm_witness_check(
    g: &SimpleGraph,
    m: &Matching,
    eps: f64,
    mu: usize,
) -> Result<bool, OracleError> {
    let budget = (eps * mu as f64 + 1e-9).floor().max(0.0) as usize;
    let unc = uncovered_edges(g, m);
    cover_decision(&unc, budget)
}

const COVER_EDGE_CAP: usize = 4000;

fn cover_decision(edges: &[Edge], k: usize) -> Result<bool, OracleError> {
    if edges.is_empty() {
        return Ok(true);
    }
    let lb = greedy_in_order(
        edges.iter().map(|e| e.1 + 1).max().unwrap_or(0),
        edges.iter().copied(),
    )
    .len();
    if lb > k {
        return Ok(false);
    }
    if 2 * lb <= k {
        return Ok(true);
    }
    if edges.len() > COVER_EDGE_CAP {
        return Err(OracleError::TooLarge {
            n: edges.len(),
            cap: COVER_EDGE_CAP,
        });
    }
    Ok(cover_at_most(edges.to_vec(), k))
}

/// Exact decision "vertex cover of size ≤ k exists" by bounded branching.
pub fn cover_at_most(edges: Vec<Edge>, k: usize) -> bool {
    if edges.is_empty() {
        return true;
    }
    if k == 0 {
        return false;
    }
    let mut deg: FxHashMap<usize, usize> = FxHashMap::default();
    for &(u, v) in &edges {
        *deg.entry(u).or_default() += 1;
        *deg.entry(v).or_default() += 1;
    }
    let (&v, &dv) = deg
        .iter()
        .max_by_key(|&(&x, &d)| (d, std::cmp::Reverse(x)))
        .unwrap();
    if dv == 1 {
        return edges.len() <= k;
    }
    if edges.len() > k * dv {
        return false;
    }
    let without = |removed: &dyn Fn(usize) -> bool| -> Vec<Edge> {
        edges
            .iter()
            .copied()
            .filter(|&(a, b)| !removed(a) && !removed(b))
            .collect()
    };
    if cover_at_most(without(&|x| x == v), k - 1) {
        return true;
    }
    let nbrs: Vec<usize> = edges
        .iter()
        .filter_map(|&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
        .collect();
    nbrs.len() <= k && cover_at_most(without(&|x| nbrs.contains(&x)), k - nbrs.len())
}

/// Exact minimum vertex cover size of an edge set.
pub fn min_vertex_cover(edges: &[Edge]) -> usize {
    (0..).find(|&k| cover_at_most(edges.to_vec(), k)).unwrap()
}


/// Vertex-disjoint length-3 augmenting paths `[u', u, v, v']` w.r.t. a matching.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AugPathCollection {
    pub paths: Vec<[VertexId; 4]>,
}

impl AugPathCollection {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Checks endpoint freeness, the middle matching edge, the outer graph
    /// edges and pairwise disjointness.
    pub fn validate(&self, g: &SimpleGraph, m: &Matching) -> Result<(), String> {
        let mut used = rustc_hash::FxHashSet::default();
        for p in &self.paths {
            let [a, u, v, b] = *p;
            if m.is_matched(a) || m.is_matched(b) {
                return Err(format!("path {p:?} has a matched endpoint"));
            }
            if !m.contains(u, v) {
                return Err(format!("path {p:?} middle edge not in the matching"));
            }
            if !g.has_edge(a, u) || !g.has_edge(v, b) {
                return Err(format!("path {p:?} uses a non-edge"));
            }
            for x in p {
                if !used.insert(*x) {
                    return Err(format!("vertex {x} shared between paths"));
                }
            }
        }
        Ok(())
    }
}
