//! Local access to random greedy maximal matching and the two sublinear
//! estimators built on it: maximal-matching size within additive εn, and the
//! count of reference-matching edges whose endpoints are both matched.

use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{canon, DynamicGraph, Edge, Matching, SimpleGraph, VertexId};
use crate::oracles::{pair_tie, Rank, RankFunction};
use crate::prf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SublinearError {
    #[error("status query used {used} probes, cap {cap}")]
    BudgetExceeded { used: u64, cap: u64 },
    #[error("status query aborted after exhausting restarts")]
    Abort,
    #[error("list index {index} outside the class range {range} of the queried vertex")]
    IndexOutOfClassRange { index: usize, range: usize },
    #[error("precision {0} outside (0, 1/2)")]
    InvalidEpsilon(f64),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
}

/// Thread-safe probe tally.
#[derive(Debug, Default)]
pub struct ProbeCounter(AtomicU64);

impl ProbeCounter {
    #[inline]
    pub fn tick(&self) {
        self.0.fetch_add(1, AtomicOrdering::Relaxed);
    }
    pub fn get(&self) -> u64 {
        self.0.load(AtomicOrdering::Relaxed)
    }
}

/// Adjacency-matrix access: "is (u,v) an edge".
pub trait MatrixOracle {
    fn n(&self) -> usize;
    fn is_edge(&self, u: VertexId, v: VertexId) -> bool;
    fn probes(&self) -> u64;
}

/// Adjacency-list access: "the j-th neighbor of v", `None` past the end.
pub trait ListOracle {
    fn n(&self) -> usize;
    fn neighbor(&self, v: VertexId, j: usize) -> Option<VertexId>;
    fn probes(&self) -> u64;
}

/// Matrix oracle over an arbitrary pair predicate.
pub struct FnMatrix<F> {
    n: usize,
    f: F,
    counter: ProbeCounter,
}

impl<F: Fn(VertexId, VertexId) -> bool> FnMatrix<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self {
            n,
            f,
            counter: ProbeCounter::default(),
        }
    }
}

impl<F: Fn(VertexId, VertexId) -> bool> MatrixOracle for FnMatrix<F> {
    fn n(&self) -> usize {
        self.n
    }
    fn is_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.counter.tick();
        u != v && (self.f)(u, v)
    }
    fn probes(&self) -> u64 {
        self.counter.get()
    }
}

/// Matrix oracle over a dynamic graph (`edge_exists`, counted).
pub fn matrix_of(g: &DynamicGraph) -> FnMatrix<impl Fn(VertexId, VertexId) -> bool + '_> {
    FnMatrix::new(g.n(), move |u, v| g.has_edge(u, v))
}

/// Matrix oracle over a static graph.
pub fn matrix_of_simple(g: &SimpleGraph) -> FnMatrix<impl Fn(VertexId, VertexId) -> bool + '_> {
    FnMatrix::new(g.n(), move |u, v| g.has_edge(u, v))
}

/// Counted list oracle over a static graph.
pub struct GraphList<'g> {
    g: &'g SimpleGraph,
    counter: ProbeCounter,
}

impl<'g> GraphList<'g> {
    pub fn new(g: &'g SimpleGraph) -> Self {
        Self {
            g,
            counter: ProbeCounter::default(),
        }
    }
}

impl ListOracle for GraphList<'_> {
    fn n(&self) -> usize {
        self.g.n()
    }
    fn neighbor(&self, v: VertexId, j: usize) -> Option<VertexId> {
        self.counter.tick();
        self.g.neighbors(v).get(j).copied()
    }
    fn probes(&self) -> u64 {
        self.counter.get()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexStatus {
    Matched(VertexId),
    Unmatched,
}

impl VertexStatus {
    pub fn is_matched(self) -> bool {
        matches!(self, VertexStatus::Matched(_))
    }
}

/// Probe cap per status query and number of fresh restarts before aborting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBudget {
    pub max_probes: Option<u64>,
    pub restarts: u32,
}

impl QueryBudget {
    pub fn unlimited() -> Self {
        Self {
            max_probes: None,
            restarts: 0,
        }
    }

    /// 50·(|E_H|/|V_H|)·ln²(n) with |E| bounded by n(n−1)/2, one restart.
    pub fn for_supergraph(n: usize, s: usize) -> Self {
        let nf = n.max(2) as f64;
        let e_h = nf * nf + nf * (nf - 1.0) / 2.0 + nf * s as f64;
        let v_h = 2.0 * nf + nf * nf + nf * s as f64;
        let cap = 50.0 * (e_h / v_h) * nf.ln().powi(2);
        Self {
            max_probes: Some(cap.ceil() as u64),
            restarts: 1,
        }
    }
}

/// Incident edges of a vertex in increasing rank, produced lazily.
pub trait IncidenceSource {
    fn incident(&mut self, x: usize, idx: usize) -> Option<(Rank, usize)>;
    fn probes(&self) -> u64;
}

/// Enumerates the whole list through the list oracle and sorts it by rank.
pub struct ListSource<'o, O: ListOracle> {
    oracle: &'o O,
    ranks: RankFunction,
    lists: FxHashMap<usize, Vec<(Rank, usize)>>,
}

impl<'o, O: ListOracle> ListSource<'o, O> {
    pub fn new(oracle: &'o O, ranks: RankFunction) -> Self {
        Self {
            oracle,
            ranks,
            lists: FxHashMap::default(),
        }
    }
}

impl<O: ListOracle> IncidenceSource for ListSource<'_, O> {
    fn incident(&mut self, x: usize, idx: usize) -> Option<(Rank, usize)> {
        let (oracle, ranks) = (self.oracle, self.ranks);
        let list = self.lists.entry(x).or_insert_with(|| {
            let mut l: Vec<(Rank, usize)> = (0..)
                .map_while(|j| oracle.neighbor(x, j))
                .map(|w| (ranks.rank(x, w), w))
                .collect();
            l.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            l
        });
        list.get(idx).copied()
    }
    fn probes(&self) -> u64 {
        self.oracle.probes()
    }
}

/// Rank-pruned local simulation of GMM with memoized edge and vertex answers.
pub struct LocalGmm<S: IncidenceSource> {
    src: S,
    edge_memo: FxHashMap<Edge, bool>,
    vertex_memo: FxHashMap<usize, VertexStatus>,
}

struct Frame {
    a: usize,
    b: usize,
    rank: Rank,
    ia: usize,
    ib: usize,
}

impl<S: IncidenceSource> LocalGmm<S> {
    pub fn new(src: S) -> Self {
        Self {
            src,
            edge_memo: FxHashMap::default(),
            vertex_memo: FxHashMap::default(),
        }
    }

    pub fn probes(&self) -> u64 {
        self.src.probes()
    }

    pub fn source(&self) -> &S {
        &self.src
    }

    /// Matched status of `v` under GMM; `cap` bounds the probes of this call.
    pub fn status(&mut self, v: usize, cap: Option<u64>) -> Result<VertexStatus, SublinearError> {
        if let Some(&s) = self.vertex_memo.get(&v) {
            return Ok(s);
        }
        let start = self.src.probes();
        let mut idx = 0;
        let result = loop {
            let next = self.src.incident(v, idx);
            Self::charge(&self.src, start, cap)?;
            let Some((r, w)) = next else {
                break VertexStatus::Unmatched;
            };
            if self.edge_in(v, w, r, start, cap)? {
                break VertexStatus::Matched(w);
            }
            idx += 1;
        };
        self.vertex_memo.insert(v, result);
        Ok(result)
    }

    #[inline]
    fn charge(src: &S, start: u64, cap: Option<u64>) -> Result<(), SublinearError> {
        match cap {
            Some(c) if src.probes() - start > c => Err(SublinearError::BudgetExceeded {
                used: src.probes() - start,
                cap: c,
            }),
            _ => Ok(()),
        }
    }

    fn edge_in(
        &mut self,
        a: usize,
        b: usize,
        rank: Rank,
        start: u64,
        cap: Option<u64>,
    ) -> Result<bool, SublinearError> {
        let root = canon(a, b);
        let mut stack = vec![Frame {
            a,
            b,
            rank,
            ia: 0,
            ib: 0,
        }];
        while let Some(top) = stack.last_mut() {
            let e = canon(top.a, top.b);
            if self.edge_memo.contains_key(&e) {
                stack.pop();
                continue;
            }
            let ca = self.src.incident(top.a, top.ia).filter(|c| c.0 < top.rank);
            let cb = self.src.incident(top.b, top.ib).filter(|c| c.0 < top.rank);
            Self::charge(&self.src, start, cap)?;
            let (from_a, (rf, w)) = match (ca, cb) {
                (None, None) => {
                    self.edge_memo.insert(e, true);
                    stack.pop();
                    continue;
                }
                (Some(x), None) => (true, x),
                (None, Some(y)) => (false, y),
                (Some(x), Some(y)) => {
                    if x.0 < y.0 {
                        (true, x)
                    } else {
                        (false, y)
                    }
                }
            };
            let x = if from_a { top.a } else { top.b };
            let f = canon(x, w);
            match self.edge_memo.get(&f) {
                Some(true) => {
                    self.edge_memo.insert(e, false);
                    stack.pop();
                }
                Some(false) => {
                    if from_a {
                        top.ia += 1;
                    } else {
                        top.ib += 1;
                    }
                }
                None => stack.push(Frame {
                    a: x,
                    b: w,
                    rank: rf,
                    ia: 0,
                    ib: 0,
                }),
            }
        }
        Ok(self.edge_memo[&root])
    }
}

/// Status of `v` under GMM(G, ranks) through list queries, with the restart
/// policy collapsing to a plain failure (the query vertex is fixed).
pub fn gmm_vertex_status<O: ListOracle>(
    oracle: &O,
    v: VertexId,
    ranks: &RankFunction,
    budget: &QueryBudget,
) -> Result<VertexStatus, SublinearError> {
    if v >= oracle.n() {
        return Err(SublinearError::VertexOutOfRange(v));
    }
    LocalGmm::new(ListSource::new(oracle, *ranks)).status(v, budget.max_probes)
}

/// Vertex of the supergraph H.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HVertex {
    V(usize),
    Star(usize),
    /// w^j_i: `W(i, j)`.
    W(usize, usize),
    /// u^j_i: `U(i, j)`.
    U(usize, usize),
}

/// Supergraph H of a graph on n vertices given by a matrix oracle, answering
/// list queries with at most one matrix probe each.
pub struct ImplicitSupergraph<'o, M: MatrixOracle> {
    base: &'o M,
    n: usize,
    s: usize,
    pub delta: f64,
}

impl<'o, M: MatrixOracle> ImplicitSupergraph<'o, M> {
    pub fn new(base: &'o M, delta: f64) -> Self {
        let n = base.n();
        let s = (10.0 * n as f64 / delta).ceil() as usize;
        Self { base, n, s, delta }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// |U_i|.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn base(&self) -> &'o M {
        self.base
    }

    /// |V_H| = 2n + n² + n·s.
    pub fn vertex_count(&self) -> usize {
        2 * self.n + self.n * self.n + self.n * self.s
    }

    pub fn index(&self, x: HVertex) -> usize {
        let n = self.n;
        match x {
            HVertex::V(i) => i,
            HVertex::Star(i) => n + i,
            HVertex::W(i, j) => 2 * n + i * n + j,
            HVertex::U(i, j) => 2 * n + n * n + i * self.s + j,
        }
    }

    pub fn vertex(&self, idx: usize) -> HVertex {
        let n = self.n;
        if idx < n {
            HVertex::V(idx)
        } else if idx < 2 * n {
            HVertex::Star(idx - n)
        } else if idx < 2 * n + n * n {
            let r = idx - 2 * n;
            HVertex::W(r / n, r % n)
        } else {
            let r = idx - 2 * n - n * n;
            HVertex::U(r / self.s, r % self.s)
        }
    }

    /// Prescribed list length of the vertex class.
    pub fn class_range(&self, x: HVertex) -> usize {
        match x {
            HVertex::V(_) => self.n,
            HVertex::Star(_) => self.n + self.s,
            HVertex::W(..) | HVertex::U(..) => 1,
        }
    }

    fn probe(&self, i: usize, j: usize) -> bool {
        self.base.is_edge(i, j)
    }

    /// The j-th neighbor of x (0-based) under the four class rules.
    pub fn list_query(&self, x: HVertex, j: usize) -> Result<Option<HVertex>, SublinearError> {
        let range = self.class_range(x);
        if j >= range {
            return Err(SublinearError::IndexOutOfClassRange { index: j, range });
        }
        Ok(match x {
            HVertex::V(i) => Some(if j != i && self.probe(i, j) {
                HVertex::V(j)
            } else {
                HVertex::Star(j)
            }),
            HVertex::Star(i) if j < self.n => Some(if j != i && self.probe(i, j) {
                HVertex::W(i, j)
            } else {
                HVertex::V(j)
            }),
            HVertex::Star(i) => Some(HVertex::U(i, j - self.n)),
            HVertex::W(i, k) => (k != i && self.probe(i, k)).then_some(HVertex::Star(i)),
            HVertex::U(i, _) => Some(HVertex::Star(i)),
        })
    }
}

const TAG_R: u64 = 0x52;
const TAG_VV: u64 = 0x5656;
const TAG_UMIN: u64 = 0x554D;
const TAG_UIDX: u64 = 0x5549;
const TAG_U: u64 = 0x55;

/// Edge ranks on H. Every H edge gets an independent uniform key; keys are
/// assigned so that a vertex can order its incident slots before probing:
/// slot j of v_i carries R(i,j) (toward v*_j) or VV(i,j) (toward v_j), and
/// slot j of v*_i carries R(j,i) whichever neighbor it resolves to. The s
/// edges into U_i are drawn as their minimum, its position, and the rest
/// conditioned above it.
#[derive(Clone, Copy, Debug)]
pub struct SupergraphRanks {
    pub seed: u64,
    n: usize,
    s: usize,
}

impl SupergraphRanks {
    pub fn new(seed: u64, n: usize, s: usize) -> Self {
        Self { seed, n, s }
    }

    #[inline]
    fn r(&self, i: usize, j: usize) -> f64 {
        prf::unit(prf::prf3(self.seed, TAG_R, i as u64, j as u64))
    }

    #[inline]
    fn vv(&self, i: usize, j: usize) -> f64 {
        let (a, b) = canon(i, j);
        prf::unit(prf::prf3(self.seed, TAG_VV, a as u64, b as u64))
    }

    /// Position and key of the lowest-ranked edge into U_i.
    pub fn u_min(&self, i: usize) -> (usize, f64) {
        let j = (prf::prf3(self.seed, TAG_UIDX, i as u64, 0) % self.s as u64) as usize;
        let r = prf::unit(prf::prf3(self.seed, TAG_UMIN, i as u64, 0));
        (j, -((-r).ln_1p() / self.s as f64).exp_m1())
    }

    fn u_key(&self, i: usize, j: usize) -> f64 {
        let (jm, km) = self.u_min(i);
        if j == jm {
            km
        } else {
            km + (1.0 - km) * prf::unit(prf::prf3(self.seed, TAG_U, i as u64, j as u64))
        }
    }

    fn index(&self, x: HVertex) -> usize {
        let n = self.n;
        match x {
            HVertex::V(i) => i,
            HVertex::Star(i) => n + i,
            HVertex::W(i, j) => 2 * n + i * n + j,
            HVertex::U(i, j) => 2 * n + n * n + i * self.s + j,
        }
    }

    fn make(&self, key: f64, x: HVertex, y: HVertex) -> Rank {
        Rank {
            key,
            tie: pair_tie(self.index(x), self.index(y)),
        }
    }

    /// Rank of the H edge {x, y}; `None` if no H edge of that shape can exist.
    pub fn rank(&self, x: HVertex, y: HVertex) -> Option<Rank> {
        use HVertex::*;
        let key = match (x.min(y), x.max(y)) {
            (V(i), V(j)) if i != j => self.vv(i, j),
            (V(i), Star(j)) => self.r(i, j),
            (Star(i), W(i2, j)) if i == i2 && i != j => self.r(j, i),
            (Star(i), U(i2, j)) if i == i2 => self.u_key(i, j),
            _ => return None,
        };
        Some(self.make(key, x, y))
    }
}

struct LazyList {
    cands: Vec<(Rank, u32, u8)>,
    pos: usize,
    real: Vec<(Rank, usize)>,
}

/// Lazy rank-ordered incidence over H: sorting slot keys costs no probes;
/// a slot is probed only when the scan reaches it.
pub struct SupergraphSource<'h, 'o, M: MatrixOracle> {
    h: &'h ImplicitSupergraph<'o, M>,
    ranks: SupergraphRanks,
    pair_memo: FxHashMap<Edge, bool>,
    lists: FxHashMap<usize, LazyList>,
}

impl<'h, 'o, M: MatrixOracle> SupergraphSource<'h, 'o, M> {
    pub fn new(h: &'h ImplicitSupergraph<'o, M>, seed: u64) -> Self {
        Self {
            h,
            ranks: SupergraphRanks::new(seed, h.n, h.s),
            pair_memo: FxHashMap::default(),
            lists: FxHashMap::default(),
        }
    }

    pub fn ranks(&self) -> SupergraphRanks {
        self.ranks
    }

    /// Matrix answer for a pair of base vertices, probing at most once per pair.
    fn pair(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let h = self.h;
        *self
            .pair_memo
            .entry(canon(i, j))
            .or_insert_with(|| h.probe(i, j))
    }

    fn build(&self, x: HVertex) -> LazyList {
        use HVertex::*;
        let n = self.h.n;
        let rk = &self.ranks;
        let mut cands: Vec<(Rank, u32, u8)> = Vec::new();
        match x {
            V(i) => {
                for j in 0..n {
                    cands.push((rk.make(rk.r(i, j), x, Star(j)), j as u32, 0));
                    if j != i {
                        cands.push((rk.make(rk.vv(i, j), x, V(j)), j as u32, 1));
                    }
                }
            }
            Star(i) => {
                for j in 0..n {
                    // Tie component fixed on the v_j form; the key is what orders slots.
                    cands.push((rk.make(rk.r(j, i), x, V(j)), j as u32, 2));
                }
                let (jm, km) = rk.u_min(i);
                cands.push((rk.make(km, x, U(i, jm)), jm as u32, 3));
            }
            W(i, j) => cands.push((rk.make(rk.r(j, i), x, Star(i)), j as u32, 4)),
            U(i, j) => cands.push((rk.make(rk.u_key(i, j), x, Star(i)), j as u32, 5)),
        }
        cands.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        LazyList {
            cands,
            pos: 0,
            real: Vec::new(),
        }
    }
}

impl<M: MatrixOracle> IncidenceSource for SupergraphSource<'_, '_, M> {
    fn incident(&mut self, xi: usize, idx: usize) -> Option<(Rank, usize)> {
        use HVertex::*;
        let x = self.h.vertex(xi);
        if !self.lists.contains_key(&xi) {
            let l = self.build(x);
            self.lists.insert(xi, l);
        }
        loop {
            let list = &self.lists[&xi];
            if let Some(&hit) = list.real.get(idx) {
                return Some(hit);
            }
            if list.pos >= list.cands.len() {
                return None;
            }
            let (rank, slot, kind) = list.cands[list.pos];
            let j = slot as usize;
            let nb = match (x, kind) {
                (V(i), 0) => (j == i || !self.pair(i, j)).then_some(Star(j)),
                (V(i), 1) => self.pair(i, j).then_some(V(j)),
                (Star(i), 2) => Some(if self.pair(i, j) { W(i, j) } else { V(j) }),
                (Star(i), 3) => Some(U(i, j)),
                (W(i, k), 4) => self.pair(i, k).then_some(Star(i)),
                (U(i, _), 5) => Some(Star(i)),
                _ => unreachable!("candidate kind matches its vertex class"),
            };
            let list = self.lists.get_mut(&xi).unwrap();
            list.pos += 1;
            if let Some(y) = nb {
                let exact = Rank {
                    key: rank.key,
                    tie: pair_tie(self.h.index(x), self.h.index(y)),
                };
                list.real.push((exact, self.h.index(y)));
            }
        }
    }

    fn probes(&self) -> u64 {
        self.h.base.probes()
    }
}

/// Knobs shared by the two estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublinearOptions {
    /// Sample even where the concentration regime is vacuous.
    pub force_sampling: bool,
    /// Override of the per-query budget (default: the supergraph formula).
    pub budget: Option<QueryBudget>,
    /// Leading constant of L in the pair estimator.
    pub sample_constant: f64,
    /// Constant c of the small-n rule n·ε⁴ < c·ln n.
    pub small_n_constant: f64,
}

impl Default for SublinearOptions {
    fn default() -> Self {
        Self {
            force_sampling: false,
            budget: None,
            sample_constant: 1e5,
            small_n_constant: 64.0,
        }
    }
}

impl SublinearOptions {
    pub fn is_small(&self, n: usize, eps: f64) -> bool {
        (n as f64) * eps.powi(4) < self.small_n_constant * (n.max(2) as f64).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Answered without sampling (trivial precondition or empty input).
    Trivial,
    /// Sampled through local status queries.
    Sampled,
    /// Small instance: every base vertex resolved locally, no sampling.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmSizeEstimate {
    pub nu: f64,
    pub route: Route,
    pub samples: u64,
    pub probes: u64,
    pub restarts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub l: u64,
    pub x: u64,
    pub kappa: f64,
    pub route: Route,
    pub probes: u64,
    pub restarts: u64,
}

/// Greedy completion of `m` over base pairs in lexicographic order: the
/// fixed extension defining the seed-determined maximal matching of G.
pub fn extend_lexicographic<M: MatrixOracle>(oracle: &M, mut m: Matching) -> Matching {
    let n = oracle.n();
    for i in 0..n {
        for j in i + 1..n {
            if !m.is_matched(i) && !m.is_matched(j) && oracle.is_edge(i, j) {
                m.add(i, j);
            }
        }
    }
    m
}

/// GMM(H, π) restricted to V×V, resolving every base vertex locally.
pub fn supergraph_core_matching<M: MatrixOracle>(
    gmm: &mut LocalGmm<SupergraphSource<'_, '_, M>>,
    n: usize,
) -> Result<(Matching, Vec<VertexStatus>), SublinearError> {
    let mut m = Matching::new(n);
    let mut st = Vec::with_capacity(n);
    for i in 0..n {
        let s = gmm.status(i, None)?;
        if let VertexStatus::Matched(p) = s {
            if p < n && i < p {
                m.add(i, p);
            }
        }
        st.push(s);
    }
    Ok((m, st))
}

fn status_with_restarts<M: MatrixOracle, R: Rng>(
    gmm: &mut LocalGmm<SupergraphSource<'_, '_, M>>,
    budget: QueryBudget,
    restarts: &mut u64,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Vec<usize>,
) -> Result<Vec<VertexStatus>, SublinearError> {
    let mut tries = 0;
    loop {
        let targets = draw(rng);
        let attempt: Result<Vec<VertexStatus>, SublinearError> = targets
            .iter()
            .map(|&v| gmm.status(v, budget.max_probes))
            .collect();
        match attempt {
            Ok(s) => return Ok(s),
            Err(SublinearError::BudgetExceeded { .. }) if tries < budget.restarts => {
                tries += 1;
                *restarts += 1;
            }
            Err(SublinearError::BudgetExceeded { .. }) => return Err(SublinearError::Abort),
            Err(e) => return Err(e),
        }
    }
}

/// Additive-εn estimate of the size of the seed-determined maximal matching
/// M(π) of the oracle's graph: GMM on H with δ = ε/2 restricted to V×V,
/// completed lexicographically. Sampled vertices report whether their H
/// partner lies in V; the mean is shifted down by εn/8 so the estimate sits
/// below |M(π)|.
pub fn mm_size_estimate<M: MatrixOracle>(
    oracle: &M,
    eps: f64,
    seed: u64,
    opts: &SublinearOptions,
) -> Result<MmSizeEstimate, SublinearError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(SublinearError::InvalidEpsilon(eps));
    }
    let n = oracle.n();
    let p0 = oracle.probes();
    if n < 2 {
        return Ok(MmSizeEstimate {
            nu: 0.0,
            route: Route::Trivial,
            samples: 0,
            probes: 0,
            restarts: 0,
        });
    }
    let h = ImplicitSupergraph::new(oracle, eps / 2.0);
    let mut gmm = LocalGmm::new(SupergraphSource::new(&h, seed));
    if opts.is_small(n, eps) && !opts.force_sampling {
        let (core, _) = supergraph_core_matching(&mut gmm, n)?;
        let full = extend_lexicographic(oracle, core);
        return Ok(MmSizeEstimate {
            nu: full.len() as f64,
            route: Route::Exact,
            samples: 0,
            probes: oracle.probes() - p0,
            restarts: 0,
        });
    }
    let budget = opts
        .budget
        .unwrap_or_else(|| QueryBudget::for_supergraph(n, h.s()));
    let t = (8.0 * (2.0 * (n as f64).powi(3)).ln() / (eps * eps)).ceil() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(prf::derive(seed, 0x4D4D, 0));
    let mut hits = 0u64;
    let mut restarts = 0;
    for _ in 0..t {
        let st = status_with_restarts(&mut gmm, budget, &mut restarts, &mut rng, |r| {
            vec![r.gen_range(0..n)]
        })?;
        if matches!(st[0], VertexStatus::Matched(p) if p < n) {
            hits += 1;
        }
    }
    let nf = n as f64;
    let nu = (nf * hits as f64 / t as f64 / 2.0 - eps * nf / 8.0).max(0.0);
    Ok(MmSizeEstimate {
        nu,
        route: Route::Sampled,
        samples: t,
        probes: oracle.probes() - p0,
        restarts,
    })
}

/// Estimate of how many edges of `mstar` have both endpoints matched in the
/// seed-determined maximal matching, within [k − ε²n, k] w.h.p.
pub fn estimate_pair_matched<M: MatrixOracle>(
    oracle: &M,
    mstar: &[Edge],
    eps: f64,
    seed: u64,
    opts: &SublinearOptions,
) -> Result<SampleEstimate, SublinearError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SublinearError::InvalidEpsilon(eps));
    }
    let n = oracle.n();
    let p0 = oracle.probes();
    let nf = n as f64;
    if (mstar.len() as f64) <= eps * eps * nf {
        return Ok(SampleEstimate {
            l: 0,
            x: 0,
            kappa: 0.0,
            route: Route::Trivial,
            probes: 0,
            restarts: 0,
        });
    }
    let h = ImplicitSupergraph::new(oracle, eps * eps / 8.0);
    let mut gmm = LocalGmm::new(SupergraphSource::new(&h, seed));
    if opts.is_small(n, eps) && !opts.force_sampling {
        let (core, _) = supergraph_core_matching(&mut gmm, n)?;
        let full = extend_lexicographic(oracle, core);
        let k = mstar
            .iter()
            .filter(|&&(u, v)| full.is_matched(u) && full.is_matched(v))
            .count();
        return Ok(SampleEstimate {
            l: 0,
            x: k as u64,
            kappa: k as f64,
            route: Route::Exact,
            probes: oracle.probes() - p0,
            restarts: 0,
        });
    }
    let budget = opts
        .budget
        .unwrap_or_else(|| QueryBudget::for_supergraph(n, h.s()));
    let l = (opts.sample_constant * nf.ln() / eps.powi(5)).ceil() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(prf::derive(seed, 0x5041, 0));
    // Per-edge indicator cache; statuses are fixed for the run.
    let mut known: Vec<Option<bool>> = vec![None; mstar.len()];
    let mut x = 0u64;
    let mut restarts = 0;
    for _ in 0..l {
        let idx = rng.gen_range(0..mstar.len());
        let hit = match known[idx] {
            Some(b) => b,
            None => {
                let mut pick = idx;
                let mut first = true;
                let st = status_with_restarts(&mut gmm, budget, &mut restarts, &mut rng, |r| {
                    if !first {
                        pick = r.gen_range(0..mstar.len());
                    }
                    first = false;
                    let (u, v) = mstar[pick];
                    vec![u, v]
                })?;
                let b = st[0].is_matched() && st[1].is_matched();
                known[pick] = Some(b);
                b
            }
        };
        if hit {
            x += 1;
        }
    }
    let kappa = (x as f64 * mstar.len() as f64 / l as f64 - nf * eps * eps / 2.0).max(0.0);
    Ok(SampleEstimate {
        l,
        x,
        kappa,
        route: Route::Sampled,
        probes: oracle.probes() - p0,
        restarts,
    })
}
