//! Approximately-maximal matchings with an explicit removal witness:
//! fractional providers, leveled edge coloring and kernel sparsification,
//! static extraction from a kernel, and the epoch-based dynamic maintainer.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    canon, DynamicGraph, Edge, FractionalMatching, GraphListener, Matching, SimpleGraph,
    UpdateEvent, UpdateKind, VertexId,
};
use crate::oracles;
use crate::prf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmmError {
    #[error("fractional matching rejected: {0}")]
    ValidationFailed(String),
    #[error("kernel invalid after {attempts} sampling attempts: {reason}")]
    KernelValidationFailed { attempts: u32, reason: String },
}

/// Fractional matching with its (c, d) parameters.
#[derive(Clone, Debug)]
pub struct Amfm {
    pub x: FractionalMatching,
    pub c: f64,
    pub d: f64,
}

const TOL: f64 = 1e-9;

/// Checks the fractional-matching constraints and, for every edge of `g`,
/// either x_e > 1/d or an endpoint with fractional degree ≥ 1/c all of whose
/// incident edges carry at most 1/d.
pub fn validate_amfm(g: &SimpleGraph, a: &Amfm) -> Result<(), AmmError> {
    let x = &a.x;
    if x.n() != g.n() {
        return Err(AmmError::ValidationFailed(format!(
            "vertex count {} != {}",
            x.n(),
            g.n()
        )));
    }
    for ((u, v), val) in x.support() {
        if val < 0.0 {
            return Err(AmmError::ValidationFailed(format!(
                "negative value on ({u},{v})"
            )));
        }
        if !g.has_edge(u, v) {
            return Err(AmmError::ValidationFailed(format!(
                "support edge ({u},{v}) not in graph"
            )));
        }
    }
    for v in 0..g.n() {
        if x.fractional_degree(v) > 1.0 + TOL {
            return Err(AmmError::ValidationFailed(format!(
                "vertex {v} has degree {}",
                x.fractional_degree(v)
            )));
        }
    }
    let inv_d = 1.0 / a.d;
    let light_saturated = |v: VertexId| {
        x.fractional_degree(v) >= 1.0 / a.c - TOL
            && g.neighbors(v).iter().all(|&w| x.value(v, w) <= inv_d)
    };
    for &(u, v) in g.edges() {
        if x.value(u, v) > inv_d || light_saturated(u) || light_saturated(v) {
            continue;
        }
        return Err(AmmError::ValidationFailed(format!(
            "edge ({u},{v}) fails both clauses"
        )));
    }
    Ok(())
}

/// Source of validated fractional matchings for kernel construction.
pub trait FractionalProvider {
    fn provide(&mut self, g: &SimpleGraph, eps: f64) -> Result<Amfm, AmmError>;
}

/// Water-filling: every edge rises at unit rate until an endpoint reaches
/// load one; the result is scaled by (1−ε). Each edge ends above
/// (1−ε)/(n−1), so with d = ⌈n/(1−ε)⌉ every edge satisfies x_e > 1/d.
#[derive(Clone, Copy, Debug, Default)]
pub struct WaterFilling;

/// 9c(1+ε)²·ln n/ε², the degree the sparsification analysis asks for.
pub fn required_degree(n: usize, c: f64, eps: f64) -> f64 {
    9.0 * c * (1.0 + eps).powi(2) * (n.max(2) as f64).ln() / (eps * eps)
}

impl WaterFilling {
    pub fn fill(g: &SimpleGraph) -> Vec<(Edge, f64)> {
        let n = g.n();
        let mut frozen = vec![0.0f64; n];
        let mut active = vec![0usize; n];
        let mut saturated = vec![false; n];
        let mut heap = BinaryHeap::new();
        for v in 0..n {
            active[v] = g.degree(v);
            if active[v] > 0 {
                heap.push(Reverse((OrdF64(1.0 / active[v] as f64), v, active[v])));
            }
        }
        let mut out = Vec::with_capacity(g.edges().len());
        while let Some(Reverse((OrdF64(t), v, a))) = heap.pop() {
            if saturated[v] || active[v] != a || a == 0 {
                continue;
            }
            saturated[v] = true;
            for &w in g.neighbors(v) {
                if saturated[w] {
                    continue;
                }
                out.push((canon(v, w), t));
                frozen[w] += t;
                active[w] -= 1;
                if active[w] > 0 {
                    let tw = ((1.0 - frozen[w]) / active[w] as f64).max(t);
                    heap.push(Reverse((OrdF64(tw), w, active[w])));
                }
            }
            active[v] = 0;
        }
        out.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

impl FractionalProvider for WaterFilling {
    fn provide(&mut self, g: &SimpleGraph, eps: f64) -> Result<Amfm, AmmError> {
        let c = 1.0 + 2.0 * eps;
        let cap = (g.n() as f64 / (1.0 - eps)).ceil().max(2.0);
        let d = required_degree(g.n(), c, eps).min(cap);
        let mut x = FractionalMatching::new(g.n());
        for ((u, v), t) in Self::fill(g) {
            x.set(u, v, (1.0 - eps) * t);
        }
        let a = Amfm { x, c, d };
        validate_amfm(g, &a)?;
        Ok(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl Ord for OrdF64 {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// One value class of the leveled coloring.
#[derive(Clone, Debug, Default)]
pub struct Level {
    pub index: u32,
    pub palette: u32,
    pub colors: Vec<(Edge, u32)>,
    used: rustc_hash::FxHashMap<VertexId, Vec<u32>>,
}

impl Level {
    fn first_free(&self, u: VertexId, v: VertexId) -> u32 {
        let empty = Vec::new();
        let (a, b) = (
            self.used.get(&u).unwrap_or(&empty),
            self.used.get(&v).unwrap_or(&empty),
        );
        let mut taken = vec![false; a.len() + b.len() + 1];
        for &c in a.iter().chain(b) {
            if (c as usize) < taken.len() {
                taken[c as usize] = true;
            }
        }
        taken.iter().position(|t| !t).unwrap() as u32
    }

    /// Adds an edge with the first color free at both endpoints.
    pub fn insert(&mut self, e: Edge) -> u32 {
        let c = self.first_free(e.0, e.1);
        self.used.entry(e.0).or_default().push(c);
        self.used.entry(e.1).or_default().push(c);
        self.colors.push((e, c));
        c
    }

    /// Removes an edge, freeing its color at both endpoints.
    pub fn remove(&mut self, e: Edge) -> bool {
        let Some(pos) = self.colors.iter().position(|&(f, _)| f == e) else {
            return false;
        };
        let (_, c) = self.colors.swap_remove(pos);
        for x in [e.0, e.1] {
            if let Some(l) = self.used.get_mut(&x) {
                if let Some(p) = l.iter().position(|&y| y == c) {
                    l.swap_remove(p);
                }
            }
        }
        true
    }
}

/// Edges bucketed by value into ((1+ε)^{−i}, (1+ε)^{−i+1}], each level
/// properly colored from a palette of 2⌈(1+ε)^i⌉ colors.
#[derive(Clone, Debug)]
pub struct LeveledColoring {
    pub eps: f64,
    pub levels: Vec<Level>,
}

impl LeveledColoring {
    pub fn level_count(n: usize, eps: f64) -> u32 {
        (2.0 * ((n.max(2) as f64) / eps).ln() / eps.ln_1p()).ceil() as u32
    }

    /// Level of a value, if it falls inside the tracked range.
    pub fn level_of(x: f64, eps: f64, count: u32) -> Option<u32> {
        if x <= 0.0 || x > 1.0 {
            return None;
        }
        let i = (-x.ln() / eps.ln_1p()).floor() as i64 + 1;
        // Guard the boundary against rounding in the logarithm.
        let lo = |i: i64| (1.0 + eps).powi(-(i as i32));
        let i = if x <= lo(i) {
            i + 1
        } else if x > lo(i - 1) {
            i - 1
        } else {
            i
        };
        (i >= 1 && i as u32 <= count).then_some(i as u32)
    }

    pub fn build(x: &FractionalMatching, eps: f64) -> Self {
        Self::build_counted(x, eps, &mut 0)
    }

    fn build_counted(x: &FractionalMatching, eps: f64, work: &mut u64) -> Self {
        let count = Self::level_count(x.n(), eps);
        *work += count as u64;
        let mut levels: Vec<Level> = (1..=count)
            .map(|i| Level {
                index: i,
                palette: ((1.0 + eps).powi(i as i32).ceil() as u32).saturating_mul(2),
                ..Level::default()
            })
            .collect();
        for (e, val) in x.support() {
            if let Some(i) = Self::level_of(val, eps, count) {
                let l = &mut levels[i as usize - 1];
                let seen = |v| l.used.get(&v).map_or(0, Vec::len) as u64;
                *work += 1 + seen(e.0) + seen(e.1);
                l.insert(e);
            }
        }
        Self { eps, levels }
    }

    /// Proper coloring and palette bound at every level.
    pub fn validate(&self) -> Result<(), String> {
        for l in &self.levels {
            let mut seen: rustc_hash::FxHashSet<(VertexId, u32)> = Default::default();
            for &((u, v), c) in &l.colors {
                if c >= l.palette {
                    return Err(format!(
                        "level {} color {c} outside palette {}",
                        l.index, l.palette
                    ));
                }
                if !seen.insert((u, c)) || !seen.insert((v, c)) {
                    return Err(format!(
                        "level {} color {c} repeats at an endpoint of ({u},{v})",
                        l.index
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Bounded-degree subgraph with its declared (ε, d).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub edges: Vec<Edge>,
    pub eps: f64,
    pub d: f64,
    pub degree: Vec<u32>,
}

impl Kernel {
    pub fn new(n: usize, mut edges: Vec<Edge>, eps: f64, d: f64) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut degree = vec![0u32; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        Self {
            edges,
            eps,
            d,
            degree,
        }
    }

    /// The whole graph as a kernel, with d raised to the maximum degree.
    pub fn whole(g: &SimpleGraph, eps: f64, d: f64) -> Self {
        Self::new(g.n(), g.edges().to_vec(), eps, d.max(g.max_degree() as f64))
    }

    pub fn high_degree(&self) -> Vec<VertexId> {
        let thr = self.d * (1.0 - self.eps);
        (0..self.degree.len())
            .filter(|&v| self.degree[v] as f64 >= thr - TOL)
            .collect()
    }

    /// Degree bound, the excluded-edge clause, and |E_K| ≤ 2·d·|maximal matching of K|.
    pub fn validate(&self, g: &SimpleGraph) -> Result<(), String> {
        if let Some(v) = (0..self.degree.len()).find(|&v| self.degree[v] as f64 > self.d + TOL) {
            return Err(format!(
                "vertex {v} has kernel degree {} > d = {}",
                self.degree[v], self.d
            ));
        }
        let thr = self.d * (1.0 - self.eps) - TOL;
        for &(u, v) in g.edges() {
            if self.edges.binary_search(&(u, v)).is_ok() {
                continue;
            }
            if (self.degree[u] as f64) < thr && (self.degree[v] as f64) < thr {
                return Err(format!(
                    "excluded edge ({u},{v}) has two low-degree endpoints"
                ));
            }
        }
        for &(u, v) in &self.edges {
            if !g.has_edge(u, v) {
                return Err(format!("kernel edge ({u},{v}) not in graph"));
            }
        }
        let mm = oracles::greedy_in_order(self.degree.len(), self.edges.iter().copied()).len();
        if self.edges.len() as f64 > 2.0 * self.d * mm as f64 + TOL {
            return Err("edge count exceeds 2·d·μ bound".into());
        }
        Ok(())
    }
}

/// Declared kernel parameters for an AMfM with precision ε and degree d.
pub fn kernel_parameters(eps: f64, d: f64) -> (f64, f64) {
    (
        1.0 - (1.0 - eps).powi(3) / (1.0 + eps),
        (d * (1.0 + eps)).ceil(),
    )
}

/// Samples min{2⌈d(1+ε)⌉, palette} colors per level without replacement and
/// keeps their classes; up to three fresh resamples on validation failure.
pub fn edge_color_and_sparsify(
    g: &SimpleGraph,
    a: &Amfm,
    eps: f64,
    seed: u64,
) -> Result<Kernel, AmmError> {
    sparsify_counted(g, a, eps, seed, &mut 0)
}

fn sparsify_counted(
    g: &SimpleGraph,
    a: &Amfm,
    eps: f64,
    seed: u64,
    work: &mut u64,
) -> Result<Kernel, AmmError> {
    let coloring = LeveledColoring::build_counted(&a.x, eps, work);
    coloring.validate().map_err(AmmError::ValidationFailed)?;
    let (eps_k, d_k) = kernel_parameters(eps, a.d);
    let take_cap = 2 * (a.d * (1.0 + eps)).ceil() as u32;
    let mut last = String::new();
    for attempt in 0..4u32 {
        let mut rng = ChaCha8Rng::seed_from_u64(prf::derive(seed, 0xC010 + attempt as u64, 0));
        let mut edges = Vec::new();
        for l in &coloring.levels {
            if l.colors.is_empty() {
                continue;
            }
            let take = take_cap.min(l.palette);
            *work += (l.palette as usize + l.colors.len()) as u64;
            let mut chosen = vec![false; l.palette as usize];
            for c in sample(&mut rng, l.palette as usize, take as usize) {
                chosen[c] = true;
            }
            edges.extend(
                l.colors
                    .iter()
                    .filter(|&&(_, c)| chosen[c as usize])
                    .map(|&(e, _)| e),
            );
        }
        let k = Kernel::new(g.n(), edges, eps_k, d_k);
        *work += (2 * g.edges().len() + 2 * k.edges.len() + g.n()) as u64;
        match k.validate(g) {
            Ok(()) => return Ok(k),
            Err(r) => last = r,
        }
    }
    Err(AmmError::KernelValidationFailed {
        attempts: 4,
        reason: last,
    })
}

/// Matching with a removal witness: `m` is maximal in G[V∖witness].
#[derive(Clone, Debug, PartialEq)]
pub struct AmmState {
    pub m: Matching,
    pub witness: Vec<VertexId>,
    pub epoch: u64,
    pub epoch_len: u64,
    pub deletions_since_build: u64,
}

impl AmmState {
    /// Whether every edge of `g` touches M or the witness.
    pub fn witness_holds(&self, g: &SimpleGraph) -> bool {
        let mut in_u = vec![false; g.n()];
        for &v in &self.witness {
            in_u[v] = true;
        }
        g.edges()
            .iter()
            .all(|&(u, v)| self.m.is_matched(u) || self.m.is_matched(v) || in_u[u] || in_u[v])
    }
}

/// Largest number of high-degree vertices a matching of K can cover, with a
/// matching attaining it. Solved as plain maximum matching on two copies of
/// K′ (edges touching H) joined at each low-degree vertex.
pub fn max_high_cover(n: usize, kernel_edges: &[Edge], high: &[bool]) -> (usize, Matching) {
    let (cov, m, _) = max_high_cover_counted(n, kernel_edges, high);
    (cov, m)
}

fn max_high_cover_counted(
    n: usize,
    kernel_edges: &[Edge],
    high: &[bool],
) -> (usize, Matching, u64) {
    let kp: Vec<Edge> = kernel_edges
        .iter()
        .copied()
        .filter(|&(u, v)| high[u] || high[v])
        .collect();
    let mut ids: Vec<VertexId> = kp.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let loc = |v: VertexId| ids.binary_search(&v).unwrap();
    let t = ids.len();
    let mut dbl = Vec::with_capacity(2 * kp.len() + t);
    for &(u, v) in &kp {
        dbl.push((loc(u), loc(v)));
        dbl.push((t + loc(u), t + loc(v)));
    }
    for (i, &v) in ids.iter().enumerate() {
        if !high[v] {
            dbl.push((i, t + i));
        }
    }
    let (mm, work) = oracles::blossom_with_work(&SimpleGraph::new(2 * t, dbl));
    let mut best = (0usize, Matching::new(n));
    for copy in 0..2 {
        let mut m = Matching::new(n);
        let mut cov = 0;
        for (a, b) in mm.edges() {
            let inside = if copy == 0 { b < t } else { a >= t };
            if inside {
                let (u, v) = (ids[a - copy * t], ids[b - copy * t]);
                m.add(u, v);
                cov += high[u] as usize + high[v] as usize;
            }
        }
        if copy == 0 || cov > best.0 {
            best = (cov, m);
        }
    }
    (best.0, best.1, work + (kernel_edges.len() + n) as u64)
}

/// Kernel-to-AMM extraction: cover as many high-degree vertices as possible,
/// extend to a maximal matching of K, witness the uncovered high vertices.
pub fn static_amm_from_kernel(g: &SimpleGraph, k: &Kernel) -> (AmmState, usize) {
    extract_counted(g, k, &mut 0)
}

fn extract_counted(g: &SimpleGraph, k: &Kernel, work: &mut u64) -> (AmmState, usize) {
    let n = g.n();
    let hk = k.high_degree();
    let mut high = vec![false; n];
    for &v in &hk {
        high[v] = true;
    }
    let (_, mut m, w) = max_high_cover_counted(n, &k.edges, &high);
    *work += w + (n + k.edges.len()) as u64;
    for &(u, v) in &k.edges {
        if !m.is_matched(u) && !m.is_matched(v) {
            m.add(u, v);
        }
    }
    let witness: Vec<VertexId> = hk.iter().copied().filter(|&v| !m.is_matched(v)).collect();
    (
        AmmState {
            m,
            witness,
            epoch: 0,
            epoch_len: 0,
            deletions_since_build: 0,
        },
        hk.len(),
    )
}

/// Provider → sparsify → extract, with the whole-graph fallback when the
/// sampled kernel keeps failing validation.
pub fn static_amm(
    g: &SimpleGraph,
    provider: &mut dyn FractionalProvider,
    eps: f64,
    seed: u64,
) -> Result<RebuildOutcome, AmmError> {
    let a = provider.provide(g, eps)?;
    // Provider: one heap push per vertex and per edge endpoint, plus the scans.
    let mut work = (2 * g.n() + 4 * g.edges().len()) as u64;
    let (kernel, fallback) = match sparsify_counted(g, &a, eps, seed, &mut work) {
        Ok(k) => (k, false),
        Err(AmmError::KernelValidationFailed { .. }) => {
            let (eps_k, d_k) = kernel_parameters(eps, a.d);
            (Kernel::whole(g, eps_k, d_k), true)
        }
        Err(e) => return Err(e),
    };
    let kernel_valid = kernel.validate(g).is_ok();
    work += (2 * g.edges().len() + 2 * kernel.edges.len() + g.n()) as u64;
    let (state, h_k) = extract_counted(g, &kernel, &mut work);
    Ok(RebuildOutcome {
        state,
        h_k,
        kernel_edges: kernel.edges.len(),
        kernel_d: kernel.d,
        kernel_valid,
        fallback,
        work,
    })
}

#[derive(Clone, Debug)]
pub struct RebuildOutcome {
    pub state: AmmState,
    pub h_k: usize,
    pub kernel_edges: usize,
    pub kernel_d: f64,
    pub kernel_valid: bool,
    pub fallback: bool,
    /// Elementary work units charged to the slicing schedule.
    pub work: u64,
}

/// One rebuild, as recorded by the maintainer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RebuildRecord {
    pub epoch: u64,
    /// Number of updates seen when the snapshot was taken.
    pub at_update: u64,
    pub matching: usize,
    pub witness: usize,
    pub h_k: usize,
    pub kernel_edges: usize,
    pub kernel_d: f64,
    pub kernel_valid: bool,
    pub fallback: bool,
}

/// Per-update dump line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmmCheckpoint {
    pub epoch: u64,
    pub matching: usize,
    pub witness: usize,
    pub mu_hat: u64,
    pub regime: Regime,
    pub backlog: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Small matching size: a maximal matching repaired after every update.
    Exact,
    /// Periodic rebuilds released at epoch boundaries.
    Epoch,
}

struct Job {
    outcome: RebuildOutcome,
    log: Vec<UpdateEvent>,
    remaining: u64,
    slice: u64,
}

/// Dynamic ε-AMM with removal witness.
///
/// While |M| < 10/ε the matching is kept maximal by local repair. Above it,
/// updates are split into epochs of ⌊ε·μ̂/3⌋ updates: the rebuild for the
/// snapshot at an epoch's start is charged over the epoch in equal slices
/// and swapped in at its end, after replaying the epoch's updates on it.
pub struct AmmMaintainer {
    pub eps: f64,
    seed: u64,
    provider: Box<dyn FractionalProvider + Send>,
    state: AmmState,
    in_u: Vec<bool>,
    regime: Regime,
    job: Option<Job>,
    epoch_left: u64,
    updates: u64,
    rebuilds: Vec<RebuildRecord>,
    work: u64,
}

impl AmmMaintainer {
    pub fn new(n: usize, eps: f64, seed: u64) -> Self {
        Self::with_provider(n, eps, seed, Box::new(WaterFilling))
    }

    pub fn with_provider(
        n: usize,
        eps: f64,
        seed: u64,
        provider: Box<dyn FractionalProvider + Send>,
    ) -> Self {
        Self {
            eps,
            seed,
            provider,
            state: AmmState {
                m: Matching::new(n),
                witness: Vec::new(),
                epoch: 0,
                epoch_len: 0,
                deletions_since_build: 0,
            },
            in_u: vec![false; n],
            regime: Regime::Exact,
            job: None,
            epoch_left: 0,
            updates: 0,
            rebuilds: Vec::new(),
            work: 0,
        }
    }

    pub fn current(&self) -> &AmmState {
        &self.state
    }

    pub fn matching(&self) -> &Matching {
        &self.state.m
    }

    pub fn size(&self) -> usize {
        self.state.m.len()
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn rebuilds(&self) -> &[RebuildRecord] {
        &self.rebuilds
    }

    /// Elementary operations performed so far, rebuilds included in full.
    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn backlog(&self) -> u64 {
        self.job.as_ref().map_or(0, |j| j.remaining)
    }

    pub fn checkpoint(&self) -> AmmCheckpoint {
        AmmCheckpoint {
            epoch: self.state.epoch,
            matching: self.state.m.len(),
            witness: self.state.witness.len(),
            mu_hat: self.mu_hat(),
            regime: self.regime,
            backlog: self.backlog(),
        }
    }

    fn threshold(&self) -> f64 {
        10.0 / self.eps
    }

    fn mu_hat(&self) -> u64 {
        self.state.m.len() as u64
    }

    fn repair_exact(&mut self, g: &DynamicGraph, ev: &UpdateEvent) {
        let m = &mut self.state.m;
        match ev.kind {
            UpdateKind::Insert => {
                if !m.is_matched(ev.u) && !m.is_matched(ev.v) {
                    m.add(ev.u, ev.v);
                }
            }
            UpdateKind::Delete => {
                if m.remove(ev.u, ev.v) {
                    for x in [ev.u, ev.v] {
                        if let Some(&w) = g.neighbors(x).iter().find(|&&w| !m.is_matched(w)) {
                            m.add(x, w);
                        }
                    }
                }
            }
        }
    }

    /// Applies an update to a witnessed matching: matched deletions move both
    /// endpoints into U, insertions between free non-witness vertices join M.
    fn apply_witnessed(state: &mut AmmState, in_u: &mut [bool], ev: &UpdateEvent) {
        match ev.kind {
            UpdateKind::Insert => {
                let (u, v) = (ev.u, ev.v);
                if !state.m.is_matched(u) && !state.m.is_matched(v) && !in_u[u] && !in_u[v] {
                    state.m.add(u, v);
                }
            }
            UpdateKind::Delete => {
                if state.m.remove(ev.u, ev.v) {
                    state.deletions_since_build += 1;
                    for x in [ev.u, ev.v] {
                        if !in_u[x] {
                            in_u[x] = true;
                            state.witness.push(x);
                        }
                    }
                }
            }
        }
    }

    fn start_job(&mut self, g: &DynamicGraph) {
        let snap = SimpleGraph::from(g);
        let epoch = self.state.epoch + 1;
        let seed = prf::derive(self.seed, 0xA33, epoch);
        let outcome = match static_amm(&snap, self.provider.as_mut(), self.eps, seed) {
            Ok(o) => o,
            Err(_) => {
                // Provider rejected: fall back to a plain maximal matching of the snapshot.
                let m = oracles::greedy_in_order(snap.n(), snap.edges().iter().copied());
                RebuildOutcome {
                    state: AmmState {
                        m,
                        witness: Vec::new(),
                        epoch: 0,
                        epoch_len: 0,
                        deletions_since_build: 0,
                    },
                    h_k: 0,
                    kernel_edges: snap.edges().len(),
                    kernel_d: snap.max_degree() as f64,
                    kernel_valid: true,
                    fallback: true,
                    work: (snap.edges().len() + snap.n()) as u64,
                }
            }
        };
        self.rebuilds.push(RebuildRecord {
            epoch,
            at_update: self.updates,
            matching: outcome.state.m.len(),
            witness: outcome.state.witness.len(),
            h_k: outcome.h_k,
            kernel_edges: outcome.kernel_edges,
            kernel_d: outcome.kernel_d,
            kernel_valid: outcome.kernel_valid,
            fallback: outcome.fallback,
        });
        let prev = self.state.epoch_len;
        let mu_hat = (outcome.state.m.len() as u64).saturating_sub(prev);
        let len = ((self.eps * mu_hat as f64 / 3.0).floor() as u64).max(1);
        let work = outcome.work;
        self.work += work + (snap.n() + snap.edges().len()) as u64;
        self.job = Some(Job {
            outcome,
            log: Vec::new(),
            remaining: work,
            slice: work.div_ceil(len),
        });
        self.epoch_left = len;
        self.state.epoch_len = len;
    }

    fn finish_epoch(&mut self, g: &DynamicGraph) {
        let job = self.job.take().expect("epoch has a job");
        self.work += (self.in_u.len() + job.log.len()) as u64;
        let mut next = job.outcome.state;
        let mut in_u = vec![false; self.in_u.len()];
        for &v in &next.witness {
            in_u[v] = true;
        }
        for ev in &job.log {
            Self::apply_witnessed(&mut next, &mut in_u, ev);
        }
        next.epoch = self.state.epoch + 1;
        next.epoch_len = self.state.epoch_len;
        self.state = next;
        self.in_u = in_u;
        if (self.state.m.len() as f64) < self.threshold() {
            self.enter_exact(g);
        } else {
            self.start_job(g);
        }
    }

    fn enter_exact(&mut self, g: &DynamicGraph) {
        self.regime = Regime::Exact;
        self.work += (self.state.witness.len() + g.edge_count()) as u64;
        for v in self.state.witness.drain(..) {
            self.in_u[v] = false;
        }
        let m = &mut self.state.m;
        for (u, v) in g.edges() {
            if !m.is_matched(u) && !m.is_matched(v) {
                m.add(u, v);
            }
        }
        self.state.deletions_since_build = 0;
        self.job = None;
    }

    /// Processes one update already applied to `g`.
    pub fn update(&mut self, g: &DynamicGraph, ev: &UpdateEvent) {
        self.updates += 1;
        self.work += 1;
        match self.regime {
            Regime::Exact => {
                if ev.kind == UpdateKind::Delete {
                    self.work += (g.degree(ev.u) + g.degree(ev.v)) as u64;
                }
                self.repair_exact(g, ev);
                if self.state.m.len() as f64 >= self.threshold() {
                    self.regime = Regime::Epoch;
                    self.state.epoch_len = 0;
                    self.start_job(g);
                }
            }
            Regime::Epoch => {
                Self::apply_witnessed(&mut self.state, &mut self.in_u, ev);
                let job = self.job.as_mut().expect("epoch regime has a job");
                job.log.push(*ev);
                job.remaining = job.remaining.saturating_sub(job.slice);
                self.epoch_left -= 1;
                if self.epoch_left == 0 {
                    self.finish_epoch(g);
                }
            }
        }
    }
}

impl GraphListener for AmmMaintainer {
    fn on_update(&mut self, graph: &DynamicGraph, ev: &UpdateEvent) {
        self.update(graph, ev);
    }
}
