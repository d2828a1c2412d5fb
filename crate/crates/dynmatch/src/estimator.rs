//! Dynamic matching-size estimators: per-graph bipartite and general queries,
//! the AMM/α combiner, the contraction family that restricts queries to
//! graphs with few vertices, and the repeated top-level estimator.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amm::AmmMaintainer;
use crate::graph::{
    canon, DynamicGraph, Edge, GraphError, Matching, UpdateEvent, UpdateKind, VertexId,
};
use crate::prf;
use crate::streaming::{self, BScan, SecondPassConfig};
use crate::sublinear::{self, FnMatrix, SublinearError, SublinearOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("α = {0} outside (1.5, 2] or below the minimum gain")]
    AlphaOutOfRange(f64),
    #[error("precision {0} outside (0, 1/2)")]
    InvalidEpsilon(f64),
    #[error("repetition count must be at least one")]
    NoRepetitions,
    #[error("bipartite mode needs the left-side size")]
    MissingBipartition,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sublinear(#[from] SublinearError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bipartite,
    General,
    Tradeoff,
}

/// Constants of the tradeoff estimator for a given α.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffParams {
    pub alpha: f64,
    pub c: f64,
    pub b: u32,
    pub gain: f64,
    pub beta: f64,
}

pub const MIN_GAIN: f64 = 1e-4;

impl TradeoffParams {
    /// c = 1/α − 1/2, b = ⌈16(1+2c)/(1−6c)⌉, gain 9(1−6c)²/(2312(1+2c)).
    pub fn new(alpha: f64) -> Result<Self, EstimatorError> {
        if !(alpha > 1.5 && alpha <= 2.0) {
            return Err(EstimatorError::AlphaOutOfRange(alpha));
        }
        let c = 1.0 / alpha - 0.5;
        let gain = 9.0 * (1.0 - 6.0 * c).powi(2) / (2312.0 * (1.0 + 2.0 * c));
        if gain < MIN_GAIN {
            return Err(EstimatorError::AlphaOutOfRange(alpha));
        }
        let b = (16.0 * (1.0 + 2.0 * c) / (1.0 - 6.0 * c) - 1e-9).ceil() as u32;
        Ok(Self {
            alpha,
            c,
            b,
            gain,
            beta: alpha - gain,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: Mode,
    pub eps: f64,
    pub seed: u64,
    pub reps: u32,
    /// Vertices below this id form the left side (bipartite mode).
    pub left: Option<usize>,
    /// Leading constant C of the per-scale copy count ⌈C·ln n/ε²⌉.
    pub copies_constant: f64,
    /// α of the tradeoff mode's matching provider.
    pub alpha: f64,
    /// Forces the sampled query route with this precision.
    pub precision_override: Option<f64>,
    pub sublinear: SublinearOptions,
}

impl EstimatorConfig {
    pub fn new(mode: Mode, eps: f64, seed: u64) -> Self {
        Self {
            mode,
            eps,
            seed,
            reps: 1,
            left: None,
            copies_constant: 0.01,
            alpha: 2.0,
            precision_override: None,
            sublinear: SublinearOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(EstimatorError::InvalidEpsilon(self.eps));
        }
        if self.reps == 0 {
            return Err(EstimatorError::NoRepetitions);
        }
        if self.mode == Mode::Bipartite && self.left.is_none() {
            return Err(EstimatorError::MissingBipartition);
        }
        if self.mode == Mode::Tradeoff {
            TradeoffParams::new(self.alpha)?;
        }
        Ok(())
    }

    /// Precision of the AMM each contracted graph maintains.
    pub fn amm_eps(&self) -> f64 {
        match self.mode {
            Mode::Bipartite => self.eps / 128.0,
            Mode::General => self.eps / 4.0,
            Mode::Tradeoff => self.eps,
        }
    }

    /// Free-vertex capacity of the general and tradeoff queries.
    pub fn general_b(&self) -> u32 {
        match self.mode {
            Mode::Tradeoff => TradeoffParams::new(self.alpha).map(|p| p.b).unwrap_or(16),
            _ => 9,
        }
    }

    /// Constant α′ of the reduction, recorded with the run.
    pub fn alpha_prime(&self) -> f64 {
        2.0 * (1.0 + self.amm_eps())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryRoute {
    /// Maximal b-matching on the graph itself: a maximal matching of the
    /// copy graph without materializing it.
    Compact,
    /// Local sampling through the copy graph's matrix oracle.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimate {
    pub nu: f64,
    pub m1: usize,
    /// ψ (bipartite) or κ (general).
    pub component: f64,
    pub route: QueryRoute,
    /// Elementary work of the query (edges scanned plus probes).
    pub work: u64,
}

impl SizeEstimate {
    fn zero() -> Self {
        Self {
            nu: 0.0,
            m1: 0,
            component: 0.0,
            route: QueryRoute::Compact,
            work: 0,
        }
    }
}

/// Vertex ranges of the copy graph: `offset[v]..offset[v+1]` are v's copies.
struct CopyLayout {
    offset: Vec<usize>,
}

impl CopyLayout {
    fn new(caps: &[u32]) -> Self {
        let mut offset = Vec::with_capacity(caps.len() + 1);
        let mut acc = 0usize;
        offset.push(0);
        for &c in caps {
            acc += c as usize;
            offset.push(acc);
        }
        Self { offset }
    }
    fn total(&self) -> usize {
        *self.offset.last().unwrap()
    }
    fn base(&self, x: usize) -> VertexId {
        self.offset.partition_point(|&o| o <= x) - 1
    }
}

/// Edges with exactly one endpoint matched, listed from the matched side.
fn matched_free_edges(g: &DynamicGraph, m1: &Matching) -> Vec<Edge> {
    let mut out = Vec::new();
    for u in m1.matched_vertices() {
        for &w in g.neighbors(u) {
            if !m1.is_matched(w) {
                out.push((u, w));
            }
        }
    }
    out
}

/// ν = (1−1/b)|M₁| + ψ/(bk), ψ the size of a maximal matching of the graph
/// with k copies per matched and ⌊kb⌋ per free vertex (matched–free edges).
pub fn bipartite_query(
    g: &DynamicGraph,
    m1: &Matching,
    eps: f64,
    precision: Option<f64>,
    opts: &SublinearOptions,
    seed: u64,
) -> Result<SizeEstimate, EstimatorError> {
    let cfg = SecondPassConfig::bipartite(eps);
    if g.edge_count() == 0 {
        return Ok(SizeEstimate::zero());
    }
    let caps: Vec<u32> = (0..g.n())
        .map(|v| {
            if m1.is_matched(v) {
                cfg.k
            } else {
                cfg.free_cap()
            }
        })
        .collect();
    let eligible = matched_free_edges(g, m1);
    let eps_pp = (eps / 16.0).powi(3);
    let layout = CopyLayout::new(&caps);
    let sampled = precision.is_some() || !opts.is_small(layout.total(), eps_pp);
    let (psi, route, work) = if sampled {
        let p = precision.unwrap_or(eps_pp);
        let oracle = FnMatrix::new(layout.total(), |a, b| {
            let (x, y) = (layout.base(a), layout.base(b));
            m1.is_matched(x) != m1.is_matched(y) && g.has_edge(x, y)
        });
        let est = sublinear::mm_size_estimate(&oracle, p, seed, opts)?;
        (est.nu, QueryRoute::Sampled, est.probes)
    } else {
        let bm = streaming::maximal_b_matching(&eligible, caps, BScan::Saturating);
        (
            bm.size() as f64,
            QueryRoute::Compact,
            (eligible.len() + g.n()) as u64,
        )
    };
    Ok(SizeEstimate {
        nu: cfg.estimate(m1.len(), psi),
        m1: m1.len(),
        component: psi,
        route,
        work,
    })
}

/// ν = |M₁| + κ/b, κ the number of M₁ edges whose endpoints are both matched
/// in a maximal matching of the copy graph over the crossing edges of a
/// random bipartition (one copy per matched vertex, b per free vertex).
pub fn general_query(
    g: &DynamicGraph,
    m1: &Matching,
    b: u32,
    eps: f64,
    precision: Option<f64>,
    opts: &SublinearOptions,
    seed: u64,
) -> Result<SizeEstimate, EstimatorError> {
    if m1.is_empty() {
        return Ok(SizeEstimate::zero());
    }
    let part = streaming::random_bipartition(m1, g.n(), prf::derive(seed, 0xB1, 0));
    let eligible: Vec<Edge> = matched_free_edges(g, m1)
        .into_iter()
        .filter(|&(u, w)| part.side[u] != part.side[w])
        .collect();
    let caps: Vec<u32> = (0..g.n())
        .map(|v| if m1.is_matched(v) { 1 } else { b })
        .collect();
    let layout = CopyLayout::new(&caps);
    let sampled = precision.is_some() || !opts.is_small(layout.total(), eps);
    let (kappa, route, work) = if sampled {
        let p = precision.unwrap_or(eps);
        let oracle = FnMatrix::new(layout.total(), |a, c| {
            let (x, y) = (layout.base(a), layout.base(c));
            m1.is_matched(x) != m1.is_matched(y) && part.side[x] != part.side[y] && g.has_edge(x, y)
        });
        let mstar: Vec<Edge> = m1
            .edges()
            .iter()
            .map(|&(u, v)| (layout.offset[u], layout.offset[v]))
            .collect();
        let est =
            sublinear::estimate_pair_matched(&oracle, &mstar, p, prf::derive(seed, 0x4B, 0), opts)?;
        (
            est.kappa.min(m1.len() as f64),
            QueryRoute::Sampled,
            est.probes,
        )
    } else {
        let bm = streaming::maximal_b_matching(&eligible, caps, BScan::Saturating);
        let k = streaming::doubly_matched(m1, &bm).len();
        (
            k as f64,
            QueryRoute::Compact,
            (eligible.len() + g.n()) as u64,
        )
    };
    Ok(SizeEstimate {
        nu: m1.len() as f64 + kappa / b as f64,
        m1: m1.len(),
        component: kappa,
        route,
        work,
    })
}

/// Per component of M′ ∪ M″, keeps whichever side has more edges there,
/// ties going to M′.
pub fn combine_amm_and_alpha(m_prime: &Matching, m_alpha: &Matching) -> Matching {
    let n = m_prime.n();
    let mut out = Matching::new(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] || (!m_prime.is_matched(start) && !m_alpha.is_matched(start)) {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(x) = stack.pop() {
            comp.push(x);
            for y in [m_prime.partner(x), m_alpha.partner(x)]
                .into_iter()
                .flatten()
            {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        let count = |m: &Matching| {
            comp.iter()
                .filter(|&&x| m.partner(x).is_some_and(|y| x < y))
                .count()
        };
        let pick = if count(m_alpha) > count(m_prime) {
            m_alpha
        } else {
            m_prime
        };
        for &x in &comp {
            if let Some(y) = pick.partner(x) {
                if x < y {
                    out.add(x, y);
                }
            }
        }
    }
    out
}

/// Maximal matching repaired locally after each update; a 2-approximate
/// matching provider.
#[derive(Clone, Debug)]
pub struct IncrementalMaximal {
    m: Matching,
}

impl IncrementalMaximal {
    pub fn new(n: usize) -> Self {
        Self {
            m: Matching::new(n),
        }
    }

    pub fn matching(&self) -> &Matching {
        &self.m
    }

    pub fn update(&mut self, g: &DynamicGraph, ev: &UpdateEvent) {
        match ev.kind {
            UpdateKind::Insert => {
                if !self.m.is_matched(ev.u) && !self.m.is_matched(ev.v) {
                    self.m.add(ev.u, ev.v);
                }
            }
            UpdateKind::Delete => {
                if self.m.remove(ev.u, ev.v) {
                    for x in [ev.u, ev.v] {
                        if let Some(&w) = g.neighbors(x).iter().find(|&&w| !self.m.is_matched(w)) {
                            self.m.add(x, w);
                        }
                    }
                }
            }
        }
    }
}

/// Query scheduled at `started`, computed eagerly, served from `release_at`.
#[derive(Clone, Debug)]
struct Pending {
    value: f64,
    release_at: u64,
    remaining: u64,
    slice: u64,
    deletions_at_start: u64,
}

/// One contracted graph with its maintainers and query schedule.
pub struct Contracted {
    pub scale: u32,
    pub copy: u32,
    pub identity: bool,
    hash_seed: u64,
    per_side: usize,
    left: Option<usize>,
    pub g: DynamicGraph,
    preimages: FxHashMap<Edge, u32>,
    pub amm: AmmMaintainer,
    alpha: Option<IncrementalMaximal>,
    active: bool,
    pending: Option<Pending>,
    served: f64,
    served_deletions_at: u64,
    served_finished_at: Option<u64>,
    deletions: u64,
    pub queries: u64,
}

impl Contracted {
    pub fn vertex_count(&self) -> usize {
        self.g.n()
    }

    /// Bucket of a base vertex (identity on the identity graph).
    pub fn bucket(&self, v: VertexId) -> VertexId {
        if self.identity {
            return v;
        }
        let h = (prf::prf2(self.hash_seed, v as u64, 0) % self.per_side as u64) as usize;
        match self.left {
            Some(l) if v >= l => self.per_side + h,
            _ => h,
        }
    }

    pub fn preimage_count(&self, a: VertexId, b: VertexId) -> u32 {
        self.preimages.get(&canon(a, b)).copied().unwrap_or(0)
    }

    /// Recounts preimages from the live base edges and compares.
    pub fn audit(&self, base: &DynamicGraph) -> Result<(), String> {
        let mut count: FxHashMap<Edge, u32> = FxHashMap::default();
        for (u, v) in base.edges() {
            let (a, b) = (self.bucket(u), self.bucket(v));
            if a != b {
                *count.entry(canon(a, b)).or_default() += 1;
            }
        }
        if count != self.preimages {
            return Err(format!(
                "preimage mismatch at scale {} copy {}",
                self.scale, self.copy
            ));
        }
        for (a, b) in self.g.edges() {
            if !count.contains_key(&(a, b)) {
                return Err(format!("contracted edge ({a},{b}) without preimage"));
            }
        }
        if self.g.edge_count() != count.len() {
            return Err("contracted edge set differs from preimage support".into());
        }
        Ok(())
    }

    /// Currently served ν′, adjusted for contracted deletions since its snapshot.
    pub fn served(&self) -> f64 {
        if !self.active {
            return 0.0;
        }
        (self.served - (self.deletions - self.served_deletions_at) as f64).max(0.0)
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Update index at which the served value's query finished.
    pub fn served_finished_at(&self) -> Option<u64> {
        self.served_finished_at
    }

    pub fn interval(&self, eps: f64) -> u64 {
        ((self.g.n() as f64 * eps * eps).floor() as u64).max(1)
    }

    pub fn threshold(&self, eps: f64) -> f64 {
        self.g.n() as f64 * eps
    }

    pub fn backlog(&self) -> u64 {
        self.pending.as_ref().map_or(0, |p| p.remaining) + self.amm.backlog()
    }
}

/// The contracted graphs of one repetition.
pub struct ContractionFamily {
    pub graphs: Vec<Contracted>,
    cfg: EstimatorConfig,
    seed: u64,
    now: u64,
    ops: u64,
}

/// Scales ⌈(1+ε)^j⌉ whose bucket count stays below `side`.
pub fn scales(side: usize, eps: f64, per_side_divisor: f64) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    let mut j = 0;
    loop {
        let k = (1.0 + eps).powi(j).ceil() as u32;
        if (k as f64 / (per_side_divisor * eps)).ceil() as usize >= side {
            break;
        }
        if out.last() != Some(&k) {
            out.push(k);
        }
        j += 1;
    }
    out
}

impl ContractionFamily {
    pub fn new(n: usize, cfg: &EstimatorConfig, seed: u64) -> Self {
        let eps = cfg.eps;
        let copies =
            ((cfg.copies_constant * (n.max(2) as f64).ln() / (eps * eps)).ceil() as u32).max(1);
        let (side, divisor) = match (cfg.mode, cfg.left) {
            (Mode::Bipartite, Some(l)) => (l.max(n - l), 2.0),
            _ => (n, 1.0),
        };
        let mut graphs = Vec::new();
        let mut idx = 0u64;
        let mut make = |scale: u32, copy: u32, identity: bool, per_side: usize| {
            let hash_seed = prf::derive(seed, 0x4A5, idx);
            idx += 1;
            let left = if cfg.mode == Mode::Bipartite {
                cfg.left
            } else {
                None
            };
            let nv = if identity {
                n
            } else if left.is_some() {
                2 * per_side
            } else {
                per_side
            };
            Contracted {
                scale,
                copy,
                identity,
                hash_seed,
                per_side,
                left,
                g: DynamicGraph::new(nv),
                preimages: FxHashMap::default(),
                amm: AmmMaintainer::new(nv, cfg.amm_eps(), prf::derive(hash_seed, 0xA, 0)),
                alpha: (cfg.mode == Mode::Tradeoff).then(|| IncrementalMaximal::new(nv)),
                active: false,
                pending: None,
                served: 0.0,
                served_deletions_at: 0,
                served_finished_at: None,
                deletions: 0,
                queries: 0,
            }
        };
        for k in scales(side, eps, divisor) {
            let per_side = (k as f64 / (divisor * eps)).ceil() as usize;
            for c in 0..copies {
                graphs.push(make(k, c, false, per_side));
            }
        }
        graphs.push(make(0, 0, true, n));
        Self {
            graphs,
            cfg: cfg.clone(),
            seed,
            now: 0,
            ops: 0,
        }
    }

    /// Elementary operations performed so far (routing, maintenance, queries).
    pub fn ops(&self) -> u64 {
        self.ops + self.graphs.iter().map(|c| c.amm.work()).sum::<u64>()
    }

    pub fn backlog(&self) -> u64 {
        self.graphs.iter().map(Contracted::backlog).sum()
    }

    fn run_query(&self, gi: usize) -> Result<SizeEstimate, EstimatorError> {
        let c = &self.graphs[gi];
        let qseed = prf::derive(self.seed, 0x51 + gi as u64, c.queries);
        let eps = self.cfg.eps;
        let prec = self.cfg.precision_override;
        let opts = &self.cfg.sublinear;
        match self.cfg.mode {
            Mode::Bipartite => bipartite_query(&c.g, c.amm.matching(), eps, prec, opts, qseed),
            Mode::General => general_query(&c.g, c.amm.matching(), 9, eps, prec, opts, qseed),
            Mode::Tradeoff => {
                let alpha = c.alpha.as_ref().expect("tradeoff graphs carry a provider");
                let m1 = combine_amm_and_alpha(c.amm.matching(), alpha.matching());
                general_query(&c.g, &m1, self.cfg.general_b(), eps, prec, opts, qseed)
            }
        }
    }

    fn start_query(&mut self, gi: usize) -> Result<(), EstimatorError> {
        let est = self.run_query(gi)?;
        let eps = self.cfg.eps;
        let now = self.now;
        let c = &mut self.graphs[gi];
        c.queries += 1;
        let interval = c.interval(eps);
        self.ops += est.work;
        c.pending = Some(Pending {
            value: est.nu,
            release_at: now + interval,
            remaining: est.work,
            slice: est.work.div_ceil(interval),
            deletions_at_start: c.deletions,
        });
        Ok(())
    }

    /// Routes one base update (already applied to `base`) to every contracted
    /// graph, then advances thresholds and query schedules.
    pub fn apply(&mut self, ev: &UpdateEvent) -> Result<(), EstimatorError> {
        self.now += 1;
        let eps = self.cfg.eps;
        for gi in 0..self.graphs.len() {
            let c = &mut self.graphs[gi];
            self.ops += 1;
            let (a, b) = (c.bucket(ev.u), c.bucket(ev.v));
            if a != b {
                let key = canon(a, b);
                let changed = match ev.kind {
                    UpdateKind::Insert => {
                        let e = c.preimages.entry(key).or_insert(0);
                        *e += 1;
                        *e == 1
                    }
                    UpdateKind::Delete => {
                        let e = c
                            .preimages
                            .get_mut(&key)
                            .expect("deleted edge has a preimage");
                        *e -= 1;
                        if *e == 0 {
                            c.preimages.remove(&key);
                            true
                        } else {
                            false
                        }
                    }
                };
                if changed {
                    let cev = UpdateEvent {
                        kind: ev.kind,
                        u: key.0,
                        v: key.1,
                    };
                    c.g.apply_update(&cev)?;
                    c.amm.update(&c.g, &cev);
                    if let Some(al) = c.alpha.as_mut() {
                        al.update(&c.g, &cev);
                    }
                    if ev.kind == UpdateKind::Delete {
                        c.deletions += 1;
                    }
                    self.ops += 1 + c.g.degree(key.0) as u64 + c.g.degree(key.1) as u64;
                }
            }
            self.schedule(gi, eps)?;
        }
        Ok(())
    }

    fn schedule(&mut self, gi: usize, eps: f64) -> Result<(), EstimatorError> {
        let now = self.now;
        let c = &mut self.graphs[gi];
        let above = c.amm.size() as f64 >= c.threshold(eps);
        if !above {
            if c.active {
                c.active = false;
                c.pending = None;
                c.served = 0.0;
                c.served_finished_at = None;
            }
            return Ok(());
        }
        if !c.active {
            c.active = true;
            c.served = 0.0;
            c.served_deletions_at = c.deletions;
            return self.start_query(gi);
        }
        let c = &mut self.graphs[gi];
        match c.pending.as_mut() {
            None => self.start_query(gi),
            Some(p) if now >= p.release_at => {
                let p = c.pending.take().unwrap();
                c.served = p.value;
                c.served_deletions_at = p.deletions_at_start;
                c.served_finished_at = Some(now);
                self.start_query(gi)
            }
            Some(p) => {
                p.remaining = p.remaining.saturating_sub(p.slice);
                Ok(())
            }
        }
    }

    /// Index and value of the largest served ν′.
    pub fn best(&self) -> (usize, f64) {
        let mut best = (self.graphs.len() - 1, 0.0);
        for (i, c) in self.graphs.iter().enumerate() {
            let v = c.served();
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Served values never come from a query that finished more than one
    /// interval ago while the graph is active.
    pub fn staleness_ok(&self) -> bool {
        let eps = self.cfg.eps;
        self.graphs.iter().all(|c| {
            !c.active
                || c.served == 0.0
                || c.served_finished_at
                    .is_some_and(|t| self.now - t <= c.interval(eps))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopEstimate {
    pub nu: f64,
    pub timestamp: u64,
    pub repetitions: Vec<f64>,
}

/// R independent repetitions of the contraction family over one graph.
pub struct DynamicEstimator {
    g: DynamicGraph,
    pub reps: Vec<ContractionFamily>,
    cfg: EstimatorConfig,
    updates: u64,
}

impl DynamicEstimator {
    pub fn new(n: usize, cfg: EstimatorConfig) -> Result<Self, EstimatorError> {
        cfg.validate()?;
        let reps = (0..cfg.reps)
            .map(|r| ContractionFamily::new(n, &cfg, prf::derive(cfg.seed, 0x7E9, r as u64)))
            .collect();
        Ok(Self {
            g: DynamicGraph::new(n),
            reps,
            cfg,
            updates: 0,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.g
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn apply(&mut self, ev: &UpdateEvent) -> Result<(), EstimatorError> {
        self.g.apply_update(ev)?;
        self.updates += 1;
        for r in &mut self.reps {
            r.apply(ev)?;
        }
        Ok(())
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId) -> Result<(), EstimatorError> {
        self.apply(&UpdateEvent::insert(u, v))
    }

    pub fn delete(&mut self, u: VertexId, v: VertexId) -> Result<(), EstimatorError> {
        self.apply(&UpdateEvent::delete(u, v))
    }

    /// Combined value: median of repetitions in bipartite mode, mean otherwise.
    pub fn estimate(&self) -> f64 {
        self.estimate_detail().nu
    }

    pub fn estimate_detail(&self) -> TopEstimate {
        let repetitions: Vec<f64> = self.reps.iter().map(|r| r.best().1).collect();
        let nu = match self.cfg.mode {
            Mode::Bipartite => median(&repetitions),
            _ => repetitions.iter().sum::<f64>() / repetitions.len() as f64,
        };
        TopEstimate {
            nu,
            timestamp: self.updates,
            repetitions,
        }
    }

    pub fn ops(&self) -> u64 {
        self.reps.iter().map(ContractionFamily::ops).sum()
    }

    pub fn backlog(&self) -> u64 {
        self.reps.iter().map(ContractionFamily::backlog).sum()
    }
}

/// Lower median.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}
