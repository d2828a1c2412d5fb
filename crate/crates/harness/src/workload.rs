//! Deterministic update-stream generators.

use std::fmt;
use std::str::FromStr;

use dynmatch::graph::{canon, Edge, StreamItem, UpdateEvent, UpdateStream, VertexId};
use dynmatch::prf;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    RandomEr,
    RandomBipartite,
    SlidingWindow,
    PlantedMatching,
    AdaptiveAdversary,
}

impl FromStr for Generator {
    type Err = WorkloadError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "random-er" => Self::RandomEr,
            "random-bipartite" => Self::RandomBipartite,
            "sliding-window" => Self::SlidingWindow,
            "planted-matching" => Self::PlantedMatching,
            "adaptive-adversary" => Self::AdaptiveAdversary,
            other => {
                return Err(WorkloadError::InvalidParams(format!(
                    "unknown workload {other}"
                )))
            }
        })
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::RandomEr => "random-er",
            Self::RandomBipartite => "random-bipartite",
            Self::SlidingWindow => "sliding-window",
            Self::PlantedMatching => "planted-matching",
            Self::AdaptiveAdversary => "adaptive-adversary",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub generator: Generator,
    pub n: usize,
    /// Target edge count as a fraction of the possible pairs.
    pub density: f64,
    /// Number of update events.
    pub horizon: usize,
    /// Window length of the sliding-window generator.
    pub window: usize,
    /// Emit a `q` marker every this many updates (0: none).
    pub query_every: usize,
    pub seed: u64,
}

impl Workload {
    pub fn new(generator: Generator, n: usize, seed: u64) -> Self {
        Self {
            generator,
            n,
            density: 0.0,
            horizon: 0,
            window: 0,
            query_every: 0,
            seed,
        }
    }

    fn check(&self) -> Result<(), WorkloadError> {
        if self.n < 2 {
            return Err(WorkloadError::InvalidParams("n must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(WorkloadError::InvalidParams(
                "density outside [0, 1]".into(),
            ));
        }
        if self.generator == Generator::SlidingWindow && self.window == 0 {
            return Err(WorkloadError::InvalidParams(
                "window must be positive".into(),
            ));
        }
        if self.generator == Generator::PlantedMatching && self.horizon < self.n / 2 {
            return Err(WorkloadError::InvalidParams(
                "horizon shorter than the planted matching".into(),
            ));
        }
        Ok(())
    }

    /// Default density: about two edges per vertex.
    pub fn effective_density(&self) -> f64 {
        if self.density > 0.0 {
            return self.density;
        }
        let pairs = match self.generator {
            Generator::RandomBipartite | Generator::AdaptiveAdversary => {
                (self.n / 2) * (self.n - self.n / 2)
            }
            _ => self.n * (self.n - 1) / 2,
        };
        (2.0 * self.n as f64 / pairs as f64).min(1.0)
    }
}

/// Live edge set with O(1) uniform sampling.
#[derive(Clone, Debug, Default)]
pub struct EdgePool {
    edges: Vec<Edge>,
    pos: FxHashMap<Edge, usize>,
}

impl EdgePool {
    pub fn len(&self) -> usize {
        self.edges.len()
    }
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
    pub fn contains(&self, e: Edge) -> bool {
        self.pos.contains_key(&e)
    }
    pub fn insert(&mut self, e: Edge) -> bool {
        if self.pos.contains_key(&e) {
            return false;
        }
        self.pos.insert(e, self.edges.len());
        self.edges.push(e);
        true
    }
    pub fn remove(&mut self, e: Edge) -> bool {
        let Some(p) = self.pos.remove(&e) else {
            return false;
        };
        self.edges.swap_remove(p);
        if p < self.edges.len() {
            self.pos.insert(self.edges[p], p);
        }
        true
    }
    pub fn get(&self, i: usize) -> Edge {
        self.edges[i]
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Uniform pair sampler: all pairs, or left × right when `left` is set.
#[derive(Clone, Copy, Debug)]
pub struct PairSampler {
    pub n: usize,
    pub left: Option<usize>,
}

impl PairSampler {
    pub fn pairs(&self) -> usize {
        match self.left {
            Some(l) => l * (self.n - l),
            None => self.n * (self.n - 1) / 2,
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Edge {
        match self.left {
            Some(l) => canon(rng.gen_range(0..l), rng.gen_range(l..self.n)),
            None => loop {
                let (u, v) = (rng.gen_range(0..self.n), rng.gen_range(0..self.n));
                if u != v {
                    break canon(u, v);
                }
            },
        }
    }

    /// A pair not in `pool`; `None` when the pool is complete.
    pub fn draw_absent<R: Rng>(&self, rng: &mut R, pool: &EdgePool) -> Option<Edge> {
        if pool.len() >= self.pairs() {
            return None;
        }
        loop {
            let e = self.draw(rng);
            if !pool.contains(e) {
                return Some(e);
            }
        }
    }
}

fn rng_for(w: &Workload, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(prf::derive(w.seed, tag, w.generator as u64))
}

fn push_update(
    items: &mut Vec<StreamItem>,
    ev: UpdateEvent,
    count: &mut usize,
    query_every: usize,
) {
    items.push(StreamItem::Update(ev));
    *count += 1;
    if query_every > 0 && *count % query_every == 0 {
        items.push(StreamItem::Query);
    }
}

/// Insert/delete churn around a target edge count: inserts with probability
/// 0.9 below the target, fair coin at or above it.
fn churn(w: &Workload, sampler: PairSampler) -> Vec<StreamItem> {
    let mut rng = rng_for(w, 0xC4);
    let target = (w.effective_density() * sampler.pairs() as f64).round() as usize;
    let mut pool = EdgePool::default();
    let mut items = Vec::new();
    let mut count = 0;
    while count < w.horizon {
        let p_ins = if pool.len() < target { 0.9 } else { 0.5 };
        let ins = pool.is_empty() || rng.gen_bool(p_ins);
        let ev = if ins {
            match sampler.draw_absent(&mut rng, &pool) {
                Some(e) => {
                    pool.insert(e);
                    UpdateEvent::insert(e.0, e.1)
                }
                None => continue,
            }
        } else {
            let e = pool.get(rng.gen_range(0..pool.len()));
            pool.remove(e);
            UpdateEvent::delete(e.0, e.1)
        };
        push_update(&mut items, ev, &mut count, w.query_every);
    }
    items
}

/// Each step inserts a fresh random edge; from step w on it first deletes
/// the edge inserted w steps earlier, so w edges stay live.
fn sliding(w: &Workload) -> Vec<StreamItem> {
    let mut rng = rng_for(w, 0x5A);
    let sampler = PairSampler { n: w.n, left: None };
    let mut pool = EdgePool::default();
    let mut inserted: Vec<Edge> = Vec::new();
    let mut items = Vec::new();
    let mut count = 0;
    let mut t = 0;
    while count < w.horizon {
        if t >= w.window {
            let old = inserted[t - w.window];
            pool.remove(old);
            push_update(
                &mut items,
                UpdateEvent::delete(old.0, old.1),
                &mut count,
                w.query_every,
            );
            if count >= w.horizon {
                break;
            }
        }
        let Some(e) = sampler.draw_absent(&mut rng, &pool) else {
            break;
        };
        pool.insert(e);
        inserted.push(e);
        push_update(
            &mut items,
            UpdateEvent::insert(e.0, e.1),
            &mut count,
            w.query_every,
        );
        t += 1;
    }
    items
}

/// A perfect matching on a random pairing of the vertices plus random noise
/// edges, all inserted in shuffled order: `horizon` inserts, μ = ⌊n/2⌋.
fn planted(w: &Workload) -> Vec<StreamItem> {
    let mut rng = rng_for(w, 0x91);
    let mut perm: Vec<VertexId> = (0..w.n).collect();
    perm.shuffle(&mut rng);
    let mut pool = EdgePool::default();
    for pair in perm.chunks_exact(2) {
        pool.insert(canon(pair[0], pair[1]));
    }
    let sampler = PairSampler { n: w.n, left: None };
    while pool.len() < w.horizon {
        match sampler.draw_absent(&mut rng, &pool) {
            Some(e) => pool.insert(e),
            None => break,
        };
    }
    let mut order = pool.edges().to_vec();
    order.shuffle(&mut rng);
    let mut items = Vec::new();
    let mut count = 0;
    for e in order {
        push_update(
            &mut items,
            UpdateEvent::insert(e.0, e.1),
            &mut count,
            w.query_every,
        );
    }
    items
}

/// Side split used by the bipartite generators.
pub fn left_size(n: usize) -> usize {
    n / 2
}

/// Generates a non-adaptive workload. The adaptive adversary needs a live
/// estimate channel: see [`crate::adversary`].
pub fn generate(w: &Workload) -> Result<UpdateStream, WorkloadError> {
    w.check()?;
    let (items, left) = match w.generator {
        Generator::RandomEr => (churn(w, PairSampler { n: w.n, left: None }), None),
        Generator::RandomBipartite => {
            let l = left_size(w.n);
            (
                churn(
                    w,
                    PairSampler {
                        n: w.n,
                        left: Some(l),
                    },
                ),
                Some(l),
            )
        }
        Generator::SlidingWindow => (sliding(w), None),
        Generator::PlantedMatching => (planted(w), None),
        Generator::AdaptiveAdversary => {
            return Err(WorkloadError::InvalidParams(
                "adaptive workloads are generated against an estimator".into(),
            ))
        }
    };
    Ok(UpdateStream {
        n: Some(w.n),
        left,
        items,
    })
}
