//! Adaptive adversary whose only view of the algorithm is the published
//! estimate, read through an audited channel.

use dynmatch::estimator::{DynamicEstimator, EstimatorError};
use dynmatch::graph::{Edge, StreamItem, UpdateEvent, UpdateStream};
use dynmatch::prf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::workload::{left_size, EdgePool, PairSampler};

/// The single feedback channel available to the adversary.
pub trait EstimateChannel {
    fn estimate(&mut self) -> f64;
}

/// One call the adversary made: the update count at call time and the value read.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelCall {
    pub update: u64,
    pub nu: f64,
}

/// Forwards to the public `estimate()` and records every call.
pub struct AuditedChannel<'a> {
    est: &'a DynamicEstimator,
    log: &'a mut Vec<ChannelCall>,
}

impl<'a> AuditedChannel<'a> {
    pub fn new(est: &'a DynamicEstimator, log: &'a mut Vec<ChannelCall>) -> Self {
        Self { est, log }
    }
}

impl EstimateChannel for AuditedChannel<'_> {
    fn estimate(&mut self) -> f64 {
        let nu = self.est.estimate();
        self.log.push(ChannelCall {
            update: self.est.updates(),
            nu,
        });
        nu
    }
}

/// Bipartite churn that learns which vertices the estimate depends on.
///
/// After deleting an edge it reads the estimate; a drop is credited to both
/// endpoints. Deletions go to the highest-credited edge among a small random
/// sample, insertions go to the least-credited endpoints among a sample.
pub struct Adversary {
    sampler: PairSampler,
    pool: EdgePool,
    target: usize,
    rng: ChaCha8Rng,
    score: Vec<f64>,
    last_nu: Option<f64>,
    last_deleted: Option<Edge>,
}

const SAMPLE: usize = 16;
const DECAY: f64 = 0.98;

impl Adversary {
    pub fn new(n: usize, density: f64, seed: u64) -> Self {
        let sampler = PairSampler {
            n,
            left: Some(left_size(n)),
        };
        let d = if density > 0.0 {
            density
        } else {
            (2.0 * n as f64 / sampler.pairs() as f64).min(1.0)
        };
        Self {
            sampler,
            pool: EdgePool::default(),
            target: (d * sampler.pairs() as f64).round() as usize,
            rng: ChaCha8Rng::seed_from_u64(prf::derive(seed, 0xADE, 0)),
            score: vec![0.0; n],
            last_nu: None,
            last_deleted: None,
        }
    }

    pub fn left(&self) -> usize {
        self.sampler.left.unwrap()
    }

    fn credit(&self, e: Edge) -> f64 {
        self.score[e.0] + self.score[e.1]
    }

    /// Reads the estimate once and picks the next update.
    pub fn next(&mut self, ch: &mut dyn EstimateChannel) -> UpdateEvent {
        let nu = ch.estimate();
        if let (Some(prev), Some(e)) = (self.last_nu, self.last_deleted.take()) {
            let drop = prev - nu;
            if drop > 0.0 {
                self.score[e.0] += drop;
                self.score[e.1] += drop;
            }
        }
        self.last_nu = Some(nu);
        self.score.iter_mut().for_each(|s| *s *= DECAY);

        let p_ins = if self.pool.len() < self.target {
            0.9
        } else {
            0.5
        };
        let full = self.pool.len() >= self.sampler.pairs();
        if !full && (self.pool.is_empty() || self.rng.gen_bool(p_ins)) {
            let mut best: Option<Edge> = None;
            for _ in 0..SAMPLE {
                let Some(e) = self.sampler.draw_absent(&mut self.rng, &self.pool) else {
                    break;
                };
                if best.map_or(true, |b| self.credit(e) < self.credit(b)) {
                    best = Some(e);
                }
            }
            let e = best.expect("pool not full");
            self.pool.insert(e);
            UpdateEvent::insert(e.0, e.1)
        } else {
            let mut best = self.pool.get(self.rng.gen_range(0..self.pool.len()));
            for _ in 1..SAMPLE {
                let e = self.pool.get(self.rng.gen_range(0..self.pool.len()));
                if self.credit(e) > self.credit(best) {
                    best = e;
                }
            }
            self.pool.remove(best);
            self.last_deleted = Some(best);
            UpdateEvent::delete(best.0, best.1)
        }
    }
}

/// Plays the adversary against `est` for `horizon` updates. Returns the
/// realized stream and the channel log (one call per update).
pub fn play(
    est: &mut DynamicEstimator,
    adv: &mut Adversary,
    horizon: usize,
    mut after_update: impl FnMut(&DynamicEstimator) -> Result<(), EstimatorError>,
) -> Result<(UpdateStream, Vec<ChannelCall>), EstimatorError> {
    let mut log = Vec::with_capacity(horizon);
    let mut items = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let ev = {
            let mut ch = AuditedChannel::new(est, &mut log);
            adv.next(&mut ch)
        };
        est.apply(&ev)?;
        items.push(StreamItem::Update(ev));
        after_update(est)?;
    }
    let stream = UpdateStream {
        n: Some(est.graph().n()),
        left: Some(adv.left()),
        items,
    };
    Ok((stream, log))
}
