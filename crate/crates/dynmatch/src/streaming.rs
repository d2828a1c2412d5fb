//! Two-pass semi-streaming estimators: the bipartite b-matching estimator and
//! the general random-bipartition estimator. The estimator module reuses the
//! capacity and formula helpers at query time.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BMatching, Edge, Matching, SimpleGraph, VertexId};
use crate::oracles::{self, AugPathCollection, OracleError};
use crate::prf;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamingError {
    #[error("input stream is not bipartite")]
    NonBipartiteInput,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Capacity parameters of the bipartite second pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondPassConfig {
    pub b: f64,
    pub k: u32,
    pub delta: f64,
    pub eps: f64,
}

impl SecondPassConfig {
    /// b = 1+√2, ε′ = ε/16, k = ⌈8/(ε′b)⌉.
    pub fn bipartite(eps: f64) -> Self {
        let b = 1.0 + std::f64::consts::SQRT_2;
        let eps_p = eps / 16.0;
        let k = (8.0 / (eps_p * b)).ceil() as u32;
        Self {
            b,
            k,
            delta: 1.0 / b,
            eps,
        }
    }

    /// Capacity on vertices left free by M₁: ⌊k·b⌋.
    pub fn free_cap(&self) -> u32 {
        (self.k as f64 * self.b).floor() as u32
    }

    /// ν = (1−δ)|M₁| + (δ/k)|M₂|.
    pub fn estimate(&self, m1: usize, m2: f64) -> f64 {
        (1.0 - self.delta) * m1 as f64 + self.delta / self.k as f64 * m2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    MatchedEdge,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    pub side: Vec<Side>,
    pub provenance: Vec<Provenance>,
}

/// M₁ endpoints split with the lower id on the left; free vertices by fair coins.
pub fn random_bipartition(m1: &Matching, n: usize, seed: u64) -> Bipartition {
    let mut side = Vec::with_capacity(n);
    let mut provenance = Vec::with_capacity(n);
    for v in 0..n {
        match m1.partner(v) {
            Some(p) => {
                side.push(if v < p { Side::Left } else { Side::Right });
                provenance.push(Provenance::MatchedEdge);
            }
            None => {
                let coin = prf::prf2(seed, 0xB1B1, v as u64) & 1 == 0;
                side.push(if coin { Side::Left } else { Side::Right });
                provenance.push(Provenance::Random);
            }
        }
    }
    Bipartition { side, provenance }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BScan {
    /// One copy per eligible edge per scan, rescanning until a scan adds nothing.
    RoundRobin,
    /// As many copies as both residuals allow on first sight; one scan.
    Saturating,
}

/// Maximal b-matching over `eligible` under `caps`.
pub fn maximal_b_matching(eligible: &[Edge], caps: Vec<u32>, scan: BScan) -> BMatching {
    let mut b = BMatching::new(caps);
    match scan {
        BScan::Saturating => {
            for &(u, v) in eligible {
                b.add_copies(u, v, u32::MAX);
            }
        }
        BScan::RoundRobin => {
            let mut live: Vec<Edge> = eligible.to_vec();
            while !live.is_empty() {
                let mut added = false;
                live.retain(|&(u, v)| {
                    let ok = b.add_copies(u, v, 1) > 0;
                    added |= ok;
                    ok
                });
                if !added {
                    break;
                }
            }
        }
    }
    b
}

/// Greedy maximal matching over the stream, in stream order.
pub fn first_pass_matching(n: usize, stream: &[Edge]) -> Matching {
    oracles::greedy_in_order(n, stream.iter().copied())
}

#[derive(Clone, Debug)]
pub struct BipartiteOutcome {
    pub nu: f64,
    pub m1: Matching,
    pub m2: BMatching,
    pub config: SecondPassConfig,
    /// Edges kept in memory across both passes (|M₁| plus the support of M₂).
    pub retained_edges: usize,
}

/// Algorithm 1 on an insert-only stream; the second pass re-reads `stream`.
pub fn bipartite_two_pass(
    n: usize,
    stream: &[Edge],
    eps: f64,
) -> Result<BipartiteOutcome, StreamingError> {
    if SimpleGraph::new(n, stream.iter().copied())
        .two_coloring()
        .is_none()
    {
        return Err(StreamingError::NonBipartiteInput);
    }
    let config = SecondPassConfig::bipartite(eps);
    let m1 = first_pass_matching(n, stream);
    let caps = (0..n)
        .map(|v| {
            if m1.is_matched(v) {
                config.k
            } else {
                config.free_cap()
            }
        })
        .collect();
    let eligible: Vec<Edge> = stream
        .iter()
        .copied()
        .filter(|&(u, v)| m1.is_matched(u) != m1.is_matched(v))
        .collect();
    let m2 = maximal_b_matching(&eligible, caps, BScan::RoundRobin);
    let nu = config.estimate(m1.len(), m2.size() as f64);
    let retained_edges = m1.len() + m2.support().count();
    Ok(BipartiteOutcome {
        nu,
        m1,
        m2,
        config,
        retained_edges,
    })
}

/// E₂: edges between a matched and a free vertex lying on opposite sides.
pub fn crossing_edges<'a>(
    edges: impl IntoIterator<Item = &'a Edge>,
    m1: &Matching,
    part: &Bipartition,
) -> Vec<Edge> {
    edges
        .into_iter()
        .copied()
        .filter(|&(u, v)| m1.is_matched(u) != m1.is_matched(v) && part.side[u] != part.side[v])
        .collect()
}

/// Edges of M₁ whose endpoints are both saturated by M₂.
pub fn doubly_matched(m1: &Matching, m2: &BMatching) -> Vec<Edge> {
    m1.edges()
        .into_iter()
        .filter(|&(u, v)| m2.load(u) > 0 && m2.load(v) > 0)
        .collect()
}

#[derive(Clone, Debug)]
pub struct GeneralOutcome {
    pub size: usize,
    pub m1: Matching,
    pub m2: BMatching,
    pub m1_hat: Vec<Edge>,
    pub bipartition: Bipartition,
    /// False when the union exceeded the exact-oracle cap and the size came
    /// from |M₁| plus the disjointified path set.
    pub exact_union: bool,
}

/// Algorithm 2 with integer free-vertex capacity `b`.
pub fn general_two_pass(
    n: usize,
    stream: &[Edge],
    _eps: f64,
    b: u32,
    seed: u64,
) -> Result<GeneralOutcome, StreamingError> {
    let m1 = first_pass_matching(n, stream);
    let bipartition = random_bipartition(&m1, n, seed);
    let e2 = crossing_edges(stream, &m1, &bipartition);
    let caps = (0..n)
        .map(|v| if m1.is_matched(v) { 1 } else { b })
        .collect();
    let m2 = maximal_b_matching(&e2, caps, BScan::RoundRobin);
    let m1_hat = doubly_matched(&m1, &m2);

    let mut union: Vec<Edge> = m1.edges();
    union.extend(m2.support().map(|(e, _)| e));
    let (size, exact_union) = match union_max_matching(n, &union) {
        Ok(s) => (s, true),
        Err(OracleError::TooLarge { .. }) => {
            let paths = disjointify(&m1, &m2, &m1_hat, &bipartition);
            (m1.len() + paths.len(), false)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(GeneralOutcome {
        size,
        m1,
        m2,
        m1_hat,
        bipartition,
        exact_union,
    })
}

/// μ of the subgraph spanned by `edges`, relabelled onto its touched vertices.
fn union_max_matching(n: usize, edges: &[Edge]) -> Result<usize, OracleError> {
    let mut id: FxHashMap<VertexId, usize> = FxHashMap::default();
    let mut relabel = |v: VertexId| {
        let next = id.len();
        *id.entry(v).or_insert(next)
    };
    let local: Vec<Edge> = edges
        .iter()
        .map(|&(u, v)| (relabel(u), relabel(v)))
        .collect();
    let _ = n;
    let h = SimpleGraph::new(id.len(), local);
    oracles::max_matching_exact(&h, oracles::ExactMode::General).map(|(s, _)| s)
}

/// Vertex-disjoint 3-augmenting paths from M̂₁: contract each path u′–u–v–v′
/// to u′–v′, take a maximum matching of the contracted bipartite graph, and
/// keep the paths behind its edges.
pub fn disjointify(
    m1: &Matching,
    m2: &BMatching,
    m1_hat: &[Edge],
    part: &Bipartition,
) -> AugPathCollection {
    let n = m1.n();
    let mut partner2: FxHashMap<VertexId, VertexId> = FxHashMap::default();
    for ((a, b), _) in m2.support() {
        if m1.is_matched(a) {
            partner2.insert(a, b);
        } else {
            partner2.insert(b, a);
        }
    }
    let mut behind: FxHashMap<Edge, [VertexId; 4]> = FxHashMap::default();
    for &(u, v) in m1_hat {
        let (Some(&up), Some(&vp)) = (partner2.get(&u), partner2.get(&v)) else {
            continue;
        };
        if up == vp {
            continue;
        }
        behind
            .entry(crate::graph::canon(up, vp))
            .or_insert([up, u, v, vp]);
    }
    let contracted = SimpleGraph::new(n, behind.keys().copied());
    let side: Vec<bool> = part.side.iter().map(|&s| s == Side::Left).collect();
    let mm = oracles::hopcroft_karp(&contracted, &side);
    let mut paths: Vec<[VertexId; 4]> = mm.edges().iter().map(|e| behind[e]).collect();
    paths.sort_unstable();
    AugPathCollection { paths }
}
