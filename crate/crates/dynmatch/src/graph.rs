//! Dynamic graph storage, solution containers and their validators, and the
//! update-stream text format.

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;

/// Unordered pair stored with the smaller endpoint first.
pub type Edge = (VertexId, VertexId);

#[inline]
pub fn canon(u: VertexId, v: VertexId) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

#[inline]
fn key(u: VertexId, v: VertexId) -> u64 {
    let (a, b) = canon(u, v);
    ((a as u64) << 32) | b as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UpdateKind {
    Insert,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub kind: UpdateKind,
    pub u: VertexId,
    pub v: VertexId,
}

impl UpdateEvent {
    pub fn insert(u: VertexId, v: VertexId) -> Self {
        Self {
            kind: UpdateKind::Insert,
            u,
            v,
        }
    }

    pub fn delete(u: VertexId, v: VertexId) -> Self {
        Self {
            kind: UpdateKind::Delete,
            u,
            v,
        }
    }

    pub fn edge(&self) -> Edge {
        canon(self.u, self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) is already present")]
    DuplicateInsert(VertexId, VertexId),
    #[error("edge ({0}, {1}) is not present")]
    MissingDelete(VertexId, VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {vertex} out of range for n = {n}")]
    OutOfRange { vertex: VertexId, n: usize },
}

/// Receives every successfully applied update, in registration order.
pub trait GraphListener {
    fn on_update(&mut self, graph: &DynamicGraph, ev: &UpdateEvent);
}

/// Fixed vertex set, hashed edge index, adjacency lists with O(1) removal.
#[derive(Clone, Debug, Default)]
pub struct DynamicGraph {
    n: usize,
    // edge key -> (position in adj[min], position in adj[max])
    index: FxHashMap<u64, (u32, u32)>,
    adj: Vec<Vec<VertexId>>,
}

impl DynamicGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            index: FxHashMap::default(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self, GraphError> {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.apply_update(&UpdateEvent::insert(u, v))?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.index.len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn check(&self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::OutOfRange {
                    vertex: x,
                    n: self.n,
                });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        Ok(())
    }

    pub fn edge_exists(&self, u: VertexId, v: VertexId) -> Result<bool, GraphError> {
        self.check(u, v)?;
        Ok(self.has_edge(u, v))
    }

    /// Unchecked membership test for hot paths (out-of-range or equal endpoints give false).
    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.index.contains_key(&key(u, v))
    }

    pub fn apply_update(&mut self, ev: &UpdateEvent) -> Result<(), GraphError> {
        let (u, v) = ev.edge();
        self.check(u, v)?;
        let k = key(u, v);
        match ev.kind {
            UpdateKind::Insert => {
                if self.index.contains_key(&k) {
                    return Err(GraphError::DuplicateInsert(u, v));
                }
                let pu = self.adj[u].len() as u32;
                let pv = self.adj[v].len() as u32;
                self.adj[u].push(v);
                self.adj[v].push(u);
                self.index.insert(k, (pu, pv));
            }
            UpdateKind::Delete => {
                let (pu, pv) = self
                    .index
                    .remove(&k)
                    .ok_or(GraphError::MissingDelete(u, v))?;
                self.detach(u, pu as usize);
                self.detach(v, pv as usize);
            }
        }
        Ok(())
    }

    fn detach(&mut self, x: VertexId, pos: usize) {
        self.adj[x].swap_remove(pos);
        if pos < self.adj[x].len() {
            let moved = self.adj[x][pos];
            let slot = self
                .index
                .get_mut(&key(x, moved))
                .expect("adjacency and index agree");
            if x < moved {
                slot.0 = pos as u32;
            } else {
                slot.1 = pos as u32;
            }
        }
    }

    /// Applies the update and then notifies each listener once, in order.
    pub fn apply_and_notify(
        &mut self,
        ev: &UpdateEvent,
        listeners: &mut [&mut dyn GraphListener],
    ) -> Result<(), GraphError> {
        self.apply_update(ev)?;
        for l in listeners.iter_mut() {
            l.on_update(self, ev);
        }
        Ok(())
    }

    /// All edges, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Full consistency sweep of degrees, adjacency and the edge index.
    pub fn check_consistency(&self) -> Result<(), String> {
        let deg_sum: usize = self.adj.iter().map(Vec::len).sum();
        if deg_sum != 2 * self.index.len() {
            return Err(format!(
                "degree sum {} != 2 * {}",
                deg_sum,
                self.index.len()
            ));
        }
        for (u, ns) in self.adj.iter().enumerate() {
            for (p, &v) in ns.iter().enumerate() {
                let &(pa, pb) = self
                    .index
                    .get(&key(u, v))
                    .ok_or(format!("({u},{v}) missing from index"))?;
                let expect = if u < v { pa } else { pb };
                if expect as usize != p {
                    return Err(format!("stale position for ({u},{v})"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    OutOfRange(VertexId),
    SelfLoop(VertexId),
    MissingEdge(VertexId, VertexId),
    VertexReused(VertexId),
    CapacityExceeded {
        vertex: VertexId,
        load: u32,
        cap: u32,
    },
    LoadMismatch {
        vertex: VertexId,
        recorded: u32,
        actual: u32,
    },
    NegativeValue(VertexId, VertexId),
    FractionalDegree {
        vertex: VertexId,
        degree: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

const NONE: u32 = u32::MAX;

/// Matching with a symmetric partner map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    mate: Vec<u32>,
    size: usize,
}

impl Matching {
    pub fn new(n: usize) -> Self {
        Self {
            mate: vec![NONE; n],
            size: 0,
        }
    }

    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self, Violation> {
        let mut m = Self::new(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Violation::OutOfRange(u.max(v)));
            }
            if u == v {
                return Err(Violation::SelfLoop(u));
            }
            for x in [u, v] {
                if m.is_matched(x) {
                    return Err(Violation::VertexReused(x));
                }
            }
            m.add(u, v);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.mate.len()
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn partner(&self, v: VertexId) -> Option<VertexId> {
        match self.mate[v] {
            NONE => None,
            p => Some(p as VertexId),
        }
    }

    #[inline]
    pub fn is_matched(&self, v: VertexId) -> bool {
        self.mate[v] != NONE
    }

    pub fn contains(&self, u: VertexId, v: VertexId) -> bool {
        self.partner(u) == Some(v)
    }

    /// Adds (u,v); both endpoints must be free.
    pub fn add(&mut self, u: VertexId, v: VertexId) {
        debug_assert!(u != v && !self.is_matched(u) && !self.is_matched(v));
        self.mate[u] = v as u32;
        self.mate[v] = u as u32;
        self.size += 1;
    }

    /// Removes (u,v) if it is a matching edge; returns whether it was.
    pub fn remove(&mut self, u: VertexId, v: VertexId) -> bool {
        if self.contains(u, v) {
            self.mate[u] = NONE;
            self.mate[v] = NONE;
            self.size -= 1;
            true
        } else {
            false
        }
    }

    /// Matching edges in increasing order of the smaller endpoint.
    pub fn edges(&self) -> Vec<Edge> {
        (0..self.mate.len())
            .filter_map(|u| self.partner(u).filter(|&v| u < v).map(|v| (u, v)))
            .collect()
    }

    pub fn matched_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.mate.len()).filter(|&v| self.is_matched(v))
    }
}

/// Multiset of edges under per-vertex capacities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BMatching {
    caps: Vec<u32>,
    load: Vec<u32>,
    mult: BTreeMap<Edge, u32>,
    total: u64,
}

impl BMatching {
    pub fn new(caps: Vec<u32>) -> Self {
        let n = caps.len();
        Self {
            caps,
            load: vec![0; n],
            mult: BTreeMap::new(),
            total: 0,
        }
    }

    /// Builds from raw multiplicities without enforcing capacities (see `validate`).
    pub fn from_parts(caps: Vec<u32>, mult: impl IntoIterator<Item = (Edge, u32)>) -> Self {
        let mut b = Self::new(caps);
        for ((u, v), c) in mult {
            if c == 0 {
                continue;
            }
            let e = canon(u, v);
            *b.mult.entry(e).or_insert(0) += c;
            if e.0 < b.load.len() && e.1 < b.load.len() {
                b.load[e.0] += c;
                b.load[e.1] += c;
            }
            b.total += c as u64;
        }
        b
    }

    pub fn cap(&self, v: VertexId) -> u32 {
        self.caps[v]
    }

    pub fn load(&self, v: VertexId) -> u32 {
        self.load[v]
    }

    #[inline]
    pub fn residual(&self, v: VertexId) -> u32 {
        self.caps[v].saturating_sub(self.load[v])
    }

    pub fn multiplicity(&self, u: VertexId, v: VertexId) -> u32 {
        self.mult.get(&canon(u, v)).copied().unwrap_or(0)
    }

    /// Total number of multi-edges.
    pub fn size(&self) -> u64 {
        self.total
    }

    /// Adds up to `copies` copies of (u,v) within residual capacity; returns copies added.
    pub fn add_copies(&mut self, u: VertexId, v: VertexId, copies: u32) -> u32 {
        let c = copies.min(self.residual(u)).min(self.residual(v));
        if c > 0 {
            *self.mult.entry(canon(u, v)).or_insert(0) += c;
            self.load[u] += c;
            self.load[v] += c;
            self.total += c as u64;
        }
        c
    }

    pub fn support(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.mult.iter().map(|(&e, &c)| (e, c))
    }
}

/// Nonnegative edge values with per-vertex sums at most one.
#[derive(Clone, Debug, Default)]
pub struct FractionalMatching {
    values: BTreeMap<Edge, f64>,
    degree: Vec<f64>,
}

impl FractionalMatching {
    pub fn new(n: usize) -> Self {
        Self {
            values: BTreeMap::new(),
            degree: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.degree.len()
    }

    pub fn set(&mut self, u: VertexId, v: VertexId, x: f64) {
        let e = canon(u, v);
        let old = if x == 0.0 {
            self.values.remove(&e)
        } else {
            self.values.insert(e, x)
        };
        let delta = x - old.unwrap_or(0.0);
        self.degree[u] += delta;
        self.degree[v] += delta;
    }

    pub fn value(&self, u: VertexId, v: VertexId) -> f64 {
        self.values.get(&canon(u, v)).copied().unwrap_or(0.0)
    }

    pub fn fractional_degree(&self, v: VertexId) -> f64 {
        self.degree[v]
    }

    pub fn support(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.values.iter().map(|(&e, &x)| (e, x))
    }

    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }
}

/// Solution objects accepted by [`validate`].
pub enum Solution<'a> {
    /// Raw edge list so that invalid candidates can be reported.
    Matching(&'a [Edge]),
    BMatching(&'a BMatching),
    Fractional(&'a FractionalMatching),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Validated {
    /// Total value for fractional matchings, size otherwise.
    pub value: f64,
}

/// Returns the first violated invariant, or the solution's value.
pub fn validate(g: &DynamicGraph, sol: Solution<'_>) -> Result<Validated, Violation> {
    let n = g.n();
    let edge_ok = |u: VertexId, v: VertexId| -> Result<(), Violation> {
        if u >= n || v >= n {
            return Err(Violation::OutOfRange(u.max(v)));
        }
        if u == v {
            return Err(Violation::SelfLoop(u));
        }
        if !g.has_edge(u, v) {
            return Err(Violation::MissingEdge(u.min(v), u.max(v)));
        }
        Ok(())
    };
    match sol {
        Solution::Matching(edges) => {
            let mut used = vec![false; n];
            for &(u, v) in edges {
                edge_ok(u, v)?;
                for x in [u, v] {
                    if std::mem::replace(&mut used[x], true) {
                        return Err(Violation::VertexReused(x));
                    }
                }
            }
            Ok(Validated {
                value: edges.len() as f64,
            })
        }
        Solution::BMatching(b) => {
            let mut actual = vec![0u32; n];
            for ((u, v), c) in b.support() {
                edge_ok(u, v)?;
                actual[u] += c;
                actual[v] += c;
            }
            for v in 0..n.min(b.caps.len()) {
                if b.load[v] != actual[v] {
                    return Err(Violation::LoadMismatch {
                        vertex: v,
                        recorded: b.load[v],
                        actual: actual[v],
                    });
                }
                if actual[v] > b.caps[v] {
                    return Err(Violation::CapacityExceeded {
                        vertex: v,
                        load: actual[v],
                        cap: b.caps[v],
                    });
                }
            }
            Ok(Validated {
                value: b.size() as f64,
            })
        }
        Solution::Fractional(x) => {
            let mut deg = vec![0.0f64; n];
            for ((u, v), val) in x.support() {
                edge_ok(u, v)?;
                if !(val >= 0.0) {
                    return Err(Violation::NegativeValue(u, v));
                }
                deg[u] += val;
                deg[v] += val;
            }
            const SLACK: f64 = 1e-9;
            if let Some(v) = (0..n).find(|&v| deg[v] > 1.0 + SLACK) {
                return Err(Violation::FractionalDegree {
                    vertex: v,
                    degree: deg[v],
                });
            }
            Ok(Validated { value: x.total() })
        }
    }
}

/// One line of the update-stream format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamItem {
    Update(UpdateEvent),
    Query,
}

/// Parsed stream plus optional header directives (`# n <N>`, `# left <L>`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateStream {
    pub n: Option<usize>,
    pub left: Option<usize>,
    pub items: Vec<StreamItem>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl UpdateStream {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut s = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: &str| ParseError {
                line: i + 1,
                msg: msg.to_string(),
            };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                match (parts.next(), parts.next().and_then(|x| x.parse().ok())) {
                    (Some("n"), Some(v)) => s.n = Some(v),
                    (Some("left"), Some(v)) => s.left = Some(v),
                    _ => {}
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or_default();
            if tag == "q" {
                s.items.push(StreamItem::Query);
                continue;
            }
            let mut vertex = || -> Result<VertexId, ParseError> {
                parts
                    .next()
                    .ok_or_else(|| err("missing vertex"))?
                    .parse()
                    .map_err(|_| err("bad vertex id"))
            };
            let (u, v) = (vertex()?, vertex()?);
            let ev = match tag {
                "i" => UpdateEvent::insert(u, v),
                "d" => UpdateEvent::delete(u, v),
                _ => return Err(err("unknown event tag")),
            };
            s.items.push(StreamItem::Update(ev));
        }
        Ok(s)
    }

    /// Vertex count from the header, else one past the largest id seen.
    pub fn vertex_count(&self) -> usize {
        self.n
            .unwrap_or_else(|| self.updates().map(|e| e.u.max(e.v) + 1).max().unwrap_or(0))
    }

    pub fn updates(&self) -> impl Iterator<Item = &UpdateEvent> {
        self.items.iter().filter_map(|it| match it {
            StreamItem::Update(e) => Some(e),
            StreamItem::Query => None,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(n) = self.n {
            out.push_str(&format!("# n {n}\n"));
        }
        if let Some(l) = self.left {
            out.push_str(&format!("# left {l}\n"));
        }
        for it in &self.items {
            match it {
                StreamItem::Query => out.push_str("q\n"),
                StreamItem::Update(e) => {
                    let tag = if e.kind == UpdateKind::Insert {
                        'i'
                    } else {
                        'd'
                    };
                    out.push_str(&format!("{tag} {} {}\n", e.u, e.v));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delete_fixes_positions_of_moved_entries() {
        let mut g = DynamicGraph::new(5);
        for v in 1..5 {
            g.apply_update(&UpdateEvent::insert(0, v)).unwrap();
        }
        g.apply_update(&UpdateEvent::delete(0, 1)).unwrap();
        g.check_consistency().unwrap();
        g.apply_update(&UpdateEvent::delete(4, 0)).unwrap();
        g.check_consistency().unwrap();
        assert_eq!(g.edges(), vec![(0, 2), (0, 3)]);
    }

    #[test]
    fn stream_roundtrip_keeps_header() {
        let text = "# n 6\n# left 3\ni 0 3\nq\nd 0 3\n";
        let s = UpdateStream::parse(text).unwrap();
        assert_eq!(s.n, Some(6));
        assert_eq!(s.left, Some(3));
        assert_eq!(s.render(), text);
    }

    #[test]
    fn bmatching_add_respects_residuals() {
        let mut b = BMatching::new(vec![3, 2]);
        assert_eq!(b.add_copies(0, 1, 5), 2);
        assert_eq!(b.residual(0), 1);
        assert_eq!(b.add_copies(1, 0, 1), 0);
    }
}

/// Immutable adjacency snapshot used by the static algorithms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    adj: Vec<Vec<VertexId>>,
    edges: Vec<Edge>,
}

impl SimpleGraph {
    /// Canonicalizes and deduplicates; self-loops are dropped.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut es: Vec<Edge> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| canon(u, v))
            .collect();
        es.sort_unstable();
        es.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &es {
            adj[u].push(v);
            adj[v].push(u);
        }
        Self { n, adj, edges: es }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        let (a, b) = canon(u, v);
        self.edges.binary_search(&(a, b)).is_ok()
    }

    /// Proper 2-coloring (`true` = first side) if the graph is bipartite.
    pub fn two_coloring(&self) -> Option<Vec<bool>> {
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        let mut stack = Vec::new();
        for s in 0..self.n {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(true);
            stack.push(s);
            while let Some(u) = stack.pop() {
                let cu = color[u].unwrap();
                for &w in &self.adj[u] {
                    match color[w] {
                        None => {
                            color[w] = Some(!cu);
                            stack.push(w);
                        }
                        Some(cw) if cw == cu => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(|c| c.unwrap()).collect())
    }
}

impl From<&DynamicGraph> for SimpleGraph {
    fn from(g: &DynamicGraph) -> Self {
        SimpleGraph::new(g.n(), g.edges())
    }
}
