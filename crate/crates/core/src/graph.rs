//! Directed weighted social graphs over interned user identifiers.
//!
//! A [`SocialGraph`] serves both as a retweet graph (edge `i → j` with weight
//! `w` means `i` retweeted `j` a total of `w` times) and as a follower graph
//! (edge `j → i` means `i` follows `j`, so `j`'s posts reach `i`). Parallel
//! edges are merged by summing weights and self-loops are dropped at build
//! time. Adjacency is stored in compressed sparse rows in both directions and
//! the per-node strengths are cached.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Which relation the edges of a graph encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSemantics {
    /// `i → j`: `i` retweeted `j`.
    Retweet,
    /// `j → i`: `i` follows `j`.
    Follower,
}

/// Bijection between external user identifiers and dense node indices.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `name`, allocating a new one on first sight.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&idx) = self.index.get(name) {
            return idx;
        }
        let idx = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), idx);
        idx
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Counters reported when a graph is assembled from raw rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub rows_read: u64,
    pub self_loops_dropped: u64,
    pub parallel_merged: u64,
}

/// Accumulates raw edges, then freezes them into a [`SocialGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    role: EdgeSemantics,
    interner: Interner,
    edges: Vec<(u32, u32, f64)>,
    stats: BuildStats,
}

impl GraphBuilder {
    pub fn new(role: EdgeSemantics) -> Self {
        Self {
            role,
            interner: Interner::new(),
            edges: Vec::new(),
            stats: BuildStats::default(),
        }
    }

    /// Registers a node without edges. Returns its index.
    pub fn add_node(&mut self, name: &str) -> usize {
        self.interner.intern(name)
    }

    /// Adds a weighted edge between two named users.
    ///
    /// Negative or non-finite weights are rejected with
    /// [`Error::InvalidParameter`]; use [`crate::io`] for line-numbered errors.
    pub fn add_edge(&mut self, src: &str, dst: &str, weight: f64) -> Result<()> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "edge {src} -> {dst} has invalid weight {weight}"
            )));
        }
        let s = self.interner.intern(src);
        let d = self.interner.intern(dst);
        self.push(s, d, weight);
        Ok(())
    }

    /// Adds an edge between already-interned node indices.
    pub fn add_edge_by_index(&mut self, src: usize, dst: usize, weight: f64) {
        assert!(src < self.interner.len() && dst < self.interner.len());
        assert!(weight >= 0.0 && weight.is_finite());
        self.push(src, dst, weight);
    }

    fn push(&mut self, src: usize, dst: usize, weight: f64) {
        self.stats.rows_read += 1;
        if src == dst {
            self.stats.self_loops_dropped += 1;
            return;
        }
        self.edges.push((src as u32, dst as u32, weight));
    }

    pub fn node_count(&self) -> usize {
        self.interner.len()
    }

    pub fn build(self) -> (SocialGraph, BuildStats) {
        let GraphBuilder {
            role,
            interner,
            mut edges,
            mut stats,
        } = self;
        // Stable sort keeps the original row order within a pair, so merged
        // sums are reproducible.
        edges.sort_by_key(|&(s, d, _)| (s, d));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len());
        for (s, d, w) in edges {
            match merged.last_mut() {
                Some(last) if last.0 == s && last.1 == d => {
                    last.2 += w;
                    stats.parallel_merged += 1;
                }
                _ => merged.push((s, d, w)),
            }
        }
        (SocialGraph::from_sorted(role, interner, merged), stats)
    }
}

/// Immutable directed weighted graph with cached strengths.
#[derive(Debug, Clone)]
pub struct SocialGraph {
    role: EdgeSemantics,
    interner: Interner,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    out_weights: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    in_weights: Vec<f64>,
    out_strength: Vec<f64>,
    in_strength: Vec<f64>,
}

impl SocialGraph {
    /// `edges` must be sorted by `(src, dst)` and free of duplicates and loops.
    fn from_sorted(role: EdgeSemantics, interner: Interner, edges: Vec<(u32, u32, f64)>) -> Self {
        let n = interner.len();
        let m = edges.len();

        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(s, d, _) in &edges {
            out_offsets[s as usize + 1] += 1;
            in_offsets[d as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }

        let mut out_targets = Vec::with_capacity(m);
        let mut out_weights = Vec::with_capacity(m);
        let mut in_sources = vec![0u32; m];
        let mut in_weights = vec![0f64; m];
        let mut in_fill = in_offsets.clone();
        let mut out_strength = vec![0f64; n];
        let mut in_strength = vec![0f64; n];
        // Edges are sorted by source, so in-lists come out sorted by source too.
        for &(s, d, w) in &edges {
            out_targets.push(d);
            out_weights.push(w);
            let slot = in_fill[d as usize];
            in_sources[slot] = s;
            in_weights[slot] = w;
            in_fill[d as usize] += 1;
            out_strength[s as usize] += w;
            in_strength[d as usize] += w;
        }

        Self {
            role,
            interner,
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_weights,
            out_strength,
            in_strength,
        }
    }

    /// Convenience constructor from `(src, dst, weight)` triples over `n`
    /// nodes named `"0"`, `"1"`, ... .
    pub fn from_index_edges(role: EdgeSemantics, n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut b = GraphBuilder::new(role);
        for i in 0..n {
            b.add_node(&i.to_string());
        }
        for &(s, d, w) in edges {
            b.add_edge_by_index(s, d, w);
        }
        b.build().0
    }

    pub fn role(&self) -> EdgeSemantics {
        self.role
    }

    pub fn node_count(&self) -> usize {
        self.interner.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    pub fn name(&self, node: usize) -> &str {
        self.interner.name(node)
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.interner.get(name)
    }

    /// `(target, weight)` pairs of the out-edges of `node`, sorted by target.
    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.out_offsets[node]..self.out_offsets[node + 1];
        self.out_targets[r.clone()]
            .iter()
            .zip(&self.out_weights[r])
            .map(|(&t, &w)| (t as usize, w))
    }

    /// `(source, weight)` pairs of the in-edges of `node`, sorted by source.
    pub fn in_edges(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.in_offsets[node]..self.in_offsets[node + 1];
        self.in_sources[r.clone()]
            .iter()
            .zip(&self.in_weights[r])
            .map(|(&s, &w)| (s as usize, w))
    }

    /// All edges as `(src, dst, weight)`, ordered by `(src, dst)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |s| self.out_edges(s).map(move |(d, w)| (s, d, w)))
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_offsets[node + 1] - self.out_offsets[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_offsets[node + 1] - self.in_offsets[node]
    }

    /// Total outgoing weight `Σ_j w_ij`.
    pub fn out_strength(&self, node: usize) -> f64 {
        self.out_strength[node]
    }

    /// Total incoming weight `Σ_j w_ji`.
    pub fn in_strength(&self, node: usize) -> f64 {
        self.in_strength[node]
    }

    pub fn out_strengths(&self) -> &[f64] {
        &self.out_strength
    }

    pub fn in_strengths(&self) -> &[f64] {
        &self.in_strength
    }

    /// Sub-graph induced by the nodes with `keep[i] == true`.
    ///
    /// Returns the new graph and, for every old index, its new index (if kept).
    /// Node names are preserved and relative order is kept.
    pub fn induced(&self, keep: &[bool]) -> (SocialGraph, Vec<Option<usize>>) {
        assert_eq!(keep.len(), self.node_count());
        let mut interner = Interner::new();
        let mut remap = vec![None; self.node_count()];
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            remap[i] = Some(interner.intern(self.name(i)));
        }
        let edges: Vec<(u32, u32, f64)> = self
            .edges()
            .filter_map(|(s, d, w)| Some((remap[s]? as u32, remap[d]? as u32, w)))
            .collect();
        (SocialGraph::from_sorted(self.role, interner, edges), remap)
    }
}

/// Which cached strength to summarise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthKind {
    In,
    Out,
}

/// Nearest-rank percentile of the in- or out-strength distribution.
///
/// Returns the smallest strength `v` such that at least `⌈q·n/100⌉` nodes have
/// strength `≤ v`.
pub fn degree_percentile(graph: &SocialGraph, which: StrengthKind, q: f64) -> Result<f64> {
    let values = match which {
        StrengthKind::In => graph.in_strengths(),
        StrengthKind::Out => graph.out_strengths(),
    };
    nearest_rank(values, q)
}

/// Nearest-rank percentile of an arbitrary sample, `q ∈ (0, 100]`.
pub fn nearest_rank(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "percentile {q} outside (0, 100]"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((q * n as f64) / 100.0).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}
