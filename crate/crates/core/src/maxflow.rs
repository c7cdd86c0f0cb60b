//! Dinic's maximum-flow algorithm on real-valued capacities.
//!
//! Residual capacities at or below `eps` are treated as saturated. All loops
//! are iterative so path length is not limited by the call stack.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: u32,
    cap: f64,
}

/// Flow network with paired forward/backward arcs.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    // Arc `e` and `e ^ 1` are each other's reverse.
    arcs: Vec<Arc>,
    head: Vec<Vec<u32>>,
}

/// Counters collected while solving.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowStats {
    pub phases: u64,
    pub augmentations: u64,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            head: vec![Vec::new(); nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.head.len()
    }

    /// Adds `u → v` with capacity `cap` and `v → u` with capacity `rev_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        debug_assert!(cap >= 0.0 && rev_cap >= 0.0);
        let e = self.arcs.len() as u32;
        self.arcs.push(Arc { to: v as u32, cap });
        self.arcs.push(Arc {
            to: u as u32,
            cap: rev_cap,
        });
        self.head[u].push(e);
        self.head[v].push(e + 1);
    }

    fn levels(&self, s: usize, t: usize, eps: f64, level: &mut [u32]) -> bool {
        level.fill(u32::MAX);
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let a = &self.arcs[e as usize];
                let v = a.to as usize;
                if a.cap > eps && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level[t] != u32::MAX
    }

    /// Pushes a maximum flow from `s` to `t`; returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize, eps: f64) -> (f64, FlowStats) {
        let n = self.node_count();
        let mut stats = FlowStats::default();
        let mut total = 0.0;
        if s == t {
            return (total, stats);
        }
        let mut level = vec![u32::MAX; n];
        let mut cursor = vec![0usize; n];
        let mut path: Vec<u32> = Vec::new();

        while self.levels(s, t, eps, &mut level) {
            stats.phases += 1;
            cursor.fill(0);
            path.clear();
            let mut u = s;
            loop {
                if u == t {
                    let bottleneck = path
                        .iter()
                        .map(|&e| self.arcs[e as usize].cap)
                        .fold(f64::INFINITY, f64::min);
                    let mut retreat_to = None;
                    for (k, &e) in path.iter().enumerate() {
                        self.arcs[e as usize].cap -= bottleneck;
                        self.arcs[(e ^ 1) as usize].cap += bottleneck;
                        if retreat_to.is_none() && self.arcs[e as usize].cap <= eps {
                            retreat_to = Some(k);
                        }
                    }
                    total += bottleneck;
                    stats.augmentations += 1;
                    // Resume from the tail of the first saturated arc.
                    let k = retreat_to.unwrap_or(0);
                    path.truncate(k);
                    u = match path.last() {
                        Some(&e) => self.arcs[e as usize].to as usize,
                        None => s,
                    };
                    continue;
                }
                let mut advanced = false;
                while cursor[u] < self.head[u].len() {
                    let e = self.head[u][cursor[u]];
                    let a = &self.arcs[e as usize];
                    let v = a.to as usize;
                    if a.cap > eps && level[v] == level[u] + 1 {
                        path.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    cursor[u] += 1;
                }
                if advanced {
                    continue;
                }
                // Dead end: prune `u` from this phase and retreat.
                level[u] = u32::MAX;
                match path.pop() {
                    Some(e) => {
                        let tail = self.arcs[(e ^ 1) as usize].to as usize;
                        cursor[tail] += 1;
                        u = tail;
                    }
                    None => break,
                }
            }
        }
        (total, stats)
    }

    /// Nodes reachable from `s` through arcs with residual capacity above `eps`.
    pub fn residual_reachable(&self, s: usize, eps: f64) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let a = &self.arcs[e as usize];
                let v = a.to as usize;
                if a.cap > eps && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}
