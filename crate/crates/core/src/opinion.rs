//! Opinion dynamics with stubborn users on a follower graph.
//!
//! Each user `i` posts at rate `λ_i`; every post reaches the followers of `i`.
//! Stubborn users never change their opinion. In equilibrium every reachable
//! non-stubborn user holds the rate-weighted average of its friends' opinions:
//!
//! ```text
//! θ_i = Σ_{j ∈ friends(i)} λ_j θ_j / Σ_{j ∈ friends(i)} λ_j
//! ```
//!
//! which is the fixed-point form of `G θ = F Ψ`. Follower-edge weights are
//! ignored; only presence of the edge matters.

use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeSemantics, SocialGraph};

/// Stubborn anchors, posting rates and initial opinions over a follower graph.
#[derive(Debug, Clone)]
pub struct OpinionState {
    graph: SocialGraph,
    stubborn: Vec<Option<f64>>,
    rates: Vec<f64>,
    initial: Vec<f64>,
}

impl OpinionState {
    /// `stubborn[i] = Some(Ψ_i)` marks `i` stubborn. Non-stubborn users start
    /// the simulator at 0.5 unless [`OpinionState::with_initial`] is used.
    pub fn new(graph: SocialGraph, stubborn: Vec<Option<f64>>, rates: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(graph.role(), EdgeSemantics::Follower);
        let n = graph.node_count();
        for len in [stubborn.len(), rates.len()] {
            if len != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        for (i, psi) in stubborn.iter().enumerate() {
            if let Some(p) = psi {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::ScoreOutOfRange {
                        record: graph.name(i).to_owned(),
                        score: *p,
                    });
                }
            }
        }
        if let Some(i) = rates.iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "rate {} of {} must be finite and >= 0",
                rates[i],
                graph.name(i)
            )));
        }
        let initial = stubborn.iter().map(|p| p.unwrap_or(0.5)).collect();
        Ok(Self {
            graph,
            stubborn,
            rates,
            initial,
        })
    }

    /// Sets initial opinions used by [`simulate`]; stubborn entries are
    /// overridden by their anchors.
    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != self.node_count() {
            return Err(Error::SizeMismatch {
                expected: self.node_count(),
                actual: initial.len(),
            });
        }
        self.initial = initial
            .into_iter()
            .zip(&self.stubborn)
            .map(|(x, s)| s.unwrap_or(x.clamp(0.0, 1.0)))
            .collect();
        Ok(self)
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn stubborn_opinion(&self, node: usize) -> Option<f64> {
        self.stubborn[node]
    }

    pub fn is_stubborn(&self, node: usize) -> bool {
        self.stubborn[node].is_some()
    }

    pub fn stubborn_anchors(&self) -> &[Option<f64>] {
        &self.stubborn
    }

    pub fn rate(&self, node: usize) -> f64 {
        self.rates[node]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn stubborn_count(&self) -> usize {
        self.stubborn.iter().filter(|s| s.is_some()).count()
    }

    /// Same anchors and graph, different rates.
    pub fn with_rates(&self, rates: Vec<f64>) -> Result<Self> {
        let initial = self.initial.clone();
        Self::new(self.graph.clone(), self.stubborn.clone(), rates)?.with_initial(initial)
    }

    /// Same graph and rates, different anchors.
    pub fn with_anchors(&self, stubborn: Vec<Option<f64>>) -> Result<Self> {
        Self::new(self.graph.clone(), stubborn, self.rates.clone())
    }

    /// Deletes the marked nodes and every edge touching them. Returns the
    /// reduced state and the old → new index map.
    pub fn without_nodes(&self, remove: &[bool]) -> (Self, Vec<Option<usize>>) {
        let keep: Vec<bool> = remove.iter().map(|r| !r).collect();
        let (graph, remap) = self.graph.induced(&keep);
        let pick = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| *x).collect()
        };
        let stubborn = self
            .stubborn
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(s, _)| *s)
            .collect();
        let state = Self {
            graph,
            stubborn,
            rates: pick(&self.rates),
            initial: pick(&self.initial),
        };
        (state, remap)
    }
}

/// How the fixed-point iteration sweeps the nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sweep {
    /// In-place sequential update.
    GaussSeidel,
    /// Parallel update from the previous iterate, relaxed by `damping ∈ (0, 1]`.
    Jacobi { damping: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub sweep: Sweep,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            sweep: Sweep::GaussSeidel,
        }
    }
}

/// Solved equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Anchors for stubborn users, `θ_i` for solvable non-stubborn users and
    /// `None` for users no stubborn user can reach.
    pub opinions: Vec<Option<f64>>,
    /// Non-stubborn users without stubborn influence.
    pub unreachable: Vec<usize>,
    pub iterations: usize,
    /// `max_i |Σ_j λ_j (θ_i − θ_j)|` over solvable users.
    pub residual: f64,
    /// The same residual divided by `Σ_j λ_j`.
    pub relative_residual: f64,
}

impl EquilibriumReport {
    /// Equilibrium opinions of solvable non-stubborn users, `(node, θ)`.
    pub fn free_opinions<'a>(&'a self, state: &'a OpinionState) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.opinions
            .iter()
            .enumerate()
            .filter(move |(i, _)| !state.is_stubborn(*i))
            .filter_map(|(i, o)| o.map(|x| (i, x)))
    }

    /// Mean non-stubborn equilibrium opinion, if any user is solvable.
    pub fn mean_free(&self, state: &OpinionState) -> Option<f64> {
        let (sum, count) = self
            .free_opinions(state)
            .fold((0.0, 0usize), |(s, c), (_, x)| (s + x, c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

/// Non-stubborn users reachable from some stubborn user through friends with
/// positive posting rate. Stubborn users are always `true`.
pub fn solvable_mask(state: &OpinionState) -> Vec<bool> {
    let g = &state.graph;
    let n = g.node_count();
    let mut seen: Vec<bool> = (0..n).map(|i| state.is_stubborn(i)).collect();
    let mut queue: VecDeque<usize> = (0..n)
        .filter(|&i| state.is_stubborn(i) && state.rates[i] > 0.0)
        .collect();
    while let Some(u) = queue.pop_front() {
        for (v, _) in g.out_edges(u) {
            if !seen[v] {
                seen[v] = true;
                if state.rates[v] > 0.0 {
                    queue.push_back(v);
                }
            }
        }
    }
    seen
}

/// Linear system restricted to the solvable non-stubborn users.
struct ReducedSystem {
    /// Node index of each unknown.
    nodes: Vec<usize>,
    /// `Σ_{stubborn friends} λ_j Ψ_j`.
    anchor_pull: Vec<f64>,
    /// `Σ_{active friends} λ_j`.
    total_rate: Vec<f64>,
    offsets: Vec<usize>,
    friend: Vec<u32>,
    friend_rate: Vec<f64>,
}

impl ReducedSystem {
    fn new(state: &OpinionState, solvable: &[bool]) -> Self {
        let g = &state.graph;
        let n = g.node_count();
        let mut slot = vec![usize::MAX; n];
        let nodes: Vec<usize> = (0..n)
            .filter(|&i| solvable[i] && !state.is_stubborn(i))
            .collect();
        for (k, &i) in nodes.iter().enumerate() {
            slot[i] = k;
        }
        let mut sys = ReducedSystem {
            anchor_pull: Vec::with_capacity(nodes.len()),
            total_rate: Vec::with_capacity(nodes.len()),
            offsets: vec![0],
            friend: Vec::new(),
            friend_rate: Vec::new(),
            nodes,
        };
        for &i in &sys.nodes {
            let (mut pull, mut total) = (0.0, 0.0);
            for (j, _) in g.in_edges(i) {
                let r = state.rates[j];
                if r <= 0.0 || !solvable[j] {
                    continue;
                }
                total += r;
                match state.stubborn[j] {
                    Some(psi) => pull += r * psi,
                    None => {
                        sys.friend.push(slot[j] as u32);
                        sys.friend_rate.push(r);
                    }
                }
            }
            sys.anchor_pull.push(pull);
            sys.total_rate.push(total);
            sys.offsets.push(sys.friend.len());
        }
        sys
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// `Σ_j λ_j θ_j` over the free friends of unknown `k`, plus the anchor pull.
    #[inline]
    fn weighted_sum(&self, k: usize, theta: &[f64]) -> f64 {
        let r = self.offsets[k]..self.offsets[k + 1];
        self.friend[r.clone()]
            .iter()
            .zip(&self.friend_rate[r])
            .fold(self.anchor_pull[k], |acc, (&j, &l)| acc + l * theta[j as usize])
    }

    /// `(max |Σ λ_j(θ_k − θ_j)|, max of the same divided by Σ λ_j)`.
    fn residuals(&self, theta: &[f64]) -> (f64, f64) {
        (0..self.len())
            .into_par_iter()
            .map(|k| {
                let r = (self.total_rate[k] * theta[k] - self.weighted_sum(k, theta)).abs();
                (r, r / self.total_rate[k])
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    }
}

/// Solves the equilibrium of every reachable non-stubborn user.
///
/// Users that no stubborn user can reach are reported in
/// [`EquilibriumReport::unreachable`] and excluded from their followers'
/// averages. Converges when both the absolute and the rate-normalised residual
/// are at most `cfg.tol`.
pub fn solve_equilibrium(state: &OpinionState, cfg: &SolverConfig) -> Result<EquilibriumReport> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", cfg.tol)));
    }
    if let Sweep::Jacobi { damping } = cfg.sweep {
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping {damping} outside (0, 1]")));
        }
    }
    let n = state.node_count();
    let solvable = solvable_mask(state);
    let sys = ReducedSystem::new(state, &solvable);
    let mut theta: Vec<f64> = sys.nodes.iter().map(|&i| state.initial[i]).collect();

    let mut iterations = 0;
    let (mut residual, mut relative) = sys.residuals(&theta);
    let mut scratch = vec![0.0; sys.len()];
    while residual.max(relative) > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual,
                best: assemble(state, &sys, &theta, n),
            });
        }
        iterations += 1;
        let change = match cfg.sweep {
            Sweep::GaussSeidel => {
                let mut change = 0.0f64;
                for k in 0..sys.len() {
                    let next = sys.weighted_sum(k, &theta) / sys.total_rate[k];
                    change = change.max((next - theta[k]).abs());
                    theta[k] = next;
                }
                change
            }
            Sweep::Jacobi { damping } => {
                let prev = &theta;
                scratch.par_iter_mut().enumerate().for_each(|(k, out)| {
                    let avg = sys.weighted_sum(k, prev) / sys.total_rate[k];
                    *out = (1.0 - damping) * prev[k] + damping * avg;
                });
                let change = scratch
                    .iter()
                    .zip(&theta)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                std::mem::swap(&mut theta, &mut scratch);
                change
            }
        };
        // Residuals cost a full pass; only evaluate once the iterate settles.
        if change <= cfg.tol || iterations % 64 == 0 {
            (residual, relative) = sys.residuals(&theta);
        }
    }

    let unreachable = (0..n).filter(|&i| !solvable[i]).collect();
    Ok(EquilibriumReport {
        opinions: assemble(state, &sys, &theta, n),
        unreachable,
        iterations,
        residual,
        relative_residual: relative,
    })
}

fn assemble(state: &OpinionState, sys: &ReducedSystem, theta: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out: Vec<Option<f64>> = state.stubborn.clone();
    debug_assert_eq!(out.len(), n);
    for (k, &i) in sys.nodes.iter().enumerate() {
        out[i] = Some(theta[k]);
    }
    out
}

/// Update weight `w(n)` applied by a user after `n` received posts.
pub trait Stubbornness {
    fn weight(&self, updates: u64) -> f64;
}

/// `w(n) = 1 / (n + 1)`: each user keeps the running mean of received posts.
#[derive(Debug, Clone, Copy, Default)]
pub struct HarmonicWeights;

impl Stubbornness for HarmonicWeights {
    fn weight(&self, updates: u64) -> f64 {
        1.0 / (updates as f64 + 1.0)
    }
}

impl<F: Fn(u64) -> f64> Stubbornness for F {
    fn weight(&self, updates: u64) -> f64 {
        self(updates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// Number of posts to simulate.
    pub events: u64,
    pub seed: u64,
    /// Standard deviation of the Gaussian post noise (clamped to `[0, 1]`).
    pub noise_sigma: f64,
    /// Record a trajectory sample every this many events (0: only the end).
    pub sample_every: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            events: 100_000,
            seed: 0,
            noise_sigma: 0.0,
            sample_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(events so far, opinions of every user)`; always includes event 0 and
    /// the final state.
    pub samples: Vec<(u64, Vec<f64>)>,
    /// Posts received by each user.
    pub updates: Vec<u64>,
}

impl Trajectory {
    pub fn final_opinions(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has samples").1
    }
}

/// Event-driven simulation of the posting process.
///
/// The next poster is drawn with probability proportional to its rate, which
/// is the embedded jump chain of independent Poisson clocks.
pub fn simulate<W: Stubbornness>(
    state: &OpinionState,
    cfg: &SimulationConfig,
    weights: &W,
) -> Result<Trajectory> {
    let n = state.node_count();
    let mut theta = state.initial.clone();
    let mut updates = vec![0u64; n];
    let mut samples = vec![(0, theta.clone())];

    let poster = match WeightedIndex::new(&state.rates) {
        Ok(d) => d,
        Err(_) => {
            return Ok(Trajectory { samples, updates });
        }
    };
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {}",
            cfg.noise_sigma
        )));
    }
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated above");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for event in 1..=cfg.events {
        let i = poster.sample(&mut rng);
        let post = if cfg.noise_sigma > 0.0 {
            (theta[i] + noise.sample(&mut rng)).clamp(0.0, 1.0)
        } else {
            theta[i]
        };
        for (j, _) in state.graph.out_edges(i) {
            if state.is_stubborn(j) {
                continue;
            }
            let w = weights.weight(updates[j]);
            theta[j] = (1.0 - w) * theta[j] + w * post;
            updates[j] += 1;
        }
        if cfg.sample_every > 0 && event % cfg.sample_every == 0 && event != cfg.events {
            samples.push((event, theta.clone()));
        }
    }
    if cfg.events > 0 {
        samples.push((cfg.events, theta));
    }
    Ok(Trajectory { samples, updates })
}
