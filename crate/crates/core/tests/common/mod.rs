//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use botimpact::energy::{EnergyConfig, Label, Labeling, NodeEnergy, PRIOR_EPS};
use botimpact::graph::{EdgeSemantics, SocialGraph};
use botimpact::opinion::OpinionState;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Ising energy straight from the definition, recomputing strengths from the
/// edge list.
pub fn oracle_energy(graph: &SocialGraph, labels: &Labeling, cfg: &EnergyConfig) -> f64 {
    let n = graph.node_count();
    let mut z_out = vec![0.0; n];
    let mut z_in = vec![0.0; n];
    for (s, d, w) in graph.edges() {
        z_out[s] += w;
        z_in[d] += w;
    }
    let mut e = 0.0;
    for i in 0..n {
        if let NodeEnergy::Prior(p) = &cfg.node_energy {
            let pi = p[i].unwrap().clamp(PRIOR_EPS, 1.0 - PRIOR_EPS);
            e += match labels.get(i) {
                Label::Human => -(1.0 - pi).ln(),
                Label::Bot => -pi.ln(),
            };
        }
    }
    for (s, d, w) in graph.edges() {
        if z_out[s] == 0.0 || z_in[d] == 0.0 {
            continue;
        }
        let psi = cfg.gamma * w
            / (1.0 + (cfg.alpha_out / z_out[s] + cfg.alpha_in / z_in[d] - 2.0).exp());
        e += cfg.lambda.get(labels.get(s), labels.get(d)) * psi;
    }
    e
}

/// Minimum energy over all `2^n` labelings.
pub fn brute_force_min(graph: &SocialGraph, cfg: &EnergyConfig) -> (f64, Labeling) {
    let n = graph.node_count();
    assert!(n <= 20);
    (0..1u64 << n)
        .map(|m| {
            let l = Labeling::from_mask(n, m);
            (oracle_energy(graph, &l, cfg), l)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

/// Random retweet graph: each ordered pair is an edge with probability `p`;
/// weights are integers in `1..=5` or reals in `(0, 5)`.
pub fn random_retweet_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> SocialGraph {
    let integer = rng.random_bool(0.5);
    let mut edges = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.random_bool(p) {
                let w = if integer {
                    f64::from(rng.random_range(1..=5u32))
                } else {
                    rng.random_range(0.01..5.0)
                };
                edges.push((s, d, w));
            }
        }
    }
    SocialGraph::from_index_edges(EdgeSemantics::Retweet, n, &edges)
}

/// Dense direct solve of the equilibrium on the nodes reachable from a
/// positive-rate stubborn node. Unreachable nodes get `None`.
pub fn dense_equilibrium(state: &OpinionState) -> Vec<Option<f64>> {
    let g = state.graph();
    let n = g.node_count();
    let mut reach: Vec<bool> = (0..n).map(|i| state.is_stubborn(i)).collect();
    loop {
        let mut changed = false;
        for (j, i, _) in g.edges() {
            if reach[j] && !reach[i] && state.rate(j) > 0.0 {
                reach[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| reach[i] && !state.is_stubborn(i)).collect();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    let m = free.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (j, i, _) in g.edges() {
        if pos[i] == usize::MAX || !reach[j] {
            continue;
        }
        let lam = state.rate(j);
        a[(pos[i], pos[i])] += lam;
        match state.stubborn_opinion(j) {
            Some(psi) => b[pos[i]] += lam * psi,
            None => a[(pos[i], pos[j])] -= lam,
        }
    }
    let x = a.lu().solve(&b).expect("reachable system is nonsingular");
    (0..n)
        .map(|i| {
            if let Some(psi) = state.stubborn_opinion(i) {
                Some(psi)
            } else if pos[i] != usize::MAX {
                Some(x[pos[i]])
            } else {
                None
            }
        })
        .collect()
}
