//! Generalized harmonic influence centrality.
//!
//! `Δ(S)` is the shift in the mean non-stubborn equilibrium opinion caused by
//! the presence of the node set `S`: the equilibrium is solved once on the
//! full network and once with `S` taken out, and the per-node differences are
//! averaged over `V1 ∖ S`.

use rayon::join;

use crate::error::{Error, Result};
use crate::opinion::{solve_equilibrium, OpinionState, SolverConfig};

/// How the target set is taken out of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Removal {
    /// Delete the nodes and every incident edge.
    #[default]
    Delete,
    /// Keep the nodes but set their posting rate to zero.
    Silence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityResult {
    pub delta: f64,
    pub mean_with: f64,
    pub mean_without: f64,
    /// Nodes of `V1 ∖ S` whose equilibrium is defined in both scenarios.
    pub compared: usize,
    /// Nodes of `V1 ∖ S` left out because one of the scenarios cannot solve them.
    pub dropped: Vec<usize>,
}

/// `Δ(S)` for the node set `targets` (indices into `state`).
///
/// An empty target set yields `Δ = 0`.
pub fn ghic(
    state: &OpinionState,
    targets: &[usize],
    solver: &SolverConfig,
    removal: Removal,
) -> Result<CentralityResult> {
    let n = state.node_count();
    let mut in_set = vec![false; n];
    for &t in targets {
        if t >= n {
            return Err(Error::UnknownUser(t.to_string()));
        }
        in_set[t] = true;
    }

    // Without-S opinions, re-indexed to the original node ids.
    let without = || -> Result<Vec<Option<f64>>> {
        match removal {
            Removal::Delete => {
                let (reduced, remap) = state.without_nodes(&in_set);
                let report = solve_equilibrium(&reduced, solver)?;
                Ok(remap
                    .iter()
                    .map(|slot| slot.and_then(|k| report.opinions[k]))
                    .collect())
            }
            Removal::Silence => {
                let rates = state
                    .rates()
                    .iter()
                    .zip(&in_set)
                    .map(|(&r, &s)| if s { 0.0 } else { r })
                    .collect();
                Ok(solve_equilibrium(&state.with_rates(rates)?, solver)?.opinions)
            }
        }
    };
    let (with, without) = join(|| solve_equilibrium(state, solver), without);
    let (with, without) = (with?.opinions, without?);

    let mut dropped = Vec::new();
    let (mut sum_with, mut sum_without, mut compared) = (0.0, 0.0, 0usize);
    for i in (0..n).filter(|&i| !state.is_stubborn(i) && !in_set[i]) {
        match (with[i], without[i]) {
            (Some(a), Some(b)) => {
                sum_with += a;
                sum_without += b;
                compared += 1;
            }
            _ => dropped.push(i),
        }
    }
    if compared == 0 {
        return Err(Error::NoSolvableNodes {
            unreachable: dropped.len(),
        });
    }
    let mean_with = sum_with / compared as f64;
    let mean_without = sum_without / compared as f64;
    Ok(CentralityResult {
        delta: mean_with - mean_without,
        mean_with,
        mean_without,
        compared,
        dropped,
    })
}

/// Mean non-stubborn equilibrium opinion when `node` is the only stubborn user
/// with opinion 1 and every other stubborn user holds 0.
pub fn harmonic_influence_centrality(
    state: &OpinionState,
    node: usize,
    solver: &SolverConfig,
) -> Result<f64> {
    if node >= state.node_count() {
        return Err(Error::UnknownUser(node.to_string()));
    }
    if !state.is_stubborn(node) {
        return Err(Error::NotStubborn(state.graph().name(node).to_owned()));
    }
    let anchors = state
        .stubborn_anchors()
        .iter()
        .enumerate()
        .map(|(j, a)| a.map(|_| if j == node { 1.0 } else { 0.0 }))
        .collect();
    let zeroed = state.with_anchors(anchors)?;
    let report = solve_equilibrium(&zeroed, solver)?;
    report.mean_free(&zeroed).ok_or(Error::NoSolvableNodes {
        unreachable: report.unreachable.len(),
    })
}
