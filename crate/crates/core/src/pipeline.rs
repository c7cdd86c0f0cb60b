//! End-to-end runs: detection on a retweet graph, bot impact on a follower
//! graph, and stubborn-interval sweeps.

use std::collections::{BTreeMap, BTreeSet};

use crate::energy::{total_energy, EnergyConfig, LambdaParams, NodeEnergy};
use crate::error::{Error, Result};
use crate::ghic::{ghic, CentralityResult, Removal};
use crate::graph::{degree_percentile, EdgeSemantics, SocialGraph, StrengthKind};
use crate::metrics::{compare_groups, GroupComparison};
use crate::mincut::{conditional_bot_probability, min_cut_labels, CutResult, EnergyGraph};
use crate::opinion::{solve_equilibrium, EquilibriumReport, OpinionState, SolverConfig};
use crate::stubborn::{assign_rates, classify_stubborn, user_opinions, StubbornConfig, TweetRecord};

/// How `(α_out, α_in)` are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    Explicit { alpha_out: f64, alpha_in: f64 },
    /// Nearest-rank percentile of the out- and in-strength distributions.
    Percentile(f64),
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec::Percentile(99.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum NodeEnergySpec {
    #[default]
    Zero,
    /// Priors drawn uniformly at random from a seed.
    Uniform { seed: u64 },
    /// Prior bot probabilities keyed by user id. Every node needs one.
    Prior(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    pub lambda: LambdaParams,
    pub gamma: f64,
    pub alpha: AlphaSpec,
    pub node_energy: NodeEnergySpec,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            lambda: LambdaParams::centroid(),
            gamma: 1.0,
            alpha: AlphaSpec::default(),
            node_energy: NodeEnergySpec::Zero,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    /// The fully resolved energy configuration.
    pub energy: EnergyConfig,
    pub cut: CutResult,
    /// `P(bot | rest)` per node.
    pub probabilities: Vec<f64>,
}

impl Detection {
    pub fn bot_count(&self) -> usize {
        self.cut.labeling.bot_count()
    }
}

/// Resolves `α`, builds the energy graph, and takes its minimum cut.
pub fn detect(graph: &SocialGraph, cfg: &DetectConfig) -> Result<Detection> {
    if graph.role() != EdgeSemantics::Retweet {
        return Err(Error::InvalidParameter("detection needs a retweet graph".into()));
    }
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let (alpha_out, alpha_in) = match cfg.alpha {
        AlphaSpec::Explicit { alpha_out, alpha_in } => (alpha_out, alpha_in),
        AlphaSpec::Percentile(q) => {
            let a = (
                degree_percentile(graph, StrengthKind::Out, q)?,
                degree_percentile(graph, StrengthKind::In, q)?,
            );
            if a.0 <= 0.0 || a.1 <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "strength percentile {q} is zero (alpha_out = {}, alpha_in = {}); pick a higher percentile or explicit alphas",
                    a.0, a.1
                )));
            }
            a
        }
    };
    let node_energy = match &cfg.node_energy {
        NodeEnergySpec::Zero => NodeEnergy::Zero,
        NodeEnergySpec::Uniform { seed } => NodeEnergy::uniform_random(graph.node_count(), *seed),
        NodeEnergySpec::Prior(p) => NodeEnergy::Prior(crate::io::align(graph, p)),
    };
    let energy = EnergyConfig::new(cfg.lambda, cfg.gamma, alpha_out, alpha_in, node_energy)?;
    let eg = EnergyGraph::build(graph, &energy)?;
    let cut = min_cut_labels(&eg);
    let probabilities = conditional_bot_probability(graph, &cut.labeling, &energy)?;
    Ok(Detection {
        energy,
        cut,
        probabilities,
    })
}

/// Inputs shared by [`assess`] and [`sweep`].
#[derive(Debug, Clone)]
pub struct AssessConfig {
    pub stubborn: StubbornConfig,
    pub solver: SolverConfig,
    pub removal: Removal,
    /// Also rerun everything with every rate set to 1.
    pub uniform_rates: bool,
}

impl Default for AssessConfig {
    fn default() -> Self {
        Self {
            stubborn: StubbornConfig::default(),
            solver: SolverConfig::default(),
            removal: Removal::Delete,
            uniform_rates: false,
        }
    }
}

/// Opinion state built from a follower graph and scored tweets.
#[derive(Debug, Clone)]
pub struct BuiltState {
    pub state: OpinionState,
    /// Bots that are nodes of the follower graph, as node indices.
    pub bots: Vec<usize>,
    /// Follower-graph users without any scored tweet.
    pub without_opinion: usize,
}

/// Opinions from tweets, stubborn split with bots forced stubborn, rates from
/// tweet counts (users without tweets get rate 0).
///
/// Bots that are not in the follower graph are ignored.
pub fn build_state(
    followers: &SocialGraph,
    tweets: &[TweetRecord],
    bots: &BTreeSet<String>,
    stubborn: &StubbornConfig,
    uniform_rates: bool,
) -> Result<BuiltState> {
    if followers.role() != EdgeSemantics::Follower {
        return Err(Error::InvalidParameter("assessment needs a follower graph".into()));
    }
    let opinions = user_opinions(tweets)?;
    let forced: BTreeSet<String> = bots
        .iter()
        .filter(|b| followers.node(b).is_some())
        .cloned()
        .collect();
    let split = classify_stubborn(&opinions, stubborn, &forced)?;
    let counts = assign_rates(tweets);

    let n = followers.node_count();
    let mut anchors = Vec::with_capacity(n);
    let mut initial = Vec::with_capacity(n);
    let mut rates = Vec::with_capacity(n);
    let mut without_opinion = 0;
    for i in 0..n {
        let name = followers.name(i);
        anchors.push(split.stubborn.get(name).copied());
        let o = opinions.get(name).copied();
        without_opinion += usize::from(o.is_none());
        initial.push(o.unwrap_or(0.5));
        rates.push(if uniform_rates {
            1.0
        } else {
            counts.get(name).copied().unwrap_or(0.0)
        });
    }
    let state = OpinionState::new(followers.clone(), anchors, rates)?.with_initial(initial)?;
    let bots = forced.iter().filter_map(|b| followers.node(b)).collect();
    Ok(BuiltState {
        state,
        bots,
        without_opinion,
    })
}

/// Posting-rate and follower-count distributions of the two bot classes,
/// split at opinion 0.5.
#[derive(Debug, Clone)]
pub struct BotDiagnostics {
    pub low_bots: usize,
    pub high_bots: usize,
    pub rate: GroupComparison,
    pub followers: GroupComparison,
    /// `Δ` of each bot class alone.
    pub delta_low: Option<f64>,
    pub delta_high: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RateScenario {
    pub equilibrium: EquilibriumReport,
    pub centrality: CentralityResult,
}

#[derive(Debug, Clone)]
pub struct Assessment {
    pub built: BuiltState,
    pub actual: RateScenario,
    /// Present when [`AssessConfig::uniform_rates`] is set.
    pub uniform: Option<RateScenario>,
    pub diagnostics: BotDiagnostics,
}

fn scenario(state: &OpinionState, bots: &[usize], cfg: &AssessConfig) -> Result<RateScenario> {
    let equilibrium = solve_equilibrium(state, &cfg.solver)?;
    let centrality = ghic(state, bots, &cfg.solver, cfg.removal)?;
    Ok(RateScenario {
        equilibrium,
        centrality,
    })
}

/// Equilibrium with bots, `Δ` of the bot set, and the bot-class diagnostics.
pub fn assess(
    followers: &SocialGraph,
    tweets: &[TweetRecord],
    bots: &BTreeSet<String>,
    cfg: &AssessConfig,
) -> Result<Assessment> {
    let built = build_state(followers, tweets, bots, &cfg.stubborn, false)?;
    let actual = scenario(&built.state, &built.bots, cfg)?;
    let uniform = if cfg.uniform_rates {
        let state = built.state.with_rates(vec![1.0; built.state.node_count()])?;
        Some(scenario(&state, &built.bots, cfg)?)
    } else {
        None
    };

    let state = &built.state;
    let (low, high): (Vec<usize>, Vec<usize>) = built
        .bots
        .iter()
        .partition(|&&b| state.stubborn_opinion(b).is_some_and(|o| o <= 0.5));
    let pick = |set: &[usize], f: &dyn Fn(usize) -> f64| set.iter().map(|&b| f(b)).collect::<Vec<_>>();
    let rate = |b: usize| state.rate(b);
    let fol = |b: usize| state.graph().out_degree(b) as f64;
    let class_delta = |set: &[usize]| -> Result<Option<f64>> {
        if set.is_empty() {
            return Ok(None);
        }
        Ok(Some(ghic(state, set, &cfg.solver, cfg.removal)?.delta))
    };
    let diagnostics = BotDiagnostics {
        low_bots: low.len(),
        high_bots: high.len(),
        rate: compare_groups(&pick(&low, &rate), &pick(&high, &rate)),
        followers: compare_groups(&pick(&low, &fol), &pick(&high, &fol)),
        delta_low: class_delta(&low)?,
        delta_high: class_delta(&high)?,
    };
    Ok(Assessment {
        built,
        actual,
        uniform,
        diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub lower: f64,
    pub upper: f64,
    /// The row's summary, or the error that stopped it.
    pub outcome: std::result::Result<SweepSummary, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub stubborn_count: usize,
    pub mean_with: f64,
    pub mean_without: f64,
    pub delta: f64,
}

/// One assessment per `(a, b)` interval pair. A failing pair is recorded and
/// the sweep goes on.
pub fn sweep(
    followers: &SocialGraph,
    tweets: &[TweetRecord],
    bots: &BTreeSet<String>,
    intervals: &[(f64, f64)],
    cfg: &AssessConfig,
) -> Vec<SweepRow> {
    intervals
        .iter()
        .map(|&(lower, upper)| {
            let run = || -> Result<SweepSummary> {
                let stubborn = StubbornConfig::new(lower, upper)?;
                let built = build_state(followers, tweets, bots, &stubborn, cfg.uniform_rates)?;
                let c = ghic(&built.state, &built.bots, &cfg.solver, cfg.removal)?;
                Ok(SweepSummary {
                    stubborn_count: built.state.stubborn_count(),
                    mean_with: c.mean_with,
                    mean_without: c.mean_without,
                    delta: c.delta,
                })
            };
            SweepRow {
                lower,
                upper,
                outcome: run().map_err(|e| e.to_string()),
            }
        })
        .collect()
}

/// Energy of the detected labeling, recomputed from scratch.
pub fn labeling_energy(graph: &SocialGraph, det: &Detection) -> Result<f64> {
    total_energy(graph, &det.cut.labeling, &det.energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn follower(edges: &[(&str, &str)]) -> SocialGraph {
        let mut b = GraphBuilder::new(EdgeSemantics::Follower);
        for (s, d) in edges {
            b.add_edge(s, d, 1.0).unwrap();
        }
        b.build().0
    }

    fn tweets(rows: &[(&str, f64)]) -> Vec<TweetRecord> {
        rows.iter().map(|&(u, s)| TweetRecord::scored(u, s)).collect()
    }

    /// u follows human h (opinion 0) and bot b (opinion 1).
    fn toy() -> (SocialGraph, Vec<TweetRecord>) {
        (
            follower(&[("h", "u"), ("b", "u")]),
            tweets(&[("h", 0.0), ("b", 1.0), ("u", 0.5)]),
        )
    }

    #[test]
    fn toy_assessment() {
        let (g, t) = toy();
        let bots = BTreeSet::from(["b".to_owned()]);
        let a = assess(&g, &t, &bots, &AssessConfig::default()).unwrap();
        assert!((a.actual.centrality.delta - 0.5).abs() < 1e-12);
        assert_eq!(a.diagnostics.high_bots, 1);
        assert_eq!(a.diagnostics.low_bots, 0);
        assert!((a.diagnostics.delta_high.unwrap() - 0.5).abs() < 1e-12);
        assert!(a.uniform.is_none());
    }

    #[test]
    fn no_bots_no_shift() {
        let (g, t) = toy();
        let a = assess(&g, &t, &BTreeSet::new(), &AssessConfig::default()).unwrap();
        assert_eq!(a.actual.centrality.delta, 0.0);
    }

    #[test]
    fn interior_bot_is_anchored() {
        let g = follower(&[("h", "u"), ("b", "u")]);
        let t = tweets(&[("h", 0.0), ("b", 0.5), ("u", 0.3)]);
        let bots = BTreeSet::from(["b".to_owned()]);
        let built = build_state(&g, &t, &bots, &StubbornConfig::default(), false).unwrap();
        let b = g.node("b").unwrap();
        assert_eq!(built.state.stubborn_opinion(b), Some(0.5));
        assert!(!built.state.is_stubborn(g.node("u").unwrap()));
    }

    #[test]
    fn bot_without_opinion_is_error() {
        let g = follower(&[("h", "u"), ("b", "u")]);
        let t = tweets(&[("h", 0.0), ("u", 0.3)]);
        let bots = BTreeSet::from(["b".to_owned()]);
        assert!(matches!(
            assess(&g, &t, &bots, &AssessConfig::default()),
            Err(Error::MissingOpinion(_))
        ));
    }

    #[test]
    fn uniform_rates_scenario() {
        let g = follower(&[("h", "u"), ("b", "u")]);
        let mut t = tweets(&[("h", 0.0), ("b", 1.0), ("u", 0.5)]);
        t.extend(tweets(&[("b", 1.0), ("b", 1.0)]));
        let bots = BTreeSet::from(["b".to_owned()]);
        let cfg = AssessConfig {
            uniform_rates: true,
            ..Default::default()
        };
        let a = assess(&g, &t, &bots, &cfg).unwrap();
        assert!((a.actual.centrality.mean_with - 0.75).abs() < 1e-12);
        assert!((a.uniform.unwrap().centrality.mean_with - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_rows_and_failures() {
        let g = follower(&[("h", "u"), ("b", "u"), ("v", "u")]);
        let t = tweets(&[("h", 0.05), ("b", 1.0), ("u", 0.5), ("v", 0.12)]);
        let rows = sweep(
            &g,
            &t,
            &BTreeSet::new(),
            &[(0.1, 0.9), (0.15, 0.85), (0.9, 0.1)],
            &AssessConfig::default(),
        );
        assert_eq!(rows.len(), 3);
        let a = rows[0].outcome.as_ref().unwrap();
        let b = rows[1].outcome.as_ref().unwrap();
        assert!(a.stubborn_count <= b.stubborn_count);
        assert_eq!((a.stubborn_count, b.stubborn_count), (2, 3));
        assert!(rows[2].outcome.is_err());
        assert!(sweep(&g, &t, &BTreeSet::new(), &[], &AssessConfig::default()).is_empty());
    }

    #[test]
    fn detect_star() {
        let mut b = GraphBuilder::new(EdgeSemantics::Retweet);
        for h in ["h1", "h2", "h3", "h4", "h5"] {
            b.add_edge("bot", h, 10.0).unwrap();
        }
        b.add_edge("h1", "h2", 1.0).unwrap();
        let (g, _) = b.build();
        let cfg = DetectConfig {
            alpha: AlphaSpec::Explicit {
                alpha_out: 1.0,
                alpha_in: 1.0,
            },
            ..Default::default()
        };
        let d = detect(&g, &cfg).unwrap();
        let bot = g.node("bot").unwrap();
        assert!(d.cut.labeling.get(bot).is_bot());
        assert!((labeling_energy(&g, &d).unwrap() - d.cut.min_energy).abs() < 1e-9);
        assert!(d.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn detect_percentile_wiring() {
        let g = SocialGraph::from_index_edges(
            EdgeSemantics::Retweet,
            4,
            &[(0, 1, 3.0), (1, 2, 1.0), (2, 3, 5.0), (3, 0, 2.0)],
        );
        let d = detect(&g, &DetectConfig::default()).unwrap();
        assert_eq!(d.energy.alpha_out, degree_percentile(&g, StrengthKind::Out, 99.0).unwrap());
        assert_eq!(d.energy.alpha_in, degree_percentile(&g, StrengthKind::In, 99.0).unwrap());
        assert!(detect(&SocialGraph::from_index_edges(EdgeSemantics::Retweet, 0, &[]), &DetectConfig::default()).is_err());
    }
}
