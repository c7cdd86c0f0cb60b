//! Seeded synthetic networks: planted bot retweet graphs and stubborn-anchored
//! follower graphs.
//!
//! Both generators name node `i` as [`node_name`]`(i)`, so a planted retweet
//! graph and an opinion network of the same size describe the same users.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Geometric, Poisson};

use crate::energy::{Label, Labeling};
use crate::error::{Error, Result};
use crate::graph::{EdgeSemantics, GraphBuilder, SocialGraph};
use crate::opinion::OpinionState;

pub fn node_name(i: usize) -> String {
    format!("u{i}")
}

/// Retweet intensity from one class of accounts toward another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensity {
    /// Mean number of retweet edges per source account (Poisson).
    pub mean_edges: f64,
    /// Mean retweet count carried by each edge.
    pub mean_weight: f64,
}

impl Intensity {
    pub const fn new(mean_edges: f64, mean_weight: f64) -> Self {
        Self {
            mean_edges,
            mean_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightLaw {
    /// `1 + Geometric`, with the configured mean (must be `≥ 1`).
    #[default]
    Geometric,
    /// Every edge carries exactly the mean weight.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedBotConfig {
    pub n_humans: usize,
    pub n_bots: usize,
    pub bot_to_human: Intensity,
    pub human_to_human: Intensity,
    pub bot_to_bot: Intensity,
    pub human_to_bot: Intensity,
    pub weights: WeightLaw,
    pub seed: u64,
}

impl Default for PlantedBotConfig {
    fn default() -> Self {
        Self {
            n_humans: 900,
            n_bots: 100,
            bot_to_human: Intensity::new(20.0, 2.0),
            human_to_human: Intensity::new(5.0, 1.5),
            bot_to_bot: Intensity::new(1.0, 1.0),
            human_to_bot: Intensity::new(0.5, 1.0),
            weights: WeightLaw::Geometric,
            seed: 0,
        }
    }
}

impl PlantedBotConfig {
    fn intensity(&self, from: Label, to: Label) -> Intensity {
        match (from, to) {
            (Label::Bot, Label::Human) => self.bot_to_human,
            (Label::Human, Label::Human) => self.human_to_human,
            (Label::Bot, Label::Bot) => self.bot_to_bot,
            (Label::Human, Label::Bot) => self.human_to_bot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_humans + self.n_bots < 2 {
            return Err(Error::InvalidParameter("need at least two accounts".into()));
        }
        for (from, to) in [
            (Label::Bot, Label::Human),
            (Label::Human, Label::Human),
            (Label::Bot, Label::Bot),
            (Label::Human, Label::Bot),
        ] {
            let it = self.intensity(from, to);
            if !(it.mean_edges >= 0.0 && it.mean_edges.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "mean edges {:?}->{:?} must be >= 0",
                    from, to
                )));
            }
            let min_weight = match self.weights {
                WeightLaw::Geometric => 1.0,
                WeightLaw::Fixed => f64::MIN_POSITIVE,
            };
            if it.mean_edges > 0.0 && !(it.mean_weight >= min_weight && it.mean_weight.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "mean weight {:?}->{:?} must be >= {min_weight}",
                    from, to
                )));
            }
        }
        Ok(())
    }

    /// Whether bots retweet humans more intensely than humans retweet bots.
    pub fn is_heterophilic(&self) -> bool {
        let mass = |i: Intensity| i.mean_edges * i.mean_weight;
        mass(self.bot_to_human) > mass(self.human_to_bot)
    }
}

fn draw_count<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn draw_weight<R: Rng>(rng: &mut R, law: WeightLaw, mean: f64) -> f64 {
    match law {
        WeightLaw::Fixed => mean,
        WeightLaw::Geometric if mean <= 1.0 => 1.0,
        WeightLaw::Geometric => {
            1.0 + Geometric::new(1.0 / mean).expect("p in (0, 1)").sample(rng) as f64
        }
    }
}

/// Planted retweet graph: nodes `0..n_humans` are humans, the rest are bots.
///
/// Every node is present even without edges.
pub fn generate_planted(cfg: &PlantedBotConfig) -> Result<(SocialGraph, Labeling)> {
    cfg.validate()?;
    let n = cfg.n_humans + cfg.n_bots;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels = Labeling::from_bools((0..n).map(|i| i >= cfg.n_humans));
    let class_range = |c: Label| match c {
        Label::Human => 0..cfg.n_humans,
        Label::Bot => cfg.n_humans..n,
    };

    let mut b = GraphBuilder::new(EdgeSemantics::Retweet);
    for i in 0..n {
        b.add_node(&node_name(i));
    }
    for src in 0..n {
        let from = labels.get(src);
        for to in [Label::Human, Label::Bot] {
            let it = cfg.intensity(from, to);
            let range = class_range(to);
            let others = range.len() - usize::from(range.contains(&src));
            if others == 0 {
                continue;
            }
            for _ in 0..draw_count(&mut rng, it.mean_edges) {
                let dst = loop {
                    let d = rng.random_range(range.clone());
                    if d != src {
                        break d;
                    }
                };
                let w = draw_weight(&mut rng, cfg.weights, it.mean_weight);
                b.add_edge_by_index(src, dst, w);
            }
        }
    }
    Ok((b.build().0, labels))
}

/// Distribution of user opinions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpinionLaw {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

/// Distribution of posting rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateLaw {
    Constant(f64),
    /// Uniform integer tweet counts in `[lo, hi]`.
    UniformCount { lo: u32, hi: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpinionNetworkConfig {
    pub n: usize,
    /// Fraction of users that are stubborn, in `(0, 1]`.
    pub stubborn_fraction: f64,
    pub opinions: OpinionLaw,
    /// Mean number of friends per user (Poisson).
    pub mean_friends: f64,
    pub rates: RateLaw,
    /// Give every stranded non-stubborn user one stubborn friend.
    pub repair: bool,
    pub seed: u64,
}

impl Default for OpinionNetworkConfig {
    fn default() -> Self {
        Self {
            n: 200,
            stubborn_fraction: 0.2,
            opinions: OpinionLaw::Uniform,
            mean_friends: 4.0,
            rates: RateLaw::UniformCount { lo: 1, hi: 20 },
            repair: true,
            seed: 0,
        }
    }
}

/// Random follower graph with stubborn anchors.
///
/// The first `round(fraction · n)` users (at least one) are stubborn. Each
/// user follows a Poisson number of distinct random others. With `repair`,
/// every non-stubborn user with no path from a stubborn user gets one extra
/// stubborn friend, so the equilibrium is defined for everybody.
pub fn generate_opinion_network(cfg: &OpinionNetworkConfig) -> Result<OpinionState> {
    if !(cfg.stubborn_fraction > 0.0 && cfg.stubborn_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stubborn fraction {} outside (0, 1]",
            cfg.stubborn_fraction
        )));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("network needs at least one user".into()));
    }
    match cfg.rates {
        RateLaw::Constant(c) if !(c > 0.0 && c.is_finite()) => {
            return Err(Error::InvalidParameter(format!("rate {c} must be > 0")))
        }
        RateLaw::UniformCount { lo, hi } if lo == 0 || lo > hi => {
            return Err(Error::InvalidParameter(format!(
                "rate range [{lo}, {hi}] must satisfy 1 <= lo <= hi"
            )))
        }
        _ => {}
    }
    let beta = match cfg.opinions {
        OpinionLaw::Beta { alpha, beta } => Some(
            Beta::new(alpha, beta)
                .map_err(|e| Error::InvalidParameter(format!("beta law: {e}")))?,
        ),
        OpinionLaw::Uniform => None,
    };

    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_stubborn = ((cfg.stubborn_fraction * n as f64).round() as usize).clamp(1, n);

    let draw_opinion = |rng: &mut ChaCha8Rng| match &beta {
        Some(d) => d.sample(rng),
        None => rng.random::<f64>(),
    };
    let opinions: Vec<f64> = (0..n).map(|_| draw_opinion(&mut rng)).collect();
    let rates: Vec<f64> = (0..n)
        .map(|_| match cfg.rates {
            RateLaw::Constant(c) => c,
            RateLaw::UniformCount { lo, hi } => f64::from(rng.random_range(lo..=hi)),
        })
        .collect();

    // followers[j] lists users who follow j (edge j → i).
    let mut followers: Vec<Vec<usize>> = vec![Vec::new(); n];
    if n > 1 {
        for i in 0..n {
            let k = (draw_count(&mut rng, cfg.mean_friends) as usize).min(n - 1);
            let mut chosen: Vec<usize> = Vec::with_capacity(k);
            while chosen.len() < k {
                let j = rng.random_range(0..n);
                if j != i && !chosen.contains(&j) {
                    chosen.push(j);
                }
            }
            for j in chosen {
                followers[j].push(i);
            }
        }
    }

    if cfg.repair {
        let stubborn: Vec<usize> = (0..n_stubborn).collect();
        let mut reached = vec![false; n];
        let mut stack: Vec<usize> = stubborn.clone();
        stubborn.iter().for_each(|&s| reached[s] = true);
        let spread = |stack: &mut Vec<usize>, reached: &mut Vec<bool>, followers: &Vec<Vec<usize>>| {
            while let Some(u) = stack.pop() {
                for &v in &followers[u] {
                    if !reached[v] {
                        reached[v] = true;
                        stack.push(v);
                    }
                }
            }
        };
        spread(&mut stack, &mut reached, &followers);
        for i in n_stubborn..n {
            if reached[i] {
                continue;
            }
            let s = *stubborn.choose(&mut rng).expect("at least one stubborn user");
            followers[s].push(i);
            reached[i] = true;
            stack.push(i);
            spread(&mut stack, &mut reached, &followers);
        }
    }

    let mut b = GraphBuilder::new(EdgeSemantics::Follower);
    for i in 0..n {
        b.add_node(&node_name(i));
    }
    for (j, fs) in followers.iter().enumerate() {
        for &i in fs {
            b.add_edge_by_index(j, i, 1.0);
        }
    }
    let graph = b.build().0;
    let anchors = (0..n).map(|i| (i < n_stubborn).then_some(opinions[i])).collect();
    OpinionState::new(graph, anchors, rates)?.with_initial(opinions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opinion::{solve_equilibrium, SolverConfig};

    #[test]
    fn zero_intensity_is_edgeless() {
        let cfg = PlantedBotConfig {
            bot_to_human: Intensity::new(0.0, 1.0),
            human_to_human: Intensity::new(0.0, 1.0),
            bot_to_bot: Intensity::new(0.0, 1.0),
            human_to_bot: Intensity::new(0.0, 1.0),
            ..Default::default()
        };
        let (g, labels) = generate_planted(&cfg).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 1000);
        assert_eq!(labels.bot_count(), 100);
    }

    #[test]
    fn planted_is_seeded() {
        let cfg = PlantedBotConfig {
            seed: 42,
            ..Default::default()
        };
        let (a, la) = generate_planted(&cfg).unwrap();
        let (b, lb) = generate_planted(&cfg).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        let (c, _) = generate_planted(&PlantedBotConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.edges().collect::<Vec<_>>(), c.edges().collect::<Vec<_>>());
    }

    #[test]
    fn planted_respects_classes_and_loops() {
        let cfg = PlantedBotConfig {
            n_humans: 30,
            n_bots: 1,
            bot_to_bot: Intensity::new(5.0, 1.0),
            ..Default::default()
        };
        let (g, labels) = generate_planted(&cfg).unwrap();
        assert_eq!(labels.bot_count(), 1);
        assert_eq!(labels.len(), 31);
        assert!(g.edges().all(|(s, d, w)| s != d && w >= 1.0));
        assert!(cfg.is_heterophilic());
    }

    #[test]
    fn planted_rejects_tiny_or_negative() {
        let tiny = PlantedBotConfig {
            n_humans: 1,
            n_bots: 0,
            ..Default::default()
        };
        assert!(generate_planted(&tiny).is_err());
        let neg = PlantedBotConfig {
            human_to_bot: Intensity::new(-1.0, 1.0),
            ..Default::default()
        };
        assert!(generate_planted(&neg).is_err());
    }

    #[test]
    fn all_stubborn_network() {
        let s = generate_opinion_network(&OpinionNetworkConfig {
            n: 20,
            stubborn_fraction: 1.0,
            ..Default::default()
        })
        .unwrap();
        let r = solve_equilibrium(&s, &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.unreachable.is_empty());
        assert!(r.mean_free(&s).is_none());
    }

    #[test]
    fn zero_density_repair_gives_one_stubborn_friend_each() {
        let s = generate_opinion_network(&OpinionNetworkConfig {
            n: 50,
            stubborn_fraction: 0.2,
            mean_friends: 0.0,
            ..Default::default()
        })
        .unwrap();
        let g = s.graph();
        for i in 0..50 {
            if s.is_stubborn(i) {
                assert_eq!(g.in_degree(i), 0);
            } else {
                let friends: Vec<_> = g.in_edges(i).collect();
                assert_eq!(friends.len(), 1);
                assert!(s.is_stubborn(friends[0].0));
            }
        }
    }

    #[test]
    fn generated_networks_are_fully_solvable() {
        for seed in 0..100 {
            let s = generate_opinion_network(&OpinionNetworkConfig {
                n: 60,
                mean_friends: 1.5,
                seed,
                ..Default::default()
            })
            .unwrap();
            let r = solve_equilibrium(&s, &SolverConfig::default()).unwrap();
            assert!(r.unreachable.is_empty(), "seed {seed}");
        }
    }
}
