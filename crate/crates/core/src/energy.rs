//! Ising energy over bot/human labelings of a retweet graph.
//!
//! The energy of a labeling `Δ` is
//!
//! ```text
//! E(Δ) = Σ_i φ(x_i, Δ_i) + Σ_(i,j)∈E λ_{Δ_i Δ_j} · ψ_ij
//! ```
//!
//! where `ψ_ij = γ·w_ij / (1 + exp(α_out/z_i + α_in/z_j − 2))` gates each
//! retweet edge by the retweeter's out-strength `z_i` and the target's
//! in-strength `z_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, LambdaConstraint, Result};
use crate::graph::SocialGraph;

/// Tolerance used when checking the link-parameter constraints.
const LAMBDA_TOL: f64 = 1e-9;

/// Clamp applied to prior bot probabilities before taking logarithms.
pub const PRIOR_EPS: f64 = 1e-6;

/// Bot/human label of one account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Human = 0,
    Bot = 1,
}

impl Label {
    pub fn is_bot(self) -> bool {
        self == Label::Bot
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_bool(bot: bool) -> Self {
        if bot {
            Label::Bot
        } else {
            Label::Human
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Human => Label::Bot,
            Label::Bot => Label::Human,
        }
    }
}

/// A label for every node of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling(Vec<Label>);

impl Labeling {
    pub fn new(labels: Vec<Label>) -> Self {
        Self(labels)
    }

    pub fn all(n: usize, label: Label) -> Self {
        Self(vec![label; n])
    }

    pub fn from_bools(bots: impl IntoIterator<Item = bool>) -> Self {
        Self(bots.into_iter().map(Label::from_bool).collect())
    }

    /// The labeling whose bit `i` of `mask` marks node `i` as a bot.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self((0..n).map(|i| Label::from_bool(mask >> i & 1 == 1)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: usize) -> Label {
        self.0[node]
    }

    pub fn set(&mut self, node: usize, label: Label) {
        self.0[node] = label;
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn bot_count(&self) -> usize {
        self.0.iter().filter(|l| l.is_bot()).count()
    }

    pub fn bots(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_bot())
            .map(|(i, _)| i)
    }
}

/// Link-energy multipliers `λ_ab` for an edge `i → j` with `Δ_i = a`, `Δ_j = b`.
///
/// Construction validates the feasibility polytope, so every instance
/// satisfies heterophily ordering, submodularity and non-negative energy-graph
/// capacities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaParams {
    l10: f64,
    l00: f64,
    l11: f64,
    l01: f64,
}

impl LambdaParams {
    /// Arguments are in the order `(λ10, λ00, λ11, λ01)`.
    pub fn new(l10: f64, l00: f64, l11: f64, l01: f64) -> Result<Self> {
        let p = Self { l10, l00, l11, l01 };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let Self { l10, l00, l11, l01 } = *self;
        if [l10, l00, l11, l01].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLambda(LambdaConstraint::Heterophily));
        }
        if (l01 - 1.0).abs() > LAMBDA_TOL {
            return Err(Error::InvalidLambda(LambdaConstraint::Normalization));
        }
        let ordered = -LAMBDA_TOL <= l10
            && l10 <= l00 + LAMBDA_TOL
            && l00 <= l11 + LAMBDA_TOL
            && l11 <= l01 + LAMBDA_TOL;
        if !ordered {
            return Err(Error::InvalidLambda(LambdaConstraint::Heterophily));
        }
        if l10 + l01 < l00 + l11 - LAMBDA_TOL {
            return Err(Error::InvalidLambda(LambdaConstraint::Submodularity));
        }
        if 2.0 * l00 + l10 - l01 < -LAMBDA_TOL {
            return Err(Error::InvalidLambda(LambdaConstraint::EdgeNonNegativity));
        }
        Ok(())
    }

    /// Centroid of the feasible `(λ00, λ11)` polygon with submodularity made
    /// tight (`λ10 = λ00 + λ11 − 1`).
    ///
    /// The polygon is bounded by `λ00 ≤ λ11`, `λ11 ≤ 1` and `λ11 ≥ 2 − 3λ00`;
    /// its vertices are `(1/3, 1)`, `(1, 1)` and `(1/2, 1/2)`.
    pub fn centroid() -> Self {
        let vertices = centroid_polygon();
        let l00 = vertices.iter().map(|v| v.0).sum::<f64>() / 3.0;
        let l11 = vertices.iter().map(|v| v.1).sum::<f64>() / 3.0;
        Self {
            l10: l00 + l11 - 1.0,
            l00,
            l11,
            l01: 1.0,
        }
    }

    /// `(λ10, λ00, λ11, λ01)`.
    pub fn as_tuple(&self) -> (f64, f64, f64, f64) {
        (self.l10, self.l00, self.l11, self.l01)
    }

    pub fn l10(&self) -> f64 {
        self.l10
    }

    pub fn l00(&self) -> f64 {
        self.l00
    }

    pub fn l11(&self) -> f64 {
        self.l11
    }

    pub fn l01(&self) -> f64 {
        self.l01
    }

    /// `λ_ab` for a retweet edge from a node labelled `a` to one labelled `b`.
    pub fn get(&self, from: Label, to: Label) -> f64 {
        match (from, to) {
            (Label::Human, Label::Human) => self.l00,
            (Label::Human, Label::Bot) => self.l01,
            (Label::Bot, Label::Human) => self.l10,
            (Label::Bot, Label::Bot) => self.l11,
        }
    }

    /// `λ10 + λ01 − λ00 − λ11`; zero when submodularity is tight.
    pub fn submodularity_gap(&self) -> f64 {
        self.l10 + self.l01 - self.l00 - self.l11
    }
}

/// Intersections of the three lines bounding the tight-submodularity polygon.
fn centroid_polygon() -> [(f64, f64); 3] {
    // λ11 = 1 meets λ11 = 2 − 3λ00 at λ00 = 1/3; meets λ11 = λ00 at 1;
    // λ11 = λ00 meets λ11 = 2 − 3λ00 at 1/2.
    [(1.0 / 3.0, 1.0), (1.0, 1.0), (0.5, 0.5)]
}

/// Draws link parameters uniformly from the feasible polytope by rejection.
pub fn sample_feasible_lambda<R: Rng + ?Sized>(rng: &mut R) -> LambdaParams {
    loop {
        let l10: f64 = rng.random();
        let l00: f64 = rng.random();
        let l11: f64 = rng.random();
        if let Ok(p) = LambdaParams::new(l10, l00, l11, 1.0) {
            return p;
        }
    }
}

/// Node energies `φ(x_i, Δ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeEnergy {
    /// `φ ≡ 0`.
    Zero,
    /// `φ(·,0) = −log(1−π_i)`, `φ(·,1) = −log π_i`, with `π_i` clamped to
    /// `[ε, 1−ε]`. Entries are aligned with graph node indices.
    Prior(Vec<Option<f64>>),
}

impl NodeEnergy {
    /// Prior mode with `π_i ~ U(0,1)` drawn from a seeded generator.
    pub fn uniform_random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        NodeEnergy::Prior((0..n).map(|_| Some(rng.random::<f64>())).collect())
    }
}

/// Full parameterisation of the Ising energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub lambda: LambdaParams,
    pub gamma: f64,
    pub alpha_out: f64,
    pub alpha_in: f64,
    pub node_energy: NodeEnergy,
}

impl EnergyConfig {
    pub fn new(
        lambda: LambdaParams,
        gamma: f64,
        alpha_out: f64,
        alpha_in: f64,
        node_energy: NodeEnergy,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
        }
        for (name, a) in [("alpha_out", alpha_out), ("alpha_in", alpha_in)] {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {a}")));
            }
        }
        if let NodeEnergy::Prior(pi) = &node_energy {
            if let Some(bad) = pi.iter().flatten().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidParameter(format!(
                    "prior probability {bad} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            lambda,
            gamma,
            alpha_out,
            alpha_in,
            node_energy,
        })
    }

    /// Centroid λ, `γ = 1`, zero node energies.
    pub fn with_alphas(alpha_out: f64, alpha_in: f64) -> Result<Self> {
        Self::new(LambdaParams::centroid(), 1.0, alpha_out, alpha_in, NodeEnergy::Zero)
    }
}

/// Degree-gated link kernel `ψ_ij`.
///
/// Zero when either strength is zero.
pub fn psi(weight: f64, z_out: f64, z_in: f64, cfg: &EnergyConfig) -> f64 {
    if z_out <= 0.0 || z_in <= 0.0 || weight == 0.0 {
        return 0.0;
    }
    let exponent = cfg.alpha_out / z_out + cfg.alpha_in / z_in - 2.0;
    // exp overflows to +inf for tiny strengths, which correctly yields 0.
    cfg.gamma * weight / (1.0 + exponent.exp())
}

/// `ψ_ij` for a stored edge `i → j` of a retweet graph.
pub fn edge_psi(graph: &SocialGraph, src: usize, dst: usize, weight: f64, cfg: &EnergyConfig) -> f64 {
    psi(weight, graph.out_strength(src), graph.in_strength(dst), cfg)
}

/// `φ(x_node, label)`. `name` is only used for the error message.
pub fn node_energy(node: usize, label: Label, cfg: &EnergyConfig, name: &str) -> Result<f64> {
    match &cfg.node_energy {
        NodeEnergy::Zero => Ok(0.0),
        NodeEnergy::Prior(pi) => {
            let p = pi
                .get(node)
                .copied()
                .flatten()
                .ok_or_else(|| Error::MissingPrior(name.to_owned()))?;
            let p = p.clamp(PRIOR_EPS, 1.0 - PRIOR_EPS);
            Ok(match label {
                Label::Human => -(1.0 - p).ln(),
                Label::Bot => -p.ln(),
            })
        }
    }
}

/// Node energies for both labels of every node: `[(φ(·,0), φ(·,1))]`.
pub fn node_energy_table(graph: &SocialGraph, cfg: &EnergyConfig) -> Result<Vec<[f64; 2]>> {
    (0..graph.node_count())
        .map(|i| {
            let name = graph.name(i);
            Ok([
                node_energy(i, Label::Human, cfg, name)?,
                node_energy(i, Label::Bot, cfg, name)?,
            ])
        })
        .collect()
}

/// Ising energy of a labeling.
pub fn total_energy(graph: &SocialGraph, labels: &Labeling, cfg: &EnergyConfig) -> Result<f64> {
    if labels.len() != graph.node_count() {
        return Err(Error::SizeMismatch {
            expected: graph.node_count(),
            actual: labels.len(),
        });
    }
    let mut energy = 0.0;
    for i in 0..graph.node_count() {
        energy += node_energy(i, labels.get(i), cfg, graph.name(i))?;
    }
    for (i, j, w) in graph.edges() {
        let p = edge_psi(graph, i, j, w, cfg);
        energy += cfg.lambda.get(labels.get(i), labels.get(j)) * p;
    }
    Ok(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSemantics;
    use proptest::prelude::*;

    fn cfg(alpha_out: f64, alpha_in: f64, gamma: f64) -> EnergyConfig {
        EnergyConfig::new(LambdaParams::centroid(), gamma, alpha_out, alpha_in, NodeEnergy::Zero)
            .unwrap()
    }

    #[test]
    fn centroid_values() {
        let p = LambdaParams::centroid();
        assert!((p.l00() - 11.0 / 18.0).abs() < 1e-15);
        assert!((p.l11() - 5.0 / 6.0).abs() < 1e-15);
        assert!((p.l10() - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(p.l01(), 1.0);
        // rounded to two places
        assert_eq!((p.l00() * 100.0).round(), 61.0);
        assert_eq!((p.l11() * 100.0).round(), 83.0);
        assert_eq!((p.l10() * 100.0).round(), 44.0);
        assert!(LambdaParams::new(p.l10(), p.l00(), p.l11(), p.l01()).is_ok());
    }

    #[test]
    fn centroid_polygon_vertices() {
        // Each vertex lies on exactly two of the bounding lines.
        for (l00, l11) in centroid_polygon() {
            let on = [
                (l11 - l00).abs() < 1e-15,
                (l11 - 1.0).abs() < 1e-15,
                (l11 - (2.0 - 3.0 * l00)).abs() < 1e-15,
            ];
            assert_eq!(on.iter().filter(|b| **b).count(), 2);
        }
    }

    #[test]
    fn centroid_constraints_strict_except_submodularity() {
        let p = LambdaParams::centroid();
        assert!(0.0 < p.l10() && p.l10() < p.l00() && p.l00() < p.l11() && p.l11() < p.l01());
        assert!(2.0 * p.l00() + p.l10() - p.l01() > 0.0);
        assert!(p.submodularity_gap().abs() < 1e-15);
    }

    #[test]
    fn lambda_validation_names_constraint() {
        assert!(matches!(
            LambdaParams::new(0.9, 0.1, 0.83, 1.0),
            Err(Error::InvalidLambda(LambdaConstraint::Heterophily))
        ));
        assert!(matches!(
            LambdaParams::new(0.1, 0.6, 0.8, 1.0),
            Err(Error::InvalidLambda(LambdaConstraint::Submodularity))
        ));
        assert!(matches!(
            LambdaParams::new(0.0, 0.2, 0.2, 1.0),
            Err(Error::InvalidLambda(LambdaConstraint::EdgeNonNegativity))
        ));
        assert!(matches!(
            LambdaParams::new(0.44, 0.61, 0.83, 0.9),
            Err(Error::InvalidLambda(LambdaConstraint::Normalization))
        ));
        assert!(LambdaParams::new(0.44, 0.61, 0.83, 1.0).is_ok());
    }

    #[test]
    fn psi_examples() {
        let c = cfg(100.0, 50.0, 1.0);
        assert!((psi(1.0, 100.0, 50.0, &c) - 0.5).abs() < 1e-15);
        assert_eq!(psi(1.0, 0.0, 50.0, &c), 0.0);
        assert_eq!(psi(1.0, 10.0, 0.0, &c), 0.0);
        let c2 = cfg(100.0, 50.0, 2.0);
        assert!((psi(3.0, 100.0, 50.0, &c2) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn psi_tiny_strength_is_zero_not_nan() {
        let c = cfg(100.0, 100.0, 1.0);
        let v = psi(1.0, 1e-300, 1.0, &c);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn node_energy_modes() {
        let zero = cfg(1.0, 1.0, 1.0);
        assert_eq!(node_energy(0, Label::Bot, &zero, "a").unwrap(), 0.0);
        assert_eq!(node_energy(0, Label::Human, &zero, "a").unwrap(), 0.0);

        let prior = EnergyConfig::new(
            LambdaParams::centroid(),
            1.0,
            1.0,
            1.0,
            NodeEnergy::Prior(vec![Some(0.5), Some(1.0), None]),
        )
        .unwrap();
        let half = node_energy(0, Label::Bot, &prior, "a").unwrap();
        assert!((half - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((node_energy(0, Label::Human, &prior, "a").unwrap() - half).abs() < 1e-15);

        let sure_bot = node_energy(1, Label::Bot, &prior, "b").unwrap();
        assert!((sure_bot - 1e-6).abs() < 1e-12);
        let sure_bot_h = node_energy(1, Label::Human, &prior, "b").unwrap();
        assert!((sure_bot_h - 1e6f64.ln()).abs() < 1e-6);

        match node_energy(2, Label::Bot, &prior, "carol") {
            Err(Error::MissingPrior(n)) => assert_eq!(n, "carol"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn total_energy_examples() {
        let c = cfg(1.0, 1.0, 1.0);
        let empty = SocialGraph::from_index_edges(EdgeSemantics::Retweet, 3, &[]);
        for mask in 0..8 {
            assert_eq!(total_energy(&empty, &Labeling::from_mask(3, mask), &c).unwrap(), 0.0);
        }

        let g = SocialGraph::from_index_edges(EdgeSemantics::Retweet, 2, &[(0, 1, 1.0)]);
        let p12 = edge_psi(&g, 0, 1, 1.0, &c);
        let e10 = total_energy(&g, &Labeling::from_bools([true, false]), &c).unwrap();
        let e01 = total_energy(&g, &Labeling::from_bools([false, true]), &c).unwrap();
        assert!((e10 - p12 * c.lambda.l10()).abs() < 1e-15);
        assert!((e01 - p12).abs() < 1e-15);
        assert!((e10 - p12 * 4.0 / 9.0).abs() < 1e-15);
        assert!(e10 < e01);

        assert!(matches!(
            total_energy(&g, &Labeling::all(3, Label::Human), &c),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn total_energy_permutation_invariant() {
        let c = cfg(2.0, 3.0, 1.0);
        let edges = [(0, 1, 2.0), (1, 2, 1.0), (2, 0, 4.0), (3, 1, 1.0)];
        let g = SocialGraph::from_index_edges(EdgeSemantics::Retweet, 4, &edges);
        let perm = [2usize, 0, 3, 1];
        let pe: Vec<_> = edges.iter().map(|&(s, d, w)| (perm[s], perm[d], w)).collect();
        let h = SocialGraph::from_index_edges(EdgeSemantics::Retweet, 4, &pe);
        for mask in 0..16u64 {
            let l = Labeling::from_mask(4, mask);
            let mut pl = Labeling::all(4, Label::Human);
            for i in 0..4 {
                pl.set(perm[i], l.get(i));
            }
            let a = total_energy(&g, &l, &c).unwrap();
            let b = total_energy(&h, &pl, &c).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn lambda_ordering_mirrors_energy_ordering(seed in any::<u64>(), psi_v in 0.0..100.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = sample_feasible_lambda(&mut rng);
            prop_assert!(p.l10() * psi_v <= p.l00() * psi_v + 1e-9);
            prop_assert!(p.l00() * psi_v <= p.l11() * psi_v + 1e-9);
            prop_assert!(p.l11() * psi_v <= p.l01() * psi_v + 1e-9);
        }

        #[test]
        fn psi_monotone(
            w in 0.0..50.0f64, dw in 0.0..10.0f64,
            zo in 0.0..500.0f64, dzo in 0.0..100.0f64,
            zi in 0.0..500.0f64, dzi in 0.0..100.0f64,
        ) {
            let c = cfg(100.0, 100.0, 1.0);
            let base = psi(w, zo, zi, &c);
            prop_assert!(psi(w + dw, zo, zi, &c) >= base);
            prop_assert!(psi(w, zo + dzo, zi, &c) >= base);
            prop_assert!(psi(w, zo, zi + dzi, &c) >= base);
            prop_assert!(base <= w / (1.0 + (-2.0f64).exp()) + 1e-12);
        }

        #[test]
        fn tight_lambda_has_zero_gap(l00 in 0.5..1.0f64, t in 0.0..1.0f64) {
            let l11 = l00 + t * (1.0 - l00);
            let l10 = l00 + l11 - 1.0;
            if let Ok(p) = LambdaParams::new(l10, l00, l11, 1.0) {
                prop_assert!(p.submodularity_gap().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn psi_saturates() {
        let c = cfg(100.0, 100.0, 1.0);
        let big = psi(1.0, 1e15, 1e15, &c);
        assert!((big - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-12);
    }
}
