//! Bot detection on retweet graphs and bot impact on follower-network opinions.

pub mod energy;
pub mod error;
pub mod ghic;
pub mod graph;
pub mod io;
pub mod maxflow;
pub mod metrics;
pub mod mincut;
pub mod opinion;
pub mod pipeline;
pub mod stubborn;
pub mod synth;

pub use energy::{EnergyConfig, Label, Labeling, LambdaParams, NodeEnergy};
pub use error::{Error, Result};
pub use ghic::{ghic, harmonic_influence_centrality, CentralityResult, Removal};
pub use graph::{EdgeSemantics, GraphBuilder, SocialGraph};
pub use mincut::{min_cut_labels, CutResult, EnergyGraph};
pub use opinion::{solve_equilibrium, EquilibriumReport, OpinionState, SolverConfig};
