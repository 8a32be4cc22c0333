//! Adversaries, the game loop and experiment orchestration.

pub mod adversary;
pub mod config;
pub mod experiment;
pub mod game;

pub use adversary::{
    make_adaptive_binary_search, make_adaptive_tracker, make_oblivious_iid, make_version_space, Adversary,
    AdversaryKind, AdversarySpec, FixedSequence,
};
pub use config::ConfigFile;
pub use experiment::{
    run_experiment, run_trial, BoundConstants, ExperimentConfig, LearnerKind, MetricsSummary, ReferenceBounds,
};
pub use game::run_game;
