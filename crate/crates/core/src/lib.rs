//! Private PAC learners turned into online learners.
//!
//! A pure-DP learner run on a fixed dummy sample gives a pool of experts;
//! multiplicative weights over the pool is a weak online learner against
//! oblivious adversaries; a replica wrapper makes it safe against adaptive
//! ones; boosting-by-majority over wrapped copies gives the strong learner.

pub mod adaptive;
pub mod boosting;
pub mod domain;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod mw;
pub mod online;
pub mod pipeline;
pub mod pool;
pub mod privacy;
pub mod rng;
pub mod weak;

pub use error::{Error, Result};
