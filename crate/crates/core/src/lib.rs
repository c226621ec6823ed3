//! Equilibrium computation for two-player zero-sum extensive-form games.
//!
//! The main solver is the excessive gap technique run on the sequence-form
//! bilinear saddle-point problem, with dilated entropy prox functions over
//! each player's treeplex. CFR and CFR+ are included as baselines.

pub mod dgf;
pub mod efg;
pub mod harness;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod solvers;
pub mod treeplex;
