//! Kinetic wealth exchange in a closed economy of `n` agents.
//!
//! Every transaction, each agent keeps a fraction `lambda` of its wealth and
//! releases the rest into a common pool, which is then split according to a
//! random vector `epsilon` on the probability simplex. The raw draws behind
//! `epsilon` come from a [`NoiseBackground`] (uniform, truncated Gaussian, or
//! a fixed vector), and are mapped to the simplex by squaring and normalizing.
//!
//! - [`exchange`]: the evolution law, noise backgrounds and trajectories.
//! - [`stats`]: cross-agent variance, histograms, Gamma fits, equilibrium
//!   detection and the uniform-vs-Gaussian comparison harness.
//! - [`ztransform`]: the exact solution of the deterministic two-economy
//!   system and its concordance with stochastic ensembles.

pub mod error;
pub mod exchange;
pub mod stats;
pub mod ztransform;

pub use error::{Error, Result};
pub use exchange::{
    normalize_epsilon, pairwise_delta, run_trajectory, sample_background, step, AgentParams,
    EpsilonVector, NoiseBackground, RngSeed, Simulation, TrajectoryOutcome, WealthState,
    GENERATOR_NAME,
};
