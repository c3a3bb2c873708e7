//! Distributional statistics of wealth trajectories.

mod compare;
mod equilibrium;
mod gamma;
mod histogram;
mod moments;

pub use compare::{
    compare_arms, compare_backgrounds, lower_median, Comparison, ComparisonConfig,
    ComparisonResult, ReplicaPair,
};
pub use equilibrium::{detect_equilibrium, ConvergenceReport, DEFAULT_TOLERANCE, DEFAULT_WINDOW};
pub use gamma::{gamma_fit_moments, GammaFit};
pub use histogram::{background_histogram, build_histogram, Histogram};
pub use moments::{population_variance, wealth_variance, RunningMoments};
