//! Paired-seed ensembles under two noise backgrounds.
//!
//! Replica `k` of both arms uses seed `base_seed + k`. Each replica's
//! equilibrium variance is the mean cross-agent variance over the final 10%
//! of its recorded points; an arm's variance is the mean over replicas.

use serde::{Deserialize, Serialize};

use super::equilibrium::{detect_equilibrium, tail_mean, ConvergenceReport};
use super::equilibrium::{DEFAULT_TOLERANCE, DEFAULT_WINDOW};
use super::moments::wealth_variance;
use crate::error::{Error, Result};
use crate::exchange::{AgentParams, NoiseBackground, RngSeed, Simulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub transactions: u64,
    pub replicas: u64,
    pub base_seed: RngSeed,
    pub record_every: u64,
    pub window: usize,
    pub tolerance: f64,
}

impl ComparisonConfig {
    /// Default cadence `max(1, transactions / 10^4)` and default equilibrium criterion.
    pub fn new(transactions: u64, replicas: u64, base_seed: RngSeed) -> Self {
        ComparisonConfig {
            transactions,
            replicas,
            base_seed,
            record_every: (transactions / 10_000).max(1),
            window: DEFAULT_WINDOW,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Outcome of one paired replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaPair {
    pub seed: u64,
    pub variance_uniform: f64,
    pub variance_gaussian: f64,
    pub equilibrium_index_uniform: Option<u64>,
    pub equilibrium_index_gaussian: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub arm_uniform: NoiseBackground,
    pub arm_gaussian: NoiseBackground,
    pub variance_uniform: f64,
    pub variance_gaussian: f64,
    /// `(variance_uniform - variance_gaussian) / variance_uniform`, 0 when the
    /// uniform arm has no variance.
    pub reduction_fraction: f64,
    /// Criterion applied to each arm's ensemble-mean variance series.
    pub convergence_uniform: ConvergenceReport,
    pub convergence_gaussian: ConvergenceReport,
    /// Lower median of per-replica equilibrium indices; non-converged
    /// replicas sort last, so `None` means at least half never converged.
    pub median_equilibrium_index_uniform: Option<u64>,
    pub median_equilibrium_index_gaussian: Option<u64>,
    /// Fraction of pairs where the Gaussian arm ends with strictly lower variance.
    pub gaussian_lower_fraction: f64,
    pub replicas: u64,
    pub transactions: u64,
    pub record_every: u64,
    pub max_total_drift: f64,
    pub pairs: Vec<ReplicaPair>,
}

/// A comparison plus each arm's ensemble-mean variance series.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub result: ComparisonResult,
    pub series_uniform: Vec<(u64, f64)>,
    pub series_gaussian: Vec<(u64, f64)>,
}

struct ArmRun {
    series: Vec<(u64, f64)>,
    equilibrium_variance: f64,
    report: ConvergenceReport,
    drift: f64,
}

fn run_arm(sim: &Simulation, config: &ComparisonConfig, seed: RngSeed) -> Result<ArmRun> {
    let mut series = Vec::with_capacity((config.transactions / config.record_every) as usize + 2);
    let outcome = sim.run(config.transactions, seed, config.record_every, |s| {
        series.push((s.transaction_index, wealth_variance(s)));
    })?;
    let report = detect_equilibrium(&series, config.window, config.tolerance)?;
    Ok(ArmRun {
        equilibrium_variance: tail_mean(series.iter().map(|p| p.1)),
        series,
        report,
        drift: outcome.max_total_drift,
    })
}

fn accumulate(sum: &mut Vec<(u64, f64)>, series: &[(u64, f64)]) {
    if sum.is_empty() {
        sum.extend_from_slice(series);
    } else {
        for (acc, (_, v)) in sum.iter_mut().zip(series) {
            acc.1 += v;
        }
    }
}

/// Lower median with `None` ordered after every `Some`.
pub fn lower_median(values: &[Option<u64>]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by_key(|v| (v.is_none(), v.unwrap_or(0)));
    sorted[(sorted.len() - 1) / 2]
}

/// Runs `arm_uniform` and `arm_gaussian` as matched ensembles.
///
/// The field names follow the standard uniform-vs-Gaussian experiment; any
/// two backgrounds may be supplied, e.g. identical ones for a null test.
pub fn compare_arms(
    params: &[AgentParams],
    arm_uniform: &NoiseBackground,
    arm_gaussian: &NoiseBackground,
    config: &ComparisonConfig,
) -> Result<Comparison> {
    if config.replicas == 0 {
        return Err(Error::param("replicas must be >= 1"));
    }
    let sim_u = Simulation::new(params, arm_uniform.clone())?;
    let sim_g = Simulation::new(params, arm_gaussian.clone())?;

    let mut pairs = Vec::with_capacity(config.replicas as usize);
    let mut sum_u = Vec::new();
    let mut sum_g = Vec::new();
    let mut drift = 0.0_f64;
    for k in 0..config.replicas {
        let seed = config.base_seed.offset(k);
        let u = run_arm(&sim_u, config, seed)?;
        let g = run_arm(&sim_g, config, seed)?;
        accumulate(&mut sum_u, &u.series);
        accumulate(&mut sum_g, &g.series);
        drift = drift.max(u.drift).max(g.drift);
        pairs.push(ReplicaPair {
            seed: seed.0,
            variance_uniform: u.equilibrium_variance,
            variance_gaussian: g.equilibrium_variance,
            equilibrium_index_uniform: u.report.equilibrium_index,
            equilibrium_index_gaussian: g.report.equilibrium_index,
        });
    }

    let replicas = config.replicas as f64;
    for p in sum_u.iter_mut().chain(sum_g.iter_mut()) {
        p.1 /= replicas;
    }
    let variance_uniform = pairs.iter().map(|p| p.variance_uniform).sum::<f64>() / replicas;
    let variance_gaussian = pairs.iter().map(|p| p.variance_gaussian).sum::<f64>() / replicas;
    let reduction_fraction = if variance_uniform > 0.0 {
        (variance_uniform - variance_gaussian) / variance_uniform
    } else {
        0.0
    };
    let lower = pairs
        .iter()
        .filter(|p| p.variance_gaussian < p.variance_uniform)
        .count() as f64;
    let med_u: Vec<_> = pairs.iter().map(|p| p.equilibrium_index_uniform).collect();
    let med_g: Vec<_> = pairs.iter().map(|p| p.equilibrium_index_gaussian).collect();

    let result = ComparisonResult {
        arm_uniform: arm_uniform.clone(),
        arm_gaussian: arm_gaussian.clone(),
        variance_uniform,
        variance_gaussian,
        reduction_fraction,
        convergence_uniform: detect_equilibrium(&sum_u, config.window, config.tolerance)?,
        convergence_gaussian: detect_equilibrium(&sum_g, config.window, config.tolerance)?,
        median_equilibrium_index_uniform: lower_median(&med_u),
        median_equilibrium_index_gaussian: lower_median(&med_g),
        gaussian_lower_fraction: lower / replicas,
        replicas: config.replicas,
        transactions: config.transactions,
        record_every: config.record_every,
        max_total_drift: drift,
        pairs,
    };
    Ok(Comparison {
        result,
        series_uniform: sum_u,
        series_gaussian: sum_g,
    })
}

/// Uniform versus Gaussian(1/2, 1/12) with the default recording cadence
/// and equilibrium criterion.
pub fn compare_backgrounds(
    params: &[AgentParams],
    transactions: u64,
    replicas: u64,
    base_seed: RngSeed,
) -> Result<ComparisonResult> {
    let config = ComparisonConfig::new(transactions, replicas, base_seed);
    Ok(compare_arms(
        params,
        &NoiseBackground::Uniform,
        &NoiseBackground::gaussian(),
        &config,
    )?
    .result)
}
