use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use wealth_exchange::stats::{
    background_histogram, build_histogram, compare_arms, gamma_fit_moments, wealth_variance,
    ComparisonConfig, GammaFit, Histogram,
};
use wealth_exchange::ztransform::{
    characteristic_polynomial, characteristic_roots, closed_form, concordance,
    CharacteristicPolynomial, RootPair, Stability, TwoEconomyParams,
};
use wealth_exchange::{NoiseBackground, RngSeed, Simulation};

use crate::config::{CommandKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json, ConservationSummary, CsvWriter, RunManifest};

const BACKGROUND_DRAWS: usize = 100_000;

/// Files written by a command, in the order they were produced.
pub type Artifacts = Vec<PathBuf>;

fn write_histogram(path: PathBuf, h: &Histogram, with_density: bool) -> CliResult<PathBuf> {
    let header: &[&str] = if with_density {
        &["bin_lo", "bin_hi", "count", "density"]
    } else {
        &["bin_lo", "bin_hi", "count"]
    };
    let mut csv = CsvWriter::create(&path, header)?;
    let total = h.total() as f64;
    for (lo, hi, count) in h.bins() {
        if with_density {
            let density = count as f64 / (total * (hi - lo));
            csv.row(&[&lo, &hi, &count, &density])?;
        } else {
            csv.row(&[&lo, &hi, &count])?;
        }
    }
    csv.finish()
}

#[derive(Serialize)]
struct SimulationSummary {
    agents: usize,
    transactions: u64,
    replicas: u64,
    background: NoiseBackground,
    /// Mean over replicas of the final cross-agent wealth variance.
    final_variance: f64,
    gamma_fit: Option<GammaFit>,
    gamma_fit_error: Option<String>,
    max_step_drift: f64,
    max_total_drift: f64,
}

pub fn simulate(c: &RunConfig) -> CliResult<Artifacts> {
    let started = Instant::now();
    ensure_dir(&c.output_dir)?;
    let params = c.agent_params()?;
    let sim = Simulation::new(&params, c.background.clone())?;
    let record_every = c.resolved_record_every();

    let header: Vec<String> = std::iter::once("m".to_string())
        .chain((0..c.agents).map(|j| format!("wealth_{j}")))
        .collect();
    let mut trajectory = CsvWriter::create(&c.output_dir.join("trajectory.csv"), &header)?;
    let mut write_error = None;
    let mut finals = Vec::with_capacity(c.agents * c.replicas as usize);
    let mut final_variance = 0.0;
    let (mut step_drift, mut total_drift) = (0.0_f64, 0.0_f64);
    for k in 0..c.replicas {
        let seed = RngSeed(c.seed).offset(k);
        let outcome = if k == 0 {
            sim.run(c.transactions, seed, record_every, |s| {
                if write_error.is_none() {
                    write_error = trajectory.row_values(s.transaction_index, &s.wealth).err();
                }
            })?
        } else {
            sim.run(c.transactions, seed, c.transactions, |_| {})?
        };
        step_drift = step_drift.max(outcome.max_step_drift);
        total_drift = total_drift.max(outcome.max_total_drift);
        final_variance += wealth_variance(&outcome.final_state);
        finals.extend_from_slice(&outcome.final_state.wealth);
    }
    if let Some(e) = write_error {
        return Err(e);
    }
    let mut files = vec![trajectory.finish()?];

    let histogram = build_histogram(&finals, c.bins, None)?;
    files.push(write_histogram(
        c.output_dir.join("histogram.csv"),
        &histogram,
        false,
    )?);
    let draws = background_histogram(
        &c.background,
        BACKGROUND_DRAWS,
        c.bins,
        RngSeed(c.seed).offset(c.replicas),
    )?;
    files.push(write_histogram(
        c.output_dir.join("background.csv"),
        &draws,
        true,
    )?);

    let (gamma_fit, gamma_fit_error) = match gamma_fit_moments(&finals) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = SimulationSummary {
        agents: c.agents,
        transactions: c.transactions,
        replicas: c.replicas,
        background: c.background.clone(),
        final_variance: final_variance / c.replicas as f64,
        gamma_fit,
        gamma_fit_error,
        max_step_drift: step_drift,
        max_total_drift: total_drift,
    };
    files.push(write_json(&c.output_dir.join("summary.json"), &summary)?);
    files.push(write_manifest(
        CommandKind::Simulate,
        c,
        started,
        ConservationSummary::new(Some(step_drift), total_drift),
    )?);
    Ok(files)
}

pub fn compare(c: &RunConfig) -> CliResult<Artifacts> {
    let started = Instant::now();
    ensure_dir(&c.output_dir)?;
    let params = c.agent_params()?;
    let arm_uniform = NoiseBackground::Uniform;
    let arm_gaussian = if c.self_test {
        NoiseBackground::Uniform
    } else {
        NoiseBackground::gaussian()
    };
    let config = ComparisonConfig {
        transactions: c.transactions,
        replicas: c.replicas,
        base_seed: RngSeed(c.seed),
        record_every: c.resolved_record_every(),
        window: c.window,
        tolerance: c.tolerance,
    };
    let comparison = compare_arms(&params, &arm_uniform, &arm_gaussian, &config)?;

    let mut files = vec![write_json(
        &c.output_dir.join("comparison.json"),
        &comparison.result,
    )?];
    for (name, series) in [
        ("variance_uniform.csv", &comparison.series_uniform),
        ("variance_gaussian.csv", &comparison.series_gaussian),
    ] {
        let mut csv = CsvWriter::create(&c.output_dir.join(name), &["m", "mean_variance"])?;
        for (m, v) in series {
            csv.row_values(*m, &[*v])?;
        }
        files.push(csv.finish()?);
    }
    files.push(write_manifest(
        CommandKind::Compare,
        c,
        started,
        ConservationSummary::new(None, comparison.result.max_total_drift),
    )?);
    Ok(files)
}

#[derive(Serialize)]
struct Point {
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct RootsReport {
    parameters: TwoEconomyParams,
    roots: RootPair,
    stability: Stability,
    characteristic_polynomial: CharacteristicPolynomial,
    fixed_point: Point,
    coefficients: Point,
    decay_root: f64,
}

pub fn solve(c: &RunConfig) -> CliResult<Artifacts> {
    let started = Instant::now();
    ensure_dir(&c.output_dir)?;
    let p = c.two_economy()?;
    let solution = closed_form(&p);
    let w = p.total_wealth();
    let scale = if w > 0.0 { w } else { 1.0 };

    let mut csv = CsvWriter::create(&c.output_dir.join("solution.csv"), &["m", "x_m", "y_m"])?;
    let mut drift = 0.0_f64;
    for m in 0..=c.transactions {
        let (x, y) = solution.evaluate(m);
        drift = drift.max((x + y - w).abs() / scale);
        csv.row_values(m, &[x, y])?;
    }
    let mut files = vec![csv.finish()?];
    let report = RootsReport {
        parameters: p,
        roots: characteristic_roots(&p),
        stability: solution.stability,
        characteristic_polynomial: characteristic_polynomial(&p),
        fixed_point: Point {
            x: solution.fixed_point_x,
            y: solution.fixed_point_y,
        },
        coefficients: Point {
            x: solution.coeff_x,
            y: solution.coeff_y,
        },
        decay_root: solution.decay_root,
    };
    files.push(write_json(&c.output_dir.join("roots.json"), &report)?);
    files.push(write_manifest(
        CommandKind::Solve,
        c,
        started,
        ConservationSummary::new(None, drift),
    )?);
    Ok(files)
}

#[derive(Serialize)]
struct ConcordanceSummary {
    background: NoiseBackground,
    epsilon_det: f64,
    replicas: u64,
    transactions: u64,
    total_wealth: f64,
    max_relative_deviation: f64,
    threshold: f64,
    passed: bool,
    max_total_drift: f64,
}

pub fn concordance_cmd(c: &RunConfig) -> CliResult<Artifacts> {
    let started = Instant::now();
    ensure_dir(&c.output_dir)?;
    let p = c.two_economy()?;
    let report = concordance(
        &p,
        &c.background,
        c.replicas,
        c.transactions,
        RngSeed(c.seed),
    )?;
    let threshold = c.threshold.unwrap_or(0.05);

    let mut csv = CsvWriter::create(
        &c.output_dir.join("concordance.csv"),
        &["m", "ensemble_mean_x", "deterministic_x"],
    )?;
    for row in &report.rows {
        csv.row_values(row.m, &[row.ensemble_mean_x, row.deterministic_x])?;
    }
    let mut files = vec![csv.finish()?];
    let passed = report.max_relative_deviation <= threshold;
    let summary = ConcordanceSummary {
        background: c.background.clone(),
        epsilon_det: report.epsilon_det,
        replicas: report.replicas,
        transactions: report.transactions,
        total_wealth: report.total_wealth,
        max_relative_deviation: report.max_relative_deviation,
        threshold,
        passed,
        max_total_drift: report.max_total_drift,
    };
    files.push(write_json(
        &c.output_dir.join("concordance.json"),
        &summary,
    )?);
    files.push(write_manifest(
        CommandKind::Concordance,
        c,
        started,
        ConservationSummary::new(None, report.max_total_drift),
    )?);
    if !passed {
        return Err(CliError::Threshold(format!(
            "max relative deviation {} exceeds {threshold}",
            report.max_relative_deviation
        )));
    }
    Ok(files)
}

fn write_manifest(
    kind: CommandKind,
    c: &RunConfig,
    started: Instant,
    conservation: ConservationSummary,
) -> CliResult<PathBuf> {
    let manifest = RunManifest::new(kind, c, started.elapsed().as_secs_f64(), conservation);
    write_json(&c.output_dir.join("manifest.json"), &manifest)
}
