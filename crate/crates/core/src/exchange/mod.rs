//! The closed-economy evolution law.
//!
//! One transaction at index `i` maps wealth `x` to
//! `x'_j = lambda_j * x_j + eps_j * P`, where the pool
//! `P = sum_k (1 - lambda_k) * x_k` is shared by every recipient. Since the
//! `eps` vector lies on the simplex, the total is conserved.

mod noise;

pub use noise::{
    normalize_epsilon, sample_background, EpsilonVector, NoiseBackground, GAUSSIAN_MEAN,
    GAUSSIAN_SIGMA, SIMPLEX_TOLERANCE,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use noise::{normalize_in_place, Sampler};

/// Identity of the random generator behind every trajectory.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Maximum relative drift of total wealth tolerated before a run aborts.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

const MAX_DEGENERATE_RESAMPLES: u32 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Saving propensity in `[0, 1]`.
    pub lambda: f64,
    pub initial_wealth: f64,
}

impl AgentParams {
    pub fn new(lambda: f64, initial_wealth: f64) -> Result<Self> {
        let p = AgentParams {
            lambda,
            initial_wealth,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(format!(
                "saving propensity {} outside [0, 1]",
                self.lambda
            )));
        }
        if !(self.initial_wealth >= 0.0 && self.initial_wealth.is_finite()) {
            return Err(Error::param(format!(
                "initial wealth {} must be finite and >= 0",
                self.initial_wealth
            )));
        }
        Ok(())
    }

    /// `n` identical agents.
    pub fn uniform(n: usize, lambda: f64, initial_wealth: f64) -> Result<Vec<Self>> {
        let p = AgentParams::new(lambda, initial_wealth)?;
        Ok(vec![p; n])
    }
}

/// Wealth of every agent after `transaction_index` transactions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthState {
    pub transaction_index: u64,
    pub wealth: Vec<f64>,
}

impl WealthState {
    pub fn initial(params: &[AgentParams]) -> Self {
        WealthState {
            transaction_index: 0,
            wealth: params.iter().map(|p| p.initial_wealth).collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.wealth.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.wealth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wealth.is_empty()
    }
}

/// 64-bit seed of a trajectory's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Seed of replica `k` in an ensemble rooted at `self`.
    pub fn offset(self, k: u64) -> RngSeed {
        RngSeed(self.0.wrapping_add(k))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

fn check_lengths(n_wealth: usize, n_params: usize, n_eps: usize) -> Result<()> {
    if n_wealth == 0 {
        return Err(Error::param("state has no agents"));
    }
    if n_wealth != n_params || n_wealth != n_eps {
        return Err(Error::param(format!(
            "length mismatch: wealth {n_wealth}, params {n_params}, epsilon {n_eps}"
        )));
    }
    Ok(())
}

fn apply_step(wealth: &mut [f64], lambdas: &[f64], eps: &[f64]) {
    let pool: f64 = wealth.iter().zip(lambdas).map(|(x, l)| (1.0 - l) * x).sum();
    for ((x, l), e) in wealth.iter_mut().zip(lambdas).zip(eps) {
        *x = l * *x + e * pool;
    }
}

/// Applies one transaction of the evolution law.
pub fn step(
    state: &WealthState,
    params: &[AgentParams],
    epsilon: &EpsilonVector,
) -> Result<WealthState> {
    check_lengths(state.len(), params.len(), epsilon.len())?;
    let lambdas: Vec<f64> = params.iter().map(|p| p.lambda).collect();
    let mut wealth = state.wealth.clone();
    apply_step(&mut wealth, &lambdas, epsilon.values());
    let before = state.total();
    let drift = relative_drift(wealth.iter().sum(), before);
    let next_index = state.transaction_index + 1;
    if drift > CONSERVATION_TOLERANCE {
        return Err(Error::Conservation {
            transaction: next_index,
            drift,
        });
    }
    debug_assert!(wealth.iter().all(|x| *x >= 0.0));
    Ok(WealthState {
        transaction_index: next_index,
        wealth,
    })
}

/// Net transfer between agents `a` and `b` in one transaction:
/// `eps_b (1 - lambda_a) x_a - eps_a (1 - lambda_b) x_b`.
pub fn pairwise_delta(
    state: &WealthState,
    params: &[AgentParams],
    epsilon: &EpsilonVector,
    a: usize,
    b: usize,
) -> Result<f64> {
    check_lengths(state.len(), params.len(), epsilon.len())?;
    let n = state.len();
    if a >= n || b >= n {
        return Err(Error::param(format!(
            "agent index ({a}, {b}) out of range for {n} agents"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let eps = epsilon.values();
    let x = &state.wealth;
    Ok(eps[b] * (1.0 - params[a].lambda) * x[a] - eps[a] * (1.0 - params[b].lambda) * x[b])
}

fn relative_drift(total: f64, reference: f64) -> f64 {
    let diff = (total - reference).abs();
    if reference > 0.0 {
        diff / reference
    } else {
        diff
    }
}

/// Summary of a completed trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub final_state: WealthState,
    /// Largest `|sum x' - sum x| / sum x_0` over single transactions.
    pub max_step_drift: f64,
    /// Largest `|sum x' - sum x_0| / sum x_0` over the run.
    pub max_total_drift: f64,
    /// Raw draws discarded because they had zero norm.
    pub degenerate_resamples: u64,
}

/// A configured economy that can be run from any seed.
#[derive(Debug, Clone)]
pub struct Simulation {
    lambdas: Vec<f64>,
    initial: Vec<f64>,
    background: NoiseBackground,
    sampler: Sampler,
}

impl Simulation {
    pub fn new(params: &[AgentParams], background: NoiseBackground) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::param("at least one agent is required"));
        }
        for p in params {
            p.validate()?;
        }
        let sampler = Sampler::new(&background)?;
        if let NoiseBackground::Constant { epsilon } = &background {
            if epsilon.len() != params.len() {
                return Err(Error::param(format!(
                    "constant epsilon has length {}, expected {}",
                    epsilon.len(),
                    params.len()
                )));
            }
        }
        Ok(Simulation {
            lambdas: params.iter().map(|p| p.lambda).collect(),
            initial: params.iter().map(|p| p.initial_wealth).collect(),
            background,
            sampler,
        })
    }

    pub fn agents(&self) -> usize {
        self.lambdas.len()
    }

    pub fn background(&self) -> &NoiseBackground {
        &self.background
    }

    pub fn initial_total(&self) -> f64 {
        self.initial.iter().sum()
    }

    /// Runs `transactions` transactions from the initial state.
    ///
    /// `observe` sees the initial state, every state whose index is a
    /// multiple of `record_every`, and the final state, each exactly once.
    pub fn run<F>(
        &self,
        transactions: u64,
        seed: RngSeed,
        record_every: u64,
        mut observe: F,
    ) -> Result<TrajectoryOutcome>
    where
        F: FnMut(&WealthState),
    {
        if transactions == 0 {
            return Err(Error::param("transactions must be >= 1"));
        }
        if record_every == 0 {
            return Err(Error::param("record_every must be >= 1"));
        }
        let n = self.agents();
        let mut rng = seed.rng();
        let mut state = WealthState {
            transaction_index: 0,
            wealth: self.initial.clone(),
        };
        let initial_total = self.initial_total();
        let mut previous_total = initial_total;
        let drift_scale = if initial_total > 0.0 {
            initial_total
        } else {
            1.0
        };
        let mut eps = vec![0.0; n];
        let mut outcome_drift = (0.0_f64, 0.0_f64);
        let mut resamples = 0u64;
        let normalize = !self.background.is_constant();

        observe(&state);
        for i in 1..=transactions {
            self.sampler.fill(&mut eps, &mut rng)?;
            if normalize {
                let mut attempts = 0;
                while let Err(e) = normalize_in_place(&mut eps) {
                    attempts += 1;
                    resamples += 1;
                    if attempts > MAX_DEGENERATE_RESAMPLES {
                        return Err(e);
                    }
                    self.sampler.fill(&mut eps, &mut rng)?;
                }
            }
            apply_step(&mut state.wealth, &self.lambdas, &eps);
            state.transaction_index = i;

            let total: f64 = state.wealth.iter().sum();
            let step_drift = (total - previous_total).abs() / drift_scale;
            let total_drift = relative_drift(total, initial_total);
            outcome_drift.0 = outcome_drift.0.max(step_drift);
            outcome_drift.1 = outcome_drift.1.max(total_drift);
            if total_drift > CONSERVATION_TOLERANCE || !total.is_finite() {
                return Err(Error::Conservation {
                    transaction: i,
                    drift: total_drift,
                });
            }
            previous_total = total;

            if i % record_every == 0 || i == transactions {
                observe(&state);
            }
        }
        Ok(TrajectoryOutcome {
            final_state: state,
            max_step_drift: outcome_drift.0,
            max_total_drift: outcome_drift.1,
            degenerate_resamples: resamples,
        })
    }
}

/// Runs one trajectory and collects the recorded states.
///
/// The result starts with the initial state and ends with the final one.
pub fn run_trajectory(
    params: &[AgentParams],
    background: &NoiseBackground,
    transactions: u64,
    seed: RngSeed,
    record_every: u64,
) -> Result<Vec<WealthState>> {
    let sim = Simulation::new(params, background.clone())?;
    let mut states = Vec::new();
    sim.run(transactions, seed, record_every, |s| states.push(s.clone()))?;
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_pair() -> (WealthState, Vec<AgentParams>, EpsilonVector) {
        let params = vec![
            AgentParams::new(0.95, 1000.0).unwrap(),
            AgentParams::new(0.8, 2000.0).unwrap(),
        ];
        let eps = EpsilonVector::new(vec![0.51, 0.49]).unwrap();
        (WealthState::initial(&params), params, eps)
    }

    // Independent two-agent calculator written out term by term.
    fn two_agent_step(l: [f64; 2], x: [f64; 2], e: [f64; 2]) -> [f64; 2] {
        let released_0 = x[0] - l[0] * x[0];
        let released_1 = x[1] - l[1] * x[1];
        let pool = released_0 + released_1;
        [l[0] * x[0] + e[0] * pool, l[1] * x[1] + e[1] * pool]
    }

    #[test]
    fn reference_parameters_one_step() {
        let (state, params, eps) = reference_pair();
        let next = step(&state, &params, &eps).unwrap();
        let oracle = two_agent_step([0.95, 0.8], [1000.0, 2000.0], [0.51, 0.49]);
        assert_eq!(next.transaction_index, 1);
        assert!((oracle[0] - 1179.5).abs() < 1e-9);
        assert!((oracle[1] - 1820.5).abs() < 1e-9);
        assert!((next.wealth[0] - oracle[0]).abs() < 1e-9);
        assert!((next.wealth[1] - oracle[1]).abs() < 1e-9);
    }

    #[test]
    fn frozen_and_full_redistribution() {
        let eps = EpsilonVector::new(vec![0.3, 0.7]).unwrap();
        let state = WealthState {
            transaction_index: 4,
            wealth: vec![12.0, 5.0],
        };
        let frozen = AgentParams::uniform(2, 1.0, 0.0).unwrap();
        assert_eq!(step(&state, &frozen, &eps).unwrap().wealth, state.wealth);

        let spend_all = AgentParams::uniform(2, 0.0, 0.0).unwrap();
        let next = step(&state, &spend_all, &eps).unwrap();
        assert!((next.wealth[0] - 0.3 * 17.0).abs() < 1e-12);
        assert!((next.wealth[1] - 0.7 * 17.0).abs() < 1e-12);
        assert_eq!(next.transaction_index, 5);
    }

    #[test]
    fn step_length_mismatch() {
        let (state, params, _) = reference_pair();
        let eps = EpsilonVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            step(&state, &params, &eps),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn pairwise_delta_examples() {
        let (state, params, eps) = reference_pair();
        let d = pairwise_delta(&state, &params, &eps, 0, 1).unwrap();
        assert!((d - (-179.5)).abs() < 1e-9);
        assert_eq!(pairwise_delta(&state, &params, &eps, 1, 1).unwrap(), 0.0);
        assert!(pairwise_delta(&state, &params, &eps, 0, 2).is_err());

        // In a two-agent system, agent 0's net gain equals the transfer from 1 to 0.
        let next = step(&state, &params, &eps).unwrap();
        assert!((next.wealth[0] - state.wealth[0] + d).abs() < 1e-9);

        let frozen = AgentParams::uniform(2, 1.0, 1.0).unwrap();
        assert_eq!(pairwise_delta(&state, &frozen, &eps, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn trajectory_records_cadence_and_final() {
        let params = AgentParams::uniform(5, 0.5, 10.0).unwrap();
        let states =
            run_trajectory(&params, &NoiseBackground::Uniform, 25, RngSeed(3), 10).unwrap();
        let idx: Vec<u64> = states.iter().map(|s| s.transaction_index).collect();
        assert_eq!(idx, vec![0, 10, 20, 25]);
        for s in &states {
            assert!((s.total() - 50.0).abs() / 50.0 < 1e-9);
        }
    }

    #[test]
    fn trajectory_is_reproducible() {
        let params = AgentParams::uniform(10, 0.3, 1.0).unwrap();
        let bg = NoiseBackground::gaussian();
        let a = run_trajectory(&params, &bg, 500, RngSeed(99), 7).unwrap();
        let b = run_trajectory(&params, &bg, 500, RngSeed(99), 7).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&params, &bg, 500, RngSeed(100), 7).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn frozen_trajectory_never_moves() {
        let params: Vec<AgentParams> = (0..4)
            .map(|k| AgentParams::new(1.0, k as f64 * 3.0).unwrap())
            .collect();
        for bg in [NoiseBackground::Uniform, NoiseBackground::gaussian()] {
            let states = run_trajectory(&params, &bg, 100, RngSeed(1), 1).unwrap();
            assert_eq!(states.last().unwrap().wealth, vec![0.0, 3.0, 6.0, 9.0]);
        }
    }

    #[test]
    fn trajectory_rejects_bad_config() {
        let params = AgentParams::uniform(3, 0.5, 1.0).unwrap();
        let bg = NoiseBackground::constant(vec![0.5, 0.5]).unwrap();
        assert!(Simulation::new(&params, bg).is_err());
        assert!(Simulation::new(&[], NoiseBackground::Uniform).is_err());
        assert!(run_trajectory(&params, &NoiseBackground::Uniform, 0, RngSeed(0), 1).is_err());
        assert!(run_trajectory(&params, &NoiseBackground::Uniform, 5, RngSeed(0), 0).is_err());
        assert!(AgentParams::new(1.1, 1.0).is_err());
        assert!(AgentParams::new(0.5, -1.0).is_err());
    }

    #[test]
    fn zero_wealth_economy_stays_zero() {
        let params = AgentParams::uniform(3, 0.2, 0.0).unwrap();
        let states = run_trajectory(&params, &NoiseBackground::Uniform, 10, RngSeed(5), 1).unwrap();
        assert!(states.iter().all(|s| s.wealth.iter().all(|x| *x == 0.0)));
    }
}
