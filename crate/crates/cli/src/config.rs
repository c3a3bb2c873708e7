//! Run configuration: command defaults, then an optional JSON file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use wealth_exchange::ztransform::TwoEconomyParams;
use wealth_exchange::{AgentParams, EpsilonVector, NoiseBackground};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Simulate,
    Compare,
    Solve,
    Concordance,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Compare => "compare",
            CommandKind::Solve => "solve",
            CommandKind::Concordance => "concordance",
        }
    }
}

/// One value for every agent, or one value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrList {
    pub fn parse(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let values = parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| CliError::Config(format!("cannot parse number {p:?} in {s:?}")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        Ok(match values.as_slice() {
            [v] => ScalarOrList::Scalar(*v),
            _ => ScalarOrList::List(values),
        })
    }

    pub fn expand(&self, n: usize, what: &str) -> CliResult<Vec<f64>> {
        match self {
            ScalarOrList::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrList::List(vs) if vs.len() == n => Ok(vs.clone()),
            ScalarOrList::List(vs) => Err(CliError::Config(format!(
                "{what} lists {} values for {n} agents",
                vs.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub agents: usize,
    pub lambdas: ScalarOrList,
    pub initial_wealth: ScalarOrList,
    pub background: NoiseBackground,
    /// Transactions per replica; the last `m` for `solve`.
    pub transactions: u64,
    pub replicas: u64,
    pub seed: u64,
    pub record_every: Option<u64>,
    pub output_dir: PathBuf,
    pub threshold: Option<f64>,
    pub self_test: bool,
    pub window: usize,
    pub tolerance: f64,
    pub bins: usize,
}

impl RunConfig {
    pub fn defaults(kind: CommandKind) -> Self {
        let base = RunConfig {
            agents: 100,
            lambdas: ScalarOrList::Scalar(0.9),
            initial_wealth: ScalarOrList::Scalar(1.0),
            background: NoiseBackground::gaussian(),
            transactions: 100_000,
            replicas: 1,
            seed: 1,
            record_every: None,
            output_dir: PathBuf::from("out").join(kind.name()),
            threshold: None,
            self_test: false,
            window: wealth_exchange::stats::DEFAULT_WINDOW,
            tolerance: wealth_exchange::stats::DEFAULT_TOLERANCE,
            bins: 50,
        };
        let two_economy = RunConfig {
            agents: 2,
            lambdas: ScalarOrList::List(vec![0.95, 0.8]),
            initial_wealth: ScalarOrList::List(vec![1000.0, 2000.0]),
            transactions: 200,
            ..base.clone()
        };
        match kind {
            CommandKind::Simulate => base,
            CommandKind::Compare => RunConfig {
                replicas: 20,
                ..base
            },
            CommandKind::Solve => RunConfig {
                background: NoiseBackground::Constant {
                    epsilon: EpsilonVector::new(vec![0.51, 0.49]).expect("valid simplex"),
                },
                ..two_economy
            },
            CommandKind::Concordance => RunConfig {
                replicas: 1000,
                threshold: Some(0.05),
                ..two_economy
            },
        }
    }

    /// Command defaults overlaid with the top-level keys of a JSON file.
    /// A manifest written by a previous run is accepted too.
    pub fn from_file(kind: CommandKind, path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if file.get("generator").is_some() {
            if let Some(inner) = file.get_mut("config") {
                file = inner.take();
            }
        }
        let Value::Object(overrides) = file else {
            return Err(CliError::Config(format!(
                "{}: config must be a JSON object",
                path.display()
            )));
        };
        let mut merged = serde_json::to_value(Self::defaults(kind)).expect("config serializes");
        let target = merged.as_object_mut().expect("config is an object");
        for (k, v) in overrides {
            target.insert(k, v);
        }
        serde_json::from_value(merged)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn agent_params(&self) -> CliResult<Vec<AgentParams>> {
        let lambdas = self.lambdas.expand(self.agents, "lambdas")?;
        let wealth = self.initial_wealth.expand(self.agents, "initial_wealth")?;
        lambdas
            .into_iter()
            .zip(wealth)
            .map(|(l, w)| AgentParams::new(l, w).map_err(CliError::from))
            .collect()
    }

    /// Two-economy parameters; `epsilon` is the share of agent 0 under the
    /// configured background.
    pub fn two_economy(&self) -> CliResult<TwoEconomyParams> {
        if self.agents != 2 {
            return Err(CliError::Config(format!(
                "this command needs exactly 2 agents, got {}",
                self.agents
            )));
        }
        let p = self.agent_params()?;
        let epsilon = self.background.induced_epsilon_mean(2)?;
        Ok(TwoEconomyParams::new(
            p[0].lambda,
            p[1].lambda,
            epsilon,
            p[0].initial_wealth,
            p[1].initial_wealth,
        )?)
    }

    pub fn resolved_record_every(&self) -> u64 {
        self.record_every
            .unwrap_or_else(|| (self.transactions / 10_000).max(1))
    }

    pub fn validate(&self, kind: CommandKind) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.agents == 0 {
            return bad("agents must be >= 1".into());
        }
        self.agent_params()?;
        self.background.validate()?;
        if let NoiseBackground::Constant { epsilon } = &self.background {
            if epsilon.len() != self.agents && kind != CommandKind::Compare {
                return bad(format!(
                    "constant epsilon has {} entries for {} agents",
                    epsilon.len(),
                    self.agents
                ));
            }
        }
        if self.transactions == 0 && kind != CommandKind::Solve {
            return bad("transactions must be >= 1".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be >= 1".into());
        }
        if self.record_every == Some(0) {
            return bad("record_every must be >= 1".into());
        }
        if self.window < 2 {
            return bad("window must be >= 2".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be > 0".into());
        }
        if self.bins == 0 {
            return bad("bins must be >= 1".into());
        }
        if let Some(t) = self.threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("threshold must be >= 0, got {t}"));
            }
        }
        match kind {
            CommandKind::Solve => {
                if !self.background.is_constant() {
                    return bad("solve needs a constant background".into());
                }
                self.two_economy()?;
            }
            CommandKind::Concordance => {
                self.two_economy()?;
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackgroundKind {
    Uniform,
    Gaussian,
    Constant,
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file (or a manifest from a previous run).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed; replica k uses seed + k.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Number of agents.
    #[arg(long, value_name = "N")]
    pub agents: Option<usize>,
    /// Saving propensity: one value or a comma-separated list.
    #[arg(long, value_name = "F|LIST")]
    pub lambda: Option<String>,
    /// Initial wealth: one value or a comma-separated list.
    #[arg(long, value_name = "F|LIST")]
    pub initial_wealth: Option<String>,
    /// Transactions per replica (the last index for solve).
    #[arg(long, value_name = "N")]
    pub transactions: Option<u64>,
    /// Independent replicas.
    #[arg(long, value_name = "N")]
    pub replicas: Option<u64>,
    /// Exchange-noise background.
    #[arg(long, value_enum)]
    pub background: Option<BackgroundKind>,
    /// Gaussian background mean.
    #[arg(long, value_name = "F")]
    pub mean: Option<f64>,
    /// Gaussian background standard deviation.
    #[arg(long, value_name = "F")]
    pub sigma: Option<f64>,
    /// Constant exchange vector; a single value e means (e, 1 - e).
    #[arg(long, value_name = "F|LIST")]
    pub epsilon: Option<String>,
    /// Record a snapshot every N transactions.
    #[arg(long, value_name = "N")]
    pub record_every: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Concordance pass threshold, as a fraction of total wealth.
    #[arg(long, value_name = "F")]
    pub threshold: Option<f64>,
    /// Run both comparison arms with the same background.
    #[arg(long)]
    pub self_test: bool,
    /// Equilibrium window, in recorded points.
    #[arg(long, value_name = "N")]
    pub window: Option<usize>,
    /// Equilibrium relative-change tolerance.
    #[arg(long, value_name = "F")]
    pub tolerance: Option<f64>,
    /// Histogram bins.
    #[arg(long, value_name = "N")]
    pub bins: Option<usize>,
}

/// Shorthand for the two-economy commands.
#[derive(Debug, Clone, Default, Args)]
pub struct TwoEconomyArgs {
    /// Saving propensity of economy x.
    #[arg(long, value_name = "F")]
    pub lambda_x: Option<f64>,
    /// Saving propensity of economy y.
    #[arg(long, value_name = "F")]
    pub lambda_y: Option<f64>,
    /// Initial wealth of x.
    #[arg(long, value_name = "F")]
    pub x0: Option<f64>,
    /// Initial wealth of y.
    #[arg(long, value_name = "F")]
    pub y0: Option<f64>,
}

fn parse_epsilon(s: &str, agents: usize) -> CliResult<NoiseBackground> {
    let values = match ScalarOrList::parse(s)? {
        ScalarOrList::Scalar(e) if agents == 2 => vec![e, 1.0 - e],
        ScalarOrList::Scalar(e) if agents == 1 => vec![e],
        ScalarOrList::Scalar(_) => {
            return Err(CliError::Config(format!(
                "a scalar --epsilon needs 2 agents; list {agents} values instead"
            )))
        }
        ScalarOrList::List(v) => v,
    };
    Ok(NoiseBackground::constant(values)?)
}

impl RunArgs {
    pub fn resolve(&self, kind: CommandKind, two: Option<&TwoEconomyArgs>) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(kind, path)?,
            None => RunConfig::defaults(kind),
        };
        if let Some(v) = self.agents {
            c.agents = v;
        }
        if let Some(s) = &self.lambda {
            c.lambdas = ScalarOrList::parse(s)?;
        }
        if let Some(s) = &self.initial_wealth {
            c.initial_wealth = ScalarOrList::parse(s)?;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.transactions {
            c.transactions = v;
        }
        if let Some(v) = self.replicas {
            c.replicas = v;
        }
        if let Some(v) = self.record_every {
            c.record_every = Some(v);
        }
        if let Some(v) = &self.out {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.threshold {
            c.threshold = Some(v);
        }
        if self.self_test {
            c.self_test = true;
        }
        if let Some(v) = self.window {
            c.window = v;
        }
        if let Some(v) = self.tolerance {
            c.tolerance = v;
        }
        if let Some(v) = self.bins {
            c.bins = v;
        }
        self.apply_background(&mut c)?;
        if let Some(two) = two {
            apply_two_economy(&mut c, two)?;
        }
        if c.record_every.is_none() {
            c.record_every = Some(c.resolved_record_every());
        }
        c.validate(kind)?;
        Ok(c)
    }

    fn apply_background(&self, c: &mut RunConfig) -> CliResult<()> {
        let (mean0, sigma0) = match c.background {
            NoiseBackground::Gaussian { mean, sigma } => (mean, sigma),
            _ => (
                wealth_exchange::exchange::GAUSSIAN_MEAN,
                wealth_exchange::exchange::GAUSSIAN_SIGMA,
            ),
        };
        let gaussian = NoiseBackground::Gaussian {
            mean: self.mean.unwrap_or(mean0),
            sigma: self.sigma.unwrap_or(sigma0),
        };
        match self.background {
            Some(BackgroundKind::Uniform) => c.background = NoiseBackground::Uniform,
            Some(BackgroundKind::Gaussian) => c.background = gaussian,
            Some(BackgroundKind::Constant) => match &self.epsilon {
                Some(s) => c.background = parse_epsilon(s, c.agents)?,
                None if c.background.is_constant() => {}
                None => {
                    return Err(CliError::Config(
                        "--background constant needs --epsilon".into(),
                    ))
                }
            },
            None => {
                if let Some(s) = &self.epsilon {
                    c.background = parse_epsilon(s, c.agents)?;
                } else if self.mean.is_some() || self.sigma.is_some() {
                    c.background = gaussian;
                }
            }
        }
        Ok(())
    }
}

fn apply_two_economy(c: &mut RunConfig, two: &TwoEconomyArgs) -> CliResult<()> {
    if two.lambda_x.is_some() || two.lambda_y.is_some() {
        let mut l = c.lambdas.expand(2, "lambdas")?;
        l[0] = two.lambda_x.unwrap_or(l[0]);
        l[1] = two.lambda_y.unwrap_or(l[1]);
        c.lambdas = ScalarOrList::List(l);
    }
    if two.x0.is_some() || two.y0.is_some() {
        let mut w = c.initial_wealth.expand(2, "initial_wealth")?;
        w[0] = two.x0.unwrap_or(w[0]);
        w[1] = two.y0.unwrap_or(w[1]);
        c.initial_wealth = ScalarOrList::List(w);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_or_list_parsing() {
        assert_eq!(
            ScalarOrList::parse("0.9").unwrap(),
            ScalarOrList::Scalar(0.9)
        );
        assert_eq!(
            ScalarOrList::parse("0.95, 0.8").unwrap(),
            ScalarOrList::List(vec![0.95, 0.8])
        );
        assert!(ScalarOrList::parse("a,b").is_err());
        assert!(ScalarOrList::List(vec![1.0]).expand(3, "x").is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let args = RunArgs {
            agents: Some(10),
            lambda: Some("0.5".into()),
            background: Some(BackgroundKind::Uniform),
            ..Default::default()
        };
        let c = args.resolve(CommandKind::Simulate, None).unwrap();
        assert_eq!(c.agents, 10);
        assert_eq!(c.background, NoiseBackground::Uniform);
        assert_eq!(c.record_every, Some(10));
    }

    #[test]
    fn scalar_epsilon_expands_for_two_agents() {
        let args = RunArgs {
            epsilon: Some("0.3".into()),
            ..Default::default()
        };
        let two = TwoEconomyArgs {
            lambda_x: Some(0.5),
            ..Default::default()
        };
        let c = args.resolve(CommandKind::Solve, Some(&two)).unwrap();
        assert_eq!(
            c.background,
            NoiseBackground::constant(vec![0.3, 0.7]).unwrap()
        );
        assert_eq!(c.lambdas, ScalarOrList::List(vec![0.5, 0.8]));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cases = [
            RunArgs {
                lambda: Some("1.5".into()),
                ..Default::default()
            },
            RunArgs {
                lambda: Some("0.1,0.2".into()),
                ..Default::default()
            },
            RunArgs {
                transactions: Some(0),
                ..Default::default()
            },
            RunArgs {
                sigma: Some(0.0),
                ..Default::default()
            },
            RunArgs {
                background: Some(BackgroundKind::Constant),
                ..Default::default()
            },
        ];
        for args in cases {
            assert!(
                args.resolve(CommandKind::Simulate, None).is_err(),
                "{args:?}"
            );
        }
        let args = RunArgs {
            agents: Some(3),
            ..Default::default()
        };
        assert!(args.resolve(CommandKind::Concordance, None).is_err());
    }

    #[test]
    fn config_serde_roundtrip() {
        for kind in [
            CommandKind::Simulate,
            CommandKind::Compare,
            CommandKind::Solve,
            CommandKind::Concordance,
        ] {
            let c = RunArgs::default().resolve(kind, None).unwrap();
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
        }
    }
}
