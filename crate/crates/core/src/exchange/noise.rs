//! Exchange-noise backgrounds and the map from raw draws to the simplex.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default mean of the Gaussian background.
pub const GAUSSIAN_MEAN: f64 = 0.5;
/// Default standard deviation of the Gaussian background; [0, 1] spans +-6 sigma.
pub const GAUSSIAN_SIGMA: f64 = 1.0 / 12.0;
/// Allowed deviation of a simplex vector's sum from 1.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

const MAX_REJECTIONS: u32 = 100_000;

/// A point on the probability simplex: entries in `[0, 1]` summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonVector(Vec<f64>);

impl EpsilonVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        validate_simplex(&values)?;
        Ok(EpsilonVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for EpsilonVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        EpsilonVector::new(values)
    }
}

impl From<EpsilonVector> for Vec<f64> {
    fn from(eps: EpsilonVector) -> Self {
        eps.0
    }
}

impl AsRef<[f64]> for EpsilonVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn validate_simplex(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param("epsilon vector is empty"));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::param(format!("epsilon entry {v} outside [0, 1]")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::param(format!("epsilon entries sum to {sum}, not 1")));
    }
    Ok(())
}

/// The law generating raw draws `u_j` for the exchange parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseBackground {
    /// i.i.d. uniform draws on `[0, 1)`.
    Uniform,
    /// i.i.d. Gaussian draws, rejection-sampled into `[0, 1]`.
    Gaussian {
        #[serde(default = "default_mean")]
        mean: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// A fixed simplex vector used for every transaction (deterministic system).
    Constant { epsilon: EpsilonVector },
}

fn default_mean() -> f64 {
    GAUSSIAN_MEAN
}

fn default_sigma() -> f64 {
    GAUSSIAN_SIGMA
}

impl NoiseBackground {
    /// Gaussian background with mean 1/2 and sigma 1/12.
    pub fn gaussian() -> Self {
        NoiseBackground::Gaussian {
            mean: GAUSSIAN_MEAN,
            sigma: GAUSSIAN_SIGMA,
        }
    }

    pub fn constant(values: Vec<f64>) -> Result<Self> {
        Ok(NoiseBackground::Constant {
            epsilon: EpsilonVector::new(values)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseBackground::Uniform => "uniform",
            NoiseBackground::Gaussian { .. } => "gaussian",
            NoiseBackground::Constant { .. } => "constant",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, NoiseBackground::Constant { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseBackground::Uniform => Ok(()),
            NoiseBackground::Gaussian { mean, sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::param(format!(
                        "gaussian sigma must be > 0, got {sigma}"
                    )));
                }
                if !mean.is_finite() {
                    return Err(Error::param(format!(
                        "gaussian mean must be finite, got {mean}"
                    )));
                }
                Ok(())
            }
            NoiseBackground::Constant { epsilon } => validate_simplex(epsilon.values()),
        }
    }

    /// Mean of `epsilon_0` induced by this background for a system of `n` agents.
    ///
    /// i.i.d. raw draws make the normalized components exchangeable, so each
    /// has mean exactly `1/n`. A constant background induces its first entry.
    pub fn induced_epsilon_mean(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::param("agent count must be >= 1"));
        }
        self.validate()?;
        match self {
            NoiseBackground::Constant { epsilon } => {
                if epsilon.len() != n {
                    return Err(Error::param(format!(
                        "constant epsilon has length {}, expected {n}",
                        epsilon.len()
                    )));
                }
                Ok(epsilon.values()[0])
            }
            _ => Ok(1.0 / n as f64),
        }
    }
}

/// Reusable sampler with the distribution objects built once.
#[derive(Debug, Clone)]
pub(crate) enum Sampler {
    Uniform,
    Gaussian(Normal<f64>),
    Constant(Vec<f64>),
}

impl Sampler {
    pub(crate) fn new(background: &NoiseBackground) -> Result<Self> {
        background.validate()?;
        Ok(match background {
            NoiseBackground::Uniform => Sampler::Uniform,
            NoiseBackground::Gaussian { mean, sigma } => Sampler::Gaussian(
                Normal::new(*mean, *sigma).map_err(|e| Error::param(e.to_string()))?,
            ),
            NoiseBackground::Constant { epsilon } => Sampler::Constant(epsilon.values().to_vec()),
        })
    }

    pub(crate) fn fill<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) -> Result<()> {
        match self {
            Sampler::Uniform => {
                for u in out.iter_mut() {
                    *u = rng.random::<f64>();
                }
            }
            Sampler::Gaussian(normal) => {
                for u in out.iter_mut() {
                    *u = truncated_draw(normal, rng)?;
                }
            }
            Sampler::Constant(values) => {
                if values.len() != out.len() {
                    return Err(Error::param(format!(
                        "constant epsilon has length {}, expected {}",
                        values.len(),
                        out.len()
                    )));
                }
                out.copy_from_slice(values);
            }
        }
        Ok(())
    }
}

fn truncated_draw<R: Rng + ?Sized>(normal: &Normal<f64>, rng: &mut R) -> Result<f64> {
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if (0.0..=1.0).contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::param(format!(
        "gaussian background puts too little mass in [0, 1] (mean {}, sigma {})",
        normal.mean(),
        normal.std_dev()
    )))
}

/// Draws a raw vector `u` of length `n` from `background`.
///
/// Every entry lies in `[0, 1]`. A constant background returns its stored
/// vector unchanged.
pub fn sample_background<R: Rng + ?Sized>(
    background: &NoiseBackground,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("agent count must be >= 1"));
    }
    let sampler = Sampler::new(background)?;
    let mut out = vec![0.0; n];
    sampler.fill(&mut out, rng)?;
    Ok(out)
}

/// Maps a raw vector to the simplex with squared direction cosines,
/// `eps_j = u_j^2 / sum_k u_k^2`.
pub fn normalize_epsilon(raw: &[f64]) -> Result<EpsilonVector> {
    if raw.is_empty() {
        return Err(Error::param("raw vector is empty"));
    }
    let mut values = raw.to_vec();
    normalize_in_place(&mut values)?;
    Ok(EpsilonVector(values))
}

pub(crate) fn normalize_in_place(values: &mut [f64]) -> Result<()> {
    let norm_sq: f64 = values.iter().map(|u| u * u).sum();
    if !(norm_sq > 0.0 && norm_sq.is_finite()) {
        return Err(Error::Degenerate(format!(
            "raw vector has squared norm {norm_sq}"
        )));
    }
    for v in values.iter_mut() {
        *v = *v * *v / norm_sq;
    }
    Ok(())
}
