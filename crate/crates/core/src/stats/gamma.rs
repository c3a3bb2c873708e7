use serde::{Deserialize, Serialize};

use super::moments::RunningMoments;
use crate::error::{Error, Result};

/// Method-of-moments Gamma fit, `shape = mean^2 / var`, `scale = var / mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
}

impl GammaFit {
    pub fn from_moments(mean: f64, variance: f64) -> Result<Self> {
        if !(mean.is_finite() && variance.is_finite()) {
            return Err(Error::param("moments must be finite"));
        }
        if variance <= 0.0 {
            return Err(Error::Degenerate(format!(
                "cannot fit a Gamma law to variance {variance}"
            )));
        }
        if mean <= 0.0 {
            return Err(Error::param(format!(
                "Gamma fit needs a positive mean, got {mean}"
            )));
        }
        Ok(GammaFit {
            shape: mean * mean / variance,
            scale: variance / mean,
            sample_mean: mean,
            sample_variance: variance,
        })
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.scale
    }
}

/// Fits a Gamma law to non-negative samples using the unbiased sample variance.
pub fn gamma_fit_moments(samples: &[f64]) -> Result<GammaFit> {
    if samples.len() < 2 {
        return Err(Error::param("Gamma fit needs at least two samples"));
    }
    if let Some(x) = samples.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::param(format!(
            "Gamma fit needs finite samples >= 0, got {x}"
        )));
    }
    let m: RunningMoments = samples.iter().copied().collect();
    GammaFit::from_moments(m.mean(), m.sample_variance())
}
