use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{sample_background, NoiseBackground, RngSeed};

/// Fixed-edge histogram. Bins are left-closed and right-open, except the
/// last, which also includes the upper edge. Values outside the edges (and
/// non-finite values) are tallied in `outside`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    outside: u64,
}

impl Histogram {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::param("a histogram needs at least two edges"));
        }
        if !edges.iter().all(|e| e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(
                "histogram edges must be finite and strictly increasing",
            ));
        }
        let bins = edges.len() - 1;
        Ok(Histogram {
            edges,
            counts: vec![0; bins],
            outside: 0,
        })
    }

    /// `bins` equal-width bins spanning `[low, high]`.
    pub fn with_range(low: f64, high: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::param("bins must be >= 1"));
        }
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::param(format!(
                "invalid histogram range [{low}, {high}]"
            )));
        }
        let width = high - low;
        let mut edges: Vec<f64> = (0..bins)
            .map(|k| low + width * (k as f64 / bins as f64))
            .collect();
        edges.push(high);
        Self::from_edges(edges)
    }

    pub fn add(&mut self, x: f64) {
        match self.bin_of(x) {
            Some(k) => self.counts[k] += 1,
            None => self.outside += 1,
        }
    }

    fn bin_of(&self, x: f64) -> Option<usize> {
        let last = self.counts.len() - 1;
        let (low, high) = (self.edges[0], self.edges[last + 1]);
        if !(low..=high).contains(&x) {
            return None;
        }
        let above = self.edges.partition_point(|e| *e <= x);
        Some((above - 1).min(last))
    }

    /// Adds the counts of `other`, which must share the same edges.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::param("cannot merge histograms with different edges"));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.outside += other.outside;
        Ok(())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn outside(&self) -> u64 {
        self.outside
    }

    /// Number of values ingested, inside or outside the edges.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    /// `(low, high, count)` for every bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(w, c)| (w[0], w[1], *c))
    }
}

impl Extend<f64> for Histogram {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Bins `samples` into `bins` equal-width bins over `range`, or over the
/// sample range when `range` is `None`.
pub fn build_histogram(
    samples: &[f64],
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::param("cannot histogram an empty sample"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("samples must be finite"));
    }
    let (low, high) = match range {
        Some(r) => r,
        None => {
            let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        }
    };
    let mut h = Histogram::with_range(low, high, bins)?;
    h.extend(samples.iter().copied());
    Ok(h)
}

/// Histogram on `[0, 1]` of `draws` raw values from `background`. A constant
/// background contributes its stored entries, repeated.
pub fn background_histogram(
    background: &NoiseBackground,
    draws: usize,
    bins: usize,
    seed: RngSeed,
) -> Result<Histogram> {
    if draws == 0 {
        return Err(Error::param("draws must be >= 1"));
    }
    let mut h = Histogram::with_range(0.0, 1.0, bins)?;
    let mut rng = seed.rng();
    let width = match background {
        NoiseBackground::Constant { epsilon } => epsilon.len(),
        _ => draws,
    };
    let mut remaining = draws;
    while remaining > 0 {
        let batch = sample_background(background, width, &mut rng)?;
        let take = remaining.min(batch.len());
        h.extend(batch[..take].iter().copied());
        remaining -= take;
    }
    Ok(h)
}
