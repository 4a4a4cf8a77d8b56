use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::domain::Point;
use crate::seed::CounterStream;
use crate::{Error, Result};

const PROB_SUM_TOLERANCE: f64 = 1e-12;

/// A distribution with finite, explicit support.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DistributionFile", into = "DistributionFile")]
pub struct FiniteDistribution {
    support: Vec<Point>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    support: Vec<Point>,
    probs: Vec<f64>,
}

impl TryFrom<DistributionFile> for FiniteDistribution {
    type Error = Error;

    fn try_from(f: DistributionFile) -> Result<Self> {
        Self::new(f.support, f.probs)
    }
}

impl From<FiniteDistribution> for DistributionFile {
    fn from(d: FiniteDistribution) -> Self {
        Self { support: d.support, probs: d.probs }
    }
}

impl PartialEq for FiniteDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support && self.probs == other.probs
    }
}

impl FiniteDistribution {
    pub fn new(support: Vec<Point>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidInput("distribution support is empty".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidInput(format!(
                "{} support points but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let dim = support[0].dim();
        if support.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidInput("support points differ in dimension".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        let mut seen = HashSet::with_capacity(support.len());
        for p in &support {
            if !seen.insert(p.key()) {
                return Err(Error::InvalidInput(format!("duplicate support point {p:?}")));
            }
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { support, probs, cdf })
    }

    pub fn uniform(support: Vec<Point>) -> Result<Self> {
        let n = support.len().max(1);
        let probs = vec![1.0 / n as f64; support.len()];
        Self::new(support, probs)
    }

    /// Uniform over the embedded hypercube `{0,1}^d`.
    pub fn uniform_hypercube(d: usize) -> Result<Self> {
        if d == 0 || d > 20 {
            return Err(Error::InvalidInput(format!("hypercube dimension {d} out of range 1..=20")));
        }
        let support = (0..1usize << d)
            .map(|mask| {
                let bits: Vec<bool> = (0..d).map(|i| mask >> i & 1 == 1).collect();
                crate::domain::embed_hypercube(&bits)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(support)
    }

    pub fn dim(&self) -> usize {
        self.support[0].dim()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Index of the support point at quantile `u` in `[0, 1)`.
    pub fn quantile_index(&self, u: f64) -> usize {
        let i = self.cdf.partition_point(|&c| c <= u);
        // Guard against the final cdf entry landing just below 1.
        i.min(self.support.len() - 1)
    }

    /// The `index`-th i.i.d. draw of the counter stream `stream`.
    #[inline]
    pub fn draw_index(&self, stream: &CounterStream, index: u64) -> usize {
        self.quantile_index(stream.uniform_at(index))
    }

    /// Same support, new weights.
    pub fn reweighted(&self, probs: Vec<f64>) -> Result<Self> {
        Self::new(self.support.clone(), probs)
    }
}
