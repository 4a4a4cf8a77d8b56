use crate::domain::LabeledSource;
use crate::sq::oracle::{record, source_moments};
use crate::sq::{QueryBatch, StatOracle, Transcript};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdversarialOracleConfig {
    pub src: LabeledSource,
    /// Query budget; the oracle's tolerance is `1 / m`.
    pub m: usize,
}

impl AdversarialOracleConfig {
    pub fn new(src: LabeledSource, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("adversarial oracle needs m >= 1".into()));
        }
        Ok(Self { src, m })
    }

    pub fn threshold(&self) -> f64 {
        1.0 / self.m as f64
    }
}

/// The `STAT(1/m)` oracle that hides weak label correlations.
///
/// For `phi = g + y h` it returns the exact mean when `|E_D[f h]| >= 1/m`
/// and `E_D[g]` otherwise. In the second branch the answer is off by
/// `|E_D[f h]| < 1/m`, so every response is valid.
#[derive(Debug)]
pub struct AdversarialOracle {
    cfg: AdversarialOracleConfig,
    issued: usize,
    correlated: Vec<bool>,
    transcript: Transcript,
}

impl AdversarialOracle {
    pub fn new(cfg: AdversarialOracleConfig) -> Self {
        Self { cfg, issued: 0, correlated: Vec::new(), transcript: Transcript::new() }
    }

    pub fn config(&self) -> &AdversarialOracleConfig {
        &self.cfg
    }

    pub fn issued(&self) -> usize {
        self.issued
    }

    /// Per answered query: whether it took the exact (correlated) branch.
    pub fn correlated_branches(&self) -> &[bool] {
        &self.correlated
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}

impl StatOracle for AdversarialOracle {
    fn answer_batch(&mut self, batch: &QueryBatch, round: usize) -> Result<Vec<f64>> {
        if self.issued + batch.arity() > self.cfg.m {
            return Err(Error::QueryBudget { issued: self.issued + batch.arity(), budget: self.cfg.m });
        }
        self.transcript.check_round(round)?;
        let mo = source_moments(&self.cfg.src, batch)?;
        let threshold = self.cfg.threshold();
        let mut answers = Vec::with_capacity(batch.arity());
        for j in 0..batch.arity() {
            let hit = mo.fh_mean[j].abs() >= threshold;
            self.correlated.push(hit);
            answers.push(if hit { mo.mean[j] } else { mo.g_mean[j] });
        }
        self.issued += batch.arity();
        record(&mut self.transcript, batch, round, &answers)?;
        Ok(answers)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}
