use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Label, LabeledSource};
use crate::sq::query::RANGE_TOLERANCE;
use crate::sq::{QueryBatch, StatQuery, Transcript, TranscriptEntry};
use crate::{seed, Error, Result};

/// A `STAT(tau)` oracle. Rounds are assigned by the caller.
pub trait StatOracle {
    /// Answers every query of `batch`, in order, as part of `round`.
    fn answer_batch(&mut self, batch: &QueryBatch, round: usize) -> Result<Vec<f64>>;

    fn answer(&mut self, q: &StatQuery, round: usize) -> Result<f64> {
        Ok(self.answer_batch(&QueryBatch::from(q.clone()), round)?[0])
    }

    fn transcript(&self) -> &Transcript;
}

/// Upper bounds on the queries a driver will issue, grouped by tolerance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub groups: Vec<(u64, f64)>,
}

impl QueryPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, count: u64, tolerance: f64) -> Self {
        self.groups.push((count, tolerance));
        self
    }

    pub fn total(&self) -> u64 {
        self.groups.iter().map(|g| g.0).sum()
    }
}

/// An SQ algorithm that can be run against any oracle.
pub trait SqDriver {
    type Output;

    /// Declared up front so simulators can size their samples.
    fn plan(&self) -> QueryPlan;

    fn run(&mut self, oracle: &mut dyn StatOracle) -> Result<Self::Output>;
}

/// Exact per-query moments of a batch over a finite source.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `E[phi(x, f(x))]`
    pub mean: Vec<f64>,
    /// `E[g(x)]`
    pub g_mean: Vec<f64>,
    /// `E[f(x) h(x)]`
    pub fh_mean: Vec<f64>,
}

/// Evaluates `batch` on both labels of every support point, enforcing the
/// range contract and the declared label-independence.
pub fn source_moments(src: &LabeledSource, batch: &QueryBatch) -> Result<Moments> {
    let k = batch.arity();
    let mut mean = vec![0.0; k];
    let mut g_mean = vec![0.0; k];
    let mut fh_mean = vec![0.0; k];
    let mut at_f = vec![0.0; k];
    let mut at_nf = vec![0.0; k];
    for (x, f, p) in src.iter() {
        batch.checked_eval_into(x, f, &mut at_f)?;
        batch.checked_eval_into(x, -f, &mut at_nf)?;
        let fv = f.value();
        for j in 0..k {
            let (pos, neg) = if f == Label::Pos { (at_f[j], at_nf[j]) } else { (at_nf[j], at_f[j]) };
            let h = (pos - neg) / 2.0;
            if !batch.label_dependent() && h.abs() > RANGE_TOLERANCE {
                return Err(Error::Contract(format!(
                    "query declared label-independent depends on the label at {x:?}"
                )));
            }
            mean[j] += p * at_f[j];
            g_mean[j] += p * (pos + neg) / 2.0;
            fh_mean[j] += p * fv * h;
        }
    }
    Ok(Moments { mean, g_mean, fh_mean })
}

pub(crate) fn record(t: &mut Transcript, batch: &QueryBatch, round: usize, answers: &[f64]) -> Result<()> {
    t.check_round(round)?;
    for &a in answers {
        t.push(TranscriptEntry {
            round,
            label_dep: batch.label_dependent(),
            tau: batch.tolerance(),
            answer: a,
            scale: batch.scale(),
        })?;
    }
    Ok(())
}

/// Answers with the exact mean, which is always a valid response.
#[derive(Debug)]
pub struct ExactOracle<'a> {
    src: &'a LabeledSource,
    transcript: Transcript,
}

impl<'a> ExactOracle<'a> {
    pub fn new(src: &'a LabeledSource) -> Self {
        Self { src, transcript: Transcript::new() }
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}

impl StatOracle for ExactOracle<'_> {
    fn answer_batch(&mut self, batch: &QueryBatch, round: usize) -> Result<Vec<f64>> {
        self.transcript.check_round(round)?;
        let m = source_moments(self.src, batch)?;
        record(&mut self.transcript, batch, round, &m.mean)?;
        Ok(m.mean)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

pub fn exact_oracle_answer(src: &LabeledSource, q: &StatQuery) -> Result<f64> {
    ExactOracle::new(src).answer(q, 0)
}

/// Ways of returning a valid but inexact answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbPolicy {
    /// Nearest multiple of `tau`.
    RoundToGrid,
    BiasUp,
    BiasDown,
    /// `exact + U(-tau, tau)`, seeded.
    Uniform { seed: u64 },
}

#[derive(Debug)]
pub struct PerturbingOracle<'a> {
    src: &'a LabeledSource,
    policy: PerturbPolicy,
    rng: Option<ChaCha8Rng>,
    transcript: Transcript,
}

impl<'a> PerturbingOracle<'a> {
    pub fn new(src: &'a LabeledSource, policy: PerturbPolicy) -> Self {
        let rng = match policy {
            PerturbPolicy::Uniform { seed } => Some(seed::rng(seed, "perturb", 0)),
            _ => None,
        };
        Self { src, policy, rng, transcript: Transcript::new() }
    }

    fn perturb(&mut self, exact: f64, tau: f64) -> f64 {
        match self.policy {
            PerturbPolicy::RoundToGrid => (exact / tau).round() * tau,
            PerturbPolicy::BiasUp => exact + tau,
            PerturbPolicy::BiasDown => exact - tau,
            PerturbPolicy::Uniform { .. } => {
                let rng = self.rng.as_mut().expect("uniform policy carries an rng");
                exact + rng.gen_range(-tau..=tau)
            }
        }
    }
}

impl StatOracle for PerturbingOracle<'_> {
    fn answer_batch(&mut self, batch: &QueryBatch, round: usize) -> Result<Vec<f64>> {
        self.transcript.check_round(round)?;
        let m = source_moments(self.src, batch)?;
        let tau = batch.tolerance();
        let answers: Vec<f64> = m.mean.iter().map(|&e| self.perturb(e, tau)).collect();
        record(&mut self.transcript, batch, round, &answers)?;
        Ok(answers)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

pub fn perturbing_oracle_answer(src: &LabeledSource, q: &StatQuery, policy: PerturbPolicy) -> Result<f64> {
    PerturbingOracle::new(src, policy).answer(q, 0)
}
