use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::ExampleStore;
use crate::ldp::randomizer::plus_prob;
use crate::ldp::{rr_coefficient, PrivacyLedger};
use crate::seed::{self, CounterStream};
use crate::sq::query::check_range;
use crate::sq::{adaptivity_profile, source_moments, QueryBatch, QueryPlan, SqDriver, StatOracle, Transcript, TranscriptEntry};
use crate::{Error, Result};

/// How a simulated oracle turns a batch of randomized bits into an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Backend {
    /// Randomize every example individually. Only the drawn label is ever
    /// evaluated, so a query mislabeled as label-independent goes unnoticed.
    #[default]
    PerSample,
    /// Draw the batch's count of `+1` messages from its exact binomial law.
    /// Needs a store sampled i.i.d. from a known population.
    Aggregate,
}

/// Queries answered at one `(round, label_dep, tau)`, with the samples they used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub round: usize,
    pub label_dep: bool,
    pub tau: f64,
    pub queries: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpProtocolReport {
    pub rounds: usize,
    pub label_dependent_rounds: Vec<usize>,
    pub n: u64,
    pub epsilon: f64,
    pub max_spent: f64,
    pub backend: Backend,
    pub queries: Vec<QueryRecord>,
}

impl LdpProtocolReport {
    pub fn non_interactive(&self) -> bool {
        self.rounds <= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdpCompileConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Answer every query to this tolerance instead of the one it declares.
    pub tau: Option<f64>,
    pub seed: u64,
    pub backend: Backend,
}

impl LdpCompileConfig {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Self {
        Self { epsilon, delta, tau: None, seed, backend: Backend::PerSample }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

/// `ceil(8 ln(2t/delta) / (c^2 tau^2))`, saturating.
pub fn ldp_batch_size(epsilon: f64, tau: f64, t: u64, delta: f64) -> u64 {
    let c = rr_coefficient(epsilon);
    ceil_count(8.0 * (2.0 * t.max(1) as f64 / delta).ln() / (c * c * tau * tau))
}

pub(crate) fn ceil_count(v: f64) -> u64 {
    // `as` saturates, and there is no sample store that large anyway
    v.ceil().max(1.0) as u64
}

/// Samples needed to answer `plan` with fresh batches.
pub fn ldp_required_samples(plan: &QueryPlan, epsilon: f64, delta: f64, tau: Option<f64>) -> u64 {
    required(plan, tau, |tau, t| ldp_batch_size(epsilon, tau, t, delta))
}

pub(crate) fn required(plan: &QueryPlan, tau: Option<f64>, batch: impl Fn(f64, u64) -> u64) -> u64 {
    let t = plan.total();
    plan.groups
        .iter()
        .fold(0u64, |acc, &(count, tol)| acc.saturating_add(count.saturating_mul(batch(tau.unwrap_or(tol), t))))
}

/// The per-example mechanism a simulated oracle runs: a `+1/-1` message
/// with mean `coefficient * phi`, plus its accounting.
pub(crate) trait Channel {
    fn coefficient(&self) -> f64;

    fn batch_size(&self, tau: f64, t: u64, delta: f64) -> u64;

    /// Charges one use to every index of `range`, atomically.
    fn charge(&mut self, range: Range<u64>) -> Result<()>;
}

pub(crate) struct LdpChannel {
    epsilon: f64,
    pub(crate) ledger: PrivacyLedger,
}

impl Channel for LdpChannel {
    fn coefficient(&self) -> f64 {
        rr_coefficient(self.epsilon)
    }

    fn batch_size(&self, tau: f64, t: u64, delta: f64) -> u64 {
        ldp_batch_size(self.epsilon, tau, t, delta)
    }

    fn charge(&mut self, range: Range<u64>) -> Result<()> {
        self.ledger.charge_range(range, self.epsilon)
    }
}

/// A `STAT(tau)` oracle simulated on examples, one fresh batch per query.
pub(crate) struct SimulatedOracle<'a, C> {
    store: &'a dyn ExampleStore,
    pub(crate) channel: C,
    t: u64,
    issued: u64,
    delta: f64,
    tau: Option<f64>,
    backend: Backend,
    seed: u64,
    coins: CounterStream,
    cursor: u64,
    transcript: Transcript,
    pub(crate) records: Vec<QueryRecord>,
}

impl<'a, C: Channel> SimulatedOracle<'a, C> {
    pub(crate) fn new(
        store: &'a dyn ExampleStore,
        channel: C,
        t: u64,
        delta: f64,
        tau: Option<f64>,
        backend: Backend,
        seed: u64,
    ) -> Self {
        Self {
            store,
            channel,
            t,
            issued: 0,
            delta,
            tau,
            backend,
            seed,
            coins: CounterStream::new(seed::derive(seed, "coins", 0)),
            cursor: 0,
            transcript: Transcript::new(),
            records: Vec::new(),
        }
    }

    pub(crate) fn samples_used(&self) -> u64 {
        self.cursor
    }

    pub(crate) fn into_transcript(self) -> Transcript {
        self.transcript
    }

    fn ones_per_sample(&self, batch: &QueryBatch, j: usize, range: Range<u64>) -> Result<u64> {
        let c = self.channel.coefficient();
        let k = batch.arity();
        let coins = self.coins;
        let store = self.store;
        range
            .into_par_iter()
            .map_init(
                || vec![0.0; k],
                |buf, i| {
                    let mut bit = Ok(0u64);
                    store.with_example(i, &mut |x, y| {
                        batch.eval_into(x, y, buf);
                        bit = check_range(buf[j], x).map(|_| u64::from(coins.uniform_at(i) < plus_prob(c, buf[j])));
                    });
                    bit
                },
            )
            .try_reduce(|| 0, |a, b| Ok(a + b))
    }

    fn ones_aggregate(&self, means: &[f64], j: usize, range: Range<u64>) -> Result<u64> {
        let n = range.end - range.start;
        let p = plus_prob(self.channel.coefficient(), means[j]);
        let mut rng: ChaCha8Rng = ChaCha8Rng::seed_from_u64(seed::derive(self.seed, "aggregate", range.start));
        let law = Binomial::new(n, p).map_err(|e| Error::InvalidInput(format!("binomial({n}, {p}): {e}")))?;
        Ok(law.sample(&mut rng))
    }

    fn push_record(&mut self, round: usize, label_dep: bool, tau: f64, queries: u64, samples: u64) {
        if let Some(last) = self.records.last_mut() {
            if last.round == round && last.label_dep == label_dep && last.tau == tau {
                last.queries += queries;
                last.samples += samples;
                return;
            }
        }
        self.records.push(QueryRecord { round, label_dep, tau, queries, samples });
    }
}

impl<C: Channel> StatOracle for SimulatedOracle<'_, C> {
    fn answer_batch(&mut self, batch: &QueryBatch, round: usize) -> Result<Vec<f64>> {
        self.transcript.check_round(round)?;
        let k = batch.arity() as u64;
        if self.issued + k > self.t {
            return Err(Error::Protocol(format!(
                "driver issued more than the {} queries it planned",
                self.t
            )));
        }
        let tau = self.tau.unwrap_or(batch.tolerance());
        let n = self.channel.batch_size(tau, self.t, self.delta);
        let total = n.saturating_mul(k);
        let end = self.cursor.saturating_add(total);
        if end > self.store.len() {
            return Err(Error::Sizing { required: end, available: self.store.len() });
        }
        self.channel.charge(self.cursor..end)?;

        let means = match self.backend {
            Backend::PerSample => None,
            Backend::Aggregate => {
                let pop = self.store.population().ok_or_else(|| {
                    Error::InvalidInput("aggregate backend needs a store drawn from a known population".into())
                })?;
                Some(source_moments(pop, batch)?.mean)
            }
        };
        let c = self.channel.coefficient();
        let mut answers = Vec::with_capacity(k as usize);
        for j in 0..k as usize {
            let start = self.cursor + j as u64 * n;
            let range = start..start + n;
            let ones = match &means {
                None => self.ones_per_sample(batch, j, range)?,
                Some(m) => self.ones_aggregate(m, j, range)?,
            };
            let mean = (2.0 * ones as f64 - n as f64) / n as f64;
            answers.push((mean / c).clamp(-1.0, 1.0));
        }
        self.cursor = end;
        self.issued += k;
        for &a in &answers {
            self.transcript.push(TranscriptEntry {
                round,
                label_dep: batch.label_dependent(),
                tau,
                answer: a,
                scale: batch.scale(),
            })?;
        }
        self.push_record(round, batch.label_dependent(), tau, k, total);
        Ok(answers)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

pub(crate) fn check_tau(tau: Option<f64>) -> Result<()> {
    match tau {
        Some(t) if !(t > 0.0 && t.is_finite()) => {
            Err(Error::InvalidInput(format!("tolerance must be positive, got {t}")))
        }
        _ => Ok(()),
    }
}

/// Runs an SQ algorithm with every query answered by randomized response on
/// a fresh batch of examples.
///
/// Returns the driver's output, the report and the transcript.
pub fn compile_sq_to_ldp<D: SqDriver + ?Sized>(
    driver: &mut D,
    store: &dyn ExampleStore,
    cfg: &LdpCompileConfig,
) -> Result<(D::Output, LdpProtocolReport, Transcript)> {
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", cfg.epsilon)));
    }
    check_delta(cfg.delta)?;
    check_tau(cfg.tau)?;
    let plan = driver.plan();
    let needed = ldp_required_samples(&plan, cfg.epsilon, cfg.delta, cfg.tau);
    if needed > store.len() {
        return Err(Error::Sizing { required: needed, available: store.len() });
    }
    let channel = LdpChannel { epsilon: cfg.epsilon, ledger: PrivacyLedger::new(cfg.epsilon) };
    let mut oracle = SimulatedOracle::new(store, channel, plan.total(), cfg.delta, cfg.tau, cfg.backend, cfg.seed);
    let out = driver.run(&mut oracle)?;
    let profile = adaptivity_profile(oracle.transcript());
    let report = LdpProtocolReport {
        rounds: profile.rounds,
        label_dependent_rounds: profile.label_dependent_rounds.iter().copied().collect(),
        n: oracle.samples_used(),
        epsilon: cfg.epsilon,
        max_spent: oracle.channel.ledger.max_spent(),
        backend: cfg.backend,
        queries: std::mem::take(&mut oracle.records),
    };
    Ok((out, report, oracle.into_transcript()))
}
