//! Bounded communication: bit extractors, the `COMM_S` oracle and the
//! SQ-to-COMM compiler.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::domain::{ExampleStore, Label};
use crate::ldp::{
    ceil_count, check_delta, check_tau, plus_prob, required, Backend, BitLedger, Channel, QueryRecord, SimulatedOracle,
};
use crate::seed::CounterStream;
use crate::sq::query::check_range;
use crate::sq::{adaptivity_profile, QueryPlan, SqDriver, StatOracle, StatQuery, Transcript};
use crate::{Error, Result};

/// A randomized map from an example to exactly `bits()` bits.
pub trait BitExtractor: Send + Sync {
    fn bits(&self) -> u32;

    /// One uniform coin in `[0, 1)` per output bit.
    fn apply(&self, x: &[f64], y: Label, coins: &[f64]) -> Result<Vec<bool>>;
}

/// Emits `1` with probability `(1 + phi) / 2`.
#[derive(Debug, Clone)]
pub struct OneBitExtractor {
    query: StatQuery,
}

pub fn one_bit_extractor(query: StatQuery) -> OneBitExtractor {
    OneBitExtractor { query }
}

impl OneBitExtractor {
    pub fn one_prob(&self, x: &[f64], y: Label) -> Result<f64> {
        let v = self.query.eval(x, y);
        check_range(v, x)?;
        Ok(plus_prob(1.0, v))
    }

    /// `2b - 1`, unbiased for `phi`.
    pub fn debias(bit: bool) -> f64 {
        if bit {
            1.0
        } else {
            -1.0
        }
    }
}

impl BitExtractor for OneBitExtractor {
    fn bits(&self) -> u32 {
        1
    }

    fn apply(&self, x: &[f64], y: Label, coins: &[f64]) -> Result<Vec<bool>> {
        Ok(vec![coins[0] < self.one_prob(x, y)?])
    }
}

/// Applies `r` to example `i` and charges its bits to that index.
pub fn comm_invoke(
    ledger: &mut BitLedger,
    store: &dyn ExampleStore,
    i: u64,
    r: &dyn BitExtractor,
    seed: u64,
) -> Result<Vec<bool>> {
    if i >= store.len() {
        return Err(Error::InvalidInput(format!("index {i} outside a store of {} examples", store.len())));
    }
    ledger.check(i, r.bits())?;
    let stream = CounterStream::new(seed);
    let coins: Vec<f64> = (0..u64::from(r.bits()))
        .map(|b| stream.uniform_at(i.wrapping_mul(64).wrapping_add(b)))
        .collect();
    let mut out = Ok(Vec::new());
    store.with_example(i, &mut |x, y| out = r.apply(x, y, &coins));
    let bits = out?;
    if bits.len() != r.bits() as usize {
        return Err(Error::Contract(format!("extractor declared {} bits but emitted {}", r.bits(), bits.len())));
    }
    ledger.charge(i, r.bits())?;
    Ok(bits)
}

/// `ceil(2 ln(2t/delta) / tau^2)`.
pub fn comm_batch_size(tau: f64, t: u64, delta: f64) -> u64 {
    ceil_count(2.0 * (2.0 * t.max(1) as f64 / delta).ln() / (tau * tau))
}

pub fn comm_required_samples(plan: &QueryPlan, delta: f64, tau: Option<f64>) -> u64 {
    required(plan, tau, |tau, t| comm_batch_size(tau, t, delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommProtocolReport {
    pub rounds: usize,
    pub label_dependent_rounds: Vec<usize>,
    pub n: u64,
    pub bits: u32,
    pub max_spent: u32,
    pub backend: Backend,
    pub queries: Vec<QueryRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommCompileConfig {
    pub delta: f64,
    pub tau: Option<f64>,
    pub seed: u64,
    pub backend: Backend,
}

impl CommCompileConfig {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self { delta, tau: None, seed, backend: Backend::PerSample }
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

struct CommChannel {
    ledger: BitLedger,
}

impl Channel for CommChannel {
    fn coefficient(&self) -> f64 {
        1.0
    }

    fn batch_size(&self, tau: f64, t: u64, delta: f64) -> u64 {
        comm_batch_size(tau, t, delta)
    }

    fn charge(&mut self, range: Range<u64>) -> Result<()> {
        self.ledger.charge_range(range, 1)
    }
}

/// Runs an SQ algorithm with every query answered by one extracted bit from
/// each example of a fresh batch.
pub fn compile_sq_to_comm<D: SqDriver + ?Sized>(
    driver: &mut D,
    store: &dyn ExampleStore,
    cfg: &CommCompileConfig,
) -> Result<(D::Output, CommProtocolReport, Transcript)> {
    check_delta(cfg.delta)?;
    check_tau(cfg.tau)?;
    let plan = driver.plan();
    let needed = comm_required_samples(&plan, cfg.delta, cfg.tau);
    if needed > store.len() {
        return Err(Error::Sizing { required: needed, available: store.len() });
    }
    let channel = CommChannel { ledger: BitLedger::new(1) };
    let mut oracle = SimulatedOracle::new(store, channel, plan.total(), cfg.delta, cfg.tau, cfg.backend, cfg.seed);
    let out = driver.run(&mut oracle)?;
    let profile = adaptivity_profile(oracle.transcript());
    let report = CommProtocolReport {
        rounds: profile.rounds,
        label_dependent_rounds: profile.label_dependent_rounds.iter().copied().collect(),
        n: oracle.samples_used(),
        bits: 1,
        max_spent: oracle.channel.ledger.max_spent(),
        backend: cfg.backend,
        queries: std::mem::take(&mut oracle.records),
    };
    Ok((out, report, oracle.into_transcript()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{Dataset, VirtualDataset};
    use crate::ldp::compiler_fixtures::{queries, source, Fixed};
    use crate::ldp::ldp_required_samples;
    use crate::sq::ExactOracle;
    use proptest::prelude::*;

    fn ext(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> OneBitExtractor {
        one_bit_extractor(StatQuery::on_points(0.1, f).unwrap())
    }

    #[test]
    fn extractor_probabilities() {
        assert_eq!(ext(|_| 1.0).one_prob(&[0.0], Label::Pos).unwrap(), 1.0);
        assert_eq!(ext(|_| 0.0).one_prob(&[0.0], Label::Pos).unwrap(), 0.5);
        assert_eq!(ext(|_| 0.5).one_prob(&[0.0], Label::Pos).unwrap(), 0.75);
        assert!(ext(|_| 1.5).one_prob(&[0.0], Label::Pos).is_err());
    }

    #[test]
    fn debiased_bit_is_unbiased() {
        for v in [-1.0, -0.3, 0.0, 0.77, 1.0] {
            let p = ext(move |_| v).one_prob(&[0.0], Label::Neg).unwrap();
            let e = p * OneBitExtractor::debias(true) + (1.0 - p) * OneBitExtractor::debias(false);
            assert!((e - v).abs() < 1e-12);
        }
    }

    #[test]
    fn bit_budget() {
        let s = Dataset::from_examples(1, (0..4).map(|i| (vec![i as f64 / 4.0], Label::Pos)), 0).unwrap();
        let e = ext(|x| x[0]);
        let mut l = BitLedger::new(1);
        assert_eq!(comm_invoke(&mut l, &s, 2, &e, 1).unwrap().len(), 1);
        assert!(matches!(comm_invoke(&mut l, &s, 2, &e, 1), Err(Error::BudgetExceeded { .. })));
        let mut l = BitLedger::new(3);
        for _ in 0..3 {
            comm_invoke(&mut l, &s, 0, &e, 1).unwrap();
        }
        assert_eq!(l.spent(0), 3);
        assert!(comm_invoke(&mut l, &s, 0, &e, 1).is_err());
    }

    #[test]
    fn fewer_samples_than_ldp() {
        let plan = QueryPlan::new().with(10, 0.1);
        assert!(comm_required_samples(&plan, 0.1, None) < ldp_required_samples(&plan, 1.0, 0.1, None));
        assert_eq!(comm_batch_size(0.1, 10, 0.1), (200.0 * 200f64.ln()).ceil() as u64);
    }

    #[test]
    fn compiled_answers_are_valid_and_one_round() {
        let src = Arc::new(source(9));
        let exact: Vec<f64> = {
            let mut o = ExactOracle::new(&src);
            queries(0.1).iter().map(|q| o.answer(q, 0).unwrap()).collect()
        };
        let mut d = Fixed(queries(0.1));
        let n = comm_required_samples(&d.plan(), 0.1, None);
        let store = VirtualDataset::new(src, n, 1);
        let (a, rep, _) = compile_sq_to_comm(&mut d, &store, &CommCompileConfig::new(0.1, 4)).unwrap();
        assert_eq!(rep.rounds, 1);
        assert_eq!(rep.max_spent, 1);
        for (x, e) in a.iter().zip(&exact) {
            assert!((x - e).abs() <= 0.1);
        }
    }

    proptest! {
        #[test]
        fn bit_ledger_safety(calls in prop::collection::vec(0u64..4, 1..40)) {
            let s = Dataset::from_examples(1, (0..4).map(|i| (vec![i as f64 / 4.0], Label::Pos)), 0).unwrap();
            let e = ext(|x| x[0]);
            let mut l = BitLedger::new(2);
            let mut count = [0u32; 4];
            for i in calls {
                let ok = comm_invoke(&mut l, &s, i, &e, 3).is_ok();
                prop_assert_eq!(ok, count[i as usize] < 2);
                if ok { count[i as usize] += 1; }
                prop_assert!(l.spent(i) <= 2);
            }
        }
    }
}
