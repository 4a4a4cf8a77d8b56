use std::ops::Range;

use crate::domain::ExampleStore;
use crate::ldp::{LocalRandomizer, PrivacyLedger, RrRandomizer};
use crate::seed::CounterStream;
use crate::sq::StatQuery;
use crate::{Error, Result};

/// The `LR_S` oracle: applies client-chosen randomizers to single examples,
/// refusing any call that would overspend an index.
pub struct LrOracle<'a> {
    store: &'a dyn ExampleStore,
    ledger: PrivacyLedger,
    coins: CounterStream,
    calls: u64,
}

impl<'a> LrOracle<'a> {
    pub fn new(store: &'a dyn ExampleStore, epsilon: f64, seed: u64) -> Self {
        Self { store, ledger: PrivacyLedger::new(epsilon), coins: CounterStream::new(seed), calls: 0 }
    }

    pub fn ledger(&self) -> &PrivacyLedger {
        &self.ledger
    }

    pub fn invoke(&mut self, i: u64, r: &dyn LocalRandomizer) -> Result<usize> {
        let coin = self.coins.uniform_at(self.calls);
        let msg = lr_invoke_with_coin(&mut self.ledger, self.store, i, r, coin)?;
        self.calls += 1;
        Ok(msg)
    }
}

/// Applies `r` to example `i` and charges its epsilon to that index.
pub fn lr_invoke(
    ledger: &mut PrivacyLedger,
    store: &dyn ExampleStore,
    i: u64,
    r: &dyn LocalRandomizer,
    seed: u64,
) -> Result<usize> {
    let coin = CounterStream::new(seed).uniform_at(i);
    lr_invoke_with_coin(ledger, store, i, r, coin)
}

fn lr_invoke_with_coin(
    ledger: &mut PrivacyLedger,
    store: &dyn ExampleStore,
    i: u64,
    r: &dyn LocalRandomizer,
    coin: f64,
) -> Result<usize> {
    if i >= store.len() {
        return Err(Error::InvalidInput(format!("index {i} outside a store of {} examples", store.len())));
    }
    ledger.check(i, r.epsilon())?;
    let mut out = Ok(0);
    store.with_example(i, &mut |x, y| out = r.apply(x, y, coin));
    let msg = out?;
    ledger.charge(i, r.epsilon())?;
    Ok(msg)
}

/// Randomized-response estimate of `E[phi]` from the examples in `indices`,
/// each used once. Clamped to `[-1, 1]`.
pub fn ldp_estimate_mean(
    store: &dyn ExampleStore,
    indices: Range<u64>,
    phi: &StatQuery,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let r = crate::ldp::rr_randomizer(phi.clone(), epsilon)?;
    let mut ledger = PrivacyLedger::new(epsilon);
    let n = indices.end - indices.start;
    let mut sum = 0.0;
    for i in indices {
        sum += RrRandomizer::message_value(lr_invoke(&mut ledger, store, i, &r, seed)?);
    }
    Ok((sum / (r.coefficient() * n as f64)).clamp(-1.0, 1.0))
}
