use crate::domain::Label;
use crate::sq::query::check_range;
use crate::sq::StatQuery;
use crate::{Error, Result};

/// An epsilon-local randomizer over a finite message space `0..message_count()`.
pub trait LocalRandomizer: Send + Sync {
    fn epsilon(&self) -> f64;

    fn message_count(&self) -> usize;

    /// Analytic probability of emitting `msg` on input `(x, y)`.
    fn prob(&self, x: &[f64], y: Label, msg: usize) -> Result<f64>;

    /// Samples a message by inverting the output distribution at `coin` in `[0, 1)`.
    fn apply(&self, x: &[f64], y: Label, coin: f64) -> Result<usize> {
        let k = self.message_count();
        let mut acc = 0.0;
        for msg in 0..k {
            acc += self.prob(x, y, msg)?;
            if coin < acc {
                return Ok(msg);
            }
        }
        Ok(k - 1)
    }
}

/// `(e^eps - 1) / (e^eps + 1)`; equals 1 at infinity.
pub fn rr_coefficient(epsilon: f64) -> f64 {
    (epsilon / 2.0).tanh()
}

/// Randomized response on a bounded query: message 1 is `+1`, message 0 is `-1`,
/// with `Pr[+1] = (1 + c phi) / 2`.
#[derive(Debug, Clone)]
pub struct RrRandomizer {
    query: StatQuery,
    epsilon: f64,
    c: f64,
}

pub fn rr_randomizer(query: StatQuery, epsilon: f64) -> Result<RrRandomizer> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(RrRandomizer { query, epsilon, c: rr_coefficient(epsilon) })
}

impl RrRandomizer {
    pub fn coefficient(&self) -> f64 {
        self.c
    }

    pub fn query(&self) -> &StatQuery {
        &self.query
    }

    /// `+1` or `-1`.
    pub fn message_value(msg: usize) -> f64 {
        if msg == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Unbiased estimate of `phi` from one message.
    pub fn debias(&self, msg: usize) -> f64 {
        Self::message_value(msg) / self.c
    }

    fn plus_prob(&self, x: &[f64], y: Label) -> Result<f64> {
        let v = self.query.eval(x, y);
        check_range(v, x)?;
        Ok(plus_prob(self.c, v))
    }
}

#[inline]
pub(crate) fn plus_prob(c: f64, phi: f64) -> f64 {
    (0.5 + 0.5 * c * phi).clamp(0.0, 1.0)
}

impl LocalRandomizer for RrRandomizer {
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn message_count(&self) -> usize {
        2
    }

    fn prob(&self, x: &[f64], y: Label, msg: usize) -> Result<f64> {
        let p = self.plus_prob(x, y)?;
        match msg {
            0 => Ok(1.0 - p),
            1 => Ok(p),
            _ => Err(Error::InvalidInput(format!("message {msg} outside the binary message space"))),
        }
    }

    fn apply(&self, x: &[f64], y: Label, coin: f64) -> Result<usize> {
        Ok(usize::from(coin < self.plus_prob(x, y)?))
    }
}

/// Largest `prob(z1, w) / prob(z2, w)` over the given inputs and all messages.
///
/// A message that is impossible on one input but not on another gives infinity.
pub fn verify_randomizer_privacy(r: &dyn LocalRandomizer, samples: &[(Vec<f64>, Label)]) -> Result<f64> {
    let k = r.message_count();
    let mut table = Vec::with_capacity(samples.len());
    for (x, y) in samples {
        let row = (0..k).map(|w| r.prob(x, *y, w)).collect::<Result<Vec<f64>>>()?;
        table.push(row);
    }
    let mut worst: f64 = if samples.is_empty() { 0.0 } else { 1.0 };
    for w in 0..k {
        let hi = table.iter().map(|r| r[w]).fold(f64::NEG_INFINITY, f64::max);
        let lo = table.iter().map(|r| r[w]).fold(f64::INFINITY, f64::min);
        if hi <= 0.0 {
            continue;
        }
        worst = worst.max(if lo <= 0.0 { f64::INFINITY } else { hi / lo });
    }
    Ok(worst)
}
