use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Range};

use crate::{Error, Result};

/// A per-index budget quantity (privacy loss or extracted bits).
pub trait BudgetUnit: Copy + Debug + Default + PartialOrd + Add<Output = Self> {
    fn fits(spent: Self, amount: Self, cap: Self) -> bool;
    fn as_f64(self) -> f64;
}

impl BudgetUnit for f64 {
    fn fits(spent: f64, amount: f64, cap: f64) -> bool {
        // Sums like 0.1 + 0.2 land an ulp above 0.3.
        spent + amount <= cap + 1e-12 * cap.abs().max(1.0)
    }

    fn as_f64(self) -> f64 {
        self
    }
}

impl BudgetUnit for u32 {
    fn fits(spent: u32, amount: u32, cap: u32) -> bool {
        spent.checked_add(amount).is_some_and(|s| s <= cap)
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

/// Per-index composition accounting with a uniform cap.
///
/// Spending is stored as disjoint half-open index spans, so charging a
/// whole fresh batch costs O(log spans) regardless of its length.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger<B> {
    cap: B,
    spans: BTreeMap<u64, (u64, B)>,
}

/// Privacy loss per client; the cap is the protocol's epsilon.
pub type PrivacyLedger = Ledger<f64>;
/// Extracted bits per sample.
pub type BitLedger = Ledger<u32>;

impl<B: BudgetUnit> Ledger<B> {
    pub fn new(cap: B) -> Self {
        Self { cap, spans: BTreeMap::new() }
    }

    pub fn cap(&self) -> B {
        self.cap
    }

    pub fn spent(&self, i: u64) -> B {
        match self.spans.range(..=i).next_back() {
            Some((_, &(end, s))) if i < end => s,
            _ => B::default(),
        }
    }

    /// Largest amount charged to any index.
    pub fn max_spent(&self) -> B {
        self.spans
            .values()
            .map(|&(_, s)| s)
            .fold(B::default(), |a, b| if b > a { b } else { a })
    }

    /// Number of indices with nonzero spending.
    pub fn touched(&self) -> u64 {
        self.spans.iter().map(|(&s, &(e, _))| e - s).sum()
    }

    /// Refuses (without recording) if any index would exceed the cap.
    pub fn check_range(&self, range: Range<u64>, amount: B) -> Result<()> {
        let mut cursor = range.start;
        for (s, e, spent) in self.overlapping(range.clone()) {
            if cursor < s && !B::fits(B::default(), amount, self.cap) {
                return Err(self.exceeded(cursor, B::default(), amount));
            }
            if !B::fits(spent, amount, self.cap) {
                return Err(self.exceeded(s.max(range.start), spent, amount));
            }
            cursor = e;
        }
        if cursor < range.end && !B::fits(B::default(), amount, self.cap) {
            return Err(self.exceeded(cursor, B::default(), amount));
        }
        Ok(())
    }

    pub fn check(&self, i: u64, amount: B) -> Result<()> {
        self.check_range(i..i + 1, amount)
    }

    pub fn charge(&mut self, i: u64, amount: B) -> Result<()> {
        self.charge_range(i..i + 1, amount)
    }

    /// Charges `amount` to every index in `range`, or nothing at all.
    pub fn charge_range(&mut self, range: Range<u64>, amount: B) -> Result<()> {
        if range.is_empty() {
            return Ok(());
        }
        self.check_range(range.clone(), amount)?;
        let old = self.overlapping(range.clone());
        for &(s, _, _) in &old {
            self.spans.remove(&s);
        }
        let mut cursor = range.start;
        for (s, e, spent) in old {
            if s < range.start {
                self.spans.insert(s, (range.start, spent));
            }
            if cursor < s {
                self.spans.insert(cursor, (s, amount));
            }
            let lo = s.max(range.start);
            let hi = e.min(range.end);
            self.spans.insert(lo, (hi, spent + amount));
            if e > range.end {
                self.spans.insert(range.end, (e, spent));
            }
            cursor = hi;
        }
        if cursor < range.end {
            self.spans.insert(cursor, (range.end, amount));
        }
        Ok(())
    }

    fn overlapping(&self, range: Range<u64>) -> Vec<(u64, u64, B)> {
        let mut out = Vec::new();
        if let Some((&s, &(e, spent))) = self.spans.range(..range.start).next_back() {
            if e > range.start {
                out.push((s, e, spent));
            }
        }
        out.extend(self.spans.range(range.start..range.end).map(|(&s, &(e, spent))| (s, e, spent)));
        out
    }

    fn exceeded(&self, index: u64, spent: B, amount: B) -> Error {
        Error::BudgetExceeded {
            index,
            spent: spent.as_f64(),
            requested: amount.as_f64(),
            cap: self.cap.as_f64(),
        }
    }
}
