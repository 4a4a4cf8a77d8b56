use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{FiniteDistribution, Label, Point};
use crate::lowerbound::lp::LinearProgram;
use crate::sq::query::check_range;
use crate::{Error, Result};

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Functions `h_1..h_m: X -> [-1, 1]`.
#[derive(Clone, Default)]
pub struct HypothesisSet {
    funcs: Vec<PointFn>,
}

impl fmt::Debug for HypothesisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypothesisSet").field("m", &self.funcs.len()).finish()
    }
}

impl HypothesisSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with<H>(mut self, h: H) -> Self
    where
        H: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.funcs.push(Arc::new(h));
        self
    }

    pub fn push_fn(&mut self, h: PointFn) {
        self.funcs.push(h);
    }

    /// One function per row, given by its values on `points`.
    pub fn from_table(points: &[Point], rows: Vec<Vec<f64>>) -> Result<Self> {
        let keys: Vec<Vec<u64>> = points.iter().map(Point::key).collect();
        let mut set = Self::new();
        for row in rows {
            if row.len() != points.len() {
                return Err(Error::InvalidInput("hypothesis table row has the wrong length".into()));
            }
            let keys = keys.clone();
            set.funcs.push(Arc::new(move |x: &[f64]| {
                let k = crate::domain::point_key(x);
                keys.iter().position(|q| *q == k).map_or(f64::NAN, |i| row[i])
            }));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    /// `values[i][x]`, range-checked.
    pub fn tabulate(&self, points: &[Point]) -> Result<Vec<Vec<f64>>> {
        self.funcs
            .iter()
            .map(|h| {
                points
                    .iter()
                    .map(|p| {
                        let v = h(p.coords());
                        check_range(v, p.coords())?;
                        Ok(v)
                    })
                    .collect()
            })
            .collect()
    }
}

/// A distribution on which `f` is weakly correlated with every `h_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialCertificate {
    #[serde(rename = "D")]
    pub dist: FiniteDistribution,
    /// `max_i |E_D[f h_i]|`, recomputed from `dist`.
    pub value: f64,
    /// `f` on the support of `dist`, in order.
    pub target: Vec<Label>,
    pub lp_value: f64,
    pub duality_gap: f64,
}

impl AdversarialCertificate {
    /// Recomputes `max_i |E_D[f h_i]|`.
    pub fn recompute(&self, set: &HypothesisSet) -> Result<f64> {
        max_correlation(self.dist.probs(), &self.target, &set.tabulate(self.dist.support())?)
    }
}

pub(crate) fn max_correlation(d: &[f64], f: &[Label], h: &[Vec<f64>]) -> Result<f64> {
    Ok(h.iter()
        .map(|row| d.iter().zip(f).zip(row).map(|((p, y), v)| p * y.value() * v).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

/// Denominator used to snap the optimal distribution onto a dyadic grid,
/// where sums of probabilities are exact in `f64`.
const DYADIC: f64 = (1u64 << 40) as f64;

fn snap(d: &[f64]) -> Vec<f64> {
    let units: Vec<i64> = d.iter().map(|p| (p.max(0.0) * DYADIC).round() as i64).collect();
    let total: i64 = units.iter().sum();
    let mut units = units;
    let big = (0..units.len()).max_by_key(|&i| units[i]).unwrap_or(0);
    units[big] += (1i64 << 40) - total;
    units.into_iter().map(|u| u as f64 / DYADIC).collect()
}

/// Solves `min t` subject to `-t <= sum_x D(x) f(x) h_i(x) <= t`, `D` a
/// distribution on `points`.
pub fn worst_correlation_distribution(
    f: &[Label],
    set: &HypothesisSet,
    points: &[Point],
) -> Result<AdversarialCertificate> {
    let n = points.len();
    if n == 0 || f.len() != n {
        return Err(Error::InvalidInput("target must be given on a nonempty point list".into()));
    }
    let h = set.tabulate(points)?;
    let mut a_ub = Vec::with_capacity(2 * h.len());
    for row in &h {
        let a: Vec<f64> = row.iter().zip(f).map(|(v, y)| v * y.value()).collect();
        a_ub.push(a.iter().copied().chain([-1.0]).collect());
        a_ub.push(a.iter().map(|v| -v).chain([-1.0]).collect());
    }
    let lp = LinearProgram {
        c: (0..n).map(|_| 0.0).chain([1.0]).collect(),
        b_ub: vec![0.0; a_ub.len()],
        a_ub,
        a_eq: vec![(0..n).map(|_| 1.0).chain([0.0]).collect()],
        b_eq: vec![1.0],
    };
    let sol = lp.solve()?;
    let probs = snap(&sol.x[..n]);
    let value = max_correlation(&probs, f, &h)?;
    if (value - sol.value).abs() > 1e-7 {
        return Err(Error::Solver(format!(
            "snapped distribution has value {value}, LP optimum {}",
            sol.value
        )));
    }
    Ok(AdversarialCertificate {
        dist: FiniteDistribution::new(points.to_vec(), probs)?,
        value,
        target: f.to_vec(),
        lp_value: sol.value,
        duality_gap: sol.gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverVerdict {
    pub covered: bool,
    /// Index into the class and the distribution witnessing non-coverage.
    pub witness: Option<(usize, AdversarialCertificate)>,
    /// LP value per class member.
    pub values: Vec<f64>,
}

/// Whether every `f` in `class` has, on every distribution, some `h_i`
/// with `|E[f h_i]| >= threshold`.
pub fn correlation_cover_check(
    set: &HypothesisSet,
    class: &[Vec<Label>],
    points: &[Point],
    threshold: f64,
) -> Result<CoverVerdict> {
    let certs: Vec<AdversarialCertificate> = class
        .par_iter()
        .map(|f| worst_correlation_distribution(f, set, points))
        .collect::<Result<_>>()?;
    let values = certs.iter().map(|c| c.value).collect();
    let witness = certs.into_iter().enumerate().find(|(_, c)| c.value < threshold);
    Ok(CoverVerdict { covered: witness.is_none(), witness, values })
}
