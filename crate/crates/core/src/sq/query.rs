use std::fmt;
use std::sync::Arc;

use crate::domain::Label;
use crate::{Error, Result};

/// Slack on the `[-1, 1]` range check and on the label-independence check.
pub const RANGE_TOLERANCE: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(&[f64], Label) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64], Label, &mut [f64]) + Send + Sync>;
type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A statistical query `phi: X x {-1,1} -> [-1,1]` with tolerance `tau`.
///
/// `label_dependent` is declared by the constructor and checked lazily by
/// oracles on the points they evaluate. `scale` records the factor the
/// issuer multiplies the answer by after range normalization.
#[derive(Clone)]
pub struct StatQuery {
    func: ScalarFn,
    tolerance: f64,
    label_dependent: bool,
    scale: f64,
}

impl StatQuery {
    pub fn new<F>(tolerance: f64, label_dependent: bool, f: F) -> Result<Self>
    where
        F: Fn(&[f64], Label) -> f64 + Send + Sync + 'static,
    {
        check_tolerance(tolerance)?;
        Ok(Self { func: Arc::new(f), tolerance, label_dependent, scale: 1.0 })
    }

    /// A query that only looks at the point.
    pub fn on_points<G>(tolerance: f64, g: G) -> Result<Self>
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(tolerance, false, move |x, _| g(x))
    }

    /// `phi(x, y) = y * h(x)`.
    pub fn correlational<H>(tolerance: f64, h: H) -> Result<Self>
    where
        H: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(tolerance, true, move |x, y| y.value() * h(x))
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn label_dependent(&self) -> bool {
        self.label_dependent
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: Label) -> f64 {
        (self.func)(x, y)
    }

    /// Evaluates and enforces the `[-1, 1]` range.
    pub fn checked_eval(&self, x: &[f64], y: Label) -> Result<f64> {
        let v = self.eval(x, y);
        check_range(v, x)?;
        Ok(v)
    }
}

impl fmt::Debug for StatQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StatQuery")
            .field("tolerance", &self.tolerance)
            .field("label_dependent", &self.label_dependent)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

/// `k` statistical queries sharing one evaluation routine.
///
/// Each output coordinate is an independent query for every accounting
/// purpose (transcript entries, budgets, fresh sample batches); the batch
/// only lets oracles evaluate shared sub-expressions once per point.
#[derive(Clone)]
pub struct QueryBatch {
    arity: usize,
    func: VectorFn,
    tolerance: f64,
    label_dependent: bool,
    scale: f64,
}

impl QueryBatch {
    pub fn new<F>(arity: usize, tolerance: f64, label_dependent: bool, f: F) -> Result<Self>
    where
        F: Fn(&[f64], Label, &mut [f64]) + Send + Sync + 'static,
    {
        check_tolerance(tolerance)?;
        if arity == 0 {
            return Err(Error::InvalidInput("query batch must contain at least one query".into()));
        }
        Ok(Self { arity, func: Arc::new(f), tolerance, label_dependent, scale: 1.0 })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn label_dependent(&self) -> bool {
        self.label_dependent
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], y: Label, out: &mut [f64]) {
        (self.func)(x, y, out)
    }

    pub fn checked_eval_into(&self, x: &[f64], y: Label, out: &mut [f64]) -> Result<()> {
        self.eval_into(x, y, out);
        out.iter().try_for_each(|&v| check_range(v, x))
    }

    /// Query `j` of the batch as a standalone query.
    pub fn component(&self, j: usize) -> StatQuery {
        assert!(j < self.arity);
        let func = self.func.clone();
        let k = self.arity;
        StatQuery {
            func: Arc::new(move |x, y| {
                let mut out = vec![0.0; k];
                func(x, y, &mut out);
                out[j]
            }),
            tolerance: self.tolerance,
            label_dependent: self.label_dependent,
            scale: self.scale,
        }
    }
}

impl From<StatQuery> for QueryBatch {
    fn from(q: StatQuery) -> Self {
        let f = q.func;
        Self {
            arity: 1,
            func: Arc::new(move |x, y, out| out[0] = f(x, y)),
            tolerance: q.tolerance,
            label_dependent: q.label_dependent,
            scale: q.scale,
        }
    }
}

impl fmt::Debug for QueryBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QueryBatch")
            .field("arity", &self.arity)
            .field("tolerance", &self.tolerance)
            .field("label_dependent", &self.label_dependent)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::InvalidInput(format!("query tolerance must be positive, got {tolerance}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn check_range(v: f64, x: &[f64]) -> Result<()> {
    if !(v.abs() <= 1.0 + RANGE_TOLERANCE) {
        return Err(Error::Contract(format!("query value {v} outside [-1, 1] at {x:?}")));
    }
    Ok(())
}

/// `phi(x, y) = g(x) + y h(x)`.
#[derive(Clone)]
pub struct QueryDecomposition {
    pub g: PointFn,
    pub h: PointFn,
}

impl QueryDecomposition {
    pub fn reconstruct(&self, x: &[f64], y: Label) -> f64 {
        (self.g)(x) + y.value() * (self.h)(x)
    }
}

/// Splits a query into its label-independent and correlational parts.
pub fn decompose(q: &StatQuery) -> QueryDecomposition {
    let fg = q.func.clone();
    let fh = q.func.clone();
    QueryDecomposition {
        g: Arc::new(move |x| (fg(x, Label::Pos) + fg(x, Label::Neg)) / 2.0),
        h: Arc::new(move |x| (fh(x, Label::Pos) - fh(x, Label::Neg)) / 2.0),
    }
}
