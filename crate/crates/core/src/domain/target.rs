use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::point::point_key;
use crate::domain::{dot, norm, Label, Point, BALL_TOLERANCE};
use crate::{Error, Result};

/// Anything that labels points.
pub trait Classifier {
    fn classify(&self, x: &[f64]) -> Result<Label>;
}

impl<F> Classifier for F
where
    F: Fn(&[f64]) -> Label,
{
    fn classify(&self, x: &[f64]) -> Result<Label> {
        Ok(self(x))
    }
}

/// One rule of a decision list: "if bit `var` equals `polarity`, output `output`".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DlItem {
    pub var: usize,
    pub polarity: bool,
    pub output: Label,
}

impl DlItem {
    #[inline]
    pub fn fires(&self, x: &[f64]) -> bool {
        (x[self.var] > 0.0) == self.polarity
    }
}

/// A lookup table from points to labels.
#[derive(Debug, Clone)]
pub struct ExplicitTable {
    entries: Vec<(Point, Label)>,
    index: HashMap<Vec<u64>, usize>,
}

impl ExplicitTable {
    pub fn new(entries: Vec<(Point, Label)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (p, _)) in entries.iter().enumerate() {
            if index.insert(p.key(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate table point {p:?}")));
            }
        }
        Ok(Self { entries, index })
    }

    pub fn entries(&self) -> &[(Point, Label)] {
        &self.entries
    }

    pub fn get(&self, x: &[f64]) -> Option<Label> {
        self.index.get(&point_key(x)).map(|&i| self.entries[i].1)
    }
}

/// The concept being learned.
#[derive(Debug, Clone)]
pub enum TargetFunction {
    /// `x -> sign(<w, x>)` with a declared margin `gamma`.
    LinearThreshold { w: Vec<f64>, gamma: f64 },
    /// Single-variable literals over the embedded hypercube.
    DecisionList { items: Vec<DlItem>, default: Label },
    Explicit(ExplicitTable),
}

impl TargetFunction {
    pub fn linear_threshold(w: Vec<f64>, gamma: f64) -> Result<Self> {
        if w.is_empty() || w.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("weight vector must be finite and nonempty".into()));
        }
        if norm(&w) > 1.0 + BALL_TOLERANCE {
            return Err(Error::InvalidInput("weight vector must lie in the unit ball".into()));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidInput(format!("margin {gamma} outside (0, 1]")));
        }
        Ok(Self::LinearThreshold { w, gamma })
    }

    pub fn decision_list(items: Vec<DlItem>, default: Label) -> Self {
        Self::DecisionList { items, default }
    }

    pub fn explicit(entries: Vec<(Point, Label)>) -> Result<Self> {
        Ok(Self::Explicit(ExplicitTable::new(entries)?))
    }

    pub fn constant(label: Label) -> Self {
        Self::DecisionList { items: Vec::new(), default: label }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Label> {
        match self {
            Self::LinearThreshold { w, .. } => {
                if w.len() != x.len() {
                    return Err(Error::Evaluation(format!(
                        "weight dimension {} does not match point dimension {}",
                        w.len(),
                        x.len()
                    )));
                }
                Ok(Label::from_sign(dot(w, x)))
            }
            Self::DecisionList { items, default } => {
                for item in items {
                    if item.var >= x.len() {
                        return Err(Error::Evaluation(format!(
                            "decision list literal {} out of range for dimension {}",
                            item.var,
                            x.len()
                        )));
                    }
                    if item.fires(x) {
                        return Ok(item.output);
                    }
                }
                Ok(*default)
            }
            Self::Explicit(table) => table
                .get(x)
                .ok_or_else(|| Error::Evaluation(format!("explicit target undefined at {x:?}"))),
        }
    }

    /// Pointwise negation; decision lists stay decision lists.
    pub fn negate(&self) -> Self {
        match self {
            Self::LinearThreshold { w, gamma } => Self::LinearThreshold {
                w: w.iter().map(|c| -c).collect(),
                gamma: *gamma,
            },
            Self::DecisionList { items, default } => Self::DecisionList {
                items: items
                    .iter()
                    .map(|it| DlItem { output: -it.output, ..*it })
                    .collect(),
                default: -*default,
            },
            Self::Explicit(table) => Self::Explicit(ExplicitTable {
                entries: table.entries.iter().map(|(p, l)| (p.clone(), -*l)).collect(),
                index: table.index.clone(),
            }),
        }
    }

    pub fn to_spec(&self) -> TargetSpec {
        match self {
            Self::LinearThreshold { w, gamma } => TargetSpec::LinearThreshold {
                w: w.clone(),
                gamma: *gamma,
            },
            Self::DecisionList { items, default } => TargetSpec::DecisionList {
                items: items.clone(),
                default: *default,
            },
            Self::Explicit(t) => TargetSpec::Explicit {
                table: t
                    .entries
                    .iter()
                    .map(|(p, l)| TableEntry { x: p.clone(), label: *l })
                    .collect(),
            },
        }
    }

    pub fn from_spec(spec: TargetSpec) -> Result<Self> {
        match spec {
            TargetSpec::LinearThreshold { w, gamma } => Self::linear_threshold(w, gamma),
            TargetSpec::DecisionList { items, default } => Ok(Self::decision_list(items, default)),
            TargetSpec::Explicit { table } => {
                Self::explicit(table.into_iter().map(|e| (e.x, e.label)).collect())
            }
        }
    }
}

impl Classifier for TargetFunction {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        self.eval(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub x: Point,
    pub label: Label,
}

/// Serialized form of a [`TargetFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    LinearThreshold { w: Vec<f64>, gamma: f64 },
    DecisionList { items: Vec<DlItem>, default: Label },
    Explicit { table: Vec<TableEntry> },
}
