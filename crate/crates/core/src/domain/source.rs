use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{dot, norm, Classifier, FiniteDistribution, Label, Point, TargetFunction, TargetSpec, BALL_TOLERANCE};
use crate::{Error, Result};

/// A finite distribution over points together with the target labeling them.
#[derive(Debug, Clone)]
pub struct LabeledSource {
    dist: FiniteDistribution,
    target: TargetFunction,
    labels: Vec<Label>,
}

impl LabeledSource {
    pub fn new(dist: FiniteDistribution, target: TargetFunction) -> Result<Self> {
        let labels = dist
            .support()
            .iter()
            .map(|p| target.eval(p.coords()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dist, target, labels })
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    pub fn dist(&self) -> &FiniteDistribution {
        &self.dist
    }

    pub fn target(&self) -> &TargetFunction {
        &self.target
    }

    /// `target(x)` for every support point, in support order.
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn support(&self) -> &[Point] {
        self.dist.support()
    }

    pub fn probs(&self) -> &[f64] {
        self.dist.probs()
    }

    /// `(x, f(x), D(x))` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label, f64)> + '_ {
        self.dist
            .support()
            .iter()
            .zip(&self.labels)
            .zip(self.dist.probs())
            .map(|((p, &l), &q)| (p.coords(), l, q))
    }

    /// Exact `E[phi(x, f(x))]`.
    pub fn expect(&self, mut phi: impl FnMut(&[f64], Label) -> f64) -> f64 {
        self.iter().map(|(x, y, p)| p * phi(x, y)).sum()
    }

    /// Same distribution, target replaced by its negation.
    pub fn negated(&self) -> Self {
        Self {
            dist: self.dist.clone(),
            target: self.target.negate(),
            labels: self.labels.iter().map(|&l| -l).collect(),
        }
    }

    pub fn with_target(&self, target: TargetFunction) -> Result<Self> {
        Self::new(self.dist.clone(), target)
    }

    pub fn with_dist(&self, dist: FiniteDistribution) -> Result<Self> {
        Self::new(dist, self.target.clone())
    }

    pub fn to_file(&self) -> SourceFile {
        SourceFile {
            dim: self.dim(),
            support: self.dist.support().to_vec(),
            probs: self.dist.probs().to_vec(),
            target: self.target.to_spec(),
        }
    }

    pub fn from_file(file: SourceFile) -> Result<Self> {
        let dist = FiniteDistribution::new(file.support, file.probs)?;
        if dist.dim() != file.dim {
            return Err(Error::InvalidInput(format!(
                "declared dim {} but support points have dimension {}",
                file.dim,
                dist.dim()
            )));
        }
        Self::new(dist, TargetFunction::from_spec(file.target)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form: `{"dim", "support", "probs", "target"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceFile {
    pub dim: usize,
    pub support: Vec<Point>,
    pub probs: Vec<f64>,
    pub target: TargetSpec,
}

/// `Pr_D[h(x) != f(x)]`, computed exactly over the support.
pub fn classification_error(h: &dyn Classifier, src: &LabeledSource) -> Result<f64> {
    let mut err = 0.0;
    for (x, y, p) in src.iter() {
        if h.classify(x)? != y {
            err += p;
        }
    }
    Ok(err)
}

/// `min_x f(x) <w, x>` over the support.
pub fn exact_margin(w: &[f64], src: &LabeledSource) -> Result<f64> {
    if w.len() != src.dim() {
        return Err(Error::InvalidInput(format!(
            "weight dimension {} does not match source dimension {}",
            w.len(),
            src.dim()
        )));
    }
    if norm(w) > 1.0 + BALL_TOLERANCE {
        return Err(Error::InvalidInput("weight vector must lie in the unit ball".into()));
    }
    src.iter()
        .map(|(x, y, _)| y.value() * dot(w, x))
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidInput("empty support".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DlItem;

    fn two_point() -> LabeledSource {
        let s = vec![Point::new(vec![0.5]).unwrap(), Point::new(vec![-0.5]).unwrap()];
        let f = TargetFunction::linear_threshold(vec![1.0], 0.5).unwrap();
        LabeledSource::new(FiniteDistribution::uniform(s).unwrap(), f).unwrap()
    }

    #[test]
    fn error_of_target_and_its_negation() {
        let src = two_point();
        assert_eq!(classification_error(src.target(), &src).unwrap(), 0.0);
        assert_eq!(classification_error(&src.target().negate(), &src).unwrap(), 1.0);
    }

    #[test]
    fn error_wrong_on_one_of_two_points() {
        let src = two_point();
        let h = |_: &[f64]| Label::Pos;
        assert_eq!(classification_error(&h, &src).unwrap(), 0.5);
    }

    #[test]
    fn error_propagates_undefined_hypothesis() {
        let src = two_point();
        let h = TargetFunction::explicit(vec![(Point::new(vec![0.5]).unwrap(), Label::Pos)]).unwrap();
        assert!(matches!(classification_error(&h, &src), Err(Error::Evaluation(_))));
    }

    #[test]
    fn margin_single_point() {
        let e1 = Point::new(vec![1.0, 0.0]).unwrap();
        let pos = LabeledSource::new(
            FiniteDistribution::uniform(vec![e1.clone()]).unwrap(),
            TargetFunction::constant(Label::Pos),
        )
        .unwrap();
        assert_eq!(exact_margin(&[1.0, 0.0], &pos).unwrap(), 1.0);
        let neg = pos.with_target(TargetFunction::constant(Label::Neg)).unwrap();
        assert_eq!(exact_margin(&[1.0, 0.0], &neg).unwrap(), -1.0);
        assert!(exact_margin(&[1.0, 1.0], &pos).is_err());
    }

    #[test]
    fn json_roundtrip_preserves_labels() {
        let dist = FiniteDistribution::uniform_hypercube(3).unwrap();
        let f = TargetFunction::decision_list(
            vec![DlItem { var: 1, polarity: true, output: Label::Neg }],
            Label::Pos,
        );
        let src = LabeledSource::new(dist, f).unwrap();
        let back = LabeledSource::from_json(&src.to_json().unwrap()).unwrap();
        assert_eq!(back.labels(), src.labels());
        assert_eq!(back.probs(), src.probs());
    }
}
