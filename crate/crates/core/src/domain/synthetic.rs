//! Random instance generators used by tests, the CLI and the experiments.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{dot, norm, DlItem, FiniteDistribution, Label, LabeledSource, Point, TargetFunction};
use crate::Result;

/// A uniformly random unit vector.
pub fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// A source in `B^d(1)` separated by a random unit `w*` with margin `gamma`.
///
/// Points sit on the unit sphere at signed distance `a` from the hyperplane,
/// with `a` drawn from `[gamma, 1]` skewed towards `gamma` so that many
/// points are close to the margin. Weights are random (not uniform).
pub fn margin_source<R: Rng + ?Sized>(d: usize, gamma: f64, support: usize, rng: &mut R) -> Result<LabeledSource> {
    assert!(d >= 2, "margin sources need d >= 2");
    let w = unit_vector(d, rng);
    let mut pts = Vec::with_capacity(support);
    for _ in 0..support {
        let u: f64 = rng.gen();
        let a = gamma + (1.0 - gamma) * u * u * u;
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        // Orthogonal direction by Gram-Schmidt on a random vector.
        let mut v = unit_vector(d, rng);
        let proj = dot(&v, &w);
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi -= proj * wi);
        let vn = norm(&v);
        let b = (1.0 - a * a).max(0.0).sqrt();
        let x: Vec<f64> = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| s * a * wi + b * vi / vn)
            .collect();
        pts.push(Point::clipped(x)?);
    }
    let weights: Vec<f64> = (0..support).map(|_| 0.2 + rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|q| q / total).collect();
    fix_sum(&mut probs);
    let target = TargetFunction::linear_threshold(w, gamma)?;
    LabeledSource::new(FiniteDistribution::new(pts, probs)?, target)
}

/// Pushes the float rounding residue of a normalization into the largest entry.
pub fn fix_sum(probs: &mut [f64]) {
    let total: f64 = probs.iter().sum();
    if let Some((i, _)) = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
    {
        probs[i] += 1.0 - total;
    }
}

/// A decision list of `len` items over `d` variables with distinct variables.
pub fn random_decision_list<R: Rng + ?Sized>(d: usize, len: usize, rng: &mut R) -> TargetFunction {
    let mut vars: Vec<usize> = (0..d).collect();
    vars.shuffle(rng);
    let items = vars
        .into_iter()
        .take(len.min(d))
        .map(|var| DlItem {
            var,
            polarity: rng.gen_bool(0.5),
            output: if rng.gen_bool(0.5) { Label::Pos } else { Label::Neg },
        })
        .collect();
    let default = if rng.gen_bool(0.5) { Label::Pos } else { Label::Neg };
    TargetFunction::decision_list(items, default)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::exact_margin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn margin_source_has_declared_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [2, 5, 20] {
            let src = margin_source(d, 0.3, 40, &mut rng).unwrap();
            let TargetFunction::LinearThreshold { w, gamma } = src.target().clone() else {
                panic!()
            };
            assert!(exact_margin(&w, &src).unwrap() >= gamma - 1e-12);
            assert!((src.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decision_list_vars_are_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let TargetFunction::DecisionList { items, .. } = random_decision_list(8, 5, &mut rng) else {
            panic!()
        };
        let mut vars: Vec<_> = items.iter().map(|i| i.var).collect();
        vars.sort();
        vars.dedup();
        assert_eq!(vars.len(), 5);
    }
}
