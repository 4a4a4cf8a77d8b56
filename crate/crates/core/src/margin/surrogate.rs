use crate::domain::{dot, norm, FiniteDistribution, LabeledSource, BALL_TOLERANCE};
use crate::sq::{QueryBatch, StatOracle};
use crate::{Error, Result};

/// Parameters of the surrogate objective in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurrogateParams {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
}

impl SurrogateParams {
    /// Uses `beta = gamma^2 / sqrt(dim)`.
    pub fn new(gamma: f64, alpha: f64, dim: usize) -> Result<Self> {
        Self::with_beta(gamma, alpha, dim, gamma * gamma / (dim as f64).sqrt())
    }

    pub fn with_beta(gamma: f64, alpha: f64, dim: usize, beta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidInput(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        let bound = 2.0 * gamma * gamma / (dim as f64).sqrt();
        if !(beta > 0.0 && beta < bound) {
            return Err(Error::InvalidInput(format!("beta must lie in (0, {bound}), got {beta}")));
        }
        Ok(Self { gamma, alpha, beta, dim })
    }

    /// Lipschitz constant of `F` over the unit ball.
    pub fn lipschitz(&self) -> f64 {
        4.0 * self.dim as f64
    }

    /// `ceil((4L / (alpha beta))^2)`, saturating.
    pub fn iterations(&self) -> u64 {
        let r = 4.0 * self.lipschitz() / (self.alpha * self.beta);
        (r * r).ceil() as u64
    }

    /// `alpha beta / (4 sqrt(d) (2d + 1))`.
    pub fn coord_tolerance(&self) -> f64 {
        let d = self.dim as f64;
        self.alpha * self.beta / (4.0 * d.sqrt() * (2.0 * d + 1.0))
    }

    /// Right-hand side of the margin guarantee: `-beta/2 + gamma^2/sqrt(d)`.
    pub fn guaranteed_margin(&self) -> f64 {
        -self.beta / 2.0 + self.gamma * self.gamma / (self.dim as f64).sqrt()
    }
}

#[inline]
fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `sum_i sign(u + g x_i) + sign(u - g x_i)`.
#[inline]
fn sign_sum(u: f64, gamma: f64, x: &[f64]) -> f64 {
    x.iter().map(|&xi| sgn(u + gamma * xi) + sgn(u - gamma * xi)).sum()
}

fn check_w(w: &[f64], p: &SurrogateParams) -> Result<()> {
    if w.len() != p.dim {
        return Err(Error::InvalidInput(format!(
            "iterate has dimension {}, expected {}",
            w.len(),
            p.dim
        )));
    }
    if norm(w) > 1.0 + BALL_TOLERANCE {
        return Err(Error::InvalidInput("iterate must lie in the unit ball".into()));
    }
    Ok(())
}

/// `(F1(w), F2(w))`, exactly. `F2` is linear: `-2d <w, E[l x]>`.
pub fn surrogate_parts(w: &[f64], src: &LabeledSource, p: &SurrogateParams) -> Result<(f64, f64)> {
    check_w(w, p)?;
    if src.dim() != p.dim {
        return Err(Error::InvalidInput(format!(
            "source has dimension {}, expected {}",
            src.dim(),
            p.dim
        )));
    }
    let d = p.dim as f64;
    let (mut f1, mut f2) = (0.0, 0.0);
    for (x, y, prob) in src.iter() {
        let u = dot(w, x);
        let abs: f64 = x
            .iter()
            .map(|&xi| (u + p.gamma * xi).abs() + (u - p.gamma * xi).abs())
            .sum();
        f1 += prob * abs;
        f2 -= prob * 2.0 * d * y.value() * u;
    }
    Ok((f1, f2))
}

/// The surrogate `F(w)`, exactly.
pub fn surrogate_value(w: &[f64], src: &LabeledSource, p: &SurrogateParams) -> Result<f64> {
    let (f1, f2) = surrogate_parts(w, src, p)?;
    Ok(f1 + f2)
}

/// Range-normalized query for coordinate `j` of the `F1` subgradient,
/// one component per coordinate.
pub(crate) fn f1_batch(w: &[f64], p: &SurrogateParams, tol: f64) -> Result<QueryBatch> {
    let w = w.to_vec();
    let gamma = p.gamma;
    let scale = 2.0 * p.dim as f64;
    Ok(QueryBatch::new(p.dim, tol, false, move |x, _, out| {
        let s = sign_sum(dot(&w, x), gamma, x) / scale;
        out.iter_mut().zip(x).for_each(|(o, xj)| *o = s * xj);
    })?
    .with_scale(scale))
}

pub(crate) fn f2_batch(p: &SurrogateParams, tol: f64) -> Result<QueryBatch> {
    let scale = -2.0 * p.dim as f64;
    Ok(QueryBatch::new(p.dim, tol, true, |x, y, out| {
        let v = y.value();
        out.iter_mut().zip(x).for_each(|(o, xj)| *o = v * xj);
    })?
    .with_scale(scale))
}

/// Subgradient of `F1` at `w` through `d` label-independent queries issued in `round`.
pub fn grad_f1(
    w: &[f64],
    oracle: &mut dyn StatOracle,
    p: &SurrogateParams,
    tol: f64,
    round: usize,
) -> Result<Vec<f64>> {
    check_w(w, p)?;
    let batch = f1_batch(w, p, tol)?;
    let scale = batch.scale();
    Ok(oracle.answer_batch(&batch, round)?.into_iter().map(|a| scale * a).collect())
}

/// Subgradient of `F1` at `w` computed locally from a known marginal.
pub fn grad_f1_exact(w: &[f64], dist: &FiniteDistribution, p: &SurrogateParams) -> Result<Vec<f64>> {
    check_w(w, p)?;
    if dist.dim() != p.dim {
        return Err(Error::InvalidInput("distribution dimension mismatch".into()));
    }
    let mut g = vec![0.0; p.dim];
    for (x, &prob) in dist.support().iter().zip(dist.probs()) {
        let x = x.coords();
        let s = prob * sign_sum(dot(w, x), p.gamma, x);
        g.iter_mut().zip(x).for_each(|(gj, xj)| *gj += s * xj);
    }
    Ok(g)
}

/// Gradient of the linear part, `-2d E[l x]`, from `d` label-dependent
/// queries at round 0.
///
/// Use [`crate::margin::MarginLearnerState::grad_f2`] inside a learner run;
/// it refuses a second call.
pub fn grad_f2(oracle: &mut dyn StatOracle, p: &SurrogateParams, tol: f64) -> Result<Vec<f64>> {
    let batch = f2_batch(p, tol)?;
    let scale = batch.scale();
    Ok(oracle.answer_batch(&batch, 0)?.into_iter().map(|a| scale * a).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{synthetic, Label, Point, TargetFunction};
    use crate::sq::ExactOracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(label: Label, dim: usize) -> LabeledSource {
        let mut x = vec![0.0; dim];
        x[0] = 1.0;
        let dist = FiniteDistribution::uniform(vec![Point::new(x.clone()).unwrap()]).unwrap();
        LabeledSource::new(dist, TargetFunction::explicit(vec![(Point::new(x).unwrap(), label)]).unwrap()).unwrap()
    }

    fn params(gamma: f64, dim: usize) -> SurrogateParams {
        SurrogateParams::new(gamma, 0.1, dim).unwrap()
    }

    #[test]
    fn hand_examples() {
        let p = params(0.5, 1);
        assert_eq!(surrogate_value(&[1.0], &single(Label::Pos, 1), &p).unwrap(), 0.0);
        assert_eq!(surrogate_value(&[1.0], &single(Label::Neg, 1), &p).unwrap(), 4.0);
    }

    #[test]
    fn hand_gradient_negative_label() {
        // F(w) = |w + .5| + |w - .5| + 2w near w = 1: derivative 1 + 1 + 2 = 4
        let src = single(Label::Neg, 1);
        let p = params(0.5, 1);
        let mut o = ExactOracle::new(&src);
        let g1 = grad_f1(&[1.0], &mut o, &p, 0.01, 0).unwrap();
        let g2 = grad_f2(&mut o, &p, 0.01);
        assert_eq!(g1, vec![2.0]);
        // grad_f2 after a round-0 f1 query is still round 0
        assert_eq!(g2.unwrap(), vec![2.0]);
    }

    #[test]
    fn grad_f2_single_example() {
        let src = single(Label::Pos, 2);
        let mut o = ExactOracle::new(&src);
        assert_eq!(grad_f2(&mut o, &params(0.5, 2), 0.01).unwrap(), vec![-4.0, 0.0]);
        let neg = src.negated();
        let mut o = ExactOracle::new(&neg);
        assert_eq!(grad_f2(&mut o, &params(0.5, 2), 0.01).unwrap(), vec![4.0, 0.0]);
    }

    #[test]
    fn zero_at_separator_and_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let d = rng.gen_range(2..12);
            let src = synthetic::margin_source(d, 0.25, 30, &mut rng).unwrap();
            let TargetFunction::LinearThreshold { w, gamma } = src.target().clone() else { unreachable!() };
            let p = params(gamma, d);
            assert!(surrogate_value(&w, &src, &p).unwrap().abs() < 1e-9);
            for _ in 0..20 {
                let r: f64 = rng.gen();
                let v: Vec<f64> = synthetic::unit_vector(d, &mut rng).into_iter().map(|c| c * r).collect();
                assert!(surrogate_value(&v, &src, &p).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn symmetric_source_has_zero_f1_gradient_at_origin() {
        let pts = vec![
            Point::new(vec![0.3, 0.4]).unwrap(),
            Point::new(vec![-0.3, -0.4]).unwrap(),
            Point::new(vec![0.6, -0.1]).unwrap(),
            Point::new(vec![-0.6, 0.1]).unwrap(),
        ];
        let dist = FiniteDistribution::uniform(pts).unwrap();
        let src = LabeledSource::new(dist.clone(), TargetFunction::constant(Label::Pos)).unwrap();
        let p = params(0.2, 2);
        let mut o = ExactOracle::new(&src);
        let g = grad_f1(&[0.0, 0.0], &mut o, &p, 0.01, 0).unwrap();
        assert!(g.iter().all(|c| c.abs() < 1e-12), "{g:?}");
        assert_eq!(g, grad_f1_exact(&[0.0, 0.0], &dist, &p).unwrap());
        assert!(o.transcript().entries().iter().all(|e| !e.label_dep && e.scale == 4.0));
    }

    #[test]
    fn parameter_formulas() {
        let p = params(0.3, 4);
        assert!((p.beta - 0.045).abs() < 1e-15);
        assert_eq!(p.lipschitz(), 16.0);
        let r: f64 = 4.0 * 16.0 / (0.1 * 0.045);
        assert_eq!(p.iterations(), (r * r).ceil() as u64);
        assert!((p.coord_tolerance() - 0.1 * 0.045 / (4.0 * 2.0 * 9.0)).abs() < 1e-18);
        assert!(SurrogateParams::with_beta(0.3, 0.1, 4, 0.09).is_err());
    }
}
