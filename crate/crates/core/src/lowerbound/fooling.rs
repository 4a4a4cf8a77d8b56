use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{classification_error, Label, LabeledSource, Point, TargetFunction};
use crate::lowerbound::certificate::{worst_correlation_distribution, AdversarialCertificate, HypothesisSet};
use crate::sq::{
    adaptivity_profile, assert_label_non_adaptive, decompose, AdversarialOracle, AdversarialOracleConfig, StatOracle, StatQuery,
    Transcript,
};
use crate::{seed, Error, Result};

/// A learner whose label-dependent queries are fixed before it sees any answer.
pub trait NonAdaptiveLearner {
    fn label_dependent_queries(&self) -> Vec<StatQuery>;

    /// Number of queries a run issues, label-dependent or not.
    fn query_count(&self) -> usize;

    /// Must be deterministic: the same answers give the same hypothesis.
    fn run(&mut self, oracle: &mut dyn StatOracle) -> Result<TargetFunction>;
}

/// Asks one label-independent mean and `k` correlations with random affine
/// functions, then predicts with the sign of the answer-weighted sum.
#[derive(Debug, Clone)]
pub struct CorrelationVoter {
    domain: Vec<Point>,
    coeffs: Vec<Vec<f64>>,
    tau: f64,
}

impl CorrelationVoter {
    pub fn new(domain: Vec<Point>, k: usize, tau: f64, seed_root: u64) -> Result<Self> {
        let d = domain.first().map(Point::dim).ok_or_else(|| Error::InvalidInput("empty domain".into()))?;
        let mut rng = seed::rng(seed_root, "voter", 0);
        let coeffs = (0..k)
            .map(|_| {
                let c: Vec<f64> = (0..=d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let l1: f64 = c.iter().map(|v| v.abs()).sum();
                c.into_iter().map(|v| v / l1).collect()
            })
            .collect();
        Ok(Self { domain, coeffs, tau })
    }

    /// Explicit affine coefficients `[c_0, c_1, ..., c_d]` per query.
    pub fn with_queries(domain: Vec<Point>, coeffs: Vec<Vec<f64>>, tau: f64) -> Self {
        Self { domain, coeffs, tau }
    }

    fn affine(c: &[f64], x: &[f64]) -> f64 {
        c[0] + c[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    fn hypothesis_queries(&self) -> Vec<StatQuery> {
        self.coeffs
            .iter()
            .map(|c| {
                let c = c.clone();
                StatQuery::correlational(self.tau, move |x| Self::affine(&c, x).clamp(-1.0, 1.0))
                    .expect("tolerance checked at construction")
            })
            .collect()
    }
}

impl NonAdaptiveLearner for CorrelationVoter {
    fn label_dependent_queries(&self) -> Vec<StatQuery> {
        self.hypothesis_queries()
    }

    fn query_count(&self) -> usize {
        self.coeffs.len() + 1
    }

    fn run(&mut self, oracle: &mut dyn StatOracle) -> Result<TargetFunction> {
        oracle.answer(&StatQuery::on_points(self.tau, |x| x[0])?, 0)?;
        let answers = self
            .hypothesis_queries()
            .iter()
            .map(|q| oracle.answer(q, 0))
            .collect::<Result<Vec<f64>>>()?;
        let table = self
            .domain
            .iter()
            .map(|p| {
                let s: f64 = answers
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(a, c)| a * Self::affine(c, p.coords()).clamp(-1.0, 1.0))
                    .sum();
                (p.clone(), Label::from_sign(s))
            })
            .collect();
        TargetFunction::explicit(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoolingReport {
    pub m: usize,
    /// `None` when every target correlates with some query on every distribution.
    pub certificate: Option<AdversarialCertificate>,
    pub target_index: Option<usize>,
    pub identical_transcripts: bool,
    pub rounds: usize,
    pub label_dependent_rounds: Vec<usize>,
    pub answers_f: Vec<f64>,
    pub answers_neg_f: Vec<f64>,
    pub error_f: f64,
    pub error_neg_f: f64,
    pub max_error: f64,
}

fn negation_closed(class: &[Vec<Label>]) -> bool {
    class.iter().all(|f| {
        let nf: Vec<Label> = f.iter().map(|&y| -y).collect();
        class.contains(&nf)
    })
}

fn source(cert: &AdversarialCertificate) -> Result<LabeledSource> {
    let table = cert.dist.support().iter().cloned().zip(cert.target.iter().copied()).collect();
    LabeledSource::new(cert.dist.clone(), TargetFunction::explicit(table)?)
}

fn run_adversary(learner: &mut dyn NonAdaptiveLearner, src: LabeledSource, m: usize) -> Result<(TargetFunction, Transcript)> {
    let mut oracle = AdversarialOracle::new(AdversarialOracleConfig::new(src, m)?);
    let h = learner.run(&mut oracle)?;
    Ok((h, oracle.into_transcript()))
}

/// Looks for `(f, D)` on which the learner's label-dependent queries are all
/// below `1/m` in correlation, then runs it against the adversarial oracle
/// for `f` and `-f`.
pub fn negation_fooling_demo(
    learner: &mut dyn NonAdaptiveLearner,
    class: &[Vec<Label>],
    points: &[Point],
    m: usize,
) -> Result<FoolingReport> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be >= 1".into()));
    }
    if !negation_closed(class) {
        return Err(Error::Precondition("class is not closed under negation".into()));
    }
    if learner.query_count() > m {
        return Err(Error::Precondition(format!(
            "learner issues {} queries, more than m = {m}",
            learner.query_count()
        )));
    }
    let queries = learner.label_dependent_queries();
    let mut set = HypothesisSet::new();
    for q in &queries {
        set.push_fn(decompose(q).h);
    }
    let threshold = 1.0 / m as f64;
    let mut found = None;
    for (i, f) in class.iter().enumerate() {
        let cert = worst_correlation_distribution(f, &set, points)?;
        if cert.value < threshold {
            found = Some((i, cert));
            break;
        }
    }
    let Some((index, cert)) = found else {
        return Ok(FoolingReport {
            m,
            certificate: None,
            target_index: None,
            identical_transcripts: false,
            rounds: 0,
            label_dependent_rounds: Vec::new(),
            answers_f: Vec::new(),
            answers_neg_f: Vec::new(),
            error_f: f64::NAN,
            error_neg_f: f64::NAN,
            max_error: f64::NAN,
        });
    };
    let src_f = source(&cert)?;
    let src_nf = src_f.negated();
    let (h_f, t_f) = run_adversary(learner, src_f.clone(), m)?;
    let (h_nf, t_nf) = run_adversary(learner, src_nf.clone(), m)?;
    for t in [&t_f, &t_nf] {
        if !assert_label_non_adaptive(t) || t.label_dependent_count() != queries.len() {
            return Err(Error::Protocol("learner did not issue its declared label-dependent queries up front".into()));
        }
    }
    let identical = t_f.answer_bits() == t_nf.answer_bits() && t_f.entries().len() == t_nf.entries().len();
    let profile = adaptivity_profile(&t_f);
    let error_f = classification_error(&h_f, &src_f)?;
    let error_neg_f = classification_error(&h_nf, &src_nf)?;
    Ok(FoolingReport {
        m,
        certificate: Some(cert),
        target_index: Some(index),
        identical_transcripts: identical,
        rounds: profile.rounds,
        label_dependent_rounds: profile.label_dependent_rounds.into_iter().collect(),
        answers_f: t_f.entries().iter().map(|e| e.answer).collect(),
        answers_neg_f: t_nf.entries().iter().map(|e| e.answer).collect(),
        error_f,
        error_neg_f,
        max_error: error_f.max(error_neg_f),
    })
}

/// The four points of `{0,1}^2` with the parity labeling `x_1 x_2 > 0`.
pub fn parity_square() -> Result<LabeledSource> {
    let pts: Vec<Point> = (0..4u8)
        .map(|b| crate::domain::embed_hypercube(&[b & 1 == 1, b & 2 == 2]))
        .collect::<Result<_>>()?;
    let table = pts.iter().map(|p| (p.clone(), Label::from_sign(p.coords()[0] * p.coords()[1]))).collect();
    LabeledSource::new(crate::domain::FiniteDistribution::uniform(pts)?, TargetFunction::explicit(table)?)
}

/// `{f, -f}` for the target of `src`, tabulated on its support.
pub fn negation_pair(src: &LabeledSource) -> Vec<Vec<Label>> {
    let f = src.labels().to_vec();
    let nf = f.iter().map(|&y| -y).collect();
    vec![f, nf]
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_square_fools_affine_voter() {
        let src = parity_square().unwrap();
        let class = negation_pair(&src);
        for s in 0..20 {
            let mut v = CorrelationVoter::new(src.support().to_vec(), 3, 0.25, s).unwrap();
            let r = negation_fooling_demo(&mut v, &class, src.support(), 4).unwrap();
            let cert = r.certificate.as_ref().unwrap();
            assert!(cert.value < 0.25);
            assert!(r.identical_transcripts);
            assert_eq!(r.error_f + r.error_neg_f, 1.0);
            assert!(r.max_error >= 0.5);
        }
    }

    #[test]
    fn querying_f_itself_gives_no_certificate() {
        let src = parity_square().unwrap();
        let class = negation_pair(&src);
        // h(x) = 2 x_1 x_2 is the parity on the embedded square; take it via a table learner
        struct Parity(Vec<Point>);
        impl NonAdaptiveLearner for Parity {
            fn label_dependent_queries(&self) -> Vec<StatQuery> {
                vec![StatQuery::correlational(0.5, |x| (2.0 * x[0] * x[1]).clamp(-1.0, 1.0)).unwrap()]
            }
            fn query_count(&self) -> usize {
                1
            }
            fn run(&mut self, o: &mut dyn StatOracle) -> Result<TargetFunction> {
                let a = o.answer(&self.label_dependent_queries()[0], 0)?;
                let t = self.0.iter().map(|p| (p.clone(), Label::from_sign(a * p.coords()[0] * p.coords()[1]))).collect();
                TargetFunction::explicit(t)
            }
        }
        let r = negation_fooling_demo(&mut Parity(src.support().to_vec()), &class, src.support(), 2).unwrap();
        assert!(r.certificate.is_none());
    }

    #[test]
    fn non_closed_class_is_rejected() {
        let src = parity_square().unwrap();
        let class = vec![src.labels().to_vec()];
        let mut v = CorrelationVoter::new(src.support().to_vec(), 1, 0.5, 0).unwrap();
        assert!(matches!(
            negation_fooling_demo(&mut v, &class, src.support(), 2),
            Err(Error::Precondition(_))
        ));
    }
}
