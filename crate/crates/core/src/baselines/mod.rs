//! Interactive comparator: a greedy SQ learner for decision lists.
//!
//! Each round conditions on "no chosen literal fires" through
//! indicator-weighted queries, so later label-dependent queries depend on
//! earlier answers. That is exactly what the margin learner avoids.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comm::{comm_required_samples, compile_sq_to_comm, CommCompileConfig};
use crate::domain::{classification_error, DlItem, Label, LabeledSource, TargetFunction, VirtualDataset};
use crate::ldp::{compile_sq_to_ldp, ldp_required_samples, Backend, LdpCompileConfig, QueryRecord};
use crate::sq::{ExactOracle, QueryBatch, QueryPlan, SqDriver, StatOracle, Transcript};
pub use crate::sq::{adaptivity_profile, AdaptivityProfile};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlLearnerConfig {
    pub d: usize,
    pub alpha: f64,
    pub tau: f64,
}

impl DlLearnerConfig {
    /// `tau = alpha / (8d)`.
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { d, alpha, tau: alpha / (8.0 * d as f64) })
    }

    /// Items plus the default.
    pub fn max_len(&self) -> usize {
        2 * self.d + 1
    }

    /// Queries issued per round: a fire mass and a label correlation for
    /// every literal, and the same pair for the residual region.
    pub fn queries_per_round(&self) -> usize {
        4 * self.d + 2
    }
}

/// Literal `k` of the `2d`: variable `k / 2`, positive polarity when `k` is even.
#[inline]
fn literal(k: usize) -> (usize, bool) {
    (k / 2, k.is_multiple_of(2))
}

fn residual(items: &[DlItem], x: &[f64]) -> bool {
    !items.iter().any(|it| it.fires(x))
}

/// `[1{R and lit_k}]_k ++ [1{R}]`, optionally times the label.
fn round_batch(items: Vec<DlItem>, d: usize, tau: f64, with_label: bool) -> Result<QueryBatch> {
    QueryBatch::new(2 * d + 1, tau, with_label, move |x, y, out| {
        let s = if with_label { y.value() } else { 1.0 };
        let r = if residual(&items, x) { s } else { 0.0 };
        for k in 0..2 * d {
            let (var, pol) = literal(k);
            out[k] = if (x[var] > 0.0) == pol { r } else { 0.0 };
        }
        out[2 * d] = r;
    })
}

/// Greedy decision-list learning from a `STAT(tau)` oracle.
pub fn learn_decision_list_sq(oracle: &mut dyn StatOracle, cfg: &DlLearnerConfig) -> Result<TargetFunction> {
    let d = cfg.d;
    let tau = cfg.tau;
    let mut items: Vec<DlItem> = Vec::new();
    for round in 0..cfg.max_len() {
        let mass = oracle.answer_batch(&round_batch(items.clone(), d, tau, false)?, round)?;
        let corr = oracle.answer_batch(&round_batch(items.clone(), d, tau, true)?, round)?;
        let (r_mass, r_corr) = (mass[2 * d], corr[2 * d]);
        let default = if r_corr >= 0.0 { Label::Pos } else { Label::Neg };
        let default_mistakes = (r_mass - r_corr.abs()) / 2.0;
        if r_mass < cfg.alpha / 2.0 || default_mistakes <= tau || items.len() == 2 * d {
            return Ok(TargetFunction::decision_list(items, default));
        }
        let mut best: Option<(f64, DlItem)> = None;
        for k in 0..2 * d {
            let p = mass[k];
            if p < 4.0 * tau {
                continue;
            }
            let (var, polarity) = literal(k);
            if items.iter().any(|it| it.var == var && it.polarity == polarity) {
                continue;
            }
            for output in [Label::Pos, Label::Neg] {
                let mistakes = (p - output.value() * corr[k]) / 2.0;
                if mistakes > tau {
                    continue;
                }
                let rate = mistakes.max(0.0) / p;
                if best.is_none_or(|(r, _)| rate < r) {
                    best = Some((rate, DlItem { var, polarity, output }));
                }
            }
        }
        match best {
            Some((_, item)) => items.push(item),
            None => {
                return Err(Error::LearningFailure(format!(
                    "no admissible literal with residual mass {r_mass:.4} after {} items",
                    items.len()
                )))
            }
        }
    }
    Err(Error::LearningFailure("list length limit reached".into()))
}

/// [`learn_decision_list_sq`] as an SQ algorithm.
#[derive(Debug, Clone)]
pub struct DlDriver {
    pub cfg: DlLearnerConfig,
}

impl SqDriver for DlDriver {
    type Output = TargetFunction;

    fn plan(&self) -> QueryPlan {
        QueryPlan::new().with((self.cfg.max_len() * self.cfg.queries_per_round()) as u64, self.cfg.tau)
    }

    fn run(&mut self, oracle: &mut dyn StatOracle) -> Result<TargetFunction> {
        learn_decision_list_sq(oracle, &self.cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DlOracle {
    Exact,
    Ldp { epsilon: f64, delta: f64, backend: Backend },
    Comm { delta: f64, backend: Backend },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlReport {
    pub d: usize,
    pub alpha: f64,
    pub tau: f64,
    pub oracle: DlOracle,
    pub list_len: usize,
    pub queries: usize,
    pub rounds: usize,
    pub label_dependent_rounds: Vec<usize>,
    pub samples: Option<u64>,
    pub max_spent: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protocol: Vec<QueryRecord>,
    pub error: f64,
}

/// Learns the target of `src` and evaluates the result exactly.
pub fn learn_dl(
    src: &LabeledSource,
    cfg: &DlLearnerConfig,
    oracle: DlOracle,
    seed_root: u64,
) -> Result<(TargetFunction, DlReport, Transcript)> {
    if src.dim() != cfg.d {
        return Err(Error::InvalidInput(format!("source has dimension {}, expected {}", src.dim(), cfg.d)));
    }
    let mut driver = DlDriver { cfg: *cfg };
    let (list, transcript, samples, max_spent, protocol) = match oracle {
        DlOracle::Exact => {
            let mut o = ExactOracle::new(src);
            let list = driver.run(&mut o)?;
            (list, o.into_transcript(), None, None, Vec::new())
        }
        DlOracle::Ldp { epsilon, delta, backend } => {
            let n = ldp_required_samples(&driver.plan(), epsilon, delta, None);
            let store = VirtualDataset::new(Arc::new(src.clone()), n, seed::derive(seed_root, "sample", 0));
            let c = LdpCompileConfig::new(epsilon, delta, seed::derive(seed_root, "simulate", 0)).with_backend(backend);
            let (list, rep, t) = compile_sq_to_ldp(&mut driver, &store, &c)?;
            (list, t, Some(rep.n), Some(rep.max_spent), rep.queries)
        }
        DlOracle::Comm { delta, backend } => {
            let n = comm_required_samples(&driver.plan(), delta, None);
            let store = VirtualDataset::new(Arc::new(src.clone()), n, seed::derive(seed_root, "sample", 0));
            let c = CommCompileConfig::new(delta, seed::derive(seed_root, "simulate", 0)).with_backend(backend);
            let (list, rep, t) = compile_sq_to_comm(&mut driver, &store, &c)?;
            (list, t, Some(rep.n), Some(f64::from(rep.max_spent)), rep.queries)
        }
    };
    let profile = adaptivity_profile(&transcript);
    let list_len = match &list {
        TargetFunction::DecisionList { items, .. } => items.len() + 1,
        _ => 1,
    };
    let report = DlReport {
        d: cfg.d,
        alpha: cfg.alpha,
        tau: cfg.tau,
        oracle,
        list_len,
        queries: transcript.len(),
        rounds: profile.rounds,
        label_dependent_rounds: profile.label_dependent_rounds.into_iter().collect(),
        samples,
        max_spent,
        protocol,
        error: classification_error(&list, src)?,
    };
    Ok((list, report, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{synthetic, FiniteDistribution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube_source(d: usize, target: TargetFunction) -> LabeledSource {
        LabeledSource::new(FiniteDistribution::uniform_hypercube(d).unwrap(), target).unwrap()
    }

    #[test]
    fn constant_target_gives_default_only() {
        let src = cube_source(3, TargetFunction::constant(Label::Pos));
        let cfg = DlLearnerConfig::new(3, 0.1).unwrap();
        let (list, rep, _) = learn_dl(&src, &cfg, DlOracle::Exact, 0).unwrap();
        assert_eq!(rep.error, 0.0);
        assert_eq!(rep.list_len, 1);
        assert!(matches!(list, TargetFunction::DecisionList { ref items, default: Label::Pos } if items.is_empty()));
    }

    #[test]
    fn single_literal_target() {
        let f = TargetFunction::decision_list(
            vec![DlItem { var: 0, polarity: true, output: Label::Pos }],
            Label::Neg,
        );
        let src = cube_source(3, f);
        let cfg = DlLearnerConfig::new(3, 0.1).unwrap();
        let (_, rep, _) = learn_dl(&src, &cfg, DlOracle::Exact, 0).unwrap();
        assert!(rep.error <= 0.1);
    }

    #[test]
    fn random_lists_are_learned_adaptively() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = DlLearnerConfig::new(6, 0.1).unwrap();
        for _ in 0..10 {
            let f = synthetic::random_decision_list(6, 4, &mut rng);
            let src = cube_source(6, f);
            let (_, rep, _) = learn_dl(&src, &cfg, DlOracle::Exact, 0).unwrap();
            assert!(rep.error <= 0.1, "{rep:?}");
            assert!(rep.list_len <= cfg.max_len());
            if rep.rounds > 1 {
                assert!(rep.label_dependent_rounds.iter().any(|&r| r > 0));
            }
        }
    }

    #[test]
    fn ldp_run_matches_exact_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cfg = DlLearnerConfig::new(4, 0.1).unwrap();
        let f = synthetic::random_decision_list(4, 3, &mut rng);
        let src = cube_source(4, f);
        let (a, _, _) = learn_dl(&src, &cfg, DlOracle::Exact, 0).unwrap();
        let o = DlOracle::Ldp { epsilon: 1.0, delta: 0.1, backend: Backend::Aggregate };
        let (b, rep, _) = learn_dl(&src, &cfg, o, 3).unwrap();
        assert_eq!(a.to_spec(), b.to_spec());
        assert!(rep.samples.unwrap() > 0);
    }
}
