use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comm::{comm_required_samples, compile_sq_to_comm, CommCompileConfig};
use crate::domain::{classification_error, dot, exact_margin, Classifier, Label, LabeledSource, TargetFunction, VirtualDataset};
use crate::ldp::{compile_sq_to_ldp, ldp_required_samples, Backend, LdpCompileConfig, QueryRecord};
use crate::margin::projection::{jl_dimension, ProjectionKind, ProjectionMap};
use crate::margin::psgd::{PsgdConfig, PsgdDriver};
use crate::margin::surrogate::{surrogate_value, SurrogateParams};
use crate::sq::{adaptivity_profile, assert_label_non_adaptive, ExactOracle, SqDriver, Transcript};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    DistributionFree,
    /// The marginal over points is public; only the label-dependent
    /// gradient is queried.
    KnownDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum OracleKind {
    Exact,
    Ldp,
    Comm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub mode: Mode,
    pub oracle: OracleKind,
    pub epsilon: f64,
    pub seed: u64,
    /// Cap on the descent schedule.
    pub max_iters: u64,
    /// Tolerance the LDP and COMM simulations answer every query to.
    pub sim_tau: f64,
    pub backend: Backend,
}

impl LearnerConfig {
    pub fn new(gamma: f64, alpha: f64, delta: f64) -> Self {
        Self {
            gamma,
            alpha,
            delta,
            mode: Mode::DistributionFree,
            oracle: OracleKind::Exact,
            epsilon: 1.0,
            seed: 0,
            max_iters: 2000,
            sim_tau: 0.01,
            backend: Backend::Aggregate,
        }
    }
}

/// `x -> sign(<w, psi(x)>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub proj: ProjectionMap,
    pub w: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HypothesisFile {
    kind: ProjectionKind,
    seed: u64,
    proj: Vec<Vec<f64>>,
    w: Vec<f64>,
}

impl Serialize for Hypothesis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HypothesisFile { kind: self.proj.kind(), seed: self.proj.seed(), proj: self.proj.rows(), w: self.w.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Hypothesis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = HypothesisFile::deserialize(d)?;
        let proj = ProjectionMap::from_rows(f.kind, f.proj, f.seed).map_err(serde::de::Error::custom)?;
        if proj.target_dim() != f.w.len() {
            return Err(serde::de::Error::custom("weight length does not match the projection"));
        }
        Ok(Self { proj, w: f.w })
    }
}

impl Classifier for Hypothesis {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_sign(dot(&self.w, &self.proj.apply(x)?)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerReport {
    pub mode: Mode,
    pub oracle: OracleKind,
    pub d: usize,
    pub d_prime: usize,
    pub projection: ProjectionKind,
    pub surrogate_gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub iterations: u64,
    pub iterations_schedule: u64,
    pub step: f64,
    pub query_tolerance: f64,
    pub sim_tau: Option<f64>,
    pub queries: usize,
    pub label_dependent_queries: usize,
    pub rounds: usize,
    pub label_dependent_rounds: Vec<usize>,
    pub label_non_adaptive: bool,
    pub samples: Option<u64>,
    pub epsilon: Option<f64>,
    pub bits: Option<u32>,
    /// Largest per-example budget charged (epsilon or bits).
    pub max_spent: Option<f64>,
    /// Per-round query and sample counts of the simulated protocol.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protocol: Vec<QueryRecord>,
    pub surrogate: f64,
    pub error: f64,
}

fn check_margin(src: &LabeledSource, gamma: f64) -> Result<()> {
    if let TargetFunction::LinearThreshold { w, .. } = src.target() {
        let m = exact_margin(w, src)?;
        if m < gamma - 1e-9 {
            return Err(Error::Precondition(format!(
                "target separates the support with margin {m}, below the requested {gamma}"
            )));
        }
    }
    Ok(())
}

/// Projects (when the projected dimension is smaller than `d`), then runs
/// the descent against the configured oracle. Returns the hypothesis, a
/// report with its exact error on `src`, and the oracle transcript.
pub fn learn_halfspace(src: &LabeledSource, cfg: &LearnerConfig) -> Result<(Hypothesis, LearnerReport, Transcript)> {
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {}", cfg.delta)));
    }
    check_margin(src, cfg.gamma)?;
    let d = src.dim();
    let half = cfg.delta / 2.0;
    let target_dim = jl_dimension(cfg.gamma, half)?;
    let (proj, surrogate_gamma) = if target_dim >= d {
        (ProjectionMap::identity(d), cfg.gamma)
    } else {
        (ProjectionMap::gaussian(d, target_dim, seed::derive(cfg.seed, "projection", 0))?, cfg.gamma / 2.0)
    };
    let mapped = proj.map_source(src)?;
    let params = SurrogateParams::new(surrogate_gamma, cfg.alpha, proj.target_dim())?;
    let psgd = PsgdConfig::from_params(&params, Some(cfg.max_iters));
    let mut driver = PsgdDriver {
        params,
        cfg: psgd,
        marginal: (cfg.mode == Mode::KnownDistribution).then(|| mapped.dist().clone()),
    };

    let sample_seed = seed::derive(cfg.seed, "sample", 0);
    let sim_seed = seed::derive(cfg.seed, "simulate", 0);
    let (outcome, transcript, samples, epsilon, bits, sim_tau, max_spent, protocol) = match cfg.oracle {
        OracleKind::Exact => {
            let mut o = ExactOracle::new(&mapped);
            let out = driver.run(&mut o)?;
            (out, o.into_transcript(), None, None, None, None, None, Vec::new())
        }
        OracleKind::Ldp => {
            let n = ldp_required_samples(&driver.plan(), cfg.epsilon, half, Some(cfg.sim_tau));
            let store = VirtualDataset::new(Arc::new(mapped.clone()), n, sample_seed);
            let c = LdpCompileConfig::new(cfg.epsilon, half, sim_seed)
                .with_tau(cfg.sim_tau)
                .with_backend(cfg.backend);
            let (out, rep, t) = compile_sq_to_ldp(&mut driver, &store, &c)?;
            let spent = Some(rep.max_spent);
            (out, t, Some(rep.n), Some(cfg.epsilon), None, Some(cfg.sim_tau), spent, rep.queries)
        }
        OracleKind::Comm => {
            let n = comm_required_samples(&driver.plan(), half, Some(cfg.sim_tau));
            let store = VirtualDataset::new(Arc::new(mapped.clone()), n, sample_seed);
            let c = CommCompileConfig::new(half, sim_seed).with_tau(cfg.sim_tau).with_backend(cfg.backend);
            let (out, rep, t) = compile_sq_to_comm(&mut driver, &store, &c)?;
            let spent = Some(f64::from(rep.max_spent));
            (out, t, Some(rep.n), None, Some(rep.bits), Some(cfg.sim_tau), spent, rep.queries)
        }
    };

    let hyp = Hypothesis { proj, w: outcome.w.clone() };
    let profile = adaptivity_profile(&transcript);
    let report = LearnerReport {
        mode: cfg.mode,
        oracle: cfg.oracle,
        d,
        d_prime: hyp.proj.target_dim(),
        projection: hyp.proj.kind(),
        surrogate_gamma,
        alpha: cfg.alpha,
        beta: params.beta,
        delta: cfg.delta,
        iterations: outcome.iterations,
        iterations_schedule: params.iterations(),
        step: outcome.step,
        query_tolerance: psgd.tolerance,
        sim_tau,
        queries: transcript.len(),
        label_dependent_queries: transcript.label_dependent_count(),
        rounds: profile.rounds,
        label_dependent_rounds: profile.label_dependent_rounds.into_iter().collect(),
        label_non_adaptive: assert_label_non_adaptive(&transcript),
        samples,
        epsilon,
        bits,
        max_spent,
        protocol,
        surrogate: surrogate_value(&outcome.w, &mapped, &params)?,
        error: classification_error(&hyp, src)?,
    };
    Ok((hyp, report, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::synthetic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn src(d: usize, seed: u64) -> LabeledSource {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        synthetic::margin_source(d, 0.3, 80, &mut rng).unwrap()
    }

    #[test]
    fn exact_identity_run() {
        let s = src(8, 1);
        let mut cfg = LearnerConfig::new(0.3, 0.15, 0.05);
        cfg.max_iters = 500;
        let (h, rep, t) = learn_halfspace(&s, &cfg).unwrap();
        assert_eq!(rep.projection, ProjectionKind::Identity);
        assert_eq!(rep.label_dependent_queries, 8);
        assert!(rep.label_non_adaptive);
        assert_eq!(rep.label_dependent_rounds, vec![0]);
        assert_eq!(t.len() as u64, 8 * rep.iterations + 8);
        assert!(rep.error <= 0.15, "{}", rep.error);
        let json = serde_json::to_string(&h).unwrap();
        let back: Hypothesis = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn known_distribution_ldp_is_one_round() {
        let s = src(6, 2);
        let mut cfg = LearnerConfig::new(0.3, 0.15, 0.05);
        cfg.mode = Mode::KnownDistribution;
        cfg.oracle = OracleKind::Ldp;
        cfg.max_iters = 300;
        let (_, rep, t) = learn_halfspace(&s, &cfg).unwrap();
        assert_eq!(rep.rounds, 1);
        assert_eq!(t.len(), 6);
        assert!(rep.samples.unwrap() > 0);
    }

    #[test]
    fn margin_violation_is_precondition_error() {
        let s = src(4, 3);
        let cfg = LearnerConfig::new(0.5, 0.15, 0.05);
        assert!(matches!(learn_halfspace(&s, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn gaussian_projection_when_dimension_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = synthetic::margin_source(300, 0.9, 40, &mut rng).unwrap();
        let mut cfg = LearnerConfig::new(0.9, 0.15, 0.2);
        cfg.max_iters = 50;
        let (h, rep, _) = learn_halfspace(&s, &cfg).unwrap();
        assert_eq!(rep.projection, ProjectionKind::Gaussian);
        assert_eq!(rep.d_prime, jl_dimension(0.9, 0.1).unwrap());
        assert_eq!(rep.surrogate_gamma, 0.45);
        assert_eq!(h.w.len(), rep.d_prime);
    }
}
