use std::path::PathBuf;
use std::sync::Arc;

use clap::ValueEnum;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{learn_dl, DlLearnerConfig, DlOracle, DlReport};
use crate::comm::{comm_required_samples, compile_sq_to_comm, CommCompileConfig};
use crate::domain::{synthetic, FiniteDistribution, LabeledSource, TargetFunction, VirtualDataset};
use crate::experiment::output::{csv_table, join, json, Artifacts, CheckResult};
use crate::ldp::{compile_sq_to_ldp, ldp_required_samples, Backend, LdpCompileConfig, QueryRecord};
use crate::lowerbound::{
    correlation_cover_check, decision_list_class, halfspace_class, negation_fooling_demo, negation_pair,
    AdversarialCertificate, CorrelationVoter, EnumeratedClass, FoolingReport, HypothesisSet,
};
use crate::margin::{jl_dimension, jl_project, learn_halfspace, projected_margins, LearnerConfig, LearnerReport, Mode, OracleKind};
use crate::sq::{exact_oracle_answer, QueryPlan, SqDriver, StatOracle, StatQuery};
use crate::{seed, Error, Result};

/// The |X| = 4 parity source shipped with the crate.
pub const PARITY4_JSON: &str = include_str!("../../data/parity4.json");

fn clap_default<T: clap::Args + clap::FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults").no_binary_name(true));
    let m = cmd.try_get_matches_from(Vec::<String>::new()).expect("every argument has a default");
    T::from_arg_matches(&m).expect("defaults parse")
}

macro_rules! clap_defaults {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                clap_default()
            }
        }
    )*};
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidInput(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn trial_seed(root: u64, i: usize) -> u64 {
    seed::derive(root, "trial", i as u64)
}

fn success_check(successes: usize, trials: usize, min_rate: f64, what: &str) -> CheckResult {
    let rate = successes as f64 / trials as f64;
    CheckResult::new(rate >= min_rate, format!("{what} in {successes}/{trials} trials (need rate >= {min_rate})"))
}

// ---------------------------------------------------------------- learn-halfspace

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct HalfspaceArgs {
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.15)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Mode::DistributionFree)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = OracleKind::Exact)]
    pub oracle: OracleKind,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Support size of the generated margin source.
    #[arg(long, default_value_t = 200)]
    pub support: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: u64,
    #[arg(long, default_value_t = 0.01)]
    pub sim_tau: f64,
    #[arg(long, value_enum, default_value_t = Backend::Aggregate)]
    pub backend: Backend,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Learn this source (JSON) instead of generating one per trial.
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub min_success: f64,
}

#[derive(Debug, Serialize)]
struct HalfspaceRow {
    trial: usize,
    seed: u64,
    d: usize,
    d_prime: usize,
    projection: crate::margin::ProjectionKind,
    mode: Mode,
    oracle: OracleKind,
    iterations: u64,
    queries: usize,
    label_dependent_queries: usize,
    rounds: usize,
    label_dependent_rounds: String,
    label_non_adaptive: bool,
    samples: Option<u64>,
    surrogate: f64,
    error: f64,
    success: bool,
}

#[derive(Debug, Serialize)]
struct TrialSummary {
    trials: usize,
    successes: usize,
    success_rate: f64,
}

#[derive(Debug, Serialize)]
struct HalfspaceOutput<'a> {
    command: &'static str,
    config: &'a HalfspaceArgs,
    summary: TrialSummary,
    reports: Vec<LearnerReport>,
}

impl HalfspaceArgs {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidInput(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        check_rate("alpha", self.alpha)?;
        check_rate("delta", self.delta)?;
        check_positive("epsilon", self.epsilon)?;
        check_positive("sim_tau", self.sim_tau)?;
        check_count("trials", self.trials)?;
        check_count("support", self.support)?;
        if self.d < 2 && self.source.is_none() {
            return Err(Error::InvalidInput("generated margin sources need d >= 2".into()));
        }
        Ok(())
    }

    fn learner_config(&self, seed: u64) -> LearnerConfig {
        let mut c = LearnerConfig::new(self.gamma, self.alpha, self.delta);
        c.mode = self.mode;
        c.oracle = self.oracle;
        c.epsilon = self.epsilon;
        c.seed = seed;
        c.max_iters = self.max_iters;
        c.sim_tau = self.sim_tau;
        c.backend = self.backend;
        c
    }

    fn source(&self, seed: u64) -> Result<LabeledSource> {
        match &self.source {
            Some(p) => LabeledSource::load(p),
            None => synthetic::margin_source(self.d, self.gamma, self.support, &mut seed::rng(seed, "source", 0)),
        }
    }

    pub fn run(&self) -> Result<Artifacts> {
        self.validate()?;
        let runs = (0..self.trials)
            .into_par_iter()
            .map(|i| {
                let s = trial_seed(self.seed, i);
                let src = self.source(s)?;
                let (h, rep, t) = learn_halfspace(&src, &self.learner_config(s))?;
                Ok((s, h, rep, t))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(runs.len());
        for (i, (s, _, r, _)) in runs.iter().enumerate() {
            rows.push(HalfspaceRow {
                trial: i,
                seed: *s,
                d: r.d,
                d_prime: r.d_prime,
                projection: r.projection,
                mode: r.mode,
                oracle: r.oracle,
                iterations: r.iterations,
                queries: r.queries,
                label_dependent_queries: r.label_dependent_queries,
                rounds: r.rounds,
                label_dependent_rounds: join(&r.label_dependent_rounds),
                label_non_adaptive: r.label_non_adaptive,
                samples: r.samples,
                surrogate: r.surrogate,
                error: r.error,
                success: r.error <= self.alpha,
            });
        }
        let successes = rows.iter().filter(|r| r.success).count();
        let mut art = Artifacts::default();
        art.add("learn_halfspace.csv", csv_table("learn_halfspace", &rows)?);
        let (_, h0, _, t0) = &runs[0];
        art.add("learn_halfspace_hypothesis.json", json(h0)?);
        art.add("learn_halfspace_transcript.jsonl", t0.to_jsonl());
        let reports = runs
            .into_iter()
            .map(|(_, _, mut r, _)| {
                r.protocol.clear();
                r
            })
            .collect();
        let summary = TrialSummary { trials: self.trials, successes, success_rate: successes as f64 / self.trials as f64 };
        art.add(
            "learn_halfspace.json",
            json(&HalfspaceOutput { command: "learn-halfspace", config: self, summary, reports })?,
        );
        art.summary = format!("learn-halfspace: error <= {} in {successes}/{} trials", self.alpha, self.trials);
        art.check = Some(success_check(successes, self.trials, self.min_success, "error <= alpha"));
        Ok(art)
    }
}

// ---------------------------------------------------------------- learn-dl

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DlOracleKind {
    Exact,
    Ldp,
    Comm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct DlArgs {
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Length of the random target lists.
    #[arg(long, default_value_t = 5)]
    pub len: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = DlOracleKind::Exact)]
    pub oracle: DlOracleKind,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Backend::Aggregate)]
    pub backend: Backend,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Learn this source (JSON) instead of a random list under the uniform cube.
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub min_success: f64,
}

#[derive(Debug, Serialize)]
struct DlRow {
    trial: usize,
    seed: u64,
    d: usize,
    oracle: DlOracleKind,
    list_len: usize,
    queries: usize,
    rounds: usize,
    label_dependent_rounds: usize,
    samples: Option<u64>,
    error: f64,
    success: bool,
}

#[derive(Debug, Serialize)]
struct DlRun {
    report: DlReport,
    target: crate::domain::TargetSpec,
    learned: crate::domain::TargetSpec,
}

#[derive(Debug, Serialize)]
struct DlOutput<'a> {
    command: &'static str,
    config: &'a DlArgs,
    summary: TrialSummary,
    runs: Vec<DlRun>,
}

impl DlArgs {
    fn validate(&self) -> Result<()> {
        check_count("d", self.d)?;
        check_rate("alpha", self.alpha)?;
        check_rate("delta", self.delta)?;
        check_positive("epsilon", self.epsilon)?;
        check_count("trials", self.trials)
    }

    pub(crate) fn oracle(&self) -> DlOracle {
        match self.oracle {
            DlOracleKind::Exact => DlOracle::Exact,
            DlOracleKind::Ldp => DlOracle::Ldp { epsilon: self.epsilon, delta: self.delta, backend: self.backend },
            DlOracleKind::Comm => DlOracle::Comm { delta: self.delta, backend: self.backend },
        }
    }

    fn source(&self, seed: u64) -> Result<LabeledSource> {
        match &self.source {
            Some(p) => LabeledSource::load(p),
            None => {
                let f = synthetic::random_decision_list(self.d, self.len, &mut seed::rng(seed, "target", 0));
                LabeledSource::new(FiniteDistribution::uniform_hypercube(self.d)?, f)
            }
        }
    }

    pub fn run(&self) -> Result<Artifacts> {
        self.validate()?;
        let cfg = DlLearnerConfig::new(self.d, self.alpha)?;
        let runs = (0..self.trials)
            .into_par_iter()
            .map(|i| {
                let s = trial_seed(self.seed, i);
                let src = self.source(s)?;
                let (list, rep, t) = learn_dl(&src, &cfg, self.oracle(), s)?;
                Ok((s, src, list, rep, t))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<DlRow> = runs
            .iter()
            .enumerate()
            .map(|(i, (s, _, _, r, _))| DlRow {
                trial: i,
                seed: *s,
                d: r.d,
                oracle: self.oracle,
                list_len: r.list_len,
                queries: r.queries,
                rounds: r.rounds,
                label_dependent_rounds: r.label_dependent_rounds.len(),
                samples: r.samples,
                error: r.error,
                success: r.error <= self.alpha,
            })
            .collect();
        let successes = rows.iter().filter(|r| r.success).count();
        let mut art = Artifacts::default();
        art.add("learn_dl.csv", csv_table("learn_dl", &rows)?);
        art.add("learn_dl_transcript.jsonl", runs[0].4.to_jsonl());
        let runs = runs
            .into_iter()
            .map(|(_, src, list, mut report, _)| {
                report.protocol.clear();
                DlRun { report, target: src.target().to_spec(), learned: list.to_spec() }
            })
            .collect();
        let summary = TrialSummary { trials: self.trials, successes, success_rate: successes as f64 / self.trials as f64 };
        art.add("learn_dl.json", json(&DlOutput { command: "learn-dl", config: self, summary, runs })?);
        art.summary = format!("learn-dl: error <= {} in {successes}/{} trials", self.alpha, self.trials);
        art.check = Some(success_check(successes, self.trials, self.min_success, "error <= alpha"));
        Ok(art)
    }
}

// ---------------------------------------------------------------- estimate-mean

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ChannelKind {
    Ldp,
    Comm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct MeanArgs {
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Number of statistical queries answered per trial.
    #[arg(long, default_value_t = 10)]
    pub queries: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = ChannelKind::Ldp)]
    pub channel: ChannelKind,
    #[arg(long, value_enum, default_value_t = Backend::PerSample)]
    pub backend: Backend,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 50)]
    pub support: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Mixed label-dependent and label-independent queries over `d` coordinates.
pub fn probe_queries(d: usize, t: usize, tau: f64) -> Result<Vec<StatQuery>> {
    (0..t)
        .map(|k| {
            let j = k % d;
            match k % 3 {
                0 => StatQuery::correlational(tau, move |x| x[j]),
                1 => StatQuery::on_points(tau, move |x| 2.0 * x[j].abs() - 1.0),
                _ => StatQuery::new(tau, true, move |x, y| if y.value() * x[j] >= 0.0 { 0.8 } else { -0.6 }),
            }
        })
        .collect()
}

/// Issues a fixed list of queries in round 0.
pub struct FixedQueries(pub Vec<StatQuery>);

impl SqDriver for FixedQueries {
    type Output = Vec<f64>;

    fn plan(&self) -> QueryPlan {
        self.0.iter().fold(QueryPlan::new(), |p, q| p.with(1, q.tolerance()))
    }

    fn run(&mut self, oracle: &mut dyn StatOracle) -> Result<Vec<f64>> {
        self.0.iter().map(|q| oracle.answer(q, 0)).collect()
    }
}

#[derive(Debug, Serialize)]
struct MeanRow {
    trial: usize,
    seed: u64,
    n: u64,
    max_deviation: f64,
    failed: bool,
}

#[derive(Debug, Serialize)]
struct MeanOutput<'a> {
    command: &'static str,
    config: &'a MeanArgs,
    samples_per_trial: u64,
    failures: usize,
    failure_fraction: f64,
}

/// Answers of a fixed query list through the simulated channel, and the
/// number of examples the protocol consumed.
pub fn simulate_queries(
    src: &LabeledSource,
    queries: Vec<StatQuery>,
    channel: ChannelKind,
    epsilon: f64,
    delta: f64,
    backend: Backend,
    seed_root: u64,
) -> Result<(Vec<f64>, u64)> {
    let mut driver = FixedQueries(queries);
    let plan = driver.plan();
    let src = Arc::new(src.clone());
    let sample_seed = seed::derive(seed_root, "sample", 0);
    let sim_seed = seed::derive(seed_root, "simulate", 0);
    match channel {
        ChannelKind::Ldp => {
            let store = VirtualDataset::new(src, ldp_required_samples(&plan, epsilon, delta, None), sample_seed);
            let cfg = LdpCompileConfig::new(epsilon, delta, sim_seed).with_backend(backend);
            let (a, rep, _) = compile_sq_to_ldp(&mut driver, &store, &cfg)?;
            Ok((a, rep.n))
        }
        ChannelKind::Comm => {
            let store = VirtualDataset::new(src, comm_required_samples(&plan, delta, None), sample_seed);
            let cfg = CommCompileConfig::new(delta, sim_seed).with_backend(backend);
            let (a, rep, _) = compile_sq_to_comm(&mut driver, &store, &cfg)?;
            Ok((a, rep.n))
        }
    }
}

impl MeanArgs {
    fn validate(&self) -> Result<()> {
        check_positive("epsilon", self.epsilon)?;
        check_positive("tau", self.tau)?;
        check_rate("delta", self.delta)?;
        check_count("queries", self.queries)?;
        check_count("trials", self.trials)?;
        check_count("support", self.support)?;
        if self.d < 2 {
            return Err(Error::InvalidInput("estimate-mean needs d >= 2".into()));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Artifacts> {
        self.validate()?;
        let rows = (0..self.trials)
            .into_par_iter()
            .map(|i| {
                let s = trial_seed(self.seed, i);
                let src = synthetic::margin_source(self.d, 0.1, self.support, &mut seed::rng(s, "source", 0))?;
                let qs = probe_queries(self.d, self.queries, self.tau)?;
                let exact = qs.iter().map(|q| exact_oracle_answer(&src, q)).collect::<Result<Vec<_>>>()?;
                let (ans, n) = simulate_queries(&src, qs, self.channel, self.epsilon, self.delta, self.backend, s)?;
                let max_deviation = ans.iter().zip(&exact).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
                Ok(MeanRow { trial: i, seed: s, n, max_deviation, failed: max_deviation > self.tau })
            })
            .collect::<Result<Vec<_>>>()?;
        let failures = rows.iter().filter(|r| r.failed).count();
        let fraction = failures as f64 / self.trials as f64;
        let mut art = Artifacts::default();
        art.add("estimate_mean.csv", csv_table("estimate_mean", &rows)?);
        art.add(
            "estimate_mean.json",
            json(&MeanOutput {
                command: "estimate-mean",
                config: self,
                samples_per_trial: rows[0].n,
                failures,
                failure_fraction: fraction,
            })?,
        );
        art.summary = format!("estimate-mean: failure fraction {fraction} over {} trials", self.trials);
        art.check = Some(CheckResult::new(
            fraction <= self.delta,
            format!("failure fraction {fraction} (need <= {})", self.delta),
        ));
        Ok(art)
    }
}

// ---------------------------------------------------------------- adversary

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct AdversaryArgs {
    /// `dl`, `hs`, or `explicit:<file>` with `{"points", "functions"}`.
    #[arg(long, default_value = "dl")]
    pub class: String,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct AdversaryRow {
    index: usize,
    value: f64,
    below_threshold: bool,
}

#[derive(Debug, Serialize)]
struct AdversaryOutput<'a> {
    command: &'static str,
    config: &'a AdversaryArgs,
    points: usize,
    class_size: usize,
    threshold: f64,
    hypotheses: Vec<Vec<f64>>,
    covered: bool,
    witness_index: Option<usize>,
    certificate: Option<&'a AdversarialCertificate>,
}

impl AdversaryArgs {
    pub fn class(&self) -> Result<EnumeratedClass> {
        match self.class.as_str() {
            "dl" => decision_list_class(self.d),
            "hs" => halfspace_class(self.d),
            other => match other.strip_prefix("explicit:") {
                Some(path) => EnumeratedClass::load(path),
                None => Err(Error::InvalidInput(format!("unknown class {other:?}; use dl, hs or explicit:<file>"))),
            },
        }
    }

    pub fn run(&self) -> Result<Artifacts> {
        check_count("m", self.m)?;
        let class = self.class()?;
        let mut rng = seed::rng(self.seed, "hypotheses", 0);
        let table: Vec<Vec<f64>> = (0..self.m)
            .map(|_| class.points.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let set = HypothesisSet::from_table(&class.points, table.clone())?;
        let threshold = 1.0 / self.m as f64;
        let verdict = correlation_cover_check(&set, &class.functions, &class.points, threshold)?;
        let rows: Vec<AdversaryRow> = verdict
            .values
            .iter()
            .enumerate()
            .map(|(index, &value)| AdversaryRow { index, value, below_threshold: value < threshold })
            .collect();
        let mut art = Artifacts::default();
        art.add("adversary.csv", csv_table("adversary", &rows)?);
        let check = match &verdict.witness {
            Some((i, cert)) => {
                art.add("adversary_certificate.json", json(cert)?);
                let again = cert.recompute(&set)?;
                CheckResult::new(
                    (again - cert.value).abs() <= 1e-9 && cert.duality_gap <= 1e-7,
                    format!("witness {i}: value {} recomputed {again}", cert.value),
                )
            }
            None => CheckResult::new(true, "covered: no distribution defeats every hypothesis"),
        };
        art.add(
            "adversary.json",
            json(&AdversaryOutput {
                command: "adversary",
                config: self,
                points: class.points.len(),
                class_size: class.functions.len(),
                threshold,
                hypotheses: table,
                covered: verdict.covered,
                witness_index: verdict.witness.as_ref().map(|w| w.0),
                certificate: verdict.witness.as_ref().map(|w| &w.1),
            })?,
        );
        art.summary = format!(
            "adversary: class {} with {} functions, covered = {}",
            self.class,
            class.functions.len(),
            verdict.covered
        );
        art.check = Some(check);
        Ok(art)
    }
}

// ---------------------------------------------------------------- adversary-demo

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct DemoArgs {
    /// Source whose target and its negation form the class; defaults to the shipped parity example.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Correlational queries issued by the demo learner.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct DemoRow {
    m: usize,
    certificate: bool,
    value: Option<f64>,
    identical_transcripts: bool,
    error_f: f64,
    error_neg_f: f64,
    max_error: f64,
}

#[derive(Debug, Serialize)]
struct DemoOutput<'a> {
    command: &'static str,
    config: &'a DemoArgs,
    report: &'a FoolingReport,
}

pub fn shipped_parity4() -> Result<LabeledSource> {
    LabeledSource::from_json(PARITY4_JSON)
}

/// Runs the correlation-voter demo; shared by `adversary-demo` and `separation`.
pub fn fooling_demo(src: &LabeledSource, k: usize, m: usize, seed_root: u64) -> Result<FoolingReport> {
    check_count("m", m)?;
    if k + 1 > m {
        return Err(Error::Precondition(format!("the demo learner issues k + 1 = {} queries, more than m = {m}", k + 1)));
    }
    let mut learner = CorrelationVoter::new(src.support().to_vec(), k, 1.0 / m as f64, seed_root)?;
    negation_fooling_demo(&mut learner, &negation_pair(src), src.support(), m)
}

/// Identical answers, complementary errors, and a failing side.
pub fn fooling_holds(r: &FoolingReport) -> bool {
    r.identical_transcripts && r.error_f + r.error_neg_f == 1.0 && r.max_error >= 0.5
}

impl DemoArgs {
    pub fn run(&self) -> Result<Artifacts> {
        let src = match &self.source {
            Some(p) => LabeledSource::load(p)?,
            None => shipped_parity4()?,
        };
        let report = fooling_demo(&src, self.k, self.m, self.seed)?;
        let mut art = Artifacts::default();
        let row = DemoRow {
            m: report.m,
            certificate: report.certificate.is_some(),
            value: report.certificate.as_ref().map(|c| c.value),
            identical_transcripts: report.identical_transcripts,
            error_f: report.error_f,
            error_neg_f: report.error_neg_f,
            max_error: report.max_error,
        };
        art.add("adversary_demo.csv", csv_table("adversary_demo", &[row])?);
        let check = match &report.certificate {
            Some(cert) => {
                art.add("adversary_demo_certificate.json", json(cert)?);
                CheckResult::new(
                    fooling_holds(&report),
                    format!(
                        "identical transcripts {}, error_f + error_-f = {}",
                        report.identical_transcripts,
                        report.error_f + report.error_neg_f
                    ),
                )
            }
            None => CheckResult::new(true, "no certificate: every target correlates with some query"),
        };
        art.add("adversary_demo.json", json(&DemoOutput { command: "adversary-demo", config: self, report: &report })?);
        art.summary = format!("adversary-demo: max error {}", report.max_error);
        art.check = Some(check);
        Ok(art)
    }
}

// ---------------------------------------------------------------- jl-check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct JlArgs {
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 200)]
    pub support: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.9)]
    pub min_success: f64,
}

#[derive(Debug, Serialize)]
struct JlRow {
    trial: usize,
    seed: u64,
    d_prime: usize,
    min_margin: f64,
    bad_fraction: f64,
    success: bool,
}

#[derive(Debug, Serialize)]
struct JlOutput<'a> {
    command: &'static str,
    config: &'a JlArgs,
    d_prime: usize,
    summary: TrialSummary,
}

impl JlArgs {
    /// Fraction of support points whose projected margin falls below `gamma / 2`, per trial.
    pub fn trial(&self, i: usize) -> Result<(u64, f64, f64)> {
        let s = trial_seed(self.seed, i);
        let src = synthetic::margin_source(self.d, self.gamma, self.support, &mut seed::rng(s, "source", 0))?;
        let TargetFunction::LinearThreshold { w, .. } = src.target() else {
            unreachable!("margin sources carry a linear threshold")
        };
        let (map, _) = jl_project(&src, self.gamma, self.delta, seed::derive(s, "projection", 0))?;
        let m = projected_margins(&map, &src, w)?;
        let bad = m.iter().filter(|&&v| v < self.gamma / 2.0).count() as f64 / m.len() as f64;
        Ok((s, bad, m.iter().copied().fold(f64::INFINITY, f64::min)))
    }

    pub fn run(&self) -> Result<Artifacts> {
        check_rate("delta", self.delta)?;
        check_count("trials", self.trials)?;
        check_count("support", self.support)?;
        let d_prime = jl_dimension(self.gamma, self.delta)?;
        if self.d < 2 {
            return Err(Error::InvalidInput("jl-check needs d >= 2".into()));
        }
        let rows = (0..self.trials)
            .into_par_iter()
            .map(|i| {
                let (seed, bad_fraction, min_margin) = self.trial(i)?;
                Ok(JlRow { trial: i, seed, d_prime, min_margin, bad_fraction, success: bad_fraction <= self.delta })
            })
            .collect::<Result<Vec<_>>>()?;
        let successes = rows.iter().filter(|r| r.success).count();
        let mut art = Artifacts::default();
        art.add("jl_check.csv", csv_table("jl_check", &rows)?);
        let summary = TrialSummary { trials: self.trials, successes, success_rate: successes as f64 / self.trials as f64 };
        art.add("jl_check.json", json(&JlOutput { command: "jl-check", config: self, d_prime, summary })?);
        art.summary = format!("jl-check: margin kept in {successes}/{} trials (d' = {d_prime})", self.trials);
        art.check = Some(success_check(successes, self.trials, self.min_success, "bad fraction <= delta"));
        Ok(art)
    }
}

// ---------------------------------------------------------------- compile-report

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum LearnerKind {
    Halfspace,
    Dl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct CompileArgs {
    #[arg(long, value_enum, default_value_t = LearnerKind::Halfspace)]
    pub learner: LearnerKind,
    #[arg(long, value_enum, default_value_t = ChannelKind::Ldp)]
    pub channel: ChannelKind,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.15)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: u64,
    #[arg(long, value_enum, default_value_t = Mode::DistributionFree)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Backend::Aggregate)]
    pub backend: Backend,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct CompileOutput<'a> {
    command: &'static str,
    config: &'a CompileArgs,
    rounds: usize,
    label_dependent_rounds: Vec<usize>,
    samples: u64,
    budget: f64,
    max_spent: f64,
    error: f64,
    queries: &'a [QueryRecord],
}

impl CompileArgs {
    pub fn run(&self) -> Result<Artifacts> {
        check_rate("alpha", self.alpha)?;
        check_rate("delta", self.delta)?;
        check_positive("epsilon", self.epsilon)?;
        let budget = match self.channel {
            ChannelKind::Ldp => self.epsilon,
            ChannelKind::Comm => 1.0,
        };
        let (rounds, ld_rounds, samples, max_spent, error, protocol) = match self.learner {
            LearnerKind::Halfspace => {
                let hs = HalfspaceArgs {
                    d: self.d,
                    gamma: self.gamma,
                    alpha: self.alpha,
                    delta: self.delta,
                    mode: self.mode,
                    oracle: match self.channel {
                        ChannelKind::Ldp => OracleKind::Ldp,
                        ChannelKind::Comm => OracleKind::Comm,
                    },
                    epsilon: self.epsilon,
                    max_iters: self.max_iters,
                    backend: self.backend,
                    seed: self.seed,
                    ..HalfspaceArgs::default()
                };
                hs.validate()?;
                let s = trial_seed(self.seed, 0);
                let (_, r, _) = learn_halfspace(&hs.source(s)?, &hs.learner_config(s))?;
                (r.rounds, r.label_dependent_rounds, r.samples, r.max_spent, r.error, r.protocol)
            }
            LearnerKind::Dl => {
                let dl = DlArgs {
                    d: self.d,
                    len: self.d.min(5),
                    alpha: self.alpha,
                    oracle: match self.channel {
                        ChannelKind::Ldp => DlOracleKind::Ldp,
                        ChannelKind::Comm => DlOracleKind::Comm,
                    },
                    epsilon: self.epsilon,
                    delta: self.delta,
                    backend: self.backend,
                    seed: self.seed,
                    ..DlArgs::default()
                };
                dl.validate()?;
                let s = trial_seed(self.seed, 0);
                let cfg = DlLearnerConfig::new(self.d, self.alpha)?;
                let (_, r, _) = learn_dl(&dl.source(s)?, &cfg, dl.oracle(), s)?;
                (r.rounds, r.label_dependent_rounds, r.samples, r.max_spent, r.error, r.protocol)
            }
        };
        let samples = samples.unwrap_or(0);
        let max_spent = max_spent.unwrap_or(0.0);
        let mut art = Artifacts::default();
        art.add("compile_report.csv", csv_table("compile_report", &protocol)?);
        art.add(
            "compile_report.json",
            json(&CompileOutput {
                command: "compile-report",
                config: self,
                rounds,
                label_dependent_rounds: ld_rounds,
                samples,
                budget,
                max_spent,
                error,
                queries: &protocol,
            })?,
        );
        let accounted: u64 = protocol.iter().map(|q| q.samples).sum();
        art.summary = format!("compile-report: {rounds} rounds, {samples} examples, max spent {max_spent} of {budget}");
        art.check = Some(CheckResult::new(
            max_spent <= budget * (1.0 + 1e-12) && accounted == samples,
            format!("max spent {max_spent} of {budget}; {accounted} of {samples} examples accounted"),
        ));
        Ok(art)
    }
}

// ---------------------------------------------------------------- separation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 6)]
    pub dl_d: usize,
    #[arg(long, default_value_t = 4)]
    pub dl_len: usize,
    #[arg(long, default_value_t = 20)]
    pub hs_d: usize,
    #[arg(long, default_value_t = 500)]
    pub hs_max_iters: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationRow {
    pub algorithm: String,
    pub class: String,
    pub rounds: usize,
    pub label_dependent_rounds: usize,
    pub samples: Option<u64>,
    pub final_error: f64,
}

#[derive(Debug, Serialize)]
struct SeparationOutput<'a> {
    command: &'static str,
    config: &'a SeparationArgs,
    rows: &'a [SeparationRow],
    fooling: &'a FoolingReport,
    halfspace_label_non_adaptive: bool,
}

impl SeparationArgs {
    pub fn run(&self) -> Result<Artifacts> {
        check_positive("epsilon", self.epsilon)?;
        let dl_alpha = 0.1;
        let dl = DlArgs {
            d: self.dl_d,
            len: self.dl_len,
            alpha: dl_alpha,
            oracle: DlOracleKind::Ldp,
            epsilon: self.epsilon,
            seed: seed::derive(self.seed, "separation", 0),
            ..DlArgs::default()
        };
        dl.validate()?;
        let s = trial_seed(dl.seed, 0);
        let (_, a, _) = learn_dl(&dl.source(s)?, &DlLearnerConfig::new(dl.d, dl_alpha)?, dl.oracle(), s)?;

        let fooling = fooling_demo(&shipped_parity4()?, 3, 4, seed::derive(self.seed, "separation", 1))?;

        let hs = HalfspaceArgs {
            d: self.hs_d,
            oracle: OracleKind::Ldp,
            epsilon: self.epsilon,
            max_iters: self.hs_max_iters,
            seed: seed::derive(self.seed, "separation", 2),
            ..HalfspaceArgs::default()
        };
        hs.validate()?;
        let s = trial_seed(hs.seed, 0);
        let (_, c, _) = learn_halfspace(&hs.source(s)?, &hs.learner_config(s))?;

        let rows = vec![
            SeparationRow {
                algorithm: "interactive decision-list learner (LDP)".into(),
                class: format!("decision lists, d = {}", self.dl_d),
                rounds: a.rounds,
                label_dependent_rounds: a.label_dependent_rounds.len(),
                samples: a.samples,
                final_error: a.error,
            },
            SeparationRow {
                algorithm: "label-non-adaptive correlation voter (adversarial oracle)".into(),
                class: "parity pair on |X| = 4".into(),
                rounds: fooling.rounds,
                label_dependent_rounds: fooling.label_dependent_rounds.len(),
                samples: None,
                final_error: fooling.max_error,
            },
            SeparationRow {
                algorithm: "label-non-adaptive halfspace learner (LDP)".into(),
                class: format!("margin {} halfspaces, d = {}", hs.gamma, self.hs_d),
                rounds: c.rounds,
                label_dependent_rounds: c.label_dependent_rounds.len(),
                samples: c.samples,
                final_error: c.error,
            },
        ];
        let mut art = Artifacts::default();
        art.add("separation.csv", csv_table("separation", &rows)?);
        art.add(
            "separation.json",
            json(&SeparationOutput {
                command: "separation",
                config: self,
                rows: &rows,
                fooling: &fooling,
                halfspace_label_non_adaptive: c.label_non_adaptive,
            })?,
        );
        let ok_a = a.error <= dl_alpha;
        let ok_b = fooling.certificate.is_some() && fooling_holds(&fooling);
        let ok_c = c.label_non_adaptive && c.label_dependent_rounds == [0] && c.error <= hs.alpha;
        art.summary = format!(
            "separation: dl error {}, fooled max error {}, halfspace error {}",
            a.error, fooling.max_error, c.error
        );
        art.check = Some(CheckResult::new(
            ok_a && ok_b && ok_c,
            format!("interactive learner {ok_a}, fooling {ok_b}, label-non-adaptive learner {ok_c}"),
        ));
        Ok(art)
    }
}

clap_defaults!(HalfspaceArgs, DlArgs, MeanArgs, AdversaryArgs, DemoArgs, JlArgs, CompileArgs, SeparationArgs);
