//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `cargo test --test acceptance -- C6 C9` runs a subset.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ldpsq::baselines::{learn_dl, DlLearnerConfig, DlOracle};
use ldpsq::domain::{synthetic, FiniteDistribution, Label, LabeledSource, Point, TargetFunction};
use ldpsq::experiment::{fooling_demo, probe_queries, shipped_parity4, simulate_queries, ChannelKind, JlArgs};
use ldpsq::ldp::{rr_randomizer, verify_randomizer_privacy, Backend};
use ldpsq::lowerbound::{worst_correlation_distribution, HypothesisSet};
use ldpsq::margin::{
    grad_f1, grad_f2, learn_halfspace, surrogate_value, LearnerConfig, Mode, OracleKind, SurrogateParams,
};
use ldpsq::sq::{assert_label_non_adaptive, exact_oracle_answer, ExactOracle, StatQuery};
use ldpsq::{seed, Result};
use rand::Rng;
use rayon::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

type Criterion = fn() -> Result<Outcome>;

// ---------------------------------------------------------------- 1

const PRIVACY_EPS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
const PRIVACY_SLACK: f64 = 1e-9;

fn c1_privacy() -> Result<Outcome> {
    // phi = y * x0 reaches both ends of [-1, 1]; the interior is included for good measure
    let mut inputs = Vec::new();
    for v in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for y in [Label::Pos, Label::Neg] {
            inputs.push((vec![v], y));
        }
    }
    let mut worst_excess = f64::NEG_INFINITY;
    for eps in PRIVACY_EPS {
        let r = rr_randomizer(StatQuery::new(0.1, true, |x, y| y.value() * x[0])?, eps)?;
        let ratio = verify_randomizer_privacy(&r, &inputs)?;
        worst_excess = worst_excess.max(ratio - eps.exp());
    }
    outcome(worst_excess <= PRIVACY_SLACK, format!("max ratio - e^eps = {worst_excess:.3e} (need <= {PRIVACY_SLACK:e})"))
}

// ---------------------------------------------------------------- 2, 3

const MEAN_QUERIES: usize = 10;
const MEAN_TAU: f64 = 0.1;
const MEAN_DELTA: f64 = 0.1;
const MEAN_EPS: f64 = 1.0;
const MEAN_TRIALS: usize = 200;

fn mean_failures(channel: ChannelKind) -> Result<(usize, u64)> {
    let runs = (0..MEAN_TRIALS)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(channel as u64, "acceptance-mean", i as u64);
            let src = synthetic::margin_source(3, 0.1, 50, &mut seed::rng(s, "source", 0))?;
            let qs = probe_queries(3, MEAN_QUERIES, MEAN_TAU)?;
            let exact = qs.iter().map(|q| exact_oracle_answer(&src, q)).collect::<Result<Vec<_>>>()?;
            let (ans, n) = simulate_queries(&src, qs, channel, MEAN_EPS, MEAN_DELTA, Backend::PerSample, s)?;
            let failed = ans.iter().zip(&exact).any(|(a, e)| (a - e).abs() > MEAN_TAU);
            Ok((failed, n))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((runs.iter().filter(|r| r.0).count(), runs[0].1))
}

fn mean_criterion(channel: ChannelKind) -> Result<Outcome> {
    let (failures, n) = mean_failures(channel)?;
    let frac = failures as f64 / MEAN_TRIALS as f64;
    outcome(
        frac <= MEAN_DELTA,
        format!("{failures}/{MEAN_TRIALS} trials deviate by > {MEAN_TAU} (need fraction <= {MEAN_DELTA}); n = {n}"),
    )
}

fn c2_ldp_compiler() -> Result<Outcome> {
    mean_criterion(ChannelKind::Ldp)
}

fn c3_comm_compiler() -> Result<Outcome> {
    mean_criterion(ChannelKind::Comm)
}

// ---------------------------------------------------------------- 4, 5

const ZERO_TOL: f64 = 1e-9;
const SURROGATE_ALPHA: f64 = 0.15;

fn random_source(s: u64) -> Result<LabeledSource> {
    let mut rng = seed::rng(s, "source", 0);
    let d = rng.gen_range(2..=20);
    let gamma = rng.gen_range(0.1..0.6);
    let support = rng.gen_range(5..60);
    synthetic::margin_source(d, gamma, support, &mut rng)
}

fn separator(src: &LabeledSource) -> (Vec<f64>, f64) {
    let TargetFunction::LinearThreshold { w, gamma } = src.target() else {
        unreachable!("margin sources carry a linear threshold")
    };
    (w.clone(), *gamma)
}

fn in_ball<R: Rng>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let r = radius * rng.gen::<f64>();
    synthetic::unit_vector(d, rng).into_iter().map(|c| c * r).collect()
}

fn c4_surrogate() -> Result<Outcome> {
    let mut worst_zero: f64 = 0.0;
    for i in 0..50 {
        let src = random_source(seed::derive(4, "zero", i))?;
        let (w, gamma) = separator(&src);
        let p = SurrogateParams::new(gamma, SURROGATE_ALPHA, src.dim())?;
        worst_zero = worst_zero.max(surrogate_value(&w, &src, &p)?.abs());
    }

    let (mut min_f, mut markov_bad, mut markov_tested) = (f64::INFINITY, 0usize, 0usize);
    for i in 0..1000u64 {
        let src = random_source(seed::derive(4, "pair", i))?;
        let (ws, gamma) = separator(&src);
        let p = SurrogateParams::new(gamma, SURROGATE_ALPHA, src.dim())?;
        let mut rng = seed::rng(i, "w", 0);
        // half the pairs sit near the separator so the Markov premise is exercised
        let w: Vec<f64> = if i % 2 == 0 {
            in_ball(src.dim(), 1.0, &mut rng)
        } else {
            let t = rng.gen_range(0.0..0.02);
            let z = in_ball(src.dim(), 1.0, &mut rng);
            let v: Vec<f64> = ws.iter().zip(&z).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            let n = ldpsq::domain::norm(&v).max(1.0);
            v.into_iter().map(|c| c / n).collect()
        };
        let f = surrogate_value(&w, &src, &p)?;
        min_f = min_f.min(f);
        if f <= SURROGATE_ALPHA * p.beta {
            markov_tested += 1;
            let bound = p.guaranteed_margin();
            let mass: f64 = src
                .iter()
                .filter(|(x, y, _)| y.value() * ldpsq::domain::dot(&w, x) <= bound)
                .map(|(_, _, q)| q)
                .sum();
            if mass > SURROGATE_ALPHA {
                markov_bad += 1;
            }
        }
    }
    outcome(
        worst_zero <= ZERO_TOL && min_f >= -ZERO_TOL && markov_bad == 0 && markov_tested > 0,
        format!(
            "max |F(w*)| = {worst_zero:.2e}; min F = {min_f:.2e} over 1000 pairs (need >= -{ZERO_TOL:e}); Markov violated on {markov_bad} of {markov_tested} premise pairs"
        ),
    )
}

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
/// Points closer than this to a kink of the surrogate are resampled.
const KINK_CLEARANCE: f64 = 1e-3;

fn kink_distance(w: &[f64], src: &LabeledSource, gamma: f64) -> f64 {
    src.support()
        .iter()
        .flat_map(|x| {
            let x = x.coords();
            let u = ldpsq::domain::dot(w, x);
            x.iter().flat_map(move |&xi| [(u + gamma * xi).abs(), (u - gamma * xi).abs()])
        })
        .fold(f64::INFINITY, f64::min)
}

fn c5_gradients() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for s in 0..10u64 {
        let src = random_source(seed::derive(5, "source", s))?;
        let (_, gamma) = separator(&src);
        let d = src.dim();
        let p = SurrogateParams::new(gamma, SURROGATE_ALPHA, d)?;
        let mut rng = seed::rng(s, "points", 0);
        let mut done = 0;
        while done < 20 {
            let w = in_ball(d, 0.9, &mut rng);
            if kink_distance(&w, &src, gamma) < KINK_CLEARANCE {
                continue;
            }
            let mut o = ExactOracle::new(&src);
            let g1 = grad_f1(&w, &mut o, &p, 0.01, 0)?;
            let g2 = grad_f2(&mut o, &p, 0.01)?;
            for j in 0..d {
                let (mut hi, mut lo) = (w.clone(), w.clone());
                hi[j] += FD_STEP;
                lo[j] -= FD_STEP;
                let fd = (surrogate_value(&hi, &src, &p)? - surrogate_value(&lo, &src, &p)?) / (2.0 * FD_STEP);
                worst = worst.max((g1[j] + g2[j] - fd).abs());
            }
            done += 1;
            checked += 1;
        }
    }
    outcome(worst <= FD_TOL, format!("max |grad - finite difference| = {worst:.2e} over {checked} points (need <= {FD_TOL:e})"))
}

// ---------------------------------------------------------------- 6, 7

const HS_D: usize = 50;
const HS_GAMMA: f64 = 0.3;
const HS_ALPHA: f64 = 0.15;
const HS_DELTA: f64 = 0.05;
const HS_SUPPORT: usize = 200;
const HS_RUNS: usize = 100;

struct HsRun {
    error: f64,
    rounds: usize,
    structure_ok: bool,
}

fn halfspace_runs(mode: Mode, oracle: OracleKind) -> Result<Vec<HsRun>> {
    (0..HS_RUNS)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(6, "halfspace", i as u64);
            let src = synthetic::margin_source(HS_D, HS_GAMMA, HS_SUPPORT, &mut seed::rng(s, "source", 0))?;
            let mut cfg = LearnerConfig::new(HS_GAMMA, HS_ALPHA, HS_DELTA);
            cfg.mode = mode;
            cfg.oracle = oracle;
            cfg.epsilon = 1.0;
            cfg.seed = s;
            let (_, rep, t) = learn_halfspace(&src, &cfg)?;
            let structure_ok = assert_label_non_adaptive(&t)
                && rep.label_non_adaptive
                && t.label_dependent_count() == rep.d_prime
                && rep.label_dependent_queries == rep.d_prime;
            Ok(HsRun { error: rep.error, rounds: rep.rounds, structure_ok })
        })
        .collect()
}

fn c6_end_to_end() -> Result<Outcome> {
    let exact = halfspace_runs(Mode::DistributionFree, OracleKind::Exact)?;
    let ldp = halfspace_runs(Mode::DistributionFree, OracleKind::Ldp)?;
    let ok = |r: &[HsRun]| r.iter().filter(|x| x.error <= HS_ALPHA).count();
    let broken = exact.iter().chain(&ldp).filter(|r| !r.structure_ok).count();
    let (e, l) = (ok(&exact), ok(&ldp));
    outcome(
        e >= 90 && l >= 80 && broken == 0,
        format!("error <= {HS_ALPHA}: exact {e}/100 (need 90), ldp {l}/100 (need 80); transcript violations {broken}"),
    )
}

fn c7_known_distribution() -> Result<Outcome> {
    let runs = halfspace_runs(Mode::KnownDistribution, OracleKind::Ldp)?;
    let one = runs.iter().filter(|r| r.rounds == 1).count();
    let broken = runs.iter().filter(|r| !r.structure_ok).count();
    outcome(one == HS_RUNS && broken == 0, format!("rounds = 1 in {one}/{HS_RUNS} LDP runs; transcript violations {broken}"))
}

// ---------------------------------------------------------------- 8

const GRID_STEPS: usize = 100;
const LP_GRID_TOL: f64 = 1e-3;

fn grid(n: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if parts == 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&u| u as f64 / GRID_STEPS as f64).collect());
            prefix.pop();
            return;
        }
        for a in 0..=left {
            prefix.push(a);
            rec(left - a, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(GRID_STEPS, n, &mut Vec::new(), &mut out);
    out
}

/// Nondecreasing index tuples of length `m` over `0..r`.
fn multisets(r: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    multisets(r, m - 1)
        .into_iter()
        .flat_map(|prefix| {
            let start = prefix.last().copied().unwrap_or(0);
            (start..r).map(move |i| prefix.iter().copied().chain([i]).collect())
        })
        .collect()
}

fn c8_lp_vs_grid() -> Result<Outcome> {
    let (mut total, mut mismatched, mut worst, mut lp_above_grid) = (0usize, 0usize, 0.0f64, 0usize);
    for n in 1..=3usize {
        let points: Vec<Point> = (0..n).map(|i| Point::new(vec![0.1 * (i + 1) as f64])).collect::<Result<_>>()?;
        // every h: X -> {-1, 0, 1}
        let rows: Vec<Vec<f64>> = (0..3usize.pow(n as u32))
            .map(|k| (0..n).map(|j| ((k / 3usize.pow(j as u32)) % 3) as f64 - 1.0).collect())
            .collect();
        let g = grid(n);
        let targets: Vec<Vec<Label>> = (0..1usize << n)
            .map(|b| (0..n).map(|j| if b >> j & 1 == 1 { Label::Pos } else { Label::Neg }).collect())
            .collect();
        for m in 1..=3 {
            let results = multisets(rows.len(), m)
                .into_par_iter()
                .flat_map_iter(|idx| targets.iter().map(move |f| (idx.clone(), f)))
                .map(|(idx, f)| {
                    let h: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
                    let cert = worst_correlation_distribution(f, &HypothesisSet::from_table(&points, h.clone())?, &points)?;
                    let brute = g
                        .iter()
                        .map(|d| {
                            h.iter()
                                .map(|row| d.iter().zip(f).zip(row).map(|((p, y), v)| p * y.value() * v).sum::<f64>().abs())
                                .fold(0.0, f64::max)
                        })
                        .fold(f64::INFINITY, f64::min);
                    Ok((cert.value, brute))
                })
                .collect::<Result<Vec<_>>>()?;
            for (lp, brute) in results {
                total += 1;
                let gap = (lp - brute).abs();
                worst = worst.max(gap);
                mismatched += usize::from(gap > LP_GRID_TOL);
                lp_above_grid += usize::from(lp > brute + 1e-12);
            }
        }
    }
    outcome(
        total >= 500 && mismatched == 0,
        format!(
            "{mismatched}/{total} instances differ from the step-{} grid by > {LP_GRID_TOL:e}, worst {worst:.4}; LP above grid in {lp_above_grid}",
            1.0 / GRID_STEPS as f64
        ),
    )
}

// ---------------------------------------------------------------- 9

fn c9_fooling() -> Result<Outcome> {
    let src = shipped_parity4()?;
    let mut held = 0;
    for s in 0..100 {
        let r = fooling_demo(&src, 3, 4, s)?;
        if r.certificate.is_some() && r.identical_transcripts && r.error_f + r.error_neg_f == 1.0 {
            held += 1;
        }
    }
    outcome(held == 100, format!("identical transcripts and error_f + error_-f = 1 in {held}/100 seeds"))
}

// ---------------------------------------------------------------- 10

const DL_D: usize = 8;
const DL_LEN: usize = 5;
const DL_ALPHA: f64 = 0.1;

struct DlTally {
    accurate: usize,
    adaptive: usize,
    constant: usize,
    /// Non-constant targets learned without a label-dependent query after round 0.
    flat: usize,
}

fn dl_runs(oracle: DlOracle) -> Result<DlTally> {
    let cfg = DlLearnerConfig::new(DL_D, DL_ALPHA)?;
    let runs = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(10, "dl", i);
            let f = synthetic::random_decision_list(DL_D, DL_LEN, &mut seed::rng(s, "target", 0));
            let src = LabeledSource::new(FiniteDistribution::uniform_hypercube(DL_D)?, f)?;
            let (_, rep, _) = learn_dl(&src, &cfg, oracle, s)?;
            let later = rep.label_dependent_rounds.iter().any(|&r| r > 0);
            // a list whose items all agree with the default is a constant and needs one round
            let constant = match src.target() {
                TargetFunction::DecisionList { items, default } => items.iter().all(|it| it.output == *default),
                _ => false,
            };
            Ok((rep.error <= DL_ALPHA, later, constant))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DlTally {
        accurate: runs.iter().filter(|r| r.0).count(),
        adaptive: runs.iter().filter(|r| r.1).count(),
        constant: runs.iter().filter(|r| r.2).count(),
        flat: runs.iter().filter(|r| !r.1 && !r.2).count(),
    })
}

fn c10_decision_lists() -> Result<Outcome> {
    let exact = dl_runs(DlOracle::Exact)?;
    let ldp = dl_runs(DlOracle::Ldp { epsilon: 1.0, delta: 0.05, backend: Backend::Aggregate })?;
    outcome(
        exact.accurate >= 95 && ldp.accurate >= 85 && exact.flat + ldp.flat == 0,
        format!(
            "error <= {DL_ALPHA}: exact {}/100 (need 95), ldp {}/100 (need 85); label-dependent queries after round 0 in {}/200 runs, the rest {} constant targets",
            exact.accurate,
            ldp.accurate,
            exact.adaptive + ldp.adaptive,
            exact.constant + ldp.constant
        ),
    )
}

// ---------------------------------------------------------------- 11

fn c11_jl() -> Result<Outcome> {
    let args = JlArgs { d: 100, gamma: 0.3, delta: 0.05, support: 200, trials: 100, seed: 11, min_success: 0.9 };
    let good = (0..args.trials)
        .into_par_iter()
        .map(|i| args.trial(i).map(|(_, bad, _)| bad <= args.delta))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    outcome(good >= 90, format!("projected margin >= gamma/2 on all but a delta fraction in {good}/100 seeds (need 90)"))
}

// ---------------------------------------------------------------- 12

const CLI_RUNS: &[&[&str]] = &[
    &["learn-halfspace"],
    &["learn-halfspace", "--oracle", "ldp", "--mode", "known_distribution"],
    &["learn-dl"],
    &["learn-dl", "--oracle", "comm"],
    &["estimate-mean"],
    &["estimate-mean", "--channel", "comm"],
    &["adversary"],
    &["adversary", "--class", "hs", "--d", "3", "--m", "3"],
    &["adversary-demo"],
    &["jl-check"],
    &["compile-report"],
    &["compile-report", "--learner", "dl", "--channel", "comm"],
    &["separation"],
];

fn cli_artifacts(args: &[&str], dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let o = Command::new(env!("CARGO_BIN_EXE_ldpsq"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("LDPSQ_OUT_DIR")
        .output()?;
    if !o.status.success() {
        return Err(ldpsq::Error::InvalidInput(format!("{args:?} exited with {}", o.status)));
    }
    let mut files = std::fs::read_dir(dir)?
        .map(|e| {
            let p = e?.path();
            Ok((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), std::fs::read(&p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    files.sort();
    Ok(files)
}

fn c12_determinism() -> Result<Outcome> {
    let mut differing = Vec::new();
    let mut compared = 0;
    for args in CLI_RUNS {
        let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
        let (x, y) = (cli_artifacts(args, a.path())?, cli_artifacts(args, b.path())?);
        compared += x.len();
        if x != y || x.is_empty() {
            differing.push(args.join(" "));
        }
    }
    outcome(
        differing.is_empty(),
        format!("{compared} artifacts from {} invocations; differing: {differing:?}", CLI_RUNS.len()),
    )
}

// ----------------------------------------------------------------

const CRITERIA: &[(&str, &str, Criterion, u64)] = &[
    ("C1", "randomized response privacy", c1_privacy, 1),
    ("C2", "SQ to LDP compiler", c2_ldp_compiler, 60),
    ("C3", "SQ to one-bit compiler", c3_comm_compiler, 60),
    ("C4", "surrogate zero, sign and Markov", c4_surrogate, 30),
    ("C5", "surrogate gradients", c5_gradients, 30),
    ("C6", "end-to-end halfspace learner", c6_end_to_end, 600),
    ("C7", "known-distribution rounds", c7_known_distribution, 600),
    ("C8", "LP against simplex grid", c8_lp_vs_grid, 120),
    ("C9", "negation fooling", c9_fooling, 10),
    ("C10", "interactive decision lists", c10_decision_lists, 300),
    ("C11", "JL margin preservation", c11_jl, 60),
    ("C12", "CLI determinism", c12_determinism, 600),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for &(id, name, run, budget_s) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let within = elapsed <= Duration::from_secs(budget_s);
        let (passed, detail) = match result {
            Ok(o) => (o.passed && within, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "{id:<4} {} {name}: {detail} [{:.1} s, budget {budget_s} s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        if !passed {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: {} failed: {}", failed.len(), failed.join(" "));
        std::process::exit(1);
    }
    println!("acceptance: all passed");
}
