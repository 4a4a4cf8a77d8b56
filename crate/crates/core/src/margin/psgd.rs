use crate::domain::{norm, FiniteDistribution};
use crate::margin::surrogate::{grad_f1, grad_f1_exact, grad_f2, SurrogateParams};
use crate::sq::{assert_label_non_adaptive, QueryPlan, SqDriver, StatOracle};
use crate::{Error, Result};

/// Iterate, running sum and the cached label-dependent gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginLearnerState {
    params: SurrogateParams,
    w: Vec<f64>,
    sum: Vec<f64>,
    grad_f2: Option<Vec<f64>>,
    iteration: u64,
}

impl MarginLearnerState {
    /// Starts at `w = 0`.
    pub fn new(params: SurrogateParams) -> Self {
        Self { params, w: vec![0.0; params.dim], sum: vec![0.0; params.dim], grad_f2: None, iteration: 0 }
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn cached_grad_f2(&self) -> Option<&[f64]> {
        self.grad_f2.as_deref()
    }

    /// Queries `-2d E[l x]` at round 0. A second call is a protocol error.
    pub fn grad_f2(&mut self, oracle: &mut dyn StatOracle, tol: f64) -> Result<&[f64]> {
        if self.grad_f2.is_some() {
            return Err(Error::Protocol(
                "the label-dependent gradient is queried once, before any other answer".into(),
            ));
        }
        let g = grad_f2(oracle, &self.params, tol)?;
        Ok(self.grad_f2.insert(g))
    }

    /// One projected step along `g1 + grad_f2`.
    pub fn step(&mut self, g1: &[f64], eta: f64) -> Result<()> {
        let g2 = self
            .grad_f2
            .as_ref()
            .ok_or_else(|| Error::Protocol("step taken before the label-dependent gradient".into()))?;
        self.sum.iter_mut().zip(&self.w).for_each(|(s, w)| *s += w);
        for ((w, a), b) in self.w.iter_mut().zip(g1).zip(g2) {
            *w -= eta * (a + b);
        }
        let n = norm(&self.w);
        if n > 1.0 {
            self.w.iter_mut().for_each(|c| *c /= n);
        }
        self.iteration += 1;
        Ok(())
    }

    /// Mean of the iterates at which gradients were taken.
    pub fn average(&self) -> Vec<f64> {
        if self.iteration == 0 {
            return self.w.clone();
        }
        let t = self.iteration as f64;
        self.sum.iter().map(|s| s / t).collect()
    }
}

/// Where the two gradient parts come from.
pub enum GradientOracles<'a> {
    /// Both parts are queried from one oracle.
    Shared(&'a mut dyn StatOracle),
    /// The label-dependent part is queried; the other is computed from the
    /// known marginal, so the oracle sees a single round.
    KnownMarginal { labels: &'a mut dyn StatOracle, marginal: &'a FiniteDistribution },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsgdConfig {
    pub iterations: u64,
    /// Tolerance declared on every query.
    pub tolerance: f64,
}

impl PsgdConfig {
    /// The schedule from `params`, truncated to `max_iters` if given.
    pub fn from_params(p: &SurrogateParams, max_iters: Option<u64>) -> Self {
        let t = p.iterations();
        Self { iterations: max_iters.map_or(t, |m| m.min(t)).max(1), tolerance: p.coord_tolerance() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsgdOutcome {
    /// Averaged iterate.
    pub w: Vec<f64>,
    pub last: Vec<f64>,
    pub iterations: u64,
    pub step: f64,
    pub grad_f2: Vec<f64>,
}

/// Averaged projected subgradient descent from `w = 0` with step
/// `1 / (L sqrt(T))`.
pub fn psgd_learn(mut oracles: GradientOracles<'_>, params: &SurrogateParams, cfg: &PsgdConfig) -> Result<PsgdOutcome> {
    let t = cfg.iterations.max(1);
    let eta = 1.0 / (params.lipschitz() * (t as f64).sqrt());
    let mut state = MarginLearnerState::new(*params);
    match &mut oracles {
        GradientOracles::Shared(o) => state.grad_f2(*o, cfg.tolerance)?,
        GradientOracles::KnownMarginal { labels, .. } => state.grad_f2(*labels, cfg.tolerance)?,
    };
    for it in 0..t {
        let g1 = match &mut oracles {
            GradientOracles::Shared(o) => grad_f1(state.w(), *o, params, cfg.tolerance, it as usize)?,
            GradientOracles::KnownMarginal { marginal, .. } => grad_f1_exact(state.w(), marginal, params)?,
        };
        state.step(&g1, eta)?;
    }
    let transcript = match &oracles {
        GradientOracles::Shared(o) => o.transcript(),
        GradientOracles::KnownMarginal { labels, .. } => labels.transcript(),
    };
    if !assert_label_non_adaptive(transcript) {
        return Err(Error::Protocol("label-dependent query issued after round 0".into()));
    }
    Ok(PsgdOutcome {
        w: state.average(),
        last: state.w().to_vec(),
        iterations: t,
        step: eta,
        grad_f2: state.cached_grad_f2().unwrap_or_default().to_vec(),
    })
}

/// [`psgd_learn`] as an SQ algorithm, so it can be compiled to LDP or COMM.
#[derive(Debug, Clone)]
pub struct PsgdDriver {
    pub params: SurrogateParams,
    pub cfg: PsgdConfig,
    /// Known marginal for the non-interactive mode.
    pub marginal: Option<FiniteDistribution>,
}

impl SqDriver for PsgdDriver {
    type Output = PsgdOutcome;

    fn plan(&self) -> QueryPlan {
        let d = self.params.dim as u64;
        let f1 = if self.marginal.is_some() { 0 } else { d.saturating_mul(self.cfg.iterations) };
        QueryPlan::new().with(d + f1, self.cfg.tolerance)
    }

    fn run(&mut self, oracle: &mut dyn StatOracle) -> Result<PsgdOutcome> {
        let oracles = match &self.marginal {
            Some(m) => GradientOracles::KnownMarginal { labels: oracle, marginal: m },
            None => GradientOracles::Shared(oracle),
        };
        psgd_learn(oracles, &self.params, &self.cfg)
    }
}
