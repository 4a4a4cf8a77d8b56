//! The label-non-adaptive large-margin halfspace learner.
//!
//! The learner minimizes the convex surrogate
//! `F(w) = E sum_i |<w + g e_i, x>| - <w + g e_i, l x> + |<w - g e_i, x>| - <w - g e_i, l x>`
//! over the unit ball by projected subgradient descent. The gradient splits
//! into a label-independent part, re-queried every iteration, and a linear
//! label-dependent part that is queried once before the first answer is seen.

mod learner;
mod projection;
mod psgd;
mod surrogate;

pub use learner::{learn_halfspace, Hypothesis, LearnerConfig, LearnerReport, Mode, OracleKind};
pub use projection::{jl_dimension, jl_project, projected_margins, ProjectionKind, ProjectionMap, JL_CONSTANT};
pub use psgd::{psgd_learn, GradientOracles, MarginLearnerState, PsgdConfig, PsgdDriver, PsgdOutcome};
pub use surrogate::{
    grad_f1, grad_f1_exact, grad_f2, surrogate_parts, surrogate_value, SurrogateParams,
};
