//! Correlation certificates, negation fooling, and the LP solver behind them.

mod certificate;
mod classes;
mod fooling;
mod lp;

pub use certificate::{
    correlation_cover_check, worst_correlation_distribution, AdversarialCertificate, CoverVerdict, HypothesisSet,
};
pub use classes::{cube_points, decision_list_class, halfspace_class, EnumeratedClass, MAX_ENUM_DIM};
pub use fooling::{negation_fooling_demo, negation_pair, parity_square, CorrelationVoter, FoolingReport, NonAdaptiveLearner};
pub use lp::{LinearProgram, LpSolution};
