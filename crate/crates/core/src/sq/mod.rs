//! Statistical queries, their decomposition, oracles and transcripts.

mod adversarial;
mod oracle;
pub(crate) mod query;
mod transcript;

pub use adversarial::{AdversarialOracle, AdversarialOracleConfig};
pub use oracle::{
    exact_oracle_answer, perturbing_oracle_answer, source_moments, ExactOracle, Moments, PerturbPolicy,
    PerturbingOracle, QueryPlan, SqDriver, StatOracle,
};
pub use query::{decompose, QueryBatch, QueryDecomposition, StatQuery, RANGE_TOLERANCE};
pub use transcript::{adaptivity_profile, assert_label_non_adaptive, AdaptivityProfile, Transcript, TranscriptEntry};
