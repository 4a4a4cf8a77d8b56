//! Local differential privacy: randomizers, the per-client ledger, the
//! `LR_S` oracle and the SQ-to-LDP compiler.

mod compiler;
mod ledger;
mod lr;
mod randomizer;

pub(crate) use compiler::{ceil_count, check_delta, check_tau, required, Channel, SimulatedOracle};
pub use compiler::{
    compile_sq_to_ldp, ldp_batch_size, ldp_required_samples, Backend, LdpCompileConfig, LdpProtocolReport,
    QueryRecord,
};
pub use ledger::{BitLedger, BudgetUnit, Ledger, PrivacyLedger};
pub use lr::{ldp_estimate_mean, lr_invoke, LrOracle};
pub(crate) use randomizer::plus_prob;
pub use randomizer::{rr_coefficient, rr_randomizer, verify_randomizer_privacy, LocalRandomizer, RrRandomizer};

#[cfg(test)]
pub(crate) use compiler::tests as compiler_fixtures;
