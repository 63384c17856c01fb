//! Edge validation pools, utility-driven block assembly and committee voting.

pub mod assembly;
pub mod committee;
pub mod pool;
pub mod round;

pub use crate::ledger::{BlockScore, UtilityParams};
pub use assembly::{assemble_block, freshness, AssembleError, Assembled, BlockLimits};
pub use committee::{sample_committee, select_proposer, CommitteeError};
pub use pool::{admit_transaction, AdmitOutcome, PooledTx, RejectReason, ValidationPool};
pub use round::{run_round, validate_block, CommitteeRound, Outcome, ValidationContext, ValidationError, Vote};
