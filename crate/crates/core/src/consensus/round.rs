use std::collections::BTreeMap;

use thiserror::Error;

use super::assembly::freshness;
use crate::crypto::PublicKey;
use crate::ledger::{Block, Codec, LedgerError, LedgerSegment, UtilityParams};
use crate::types::{NodeId, Timestamp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("transaction {0} has no valid signature")]
    Signature(String),
    #[error("score mismatch: {0}")]
    Score(String),
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::Ledger(e) => e.code(),
            ValidationError::Signature(_) => "signature",
            ValidationError::Score(_) => "score",
        }
    }
}

/// What a committee member needs to check a proposal.
pub struct ValidationContext<'a> {
    pub segment: &'a LedgerSegment,
    pub registry: &'a BTreeMap<NodeId, PublicKey>,
    pub max_block_bytes: u64,
    pub codec: Codec,
    pub utility: UtilityParams,
    pub tau_max: f64,
}

/// Full member-side validation of a proposed block.
pub fn validate_block(block: &Block, ctx: &ValidationContext<'_>) -> Result<(), ValidationError> {
    ctx.segment.check_extends(block, ctx.max_block_bytes)?;
    block.check_commitments(ctx.codec)?;
    for tx in &block.transactions {
        let ok = ctx.registry.get(&tx.sender).is_some_and(|pk| tx.verify(pk));
        if !ok {
            return Err(ValidationError::Signature(tx.id.short()));
        }
    }
    let s = &block.score;
    if s.valid_count as usize != block.transactions.len() {
        return Err(ValidationError::Score(format!("η={} but {} transactions", s.valid_count, block.transactions.len())));
    }
    let zeta = freshness(&block.transactions, block.metadata.timestamp, ctx.tau_max);
    if zeta.to_bits() != s.freshness.to_bits() {
        return Err(ValidationError::Score(format!("ζ={} recomputed {}", s.freshness, zeta)));
    }
    let c = ctx.utility.utility(s.valid_count, s.freshness, s.energy_cost);
    if c.to_bits() != s.utility.to_bits() {
        return Err(ValidationError::Score(format!("C={} recomputed {}", s.utility, c)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    pub member: NodeId,
    pub approve: bool,
    /// When the member finished validating.
    pub at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Commit,
    Abort,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Commit => "commit",
            Outcome::Abort => "abort",
        }
    }
}

/// One round of committee voting on a single proposal.
#[derive(Debug, Clone)]
pub struct CommitteeRound {
    pub proposer: NodeId,
    pub members: Vec<NodeId>,
    pub proposed_at: Timestamp,
    pub votes: BTreeMap<NodeId, Vote>,
}

impl CommitteeRound {
    pub fn new(proposer: NodeId, members: Vec<NodeId>, proposed_at: Timestamp) -> Self {
        CommitteeRound { proposer, members, proposed_at, votes: BTreeMap::new() }
    }

    /// Record a vote; non-members and repeat votes are ignored.
    pub fn record_vote(&mut self, vote: Vote) -> bool {
        if !self.members.contains(&vote.member) || self.votes.contains_key(&vote.member) {
            return false;
        }
        self.votes.insert(vote.member, vote);
        true
    }

    pub fn approvals(&self) -> usize {
        self.votes.values().filter(|v| v.approve).count()
    }

    pub fn complete(&self) -> bool {
        self.votes.len() == self.members.len()
    }

    /// Commit once at least `quorum` approvals are in.
    pub fn decide(&self, quorum: usize) -> Outcome {
        if self.approvals() >= quorum {
            Outcome::Commit
        } else {
            Outcome::Abort
        }
    }

    /// δ_cons: latest member confirmation minus the proposal time, in seconds.
    pub fn consensus_delay(&self) -> f64 {
        self.votes
            .values()
            .map(|v| v.at.as_secs() - self.proposed_at.as_secs())
            .fold(0.0, f64::max)
    }
}

/// Synchronous round: every member validates `block` and `vote` decides the
/// ballot and its timestamp from the member id and the validation result.
pub fn run_round<F>(
    block: &Block,
    members: &[NodeId],
    ctx: &ValidationContext<'_>,
    quorum: usize,
    mut vote: F,
) -> (CommitteeRound, Outcome)
where
    F: FnMut(NodeId, &Result<(), ValidationError>) -> Vote,
{
    let verdict = validate_block(block, ctx);
    let mut round = CommitteeRound::new(block.proposer, members.to_vec(), block.metadata.timestamp);
    for &m in members {
        round.record_vote(vote(m, &verdict));
    }
    let outcome = round.decide(quorum);
    (round, outcome)
}
