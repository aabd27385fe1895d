//! The two random beacons built on the RIG game, plus the rules they share:
//! participant ordering, trimming to an even count, settlement and the
//! result format.
//!
//! Both beacons are single-writer state machines fed with finalized ledger
//! records in order. [`commit::CommitSession`] runs commit/reveal with a VDF
//! that lets anyone open a withheld commitment; [`pvss::PvssSession`] runs
//! prepare/distribute/reconstruct over one PVSS instance per participant.
//!
//! Money is accounted in integer units. Each participant posts deposit `d`;
//! valid participants receive `rw_i = u_i + c` where `u_i` is their RIG payoff
//! against their partner in the sorted order.

pub mod commit;
pub mod pvss;
pub mod records;

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::encoding::Encoder;
use crate::crypto::{sha256, VdfParams};
use crate::game::{outcome_payoffs_with, GameError, Outcome, PayoffRule};
pub use records::ParticipantId;

/// How participants are paired for the payoff game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "seed", rename_all = "snake_case")]
pub enum SortRule {
    /// Shuffle seeded by the previous round's output.
    PreviousOutput(u64),
    /// Ascending `SHA-256(session ‖ pk_i)`, compared as bytes.
    KeyHash,
    /// Order in which the participants' first accepted records reached the
    /// ledger.
    LedgerOrder,
}

impl std::str::FromStr for SortRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "key_hash" => Ok(SortRule::KeyHash),
            "ledger_order" => Ok(SortRule::LedgerOrder),
            _ => match s.strip_prefix("previous_output:") {
                Some(seed) => seed
                    .parse()
                    .map(SortRule::PreviousOutput)
                    .map_err(|_| format!("bad seed in sort rule {s:?}")),
                None => Err(format!("unknown sort rule {s:?}")),
            },
        }
    }
}

/// A participant as seen by the sorting rule.
#[derive(Debug, Clone)]
pub struct SortEntry<'a> {
    pub id: ParticipantId,
    pub public: &'a BigUint,
    /// Ledger position of the participant's first accepted record.
    pub ledger_seq: u64,
}

pub fn key_hash(session_id: u64, public: &BigUint) -> [u8; 32] {
    let mut enc = Encoder::new();
    enc.tag("rig/order").u64(session_id).int(public);
    sha256(enc.as_bytes())
}

/// Deterministic ordering of `entries` under `rule`.
pub fn sort_participants(rule: SortRule, session_id: u64, entries: &[SortEntry<'_>]) -> Vec<ParticipantId> {
    let mut ids: Vec<&SortEntry<'_>> = entries.iter().collect();
    match rule {
        SortRule::KeyHash => ids.sort_by_key(|e| (key_hash(session_id, e.public), e.id)),
        SortRule::LedgerOrder => ids.sort_by_key(|e| (e.ledger_seq, e.id)),
        SortRule::PreviousOutput(seed) => {
            ids.sort_by_key(|e| e.id);
            let mut enc = Encoder::new();
            enc.tag("rig/shuffle").u64(seed).u64(session_id);
            let mut rng = ChaCha20Rng::from_seed(sha256(enc.as_bytes()));
            ids.shuffle(&mut rng);
        }
    }
    ids.into_iter().map(|e| e.id).collect()
}

/// If the count is odd, the participant whose record digest is largest.
pub fn trim_to_even(candidates: &[(ParticipantId, [u8; 32])]) -> Option<ParticipantId> {
    if candidates.len() % 2 == 0 {
        return None;
    }
    candidates.iter().max_by_key(|(id, d)| (*d, *id)).map(|(id, _)| *id)
}

/// `m = 2^{2b}` split into low and high `b` bits.
pub fn split_output(v: u64, b: u32) -> (u64, u64) {
    let mask = (1u64 << b) - 1;
    (v & mask, (v >> b) & mask)
}

/// `ṽ = (v1 + VDF(v2)) mod 2^b`.
pub fn bitwise_cut(v: u64, b: u32, vdf: &VdfParams) -> (u64, u64, u64) {
    let (v1, v2) = split_output(v, b);
    let y = crate::crypto::vdf_eval(vdf, &BigUint::from(v2)).y;
    let low = (&y % (BigUint::from(1u64) << b)).iter_u64_digits().next().unwrap_or(0);
    (v1, v2, (v1 + low) & ((1u64 << b) - 1))
}

/// Named timing constraint that a configuration breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimingViolation {
    DeltaNotPositive,
    CommitNotAboveDelta,
    RevealNotAboveDelta,
    WaitNotAboveEval,
    PrepareNotAboveDelta,
    DistributeNotAboveDelta,
    ReconstructNotAboveDelta,
}

impl TimingViolation {
    pub fn constraint(&self) -> &'static str {
        match self {
            TimingViolation::DeltaNotPositive => "Δ ≥ 1",
            TimingViolation::CommitNotAboveDelta => "T_commit > Δ",
            TimingViolation::RevealNotAboveDelta => "T_reveal > Δ",
            TimingViolation::WaitNotAboveEval => "T_wait > T_Eval",
            TimingViolation::PrepareNotAboveDelta => "T_prepare > Δ",
            TimingViolation::DistributeNotAboveDelta => "T_distribute > Δ",
            TimingViolation::ReconstructNotAboveDelta => "T_reconstruct > Δ",
        }
    }
}

impl fmt::Display for TimingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.constraint())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("timing constraints violated: {}", join(.0))]
    Timing(Vec<TimingViolation>),
    #[error("output bits b must be in 1..=31, got {0}")]
    OutputBits(u32),
    #[error("deposit {deposit} must exceed 1 + reward = {min_exclusive}")]
    DepositTooSmall { deposit: u64, min_exclusive: u64 },
    #[error("roster needs at least 2 participants, got {0}")]
    RosterTooSmall(usize),
    #[error("VDF modulus must exceed 2m")]
    VdfModulusTooSmall,
    #[error(transparent)]
    Game(#[from] GameError),
}

fn join(v: &[TimingViolation]) -> String {
    v.iter().map(|t| t.constraint()).collect::<Vec<_>>().join(", ")
}

pub(crate) fn check_common(b: u32, f: u64, roster: usize, deposit: u64, reward: u64) -> Result<(), ConfigError> {
    if !(1..=31).contains(&b) {
        return Err(ConfigError::OutputBits(b));
    }
    PayoffRule::new(1u64 << (2 * b), f)?;
    if roster < 2 {
        return Err(ConfigError::RosterTooSmall(roster));
    }
    if deposit <= 1 + reward {
        return Err(ConfigError::DepositTooSmall {
            deposit,
            min_exclusive: 1 + reward,
        });
    }
    Ok(())
}

/// Why a submitted record was not accepted. Each protocol rule has its own
/// code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    #[error("record belongs to another session")]
    WrongSession,
    #[error("sender is not in the roster")]
    UnknownSender,
    #[error("invalid signature")]
    BadSignature,
    #[error("invalid participation proof")]
    BadParticipationProof,
    #[error("a different valid commit from this sender exists")]
    Equivocation,
    #[error("identical commit already accepted")]
    DuplicateCommit,
    #[error("received before the phase opened")]
    TooEarly,
    #[error("received after the phase closed")]
    Late,
    #[error("invalid VDF parameters")]
    InvalidVdfParams,
    #[error("sender has no unique valid commit")]
    NoValidCommit,
    #[error("value and nonce do not match the commitment")]
    CommitmentMismatch,
    #[error("sender already revealed")]
    DuplicateReveal,
    #[error("sender already sent a prepare message")]
    DuplicatePrepare,
    #[error("sender is not a session participant")]
    NotParticipant,
    #[error("dealer bundle failed public verification")]
    InvalidBundle,
    #[error("sender already sent a bundle")]
    DuplicateBundle,
    #[error("a decrypted share failed verification")]
    InvalidShare,
    #[error("sender already sent reconstruction shares")]
    DuplicateReconstruction,
    #[error("record type does not belong to this beacon")]
    WrongRecordType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Two different valid commits.
    Equivocation,
    /// Revealed value disagrees with the committed VDF input.
    VdfMismatch,
    /// Removed to make the count even; no penalty.
    TrimmedToEven,
    /// PVSS bundle failed verification.
    InvalidBundle,
    /// No PVSS bundle by the deadline.
    MissingBundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfiscationReason {
    Equivocation,
    VdfMismatch,
    /// Committed but never revealed; value recovered through the VDF.
    Withheld,
    InvalidBundle,
    MissingBundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSource {
    Revealed,
    RecoveredByVdf,
    Reconstructed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub participant: ParticipantId,
    pub value: u64,
    pub source: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settlement {
    pub participant: ParticipantId,
    /// 1-based position in the payoff game.
    pub game_index: usize,
    pub payoff: i64,
    pub reward: i64,
    /// `c` withheld because the participant did not complete the protocol.
    pub reward_forfeited: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub participant: ParticipantId,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confiscation {
    pub participant: ParticipantId,
    pub amount: u64,
    pub reason: ConfiscationReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionEntry {
    pub participant: ParticipantId,
    pub slot: u64,
    pub record: String,
    pub reason: Rejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Commit,
    Pvss,
}

/// Outcome of one beacon session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconResult {
    pub variant: Variant,
    pub session_id: u64,
    pub m: u64,
    /// `ṽ` lies in `[0, 2^output_bits)`.
    pub output_bits: u32,
    /// Participants in payoff-game order.
    pub ordering: Vec<ParticipantId>,
    /// Values that entered the sum, in game order.
    pub contributions: Vec<Contribution>,
    pub v: u64,
    pub v1: u64,
    pub v2: u64,
    pub v_tilde: u64,
    pub settlements: Vec<Settlement>,
    pub confiscations: Vec<Confiscation>,
    pub exclusions: Vec<Exclusion>,
    pub rejections: Vec<RejectionEntry>,
    /// Participants flagged for submitting bad reconstruction shares.
    pub flagged: Vec<ParticipantId>,
}

impl BeaconResult {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn total_payoff(&self) -> i64 {
        self.settlements.iter().map(|s| s.payoff).sum()
    }

    pub fn total_reward(&self) -> i64 {
        self.settlements.iter().map(|s| s.reward).sum()
    }

    pub fn confiscated(&self, id: ParticipantId) -> bool {
        self.confiscations.iter().any(|c| c.participant == id)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BeaconError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("session cannot be finalized before slot {ready}, now {now}")]
    NotFinalizable { ready: u64, now: u64 },
    #[error("only {0} valid participants remain; at least 2 are needed")]
    TooFewParticipants(usize),
    #[error("prepare phase closed with {0} participants; at least 2 are needed")]
    PrepareAborted(usize),
    #[error("availability failure: dealer {dealer} has {have} valid shares, needs {need}")]
    AvailabilityFailure {
        dealer: ParticipantId,
        have: usize,
        need: usize,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Pays pairs in `ordered` (participant, value) order.
pub(crate) fn settle(
    rule: &PayoffRule,
    ordered: &[(ParticipantId, u64)],
    reward: u64,
    forfeits: &BTreeSet<ParticipantId>,
) -> Result<Vec<Settlement>, GameError> {
    let outcome = Outcome::new(ordered.iter().map(|(_, v)| *v).collect(), rule.m())?;
    let payoffs = if ordered.is_empty() {
        Vec::new()
    } else {
        outcome_payoffs_with(&outcome, rule)?.0
    };
    Ok(ordered
        .iter()
        .zip(payoffs)
        .enumerate()
        .map(|(k, ((id, _), u))| {
            let forfeited = forfeits.contains(id);
            Settlement {
                participant: *id,
                game_index: k + 1,
                payoff: u,
                reward: if forfeited { u } else { u + reward as i64 },
                reward_forfeited: forfeited,
            }
        })
        .collect())
}

pub(crate) fn sum_mod(values: impl IntoIterator<Item = u64>, m: u64) -> u64 {
    values
        .into_iter()
        .fold(0u128, |acc, v| (acc + u128::from(v)) % u128::from(m)) as u64
}
