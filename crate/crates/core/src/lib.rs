//! Random Integer Generation (RIG): a pairwise zero-sum game whose only
//! equilibrium is uniform play, the two random beacons that run it on a
//! ledger (commit-reveal backed by a VDF, and PVSS), and a deterministic
//! Δ-synchronous simulator used to exercise them.

pub mod beacon;
pub mod crypto;
pub mod game;
pub mod pvss;
pub mod serde_big;
pub mod sim;

pub use beacon::records::{LedgerEntry, Record, Transcript};
pub use beacon::{BeaconError, BeaconResult, ParticipantId, SortRule, TimingViolation, Variant};
pub use crypto::{GroupParams, KeyPair, VdfParams};
pub use game::{GameError, GameParams, MixedStrategy, PayoffMatrix, PayoffRule};
pub use pvss::{DealerBundle, DecryptedShare, PvssError};
pub use sim::{AgentKind, Scenario, SessionConfig, SessionRun, SimError};
