//! Deterministic simulation: a Δ-synchronous ledger, agents that drive
//! beacon sessions over it, the proof-of-stake epoch loop and the
//! statistics used to judge the outputs.
//!
//! One session runs single-threaded slot by slot. Agents act at the opening
//! slot of each phase and only see the session state built from finalized
//! records. Independent replications run in parallel via [`replicate`] and
//! come back in seed order.

pub mod agents;
pub mod epochs;
pub mod ledger;
pub mod scenario;
pub mod stats;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agents::{Agent, AgentKind, JointRule};
pub use epochs::{run_epochs, select_roster, EpochConfig, EpochRecord, EpochRun};
pub use ledger::{LedgerError, SimLedger};
pub use scenario::{Scenario, ScenarioError};
pub use stats::{chi_square_critical, chi_square_uniformity, ChiSquareReport, StatsError};

use crate::beacon::commit::{prepare_commit, prepare_reveal, CommitSession, CommitSessionConfig};
use crate::beacon::pvss::{prepare_bundle, prepare_message, prepare_reconstruction, PvssSession, PvssSessionConfig};
use crate::beacon::records::{BundleMessage, Record, Transcript};
use crate::beacon::{BeaconError, BeaconResult, ConfigError, ParticipantId, TimingViolation};
use crate::crypto::encoding::Encoder;
use crate::crypto::{keygen, GroupParams, KeyPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Beacon(#[from] BeaconError),
    #[error("{0}")]
    Ledger(#[from] LedgerError),
    #[error("{agents} agents for a roster of {roster}")]
    AgentMismatch { agents: usize, roster: usize },
    #[error("key {0} does not match the roster")]
    KeyMismatch(ParticipantId),
    #[error("agent {index}: {reason}")]
    BadAgent { index: ParticipantId, reason: String },
    #[error("epoch setup: {0}")]
    EpochSetup(String),
    #[error("epoch {epoch}: {source}")]
    Epoch { epoch: u64, source: Box<SimError> },
    #[error("{0}")]
    Stats(#[from] StatsError),
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
}

/// Either beacon's session configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SessionConfig {
    Commit(CommitSessionConfig),
    Pvss(PvssSessionConfig),
}

impl SessionConfig {
    pub fn session_id(&self) -> u64 {
        match self {
            SessionConfig::Commit(c) => c.session_id,
            SessionConfig::Pvss(c) => c.session_id,
        }
    }

    pub fn m(&self) -> u64 {
        match self {
            SessionConfig::Commit(c) => c.m(),
            SessionConfig::Pvss(c) => c.m(),
        }
    }

    pub fn group(&self) -> &GroupParams {
        match self {
            SessionConfig::Commit(c) => &c.group,
            SessionConfig::Pvss(c) => &c.group,
        }
    }

    pub fn roster(&self) -> &[BigUint] {
        match self {
            SessionConfig::Commit(c) => &c.roster,
            SessionConfig::Pvss(c) => &c.roster,
        }
    }

    /// Same parameters with a new session id and roster.
    pub fn with_roster(&self, session_id: u64, roster: Vec<BigUint>) -> Self {
        let mut out = self.clone();
        match &mut out {
            SessionConfig::Commit(c) => {
                c.session_id = session_id;
                c.roster = roster;
            }
            SessionConfig::Pvss(c) => {
                c.session_id = session_id;
                c.roster = roster;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            SessionConfig::Commit(c) => c.validate(),
            SessionConfig::Pvss(c) => c.validate(),
        }
    }
}

/// Every timing constraint `config` breaks, by name.
pub fn validate_timing(config: &SessionConfig) -> Vec<TimingViolation> {
    match config {
        SessionConfig::Commit(c) => c.timing.violations(),
        SessionConfig::Pvss(c) => c.timing.violations(),
    }
}

/// Deterministic keys for `n` simulated parties.
pub fn sim_keys(group: &GroupParams, n: usize, label: &[u8]) -> Vec<KeyPair> {
    (0..n)
        .map(|i| {
            let mut enc = Encoder::new();
            enc.tag("rig/sim-key").bytes(label).u64(i as u64);
            keygen(group, enc.as_bytes())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRun {
    pub transcript: Transcript,
    pub result: BeaconResult,
}

fn check_agents(config: &SessionConfig, keys: &[KeyPair], agents: &[AgentKind]) -> Result<(), SimError> {
    let roster = config.roster();
    if agents.len() != roster.len() {
        return Err(SimError::AgentMismatch { agents: agents.len(), roster: roster.len() });
    }
    if keys.len() != roster.len() {
        return Err(SimError::AgentMismatch { agents: keys.len(), roster: roster.len() });
    }
    for (i, (key, public)) in keys.iter().zip(roster).enumerate() {
        if &key.public != public {
            return Err(SimError::KeyMismatch(i as ParticipantId));
        }
    }
    for (i, kind) in agents.iter().enumerate() {
        if let AgentKind::Alliance { members, .. } = kind {
            let index = i as ParticipantId;
            let bad = if !members.contains(&index) {
                Some("not a member of its own alliance".to_string())
            } else if members.iter().any(|&p| p as usize >= roster.len()) {
                Some("alliance member outside the roster".to_string())
            } else {
                None
            };
            if let Some(reason) = bad {
                return Err(SimError::BadAgent { index, reason });
            }
        }
    }
    Ok(())
}

/// Runs one session to finalization. The transcript is every finalized
/// record; `seed` drives the agents and the ledger's inclusion delays.
pub fn run_session(config: &SessionConfig, keys: &[KeyPair], agents: &[AgentKind], seed: u64) -> Result<SessionRun, SimError> {
    let violations = validate_timing(config);
    if !violations.is_empty() {
        return Err(ConfigError::Timing(violations).into());
    }
    config.validate()?;
    check_agents(config, keys, agents)?;
    let m = config.m();
    let session_id = config.session_id();
    let mut states: Vec<Agent> = agents
        .iter()
        .enumerate()
        .map(|(i, kind)| Agent::new(kind.clone(), i as ParticipantId, seed, session_id, m))
        .collect();
    match config {
        SessionConfig::Commit(c) => run_commit(c, keys, &mut states, seed),
        SessionConfig::Pvss(c) => run_pvss(c, keys, &mut states, seed),
    }
}

fn run_commit(config: &CommitSessionConfig, keys: &[KeyPair], agents: &mut [Agent], seed: u64) -> Result<SessionRun, SimError> {
    let mut session = CommitSession::new(config.clone())?;
    let mut ledger = SimLedger::new(config.timing.delta, seed)?;
    let commit_open = config.timing.commit_window().0;
    let reveal_open = config.timing.reveal_window().0;
    let fin = config.timing.finalize_slot();
    let mut prepared = Vec::with_capacity(agents.len());
    for slot in config.timing.start..=fin {
        for entry in ledger.advance_to(slot) {
            let _ = session.submit(&entry);
        }
        if slot == commit_open {
            for a in agents.iter_mut() {
                let id = a.index;
                let key = &keys[id as usize];
                let p = prepare_commit(config, key, id, a.value, a.nonce);
                ledger.broadcast(Record::Commit(p.message.clone()), slot)?;
                if a.kind == AgentKind::Equivocate {
                    let mut other_nonce = [0u8; crate::crypto::NONCE_LEN];
                    rand::RngCore::fill_bytes(&mut a.rng, &mut other_nonce);
                    let other = prepare_commit(config, key, id, (a.value + 1) % config.m(), other_nonce);
                    ledger.broadcast(Record::Commit(other.message), slot)?;
                }
                prepared.push(p);
            }
        }
        if slot == reveal_open {
            for (a, p) in agents.iter().zip(&prepared) {
                if a.kind.completes() && a.kind != AgentKind::Equivocate && session.has_unique_commit(a.index) {
                    let msg = prepare_reveal(config, &keys[a.index as usize], a.index, p);
                    ledger.broadcast(Record::Reveal(msg), slot)?;
                }
            }
        }
    }
    let result = session.finalize(fin)?;
    Ok(SessionRun {
        transcript: ledger.transcript(),
        result,
    })
}

fn run_pvss(config: &PvssSessionConfig, keys: &[KeyPair], agents: &mut [Agent], seed: u64) -> Result<SessionRun, SimError> {
    let mut session = PvssSession::new(config.clone())?;
    let mut ledger = SimLedger::new(config.timing.delta, seed)?;
    let prepare_open = config.timing.prepare_window().0;
    let distribute_open = config.timing.distribute_window().0;
    let reconstruct_open = config.timing.reconstruct_window().0;
    let fin = config.timing.finalize_slot();
    for slot in config.timing.start..=fin {
        for entry in ledger.advance_to(slot) {
            let _ = session.submit(&entry);
        }
        if slot == prepare_open {
            for a in agents.iter() {
                let msg = prepare_message(config, &keys[a.index as usize], a.index);
                ledger.broadcast(Record::Prepare(msg), slot)?;
            }
        }
        if slot == distribute_open {
            let roster = session.close_prepare()?.clone();
            for a in agents.iter_mut() {
                if !roster.participants.contains(&a.index) {
                    continue;
                }
                let key = &keys[a.index as usize];
                let mut msg = prepare_bundle(config, &roster, key, a.index, a.value, &mut a.rng)
                    .map_err(|e| SimError::BadAgent { index: a.index, reason: e.to_string() })?;
                if a.kind == AgentKind::Equivocate {
                    let mut bundle = msg.bundle;
                    let q = &config.group.q;
                    bundle.proofs[0].response = (&bundle.proofs[0].response + 1u32) % q;
                    msg = BundleMessage::new(&config.group, key, a.index, bundle);
                }
                ledger.broadcast(Record::Distribute(msg), slot)?;
            }
        }
        if slot == reconstruct_open {
            for a in agents.iter_mut() {
                if !a.kind.completes() {
                    continue;
                }
                if let Some(msg) = prepare_reconstruction(&session, &keys[a.index as usize], a.index, &mut a.rng) {
                    ledger.broadcast(Record::Reconstruct(msg), slot)?;
                }
            }
        }
    }
    let result = session.finalize(fin)?;
    Ok(SessionRun {
        transcript: ledger.transcript(),
        result,
    })
}

/// Runs `f` for each seed in parallel; results are in `seeds` order.
pub fn replicate<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    seeds.par_iter().map(|&s| f(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beacon::commit::CommitTiming;
    use crate::beacon::pvss::PvssTiming;
    use crate::beacon::{ConfiscationReason, ExclusionReason, SortRule};
    use crate::crypto::{group_setup, vdf_setup};

    fn commit_config(n: usize) -> (SessionConfig, Vec<KeyPair>) {
        let group = group_setup(64, b"sim-tests").unwrap();
        let keys = sim_keys(&group, n, b"t");
        let config = CommitSessionConfig {
            session_id: 1,
            output_bits: 2,
            density: 1,
            roster: keys.iter().map(|k| k.public.clone()).collect(),
            deposit: 10,
            reward: 1,
            timing: CommitTiming { start: 0, t_commit: 4, t_reveal: 4, t_wait: 3, delta: 3, t_eval: 2 },
            group,
            vdf: vdf_setup(64, 50, b"sim-tests").unwrap(),
            sort_rule: SortRule::KeyHash,
        };
        (SessionConfig::Commit(config), keys)
    }

    fn pvss_config(n: usize) -> (SessionConfig, Vec<KeyPair>) {
        let group = group_setup(64, b"sim-tests").unwrap();
        let keys = sim_keys(&group, n, b"t");
        let config = PvssSessionConfig {
            session_id: 1,
            output_bits: 2,
            density: 1,
            roster: keys.iter().map(|k| k.public.clone()).collect(),
            deposit: 10,
            reward: 1,
            timing: PvssTiming { start: 0, t_prepare: 3, t_distribute: 3, t_reconstruct: 3, delta: 2 },
            group,
            sort_rule: SortRule::KeyHash,
        };
        (SessionConfig::Pvss(config), keys)
    }

    #[test]
    fn honest_commit_session() {
        let (config, keys) = commit_config(4);
        let run = run_session(&config, &keys, &vec![AgentKind::Honest; 4], 3).unwrap();
        assert_eq!(run.result.ordering.len(), 4);
        assert_eq!(run.transcript.count("commit"), 4);
        assert_eq!(run.transcript.count("reveal"), 4);
        let expected: u64 = (0..4).map(|i| Agent::new(AgentKind::Honest, i, 3, 1, 16).value).sum::<u64>() % 16;
        assert_eq!(run.result.v, expected);
        for e in &run.transcript.entries {
            assert!(e.inclusion_slot > e.broadcast_slot && e.inclusion_slot <= e.broadcast_slot + 3);
        }
    }

    #[test]
    fn withholder_matches_honest_counterfactual() {
        let (config, keys) = commit_config(4);
        let honest = run_session(&config, &keys, &vec![AgentKind::Honest; 4], 11).unwrap();
        let mut agents = vec![AgentKind::Honest; 4];
        agents[1] = AgentKind::Withhold;
        let withheld = run_session(&config, &keys, &agents, 11).unwrap();
        assert_eq!(withheld.result.v, honest.result.v);
        assert_eq!(withheld.result.v_tilde, honest.result.v_tilde);
        assert_eq!(withheld.result.confiscations.len(), 1);
        assert_eq!(withheld.result.confiscations[0].reason, ConfiscationReason::Withheld);
    }

    #[test]
    fn equivocator_is_excluded_with_evidence() {
        let (config, keys) = commit_config(5);
        let mut agents = vec![AgentKind::Honest; 5];
        agents[0] = AgentKind::Equivocate;
        let run = run_session(&config, &keys, &agents, 4).unwrap();
        assert_eq!(run.transcript.entries.iter().filter(|e| e.record.sender() == 0).count(), 2);
        assert!(run.result.exclusions.iter().any(|e| e.participant == 0 && e.reason == ExclusionReason::Equivocation));
        assert!(run.result.confiscated(0));
        assert_eq!(run.result.ordering.len(), 4);
    }

    #[test]
    fn pvss_session_with_a_silent_participant() {
        let (config, keys) = pvss_config(4);
        let honest = run_session(&config, &keys, &vec![AgentKind::Honest; 4], 8).unwrap();
        assert_eq!(honest.transcript.count("distribute"), 4);
        assert_eq!(honest.transcript.count("reconstruct"), 4);
        let agents = [AgentKind::Honest, AgentKind::Withhold, AgentKind::Honest, AgentKind::Honest];
        let silent = run_session(&config, &keys, &agents, 8).unwrap();
        assert_eq!(silent.result.v, honest.result.v);
        assert!(silent.result.confiscations.is_empty());
        let mut bad = agents.to_vec();
        bad[2] = AgentKind::Equivocate;
        let run = run_session(&config, &keys, &bad, 8).unwrap();
        assert!(run.result.confiscated(2));
    }

    #[test]
    fn mismatches_and_timing_are_rejected() {
        let (config, keys) = commit_config(4);
        assert_eq!(
            run_session(&config, &keys, &vec![AgentKind::Honest; 3], 0).unwrap_err(),
            SimError::AgentMismatch { agents: 3, roster: 4 }
        );
        let SessionConfig::Commit(mut c) = config else { unreachable!() };
        c.timing.t_commit = c.timing.delta;
        let err = run_session(&SessionConfig::Commit(c), &keys, &vec![AgentKind::Honest; 4], 0).unwrap_err();
        assert_eq!(err, SimError::Config(ConfigError::Timing(vec![TimingViolation::CommitNotAboveDelta])));
    }

    #[test]
    fn replicate_keeps_seed_order() {
        let seeds: Vec<u64> = (0..64).collect();
        assert_eq!(replicate(&seeds, |s| s * 2), seeds.iter().map(|s| s * 2).collect::<Vec<_>>());
    }
}
