//! Commit-reveal beacon with VDF-backed opening.
//!
//! Phases (slots, end exclusive): commit `[start, start + T_commit)`, reveal
//! `[start + T_commit, start + T_commit + T_reveal)`; finalization is allowed
//! `T_wait` slots after the reveal phase closes.
//!
//! A committer with value `s` and nonce `r` publishes `h = commit(s, r)` and
//! a VDF input `x` with `VDF(x) = s + m·k`, where `k` is derived from `r`.
//! Computing `x` is the cheap direction of the VDF. Anyone can later recover
//! `s` from `x` by the slow direction, so withholding a reveal does not
//! change the output; it only costs the withholder's deposit and reward.
//! A reveal is checked against `x` with the cheap direction too, and a
//! mismatch marks the sender as a cheat.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::{verify_eligibility, CommitMessage, LedgerEntry, Record, RevealMessage};
use super::{
    bitwise_cut, check_common, settle, sort_participants, sum_mod, trim_to_even, BeaconError,
    BeaconResult, ConfigError, Confiscation, ConfiscationReason, Contribution, Exclusion,
    ExclusionReason, ParticipantId, Rejection, RejectionEntry, SortEntry, SortRule,
    TimingViolation, ValueSource, Variant,
};
use crate::crypto::encoding::Encoder;
use crate::crypto::{
    commit, hash_to_int, open, vdf_eval, vdf_invert, Commitment, GroupParams, KeyPair, VdfParams,
    NONCE_LEN,
};
use crate::game::PayoffRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitTiming {
    pub start: u64,
    pub t_commit: u64,
    pub t_reveal: u64,
    pub t_wait: u64,
    pub delta: u64,
    /// Slots needed to evaluate one VDF.
    pub t_eval: u64,
}

impl CommitTiming {
    pub fn violations(&self) -> Vec<TimingViolation> {
        let mut out = Vec::new();
        if self.delta == 0 {
            out.push(TimingViolation::DeltaNotPositive);
        }
        if self.t_commit <= self.delta {
            out.push(TimingViolation::CommitNotAboveDelta);
        }
        if self.t_reveal <= self.delta {
            out.push(TimingViolation::RevealNotAboveDelta);
        }
        if self.t_wait <= self.t_eval {
            out.push(TimingViolation::WaitNotAboveEval);
        }
        out
    }

    pub fn commit_window(&self) -> (u64, u64) {
        (self.start, self.start + self.t_commit)
    }

    pub fn reveal_window(&self) -> (u64, u64) {
        let open = self.start + self.t_commit;
        (open, open + self.t_reveal)
    }

    pub fn finalize_slot(&self) -> u64 {
        self.reveal_window().1 + self.t_wait
    }
}

fn window_check(slot: u64, (open, close): (u64, u64)) -> Result<(), Rejection> {
    if slot < open {
        Err(Rejection::TooEarly)
    } else if slot >= close {
        Err(Rejection::Late)
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitSessionConfig {
    pub session_id: u64,
    /// `m = 2^{2b}`; the final output lies in `[0, 2^b)`.
    pub output_bits: u32,
    /// Density of the payoff game; `1` is the base game.
    pub density: u64,
    #[serde(with = "crate::serde_big::vec")]
    pub roster: Vec<BigUint>,
    pub deposit: u64,
    pub reward: u64,
    pub timing: CommitTiming,
    pub group: GroupParams,
    pub vdf: VdfParams,
    pub sort_rule: SortRule,
}

impl CommitSessionConfig {
    pub fn m(&self) -> u64 {
        1u64 << (2 * self.output_bits)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let timing = self.timing.violations();
        if !timing.is_empty() {
            return Err(ConfigError::Timing(timing));
        }
        check_common(self.output_bits, self.density, self.roster.len(), self.deposit, self.reward)?;
        if self.vdf.modulus() <= &BigUint::from(2 * self.m()) {
            return Err(ConfigError::VdfModulusTooSmall);
        }
        Ok(())
    }

    pub fn rule(&self) -> PayoffRule {
        PayoffRule::new(self.m(), self.density).expect("validated")
    }
}

/// `y = s + m·k` with `k = H(r) mod ⌊(p - m) / m⌋`; always below `p`.
pub fn vdf_target(vdf: &VdfParams, m: u64, value: u64, nonce: &[u8]) -> BigUint {
    let m_big = BigUint::from(m);
    let pads = (vdf.modulus() - &m_big) / &m_big;
    let mut enc = Encoder::new();
    enc.tag("rig/vdf-pad").bytes(nonce);
    let k = hash_to_int(enc.as_bytes(), &pads);
    BigUint::from(value) + m_big * k
}

/// Value encoding inside commitments.
pub fn value_bytes(value: u64) -> [u8; 8] {
    value.to_be_bytes()
}

/// What an honest committer prepares: the commit message and what it will
/// later reveal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedCommit {
    pub message: CommitMessage,
    pub value: u64,
    pub nonce: [u8; NONCE_LEN],
}

pub fn prepare_commit(
    config: &CommitSessionConfig,
    key: &KeyPair,
    sender: ParticipantId,
    value: u64,
    nonce: [u8; NONCE_LEN],
) -> PreparedCommit {
    let commitment = commit(&value_bytes(value), &nonce).expect("nonce has the right length");
    let x = vdf_invert(&config.vdf, &vdf_target(&config.vdf, config.m(), value, &nonce));
    PreparedCommit {
        message: CommitMessage::new(
            &config.group,
            key,
            config.session_id,
            sender,
            commitment,
            x,
            config.vdf.difficulty(),
        ),
        value,
        nonce,
    }
}

pub fn prepare_reveal(
    config: &CommitSessionConfig,
    key: &KeyPair,
    sender: ParticipantId,
    prepared: &PreparedCommit,
) -> RevealMessage {
    RevealMessage::new(
        &config.group,
        key,
        config.session_id,
        sender,
        prepared.value,
        prepared.nonce,
    )
}

#[derive(Debug, Clone)]
struct AcceptedCommit {
    message: CommitMessage,
    digest: [u8; 32],
    seq: u64,
}

/// Commit-reveal session state.
#[derive(Debug, Clone)]
pub struct CommitSession {
    config: CommitSessionConfig,
    commits: BTreeMap<ParticipantId, Vec<AcceptedCommit>>,
    reveals: BTreeMap<ParticipantId, RevealMessage>,
    rejections: Vec<RejectionEntry>,
    seq: u64,
}

impl CommitSession {
    pub fn new(config: CommitSessionConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            config,
            commits: BTreeMap::new(),
            reveals: BTreeMap::new(),
            rejections: Vec::new(),
            seq: 0,
        })
    }

    pub fn config(&self) -> &CommitSessionConfig {
        &self.config
    }

    /// Whether `id` has exactly one valid commit on record.
    pub fn has_unique_commit(&self, id: ParticipantId) -> bool {
        self.commits.get(&id).is_some_and(|c| c.len() == 1)
    }

    pub fn has_revealed(&self, id: ParticipantId) -> bool {
        self.reveals.contains_key(&id)
    }

    /// Feeds one finalized ledger record; the receive slot is its inclusion
    /// slot.
    pub fn submit(&mut self, entry: &LedgerEntry) -> Result<(), Rejection> {
        let slot = entry.inclusion_slot;
        let outcome = match &entry.record {
            Record::Commit(m) => self.submit_commit(m, slot),
            Record::Reveal(m) => self.submit_reveal(m, slot),
            _ => Err(Rejection::WrongRecordType),
        };
        if let Err(reason) = outcome {
            self.rejections.push(RejectionEntry {
                participant: entry.record.sender(),
                slot,
                record: entry.record.tag().to_string(),
                reason,
            });
        }
        outcome
    }

    fn public_key(&self, id: ParticipantId) -> Result<&BigUint, Rejection> {
        self.config.roster.get(id as usize).ok_or(Rejection::UnknownSender)
    }

    pub fn submit_commit(&mut self, msg: &CommitMessage, slot: u64) -> Result<(), Rejection> {
        let cfg = &self.config;
        if msg.session_id != cfg.session_id {
            return Err(Rejection::WrongSession);
        }
        let public = self.public_key(msg.sender)?;
        let record = Record::Commit(msg.clone());
        if !record.verify_signature(&cfg.group, public) {
            return Err(Rejection::BadSignature);
        }
        if !verify_eligibility(&cfg.group, public, cfg.session_id, msg.sender, &msg.eligibility) {
            return Err(Rejection::BadParticipationProof);
        }
        window_check(slot, cfg.timing.commit_window())?;
        if msg.vdf_difficulty != cfg.vdf.difficulty() || &msg.vdf_input >= cfg.vdf.modulus() {
            return Err(Rejection::InvalidVdfParams);
        }
        let accepted = AcceptedCommit {
            digest: record.digest(),
            message: msg.clone(),
            seq: self.seq,
        };
        self.seq += 1;
        let prior = self.commits.entry(msg.sender).or_default();
        if prior.iter().any(|c| &c.message == msg) {
            return Err(Rejection::DuplicateCommit);
        }
        let conflicting = !prior.is_empty();
        // Both commits stay on record as evidence.
        prior.push(accepted);
        if conflicting {
            Err(Rejection::Equivocation)
        } else {
            Ok(())
        }
    }

    pub fn submit_reveal(&mut self, msg: &RevealMessage, slot: u64) -> Result<(), Rejection> {
        let cfg = &self.config;
        if msg.session_id != cfg.session_id {
            return Err(Rejection::WrongSession);
        }
        let public = self.public_key(msg.sender)?;
        if !Record::Reveal(msg.clone()).verify_signature(&cfg.group, public) {
            return Err(Rejection::BadSignature);
        }
        window_check(slot, cfg.timing.reveal_window())?;
        let commitment = match self.commits.get(&msg.sender).map(Vec::as_slice) {
            Some([only]) => only.message.commitment,
            _ => return Err(Rejection::NoValidCommit),
        };
        if self.reveals.contains_key(&msg.sender) {
            return Err(Rejection::DuplicateReveal);
        }
        if !open(&commitment, &value_bytes(msg.value), &msg.nonce).unwrap_or(false) {
            return Err(Rejection::CommitmentMismatch);
        }
        self.reveals.insert(msg.sender, msg.clone());
        Ok(())
    }

    /// Settles the session. Withheld values are recovered through the VDF;
    /// these evaluations run in parallel.
    pub fn finalize(&self, slot: u64) -> Result<BeaconResult, BeaconError> {
        let cfg = &self.config;
        let ready = cfg.timing.finalize_slot();
        if slot < ready {
            return Err(BeaconError::NotFinalizable { ready, now: slot });
        }
        let m = cfg.m();
        let mut exclusions = Vec::new();
        let mut confiscations = Vec::new();

        let mut committed: Vec<(ParticipantId, &AcceptedCommit)> = Vec::new();
        for (&id, list) in &self.commits {
            if list.len() == 1 {
                committed.push((id, &list[0]));
            } else {
                exclusions.push(Exclusion {
                    participant: id,
                    reason: ExclusionReason::Equivocation,
                });
                confiscations.push(Confiscation {
                    participant: id,
                    amount: cfg.deposit,
                    reason: ConfiscationReason::Equivocation,
                });
            }
        }

        let resolved: Vec<(ParticipantId, &AcceptedCommit, Option<(u64, ValueSource)>)> = committed
            .par_iter()
            .map(|&(id, c)| {
                let value = match self.reveals.get(&id) {
                    Some(reveal) => {
                        let y = vdf_target(&cfg.vdf, m, reveal.value, &reveal.nonce);
                        (vdf_invert(&cfg.vdf, &y) == c.message.vdf_input)
                            .then_some((reveal.value, ValueSource::Revealed))
                    }
                    None => {
                        let y = vdf_eval(&cfg.vdf, &c.message.vdf_input).y;
                        let s = (y % m).to_u64().expect("below m");
                        Some((s, ValueSource::RecoveredByVdf))
                    }
                };
                (id, c, value)
            })
            .collect();

        let mut valid = Vec::new();
        let mut withheld = BTreeSet::new();
        for (id, c, value) in resolved {
            match value {
                None => {
                    exclusions.push(Exclusion {
                        participant: id,
                        reason: ExclusionReason::VdfMismatch,
                    });
                    confiscations.push(Confiscation {
                        participant: id,
                        amount: cfg.deposit,
                        reason: ConfiscationReason::VdfMismatch,
                    });
                }
                Some((s, source)) => {
                    if source == ValueSource::RecoveredByVdf {
                        withheld.insert(id);
                        confiscations.push(Confiscation {
                            participant: id,
                            amount: cfg.deposit,
                            reason: ConfiscationReason::Withheld,
                        });
                    }
                    valid.push((id, c, s, source));
                }
            }
        }

        let digests: Vec<(ParticipantId, [u8; 32])> =
            valid.iter().map(|(id, c, _, _)| (*id, c.digest)).collect();
        if let Some(trimmed) = trim_to_even(&digests) {
            valid.retain(|(id, _, _, _)| *id != trimmed);
            exclusions.push(Exclusion {
                participant: trimmed,
                reason: ExclusionReason::TrimmedToEven,
            });
        }
        if valid.len() < 2 {
            return Err(BeaconError::TooFewParticipants(valid.len()));
        }

        let entries: Vec<SortEntry<'_>> = valid
            .iter()
            .map(|(id, c, _, _)| SortEntry {
                id: *id,
                public: &cfg.roster[*id as usize],
                ledger_seq: c.seq,
            })
            .collect();
        let ordering = sort_participants(cfg.sort_rule, cfg.session_id, &entries);
        let by_id: BTreeMap<ParticipantId, (u64, ValueSource)> =
            valid.iter().map(|(id, _, s, src)| (*id, (*s, *src))).collect();
        let ordered: Vec<(ParticipantId, u64)> = ordering.iter().map(|id| (*id, by_id[id].0)).collect();

        let settlements = settle(&cfg.rule(), &ordered, cfg.reward, &withheld)?;
        let v = sum_mod(ordered.iter().map(|(_, s)| *s), m);
        let (v1, v2, v_tilde) = bitwise_cut(v, cfg.output_bits, &cfg.vdf);
        exclusions.sort_by_key(|e| (e.participant, e.reason));
        confiscations.sort_by_key(|c| (c.participant, c.reason));
        Ok(BeaconResult {
            variant: Variant::Commit,
            session_id: cfg.session_id,
            m,
            output_bits: cfg.output_bits,
            contributions: ordering
                .iter()
                .map(|id| Contribution {
                    participant: *id,
                    value: by_id[id].0,
                    source: by_id[id].1,
                })
                .collect(),
            ordering,
            v,
            v1,
            v2,
            v_tilde,
            settlements,
            confiscations,
            exclusions,
            rejections: self.rejections.clone(),
            flagged: Vec::new(),
        })
    }
}

/// Replays a transcript into a fresh session and finalizes it at the first
/// slot where that is allowed.
pub fn replay(config: &CommitSessionConfig, transcript: &super::records::Transcript) -> Result<BeaconResult, BeaconError> {
    let mut session = CommitSession::new(config.clone())?;
    for entry in &transcript.entries {
        let _ = session.submit(entry);
    }
    session.finalize(config.timing.finalize_slot())
}

/// The commitment an honest sender would publish, exposed for tests and
/// tooling.
pub fn commitment_for(value: u64, nonce: &[u8; NONCE_LEN]) -> Commitment {
    commit(&value_bytes(value), nonce).expect("nonce has the right length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{group_setup, keygen, vdf_setup};

    fn setup(n: usize, b: u32) -> (CommitSessionConfig, Vec<KeyPair>) {
        let group = group_setup(64, b"commit-tests").unwrap();
        let keys: Vec<KeyPair> = (0..n).map(|i| keygen(&group, &[i as u8])).collect();
        let config = CommitSessionConfig {
            session_id: 42,
            output_bits: b,
            density: 1,
            roster: keys.iter().map(|k| k.public.clone()).collect(),
            deposit: 10,
            reward: 2,
            timing: CommitTiming {
                start: 0,
                t_commit: 4,
                t_reveal: 4,
                t_wait: 3,
                delta: 2,
                t_eval: 2,
            },
            group,
            vdf: vdf_setup(64, 50, b"commit-tests").unwrap(),
            sort_rule: SortRule::LedgerOrder,
        };
        (config, keys)
    }

    fn entry(record: Record, slot: u64) -> LedgerEntry {
        LedgerEntry {
            broadcast_slot: slot.saturating_sub(1),
            inclusion_slot: slot,
            record,
        }
    }

    fn run(
        config: &CommitSessionConfig,
        keys: &[KeyPair],
        values: &[u64],
        reveal: &[bool],
    ) -> (CommitSession, BeaconResult) {
        let mut session = CommitSession::new(config.clone()).unwrap();
        let prepared: Vec<PreparedCommit> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| prepare_commit(config, &keys[i], i as u32, v, [i as u8 + 1; 32]))
            .collect();
        for p in &prepared {
            session.submit(&entry(Record::Commit(p.message.clone()), 1)).unwrap();
        }
        for (i, p) in prepared.iter().enumerate() {
            if reveal[i] {
                let r = prepare_reveal(config, &keys[i], i as u32, p);
                session.submit(&entry(Record::Reveal(r), 5)).unwrap();
            }
        }
        let result = session.finalize(config.timing.finalize_slot()).unwrap();
        (session, result)
    }

    #[test]
    fn two_player_example() {
        let (config, keys) = setup(2, 1);
        let (_, result) = run(&config, &keys, &[1, 1], &[true, true]);
        assert_eq!(result.v, 2);
        assert_eq!(result.ordering, vec![0, 1]);
        let pay: Vec<(i64, i64)> = result.settlements.iter().map(|s| (s.payoff, s.reward)).collect();
        assert_eq!(pay, vec![(1, 3), (-1, 1)]);
        assert_eq!(result.total_payoff(), 0);
        assert_eq!(result.total_reward(), 4);
        assert!(result.confiscations.is_empty());
    }

    #[test]
    fn withholder_is_recovered_and_penalised() {
        let (config, keys) = setup(4, 2);
        let values = [3, 14, 7, 9];
        let (_, honest) = run(&config, &keys, &values, &[true; 4]);
        let (_, withheld) = run(&config, &keys, &values, &[true, true, false, true]);
        assert_eq!(honest.v, withheld.v);
        assert_eq!(honest.v_tilde, withheld.v_tilde);
        assert_eq!(honest.v, (3 + 14 + 7 + 9) % 16);
        assert_eq!(
            withheld.confiscations,
            vec![Confiscation { participant: 2, amount: 10, reason: ConfiscationReason::Withheld }]
        );
        let s2 = withheld.settlements.iter().find(|s| s.participant == 2).unwrap();
        assert!(s2.reward_forfeited);
        assert_eq!(s2.reward, s2.payoff);
        assert_eq!(withheld.contributions[2].source, ValueSource::RecoveredByVdf);
    }

    #[test]
    fn commit_rules_have_distinct_codes() {
        let (config, keys) = setup(2, 1);
        let mut session = CommitSession::new(config.clone()).unwrap();
        let p = prepare_commit(&config, &keys[0], 0, 1, [1; 32]);
        assert_eq!(session.submit_commit(&p.message, 4), Err(Rejection::Late));
        assert_eq!(session.submit_commit(&p.message, 5), Err(Rejection::Late));
        let mut forged = p.message.clone();
        forged.vdf_input += 1u32;
        assert_eq!(session.submit_commit(&forged, 1), Err(Rejection::BadSignature));
        let wrong_sender = prepare_commit(&config, &keys[1], 0, 1, [1; 32]);
        assert_eq!(session.submit_commit(&wrong_sender.message, 1), Err(Rejection::BadSignature));
        let mut bad_proof = p.message.clone();
        bad_proof.eligibility = crate::beacon::records::eligibility_proof(&config.group, &keys[0], 41, 0);
        bad_proof.signature = crate::crypto::sign(&config.group, &keys[0], &bad_proof.payload());
        assert_eq!(session.submit_commit(&bad_proof, 1), Err(Rejection::BadParticipationProof));
        let mut bad_vdf = p.message.clone();
        bad_vdf.vdf_difficulty += 1;
        bad_vdf.signature = crate::crypto::sign(&config.group, &keys[0], &bad_vdf.payload());
        assert_eq!(session.submit_commit(&bad_vdf, 1), Err(Rejection::InvalidVdfParams));
        let other_session = CommitMessage::new(&config.group, &keys[0], 7, 0, p.message.commitment, BigUint::from(1u32), 50);
        assert_eq!(session.submit_commit(&other_session, 1), Err(Rejection::WrongSession));
        let stranger = CommitMessage::new(&config.group, &keys[0], 42, 9, p.message.commitment, BigUint::from(1u32), 50);
        assert_eq!(session.submit_commit(&stranger, 1), Err(Rejection::UnknownSender));

        assert_eq!(session.submit_commit(&p.message, 0), Ok(()));
        assert_eq!(session.submit_commit(&p.message, 1), Err(Rejection::DuplicateCommit));
        let second = prepare_commit(&config, &keys[0], 0, 0, [2; 32]);
        assert_eq!(session.submit_commit(&second.message, 2), Err(Rejection::Equivocation));
        assert_eq!(session.commits[&0].len(), 2);
        assert!(!session.has_unique_commit(0));
    }

    #[test]
    fn reveal_rules_have_distinct_codes() {
        let (config, keys) = setup(2, 1);
        let mut session = CommitSession::new(config.clone()).unwrap();
        let p = prepare_commit(&config, &keys[0], 0, 3, [1; 32]);
        let reveal = prepare_reveal(&config, &keys[0], 0, &p);
        assert_eq!(session.submit_reveal(&reveal, 5), Err(Rejection::NoValidCommit));
        session.submit_commit(&p.message, 1).unwrap();
        assert_eq!(session.submit_reveal(&reveal, 3), Err(Rejection::TooEarly));
        assert_eq!(session.submit_reveal(&reveal, 8), Err(Rejection::Late));
        let altered = RevealMessage::new(&config.group, &keys[0], 42, 0, 2, [1; 32]);
        assert_eq!(session.submit_reveal(&altered, 5), Err(Rejection::CommitmentMismatch));
        assert_eq!(session.submit_reveal(&reveal, 5), Ok(()));
        assert_eq!(session.submit_reveal(&reveal, 6), Err(Rejection::DuplicateReveal));
    }

    #[test]
    fn vdf_cheat_and_equivocator_are_excluded() {
        let (config, keys) = setup(4, 1);
        let mut session = CommitSession::new(config.clone()).unwrap();
        let mut prepared = Vec::new();
        for i in 0..4u32 {
            let p = prepare_commit(&config, &keys[i as usize], i, u64::from(i), [i as u8 + 1; 32]);
            prepared.push(p);
        }
        // Participant 1 commits to value 1 but binds a VDF input for value 2.
        let wrong_x = vdf_invert(&config.vdf, &vdf_target(&config.vdf, 4, 2, &[2; 32]));
        prepared[1].message = CommitMessage::new(
            &config.group,
            &keys[1],
            42,
            1,
            prepared[1].message.commitment,
            wrong_x,
            50,
        );
        for p in &prepared {
            session.submit(&entry(Record::Commit(p.message.clone()), 1)).unwrap();
        }
        let equivocation = prepare_commit(&config, &keys[3], 3, 0, [9; 32]);
        assert_eq!(
            session.submit(&entry(Record::Commit(equivocation.message), 2)),
            Err(Rejection::Equivocation)
        );
        for (i, p) in prepared.iter().enumerate() {
            let _ = session.submit(&entry(Record::Reveal(prepare_reveal(&config, &keys[i], i as u32, p)), 5));
        }
        let result = session.finalize(11).unwrap();
        let reasons: Vec<(u32, ExclusionReason)> =
            result.exclusions.iter().map(|e| (e.participant, e.reason)).collect();
        assert!(reasons.contains(&(1, ExclusionReason::VdfMismatch)));
        assert!(reasons.contains(&(3, ExclusionReason::Equivocation)));
        assert!(result.confiscated(1) && result.confiscated(3));
        assert_eq!(result.ordering, vec![0, 2]);
        assert_eq!(result.v, 2);
    }

    #[test]
    fn odd_count_trims_largest_digest() {
        let (config, keys) = setup(3, 1);
        let (session, result) = run(&config, &keys, &[1, 2, 3], &[true; 3]);
        let largest = session
            .commits
            .iter()
            .max_by_key(|(_, c)| c[0].digest)
            .map(|(id, _)| *id)
            .unwrap();
        assert_eq!(
            result.exclusions,
            vec![Exclusion { participant: largest, reason: ExclusionReason::TrimmedToEven }]
        );
        assert!(result.confiscations.is_empty());
        assert_eq!(result.ordering.len(), 2);
        assert!(!result.ordering.contains(&largest));
        let (_, again) = run(&config, &keys, &[1, 2, 3], &[true; 3]);
        assert_eq!(again, result);
    }

    #[test]
    fn not_finalizable_early_and_result_json_round_trips() {
        let (config, keys) = setup(2, 2);
        let (session, result) = run(&config, &keys, &[5, 6], &[true, true]);
        assert_eq!(
            session.finalize(10),
            Err(BeaconError::NotFinalizable { ready: 11, now: 10 })
        );
        let json = result.to_json();
        let back = BeaconResult::from_json(&json).unwrap();
        assert_eq!(back, result);
        assert_eq!(back.to_json(), json);
        assert!(result.v < 16 && result.v_tilde < 4);
    }

    #[test]
    fn config_validation() {
        let (mut config, _) = setup(2, 1);
        config.timing.t_commit = 2;
        assert_eq!(
            CommitSession::new(config.clone()).unwrap_err(),
            ConfigError::Timing(vec![TimingViolation::CommitNotAboveDelta])
        );
        config.timing.t_commit = 4;
        config.deposit = 3;
        assert!(matches!(CommitSession::new(config.clone()), Err(ConfigError::DepositTooSmall { .. })));
        config.deposit = 10;
        config.output_bits = 0;
        assert_eq!(CommitSession::new(config).unwrap_err(), ConfigError::OutputBits(0));
    }
}
