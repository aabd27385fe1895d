//! PVSS beacon: prepare, distribute, reconstruct.
//!
//! Phases (slots, end exclusive): prepare `[start, start + T_prepare)`,
//! distribute for the next `T_distribute` slots, reconstruct for the next
//! `T_reconstruct`. Participants are the senders of valid prepare messages;
//! the threshold is `t = ⌈n/2⌉`.
//!
//! Each participant deals its own value to the `n - 1` others (recipient
//! `j` of dealer `k` is the `j`-th participant other than `k`, in sorted
//! order) and, in the reconstruct phase, posts one record with its
//! decrypted share of every other dealer's bundle. A dealer whose bundle is
//! invalid or missing is excluded and loses the deposit. A participant that
//! stays silent in reconstruct keeps the deposit but forfeits `c`; its own
//! value is still recovered from the others' shares.
//!
//! There is no VDF stage here: `ṽ = v`, over `output_bits = 2b`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::{
    verify_eligibility, BundleMessage, LedgerEntry, PrepareMessage, ReconstructionMessage, Record,
};
use super::{
    check_common, settle, sort_participants, sum_mod, trim_to_even, BeaconError, BeaconResult,
    ConfigError, Confiscation, ConfiscationReason, Contribution, Exclusion, ExclusionReason,
    ParticipantId, Rejection, RejectionEntry, SortEntry, SortRule, TimingViolation, ValueSource,
    Variant,
};
use crate::crypto::{GroupParams, KeyPair};
use crate::game::PayoffRule;
use crate::pvss::{deal, decrypt_share, reconstruct, verify_deal, verify_share, DealerBundle, DecryptedShare};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvssTiming {
    pub start: u64,
    pub t_prepare: u64,
    pub t_distribute: u64,
    pub t_reconstruct: u64,
    pub delta: u64,
}

impl PvssTiming {
    pub fn violations(&self) -> Vec<TimingViolation> {
        let mut out = Vec::new();
        if self.delta == 0 {
            out.push(TimingViolation::DeltaNotPositive);
        }
        if self.t_prepare <= self.delta {
            out.push(TimingViolation::PrepareNotAboveDelta);
        }
        if self.t_distribute <= self.delta {
            out.push(TimingViolation::DistributeNotAboveDelta);
        }
        if self.t_reconstruct <= self.delta {
            out.push(TimingViolation::ReconstructNotAboveDelta);
        }
        out
    }

    pub fn prepare_window(&self) -> (u64, u64) {
        (self.start, self.start + self.t_prepare)
    }

    pub fn distribute_window(&self) -> (u64, u64) {
        let open = self.prepare_window().1;
        (open, open + self.t_distribute)
    }

    pub fn reconstruct_window(&self) -> (u64, u64) {
        let open = self.distribute_window().1;
        (open, open + self.t_reconstruct)
    }

    pub fn finalize_slot(&self) -> u64 {
        self.reconstruct_window().1
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
pub struct PvssSessionConfig {
    pub session_id: u64,
    /// `m = 2^{2b}`.
    pub output_bits: u32,
    pub density: u64,
    #[serde(with = "crate::serde_big::vec")]
    pub roster: Vec<BigUint>,
    pub deposit: u64,
    pub reward: u64,
    pub timing: PvssTiming,
    pub group: GroupParams,
    pub sort_rule: SortRule,
}

impl PvssSessionConfig {
    pub fn m(&self) -> u64 {
        1u64 << (2 * self.output_bits)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let timing = self.timing.violations();
        if !timing.is_empty() {
            return Err(ConfigError::Timing(timing));
        }
        check_common(self.output_bits, self.density, self.roster.len(), self.deposit, self.reward)
    }

    pub fn rule(&self) -> PayoffRule {
        PayoffRule::new(self.m(), self.density).expect("validated")
    }
}

/// Participants and threshold fixed when the prepare phase closes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    /// Sorted by the session's rule.
    pub participants: Vec<ParticipantId>,
    pub threshold: usize,
}

impl Roster {
    /// Participants other than `dealer`, i.e. that dealer's recipients.
    pub fn recipients(&self, dealer: ParticipantId) -> Vec<ParticipantId> {
        self.participants.iter().copied().filter(|&p| p != dealer).collect()
    }

    /// 1-based index of `recipient` among `dealer`'s recipients.
    pub fn share_index(&self, dealer: ParticipantId, recipient: ParticipantId) -> Option<usize> {
        self.recipients(dealer)
            .iter()
            .position(|&p| p == recipient)
            .map(|k| k + 1)
    }
}

#[derive(Debug, Clone)]
pub struct PvssSession {
    config: PvssSessionConfig,
    prepares: BTreeMap<ParticipantId, u64>,
    roster: Option<Roster>,
    bundles: BTreeMap<ParticipantId, (DealerBundle, [u8; 32])>,
    bad_dealers: BTreeSet<ParticipantId>,
    /// dealer -> recipient -> share
    shares: BTreeMap<ParticipantId, BTreeMap<ParticipantId, DecryptedShare>>,
    reconstructed_by: BTreeSet<ParticipantId>,
    flagged: BTreeSet<ParticipantId>,
    rejections: Vec<RejectionEntry>,
    seq: u64,
}

impl PvssSession {
    pub fn new(config: PvssSessionConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            config,
            prepares: BTreeMap::new(),
            roster: None,
            bundles: BTreeMap::new(),
            bad_dealers: BTreeSet::new(),
            shares: BTreeMap::new(),
            reconstructed_by: BTreeSet::new(),
            flagged: BTreeSet::new(),
            rejections: Vec::new(),
            seq: 0,
        })
    }

    pub fn config(&self) -> &PvssSessionConfig {
        &self.config
    }

    pub fn roster(&self) -> Option<&Roster> {
        self.roster.as_ref()
    }

    /// Dealers whose bundles were accepted, with the bundles.
    pub fn bundles(&self) -> impl Iterator<Item = (ParticipantId, &DealerBundle)> {
        self.bundles.iter().map(|(id, (b, _))| (*id, b))
    }

    pub fn has_bundle(&self, id: ParticipantId) -> bool {
        self.bundles.contains_key(&id)
    }

    fn public_key(&self, id: ParticipantId) -> Result<&BigUint, Rejection> {
        self.config.roster.get(id as usize).ok_or(Rejection::UnknownSender)
    }

    /// Closes the prepare phase. Idempotent; called implicitly by later
    /// phases.
    pub fn close_prepare(&mut self) -> Result<&Roster, BeaconError> {
        if self.roster.is_none() {
            let n = self.prepares.len();
            if n < 2 {
                return Err(BeaconError::PrepareAborted(n));
            }
            let entries: Vec<SortEntry<'_>> = self
                .prepares
                .iter()
                .map(|(&id, &seq)| SortEntry {
                    id,
                    public: &self.config.roster[id as usize],
                    ledger_seq: seq,
                })
                .collect();
            let participants = sort_participants(self.config.sort_rule, self.config.session_id, &entries);
            self.roster = Some(Roster {
                participants,
                threshold: n.div_ceil(2),
            });
        }
        Ok(self.roster.as_ref().expect("just set"))
    }

    pub fn submit(&mut self, entry: &LedgerEntry) -> Result<(), Rejection> {
        let slot = entry.inclusion_slot;
        let outcome = match &entry.record {
            Record::Prepare(m) => self.submit_prepare(m, slot),
            Record::Distribute(m) => self.submit_bundle(m, slot),
            Record::Reconstruct(m) => self.submit_reconstruction(m, slot),
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

    pub fn submit_prepare(&mut self, msg: &PrepareMessage, slot: u64) -> Result<(), Rejection> {
        let cfg = &self.config;
        if msg.session_id != cfg.session_id {
            return Err(Rejection::WrongSession);
        }
        let public = self.public_key(msg.sender)?;
        if !Record::Prepare(msg.clone()).verify_signature(&cfg.group, public) {
            return Err(Rejection::BadSignature);
        }
        if !verify_eligibility(&cfg.group, public, cfg.session_id, msg.sender, &msg.eligibility) {
            return Err(Rejection::BadParticipationProof);
        }
        window_check(slot, cfg.timing.prepare_window())?;
        if self.prepares.contains_key(&msg.sender) {
            return Err(Rejection::DuplicatePrepare);
        }
        self.prepares.insert(msg.sender, self.seq);
        self.seq += 1;
        Ok(())
    }

    fn recipient_keys(&self, roster: &Roster, dealer: ParticipantId) -> Vec<BigUint> {
        roster
            .recipients(dealer)
            .iter()
            .map(|&p| self.config.roster[p as usize].clone())
            .collect()
    }

    pub fn submit_bundle(&mut self, msg: &BundleMessage, slot: u64) -> Result<(), Rejection> {
        let public = self.public_key(msg.sender)?.clone();
        let cfg = self.config.clone();
        if msg.bundle.session_id != cfg.session_id {
            return Err(Rejection::WrongSession);
        }
        if !Record::Distribute(msg.clone()).verify_signature(&cfg.group, &public) {
            return Err(Rejection::BadSignature);
        }
        window_check(slot, cfg.timing.distribute_window())?;
        let roster = match self.close_prepare() {
            Ok(r) => r.clone(),
            Err(_) => return Err(Rejection::NotParticipant),
        };
        if !roster.participants.contains(&msg.sender) {
            return Err(Rejection::NotParticipant);
        }
        if self.bundles.contains_key(&msg.sender) || self.bad_dealers.contains(&msg.sender) {
            return Err(Rejection::DuplicateBundle);
        }
        let keys = self.recipient_keys(&roster, msg.sender);
        let well_formed = msg.bundle.dealer == u64::from(msg.sender)
            && msg.bundle.modulus == BigUint::from(cfg.m())
            && msg.bundle.threshold() == roster.threshold
            && verify_deal(&cfg.group, &msg.bundle, &keys);
        if !well_formed {
            self.bad_dealers.insert(msg.sender);
            return Err(Rejection::InvalidBundle);
        }
        let digest = Record::Distribute(msg.clone()).digest();
        self.bundles.insert(msg.sender, (msg.bundle.clone(), digest));
        Ok(())
    }

    pub fn submit_reconstruction(&mut self, msg: &ReconstructionMessage, slot: u64) -> Result<(), Rejection> {
        let cfg = self.config.clone();
        if msg.session_id != cfg.session_id {
            return Err(Rejection::WrongSession);
        }
        let public = self.public_key(msg.sender)?.clone();
        if !Record::Reconstruct(msg.clone()).verify_signature(&cfg.group, &public) {
            return Err(Rejection::BadSignature);
        }
        window_check(slot, cfg.timing.reconstruct_window())?;
        let roster = match self.close_prepare() {
            Ok(r) => r.clone(),
            Err(_) => return Err(Rejection::NotParticipant),
        };
        if !roster.participants.contains(&msg.sender) {
            return Err(Rejection::NotParticipant);
        }
        if !self.reconstructed_by.insert(msg.sender) {
            return Err(Rejection::DuplicateReconstruction);
        }
        let mut bad = false;
        for (dealer, share) in &msg.shares {
            // Shares for excluded or unknown dealers are ignored.
            let Some((bundle, _)) = self.bundles.get(dealer) else {
                continue;
            };
            let valid = roster.share_index(*dealer, msg.sender) == Some(share.index)
                && verify_share(&cfg.group, bundle, &public, share);
            if valid {
                self.shares.entry(*dealer).or_default().insert(msg.sender, share.clone());
            } else {
                bad = true;
            }
        }
        if bad {
            self.flagged.insert(msg.sender);
            return Err(Rejection::InvalidShare);
        }
        Ok(())
    }

    pub fn finalize(&mut self, slot: u64) -> Result<BeaconResult, BeaconError> {
        let ready = self.config.timing.finalize_slot();
        if slot < ready {
            return Err(BeaconError::NotFinalizable { ready, now: slot });
        }
        let roster = self.close_prepare()?.clone();
        let cfg = &self.config;
        let m = cfg.m();
        let mut exclusions = Vec::new();
        let mut confiscations = Vec::new();
        for &p in &roster.participants {
            if self.bundles.contains_key(&p) {
                continue;
            }
            let (reason, conf) = if self.bad_dealers.contains(&p) {
                (ExclusionReason::InvalidBundle, ConfiscationReason::InvalidBundle)
            } else {
                (ExclusionReason::MissingBundle, ConfiscationReason::MissingBundle)
            };
            exclusions.push(Exclusion { participant: p, reason });
            confiscations.push(Confiscation {
                participant: p,
                amount: cfg.deposit,
                reason: conf,
            });
        }

        let dealers: Vec<ParticipantId> = roster
            .participants
            .iter()
            .copied()
            .filter(|p| self.bundles.contains_key(p))
            .collect();
        let empty = BTreeMap::new();
        let recovered: Vec<Result<(ParticipantId, u64), BeaconError>> = dealers
            .par_iter()
            .map(|&dealer| {
                let (bundle, _) = &self.bundles[&dealer];
                let shares = self.shares.get(&dealer).unwrap_or(&empty);
                if shares.len() < roster.threshold {
                    return Err(BeaconError::AvailabilityFailure {
                        dealer,
                        have: shares.len(),
                        need: roster.threshold,
                    });
                }
                let mut list: Vec<DecryptedShare> = shares.values().cloned().collect();
                list.sort_by_key(|s| s.index);
                let keys = self.recipient_keys(&roster, dealer);
                let s = reconstruct(&cfg.group, bundle, &keys, &list).map_err(|_| {
                    BeaconError::AvailabilityFailure {
                        dealer,
                        have: 0,
                        need: roster.threshold,
                    }
                })?;
                Ok((dealer, s.to_u64().expect("below m")))
            })
            .collect();
        let mut values = BTreeMap::new();
        for r in recovered {
            let (dealer, s) = r?;
            values.insert(dealer, s);
        }

        let digests: Vec<(ParticipantId, [u8; 32])> =
            dealers.iter().map(|d| (*d, self.bundles[d].1)).collect();
        let mut game: Vec<ParticipantId> = dealers.clone();
        if let Some(trimmed) = trim_to_even(&digests) {
            game.retain(|&d| d != trimmed);
            exclusions.push(Exclusion {
                participant: trimmed,
                reason: ExclusionReason::TrimmedToEven,
            });
        }
        if game.len() < 2 {
            return Err(BeaconError::TooFewParticipants(game.len()));
        }
        // `dealers` is already in sorted order.
        let ordered: Vec<(ParticipantId, u64)> = game.iter().map(|d| (*d, values[d])).collect();
        let forfeits: BTreeSet<ParticipantId> = game
            .iter()
            .copied()
            .filter(|p| !self.reconstructed_by.contains(p) || self.flagged.contains(p))
            .collect();
        let settlements = settle(&cfg.rule(), &ordered, cfg.reward, &forfeits)?;
        let v = sum_mod(ordered.iter().map(|(_, s)| *s), m);
        exclusions.sort_by_key(|e| (e.participant, e.reason));
        confiscations.sort_by_key(|c| (c.participant, c.reason));
        let (v1, v2) = super::split_output(v, cfg.output_bits);
        Ok(BeaconResult {
            variant: Variant::Pvss,
            session_id: cfg.session_id,
            m,
            output_bits: 2 * cfg.output_bits,
            ordering: game.clone(),
            contributions: ordered
                .iter()
                .map(|(p, s)| Contribution {
                    participant: *p,
                    value: *s,
                    source: ValueSource::Reconstructed,
                })
                .collect(),
            v,
            v1,
            v2,
            v_tilde: v,
            settlements,
            confiscations,
            exclusions,
            rejections: self.rejections.clone(),
            flagged: self.flagged.iter().copied().collect(),
        })
    }
}

/// A dealer's bundle for the current roster.
pub fn prepare_bundle<R: RngCore + ?Sized>(
    config: &PvssSessionConfig,
    roster: &Roster,
    key: &KeyPair,
    dealer: ParticipantId,
    value: u64,
    rng: &mut R,
) -> Result<BundleMessage, crate::pvss::PvssError> {
    let keys: Vec<BigUint> = roster
        .recipients(dealer)
        .iter()
        .map(|&p| config.roster[p as usize].clone())
        .collect();
    let bundle = deal(
        &config.group,
        config.session_id,
        u64::from(dealer),
        &BigUint::from(value),
        &BigUint::from(config.m()),
        roster.threshold,
        &keys,
        rng,
    )?;
    Ok(BundleMessage::new(&config.group, key, dealer, bundle))
}

/// Decrypts the participant's share of every accepted bundle.
pub fn prepare_reconstruction<R: RngCore + ?Sized>(
    session: &PvssSession,
    key: &KeyPair,
    sender: ParticipantId,
    rng: &mut R,
) -> Option<ReconstructionMessage> {
    let roster = session.roster()?;
    let cfg = session.config();
    let mut shares = Vec::new();
    for (dealer, bundle) in session.bundles() {
        if dealer == sender {
            continue;
        }
        let index = roster.share_index(dealer, sender)?;
        let share = decrypt_share(&cfg.group, bundle, index, key, rng).ok()?;
        shares.push((dealer, share));
    }
    Some(ReconstructionMessage::new(&cfg.group, key, cfg.session_id, sender, shares))
}

pub fn prepare_message(config: &PvssSessionConfig, key: &KeyPair, sender: ParticipantId) -> PrepareMessage {
    PrepareMessage::new(&config.group, key, config.session_id, sender)
}

/// Replays a transcript into a fresh session and finalizes it.
pub fn replay(config: &PvssSessionConfig, transcript: &super::records::Transcript) -> Result<BeaconResult, BeaconError> {
    let mut session = PvssSession::new(config.clone())?;
    for entry in &transcript.entries {
        let _ = session.submit(entry);
    }
    session.finalize(config.timing.finalize_slot())
}

/// Group used by [`GroupParams`]-agnostic helpers in tests.
#[doc(hidden)]
pub fn test_group() -> GroupParams {
    crate::crypto::group_setup(64, b"pvss-beacon").expect("valid bits")
}
