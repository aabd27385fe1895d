//! A Δ-synchronous ledger in discrete slots.
//!
//! A record broadcast at slot `τ` is included at `τ + 1 + (h mod Δ)`, where
//! `h` hashes the ledger seed with the record bytes, so inclusion is always
//! within `(τ, τ + Δ]` and the same for every observer. Finalized order is
//! `(inclusion slot, broadcast sequence)`.

use thiserror::Error;

use crate::beacon::records::{LedgerEntry, Record, Transcript};
use crate::crypto::encoding::Encoder;
use crate::crypto::sha256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("Δ must be at least 1")]
    ZeroDelta,
    #[error("broadcast at slot {slot} is before the current slot {current}")]
    PastSlot { slot: u64, current: u64 },
}

#[derive(Debug, Clone)]
struct Pending {
    seq: u64,
    entry: LedgerEntry,
}

#[derive(Debug, Clone)]
pub struct SimLedger {
    delta: u64,
    seed: u64,
    slot: u64,
    next_seq: u64,
    pending: Vec<Pending>,
    finalized: Vec<LedgerEntry>,
}

impl SimLedger {
    pub fn new(delta: u64, seed: u64) -> Result<Self, LedgerError> {
        if delta == 0 {
            return Err(LedgerError::ZeroDelta);
        }
        Ok(Self {
            delta,
            seed,
            slot: 0,
            next_seq: 0,
            pending: Vec::new(),
            finalized: Vec::new(),
        })
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn current_slot(&self) -> u64 {
        self.slot
    }

    /// Inclusion slot a record broadcast at `slot` would get.
    pub fn inclusion_slot(&self, record: &Record, slot: u64) -> u64 {
        let mut enc = Encoder::new();
        enc.tag("rig/inclusion").u64(self.seed).bytes(&record.to_bytes());
        let h = u64::from_be_bytes(sha256(enc.as_bytes())[..8].try_into().expect("8 bytes"));
        slot + 1 + h % self.delta
    }

    pub fn broadcast(&mut self, record: Record, slot: u64) -> Result<u64, LedgerError> {
        if slot < self.slot {
            return Err(LedgerError::PastSlot { slot, current: self.slot });
        }
        let inclusion_slot = self.inclusion_slot(&record, slot);
        self.pending.push(Pending {
            seq: self.next_seq,
            entry: LedgerEntry {
                broadcast_slot: slot,
                inclusion_slot,
                record,
            },
        });
        self.next_seq += 1;
        Ok(inclusion_slot)
    }

    /// Moves to `slot` and returns the records finalized on the way, in
    /// ledger order.
    pub fn advance_to(&mut self, slot: u64) -> Vec<LedgerEntry> {
        self.slot = self.slot.max(slot);
        let (mut ready, rest): (Vec<Pending>, Vec<Pending>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|p| p.entry.inclusion_slot <= self.slot);
        self.pending = rest;
        ready.sort_by_key(|p| (p.entry.inclusion_slot, p.seq));
        let out: Vec<LedgerEntry> = ready.into_iter().map(|p| p.entry).collect();
        self.finalized.extend(out.iter().cloned());
        out
    }

    pub fn finalized(&self) -> &[LedgerEntry] {
        &self.finalized
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            entries: self.finalized.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beacon::records::RevealMessage;
    use crate::crypto::{keygen, GroupParams};

    fn records(n: u64) -> Vec<Record> {
        let params = GroupParams::fixture_23();
        let key = keygen(&params, b"l");
        (0..n)
            .map(|v| Record::Reveal(RevealMessage::new(&params, &key, 1, 0, v, [0; 32])))
            .collect()
    }

    #[test]
    fn inclusion_within_delta() {
        let mut ledger = SimLedger::new(3, 9).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for r in records(200) {
            let i = ledger.broadcast(r, 10).unwrap();
            assert!((11..=13).contains(&i));
            seen.insert(i);
        }
        assert_eq!(seen.len(), 3);
        assert!(ledger.advance_to(10).is_empty());
        let mut total = 0;
        for s in 11..=13 {
            let batch = ledger.advance_to(s);
            assert!(batch.iter().all(|e| e.inclusion_slot == s));
            total += batch.len();
        }
        assert_eq!(total, 200);
        assert_eq!(ledger.pending_count(), 0);
    }

    #[test]
    fn delta_one_is_next_slot() {
        let mut ledger = SimLedger::new(1, 0).unwrap();
        for r in records(20) {
            assert_eq!(ledger.broadcast(r, 4).unwrap(), 5);
        }
    }

    #[test]
    fn replay_is_identical_and_past_slots_rejected() {
        let run = || {
            let mut ledger = SimLedger::new(4, 77).unwrap();
            for r in records(30) {
                ledger.broadcast(r, 2).unwrap();
            }
            ledger.advance_to(100);
            ledger.transcript().to_text()
        };
        assert_eq!(run(), run());
        let mut ledger = SimLedger::new(2, 0).unwrap();
        ledger.advance_to(5);
        assert_eq!(
            ledger.broadcast(records(1).remove(0), 4),
            Err(LedgerError::PastSlot { slot: 4, current: 5 })
        );
        assert_eq!(SimLedger::new(0, 0).unwrap_err(), LedgerError::ZeroDelta);
    }
}
