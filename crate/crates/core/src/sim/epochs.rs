//! Proof-of-stake epoch loop: each epoch's beacon output seeds the next
//! epoch's stake-weighted roster.
//!
//! With an `h`-bit seed split into `v1` (low `h/2` bits) and `v2` (the
//! rest), the sampling offset is `(v1 + F(v2)) mod 2^{h/2}` where `F` is a
//! keyed hash standing in for a VRF. Seats are drawn by systematic sampling
//! on the cumulative stake line: seat `j` of `r` lands at
//! `⌊(offset + j·2^{h/2}) · S / (r · 2^{h/2})⌋` for total stake `S`. A party
//! whose stake exceeds `S/r` can hold more than one seat.

use serde::{Deserialize, Serialize};

use super::{run_session, AgentKind, SessionConfig, SimError};
use crate::beacon::SortRule;
use crate::crypto::encoding::Encoder;
use crate::crypto::{keygen, sha256, KeyPair};

/// Keyed stand-in for a VRF: the first 8 bytes of `SHA-256(key ‖ x)`.
pub fn keyed_selector(key: &[u8], x: u64) -> u64 {
    let mut enc = Encoder::new();
    enc.tag("rig/vrf").bytes(key).u64(x);
    u64::from_be_bytes(sha256(enc.as_bytes())[..8].try_into().expect("8 bytes"))
}

/// `(v1 + F(v2)) mod 2^{h/2}` for an `h`-bit seed.
pub fn sampling_offset(seed: u64, seed_bits: u32, key: &[u8]) -> u64 {
    let half = seed_bits / 2;
    let mask = (1u64 << half) - 1;
    let v1 = seed & mask;
    let v2 = seed >> half;
    v1.wrapping_add(keyed_selector(key, v2)) & mask
}

/// Party index of each of `seats` seats. Panics if the stake is all zero.
pub fn select_roster(seed: u64, seed_bits: u32, stakes: &[u64], seats: usize, key: &[u8]) -> Vec<usize> {
    let total: u128 = stakes.iter().map(|&s| u128::from(s)).sum();
    assert!(total > 0, "stake table has no stake");
    let half = seed_bits / 2;
    let unit = 1u128 << half;
    let offset = u128::from(sampling_offset(seed, seed_bits, key));
    let r = seats as u128;
    let mut cumulative = Vec::with_capacity(stakes.len());
    let mut acc = 0u128;
    for &s in stakes {
        acc += u128::from(s);
        cumulative.push(acc);
    }
    (0..r)
        .map(|j| {
            let point = (offset + j * unit) * total / (r * unit);
            cumulative.partition_point(|&c| c <= point)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochConfig {
    pub epochs: u64,
    pub stakes: Vec<u64>,
    pub seats: usize,
    pub initial_seed: u64,
    /// Key of the selector function.
    pub selector_key: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub seed: u64,
    pub offset: u64,
    /// Party holding each seat.
    pub roster: Vec<usize>,
    pub v_tilde: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRun {
    pub seed_bits: u32,
    pub epochs: Vec<EpochRecord>,
    /// Seats held per party over the whole run.
    pub seat_counts: Vec<u64>,
}

impl EpochRun {
    /// Each party's share of all seats.
    pub fn frequencies(&self) -> Vec<f64> {
        let total: u64 = self.seat_counts.iter().sum();
        self.seat_counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Seed sequence `v_0, v_1, …, v_k`.
    pub fn seeds(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.epochs.iter().map(|e| e.seed).collect();
        if let Some(last) = self.epochs.last() {
            out.push(last.v_tilde);
        }
        out
    }
}

fn seat_key(template: &SessionConfig, epoch: u64, seat: usize, party: usize) -> KeyPair {
    let mut enc = Encoder::new();
    enc.tag("rig/seat").u64(epoch).u64(seat as u64).u64(party as u64);
    keygen(template.group(), enc.as_bytes())
}

fn epoch_seed(run_seed: u64, epoch: u64) -> u64 {
    let mut enc = Encoder::new();
    enc.tag("rig/epoch").u64(run_seed).u64(epoch);
    u64::from_be_bytes(sha256(enc.as_bytes())[..8].try_into().expect("8 bytes"))
}

/// Runs `config.epochs` epochs with honest agents in every seat. The
/// session template supplies everything but the roster; a
/// [`SortRule::PreviousOutput`] rule is re-seeded with each epoch's seed.
pub fn run_epochs(template: &SessionConfig, config: &EpochConfig, run_seed: u64) -> Result<EpochRun, SimError> {
    if config.stakes.is_empty() || config.stakes.iter().all(|&s| s == 0) || config.seats == 0 {
        return Err(SimError::EpochSetup("need a nonempty stake table and at least one seat".to_string()));
    }
    let mut seed = config.initial_seed;
    let mut epochs = Vec::with_capacity(config.epochs as usize);
    let mut seat_counts = vec![0u64; config.stakes.len()];
    let mut seed_bits = 0;
    for epoch in 0..config.epochs {
        let wrap = |e: SimError| SimError::Epoch { epoch, source: Box::new(e) };
        let bits = output_bits(template);
        seed_bits = bits;
        let roster = select_roster(seed, bits, &config.stakes, config.seats, &config.selector_key);
        let keys: Vec<KeyPair> = roster
            .iter()
            .enumerate()
            .map(|(seat, &party)| seat_key(template, epoch, seat, party))
            .collect();
        let mut session = template.with_roster(epoch + 1, keys.iter().map(|k| k.public.clone()).collect());
        reseed_sort_rule(&mut session, seed);
        let agents = vec![AgentKind::Honest; keys.len()];
        let run = run_session(&session, &keys, &agents, epoch_seed(run_seed, epoch)).map_err(wrap)?;
        for &p in &roster {
            seat_counts[p] += 1;
        }
        epochs.push(EpochRecord {
            epoch,
            seed,
            offset: sampling_offset(seed, bits, &config.selector_key),
            roster,
            v_tilde: run.result.v_tilde,
        });
        seed = run.result.v_tilde;
    }
    Ok(EpochRun { seed_bits, epochs, seat_counts })
}

/// Bits in the final output `ṽ` of a session built from `template`.
pub fn output_bits(template: &SessionConfig) -> u32 {
    match template {
        SessionConfig::Commit(c) => c.output_bits,
        SessionConfig::Pvss(c) => 2 * c.output_bits,
    }
}

fn reseed_sort_rule(session: &mut SessionConfig, seed: u64) {
    let rule = match session {
        SessionConfig::Commit(c) => &mut c.sort_rule,
        SessionConfig::Pvss(c) => &mut c.sort_rule,
    };
    if let SortRule::PreviousOutput(_) = rule {
        *rule = SortRule::PreviousOutput(seed);
    }
}
