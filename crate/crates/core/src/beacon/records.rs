//! Signed protocol messages and the transcript file format.
//!
//! Every message has a canonical encoding (see [`crate::crypto::encoding`]):
//! the signed payload followed by the signature. A transcript is one line per
//! finalized ledger record:
//!
//! ```text
//! <tag> <broadcast_slot> <inclusion_slot> <hex of canonical bytes>
//! ```
//!
//! in ledger order, each line ending in `\n`.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::encoding::{DecodeError, Decoder, Encoder};
use crate::crypto::{
    sha256, sign, verify_signature, Commitment, GroupParams, KeyPair, Signature, NONCE_LEN,
};
use crate::pvss::{DealerBundle, DecryptedShare};

/// Participant index: position in the session roster, 0-based.
pub type ParticipantId = u32;

fn eligibility_payload(session_id: u64, sender: ParticipantId) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.tag("rig/eligible").u64(session_id).u64(u64::from(sender));
    enc.into_bytes()
}

/// Signature over `("eligible", session, sender)`; stands in for a stake or
/// lottery proof.
pub fn eligibility_proof(
    params: &GroupParams,
    key: &KeyPair,
    session_id: u64,
    sender: ParticipantId,
) -> Signature {
    sign(params, key, &eligibility_payload(session_id, sender))
}

pub fn verify_eligibility(
    params: &GroupParams,
    public: &BigUint,
    session_id: u64,
    sender: ParticipantId,
    proof: &Signature,
) -> bool {
    verify_signature(params, public, &eligibility_payload(session_id, sender), proof)
}

fn read_sender(dec: &mut Decoder<'_>) -> Result<ParticipantId, DecodeError> {
    ParticipantId::try_from(dec.u64("sender")?).map_err(|_| DecodeError::Invalid("sender"))
}

/// `(session, sender, h_i, proof_i, VDF input)`, signed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMessage {
    pub session_id: u64,
    pub sender: ParticipantId,
    pub commitment: Commitment,
    pub eligibility: Signature,
    #[serde(with = "crate::serde_big")]
    pub vdf_input: BigUint,
    pub vdf_difficulty: u64,
    pub signature: Signature,
}

impl CommitMessage {
    pub fn new(
        params: &GroupParams,
        key: &KeyPair,
        session_id: u64,
        sender: ParticipantId,
        commitment: Commitment,
        vdf_input: BigUint,
        vdf_difficulty: u64,
    ) -> Self {
        let mut msg = Self {
            session_id,
            sender,
            commitment,
            eligibility: eligibility_proof(params, key, session_id, sender),
            vdf_input,
            vdf_difficulty,
            signature: Signature {
                challenge: BigUint::default(),
                response: BigUint::default(),
            },
        };
        msg.signature = sign(params, key, &msg.payload());
        msg
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.tag("rig/commit")
            .u64(self.session_id)
            .u64(u64::from(self.sender))
            .bytes(self.commitment.as_bytes());
        self.eligibility.encode_into(&mut enc);
        enc.int(&self.vdf_input).u64(self.vdf_difficulty);
        enc.into_bytes()
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.expect_tag("rig/commit")?;
        let session_id = dec.u64("commit.session_id")?;
        let sender = read_sender(dec)?;
        let commitment = dec.bytes("commit.commitment")?;
        let commitment = Commitment(
            commitment
                .try_into()
                .map_err(|_| DecodeError::Invalid("commit.commitment"))?,
        );
        Ok(Self {
            session_id,
            sender,
            commitment,
            eligibility: Signature::decode_from(dec)?,
            vdf_input: dec.int("commit.vdf_input")?,
            vdf_difficulty: dec.u64("commit.vdf_difficulty")?,
            signature: Signature::decode_from(dec)?,
        })
    }
}

/// `(session, sender, s_i, r_i)`, signed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealMessage {
    pub session_id: u64,
    pub sender: ParticipantId,
    pub value: u64,
    pub nonce: [u8; NONCE_LEN],
    pub signature: Signature,
}

impl RevealMessage {
    pub fn new(
        params: &GroupParams,
        key: &KeyPair,
        session_id: u64,
        sender: ParticipantId,
        value: u64,
        nonce: [u8; NONCE_LEN],
    ) -> Self {
        let mut msg = Self {
            session_id,
            sender,
            value,
            nonce,
            signature: Signature {
                challenge: BigUint::default(),
                response: BigUint::default(),
            },
        };
        msg.signature = sign(params, key, &msg.payload());
        msg
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.tag("rig/reveal")
            .u64(self.session_id)
            .u64(u64::from(self.sender))
            .u64(self.value)
            .bytes(&self.nonce);
        enc.into_bytes()
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.expect_tag("rig/reveal")?;
        Ok(Self {
            session_id: dec.u64("reveal.session_id")?,
            sender: read_sender(dec)?,
            value: dec.u64("reveal.value")?,
            nonce: dec
                .bytes("reveal.nonce")?
                .try_into()
                .map_err(|_| DecodeError::Invalid("reveal.nonce"))?,
            signature: Signature::decode_from(dec)?,
        })
    }
}

/// `(session, proof_i)`, signed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepareMessage {
    pub session_id: u64,
    pub sender: ParticipantId,
    pub eligibility: Signature,
    pub signature: Signature,
}

impl PrepareMessage {
    pub fn new(params: &GroupParams, key: &KeyPair, session_id: u64, sender: ParticipantId) -> Self {
        let mut msg = Self {
            session_id,
            sender,
            eligibility: eligibility_proof(params, key, session_id, sender),
            signature: Signature {
                challenge: BigUint::default(),
                response: BigUint::default(),
            },
        };
        msg.signature = sign(params, key, &msg.payload());
        msg
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.tag("rig/prepare")
            .u64(self.session_id)
            .u64(u64::from(self.sender));
        self.eligibility.encode_into(&mut enc);
        enc.into_bytes()
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.expect_tag("rig/prepare")?;
        Ok(Self {
            session_id: dec.u64("prepare.session_id")?,
            sender: read_sender(dec)?,
            eligibility: Signature::decode_from(dec)?,
            signature: Signature::decode_from(dec)?,
        })
    }
}

/// A dealer's PVSS bundle, signed by the dealer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMessage {
    pub sender: ParticipantId,
    pub bundle: DealerBundle,
    pub signature: Signature,
}

impl BundleMessage {
    pub fn new(params: &GroupParams, key: &KeyPair, sender: ParticipantId, bundle: DealerBundle) -> Self {
        let mut msg = Self {
            sender,
            bundle,
            signature: Signature {
                challenge: BigUint::default(),
                response: BigUint::default(),
            },
        };
        msg.signature = sign(params, key, &msg.payload());
        msg
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.tag("rig/distribute").u64(u64::from(self.sender));
        self.bundle.encode_into(&mut enc);
        enc.into_bytes()
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.expect_tag("rig/distribute")?;
        Ok(Self {
            sender: read_sender(dec)?,
            bundle: DealerBundle::decode_from(dec)?,
            signature: Signature::decode_from(dec)?,
        })
    }
}

/// One participant's decrypted shares for every dealer, in a single record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionMessage {
    pub session_id: u64,
    pub sender: ParticipantId,
    /// `(dealer, share)` pairs.
    pub shares: Vec<(ParticipantId, DecryptedShare)>,
    pub signature: Signature,
}

impl ReconstructionMessage {
    pub fn new(
        params: &GroupParams,
        key: &KeyPair,
        session_id: u64,
        sender: ParticipantId,
        shares: Vec<(ParticipantId, DecryptedShare)>,
    ) -> Self {
        let mut msg = Self {
            session_id,
            sender,
            shares,
            signature: Signature {
                challenge: BigUint::default(),
                response: BigUint::default(),
            },
        };
        msg.signature = sign(params, key, &msg.payload());
        msg
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.tag("rig/reconstruct")
            .u64(self.session_id)
            .u64(u64::from(self.sender))
            .u64(self.shares.len() as u64);
        for (dealer, share) in &self.shares {
            enc.u64(u64::from(*dealer));
            share.encode_into(&mut enc);
        }
        enc.into_bytes()
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        dec.expect_tag("rig/reconstruct")?;
        let session_id = dec.u64("reconstruct.session_id")?;
        let sender = read_sender(dec)?;
        let count = dec.u64("reconstruct.count")?;
        if count > 1 << 16 {
            return Err(DecodeError::Invalid("reconstruct.count"));
        }
        let mut shares = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let dealer = read_sender(dec)?;
            shares.push((dealer, DecryptedShare::decode_from(dec)?));
        }
        Ok(Self {
            session_id,
            sender,
            shares,
            signature: Signature::decode_from(dec)?,
        })
    }
}

/// Any message that can appear on the ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Commit(CommitMessage),
    Reveal(RevealMessage),
    Prepare(PrepareMessage),
    Distribute(BundleMessage),
    Reconstruct(ReconstructionMessage),
}

impl Record {
    pub fn tag(&self) -> &'static str {
        match self {
            Record::Commit(_) => "commit",
            Record::Reveal(_) => "reveal",
            Record::Prepare(_) => "prepare",
            Record::Distribute(_) => "distribute",
            Record::Reconstruct(_) => "reconstruct",
        }
    }

    pub fn sender(&self) -> ParticipantId {
        match self {
            Record::Commit(m) => m.sender,
            Record::Reveal(m) => m.sender,
            Record::Prepare(m) => m.sender,
            Record::Distribute(m) => m.sender,
            Record::Reconstruct(m) => m.sender,
        }
    }

    fn parts(&self) -> (Vec<u8>, &Signature) {
        match self {
            Record::Commit(m) => (m.payload(), &m.signature),
            Record::Reveal(m) => (m.payload(), &m.signature),
            Record::Prepare(m) => (m.payload(), &m.signature),
            Record::Distribute(m) => (m.payload(), &m.signature),
            Record::Reconstruct(m) => (m.payload(), &m.signature),
        }
    }

    /// The bytes that were signed.
    pub fn payload(&self) -> Vec<u8> {
        self.parts().0
    }

    pub fn signature(&self) -> &Signature {
        self.parts().1
    }

    /// Canonical encoding: payload followed by signature.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (payload, sig) = self.parts();
        let mut enc = Encoder::new();
        sig.encode_into(&mut enc);
        let mut out = payload;
        out.extend_from_slice(enc.as_bytes());
        out
    }

    /// SHA-256 of the canonical encoding.
    pub fn digest(&self) -> [u8; 32] {
        sha256(&self.to_bytes())
    }

    pub fn from_bytes(tag: &str, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let record = match tag {
            "commit" => Record::Commit(CommitMessage::decode(&mut dec)?),
            "reveal" => Record::Reveal(RevealMessage::decode(&mut dec)?),
            "prepare" => Record::Prepare(PrepareMessage::decode(&mut dec)?),
            "distribute" => Record::Distribute(BundleMessage::decode(&mut dec)?),
            "reconstruct" => Record::Reconstruct(ReconstructionMessage::decode(&mut dec)?),
            _ => return Err(DecodeError::Invalid("record tag")),
        };
        dec.finish()?;
        Ok(record)
    }

    pub fn verify_signature(&self, params: &GroupParams, public: &BigUint) -> bool {
        let (payload, sig) = self.parts();
        verify_signature(params, public, &payload, sig)
    }
}

/// A record as finalized on the ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub broadcast_slot: u64,
    pub inclusion_slot: u64,
    pub record: Record,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranscriptError {
    #[error("line {line}: expected 4 space-separated fields")]
    Fields { line: usize },
    #[error("line {line}: bad slot number")]
    Slot { line: usize },
    #[error("line {line}: bad hex")]
    Hex { line: usize },
    #[error("line {line}: {source}")]
    Decode { line: usize, source: DecodeError },
}

/// Finalized ledger records in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<LedgerEntry>,
}

impl Transcript {
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self, TranscriptError> {
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line_no = k + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(' ').collect();
            let [tag, b, i, hex_bytes] = fields[..] else {
                return Err(TranscriptError::Fields { line: line_no });
            };
            let slot = |s: &str| s.parse::<u64>().map_err(|_| TranscriptError::Slot { line: line_no });
            let bytes = hex::decode(hex_bytes).map_err(|_| TranscriptError::Hex { line: line_no })?;
            let record = Record::from_bytes(tag, &bytes)
                .map_err(|source| TranscriptError::Decode { line: line_no, source })?;
            entries.push(LedgerEntry {
                broadcast_slot: slot(b)?,
                inclusion_slot: slot(i)?,
                record,
            });
        }
        Ok(Self { entries })
    }

    /// Records whose tag is `tag`.
    pub fn count(&self, tag: &str) -> usize {
        self.entries.iter().filter(|e| e.record.tag() == tag).count()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{} {} {} {}",
                e.record.tag(),
                e.broadcast_slot,
                e.inclusion_slot,
                hex::encode(e.record.to_bytes())
            )?;
        }
        Ok(())
    }
}
