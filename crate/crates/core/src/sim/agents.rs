//! Participant behaviours.
//!
//! An agent's choices depend only on its kind, its own RNG (seeded from the
//! run seed, session and roster index) and what it can see on the finalized
//! ledger. Every kind draws its value first and its nonce second from its
//! own RNG, so an honest agent and a withholder with the same seed commit to
//! the same value.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::beacon::ParticipantId;
use crate::crypto::encoding::Encoder;
use crate::crypto::{sha256, NONCE_LEN};

/// How an alliance picks its members' values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointRule {
    /// Every member submits the same shared random value.
    SharedRandom,
    /// Members' values sum to `target` mod `m`.
    TargetSum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentKind {
    /// Follows the protocol with a uniform value.
    Honest,
    /// Follows the protocol with a fixed value.
    Constant { value: u64 },
    /// Commit beacon: commits, never reveals. PVSS beacon: deals, never
    /// posts its shares.
    Withhold,
    /// Commit beacon: two different commits. PVSS beacon: a bundle with a
    /// broken proof.
    Equivocate,
    /// Coordinated value choice; otherwise honest.
    Alliance {
        members: Vec<ParticipantId>,
        rule: JointRule,
        #[serde(default)]
        target: u64,
    },
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Honest => "honest",
            AgentKind::Constant { .. } => "constant",
            AgentKind::Withhold => "withhold",
            AgentKind::Equivocate => "equivocate",
            AgentKind::Alliance { .. } => "alliance",
        }
    }

    /// Whether this agent posts the closing record of its session.
    pub fn completes(&self) -> bool {
        !matches!(self, AgentKind::Withhold)
    }
}

pub fn agent_rng(seed: u64, session_id: u64, index: ParticipantId) -> ChaCha20Rng {
    let mut enc = Encoder::new();
    enc.tag("rig/agent").u64(seed).u64(session_id).u64(u64::from(index));
    ChaCha20Rng::from_seed(sha256(enc.as_bytes()))
}

fn alliance_values(seed: u64, session_id: u64, members: &[ParticipantId], rule: JointRule, target: u64, m: u64) -> Vec<u64> {
    let mut enc = Encoder::new();
    enc.tag("rig/alliance").u64(seed).u64(session_id);
    for p in members {
        enc.u64(u64::from(*p));
    }
    let mut rng = ChaCha20Rng::from_seed(sha256(enc.as_bytes()));
    match rule {
        JointRule::SharedRandom => vec![rng.gen_range(0..m); members.len()],
        JointRule::TargetSum => {
            let mut out: Vec<u64> = (1..members.len()).map(|_| rng.gen_range(0..m)).collect();
            let partial = out.iter().fold(0u64, |acc, v| (acc + v) % m);
            out.push((target % m + m - partial) % m);
            out
        }
    }
}

/// One agent's private state for a session.
#[derive(Debug, Clone)]
pub struct Agent {
    pub kind: AgentKind,
    pub index: ParticipantId,
    pub value: u64,
    pub nonce: [u8; NONCE_LEN],
    pub rng: ChaCha20Rng,
}

impl Agent {
    pub fn new(kind: AgentKind, index: ParticipantId, seed: u64, session_id: u64, m: u64) -> Self {
        let mut rng = agent_rng(seed, session_id, index);
        let own: u64 = rng.gen_range(0..m);
        let value = match &kind {
            AgentKind::Constant { value } => value % m,
            AgentKind::Alliance { members, rule, target } => {
                let values = alliance_values(seed, session_id, members, *rule, *target, m);
                let pos = members.iter().position(|p| *p == index).expect("member of its alliance");
                values[pos]
            }
            _ => own,
        };
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        Self {
            kind,
            index,
            value,
            nonce,
            rng,
        }
    }
}
