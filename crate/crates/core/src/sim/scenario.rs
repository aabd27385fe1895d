//! Scenario files (TOML).
//!
//! ```toml
//! variant = "commit"        # or "pvss"
//! seed = 7                  # default run seed
//! session_id = 1
//! output_bits = 2           # b; m = 2^(2b)
//! density = 1               # f, odd and coprime to m
//! deposit = 10
//! reward = 1
//! sort_rule = "key_hash"    # "ledger_order", "previous_output:<n>"
//! sessions = 1              # replications for beacon-run
//!
//! [timing]                  # commit: t_commit t_reveal t_wait t_eval
//! delta = 2                 # pvss:   t_prepare t_distribute t_reconstruct
//! t_commit = 3
//! t_reveal = 3
//! t_wait = 2
//! t_eval = 1
//!
//! [crypto]                  # all optional
//! group_bits = 64
//! vdf_bits = 64
//! vdf_steps = 100
//!
//! [[agents]]
//! kind = "honest"           # constant (value), withhold, equivocate,
//!                           # alliance (members, rule, target)
//!
//! [epochs]                  # only for the epochs command
//! count = 100
//! stakes = [1, 1, 2]
//! seats = 4
//! ```
//!
//! Unknown keys are errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{sim_keys, AgentKind, EpochConfig, SessionConfig};
use crate::beacon::commit::{CommitSessionConfig, CommitTiming};
use crate::beacon::pvss::{PvssSessionConfig, PvssTiming};
use crate::beacon::SortRule;
use crate::crypto::{group_setup, vdf_setup, KeyPair};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario: {0}")]
    Parse(String),
    #[error("scenario: missing field `{0}`")]
    Missing(&'static str),
    #[error("scenario: field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Commit,
    Pvss,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    #[serde(default)]
    pub start: u64,
    pub delta: u64,
    pub t_commit: Option<u64>,
    pub t_reveal: Option<u64>,
    pub t_wait: Option<u64>,
    pub t_eval: Option<u64>,
    pub t_prepare: Option<u64>,
    pub t_distribute: Option<u64>,
    pub t_reconstruct: Option<u64>,
}

fn default_group_bits() -> u64 {
    64
}
fn default_vdf_bits() -> u64 {
    64
}
fn default_vdf_steps() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CryptoSpec {
    #[serde(default = "default_group_bits")]
    pub group_bits: u64,
    #[serde(default = "default_vdf_bits")]
    pub vdf_bits: u64,
    #[serde(default = "default_vdf_steps")]
    pub vdf_steps: u64,
}

impl Default for CryptoSpec {
    fn default() -> Self {
        Self {
            group_bits: default_group_bits(),
            vdf_bits: default_vdf_bits(),
            vdf_steps: default_vdf_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochSpec {
    pub count: u64,
    pub stakes: Vec<u64>,
    pub seats: usize,
    #[serde(default)]
    pub initial_seed: u64,
}

fn one() -> u64 {
    1
}
fn default_sort_rule() -> String {
    "key_hash".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub variant: VariantName,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub session_id: u64,
    pub output_bits: u32,
    #[serde(default = "one")]
    pub density: u64,
    pub deposit: u64,
    pub reward: u64,
    #[serde(default = "default_sort_rule")]
    pub sort_rule: String,
    #[serde(default = "one")]
    pub sessions: u64,
    pub timing: TimingSpec,
    #[serde(default)]
    pub crypto: CryptoSpec,
    #[serde(default)]
    pub agents: Vec<AgentKind>,
    #[serde(default)]
    pub epochs: Option<EpochSpec>,
}

fn need(v: Option<u64>, field: &'static str) -> Result<u64, ScenarioError> {
    v.ok_or(ScenarioError::Missing(field))
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.message().to_string()))
    }

    pub fn sort_rule(&self) -> Result<SortRule, ScenarioError> {
        self.sort_rule
            .parse()
            .map_err(|reason| ScenarioError::Invalid { field: "sort_rule", reason })
    }

    /// Session parameters for a roster of `n` simulated parties, plus their
    /// keys. Parameters are not validated here; running the session does
    /// that.
    pub fn session(&self, n: usize) -> Result<(SessionConfig, Vec<KeyPair>), ScenarioError> {
        let sort_rule = self.sort_rule()?;
        let crypto_err = |field: &'static str| move |e: crate::crypto::CryptoError| ScenarioError::Invalid {
            field,
            reason: e.to_string(),
        };
        let group = group_setup(self.crypto.group_bits, b"rig-sim").map_err(crypto_err("crypto.group_bits"))?;
        let keys = sim_keys(&group, n, b"scenario");
        let roster = keys.iter().map(|k| k.public.clone()).collect();
        let t = &self.timing;
        let config = match self.variant {
            VariantName::Commit => {
                let vdf = vdf_setup(self.crypto.vdf_bits, self.crypto.vdf_steps, b"rig-sim")
                    .map_err(crypto_err("crypto.vdf_bits"))?;
                SessionConfig::Commit(CommitSessionConfig {
                    session_id: self.session_id,
                    output_bits: self.output_bits,
                    density: self.density,
                    roster,
                    deposit: self.deposit,
                    reward: self.reward,
                    timing: CommitTiming {
                        start: t.start,
                        t_commit: need(t.t_commit, "timing.t_commit")?,
                        t_reveal: need(t.t_reveal, "timing.t_reveal")?,
                        t_wait: need(t.t_wait, "timing.t_wait")?,
                        delta: t.delta,
                        t_eval: need(t.t_eval, "timing.t_eval")?,
                    },
                    group,
                    vdf,
                    sort_rule,
                })
            }
            VariantName::Pvss => SessionConfig::Pvss(PvssSessionConfig {
                session_id: self.session_id,
                output_bits: self.output_bits,
                density: self.density,
                roster,
                deposit: self.deposit,
                reward: self.reward,
                timing: PvssTiming {
                    start: t.start,
                    t_prepare: need(t.t_prepare, "timing.t_prepare")?,
                    t_distribute: need(t.t_distribute, "timing.t_distribute")?,
                    t_reconstruct: need(t.t_reconstruct, "timing.t_reconstruct")?,
                    delta: t.delta,
                },
                group,
                sort_rule,
            }),
        };
        Ok((config, keys))
    }

    /// The session with one party per listed agent.
    pub fn agent_session(&self) -> Result<(SessionConfig, Vec<KeyPair>), ScenarioError> {
        if self.agents.is_empty() {
            return Err(ScenarioError::Missing("agents"));
        }
        self.session(self.agents.len())
    }

    pub fn epoch_config(&self) -> Result<EpochConfig, ScenarioError> {
        let spec = self.epochs.as_ref().ok_or(ScenarioError::Missing("epochs"))?;
        if spec.stakes.is_empty() || spec.stakes.iter().all(|&s| s == 0) {
            return Err(ScenarioError::Invalid {
                field: "epochs.stakes",
                reason: "no stake".to_string(),
            });
        }
        if spec.count == 0 {
            return Err(ScenarioError::Invalid {
                field: "epochs.count",
                reason: "must be at least 1".to_string(),
            });
        }
        if spec.seats < 2 {
            return Err(ScenarioError::Invalid {
                field: "epochs.seats",
                reason: "must be at least 2".to_string(),
            });
        }
        Ok(EpochConfig {
            epochs: spec.count,
            stakes: spec.stakes.clone(),
            seats: spec.seats,
            initial_seed: spec.initial_seed,
            selector_key: b"rig-epochs".to_vec(),
        })
    }
}
