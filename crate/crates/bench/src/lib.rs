//! Fixtures shared by the benchmarks.

use rig_core::beacon::commit::{CommitSessionConfig, CommitTiming};
use rig_core::beacon::pvss::{PvssSessionConfig, PvssTiming};
use rig_core::beacon::SortRule;
use rig_core::crypto::{group_setup, vdf_setup};
use rig_core::sim::sim_keys;
use rig_core::{KeyPair, SessionConfig};

/// `n`-player commit-reveal session over a 64-bit group with a short VDF.
pub fn commit_session(n: usize) -> (SessionConfig, Vec<KeyPair>) {
    let group = group_setup(64, b"bench").expect("group");
    let keys = sim_keys(&group, n, b"bench");
    let config = CommitSessionConfig {
        session_id: 1,
        output_bits: 4,
        density: 1,
        roster: keys.iter().map(|k| k.public.clone()).collect(),
        deposit: 10,
        reward: 1,
        timing: CommitTiming { start: 0, t_commit: 3, t_reveal: 3, t_wait: 3, delta: 2, t_eval: 2 },
        group,
        vdf: vdf_setup(64, 100, b"bench").expect("vdf"),
        sort_rule: SortRule::KeyHash,
    };
    (SessionConfig::Commit(config), keys)
}

/// `n`-player PVSS session over a 64-bit group.
pub fn pvss_session(n: usize) -> (SessionConfig, Vec<KeyPair>) {
    let group = group_setup(64, b"bench").expect("group");
    let keys = sim_keys(&group, n, b"bench");
    let config = PvssSessionConfig {
        session_id: 1,
        output_bits: 4,
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
