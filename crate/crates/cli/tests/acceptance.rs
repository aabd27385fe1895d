//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use rig_cli::{cmd_beacon_run, cmd_epochs, cmd_game_analyze, CliError};
use rig_core::beacon::commit::{CommitSessionConfig, CommitTiming};
use rig_core::beacon::pvss::{PvssSessionConfig, PvssTiming};
use rig_core::beacon::{ConfigError, ConfiscationReason, SortRule, TimingViolation};
use rig_core::crypto::{group_setup, keygen, vdf_eval, vdf_setup, vdf_verify, GroupParams, KeyPair};
use rig_core::game::{
    alliance_total_utility, kernel_uniqueness_check, parallel_counterexample, support_enumeration_ne,
    verify_uniform_is_ne, GameParams, MixedStrategy, PayoffRule,
};
use rig_core::pvss::{deal, decrypt_share, reconstruct, verify_deal, PvssError};
use rig_core::sim::{
    chi_square_uniformity, replicate, run_epochs, run_session, sim_keys, validate_timing, AgentKind, EpochConfig,
    SessionConfig, SimError,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:.1?}, limit {limit:?}", start.elapsed()))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn valid_densities(m: u64) -> Vec<u64> {
    (1..=m / 2).filter(|f| f.gcd(&m) == 1).collect()
}

fn commit_config(n: usize, b: u32, group: GroupParams, vdf_bits: u64, steps: u64) -> (SessionConfig, Vec<KeyPair>) {
    let keys = sim_keys(&group, n, b"acceptance");
    let config = CommitSessionConfig {
        session_id: 1,
        output_bits: b,
        density: 1,
        roster: keys.iter().map(|k| k.public.clone()).collect(),
        deposit: 10,
        reward: 1,
        timing: CommitTiming { start: 0, t_commit: 3, t_reveal: 3, t_wait: 3, delta: 2, t_eval: 2 },
        group,
        vdf: vdf_setup(vdf_bits, steps, b"acceptance").unwrap(),
        sort_rule: SortRule::KeyHash,
    };
    (SessionConfig::Commit(config), keys)
}

fn pvss_config(n: usize, group: GroupParams) -> (SessionConfig, Vec<KeyPair>) {
    let keys = sim_keys(&group, n, b"acceptance");
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

fn criterion_1() -> Check {
    let start = Instant::now();
    let published: [[i8; 8]; 8] = [
        [1, 1, 1, 0, 0, -1, -1, -1],
        [-1, 1, 1, 1, 0, 0, -1, -1],
        [-1, -1, 1, 1, 1, 0, 0, -1],
        [-1, -1, -1, 1, 1, 1, 0, 0],
        [0, -1, -1, -1, 1, 1, 1, 0],
        [0, 0, -1, -1, -1, 1, 1, 1],
        [1, 0, 0, -1, -1, -1, 1, 1],
        [1, 1, 0, 0, -1, -1, -1, 1],
    ];
    let a = cmd_game_analyze(8, 3, None).map_err(|e| e.to_string())?;
    within(Duration::from_secs(1), start)?;
    let rows = a.matrix.rows();
    for (i, row) in published.iter().enumerate() {
        ensure(rows[i] == row.to_vec(), || format!("row {i}: {:?} != {:?}", rows[i], row))?;
    }
    ensure(a.report.contains("unique NE: uniform"), || "report lacks the verdict".into())?;
    ensure(a.report.contains("2f/m = 3/4"), || "report lacks the dense parameter".into())?;
    Ok("64/64 entries match".into())
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut games = 0;
    for m in 2..=32u64 {
        for f in valid_densities(m) {
            let matrix = PayoffRule::new(m, f).unwrap().matrix().unwrap();
            let ne = verify_uniform_is_ne(&matrix);
            ensure(ne.matrix_times_uniform.iter().all(Zero::is_zero), || format!("M·u != 0 at ({m},{f})"))?;
            ensure(ne.holds(), || format!("uniform not an NE at ({m},{f})"))?;
            let k = kernel_uniqueness_check(&matrix);
            ensure(k.unique && k.rank as u64 == m - 1, || format!("kernel check fails at ({m},{f}): rank {}", k.rank))?;
            if m <= 5 {
                let eqs = support_enumeration_ne(&matrix).unwrap();
                ensure(eqs.len() == 1 && eqs[0].row.is_uniform() && eqs[0].col.is_uniform(), || {
                    format!("support enumeration at ({m},{f}) found {} equilibria", eqs.len())
                })?;
            }
            games += 1;
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{games} (m, f) games, m = 2..=32"))
}

fn random_strategy(rng: &mut ChaCha20Rng, m: usize) -> MixedStrategy {
    loop {
        let w: Vec<u64> = (0..m).map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..20) }).collect();
        if let Ok(s) = MixedStrategy::from_weights(&w) {
            return s;
        }
    }
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for trial in 0..1000 {
        let n = 2 * rng.gen_range(1..=4usize);
        let m = rng.gen_range(2..=8u64);
        let fs = valid_densities(m);
        let f = fs[rng.gen_range(0..fs.len())];
        let params = GameParams::new(n, m, f).unwrap();
        let mut alliance = BTreeMap::new();
        while alliance.is_empty() {
            for i in 1..=n {
                if rng.gen_bool(0.5) {
                    alliance.insert(i, random_strategy(&mut rng, m as usize));
                }
            }
        }
        let total = alliance_total_utility(&alliance, &params).unwrap();
        ensure(total.is_zero(), || format!("trial {trial}: n={n} m={m} f={f} total {total}"))?;
    }
    within(Duration::from_secs(30), start)?;
    Ok("1000 alliances, all totals exactly 0".into())
}

fn criterion_4() -> Check {
    let report = parallel_counterexample(3).map_err(|e| e.to_string())?;
    let expected: BTreeMap<u64, BigRational> = [(0, rat(1, 2)), (7, rat(1, 2))].into_iter().collect();
    ensure(report.distribution == expected, || format!("distribution {:?}", report.distribution))?;
    ensure(report.is_equilibrium, || "not flagged as an equilibrium".into())?;
    ensure(!report.is_uniform, || "flagged as uniform".into())?;
    Ok("{0: 1/2, 7: 1/2}, equilibrium of the parallel composition".into())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|mask| mask.count_ones() as usize == k).map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect()).collect()
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let params = group_setup(512, b"acceptance-pvss").unwrap();
    let modulus = BigUint::from(1u32 << 16);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (mut ok, mut refused) = (0, 0);
    for n in 1..=6usize {
        let keys: Vec<KeyPair> = (0..n).map(|i| keygen(&params, format!("acc-{n}-{i}").as_bytes())).collect();
        let pubkeys: Vec<BigUint> = keys.iter().map(|k| k.public.clone()).collect();
        for t in 1..=n {
            let secret = BigUint::from(rng.gen_range(0u32..1 << 16));
            let bundle = deal(&params, 1, 0, &secret, &modulus, t, &pubkeys, &mut rng).unwrap();
            ensure(verify_deal(&params, &bundle, &pubkeys), || format!("deal n={n} t={t} does not verify"))?;
            let shares: Vec<_> = (0..n)
                .map(|i| decrypt_share(&params, &bundle, i + 1, &keys[i], &mut rng).unwrap())
                .collect();
            for subset in subsets(n, t) {
                let picked: Vec<_> = subset.iter().map(|&i| shares[i].clone()).collect();
                let got = reconstruct(&params, &bundle, &pubkeys, &picked).map_err(|e| e.to_string())?;
                ensure(got == secret, || format!("n={n} t={t} {subset:?}: {got} != {secret}"))?;
                ok += 1;
            }
            for subset in subsets(n, t - 1) {
                let picked: Vec<_> = subset.iter().map(|&i| shares[i].clone()).collect();
                let err = reconstruct(&params, &bundle, &pubkeys, &picked);
                ensure(matches!(err, Err(PvssError::InsufficientShares { .. })), || {
                    format!("n={n} t={t} {subset:?}: {err:?}")
                })?;
                refused += 1;
            }
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{ok} t-subsets reconstruct, {refused} (t-1)-subsets refused, 512-bit p"))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let group = group_setup(256, b"acceptance-withhold").unwrap();
    let (config, keys) = commit_config(4, 2, group, 256, 10_000);
    let seeds: Vec<u64> = (0..100).collect();
    let outcomes = replicate(&seeds, |seed| -> Result<(), String> {
        let honest = run_session(&config, &keys, &vec![AgentKind::Honest; 4], seed).map_err(|e| e.to_string())?;
        let mut agents = vec![AgentKind::Honest; 4];
        let w = (seed % 4) as usize;
        agents[w] = AgentKind::Withhold;
        let run = run_session(&config, &keys, &agents, seed).map_err(|e| e.to_string())?;
        ensure(run.result.v == honest.result.v, || format!("seed {seed}: v {} vs {}", run.result.v, honest.result.v))?;
        ensure(run.result.v_tilde == honest.result.v_tilde, || format!("seed {seed}: ṽ differs"))?;
        let c = &run.result.confiscations;
        ensure(c.len() == 1 && c[0].participant as usize == w && c[0].reason == ConfiscationReason::Withheld, || {
            format!("seed {seed}: confiscations {c:?}")
        })?;
        ensure(honest.result.confiscations.is_empty(), || format!("seed {seed}: honest run confiscated"))?;
        Ok(())
    });
    for o in outcomes {
        o?;
    }
    within(Duration::from_secs(300), start)?;
    Ok("100/100 pairs: identical v, one confiscation each, t = 10^4".into())
}

fn criterion_7() -> Check {
    let params = vdf_setup(256, 10_000, b"acceptance-vdf").unwrap();
    let x = BigUint::from(0xdead_beefu64);
    let t0 = Instant::now();
    let out = vdf_eval(&params, &x);
    let eval = t0.elapsed();
    let t1 = Instant::now();
    let valid = vdf_verify(&params, &x, &out).unwrap();
    let verify = t1.elapsed();
    ensure(valid, || "honest output rejected".into())?;
    let ratio = eval.as_secs_f64() / verify.as_secs_f64();
    ensure(ratio >= 10.0, || format!("Eval/Verify ratio {ratio:.1}"))?;

    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let bits = params.modulus().bits();
    for trial in 0..1000 {
        let mut x2 = x.clone();
        let mut out2 = out.clone();
        let bit = rng.gen_range(0..bits);
        let target = rng.gen_range(0..out.proof.len() + 2);
        let value = match target {
            0 => &mut x2,
            1 => &mut out2.y,
            k => &mut out2.proof[k - 2],
        };
        value.set_bit(bit, !value.bit(bit));
        let accepted = matches!(vdf_verify(&params, &x2, &out2), Ok(true));
        ensure(!accepted, || format!("tamper {trial} (target {target}, bit {bit}) accepted"))?;
    }
    Ok(format!("Eval {eval:.0?} / Verify {verify:.1?} = {ratio:.0}x; 1000/1000 tampers rejected"))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let group = group_setup(64, b"acceptance-stats").unwrap();
    let (config, keys) = commit_config(4, 2, group, 64, 10);
    let seeds: Vec<u64> = (0..10_000).collect();
    let sample = |agents: Vec<AgentKind>| -> Result<Vec<u64>, String> {
        replicate(&seeds, |s| run_session(&config, &keys, &agents, s).map(|r| r.result.v))
            .into_iter()
            .collect::<Result<Vec<_>, SimError>>()
            .map_err(|e| e.to_string())
    };
    let honest = chi_square_uniformity(&sample(vec![AgentKind::Honest; 4])?, 16, 0.01).unwrap();
    // Standard-table upper 1% point for 15 degrees of freedom.
    ensure((honest.critical - 30.578).abs() < 1e-3, || format!("critical value {}", honest.critical))?;
    ensure(honest.pass, || format!("honest: χ² = {:.2}", honest.statistic))?;
    let zero = AgentKind::Constant { value: 0 };
    let one_reliable = chi_square_uniformity(
        &sample(vec![AgentKind::Honest, zero.clone(), zero.clone(), zero.clone()])?,
        16,
        0.01,
    )
    .unwrap();
    ensure(one_reliable.pass, || format!("one reliable: χ² = {:.2}", one_reliable.statistic))?;
    let none = chi_square_uniformity(&sample(vec![zero; 4])?, 16, 0.01).unwrap();
    ensure(!none.pass, || "all-constant control passed".into())?;
    Ok(format!(
        "χ²(15) critical {:.3}: honest {:.2} pass, one reliable {:.2} pass, all constant {:.0} fail ({:.0?})",
        honest.critical,
        honest.statistic,
        one_reliable.statistic,
        none.statistic,
        start.elapsed()
    ))
}

fn commit_timing_oracle(t: &CommitTiming) -> Vec<&'static str> {
    let mut v = Vec::new();
    if t.delta < 1 {
        v.push("Δ ≥ 1");
    }
    if !(t.t_commit > t.delta) {
        v.push("T_commit > Δ");
    }
    if !(t.t_reveal > t.delta) {
        v.push("T_reveal > Δ");
    }
    if !(t.t_wait > t.t_eval) {
        v.push("T_wait > T_Eval");
    }
    v
}

fn pvss_timing_oracle(t: &PvssTiming) -> Vec<&'static str> {
    let mut v = Vec::new();
    if t.delta < 1 {
        v.push("Δ ≥ 1");
    }
    for (name, x) in [("T_prepare > Δ", t.t_prepare), ("T_distribute > Δ", t.t_distribute), ("T_reconstruct > Δ", t.t_reconstruct)] {
        if !(x > t.delta) {
            v.push(name);
        }
    }
    v
}

fn names(v: &[TimingViolation]) -> Vec<&'static str> {
    v.iter().map(|x| x.constraint()).collect()
}

fn criterion_9() -> Check {
    let group = group_setup(64, b"acceptance-timing").unwrap();
    let (commit, keys) = commit_config(2, 2, group.clone(), 64, 10);
    let (pvss, pkeys) = pvss_config(2, group);
    let near = |x: u64| [x.saturating_sub(1), x, x + 1];
    let mut cases = 0;
    let mut rejected = 0;
    for delta in 0..=3u64 {
        for t_eval in 1..=3u64 {
            for t_commit in near(delta) {
                for t_reveal in near(delta) {
                    for t_wait in near(t_eval) {
                        let timing = CommitTiming { start: 0, t_commit, t_reveal, t_wait, delta, t_eval };
                        let mut c = commit.clone();
                        if let SessionConfig::Commit(cc) = &mut c {
                            cc.timing = timing;
                        }
                        let expected = commit_timing_oracle(&timing);
                        let got = validate_timing(&c);
                        ensure(names(&got) == expected, || format!("{timing:?}: {:?} vs {expected:?}", names(&got)))?;
                        let run = run_session(&c, &keys, &vec![AgentKind::Honest; 2], 0);
                        if expected.is_empty() {
                            ensure(run.is_ok(), || format!("{timing:?} rejected: {:?}", run.err()))?;
                        } else {
                            ensure(run == Err(SimError::Config(ConfigError::Timing(got.clone()))), || format!("{timing:?} ran"))?;
                            rejected += 1;
                        }
                        cases += 1;
                    }
                }
            }
        }
        for a in near(delta) {
            for b in near(delta) {
                for c in near(delta) {
                    let timing = PvssTiming { start: 0, t_prepare: a, t_distribute: b, t_reconstruct: c, delta };
                    let mut p = pvss.clone();
                    if let SessionConfig::Pvss(pc) = &mut p {
                        pc.timing = timing;
                    }
                    let expected = pvss_timing_oracle(&timing);
                    let got = validate_timing(&p);
                    ensure(names(&got) == expected, || format!("{timing:?}: {:?} vs {expected:?}", names(&got)))?;
                    let run = run_session(&p, &pkeys, &vec![AgentKind::Honest; 2], 0);
                    ensure(run.is_ok() == expected.is_empty(), || format!("{timing:?}: {:?}", run.err()))?;
                    if !expected.is_empty() {
                        rejected += 1;
                    }
                    cases += 1;
                }
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/bad-timing.toml");
    match cmd_beacon_run(&scenario, None, dir.path()) {
        Err(e @ CliError::Validation(_)) => {
            ensure(e.to_string().contains("T_commit > Δ"), || format!("message {e}"))?;
            ensure(e.exit_code() == 2, || "wrong exit code".into())?;
        }
        other => return Err(format!("bad-timing scenario: {:?}", other.map(|o| o.summary))),
    }
    Ok(format!("{cases} boundary configurations, {rejected} rejected with named constraints"))
}

fn criterion_10() -> Check {
    let group = group_setup(64, b"acceptance-accounting").unwrap();
    let mut sizes = Vec::new();
    for n in [4usize, 8, 16] {
        let (config, keys) = pvss_config(n, group.clone());
        let run = run_session(&config, &keys, &vec![AgentKind::Honest; n], 10).map_err(|e| e.to_string())?;
        for p in 0..n as u32 {
            let tags: Vec<&str> = run
                .transcript
                .entries
                .iter()
                .filter(|e| e.record.sender() == p && e.record.tag() != "prepare")
                .map(|e| e.record.tag())
                .collect();
            ensure(tags == ["distribute", "reconstruct"], || format!("n={n} participant {p}: {tags:?}"))?;
        }
        ensure(run.transcript.count("prepare") == n, || format!("n={n}: prepare count"))?;
        let dist: Vec<usize> = run
            .transcript
            .entries
            .iter()
            .filter(|e| e.record.tag() == "distribute")
            .map(|e| e.record.to_bytes().len())
            .collect();
        let (lo, hi) = (*dist.iter().min().unwrap(), *dist.iter().max().unwrap());
        // Group elements are length-prefixed, so sizes vary by a few bytes.
        ensure(hi * 20 <= lo * 21, || format!("n={n}: uneven sizes {dist:?}"))?;
        sizes.push((n, dist.iter().sum::<usize>() / n));
    }
    for w in sizes.windows(2) {
        let growth = w[1].1 as f64 / w[0].1 as f64;
        ensure((1.5..=2.5).contains(&growth), || format!("size {:?} -> {:?}: ×{growth:.2}", w[0], w[1]))?;
    }
    Ok(format!("2 records per participant (plus one prepare each); mean distribute bytes by n: {sizes:?}"))
}

fn criterion_11() -> Check {
    let group = group_setup(64, b"acceptance-determinism").unwrap();
    let (commit, keys) = commit_config(5, 2, group.clone(), 64, 50);
    let agents = vec![AgentKind::Honest, AgentKind::Withhold, AgentKind::Equivocate, AgentKind::Constant { value: 3 }, AgentKind::Honest];
    let a = run_session(&commit, &keys, &agents, 99).map_err(|e| e.to_string())?;
    let b = run_session(&commit, &keys, &agents, 99).map_err(|e| e.to_string())?;
    ensure(a.transcript.to_text() == b.transcript.to_text() && a.result.to_json() == b.result.to_json(), || "commit run differs".into())?;
    let (pvss, pkeys) = pvss_config(5, group);
    let agents = vec![AgentKind::Honest, AgentKind::Withhold, AgentKind::Honest, AgentKind::Equivocate, AgentKind::Honest];
    let a = run_session(&pvss, &pkeys, &agents, 7).map_err(|e| e.to_string())?;
    let b = run_session(&pvss, &pkeys, &agents, 7).map_err(|e| e.to_string())?;
    ensure(a.transcript.to_text() == b.transcript.to_text() && a.result.to_json() == b.result.to_json(), || "pvss run differs".into())?;

    let epochs = EpochConfig { epochs: 20, stakes: vec![1, 1, 2], seats: 4, initial_seed: 3, selector_key: b"k".to_vec() };
    ensure(run_epochs(&commit, &epochs, 5) == run_epochs(&commit, &epochs, 5), || "epoch runs differ".into())?;

    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for name in ["withholder-commit.toml", "honest-pvss.toml"] {
        let x = cmd_beacon_run(&scenarios.join(name), Some(42), d1.path()).map_err(|e| e.to_string())?;
        let y = cmd_beacon_run(&scenarios.join(name), Some(42), d2.path()).map_err(|e| e.to_string())?;
        ensure(x.manifest.artifacts == y.manifest.artifacts, || format!("{name}: artifacts differ"))?;
        for file in ["transcript.txt", "result.json"] {
            let p = std::fs::read(d1.path().join(file)).unwrap();
            let q = std::fs::read(d2.path().join(file)).unwrap();
            ensure(p == q, || format!("{name}: {file} differs"))?;
        }
    }
    let x = cmd_epochs(&scenarios.join("epochs.toml"), Some(1), d1.path()).map_err(|e| e.to_string())?;
    let y = cmd_epochs(&scenarios.join("epochs.toml"), Some(1), d2.path()).map_err(|e| e.to_string())?;
    ensure(x.manifest.artifacts == y.manifest.artifacts, || "epochs artifacts differ".into())?;
    Ok("commit, PVSS, epoch and CLI reruns byte-identical".into())
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 11] = [
        (1, "matrix fidelity B^(8,3)", criterion_1),
        (2, "uniform equilibrium, m in [2, 32]", criterion_2),
        (3, "alliance resistance", criterion_3),
        (4, "parallel composition counterexample", criterion_4),
        (5, "PVSS threshold behaviour", criterion_5),
        (6, "withholding immunity", criterion_6),
        (7, "VDF asymmetry and tamper rejection", criterion_7),
        (8, "statistical uniformity", criterion_8),
        (9, "timing constraints", criterion_9),
        (10, "message accounting", criterion_10),
        (11, "determinism", criterion_11),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {title}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {title}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
