use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use rig_bench::{commit_session, pvss_session};
use rig_core::crypto::{group_setup, keygen, vdf_eval, vdf_setup, vdf_verify};
use rig_core::game::PayoffRule;
use rig_core::pvss::{deal, verify_deal};
use rig_core::sim::{run_session, AgentKind};

fn vdf(c: &mut Criterion) {
    let params = vdf_setup(256, 10_000, b"bench").unwrap();
    let x = BigUint::from(12345u32);
    let out = vdf_eval(&params, &x);
    let mut g = c.benchmark_group("vdf_256_t10000");
    g.sample_size(10);
    g.bench_function("eval", |b| b.iter(|| vdf_eval(&params, black_box(&x))));
    g.bench_function("verify", |b| b.iter(|| vdf_verify(&params, black_box(&x), &out).unwrap()));
    g.finish();
}

fn pvss(c: &mut Criterion) {
    let params = group_setup(512, b"bench").unwrap();
    let modulus = BigUint::from(1u32 << 16);
    let secret = BigUint::from(777u32);
    let mut g = c.benchmark_group("pvss_512");
    for n in [4usize, 8, 16] {
        let keys: Vec<BigUint> = (0..n).map(|i| keygen(&params, &[i as u8]).public).collect();
        let t = n.div_ceil(2);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let bundle = deal(&params, 1, 0, &secret, &modulus, t, &keys, &mut rng).unwrap();
        g.bench_with_input(BenchmarkId::new("deal", n), &n, |b, _| {
            b.iter(|| deal(&params, 1, 0, &secret, &modulus, t, &keys, &mut rng).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("verify_deal", n), &n, |b, _| {
            b.iter(|| verify_deal(&params, black_box(&bundle), &keys))
        });
    }
    g.finish();
}

fn game(c: &mut Criterion) {
    c.bench_function("dense_matrix_m1024", |b| b.iter(|| PayoffRule::new(1024, 339).unwrap().matrix().unwrap()));
}

fn sessions(c: &mut Criterion) {
    let mut g = c.benchmark_group("session");
    g.sample_size(10);
    for n in [4usize, 8, 16] {
        let (commit, keys) = commit_session(n);
        let agents = vec![AgentKind::Honest; n];
        g.bench_with_input(BenchmarkId::new("commit", n), &n, |b, _| {
            b.iter(|| run_session(&commit, &keys, &agents, 1).unwrap())
        });
        let (pvss, keys) = pvss_session(n);
        g.bench_with_input(BenchmarkId::new("pvss", n), &n, |b, _| {
            b.iter(|| run_session(&pvss, &keys, &agents, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, vdf, pvss, game, sessions);
criterion_main!(benches);
