//! The `rig` command line: game analysis, beacon runs, a PVSS walkthrough,
//! output statistics and the epoch simulation.
//!
//! Every command takes its randomness from `--seed` (or the scenario's
//! `seed`). Commands that write files also write `manifest.json` listing
//! their inputs and the SHA-256 of each artifact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use rig_core::beacon::BeaconResult;
use rig_core::crypto::{keygen, GroupParams};
use rig_core::game::{
    kernel_uniqueness_check, support_enumeration_ne, verify_uniform_is_ne, Equilibrium, GameError, GameParams,
    KernelReport, NeReport, PayoffMatrix,
};
use rig_core::pvss::{deal, decrypt_share, reconstruct, verify_deal, verify_share, PvssError};
use rig_core::sim::{
    chi_square_uniformity, replicate, run_epochs, run_session, ChiSquareReport, EpochRun, Scenario, SessionRun,
    SimError,
};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad parameters, scenario or inputs.
    #[error("{0}")]
    Validation(String),
    /// A run that started but could not finish.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let validation = match &e {
            SimError::Epoch { source, .. } => !matches!(**source, SimError::Beacon(_) | SimError::Ledger(_)),
            SimError::Beacon(_) | SimError::Ledger(_) => false,
            _ => true,
        };
        if validation {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rig", version, about = "Random Integer Generation game and random beacons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Payoff matrix of the (m, f) game and its equilibrium checks.
    GameAnalyze {
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 1)]
        f: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the beacon sessions described by a scenario file.
    BeaconRun {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Deal, verify and reconstruct on the 23-element fixture group.
    PvssDemo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chi-square uniformity and accounting totals over result files.
    Stats {
        /// Glob matching `result.json` files.
        results: String,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Proof-of-stake epoch loop driven by beacon outputs.
    Epochs {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Everything besides the command needed to rerun it, as given.
    pub arguments: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub out: String,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    /// Checks every artifact's digest against the file on disk.
    pub fn verify(&self, out: &Path) -> bool {
        self.artifacts.iter().all(|a| {
            fs::read(out.join(&a.path)).is_ok_and(|bytes| hex::encode(Sha256::digest(&bytes)) == a.sha256)
        })
    }
}

/// Collects files for one run and writes them with a manifest.
struct OutputDir {
    root: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputDir {
    fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, path: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((path.into(), contents.into()));
    }

    fn write(self, mut manifest: RunManifest) -> Result<RunManifest> {
        fs::create_dir_all(&self.root)?;
        for (path, bytes) in &self.files {
            let full = self.root.join(path);
            if let Some(parent) = full.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&full, bytes)?;
            manifest.artifacts.push(Artifact {
                path: path.clone(),
                sha256: hex::encode(Sha256::digest(bytes)),
                bytes: bytes.len() as u64,
            });
        }
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(self.root.join("manifest.json"), json)?;
        Ok(manifest)
    }
}

fn manifest(command: &str, arguments: &[(&str, String)], seed: Option<u64>, out: &Path) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        arguments: arguments.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        scenario_sha256: None,
        seed,
        out: out.display().to_string(),
        artifacts: Vec::new(),
    }
}

fn read_scenario(path: &Path) -> Result<(Scenario, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read scenario {}: {e}", path.display())))?;
    let scenario = Scenario::from_toml(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((scenario, hex::encode(Sha256::digest(text.as_bytes()))))
}

fn matrix_csv(matrix: &PayoffMatrix) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn rational_vec(v: &[num_rational::BigRational]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

/// What `game-analyze` found.
#[derive(Debug, Clone)]
pub struct GameAnalysis {
    pub m: u64,
    pub f: u64,
    pub matrix: PayoffMatrix,
    pub ne: NeReport,
    pub kernel: KernelReport,
    /// Present when `m <= 5`.
    pub equilibria: Option<Vec<Equilibrium>>,
    pub report: String,
}

impl GameAnalysis {
    /// Uniform play is an equilibrium and nothing else is.
    pub fn unique_uniform(&self) -> bool {
        let enumerated_ok = self.equilibria.as_ref().map_or(true, |eqs| {
            eqs.len() == 1 && eqs[0].row.is_uniform() && eqs[0].col.is_uniform()
        });
        self.ne.holds() && self.kernel.unique && enumerated_ok
    }
}

pub fn cmd_game_analyze(m: u64, f: u64, out: Option<&Path>) -> Result<GameAnalysis> {
    let params = GameParams::new(2, m, f)?;
    let matrix = params.rule().matrix()?;
    let ne = verify_uniform_is_ne(&matrix);
    let kernel = kernel_uniqueness_check(&matrix);
    let equilibria = if m <= 5 { Some(support_enumeration_ne(&matrix)?) } else { None };

    let mut r = String::new();
    let name = if f == 1 { format!("A^({m})") } else { format!("B^({m},{f})") };
    let density = num_rational::Ratio::new(2 * f, m);
    let _ = writeln!(r, "{name}: m = {m}, f = {f}, dense parameter 2f/m = {density}");
    let _ = writeln!(r, "payoff of the odd player (row) against the even player (column):");
    r.push_str(&matrix.to_string());
    let _ = writeln!(r, "uniform profile is a Nash equilibrium: {}", if ne.holds() { "yes" } else { "no" });
    let _ = writeln!(r, "  M·u = {}", rational_vec(&ne.matrix_times_uniform));
    let _ = writeln!(r, "  largest gain from a pure deviation: {}", ne.max_gain());
    let basis: Vec<String> = kernel.kernel_basis.iter().map(|v| rational_vec(v)).collect();
    let _ = writeln!(r, "kernel: rank {}, basis [{}], spanned by ones: {}", kernel.rank, basis.join(", "), if kernel.unique { "yes" } else { "no" });
    if let Some(eqs) = &equilibria {
        let _ = writeln!(r, "support enumeration: {} equilibrium(s)", eqs.len());
        for e in eqs {
            let _ = writeln!(r, "  row {} col {}", e.row, e.col);
        }
    }
    let ok = ne.holds() && kernel.unique && equilibria.as_ref().map_or(true, |eqs| eqs.len() == 1);
    let _ = writeln!(r, "{}", if ok { "unique NE: uniform" } else { "unique NE: not established" });

    let analysis = GameAnalysis { m, f, matrix, ne, kernel, equilibria, report: r };
    if let Some(out) = out {
        let mut dir = OutputDir::new(out);
        dir.add("report.txt", analysis.report.clone());
        dir.add("matrix.csv", matrix_csv(&analysis.matrix));
        dir.write(manifest("game-analyze", &[("m", m.to_string()), ("f", f.to_string())], None, out))?;
    }
    Ok(analysis)
}

/// Seed of replication `k` of a multi-session run.
pub fn session_seed(seed: u64, k: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"rig/session-seed");
    h.update(seed.to_be_bytes());
    h.update(k.to_be_bytes());
    u64::from_be_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

fn summary_line(result: &BeaconResult) -> String {
    let confiscated: Vec<String> = result
        .confiscations
        .iter()
        .map(|c| format!("{}:{:?}", c.participant, c.reason))
        .collect();
    format!(
        "v = {}, ṽ = {} ({} bits), players = {}, confiscations = [{}]",
        result.v,
        result.v_tilde,
        result.output_bits,
        result.ordering.len(),
        confiscated.join(", ")
    )
}

#[derive(Debug, Clone)]
pub struct BeaconRunOutput {
    pub runs: Vec<SessionRun>,
    pub manifest: RunManifest,
    pub summary: String,
}

pub fn cmd_beacon_run(scenario_path: &Path, seed: Option<u64>, out: &Path) -> Result<BeaconRunOutput> {
    let (scenario, digest) = read_scenario(scenario_path)?;
    let seed = seed.unwrap_or(scenario.seed);
    let (config, keys) = scenario.agent_session().map_err(|e| CliError::Validation(e.to_string()))?;
    let roster = config.roster().to_vec();
    let sessions = scenario.sessions.max(1);
    let ks: Vec<u64> = (0..sessions).collect();
    let runs = replicate(&ks, |k| {
        if sessions == 1 {
            run_session(&config, &keys, &scenario.agents, seed)
        } else {
            let c = config.with_roster(config.session_id() + k, roster.clone());
            run_session(&c, &keys, &scenario.agents, session_seed(seed, k))
        }
    });
    let runs: Vec<SessionRun> = runs.into_iter().collect::<std::result::Result<_, _>>()?;

    let mut dir = OutputDir::new(out);
    let mut summary = String::new();
    if sessions == 1 {
        dir.add("transcript.txt", runs[0].transcript.to_text());
        dir.add("result.json", runs[0].result.to_json());
        summary = summary_line(&runs[0].result);
    } else {
        let mut csv = String::from("session,seed,v,v_tilde,players,confiscations\n");
        for (k, run) in runs.iter().enumerate() {
            dir.add(format!("transcripts/{k:05}.txt"), run.transcript.to_text());
            dir.add(format!("results/{k:05}.json"), run.result.to_json());
            let r = &run.result;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                r.session_id,
                session_seed(seed, k as u64),
                r.v,
                r.v_tilde,
                r.ordering.len(),
                r.confiscations.len()
            );
        }
        dir.add("summary.csv", csv);
        let _ = write!(summary, "{sessions} sessions; first: {}", summary_line(&runs[0].result));
    }
    let mut m = manifest(
        "beacon-run",
        &[("scenario", scenario_path.display().to_string())],
        Some(seed),
        out,
    );
    m.scenario_sha256 = Some(digest);
    let manifest = dir.write(m)?;
    Ok(BeaconRunOutput { runs, manifest, summary })
}

pub fn cmd_pvss_demo(seed: u64, out: Option<&Path>) -> Result<String> {
    let runtime = |e: PvssError| CliError::Runtime(e.to_string());
    let params = GroupParams::fixture_23();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (n, t, m) = (4usize, 2usize, BigUint::from(4u32));
    let mut r = String::new();
    let _ = writeln!(r, "group: p = {}, q = {}, g = {}, G = {}", params.p, params.q, params.g, params.big_g);
    let keys: Vec<_> = (0..n).map(|i| keygen(&params, format!("demo-{seed}-{i}").as_bytes())).collect();
    let pubkeys: Vec<BigUint> = keys.iter().map(|k| k.public.clone()).collect();
    for (i, k) in keys.iter().enumerate() {
        let _ = writeln!(r, "participant {}: public key {}", i + 1, k.public);
    }
    let secret = BigUint::from(rng.gen_range(0u32..4));
    let bundle = deal(&params, seed, 0, &secret, &m, t, &pubkeys, &mut rng).map_err(runtime)?;
    let _ = writeln!(r, "dealt secret {secret} with t = {t} of n = {n}, m = {m}");
    let _ = writeln!(r, "  masked secret U = {}", bundle.masked_secret);
    let _ = writeln!(r, "  commitments {:?}", bundle.commitments.iter().map(ToString::to_string).collect::<Vec<_>>());
    let _ = writeln!(r, "  encrypted shares {:?}", bundle.encrypted_shares.iter().map(ToString::to_string).collect::<Vec<_>>());
    let _ = writeln!(r, "verify_deal: {}", verify_deal(&params, &bundle, &pubkeys));
    let mut shares = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        let s = decrypt_share(&params, &bundle, i + 1, k, &mut rng).map_err(runtime)?;
        let _ = writeln!(r, "share {}: {} (proof valid: {})", i + 1, s.share, verify_share(&params, &bundle, &k.public, &s));
        shares.push(s);
    }
    for pair in [[0usize, 1], [2, 3], [0, 3]] {
        let subset: Vec<_> = pair.iter().map(|&i| shares[i].clone()).collect();
        let v = reconstruct(&params, &bundle, &pubkeys, &subset).map_err(runtime)?;
        let _ = writeln!(r, "reconstruct from shares {:?}: {v}", pair.map(|i| i + 1));
    }
    match reconstruct(&params, &bundle, &pubkeys, &shares[..1]) {
        Err(e) => {
            let _ = writeln!(r, "reconstruct from share [1]: {e}");
        }
        Ok(v) => return Err(CliError::Runtime(format!("one share reconstructed {v}"))),
    }
    // Every other value of share 2, i.e. S·G^k for k = 1..q-1. A forged
    // proof passes with probability 1/q, which is visible on this group.
    let mut accepted = 0;
    let mut forged = shares[1].clone();
    let q = u64::try_from(&params.q).expect("fixture q is small");
    for _ in 1..q {
        forged.share = params.mul(&forged.share, &params.big_g);
        accepted += usize::from(verify_share(&params, &bundle, &pubkeys[1], &forged));
    }
    let _ = writeln!(r, "tampered versions of share 2 accepted: {accepted} of {} (soundness error 1/q = 1/{q})", q - 1);
    if let Some(out) = out {
        let mut dir = OutputDir::new(out);
        dir.add("demo.txt", r.clone());
        dir.write(manifest("pvss-demo", &[], Some(seed), out))?;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsOutput {
    pub files: usize,
    pub chi_square: ChiSquareReport,
    pub total_payoff: i64,
    pub total_reward: i64,
    pub total_confiscated: u64,
    pub table: String,
}

pub fn cmd_stats(pattern: &str, m: u64, alpha: f64, out: Option<&Path>) -> Result<StatsOutput> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| CliError::Validation(format!("bad glob {pattern:?}: {e}")))?
        .filter_map(|p| p.ok())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Validation(format!("no result files match {pattern:?}")));
    }
    let mut values = Vec::with_capacity(paths.len());
    let (mut payoff, mut reward, mut confiscated) = (0i64, 0i64, 0u64);
    for p in &paths {
        let text = fs::read_to_string(p)?;
        let result = BeaconResult::from_json(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
        values.push(result.v);
        payoff += result.total_payoff();
        reward += result.total_reward();
        confiscated += result.confiscations.iter().map(|c| c.amount).sum::<u64>();
    }
    let chi = chi_square_uniformity(&values, m, alpha).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut table = String::from("bucket,count\n");
    for (b, c) in chi.counts.iter().enumerate() {
        let _ = writeln!(table, "{b},{c}");
    }
    let _ = writeln!(table, "# files,{}", paths.len());
    let _ = writeln!(table, "# chi_square,{:.6}", chi.statistic);
    let _ = writeln!(table, "# critical,{:.6}", chi.critical);
    let _ = writeln!(table, "# df,{}", chi.degrees_of_freedom);
    let _ = writeln!(table, "# alpha,{}", chi.alpha);
    let _ = writeln!(table, "# uniform,{}", if chi.pass { "pass" } else { "FAIL" });
    let _ = writeln!(table, "# total_payoff,{payoff}");
    let _ = writeln!(table, "# total_reward,{reward}");
    let _ = writeln!(table, "# total_confiscated,{confiscated}");
    if let Some(out) = out {
        let mut dir = OutputDir::new(out);
        dir.add("stats.csv", table.clone());
        dir.write(manifest(
            "stats",
            &[("results", pattern.to_string()), ("m", m.to_string()), ("alpha", alpha.to_string())],
            None,
            out,
        ))?;
    }
    Ok(StatsOutput {
        files: paths.len(),
        chi_square: chi,
        total_payoff: payoff,
        total_reward: reward,
        total_confiscated: confiscated,
        table,
    })
}

#[derive(Debug, Clone)]
pub struct EpochsOutput {
    pub run: EpochRun,
    pub seeds_csv: String,
    pub frequencies_csv: String,
    pub manifest: RunManifest,
}

pub fn cmd_epochs(scenario_path: &Path, seed: Option<u64>, out: &Path) -> Result<EpochsOutput> {
    let (scenario, digest) = read_scenario(scenario_path)?;
    let seed = seed.unwrap_or(scenario.seed);
    let config = scenario.epoch_config().map_err(|e| CliError::Validation(e.to_string()))?;
    let (template, _) = scenario.session(0).map_err(|e| CliError::Validation(e.to_string()))?;
    let run = run_epochs(&template, &config, seed)?;

    let mut seeds_csv = String::from("epoch,seed,offset,roster,v_tilde\n");
    for e in &run.epochs {
        let roster: Vec<String> = e.roster.iter().map(ToString::to_string).collect();
        let _ = writeln!(seeds_csv, "{},{},{},{},{}", e.epoch, e.seed, e.offset, roster.join(" "), e.v_tilde);
    }
    let total_stake: u64 = config.stakes.iter().sum();
    let total_seats: u64 = run.seat_counts.iter().sum();
    let mut frequencies_csv = String::from("party,stake,stake_share,seats,frequency\n");
    for (p, (&stake, &seats)) in config.stakes.iter().zip(&run.seat_counts).enumerate() {
        let _ = writeln!(
            frequencies_csv,
            "{p},{stake},{:.6},{seats},{:.6}",
            stake as f64 / total_stake as f64,
            seats as f64 / total_seats as f64
        );
    }
    let mut dir = OutputDir::new(out);
    dir.add("seeds.csv", seeds_csv.clone());
    dir.add("frequencies.csv", frequencies_csv.clone());
    let mut m = manifest("epochs", &[("scenario", scenario_path.display().to_string())], Some(seed), out);
    m.scenario_sha256 = Some(digest);
    let manifest = dir.write(m)?;
    Ok(EpochsOutput { run, seeds_csv, frequencies_csv, manifest })
}

/// Runs a parsed command and returns what to print.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::GameAnalyze { m, f, out } => Ok(cmd_game_analyze(m, f, out.as_deref())?.report),
        Command::BeaconRun { scenario, seed, out } => {
            let o = cmd_beacon_run(&scenario, seed, &out)?;
            Ok(format!("{}\nwrote {}\n", o.summary, out.display()))
        }
        Command::PvssDemo { seed, out } => cmd_pvss_demo(seed, out.as_deref()),
        Command::Stats { results, m, alpha, out } => Ok(cmd_stats(&results, m, alpha, out.as_deref())?.table),
        Command::Epochs { scenario, seed, out } => {
            let o = cmd_epochs(&scenario, seed, &out)?;
            Ok(format!("{}{}", o.seeds_csv, o.frequencies_csv))
        }
    }
}
