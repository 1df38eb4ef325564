//! `chainid`: simulate chains, partition them, compare them and run the
//! single-trajectory identity test. Reports are JSON documents carrying a
//! manifest of the run; state indices are 1-based.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chainid_core::identity::{self, ComponentTrace, TestConfig};
use chainid_core::iid_test::{self, TestVerdict};
use chainid_core::partition::{self, Certificates, PartitionOptions};
use chainid_core::{chain, io, metrics, sampling, ChainError, Constants, Decision, LazifyMode, ProbVector, StatePartition};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use report::{emit, render, RunManifest};

#[derive(Parser)]
#[command(name = "chainid", version, about = "Identity testing of reversible Markov chains from one trajectory")]
struct Cli {
    /// Print the resolved constant record and exit.
    #[arg(long, global = true)]
    constants: bool,
    /// JSON file overriding named constants.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory.
    Simulate(SimulateArgs),
    /// Partition the states into well-connected components and a tail.
    Partition(PartitionArgs),
    /// Distance between two chains and between their stationary laws.
    Distance(DistanceArgs),
    /// Identity test for a distribution from iid samples.
    Iidtest(IidTestArgs),
    /// Test a trajectory against a reference chain.
    Test(TestArgs),
    /// Check the distance inequalities on random pairs.
    Props(PropsArgs),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Initial law: a vector file, `stationary` or `uniform`.
    #[arg(long)]
    mu: String,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    /// Trajectory file to write; without it the states go into the report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct PartitionArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    seed: u64,
    /// Enumerate conductance and escape minima (d ≤ 12).
    #[arg(long)]
    certify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DistanceArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct IidTestArgs {
    #[arg(long)]
    pbar: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Lazify {
    Emulate,
    Assume,
}

#[derive(Args, Serialize)]
struct TestArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "emulate")]
    lazify: Lazify,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct PropsArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = identity::PROPERTY_PAIRS)]
    pairs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn one_based(states: &[usize]) -> Vec<usize> {
    states.iter().map(|s| s + 1).collect()
}

#[derive(Serialize)]
struct ComponentCertificateOut {
    states: Vec<usize>,
    internal_mass: f64,
    min_conductance: Option<f64>,
}

#[derive(Serialize)]
struct CertificatesOut {
    components: Vec<ComponentCertificateOut>,
    tail_min_escape: Option<f64>,
    internal_threshold: f64,
    conductance_threshold: f64,
    escape_threshold: f64,
    enumerated: bool,
}

impl From<&Certificates> for CertificatesOut {
    fn from(c: &Certificates) -> Self {
        Self {
            components: c
                .components
                .iter()
                .map(|x| ComponentCertificateOut {
                    states: one_based(&x.states),
                    internal_mass: x.internal_mass,
                    min_conductance: x.min_conductance,
                })
                .collect(),
            tail_min_escape: c.tail_min_escape,
            internal_threshold: c.internal_threshold,
            conductance_threshold: c.conductance_threshold,
            escape_threshold: c.escape_threshold,
            enumerated: c.enumerated,
        }
    }
}

#[derive(Serialize)]
struct PartitionOut {
    components: Vec<Vec<usize>>,
    tail: Vec<usize>,
    beta: f64,
    certificates: CertificatesOut,
}

impl From<&StatePartition> for PartitionOut {
    fn from(p: &StatePartition) -> Self {
        Self {
            components: p.components.iter().map(|c| one_based(c)).collect(),
            tail: one_based(&p.tail),
            beta: p.beta,
            certificates: (&p.certificates).into(),
        }
    }
}

#[derive(Serialize)]
struct FailOut {
    state: usize,
    needed: usize,
    available: usize,
}

#[derive(Serialize)]
struct TraceOut {
    states: Vec<usize>,
    samples_requested: usize,
    fail: Option<FailOut>,
    verdict: Option<TestVerdict>,
}

impl From<&ComponentTrace> for TraceOut {
    fn from(t: &ComponentTrace) -> Self {
        Self {
            states: one_based(&t.states),
            samples_requested: t.samples_requested,
            fail: t.fail.as_ref().map(|f| FailOut { state: f.state + 1, needed: f.needed, available: f.available }),
            verdict: t.verdict.clone(),
        }
    }
}

#[derive(Serialize)]
struct TestOut {
    verdict: Decision,
    exit_code: i32,
    trajectory_length: usize,
    tested_component: Option<Vec<usize>>,
    per_component: Vec<TraceOut>,
    partition: PartitionOut,
}

#[derive(Serialize)]
struct SimulateOut {
    d: usize,
    length: usize,
    visits: Vec<usize>,
    trajectory_file: Option<PathBuf>,
    states: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct DistanceOut {
    distance: f64,
    /// Absent when either chain has no unique stationary law.
    ratio_distance: Option<f64>,
}

#[derive(Serialize)]
struct IidTestOut {
    n: usize,
    required_samples: usize,
    exit_code: i32,
    verdict: TestVerdict,
}

fn load_constants(path: Option<&Path>) -> Result<(Constants, Option<(String, String)>)> {
    let Some(path) = path else {
        return Ok((Constants::default(), None));
    };
    let mut probe = RunManifest::new("config", &(), &Constants::default(), None)?;
    let text = probe.read(path)?;
    let c: Constants = serde_json::from_str(&text).with_context(|| format!("parsing constants in {}", path.display()))?;
    Ok((c, probe.inputs.into_iter().next()))
}

fn initial_law(spec: &str, p: &chainid_core::TransitionMatrix, m: &mut RunManifest) -> Result<ProbVector> {
    Ok(match spec {
        "stationary" => chain::stationary_distribution(p)?,
        "uniform" => ProbVector::uniform(p.d()),
        file => {
            let mu = io::vector_from_json(&m.read(Path::new(file))?)?;
            if mu.d() != p.d() {
                bail!(ChainError::ShapeMismatch { expected: p.d(), got: mu.d() });
            }
            mu
        }
    })
}

fn simulate(a: &SimulateArgs, mut m: RunManifest) -> Result<i32> {
    let p = io::matrix_from_json(&m.read(&a.matrix)?)?;
    let mu = initial_law(&a.mu, &p, &mut m)?;
    let traj = sampling::simulate(&p, &mu, a.steps, a.seed)?;
    let mut visits = vec![0; p.d()];
    for &s in &traj.states {
        visits[s] += 1;
    }
    let doc = io::trajectory_to_doc(&traj);
    if let Some(path) = &a.out {
        emit(&(serde_json::to_string(&doc)? + "\n"), Some(path))?;
    }
    let out = SimulateOut {
        d: p.d(),
        length: traj.len(),
        visits,
        trajectory_file: a.out.clone(),
        states: a.out.is_none().then_some(doc.states),
    };
    emit(&render(&m, &out)?, None)?;
    Ok(0)
}

fn partition_cmd(a: &PartitionArgs, c: &Constants, mut m: RunManifest) -> Result<i32> {
    let p = io::matrix_from_json(&m.read(&a.matrix)?)?;
    let opts = PartitionOptions { constants: c.clone(), certify: a.certify };
    let part = partition::partition_with(&p, a.beta, a.seed, &opts)?;
    eprintln!("{} components, {} tail states", part.components.len(), part.tail.len());
    emit(&render(&m, &PartitionOut::from(&part))?, a.out.as_deref())?;
    Ok(0)
}

fn distance(a: &DistanceArgs, mut m: RunManifest) -> Result<i32> {
    let p = io::matrix_from_json(&m.read(&a.a)?)?;
    let q = io::matrix_from_json(&m.read(&a.b)?)?;
    let distance = metrics::chain_distance(&p, &q)?;
    let ratio_distance = match (chain::stationary_distribution(&p), chain::stationary_distribution(&q)) {
        (Ok(pi), Ok(pibar)) => Some(metrics::ratio_distance(&pi, &pibar)?),
        _ => None,
    };
    emit(&render(&m, &DistanceOut { distance, ratio_distance })?, a.out.as_deref())?;
    Ok(0)
}

fn iidtest(a: &IidTestArgs, c: &Constants, mut m: RunManifest) -> Result<i32> {
    let pbar = io::vector_from_json(&m.read(&a.pbar)?)?;
    let (n, samples) = io::samples_from_json(&m.read(&a.samples)?)?;
    if n != pbar.d() {
        bail!(ChainError::AlphabetMismatch(format!("samples over {n} symbols, reference over {}", pbar.d())));
    }
    let verdict = iid_test::iid_test(&samples, pbar.as_slice(), a.eps, a.delta, a.seed, c)?;
    let required_samples = iid_test::iid_sample_size(n, a.eps, a.delta, c)?;
    eprintln!("{:?}", verdict.decision);
    let out = IidTestOut { n, required_samples, exit_code: verdict.decision.code(), verdict };
    emit(&render(&m, &out)?, a.out.as_deref())?;
    Ok(0)
}

fn test_cmd(a: &TestArgs, c: &Constants, mut m: RunManifest) -> Result<i32> {
    let pbar = io::matrix_from_json(&m.read(&a.reference)?)?;
    let traj = io::trajectory_from_json(&m.read(&a.trajectory)?)?;
    let cfg = TestConfig {
        constants: c.clone(),
        lazify: match a.lazify {
            Lazify::Emulate => LazifyMode::Emulate,
            Lazify::Assume => LazifyMode::Assume,
        },
        ..TestConfig::new(a.eps, a.seed)
    };
    let r = identity::identity_test(&pbar, &traj, &cfg)?;
    let code = r.verdict.code();
    match &r.tested_component {
        Some(s) => eprintln!("{:?} on component {:?}", r.verdict, one_based(s)),
        None => eprintln!("{:?}: no component had enough visits", r.verdict),
    }
    let out = TestOut {
        verdict: r.verdict,
        exit_code: code,
        trajectory_length: r.trajectory_length,
        tested_component: r.tested_component.as_deref().map(one_based),
        per_component: r.per_component.iter().map(TraceOut::from).collect(),
        partition: PartitionOut::from(&r.partition_used),
    };
    emit(&render(&m, &out)?, a.report.as_deref())?;
    Ok(code)
}

fn props(a: &PropsArgs, m: RunManifest) -> Result<i32> {
    let r = identity::property_suite(a.seed, a.pairs)?;
    eprintln!("{} violations over {} pairs", r.total_violations(), r.pairs);
    emit(&render(&m, &r)?, a.out.as_deref())?;
    Ok(0)
}

fn run(cli: Cli) -> Result<i32> {
    let (constants, config_digest) = load_constants(cli.config.as_deref())?;
    if cli.constants {
        println!("{}", serde_json::to_string_pretty(&constants)?);
        return Ok(0);
    }
    let Some(command) = cli.command else {
        bail!("no subcommand given; see --help");
    };
    let manifest = |name: &str, flags: serde_json::Value, seed: Option<u64>| -> Result<RunManifest> {
        let mut m = RunManifest::new(name, &flags, &constants, seed)?;
        m.inputs.extend(config_digest.clone());
        Ok(m)
    };
    match &command {
        Command::Simulate(a) => simulate(a, manifest("simulate", serde_json::to_value(a)?, Some(a.seed))?),
        Command::Partition(a) => partition_cmd(a, &constants, manifest("partition", serde_json::to_value(a)?, Some(a.seed))?),
        Command::Distance(a) => distance(a, manifest("distance", serde_json::to_value(a)?, None)?),
        Command::Iidtest(a) => iidtest(a, &constants, manifest("iidtest", serde_json::to_value(a)?, Some(a.seed))?),
        Command::Test(a) => test_cmd(a, &constants, manifest("test", serde_json::to_value(a)?, Some(a.seed))?),
        Command::Props(a) => props(a, manifest("props", serde_json::to_value(a)?, Some(a.seed))?),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<ChainError>() {
        Some(ChainError::CertificationFailed(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
