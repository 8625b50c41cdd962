//! The `seqsat` command line.
//!
//! [`run`] is the whole program minus process setup, so tests can drive it
//! with an argument list and in-memory output streams. Exit codes: 0 on
//! success, 1 for I/O, parse and sampling errors, 2 for usage errors.

pub mod report;
pub mod spec;
pub mod stimulus;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use seqsat_core::circuit::{bits_to_string, parse_bits};
use seqsat_core::cnf::{tseitin, unroll, write_dimacs};
use seqsat_core::sampler::{self, SampleError, SamplerConfig, SolutionSet, StopCondition};
use seqsat_core::{
    build_circuit, parse_bench_named, simulate_discrete, BitMatrix, OutputConstraint, SequentialCircuit,
};

use report::{RunReport, RunStatus};
use spec::ConstraintSpec;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "seqsat",
    version,
    about = "Sample input sequences that drive circuit outputs to target values"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search every sequence length up to --eta and write all solutions found.
    Sample(SampleArgs),
    /// Replay a stimulus file and print outputs and state per cycle.
    Simulate(SimulateArgs),
    /// Unroll for a fixed number of cycles and write DIMACS CNF.
    ExportCnf(ExportArgs),
    /// Repeat sampling rounds under a time or solution budget.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// BENCH netlist; overrides the circuit named in the constraint file.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Constraint file (TOML).
    #[arg(long)]
    pub constraints: PathBuf,
}

#[derive(Debug, Args)]
pub struct SamplerArgs {
    /// Largest sequence length; defaults to the file's cycles.max, then 50.
    #[arg(long)]
    pub eta: Option<usize>,
    /// Smallest sequence length; defaults to the file's cycles.min, then 1.
    #[arg(long)]
    pub min_cycles: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub iters: usize,
    #[arg(long, default_value_t = 50.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2.0)]
    pub init_scale: f64,
    /// Standard deviation of Gaussian noise added to gradients.
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Shrink logits by this fraction before every step.
    #[arg(long)]
    pub decay: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    /// One line of 0/1 per cycle, in primary input order.
    #[arg(long)]
    pub stimulus: PathBuf,
    /// Initial flip-flop contents as a 0/1 string; all zero by default.
    #[arg(long)]
    pub state0: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub cycles: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Stop after this much wall time.
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    /// Stop once this many unique solutions are known.
    #[arg(long)]
    pub target_solutions: Option<usize>,
    /// Upper bound on rounds; unlimited with a time budget, 1000 otherwise.
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Run with the given arguments (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with_interrupt(args, out, err, None)
}

/// Like [`run`]; setting `interrupt` stops sampling at the next iteration
/// and writes the partial results.
pub fn run_with_interrupt<I, T>(
    args: I,
    out: &mut dyn Write,
    err: &mut dyn Write,
    interrupt: Option<&AtomicBool>,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(&a, out, interrupt),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::ExportCnf(a) => cmd_export_cnf(&a, out),
        Command::Bench(a) => cmd_bench(&a, out, interrupt),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "seqsat: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_circuit(path: &Path) -> Result<SequentialCircuit, CliError> {
    let text = read(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("netlist");
    let nl = parse_bench_named(name, &text).map_err(|e| CliError::parse(path, e))?;
    build_circuit(nl).map_err(|e| CliError::parse(path, e))
}

struct Problem {
    circuit: SequentialCircuit,
    constraint: OutputConstraint,
    spec: ConstraintSpec,
}

fn load_problem(input: &InputArgs) -> Result<Problem, CliError> {
    let spec = ConstraintSpec::parse(&read(&input.constraints)?).map_err(|e| CliError::parse(&input.constraints, e))?;
    let circuit_path = match &input.circuit {
        Some(p) => p.clone(),
        None => spec.circuit_path(&input.constraints).ok_or_else(|| {
            CliError::Usage("no circuit: pass --circuit or set `circuit` in the constraint file".into())
        })?,
    };
    let circuit = load_circuit(&circuit_path)?;
    let constraint = spec
        .to_constraint(circuit.netlist())
        .map_err(|e| CliError::parse(&input.constraints, e))?;
    Ok(Problem {
        circuit,
        constraint,
        spec,
    })
}

fn sampler_config(a: &SamplerArgs, spec: &ConstraintSpec) -> Result<SamplerConfig, CliError> {
    let defaults = SamplerConfig::default();
    let cfg = SamplerConfig {
        eta: a.eta.or(spec.cycles.max).unwrap_or(defaults.eta),
        min_cycles: a.min_cycles.or(spec.cycles.min).unwrap_or(defaults.min_cycles),
        iters: a.iters,
        lr: a.lr,
        batch: a.batch,
        threshold: a.threshold,
        seed: a.seed,
        init_scale: a.init_scale,
        noise_std: a.noise_std,
        decay: a.decay,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn sample_failure(e: SampleError) -> CliError {
    match e {
        SampleError::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::Failed(other.to_string()),
    }
}

fn finish_run(dir: &Path, report: &RunReport, set: &SolutionSet, out: &mut dyn Write) -> Result<(), CliError> {
    report::write_run(dir, set, report).map_err(|e| CliError::io(dir, e))?;
    let _ = writeln!(out, "{}", report.summary());
    Ok(())
}

fn cmd_sample(a: &SampleArgs, out: &mut dyn Write, interrupt: Option<&AtomicBool>) -> Result<i32, CliError> {
    let p = load_problem(&a.input)?;
    let cfg = sampler_config(&a.sampler, &p.spec)?;
    let stop = StopCondition {
        flag: interrupt,
        ..StopCondition::never()
    };
    let mut set = SolutionSet::new();
    let status = sampler::sample_into(&p.circuit, &p.constraint, &cfg, &mut set, &stop).map_err(sample_failure)?;
    let status = match status {
        sampler::RunStatus::Completed => RunStatus::Completed,
        sampler::RunStatus::Stopped => RunStatus::Interrupted,
    };
    let report = RunReport::new(
        "sample",
        &p.circuit.netlist().name,
        &cfg,
        &p.spec.constraints,
        &set,
        status,
        1,
    );
    finish_run(&a.out, &report, &set, out)?;
    if status == RunStatus::Interrupted {
        return Err(CliError::Failed("interrupted; partial results written".into()));
    }
    Ok(0)
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, interrupt: Option<&AtomicBool>) -> Result<i32, CliError> {
    if a.budget_seconds.is_none() && a.target_solutions.is_none() {
        return Err(CliError::Usage(
            "bench needs --budget-seconds or --target-solutions".into(),
        ));
    }
    if let Some(b) = a.budget_seconds {
        if !(b > 0.0 && b.is_finite()) {
            return Err(CliError::Usage("--budget-seconds must be positive".into()));
        }
    }
    if a.target_solutions == Some(0) {
        return Err(CliError::Usage("--target-solutions must be positive".into()));
    }
    let p = load_problem(&a.input)?;
    let base = sampler_config(&a.sampler, &p.spec)?;
    let deadline = a.budget_seconds.map(|b| Instant::now() + Duration::from_secs_f64(b));
    let stop = StopCondition {
        deadline,
        target_unique: a.target_solutions,
        flag: interrupt,
    };
    let max_rounds = a
        .max_rounds
        .unwrap_or(if deadline.is_some() { usize::MAX } else { 1000 });
    let mut set = SolutionSet::new();
    let mut rounds = 0;
    let mut status = RunStatus::Completed;
    while rounds < max_rounds {
        let cfg = SamplerConfig {
            seed: base.seed.wrapping_add(rounds as u64),
            ..base.clone()
        };
        rounds += 1;
        let s = sampler::sample_into(&p.circuit, &p.constraint, &cfg, &mut set, &stop).map_err(sample_failure)?;
        if s == sampler::RunStatus::Stopped {
            let interrupted = interrupt.is_some_and(|f| f.load(std::sync::atomic::Ordering::Relaxed));
            status = if interrupted {
                RunStatus::Interrupted
            } else {
                RunStatus::Stopped
            };
            break;
        }
    }
    let report = RunReport::new(
        "bench",
        &p.circuit.netlist().name,
        &base,
        &p.spec.constraints,
        &set,
        status,
        rounds,
    );
    finish_run(&a.out, &report, &set, out)?;
    if status == RunStatus::Interrupted {
        return Err(CliError::Failed("interrupted; partial results written".into()));
    }
    Ok(0)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = load_circuit(&a.circuit)?;
    let stim =
        stimulus::parse_stimulus(&read(&a.stimulus)?, c.num_inputs()).map_err(|e| CliError::parse(&a.stimulus, e))?;
    let h0 = match &a.state0 {
        None => vec![false; c.num_states()],
        Some(s) => match parse_bits(s) {
            Some(bits) if bits.len() == c.num_states() => bits,
            _ => {
                return Err(CliError::Usage(format!(
                    "--state0 must be {} characters of 0/1",
                    c.num_states()
                )))
            }
        },
    };
    let inputs: Vec<BitMatrix> = (0..stim.rows())
        .map(|t| BitMatrix::from_rows(&[stim.row(t).to_vec()]).expect("one row"))
        .collect();
    let h0 = BitMatrix::from_rows(&[h0]).expect("one row");
    let trace = simulate_discrete(&c, &inputs, &h0).map_err(|e| CliError::parse(&a.stimulus, e))?;
    let w = |e| CliError::io(Path::new("<stdout>"), e);
    writeln!(out, "state {}", bits_to_string(trace.states[0].row(0))).map_err(w)?;
    for t in 0..trace.outputs.len() {
        writeln!(
            out,
            "cycle {} outputs {} state {}",
            t + 1,
            bits_to_string(trace.outputs[t].row(0)),
            bits_to_string(trace.states[t + 1].row(0))
        )
        .map_err(w)?;
    }
    Ok(0)
}

fn cmd_export_cnf(a: &ExportArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = load_problem(&a.input)?;
    let f = tseitin(&unroll(&p.circuit, a.cycles as usize), &p.constraint);
    let mut buf = Vec::new();
    write_dimacs(&f, &mut buf).map_err(|e| CliError::Failed(e.to_string()))?;
    report::write_atomic(&a.out, &buf).map_err(|e| CliError::io(&a.out, e))?;
    let _ = writeln!(out, "variables {} clauses {}", f.num_vars, f.clauses.len());
    Ok(0)
}
