use std::fmt;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fppu_core::isa::ValidationReport;
use fppu_core::kernels::{ErrorMode, InputDistribution, KernelKind, KernelSpec};
use fppu_core::{Fppu, FppuOp, PositConfig};
use fppu_tools::eval::{evaluate, EvalOp};
use fppu_tools::sweep::{self, CheckOp, Mode};
use fppu_tools::{optk, report, tracefile};

static STDOUT_CLOSED: AtomicBool = AtomicBool::new(false);

/// Writes to stdout; once the reader goes away the rest of the output is dropped
/// so the exit status still reflects the run.
fn emit(args: fmt::Arguments) {
    if STDOUT_CLOSED.load(Ordering::Relaxed) {
        return;
    }
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() != ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
        }
        STDOUT_CLOSED.store(true, Ordering::Relaxed);
    }
}

macro_rules! out {
    ($($t:tt)*) => { emit(format_args!($($t)*)) };
}

macro_rules! outln {
    ($($t:tt)*) => { emit(format_args!("{}\n", format_args!($($t)*))) };
}

/// Posit arithmetic unit model: verification, division tables, kernels and traces.
#[derive(Parser)]
#[command(name = "fppu", version)]
struct Cli {
    /// Worker threads for sweeps and trace validation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Format {
    #[arg(long, default_value_t = 8)]
    nbits: u32,
    #[arg(long, default_value_t = 0)]
    es: u32,
}

impl Format {
    fn config(self) -> Result<PositConfig, Failure> {
        PositConfig::new(self.nbits, self.es).map_err(|e| Failure::Usage(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compare the FPPU model with the golden model.
    Check {
        #[command(flatten)]
        format: Format,
        /// Comma-separated: add, sub, mul, div, fma, p2f, f2p.
        #[arg(long, value_delimiter = ',', default_value = "add,sub,mul,div,fma")]
        ops: Vec<String>,
        #[arg(long, conflicts_with = "sample")]
        exhaustive: bool,
        /// Random operand sets per operation.
        #[arg(long)]
        sample: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// PDIV wrong-rate table: exhaustive for 8-bit posits, sampled otherwise.
    Divtable {
        #[arg(long, value_delimiter = ',', default_value = "8,16")]
        nbits: Vec<u32>,
        /// Defaults to 0..=4 for 8-bit and 0..=3 for wider posits.
        #[arg(long, value_delimiter = ',')]
        es: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        nr: Vec<u32>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Optimize the reciprocal seed constants k1, k2.
    Optk {
        /// Comparison constants for an improvement figure.
        #[arg(long, requires = "baseline_k2")]
        baseline_k1: Option<f64>,
        #[arg(long, requires = "baseline_k1")]
        baseline_k2: Option<f64>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Normalized mean error of kernels run on the FPPU against binary32.
    Kernel {
        #[arg(long, value_enum, default_value = "all")]
        kind: KernelChoice,
        /// Posit formats as N,ES; repeatable.
        #[arg(long = "config", value_parser = parse_format, default_values = ["8,0", "16,2"])]
        configs: Vec<PositConfig>,
        #[arg(long, default_value_t = KernelSpec::DEFAULT_SIZE)]
        size: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "unit")]
        distribution: Distribution,
        #[arg(long, value_enum, default_value = "parallel")]
        error_mode: ModeChoice,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Instruction trace files.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
    /// Evaluate one operation and show decoded fields and rounding.
    Eval {
        #[command(flatten)]
        format: Format,
        /// decode, add, sub, mul, div, fma, p2f or f2p.
        op: String,
        /// 0x-prefixed patterns or decimal reals.
        #[arg(allow_hyphen_values = true)]
        operands: Vec<String>,
    },
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Check every record against the golden model.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a trace produced by the FPPU model on random operands.
    Generate {
        #[command(flatten)]
        format: Format,
        #[arg(long, default_value_t = 100_000)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Include every 8-bit operand pair once as a PDIV.
        #[arg(long)]
        all_div_pairs: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelChoice {
    All,
    Gemm,
    Conv3x3,
    Avgpool4x4,
}

#[derive(Clone, Copy, ValueEnum)]
enum Distribution {
    Unit,
    Sym,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeChoice {
    Parallel,
    PerOp,
}

fn parse_format(s: &str) -> Result<PositConfig, String> {
    let (n, es) = s.split_once(',').ok_or("expected N,ES")?;
    let n = n.trim().parse().map_err(|_| format!("bad N in {s:?}"))?;
    let es = es.trim().parse().map_err(|_| format!("bad ES in {s:?}"))?;
    PositConfig::new(n, es).map_err(|e| e.to_string())
}

enum Failure {
    /// Bad flags or an infeasible request (exit 2).
    Usage(String),
    /// A verification found a discrepancy (exit 1).
    Verification(String),
    /// Anything else that stopped the run (exit 1).
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            outln!("seed: {} (default)", sweep::DEFAULT_SEED);
            sweep::DEFAULT_SEED
        }
    }
}

fn write_json(path: Option<&Path>, value: serde_json::Value) -> anyhow::Result<()> {
    if let Some(path) = path {
        let text = serde_json::to_string_pretty(&value)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("worker pool: {e}")))?;
    }
    match cli.command {
        Command::Check { format, ops, exhaustive, sample, seed, json } => {
            let cfg = format.config()?;
            let ops = ops
                .iter()
                .map(|s| CheckOp::parse(s).ok_or_else(|| Failure::Usage(format!("unknown op {s:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let seed = seed_or_default(seed);
            let mode = match (exhaustive, sample) {
                (true, _) => Mode::Exhaustive { seed },
                (false, Some(count)) => Mode::Sample { count, seed },
                (false, None) => return Err(Failure::Usage("pass --exhaustive or --sample N".into())),
            };
            let report = sweep::check(&Fppu::new(cfg), &ops, mode).map_err(|e| Failure::Usage(e.to_string()))?;
            out!("{report}");
            write_json(json.as_deref(), report::check_json(&report))?;
            match report.exact_failures() {
                0 => Ok(()),
                n => Err(Failure::Verification(format!("{n} mismatches in correctly rounded operations"))),
            }
        }
        Command::Divtable { nbits, es, nr, samples, seed, json } => {
            let seed = seed_or_default(seed);
            let mut configs = Vec::new();
            for &n in &nbits {
                let es_list = es.clone().unwrap_or_else(|| if n == 8 { (0..=4).collect() } else { (0..=3).collect() });
                for e in es_list {
                    configs.push(Format { nbits: n, es: e }.config()?);
                }
            }
            let table = sweep::div_table(&configs, &nr, samples, seed);
            out!("{table}");
            write_json(json.as_deref(), report::div_table_json(&table))?;
            Ok(())
        }
        Command::Optk { baseline_k1, baseline_k2, json } => {
            let r = optk::optimize(baseline_k1.zip(baseline_k2));
            out!("{r}");
            write_json(json.as_deref(), report::optk_json(&r))?;
            Ok(())
        }
        Command::Kernel { kind, configs, size, seed, distribution, error_mode, json } => {
            let kinds = match kind {
                KernelChoice::All => KernelKind::ALL.to_vec(),
                KernelChoice::Gemm => vec![KernelKind::Gemm],
                KernelChoice::Conv3x3 => vec![KernelKind::Conv3x3],
                KernelChoice::Avgpool4x4 => vec![KernelKind::AvgPool4x4],
            };
            let seed = match seed {
                Some(s) => s,
                None => {
                    outln!("seed: {} (default)", KernelSpec::DEFAULT_SEED);
                    KernelSpec::DEFAULT_SEED
                }
            };
            let base = KernelSpec {
                kind: kinds[0],
                size,
                seed,
                distribution: match distribution {
                    Distribution::Unit => InputDistribution::UniformUnit,
                    Distribution::Sym => InputDistribution::UniformSym,
                },
            };
            let mode = match error_mode {
                ModeChoice::Parallel => ErrorMode::Parallel,
                ModeChoice::PerOp => ErrorMode::PerOp,
            };
            let table =
                report::kernel_table(&kinds, &configs, base, mode).map_err(|e| Failure::Usage(e.to_string()))?;
            out!("{table}");
            write_json(json.as_deref(), report::kernel_table_json(&table))?;
            Ok(())
        }
        Command::Trace { command: TraceCommand::Validate { file, format, json } } => {
            let cfg = format.config()?;
            let records = tracefile::read_trace(&file)?;
            let report = tracefile::validate_sharded(&records, &Fppu::new(cfg));
            out!("{report}");
            write_json(json.as_deref(), report::validation_json(&report, cfg))?;
            trace_verdict(&report)
        }
        Command::Trace { command: TraceCommand::Generate { format, count, seed, all_div_pairs, out } } => {
            let cfg = format.config()?;
            let seed = seed_or_default(seed);
            let plan = tracefile::TracePlan { count, seed, all_div_pairs };
            let records =
                tracefile::generate_trace(&Fppu::new(cfg), plan).map_err(|e| Failure::Usage(e.to_string()))?;
            tracefile::write_trace(&out, &records)?;
            outln!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Eval { format, op, operands } => {
            let cfg = format.config()?;
            let op = EvalOp::parse(&op).ok_or_else(|| Failure::Usage(format!("unknown operation {op:?}")))?;
            let text = evaluate(&Fppu::new(cfg), op, &operands).map_err(|e| Failure::Usage(e.to_string()))?;
            out!("{text}");
            Ok(())
        }
    }
}

/// PDIV may differ from the golden model but must agree with the FPPU model;
/// every other instruction must match the golden model.
fn trace_verdict(report: &ValidationReport) -> Result<(), Failure> {
    let bad: usize = report
        .ops
        .iter()
        .map(|(op, s)| if *op == FppuOp::Pdiv { s.fppu_mismatches } else { s.golden_mismatches })
        .sum();
    if bad == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{bad} traced results disagree with the models")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
