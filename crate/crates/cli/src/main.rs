use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctpower_cli::verify::{run_suite, Suite};
use ctpower_cli::{
    analyze, build_state, parse_list, sweep_rows, write_csv, write_json, CliError, CliResult, FamilyKind, StateSource,
    SweepSpec,
};
use ctpower_core::simkit::{OptimizerConfig, ProtocolConfig};
use ctpower_core::states::save_state;

/// Minimal control power of controlled teleportation.
#[derive(Parser)]
#[command(name = "ctpower", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Control-power report for one state, as JSON.
    Analyze(AnalyzeArgs),
    /// Minimal control power across a family, as CSV.
    Sweep(SweepArgs),
    /// Check closed forms against simulation and independent numerics.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// State file ({"n": .., "amplitudes": [[re, im], ..]}).
    #[arg(long, conflicts_with = "family")]
    state: Option<PathBuf>,
    /// ghz, wclass or wntype.
    #[arg(long)]
    family: Option<FamilyKind>,
    /// Number of qubits (ghz, wntype).
    #[arg(long)]
    n: Option<usize>,
    /// |a|^2 for ghz.
    #[arg(long)]
    a2: Option<f64>,
    /// l0,l1,l2,l3 for wclass.
    #[arg(long)]
    l: Option<String>,
    /// Comma-separated real amplitudes for wntype; uniform if omitted.
    #[arg(long)]
    alphas: Option<String>,
    /// Fall back to the simulation oracle for states without a closed form.
    #[arg(long)]
    oracle: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the analyzed state as a state file.
    #[arg(long)]
    write_state: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    family: FamilyKind,
    /// Number of qubits for ghz.
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    a2_min: f64,
    #[arg(long, default_value_t = 1.0)]
    a2_max: f64,
    /// Intervals in the |a|^2 range; rows = steps + 1.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Random W-class points.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    /// CSV output path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// three-qubit, nqubit, prop1, fef, protocol or monogamy.
    suite: Suite,
    /// Cases to draw; each suite has its own default.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct BudgetArgs {
    /// Haar inputs per Monte-Carlo fidelity estimate.
    #[arg(long, default_value_t = 100_000)]
    mc_samples: usize,
    /// Points per angle in the optimizer seeding grid.
    #[arg(long, default_value_t = 16)]
    grid: usize,
    /// Nelder-Mead iteration cap.
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    /// Coordinate-ascent stopping threshold.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

impl BudgetArgs {
    fn config(&self, seed: u64) -> ProtocolConfig {
        ProtocolConfig {
            mc_samples: self.mc_samples,
            optimizer: OptimizerConfig { grid_resolution: self.grid, refinement_iterations: self.iterations },
            seed,
            tolerance: self.tolerance,
        }
    }
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        eprintln!("notice: no --seed given, using seed 0");
        0
    })
}

fn source(args: &AnalyzeArgs) -> CliResult<StateSource> {
    if let Some(path) = &args.state {
        return Ok(StateSource::File(path.clone()));
    }
    let missing = |what: &str| CliError::Input(format!("--family {what} needs more flags"));
    match args.family {
        None => Err(CliError::Input("give --state FILE or --family".into())),
        Some(FamilyKind::Ghz) => Ok(StateSource::Ghz {
            n: args.n.ok_or_else(|| missing("ghz --n"))?,
            a2: args.a2.ok_or_else(|| missing("ghz --a2"))?,
        }),
        Some(FamilyKind::Wclass) => {
            let l = parse_list(args.l.as_deref().ok_or_else(|| missing("wclass --l"))?)?;
            let lambdas: [f64; 4] =
                l.try_into().map_err(|_| CliError::Input("--l needs exactly four coefficients".into()))?;
            Ok(StateSource::Wclass { lambdas })
        }
        Some(FamilyKind::Wntype) => {
            let alphas = args.alphas.as_deref().map(parse_list).transpose()?.unwrap_or_default();
            if alphas.is_empty() && args.n.is_none() {
                return Err(missing("wntype --n or --alphas"));
            }
            Ok(StateSource::Wntype { n: args.n.unwrap_or(0), alphas })
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(args) => {
            let src = source(&args)?;
            let cfg = args.budget.config(0);
            let analysis = analyze(&src, args.oracle.then_some(&cfg))?;
            if let Some(path) = &args.write_state {
                save_state(&build_state(&src)?, path)?;
            }
            write_json(&analysis.to_json(), args.out.as_deref())
        }
        Command::Sweep(args) => {
            let spec = match args.family {
                FamilyKind::Ghz => SweepSpec::Ghz { n: args.n, min: args.a2_min, max: args.a2_max, steps: args.steps },
                FamilyKind::Wclass => SweepSpec::Wclass { samples: args.samples, seed: seed_or_default(args.seed) },
                FamilyKind::Wntype => SweepSpec::Wntype { n_min: args.n_min, n_max: args.n_max },
            };
            write_csv(&sweep_rows(&spec)?, args.out.as_deref())
        }
        Command::Verify(args) => {
            let seed = seed_or_default(args.seed);
            let samples = args.samples.unwrap_or(args.suite.default_samples());
            let checks = run_suite(args.suite, samples, seed, &args.budget.config(seed))?;
            for c in &checks {
                println!("{}", c.line());
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::Verification(format!("{failed} of {} checks failed", checks.len())));
            }
            println!("all {} checks passed", checks.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("CTPOWER_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size thread pool: {e}");
                }
            }
            _ => eprintln!("warning: ignoring CTPOWER_THREADS={v:?}"),
        }
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
