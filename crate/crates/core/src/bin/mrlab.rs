use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrlab::experiments::{emit_report, Experiment, Format, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mrlab", version, about = "Multilinear restriction laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete Loomis-Whitney oracle, slicing cross-checks and the sequence Hoelder step
    CheckLw(Common),
    /// Partition of unity on an induced lattice
    CheckPartition(Common),
    /// Commutator identity for the extension operator
    CheckCommutator(Common),
    /// L-infinity endpoint and the slab law
    CheckLinf(Common),
    /// Empirical A(R) over the configured radii and the exponent fit
    SweepAr(Common),
    /// Slab-width sweep and the fitted gain exponent
    SweepMu(Common),
    /// Off-diagonal decay of wave-packet pieces
    Offdiag(Common),
    /// One induction step: cell norms against the weighted packet sums
    InductionCheck(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Both,
}

#[derive(Args)]
struct Common {
    /// Scenario config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output` or the working directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::CheckLw(c) => (Experiment::CheckLw, c),
            Command::CheckPartition(c) => (Experiment::CheckPartition, c),
            Command::CheckCommutator(c) => (Experiment::CheckCommutator, c),
            Command::CheckLinf(c) => (Experiment::CheckLinf, c),
            Command::SweepAr(c) => (Experiment::SweepAr, c),
            Command::SweepMu(c) => (Experiment::SweepMu, c),
            Command::Offdiag(c) => (Experiment::Offdiag, c),
            Command::InductionCheck(c) => (Experiment::InductionCheck, c),
        }
    }
}

fn run(experiment: Experiment, args: Common) -> mrlab::Result<bool> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
        config.validate()?;
    }
    let out = args
        .out
        .or_else(|| config.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match args.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
        FormatArg::Both => Format::Both,
    };
    let report = experiment.run(&config)?;
    for c in &report.contracts {
        let mark = if c.passed { "pass" } else { "FAIL" };
        println!("{mark} {experiment} {}: {:.6e} (threshold {:.6e})", c.name, c.value, c.threshold);
    }
    for path in emit_report(&report, &out, format)? {
        println!("wrote {}", path.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();
    match run(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mrlab {experiment}: {e}");
            ExitCode::from(2)
        }
    }
}
