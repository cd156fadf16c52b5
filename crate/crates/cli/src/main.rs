use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sgkernel::kernel::{build_circulant, KernelSpec};
use sgkernel::sparse_grid::{
    combination_coefficients, enumerate_index_set, IndexSetRecord, SparseGridConfig,
};
use sgkernel::study::{
    complexity_csv, convergence_csv, probe_csv, probe_inequalities, run_complexity, run_convergence, ProbeConfig,
    ProbeKind, StudyConfig,
};
use sgkernel::targets::{Target, TargetFamily};
use sgkernel::tensor::{solve_tensor, LevelIndex};
use sgkernel::Error;

#[derive(Parser)]
#[command(name = "sgkernel", version, about = "Periodic kernel interpolation on optimized sparse grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-dimensional kernel matrices.
    Kernel {
        #[command(subcommand)]
        command: KernelCommand,
    },
    /// Full tensor interpolation of a target family; writes coefficients as JSON.
    Interpolate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        /// Comma separated levels, one per dimension.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        /// Family descriptor as inline JSON or a path to a JSON file.
        #[arg(long)]
        family: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence study driven by a JSON config.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Report wall_ms as 0 for reproducible output.
        #[arg(long)]
        no_timing: bool,
    },
    /// Degrees of freedom of the optimized sparse grid over a range of levels.
    Complexity {
        #[arg(long)]
        d: usize,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long)]
        jmin: usize,
        #[arg(long)]
        jmax: usize,
    },
    /// Jackson or Bernstein inequality probe.
    Probe {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Prints the index set and combination coefficients as JSON.
    IndexSet {
        #[arg(long)]
        d: usize,
        #[arg(long = "J")]
        level: usize,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
    },
}

#[derive(Subcommand)]
enum KernelCommand {
    /// First row and eigenvalues of the circulant kernel matrix.
    Table {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        level: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Jackson,
    Bernstein,
}

enum Failure {
    Core(Error),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(Error::Conditioning { .. } | Error::SeriesBudget { .. }) => 3,
            Failure::Core(Error::SizeBudget(_)) => 4,
            Failure::Core(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Config(m) => m.clone(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("invalid JSON in {}: {e}", path.display())))
}

fn parse_family(arg: &str) -> CliResult<TargetFamily> {
    if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).map_err(|e| Failure::Config(format!("invalid family JSON: {e}")))
    } else {
        read_json(Path::new(arg))
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn kernel_table(p: f64, level: usize) -> CliResult<String> {
    let matrix = build_circulant(&KernelSpec::auto(p)?, level)?;
    let mut out = String::from("k,first_row,eigenvalue\n");
    for (k, (r, e)) in matrix.first_row.iter().zip(&matrix.eigenvalues).enumerate() {
        writeln!(out, "{k},{r:.17e},{e:.17e}").unwrap();
    }
    Ok(out)
}

fn interpolate(d: usize, p: f64, levels: Vec<usize>, family: &str, out: &Path) -> CliResult<()> {
    if levels.len() != d {
        return Err(Failure::Config(format!("--levels has {} entries but d = {d}", levels.len())));
    }
    let family = parse_family(family)?;
    let spec = KernelSpec::auto(p)?;
    let target = Target::new(family.clone(), d)?;
    let levels = LevelIndex::new(levels)?;
    let interp = solve_tensor(&spec, &target.sample(&levels)?)?;
    let doc = json!({
        "d": d,
        "p": p,
        "levels": interp.levels,
        "family": family,
        "coefficients": interp.coefficients,
    });
    write_file(out, &serde_json::to_string_pretty(&doc).expect("document serializes"))
}

fn convergence(path: &Path, no_timing: bool) -> CliResult<String> {
    let mut config: StudyConfig = read_json(path)?;
    if no_timing {
        config.timing = false;
    }
    let csv = convergence_csv(&run_convergence(&config)?);
    if let Some(out) = &config.output_path {
        write_file(Path::new(out), &csv)?;
    }
    Ok(csv)
}

fn probe(kind: Kind, path: &Path) -> CliResult<String> {
    let config: ProbeConfig = read_json(path)?;
    let kind = match kind {
        Kind::Jackson => ProbeKind::Jackson,
        Kind::Bernstein => ProbeKind::Bernstein,
    };
    Ok(probe_csv(&probe_inequalities(kind, &config)?))
}

fn index_set(d: usize, level: usize, lambda: f64) -> CliResult<String> {
    let index_set = enumerate_index_set(&SparseGridConfig::new(d, level, lambda)?)?;
    let coefficients = combination_coefficients(&index_set)?;
    let record = IndexSetRecord::new(&index_set, &coefficients);
    Ok(serde_json::to_string_pretty(&record).expect("record serializes") + "\n")
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Kernel {
            command: KernelCommand::Table { p, level },
        } => kernel_table(p, level),
        Command::Interpolate { d, p, levels, family, out } => {
            interpolate(d, p, levels, &family, &out)?;
            Ok(String::new())
        }
        Command::Convergence { config, no_timing } => convergence(&config, no_timing),
        Command::Complexity { d, lambda, jmin, jmax } => Ok(complexity_csv(&run_complexity(d, lambda, jmin, jmax)?)),
        Command::Probe { kind, config } => probe(kind, &config),
        Command::IndexSet { d, level, lambda } => index_set(d, level, lambda),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
