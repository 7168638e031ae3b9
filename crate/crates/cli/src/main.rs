use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gsttcm::analysis::{report_tables, to_csv, to_text};
use gsttcm::config::{Library, SimulationPlan};
use gsttcm::montecarlo::run_campaign;
use gsttcm::verify::{run_suite, Effort};
use gsttcm::Error;

const SHIPPED_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/gsttcm.cfg");

#[derive(Parser)]
#[command(name = "gsttcm", version, about = "GST-TCM analysis, simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shortest-event multiplicities and block determinant products.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo frame error rates over a plan's (N, SNR) grid.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides the plan's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Invariant suite over the shipped (or given) configuration.
    Verify {
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Verification,
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

fn load_library(path: &Path) -> Result<Library, Failure> {
    Library::load(path).map_err(|e| match e {
        Error::Io(_) | Error::Config { .. } => Failure::Config(e),
        other => Failure::Config(Error::Config {
            file: path.display().to_string(),
            line: 0,
            field: "config".into(),
            message: other.to_string(),
        }),
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(Error::Io(format!("{}: {e}", path.display()))))
}

fn analyze(config: &Path, out: &Path) -> Result<(), Failure> {
    let lib = load_library(config)?;
    let cases = lib.analysis_cases().map_err(Failure::Config)?;
    let rows = report_tables(&cases)?;
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(e.into()))?;
    let text = to_text(&rows);
    write(&out.join("analysis.csv"), &to_csv(&rows))?;
    write(&out.join("analysis.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn simulate(config: &Path, plan: &Path, out: &Path, workers: usize, seed: Option<u64>) -> Result<(), Failure> {
    let lib = load_library(config)?;
    let mut plan = SimulationPlan::load(plan).map_err(Failure::Config)?;
    if let Some(s) = seed {
        plan.seed = s;
    }
    let spec = lib.code(&plan.code).map_err(Failure::Config)?;
    let report = gsttcm::trellis::validate_code(
        &lib.gsttcm(&plan.code, plan.frame_len).map_err(Failure::Config)?,
        spec.det_sequences.first().map(Vec::as_slice),
        spec.rate,
    );
    if !report.ok() {
        for c in report.checks.iter().filter(|c| !c.pass) {
            eprintln!("code {}: {} failed: {}", plan.code, c.name, c.detail);
        }
        return Err(Failure::Verification);
    }
    let campaign = run_campaign(&lib, &plan, workers)?;
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(e.into()))?;
    let fer = campaign.fer_csv();
    write(&out.join("fer.csv"), &fer)?;
    write(&out.join("cells.csv"), &campaign.cells_csv())?;
    print!("{fer}");
    Ok(())
}

fn verify(quick: bool, config: Option<PathBuf>) -> Result<(), Failure> {
    let path = config.unwrap_or_else(|| {
        let local = PathBuf::from("configs/gsttcm.cfg");
        if local.exists() {
            local
        } else {
            PathBuf::from(SHIPPED_CONFIG)
        }
    });
    let lib = load_library(&path)?;
    let effort = if quick { Effort::quick() } else { Effort::full() };
    let report = run_suite(&lib, effort);
    print!("{}", report.render());
    if report.ok() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { config, out } => analyze(&config, &out),
        Command::Simulate {
            config,
            plan,
            out,
            workers,
            seed,
        } => simulate(&config, &plan, &out, workers, seed),
        Command::Verify { quick, config } => verify(quick, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
