use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use markov_regress::chain::{mixing_time_with_cap, ChainSpec, DEFAULT_MIXING_CAP};
use markov_regress::harness::{
    accept, acceptance::validate_spectra, grid_from_json_str, run_experiment, sweep, ExperimentConfig, Scale,
    Suite, Verdict, DEFAULT_MAX_CELLS,
};
use markov_regress::{Error, Result};

/// Environment variable naming the root directory for outputs.
const OUT_ENV: &str = "MARKOV_REGRESS_OUT";

#[derive(Parser)]
#[command(name = "markov-regress", version, about = "SGD on Markovian data streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write per-algorithm CSV summaries.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config `output`, else a hash-named
        /// directory under the output root).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the Cartesian product of a parameter grid over a base config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_CELLS)]
        max_cells: usize,
    },
    /// Run an acceptance suite and print its JSON report.
    Accept {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Reduced run counts and horizons.
        #[arg(long)]
        fast: bool,
        /// Exit with status 1 when any criterion fails.
        #[arg(long)]
        strict: bool,
    },
    /// Compute the mixing time of a chain given as JSON.
    Mixing {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIXING_CAP)]
        cap: usize,
    },
    /// Run a validation property suite.
    Validate {
        #[arg(value_enum)]
        target: ValidateTarget,
        #[arg(long)]
        fast: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Bias,
    Variance,
    Replay,
    Spectra,
    Mixing,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Bias => Suite::Bias,
            SuiteArg::Variance => Suite::Variance,
            SuiteArg::Replay => Suite::Replay,
            SuiteArg::Spectra => Suite::Spectra,
            SuiteArg::Mixing => Suite::Mixing,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ValidateTarget {
    Spectra,
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_json_str(&read(path)?)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

/// `--output`, else the config's `output` (relative paths resolve against the
/// output root), else `<root>/<hash prefix>`.
fn output_dir(config: &ExperimentConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(dir) = flag {
        return Ok(dir);
    }
    let root = out_root();
    Ok(match &config.output {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => root.join(p),
        None => root.join(&config.config_hash()?[..12]),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, seed, output } => {
            let config = load_config(&config, seed)?;
            let dir = output_dir(&config, output)?;
            let result = run_experiment(&config, Some(&dir))?;
            for s in &result.series {
                println!(
                    "{}: estimate excess risk {:.6e} +/- {:.2e} ({} runs, {:.1}s)",
                    s.metadata.series,
                    s.metadata.estimate.mean,
                    s.metadata.estimate.stderr,
                    s.metadata.num_runs,
                    s.metadata.wall_time_secs
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config, grid, seed, output, max_cells } => {
            let base = load_config(&config, seed)?;
            let grid = grid_from_json_str(&read(&grid)?)?;
            let dir = match output {
                Some(d) => d,
                None => out_root().join(format!("sweep-{}", &base.config_hash()?[..12])),
            };
            let index = sweep(&base, &grid, &dir, max_cells)?;
            println!("{} cells written to {}", index.cells.len(), dir.display());
        }
        Command::Accept { suite, fast, strict } => {
            let scale = if fast { Scale::Fast } else { Scale::Full };
            let report = accept(suite.into(), scale);
            for c in &report.criteria {
                eprintln!("{}", c.line());
            }
            println!("{}", report.to_json_string()?);
            if strict && !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Mixing { chain, cap } => {
            let chain = ChainSpec::from_json_str(&read(&chain)?)?;
            let report = mixing_time_with_cap(&chain, cap)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Validate { target: ValidateTarget::Spectra, fast } => {
            let scale = if fast { Scale::Fast } else { Scale::Full };
            let mut all = true;
            for (name, verdict, detail) in validate_spectra(scale) {
                all &= verdict == Verdict::Pass;
                println!("{verdict} {name}: {detail}");
            }
            if !all {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
