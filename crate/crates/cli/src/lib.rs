//! The `factest` command-line tool.
//!
//! ```text
//! factest analyze  --input data.csv --layout oneway|twoway:a,b --method <tag> --contrast overall|A|B|AB
//! factest simulate --config run.cfg [--out results.csv]
//! factest report   --input results.csv --mode dots|deviation --out-dir plots/
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 parse error, 4 numeric
//! or degenerate-data error.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use factest_core::simulate::{read_csv, run_grid, write_csv};

pub mod analyze;
pub mod config;
pub mod error;
pub mod input;
pub mod report;

use config::{Command, ReportMode, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "factest", version, about = "Hypothesis tests and type-I error simulations for factorial designs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run tests on a cell_id,value CSV file.
    Analyze(Flags),
    /// Run a simulation grid and write the result table.
    Simulate(Flags),
    /// Turn a result table into plot data and dot charts.
    Report(Flags),
}

/// Every flag is optional; a flag overrides the same key in `--config`.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat key = value file read before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<String>,
    /// Result file (simulate) or output directory (report).
    #[arg(long = "out", visible_alias = "out-dir", alias = "output")]
    pub out: Option<String>,
    /// oneway or twoway:a,b
    #[arg(long)]
    pub layout: Option<String>,
    /// Simulation layouts, e.g. one-way,two-way
    #[arg(long)]
    pub layouts: Option<String>,
    #[arg(long)]
    pub settings: Option<String>,
    /// Method tags, comma-separated, or all.
    #[arg(long = "method", visible_alias = "methods")]
    pub methods: Option<String>,
    /// overall, A, B or AB
    #[arg(long)]
    pub contrast: Option<String>,
    /// Significance level(s), comma-separated.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long = "n-sim")]
    pub n_sim: Option<String>,
    #[arg(long = "n-perm")]
    pub n_perm: Option<String>,
    /// Sample-size increments, comma-separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub workers: Option<String>,
    /// dots or deviation
    #[arg(long)]
    pub mode: Option<String>,
    /// Print analysis results as CSV.
    #[arg(long)]
    pub machine: bool,
}

impl Flags {
    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self, command: Command) -> CliResult<RunConfig> {
        let mut config = RunConfig::new(command);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            config.apply_text(&text).map_err(|e| e.in_file(path))?;
            config.command = command;
        }
        let pairs = [
            ("input", &self.input),
            ("output", &self.out),
            ("layout", &self.layout),
            ("layouts", &self.layouts),
            ("settings", &self.settings),
            ("methods", &self.methods),
            ("contrast", &self.contrast),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("n_sim", &self.n_sim),
            ("n_perm", &self.n_perm),
            ("m", &self.m),
            ("workers", &self.workers),
            ("mode", &self.mode),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if self.machine {
            config.machine = true;
        }
        Ok(config)
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

/// Runs one subcommand; `stdout` receives the human-facing output.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let (command, flags) = match &cli.command {
        CliCommand::Analyze(f) => (Command::Analyze, f),
        CliCommand::Simulate(f) => (Command::Simulate, f),
        CliCommand::Report(f) => (Command::Report, f),
    };
    let config = flags.resolve(command)?;
    let out = |e: std::io::Error| CliError::io(Path::new("<stdout>"), e);
    match command {
        Command::Analyze => {
            let path = config
                .input
                .as_ref()
                .ok_or_else(|| CliError::Config("analyze needs --input".into()))?;
            let layout = config
                .layout
                .ok_or_else(|| CliError::Config("analyze needs --layout oneway or twoway:a,b".into()))?;
            let data = input::read_dataset(open(path)?, layout).map_err(|e| e.in_file(path))?;
            let results = analyze::analyze(&config, &data)?;
            let alpha = config.alphas[0];
            let text = if config.machine {
                analyze::render_machine(&results, alpha)
            } else {
                analyze::render_human(&results, alpha)
            };
            stdout.write_all(text.as_bytes()).map_err(out)?;
        }
        Command::Simulate => {
            let grid = config.grid();
            if grid.methods.iter().any(|m| m.is_permutation()) {
                let resolution = 1.0 / (config.n_perm as f64 + 1.0);
                for &a in config.alphas.iter().filter(|&&a| resolution > a) {
                    let flagged: Vec<String> =
                        grid.methods.iter().filter(|m| m.is_permutation()).map(|m| m.to_string()).collect();
                    log::warn!(
                        "resolution 1/{} > {a}: permutation methods {} cannot reject at this level",
                        config.n_perm + 1,
                        flagged.join(", ")
                    );
                }
            }
            let rows = run_grid(&grid)?;
            let path = config.output.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            write_atomic(&path, &buf)?;
            writeln!(stdout, "wrote {} rows to {}", rows.len(), path.display()).map_err(out)?;
        }
        Command::Report => {
            let path = config
                .input
                .as_ref()
                .ok_or_else(|| CliError::Config("report needs --input".into()))?;
            let mode = config
                .mode
                .ok_or_else(|| CliError::Config("report needs --mode dots or deviation".into()))?;
            let rows = read_csv(open(path)?).map_err(|e| match e {
                factest_core::Error::Config(msg) => CliError::Parse {
                    path: Some(path.clone()),
                    line: None,
                    msg,
                },
                other => other.into(),
            })?;
            let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("plots"));
            std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            let files = match mode {
                ReportMode::Dots => report::dots(&rows, &dir)?,
                ReportMode::Deviation => report::deviation(&rows, &dir)?,
            };
            for f in files {
                writeln!(stdout, "wrote {}", f.display()).map_err(out)?;
            }
        }
    }
    Ok(())
}
