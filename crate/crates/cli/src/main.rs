//! `tashkil`: corpus statistics, training, prediction and experiments for
//! Maghrebi Arabic diacritization.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tashkil::corpus::Encoding;
use tashkil::crf::CrfError;
use tashkil::eval::EvalError;
use tashkil::neural::NeuralError;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "tashkil", version, about = "Diacritic restoration for Maghrebi Arabic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EncodingArg {
    Buckwalter,
    Arabic,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Buckwalter => Encoding::Buckwalter,
            EncodingArg::Arabic => Encoding::Arabic,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the configured corpus encoding.
    #[arg(long, value_enum)]
    encoding: Option<EncodingArg>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(j) = self.jobs {
            c.jobs = j;
        }
        if let Some(e) = self.encoding {
            c.encoding = e.into();
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Forms-per-word distribution, lookup coverage and dialect overlap.
    Stats {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "buckwalter")]
        encoding: EncodingArg,
        /// Folds used for train/test overlap.
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write report files here instead of printing them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the configured model on the first corpus.
    Train(RunArgs),
    /// Diacritize a text file.
    Predict {
        /// model.json (crf or dnn) or a lookup table.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Lookup table consulted first; the model handles misses.
        #[arg(long)]
        hybrid: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "buckwalter")]
        encoding: EncodingArg,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated uni-, cross- and joint-dialect experiments.
    Experiment(RunArgs),
    /// Generate a synthetic dialect pair.
    Synth(RunArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let numerical = cause.downcast_ref::<EvalError>().is_some_and(EvalError::is_numerical)
            || matches!(cause.downcast_ref::<NeuralError>(), Some(NeuralError::NonFiniteLoss { .. }))
            || matches!(cause.downcast_ref::<CrfError>(), Some(CrfError::NonFiniteObjective { .. }));
        if numerical {
            return 3;
        }
    }
    2
}

fn set_threads(jobs: usize) -> anyhow::Result<()> {
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Stats {
            corpora,
            encoding,
            k,
            seed,
            out,
        } => commands::stats(&corpora, encoding.into(), k, seed, out.as_deref()),
        Command::Train(args) => {
            let c = args.resolve()?;
            set_threads(c.jobs)?;
            commands::train(&c)
        }
        Command::Predict {
            model,
            input,
            hybrid,
            encoding,
            out,
        } => commands::predict(&model, &input, hybrid.as_deref(), encoding.into(), out.as_deref()),
        Command::Experiment(args) => commands::experiment(&args.resolve()?),
        Command::Synth(args) => {
            let c = args.resolve()?;
            let out = c.out.clone().unwrap_or_else(|| Path::new(".").to_path_buf());
            commands::synth(&c, &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
