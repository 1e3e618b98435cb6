//! Command-line front end: `train`, `generate`, `evaluate`, `ablate`,
//! `gradcheck` and `synth`, driven by a TOML config plus flag overrides.
//!
//! Exit codes: 0 success, 1 internal failure (including a failed gradient
//! check), 2 usage, configuration or file-system error, 3 bad data.
//! `SENTI_ATTEND_THREADS` caps the worker threads used for batch gradients.

pub mod commands;
pub mod config;
pub mod generated;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_ablate, cmd_evaluate, cmd_generate, cmd_gradcheck, cmd_synth, cmd_train, evaluate_generated, load_model,
    load_prepared, EvaluateArgs, GenerateArgs, TrainSummary,
};
pub use config::{CorpusConfig, DecodeSection, GradcheckConfig, PathsConfig, RunConfig};
pub use generated::{format_generated, parse_generated, read_generated, GeneratedCaption};

use crate::error::{Error, Result};
use crate::experiment::ablation_table;
use crate::metrics::format_table;
use crate::model::{SentimentCategory, Variant};

pub const THREADS_ENV: &str = "SENTI_ATTEND_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "sentcap",
    version,
    about = "Train, run and score sentiment-conditioned caption models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags accepted by every subcommand, applied on top of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long = "lambda-l2", global = true)]
    pub lambda_l2: Option<f64>,
    #[arg(long = "lambda-att", global = true)]
    pub lambda_att: Option<f64>,
    /// Beam width; 1 is greedy decoding.
    #[arg(long, global = true)]
    pub beam: Option<usize>,
    #[arg(long = "max-len", global = true)]
    pub max_len: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.variant {
            cfg.model.variant = v;
        }
        if let Some(s) = self.seed {
            cfg.train.seed = s;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(lr) = self.lr {
            cfg.train.learning_rate = lr;
        }
        if let Some(l) = self.lambda_l2 {
            cfg.train.lambda_l2 = l;
        }
        if let Some(l) = self.lambda_att {
            cfg.train.lambda_att = l;
        }
        if let Some(b) = self.beam {
            cfg.decode.beam_width = b;
        }
        if let Some(m) = self.max_len {
            cfg.decode.max_len = m;
        }
    }

    /// Config file (or defaults) with the flags applied, validated.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write checkpoints, vocabulary and log.
    Train,
    /// Caption images with a trained checkpoint.
    Generate {
        /// Defaults to `<output_dir>/best.ckpt`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Caption only under this sentiment (pos, neg or neutral).
        #[arg(long, conflicts_with = "contrastive")]
        sentiment: Option<SentimentCategory>,
        /// Emit one caption per sentiment for every image.
        #[arg(long)]
        contrastive: bool,
        /// Caption file listing the images; defaults to paths.test.
        #[arg(long)]
        captions: Option<PathBuf>,
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score a generated caption file against references.
    Evaluate {
        generated: PathBuf,
        /// Defaults to paths.test.
        #[arg(long)]
        references: Option<PathBuf>,
        /// Defaults to paths.lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        sentiment: Option<SentimentCategory>,
        /// Unscaled values instead of percentages.
        #[arg(long)]
        raw: bool,
    },
    /// Train and score all five variants with the same seed.
    Ablate {
        #[arg(long)]
        raw: bool,
    },
    /// Compare loss gradients with finite differences on a small model.
    Gradcheck,
    /// Write a synthetic corpus and a config pointing at it.
    Synth {
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::warn!("{THREADS_ENV} ignored: the worker pool is already running");
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

/// Runs one parsed command, writing primary output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    configure_threads()?;
    let mut cfg = cli.overrides.resolve()?;
    if let Command::Generate {
        checkpoint: Some(path), ..
    } = &cli.command
    {
        cfg.paths.checkpoint = Some(path.clone());
    }
    writeln!(stderr, "# resolved configuration\n{}", cfg.to_toml()).map_err(io_err)?;

    match &cli.command {
        Command::Train => {
            let s = cmd_train(&cfg)?;
            writeln!(
                stdout,
                "trained {} epochs; best epoch {} (validation {}); final loss {:.6}; outputs in {}",
                s.epochs,
                s.best_epoch,
                s.best_score.map_or("n/a".to_string(), |v| format!("{v:.6}")),
                s.final_loss,
                s.output_dir.display()
            )
            .map_err(io_err)?;
        }
        Command::Generate {
            sentiment,
            contrastive,
            captions,
            out,
            ..
        } => {
            let args = GenerateArgs {
                sentiment: *sentiment,
                contrastive: *contrastive,
                captions: captions.clone(),
            };
            let text = format_generated(&cmd_generate(&cfg, &args)?);
            match out {
                Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e))?,
                None => stdout.write_all(text.as_bytes()).map_err(io_err)?,
            }
        }
        Command::Evaluate {
            generated,
            references,
            lexicon,
            sentiment,
            raw,
        } => {
            let args = EvaluateArgs {
                generated: generated.clone(),
                references: references.clone(),
                lexicon: lexicon.clone(),
                sentiment: *sentiment,
            };
            let rows = cmd_evaluate(&cfg, &args)?;
            stdout.write_all(format_table(&rows, *raw).as_bytes()).map_err(io_err)?;
        }
        Command::Ablate { raw } => {
            let runs = cmd_ablate(&cfg)?;
            stdout
                .write_all(ablation_table(&runs, *raw).as_bytes())
                .map_err(io_err)?;
        }
        Command::Gradcheck => {
            let report = cmd_gradcheck(&cfg)?;
            for p in &report.params {
                writeln!(stdout, "{}\t{}\t{:.3e}", p.name, p.numel, p.max_rel_error).map_err(io_err)?;
            }
            let worst = report.worst();
            let worst_desc = worst.map_or("none".to_string(), |w| format!("{}[{}]", w.name, w.worst_index));
            let status = if report.passed() { "PASS" } else { "FAIL" };
            writeln!(
                stdout,
                "{status} max_rel_error {:.3e} tolerance {:.1e} worst {worst_desc} scalars {}",
                report.max_rel_error(),
                report.tolerance,
                report.checked_scalars()
            )
            .map_err(io_err)?;
            if !report.passed() {
                writeln!(
                    stderr,
                    "gradient check failed: {worst_desc} has relative error {:.3e}",
                    report.max_rel_error()
                )
                .map_err(io_err)?;
                return Ok(1);
            }
        }
        Command::Synth { out } => {
            let written = cmd_synth(&cfg, out)?;
            writeln!(
                stdout,
                "wrote synthetic corpus to {}; train with --config {}",
                out.display(),
                out.join("config.toml").display()
            )
            .map_err(io_err)?;
            log::debug!("synthetic corpus config: {written:?}");
        }
    }
    Ok(0)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(rendered.as_bytes());
            } else {
                let _ = stderr.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
