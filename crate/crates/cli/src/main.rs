//! `sensegap`: end-to-end workflows for finding corpus usages whose sense is
//! missing from a dictionary.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 usage error.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, Schema};

/// A problem with the invocation or configuration rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "sensegap", version, about = "Detect corpus usages of senses missing from a dictionary")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Language tag of inventory and corpora (`en`, `sv`).
    #[arg(long, global = true)]
    language: Option<String>,
    /// Embedding provider: `mock:DIM` or `store:PATH`.
    #[arg(long, global = true)]
    provider: Option<String>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    /// Only primary senses are eligible.
    #[arg(long, global = true)]
    primary_only: bool,
    /// `form<TAB>lemma` table; lowercasing is used without one.
    #[arg(long, global = true)]
    lemmatizer: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a raw dictionary dump into the canonical inventory and report stats.
    Ingest {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long, value_enum)]
        schema: Option<Schema>,
        /// Keep dictionary sub-entries as additional senses.
        #[arg(long)]
        include_sub_entries: bool,
    },
    /// Stats of a canonical inventory.
    Stats {
        #[arg(long)]
        inventory: PathBuf,
    },
    /// Find headword usages in corpora and draw the phase-I sample.
    Sample {
        #[arg(long)]
        inventory: PathBuf,
        /// `TAG=PATH` with TAG `modern` or `historical`; one sentence per line.
        #[arg(long = "corpus", required = true)]
        corpora: Vec<String>,
    },
    /// Write the embedding requests of the given models, and vectors when a provider is set.
    Embed {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long)]
        usages: PathBuf,
        /// Model name such as `G3_COS`, or `all` (repeatable).
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Cross-validate models on annotated usages and name the best.
    Select {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long)]
        usages: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Classify usages, rank candidates and build annotation instances.
    Predict {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long)]
        usages: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        selection: SelectArgs,
    },
    /// Rank stored predictions into annotation candidates.
    Candidates {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long)]
        usages: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        selection: SelectArgs,
    },
    /// Annotation instances for usages, optionally restricted to candidates.
    Instances {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long)]
        usages: PathBuf,
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Aggregate judgments into summary, agreement and gold files.
    Aggregate {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long = "judgments", required = true)]
        judgments: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model name such as `G3_COS`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// `selection.json` from `select`; supplies model and threshold.
    #[arg(long)]
    from_selection: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    max_per_headword: Option<usize>,
    #[arg(long)]
    sample_size: Option<usize>,
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig, UsageError> {
    let mut c = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &g.out {
        c.output = Some(v.clone());
    }
    if let Some(v) = g.seed {
        c.seed = v;
    }
    if let Some(v) = &g.language {
        c.language = v.clone();
    }
    if let Some(v) = &g.provider {
        c.provider = Some(v.clone());
    }
    if let Some(v) = g.batch_size {
        c.batch_size = v;
    }
    if g.primary_only {
        c.primary_only = true;
    }
    if let Some(v) = &g.lemmatizer {
        c.lemmatizer = Some(v.clone());
    }
    if c.batch_size == 0 {
        return Err(UsageError("batch_size must be at least 1".into()));
    }
    Ok(c)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = effective_config(&cli.global)?;
    match cli.command {
        Command::Ingest {
            inventory,
            schema,
            include_sub_entries,
        } => {
            if schema.is_some() {
                cfg.schema = schema;
            }
            cfg.include_sub_entries |= include_sub_entries;
            commands::ingest(&cfg, &inventory)
        }
        Command::Stats { inventory } => commands::stats(&cfg, &inventory),
        Command::Sample { inventory, corpora } => commands::sample(&cfg, &inventory, &corpora),
        Command::Embed {
            inventory,
            usages,
            models,
        } => {
            if !models.is_empty() {
                cfg.models = models;
            }
            commands::embed(&cfg, &inventory, &usages)
        }
        Command::Select {
            inventory,
            usages,
            gold,
            models,
        } => {
            if !models.is_empty() {
                cfg.models = models;
            }
            commands::select(&cfg, &inventory, &usages, &gold)
        }
        Command::Predict {
            inventory,
            usages,
            model,
            selection,
        } => {
            apply_selection_args(&mut cfg, &selection);
            let chosen = commands::resolve_model(&mut cfg, model.model, model.threshold, model.from_selection)?;
            commands::predict(&cfg, &inventory, &usages, chosen)
        }
        Command::Candidates {
            inventory,
            usages,
            predictions,
            model,
            selection,
        } => {
            apply_selection_args(&mut cfg, &selection);
            let chosen = commands::resolve_model(&mut cfg, model.model, model.threshold, model.from_selection)?;
            commands::candidates(&cfg, &inventory, &usages, &predictions, chosen)
        }
        Command::Instances {
            inventory,
            usages,
            candidates,
        } => commands::instances(&cfg, &inventory, &usages, candidates.as_deref()),
        Command::Aggregate { instances, judgments } => commands::aggregate(&cfg, &instances, &judgments),
    }
}

fn apply_selection_args(cfg: &mut RunConfig, s: &SelectArgs) {
    if let Some(v) = s.max_per_headword {
        cfg.selection.max_per_headword = v;
    }
    if let Some(v) = s.sample_size {
        cfg.selection.sample_size = v;
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.global.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
