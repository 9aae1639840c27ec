//! Command-line experiment runner for momentum-accelerated HMM training.
//!
//! Subcommands: `encode`, `train`, `compare`, `classify`. Every command is
//! driven by a JSON config (flags override file values), writes the resolved
//! config next to its outputs, and is deterministic given that config. Exit
//! codes: 0 success, 1 validation error, 2 runtime/data error. Progress goes
//! to stderr; stdout stays clean for pipelines.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use momentum_hmm::momentum::{MomentumPolicy, MomentumSchedule, Variant};
use momentum_hmm::train::InitScheme;

use config::{ClassifyConfig, DataSource, EncodeConfig, ExperimentConfig, FamilyModelRef};

/// CLI failure, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or usage; all problems are listed. Exit code 1.
    Validation(Vec<String>),
    /// Data or runtime failure. Exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn validation(messages: Vec<String>) -> Self {
        CliError::Validation(messages)
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime(message.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn report(&self) {
        match self {
            CliError::Validation(messages) => {
                for message in messages {
                    eprintln!("error: {message}");
                }
            }
            CliError::Runtime(message) => eprintln!("error: {message}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "momentum-hmm",
    version,
    about = "Train and evaluate discrete HMMs with momentum-accelerated Baum-Welch"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode text, opcode directories, or synthetic sequences to disk.
    Encode(EncodeArgs),
    /// Train a model with random restarts; persist the best model and traces.
    Train(ExperimentArgs),
    /// Paired with/without-momentum comparison on shared initializations.
    Compare(ExperimentArgs),
    /// Score test samples against family models and report one-vs-rest AUC.
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Text,
    Encoded,
    Opcodes,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MomentumArg {
    None,
    Classic,
    Nesterov,
}

impl From<MomentumArg> for Variant {
    fn from(value: MomentumArg) -> Self {
        match value {
            MomentumArg::None => Variant::None,
            MomentumArg::Classic => Variant::Classic,
            MomentumArg::Nesterov => Variant::Nesterov,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    UniformRandom,
    NearUniform,
}

fn parse_interval(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected start:end, got {s:?}"))?;
    let start = a.trim().parse().map_err(|_| format!("bad interval start {a:?}"))?;
    let end = b.trim().parse().map_err(|_| format!("bad interval end {b:?}"))?;
    Ok((start, end))
}

fn parse_family_model(s: &str) -> Result<FamilyModelRef, String> {
    let (family, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected family=path, got {s:?}"))?;
    if family.is_empty() {
        return Err("family name is empty".into());
    }
    Ok(FamilyModelRef {
        family: family.to_string(),
        path: PathBuf::from(path),
    })
}

#[derive(Args)]
struct EncodeArgs {
    /// JSON config to start from; flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input kind.
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Input file (text) or directory of family subdirectories (opcodes).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Vocabulary size: keep the k most frequent opcodes (plus "other").
    #[arg(short = 'k', long = "top-k")]
    k: Option<usize>,
    /// Text: truncate to T symbols. Opcodes: also split each family into
    /// train/test pools of combined training length T.
    #[arg(short = 'T', long = "target-t")]
    t: Option<usize>,
    /// Seed for split sampling or synthetic generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Generator model (synthetic kind).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Number of synthetic sequences.
    #[arg(long)]
    sequences: Option<usize>,
    /// Length of each synthetic sequence.
    #[arg(long)]
    length: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config to start from; flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run identifier recorded in trace exports.
    #[arg(long)]
    run_id: Option<String>,
    /// Data kind (with --input / --model).
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Input path for text/encoded/opcodes data.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Vocabulary JSON (opcodes data).
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Vocabulary size of pre-encoded data.
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Generator model (synthetic data).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Number of synthetic sequences.
    #[arg(long)]
    sequences: Option<usize>,
    /// Length of each synthetic sequence.
    #[arg(long)]
    length: Option<usize>,
    /// Hidden-state count N.
    #[arg(short = 'N', long = "states")]
    n: Option<usize>,
    /// Training sequence length T (text data).
    #[arg(short = 'T', long = "target-t")]
    t: Option<usize>,
    /// Iteration budget.
    #[arg(long)]
    iters: Option<usize>,
    /// Number of random restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Additive smoothing value.
    #[arg(long, allow_negative_numbers = true)]
    smoothing: Option<f64>,
    /// Initialization scheme.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Jitter for the near-uniform scheme.
    #[arg(long, allow_negative_numbers = true)]
    jitter: Option<f64>,
    /// Momentum variant.
    #[arg(long, value_enum)]
    momentum: Option<MomentumArg>,
    /// Momentum factor in [0, 1).
    #[arg(long, allow_negative_numbers = true)]
    factor: Option<f64>,
    /// Clamp floor for negative parameters after a momentum step.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Zero the momentum factor for iterations [start, end); repeatable.
    #[arg(long = "skip", value_parser = parse_interval)]
    skip: Vec<(usize, usize)>,
    /// Snapshot/summary iterations, comma separated.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Stop once an iteration improves the score by less than this.
    #[arg(long, allow_negative_numbers = true)]
    stop_tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// JSON config to start from; flags override.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    run_id: Option<String>,
    /// Family model as family=path; path is a model JSON or a train output
    /// directory. Repeatable.
    #[arg(long = "model", value_parser = parse_family_model)]
    models: Vec<FamilyModelRef>,
    /// Directory of per-family test sample subdirectories.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Vocabulary JSON when test files hold opcode mnemonics.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Checkpoint iterations to score, comma separated.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Encode(args) => resolve_encode(args).and_then(commands::encode::run),
        Command::Train(args) => {
            resolve_experiment(args, "train").and_then(commands::train::run)
        }
        Command::Compare(args) => {
            resolve_experiment(args, "compare").and_then(commands::compare::run)
        }
        Command::Classify(args) => resolve_classify(args).and_then(commands::classify::run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}

fn require<T>(value: Option<T>, flag: &str, missing: &mut Vec<String>) -> Option<T> {
    if value.is_none() {
        missing.push(format!("{flag} is required"));
    }
    value
}

fn resolve_encode(args: EncodeArgs) -> Result<EncodeConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => Some(config::load_config::<EncodeConfig>(path)?),
        None => None,
    };

    if let Some(kind) = args.kind {
        let rebuild = match &cfg {
            None => true,
            Some(EncodeConfig::Text { .. }) => kind != KindArg::Text,
            Some(EncodeConfig::Opcodes { .. }) => kind != KindArg::Opcodes,
            Some(EncodeConfig::Synthetic { .. }) => kind != KindArg::Synthetic,
        };
        if rebuild {
            cfg = Some(fresh_encode_config(kind, &args)?);
        }
    }
    let mut cfg = cfg.ok_or_else(|| {
        CliError::validation(vec!["either --config or --kind is required".into()])
    })?;

    match &mut cfg {
        EncodeConfig::Text { input, t, out } => {
            if let Some(v) = &args.input {
                *input = v.clone();
            }
            if args.t.is_some() {
                *t = args.t;
            }
            if let Some(v) = &args.out {
                *out = v.clone();
            }
        }
        EncodeConfig::Opcodes {
            input,
            k,
            split_t,
            seed,
            out,
        } => {
            if let Some(v) = &args.input {
                *input = v.clone();
            }
            if let Some(v) = args.k {
                *k = v;
            }
            if args.t.is_some() {
                *split_t = args.t;
            }
            if let Some(v) = args.seed {
                *seed = v;
            }
            if let Some(v) = &args.out {
                *out = v.clone();
            }
        }
        EncodeConfig::Synthetic {
            model,
            sequences,
            length,
            seed,
            out,
        } => {
            if let Some(v) = &args.model {
                *model = v.clone();
            }
            if let Some(v) = args.sequences {
                *sequences = v;
            }
            if let Some(v) = args.length {
                *length = v;
            }
            if let Some(v) = args.seed {
                *seed = v;
            }
            if let Some(v) = &args.out {
                *out = v.clone();
            }
        }
    }
    Ok(cfg)
}

fn fresh_encode_config(kind: KindArg, args: &EncodeArgs) -> Result<EncodeConfig, CliError> {
    let mut missing = Vec::new();
    let cfg = match kind {
        KindArg::Text => {
            let input = require(args.input.clone(), "--input", &mut missing);
            let out = require(args.out.clone(), "--out", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            EncodeConfig::Text {
                input: input.unwrap(),
                t: args.t,
                out: out.unwrap(),
            }
        }
        KindArg::Opcodes => {
            let input = require(args.input.clone(), "--input", &mut missing);
            let k = require(args.k, "-k", &mut missing);
            let out = require(args.out.clone(), "--out", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            EncodeConfig::Opcodes {
                input: input.unwrap(),
                k: k.unwrap(),
                split_t: args.t,
                seed: args.seed.unwrap_or(0),
                out: out.unwrap(),
            }
        }
        KindArg::Synthetic => {
            let model = require(args.model.clone(), "--model", &mut missing);
            let sequences = require(args.sequences, "--sequences", &mut missing);
            let length = require(args.length, "--length", &mut missing);
            let out = require(args.out.clone(), "--out", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            EncodeConfig::Synthetic {
                model: model.unwrap(),
                sequences: sequences.unwrap(),
                length: length.unwrap(),
                seed: args.seed.unwrap_or(0),
                out: out.unwrap(),
            }
        }
        KindArg::Encoded => {
            return Err(CliError::validation(vec![
                "encode does not accept kind 'encoded'; its outputs are already encoded".into(),
            ]))
        }
    };
    Ok(cfg)
}

fn data_source_from_args(args: &ExperimentArgs) -> Result<DataSource, CliError> {
    let kind = args.kind.ok_or_else(|| {
        CliError::validation(vec!["either --config or --kind is required".into()])
    })?;
    let mut missing = Vec::new();
    let source = match kind {
        KindArg::Text => {
            let path = require(args.input.clone(), "--input", &mut missing);
            let t = require(args.t, "-T", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            DataSource::Text {
                path: path.unwrap(),
                t: t.unwrap(),
            }
        }
        KindArg::Encoded => {
            let path = require(args.input.clone(), "--input", &mut missing);
            let vocab_size = require(args.vocab_size, "--vocab-size", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            DataSource::Encoded {
                path: path.unwrap(),
                vocab_size: vocab_size.unwrap(),
            }
        }
        KindArg::Opcodes => {
            let path = require(args.input.clone(), "--input", &mut missing);
            let vocab = require(args.vocab.clone(), "--vocab", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            DataSource::Opcodes {
                path: path.unwrap(),
                vocab: vocab.unwrap(),
            }
        }
        KindArg::Synthetic => {
            let model = require(args.model.clone(), "--model", &mut missing);
            let sequences = require(args.sequences, "--sequences", &mut missing);
            let length = require(args.length, "--length", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            DataSource::Synthetic {
                model: model.unwrap(),
                sequences: sequences.unwrap(),
                length: length.unwrap(),
            }
        }
    };
    Ok(source)
}

fn resolve_experiment(
    args: ExperimentArgs,
    command: &str,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => config::load_config::<ExperimentConfig>(path)?,
        None => {
            let data = data_source_from_args(&args)?;
            let mut missing = Vec::new();
            let n = require(args.n, "-N", &mut missing);
            let out = require(args.out.clone(), "--out", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            let seed = args.seed.unwrap_or(0);
            ExperimentConfig {
                run_id: format!("{command}-{seed}"),
                data,
                n: n.unwrap(),
                iters: 100,
                restarts: 1,
                seed,
                smoothing: 0.0,
                init: InitScheme::UniformRandom,
                momentum: MomentumPolicy::none(),
                checkpoints: Vec::new(),
                stop_tol: None,
                out: out.unwrap(),
            }
        }
    };

    // Flag overrides. A fully specified data source on the command line
    // replaces the configured one.
    if args.kind.is_some() {
        cfg.data = data_source_from_args(&args)?;
    } else if let DataSource::Text { t, .. } = &mut cfg.data {
        if let Some(v) = args.t {
            *t = v;
        }
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.iters {
        cfg.iters = v;
    }
    if let Some(v) = args.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.smoothing {
        cfg.smoothing = v;
    }
    match args.init {
        Some(InitArg::UniformRandom) => cfg.init = InitScheme::UniformRandom,
        Some(InitArg::NearUniform) => {
            cfg.init = InitScheme::NearUniform {
                jitter: args.jitter.unwrap_or(0.01),
            }
        }
        None => {
            if let (InitScheme::NearUniform { jitter }, Some(v)) = (&mut cfg.init, args.jitter) {
                *jitter = v;
            }
        }
    }
    if let Some(v) = args.momentum {
        cfg.momentum.variant = v.into();
    }
    if let Some(v) = args.factor {
        cfg.momentum.factor = v;
    }
    if let Some(v) = args.epsilon {
        cfg.momentum.epsilon = v;
    }
    if !args.skip.is_empty() {
        cfg.momentum.schedule = MomentumSchedule::new(args.skip.clone())
            .map_err(|e| CliError::validation(vec![e.to_string()]))?;
    }
    if let Some(v) = &args.checkpoints {
        cfg.checkpoints = v.clone();
    }
    if args.stop_tol.is_some() {
        cfg.stop_tol = args.stop_tol;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &args.run_id {
        cfg.run_id = v.clone();
    }
    Ok(cfg)
}

fn resolve_classify(args: ClassifyArgs) -> Result<ClassifyConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => config::load_config::<ClassifyConfig>(path)?,
        None => {
            let mut missing = Vec::new();
            if args.models.is_empty() {
                missing.push("--model family=path is required".into());
            }
            let test = require(args.test.clone(), "--test", &mut missing);
            let out = require(args.out.clone(), "--out", &mut missing);
            if !missing.is_empty() {
                return Err(CliError::validation(missing));
            }
            ClassifyConfig {
                run_id: "classify".to_string(),
                models: args.models.clone(),
                test: test.unwrap(),
                vocab: args.vocab.clone(),
                checkpoints: Vec::new(),
                out: out.unwrap(),
            }
        }
    };

    if args.config.is_some() && !args.models.is_empty() {
        cfg.models = args.models.clone();
    }
    if let Some(v) = &args.test {
        cfg.test = v.clone();
    }
    if args.vocab.is_some() {
        cfg.vocab = args.vocab.clone();
    }
    if let Some(v) = &args.checkpoints {
        cfg.checkpoints = v.clone();
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &args.run_id {
        cfg.run_id = v.clone();
    }
    Ok(cfg)
}
