mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pipeforge::features::FeatureVariant;
use pipeforge::learners::LearnerKind;
use pipeforge::selection::RankingMethod;
use pipeforge::QaTask;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "pipeforge", version, about = "Learned per-question component selection for QA pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Base seed; every random draw derives from it. Defaults to 42.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, default_value_t = 8)]
    pub jobs: usize,
}

impl Common {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one feature row per question.
    Extract(ExtractArgs),
    /// Score every component on every question with gold.
    Matrix(MatrixArgs),
    /// Run a grid of named settings with K-fold evaluation.
    Experiment(ExperimentArgs),
    /// Rank the features of one task and keep the top N.
    SelectFeatures(SelectArgs),
    /// Train one predictor per component and save the bundle.
    Train(TrainArgs),
    /// Rank, compose and execute a pipeline for one question.
    Answer(AnswerArgs),
    /// Generate a synthetic corpus, registries, embeddings and an experiment file.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Feature configuration, CF1..CF6.
    #[arg(long, default_value = "CF1")]
    pub config: FeatureVariant,
    /// Task the features are for; CF2 drops entity types for NED.
    #[arg(long, default_value = "NED")]
    pub task: QaTask,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Token slots for CF4.
    #[arg(long, default_value_t = pipeforge::features::DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: Common,
    /// Experiment JSON file.
    #[arg(long)]
    pub file: PathBuf,
    /// Overrides the file's setting list (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub settings: Vec<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Train tree learners on binarised labels instead of raw F-scores.
    #[arg(long)]
    pub binarize_labels: bool,
    /// Balance answerable and unanswerable training questions.
    #[arg(long)]
    pub balanced: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Inputs shared by the commands that learn from a performance matrix.
#[derive(Args, Debug, Serialize)]
pub struct TrainingInputs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
    /// Precomputed matrix CSV; built from the registry when absent.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub inputs: TrainingInputs,
    #[arg(long, default_value = "NED")]
    pub task: QaTask,
    #[arg(long, default_value = "CF2")]
    pub config: FeatureVariant,
    #[arg(long, default_value = "ert")]
    pub method: RankingMethod,
    /// Estimator refitted by RFE.
    #[arg(long, default_value = "lr")]
    pub estimator: LearnerKind,
    #[arg(long, default_value_t = pipeforge::bench::DEFAULT_TOP_N)]
    pub top_n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub inputs: TrainingInputs,
    /// Learner for every task.
    #[arg(long, default_value = "lr")]
    pub learner: LearnerKind,
    /// Feature configuration for every task.
    #[arg(long, default_value = "CF1")]
    pub config: FeatureVariant,
    /// Per-task learner, e.g. `NED=rf`. Repeatable.
    #[arg(long = "task-learner", value_name = "TASK=KIND")]
    pub task_learner: Vec<String>,
    /// Per-task configuration, e.g. `RL=CF3`. Repeatable.
    #[arg(long = "task-config", value_name = "TASK=CF")]
    pub task_config: Vec<String>,
    /// Hyperparameter override applied to every task, e.g. `n_trees=50`.
    #[arg(long, value_name = "NAME=VALUE")]
    pub hyper: Vec<String>,
    /// Keep only the top N features per task.
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long, default_value = "ert")]
    pub method: RankingMethod,
    #[arg(long)]
    pub binarize_labels: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct AnswerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub registry: PathBuf,
    #[arg(long)]
    pub question: String,
    /// Ordered tasks, e.g. `NED,RL,QB`. Defaults to every trained task in
    /// pipeline order.
    #[arg(long, value_delimiter = ',')]
    pub goal: Vec<QaTask>,
    /// Candidates kept per task, e.g. `NED=3`. Repeatable.
    #[arg(long = "k", value_name = "TASK=K")]
    pub k: Vec<String>,
    /// Try the next candidate when a component returns nothing.
    #[arg(long)]
    pub fallback: bool,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Also write the result to `answer.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1000)]
    pub questions: usize,
    #[arg(long, default_value_t = 16)]
    pub embedding_dim: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PIPEFORGE_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(a) => commands::extract(&a),
        Command::Matrix(a) => commands::matrix(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::SelectFeatures(a) => commands::select_features(&a),
        Command::Train(a) => commands::train(&a),
        Command::Answer(a) => commands::answer(&a),
        Command::Synth(a) => commands::synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
