//! Datasets, synthetic corpora, the fold-based evaluation harness and
//! comparison reports.

mod evaluate;
mod experiment;
mod report;
mod settings;
mod synth;

use std::fs;
use std::path::Path;

use thiserror::Error;

pub use evaluate::{
    answerable, balance_by_answerable, count_task, evaluate, evaluate_ranker, Aggregate, Evaluation, FoldReport,
    MeanCounts, Ranker, TaskCounts, ANSWER_THRESHOLD,
};
pub use experiment::{run_experiment, ExperimentFile, ExperimentOutcome};
pub use report::{normalize, write_report, NormalizedRow, SettingResult};
pub use settings::{
    ExperimentSetting, Selection, TaskPlan, DEFAULT_TOP_N, SCENARIO_BASELINE, SCENARIO_NEW, SCENARIO_PRUNED,
    SETTING_NAMES,
};
pub use synth::{
    baseline_components, generate_synthetic, new_components, selector_components, synthetic_embeddings, Class,
    Entity, Relation, Shape, SyntheticSpec, Template, Vocabulary, NEW_COMPONENT_RATES,
};

use crate::components::ComponentError;
use crate::features::FeatureError;
use crate::learners::LearnerError;
use crate::model::{validate_dataset, ModelError, Question};
use crate::optimiser::OptimiserError;
use crate::selection::SelectionError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("dataset {path}: {message}")]
    Parse { path: String, message: String },
    #[error("dataset is invalid:\n{0}")]
    Invalid(String),
    #[error("template: {0}")]
    Template(String),
    #[error("unknown setting `{name}`; valid settings: {valid}")]
    UnknownSetting { name: String, valid: String },
    #[error("setting `{setting}`: {message}")]
    Setting { setting: String, message: String },
    #[error("experiment file: {0}")]
    Experiment(String),
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optimiser(#[from] OptimiserError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Reads a JSON dataset and rejects it if any question is malformed.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Question>, BenchError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let questions: Vec<Question> = serde_json::from_str(&text).map_err(|e| BenchError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let violations = validate_dataset(&questions);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(BenchError::Invalid(lines.join("\n")));
    }
    Ok(questions)
}

pub fn save_dataset(questions: &[Question], path: impl AsRef<Path>) -> Result<(), BenchError> {
    fs::write(path, serde_json::to_string_pretty(questions)?)?;
    Ok(())
}
