//! Per-question component selection and greedy pipeline composition.
//!
//! One predictor is trained per component. For a question, each task's
//! components are ranked by predicted F-score, the top `k` of every task are
//! combined into candidate pipelines, and a plan can be executed against the
//! registry.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::{micro_f_score, ComponentError, Registry};
use crate::features::{self, EmbeddingTable, FeatureConfig, FeatureError, FeatureVector};
use crate::learners::{self, Hyper, LearnerError, LearnerKind, Predictor, TrainingSet};
use crate::model::{AnnotationSet, PerformanceMatrix, QaTask, Question};
use crate::rng;

#[derive(Debug, Error)]
pub enum OptimiserError {
    #[error("goal is empty")]
    EmptyGoal,
    #[error("task {0} appears twice in the goal")]
    DuplicateTask(QaTask),
    #[error("no setup for task {0}")]
    MissingSetup(QaTask),
    #[error("component `{0}` has no evaluated training questions")]
    NoTrainingRows(String),
    #[error("no predictor for component `{0}`")]
    MissingPredictor(String),
    #[error("no ranking for task {0}")]
    MissingRanking(QaTask),
    #[error("k = {k} for {task} is outside 1..={available}")]
    KOutOfRange { task: QaTask, k: usize, available: usize },
    #[error("no features for question `{question}` and task {task}")]
    MissingFeatures { question: String, task: QaTask },
    #[error("component `{component}`: {source}")]
    Training {
        component: String,
        #[source]
        source: LearnerError,
    },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error("model directory: {0}")]
    Bundle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Ordered tasks to solve and how many candidates to keep per task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub tasks: Vec<QaTask>,
    #[serde(default)]
    pub k: BTreeMap<QaTask, usize>,
}

impl Goal {
    pub fn new(tasks: impl IntoIterator<Item = QaTask>) -> Result<Goal, OptimiserError> {
        let mut out: Vec<QaTask> = Vec::new();
        for t in tasks {
            let t = t.scored_as();
            if out.contains(&t) {
                return Err(OptimiserError::DuplicateTask(t));
            }
            out.push(t);
        }
        if out.is_empty() {
            return Err(OptimiserError::EmptyGoal);
        }
        Ok(Goal {
            tasks: out,
            k: BTreeMap::new(),
        })
    }

    /// NED, RL, then CL when any question carries class gold, then QB.
    pub fn default_for(questions: &[Question]) -> Goal {
        let mut tasks = vec![QaTask::Ned, QaTask::Rl];
        if questions.iter().any(|q| q.gold_for(QaTask::Cl).is_some()) {
            tasks.push(QaTask::Cl);
        }
        tasks.push(QaTask::Qb);
        Goal::new(tasks).expect("static goal is valid")
    }

    pub fn with_k(mut self, task: QaTask, k: usize) -> Goal {
        self.k.insert(task.scored_as(), k);
        self
    }

    pub fn k_for(&self, task: QaTask) -> usize {
        self.k.get(&task.scored_as()).copied().unwrap_or(1)
    }
}

/// How predictors for one task are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSetup {
    pub config: FeatureConfig,
    pub kind: LearnerKind,
    #[serde(default)]
    pub hyper: Hyper,
    /// Feature subset; all features of `config` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Vec<String>>,
}

impl TaskSetup {
    pub fn new(config: FeatureConfig, kind: LearnerKind) -> Self {
        TaskSetup {
            config,
            kind,
            hyper: Hyper::new(),
            selected: None,
        }
    }
}

pub type TaskSetups = BTreeMap<QaTask, TaskSetup>;

/// Feature vectors per (question id, task), computed once per configuration.
#[derive(Debug, Clone, Default)]
pub struct FeatureStore {
    vectors: HashMap<(String, QaTask), FeatureVector>,
}

impl FeatureStore {
    pub fn build(
        questions: &[Question],
        configs: &BTreeMap<QaTask, FeatureConfig>,
        table: Option<&EmbeddingTable>,
    ) -> Result<FeatureStore, OptimiserError> {
        let pairs: Vec<(&Question, QaTask, &FeatureConfig)> = questions
            .iter()
            .flat_map(|q| configs.iter().map(move |(t, c)| (q, *t, c)))
            .collect();
        let vectors = pairs
            .par_iter()
            .map(|(q, t, c)| Ok(((q.id.clone(), *t), features::extract(q, c, table)?)))
            .collect::<Result<HashMap<_, _>, FeatureError>>()?;
        Ok(FeatureStore { vectors })
    }

    pub fn get(&self, question: &str, task: QaTask) -> Result<&FeatureVector, OptimiserError> {
        self.vectors
            .get(&(question.to_string(), task.scored_as()))
            .ok_or_else(|| OptimiserError::MissingFeatures {
                question: question.to_string(),
                task,
            })
    }

    pub fn insert(&mut self, question: &str, task: QaTask, fv: FeatureVector) {
        self.vectors.insert((question.to_string(), task.scored_as()), fv);
    }
}

fn columns(fv: &FeatureVector, selected: Option<&[String]>) -> Result<(Vec<String>, Vec<f64>), OptimiserError> {
    match selected {
        None => Ok((fv.names.clone(), fv.values.clone())),
        Some(names) => {
            let p = fv.select(names)?;
            Ok((p.names, p.values))
        }
    }
}

/// Training rows for one component: every listed question that has a matrix
/// entry for it.
pub fn training_set(
    component: &str,
    task: QaTask,
    question_ids: &[&str],
    matrix: &PerformanceMatrix,
    store: &FeatureStore,
    selected: Option<&[String]>,
) -> Result<TrainingSet, OptimiserError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut names = Vec::new();
    for q in question_ids {
        let Some(f) = matrix.get(q, component) else {
            continue;
        };
        let (n, row) = columns(store.get(q, task)?, selected)?;
        names = n;
        x.push(row);
        y.push(f);
    }
    if x.is_empty() {
        return Err(OptimiserError::NoTrainingRows(component.to_string()));
    }
    Ok(TrainingSet::new(x, y, names)?)
}

/// Trains one predictor per registered component of the set-up tasks.
pub fn train_predictors(
    registry: &Registry,
    question_ids: &[&str],
    matrix: &PerformanceMatrix,
    store: &FeatureStore,
    setups: &TaskSetups,
    seed: u64,
) -> Result<BTreeMap<String, Predictor>, OptimiserError> {
    let jobs: Vec<(&str, QaTask, &TaskSetup)> = registry
        .iter()
        .filter_map(|c| {
            let task = c.task.scored_as();
            setups.get(&task).map(|s| (c.id.as_str(), task, s))
        })
        .collect();
    jobs.par_iter()
        .map(|(id, task, setup)| {
            let set = training_set(id, *task, question_ids, matrix, store, setup.selected.as_deref())?;
            let p = learners::train(setup.kind, &set, &setup.hyper, rng::derive_seed(seed, &[id.as_bytes()]))
                .map_err(|source| OptimiserError::Training {
                    component: id.to_string(),
                    source,
                })?;
            Ok((id.to_string(), p))
        })
        .collect()
}

/// Components of one task by predicted score, descending; ties by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedComponents {
    pub task: QaTask,
    pub entries: Vec<(String, f64)>,
}

impl RankedComponents {
    /// Sorts arbitrary (id, score) pairs with the ranking order.
    pub fn from_scores(task: QaTask, mut entries: Vec<(String, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankedComponents { task, entries }
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn best(&self) -> Option<&str> {
        self.entries.first().map(|(id, _)| id.as_str())
    }
}

/// Scores every component of `task` on the question's features.
pub fn rank_components(
    predictors: &BTreeMap<String, Predictor>,
    features: &FeatureVector,
    task: QaTask,
    registry: &Registry,
) -> Result<RankedComponents, OptimiserError> {
    let scores = registry
        .components_for(task)
        .into_iter()
        .map(|c| {
            let p = predictors
                .get(&c.id)
                .ok_or_else(|| OptimiserError::MissingPredictor(c.id.clone()))?;
            Ok((c.id.clone(), p.score(features)?))
        })
        .collect::<Result<Vec<_>, OptimiserError>>()?;
    Ok(RankedComponents::from_scores(task.scored_as(), scores))
}

/// Candidate list of one task inside a plan: the chosen component first, then
/// the other top-k candidates in rank order as fallbacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskChoice {
    pub task: QaTask,
    pub components: Vec<(String, f64)>,
}

impl TaskChoice {
    pub fn chosen(&self) -> &str {
        &self.components[0].0
    }

    pub fn chosen_score(&self) -> f64 {
        self.components[0].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePlan {
    pub goal: Vec<QaTask>,
    pub choices: Vec<TaskChoice>,
    pub estimated_quality: f64,
}

impl PipelinePlan {
    pub fn chosen_ids(&self) -> Vec<&str> {
        self.choices.iter().map(TaskChoice::chosen).collect()
    }

    pub fn choice(&self, task: QaTask) -> Option<&TaskChoice> {
        self.choices.iter().find(|c| c.task == task.scored_as())
    }
}

/// Cartesian product of the top-k slices, best estimated quality first (the
/// product of the chosen scores), ties by the concatenated component ids.
pub fn compose(goal: &Goal, rankings: &BTreeMap<QaTask, RankedComponents>) -> Result<Vec<PipelinePlan>, OptimiserError> {
    let mut slices: Vec<(QaTask, &[(String, f64)])> = Vec::new();
    for &task in &goal.tasks {
        let r = rankings.get(&task).ok_or(OptimiserError::MissingRanking(task))?;
        let k = goal.k_for(task);
        if k == 0 || k > r.entries.len() {
            return Err(OptimiserError::KOutOfRange {
                task,
                k,
                available: r.entries.len(),
            });
        }
        slices.push((task, &r.entries[..k]));
    }
    let mut plans: Vec<Vec<usize>> = vec![Vec::new()];
    for (_, slice) in &slices {
        plans = plans
            .into_iter()
            .flat_map(|prefix| {
                (0..slice.len()).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    let mut out: Vec<(String, PipelinePlan)> = plans
        .into_iter()
        .map(|picks| {
            let choices: Vec<TaskChoice> = slices
                .iter()
                .zip(&picks)
                .map(|((task, slice), &i)| {
                    let mut components = vec![slice[i].clone()];
                    components.extend(slice.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()));
                    TaskChoice { task: *task, components }
                })
                .collect();
            let estimated_quality = choices.iter().map(TaskChoice::chosen_score).product();
            let key = choices.iter().map(TaskChoice::chosen).collect::<Vec<_>>().join("\u{1f}");
            (
                key,
                PipelinePlan {
                    goal: goal.tasks.clone(),
                    choices,
                    estimated_quality,
                },
            )
        })
        .collect();
    out.sort_by(|a, b| {
        b.1.estimated_quality
            .total_cmp(&a.1.estimated_quality)
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(out.into_iter().map(|(_, p)| p).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub task: QaTask,
    /// Components invoked, in order; the last one produced `output`.
    pub invoked: Vec<String>,
    pub output: AnnotationSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub question_id: String,
    pub steps: Vec<StepTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparql: Option<String>,
}

impl Execution {
    pub fn output(&self, task: QaTask) -> Option<&AnnotationSet> {
        self.steps.iter().find(|s| s.task == task.scored_as()).map(|s| &s.output)
    }
}

const PREFIXES: [(&str, &str); 2] = [
    ("dbr:", "http://dbpedia.org/resource/"),
    ("dbo:", "http://dbpedia.org/ontology/"),
];

/// Writes an IRI in prefixed form when a known namespace applies.
fn sparql_term(iri: &str) -> String {
    for (prefix, ns) in PREFIXES {
        if iri.starts_with(prefix) {
            return iri.to_string();
        }
        if let Some(local) = iri.strip_prefix(ns) {
            if !local.is_empty() && local.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return format!("{prefix}{local}");
            }
        }
    }
    format!("<{iri}>")
}

/// The single-triple query built from one entity and one relation.
pub fn naive_query(entity: &str, relation: &str) -> String {
    format!("SELECT ?v0 {{ {} {} ?v0 . }}", sparql_term(entity), sparql_term(relation))
}

/// Runs the plan on one question in goal order. With `fallback`, a task whose
/// output is empty or failed moves on to its next candidate.
pub fn execute(
    plan: &PipelinePlan,
    question: &Question,
    registry: &Registry,
    seed: u64,
    fallback: bool,
) -> Result<Execution, OptimiserError> {
    let mut steps = Vec::new();
    for choice in &plan.choices {
        let candidates = if fallback { choice.components.len() } else { 1 };
        let mut invoked = Vec::new();
        let mut output = AnnotationSet::empty(choice.task, choice.chosen());
        for (id, _) in choice.components.iter().take(candidates) {
            let comp = registry.get(id).ok_or_else(|| ComponentError::Unknown(id.clone()))?;
            invoked.push(id.clone());
            output = comp.invoke(question, seed)?;
            if !output.failed && !output.items.is_empty() {
                break;
            }
        }
        let f_score = match question.gold_for(choice.task) {
            Some(g) => Some(micro_f_score(&output, g)?),
            None => None,
        };
        steps.push(StepTrace {
            task: choice.task,
            invoked,
            output,
            f_score,
        });
    }
    let items = |t: QaTask| steps.iter().find(|s| s.task == t).map(|s| &s.output.items);
    let sparql = match (plan.goal.last(), items(QaTask::Ned), items(QaTask::Rl)) {
        (Some(QaTask::Qb), Some(e), Some(r)) if e.len() == 1 && r.len() == 1 => {
            Some(naive_query(e.first().expect("len 1"), r.first().expect("len 1")))
        }
        _ => None,
    };
    Ok(Execution {
        question_id: question.id.clone(),
        steps,
        sparql,
    })
}

/// Trained predictors plus the set-up that produced them, as stored on disk:
/// `manifest.json` and one `predictors/<component>.json` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub setups: TaskSetups,
    pub predictors: BTreeMap<String, Predictor>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    seed: u64,
    setups: TaskSetups,
    components: Vec<String>,
}

fn predictor_file(dir: &Path, id: &str) -> PathBuf {
    let safe: String = id
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    dir.join("predictors").join(format!("{safe}.json"))
}

impl ModelBundle {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), OptimiserError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("predictors"))?;
        let manifest = Manifest {
            seed: self.seed,
            setups: self.setups.clone(),
            components: self.predictors.keys().cloned().collect(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        for (id, p) in &self.predictors {
            fs::write(predictor_file(dir, id), p.to_json()?)?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<ModelBundle, OptimiserError> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join("manifest.json"))
            .map_err(|e| OptimiserError::Bundle(format!("{}: {e}", dir.join("manifest.json").display())))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mut predictors = BTreeMap::new();
        for id in manifest.components {
            let path = predictor_file(dir, &id);
            let text = fs::read_to_string(&path).map_err(|e| OptimiserError::Bundle(format!("{}: {e}", path.display())))?;
            predictors.insert(id, Predictor::from_json(&text)?);
        }
        Ok(ModelBundle {
            setups: manifest.setups,
            predictors,
            seed: manifest.seed,
        })
    }
}
