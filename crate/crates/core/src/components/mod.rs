//! Component registry, adapters and per-question scoring.

mod http;
mod sim;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBinding;
pub use sim::{NoiseMode, Predicate, SimProfile, SimRule};

use crate::features::FeatureError;
use crate::model::{AnnotationSet, Component, ModelError, PerformanceMatrix, QaTask, Question};

pub const DEFAULT_JOBS: usize = 8;

#[derive(Debug, Error)]
pub enum ComponentError {
    #[error("component `{0}` is already registered")]
    Duplicate(String),
    #[error("unknown component `{0}`")]
    Unknown(String),
    #[error("cannot compare {predicted} output against {gold} gold")]
    TaskMismatch { predicted: QaTask, gold: QaTask },
    #[error("malformed simulation profile: {0}")]
    MalformedProfile(String),
    #[error("scenario file: {0}")]
    Scenario(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How a component is reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterBinding {
    Simulated { profile: SimProfile },
    Http(HttpBinding),
}

impl Component {
    pub fn simulated(id: impl Into<String>, task: QaTask, profile: SimProfile) -> Self {
        let id = id.into();
        Component {
            name: id.clone(),
            id,
            task,
            adapter: AdapterBinding::Simulated { profile },
        }
    }

    /// Runs the component on one question. HTTP failures are reported through
    /// `AnnotationSet::failed`; only malformed configuration is an error.
    pub fn invoke(&self, question: &Question, seed: u64) -> Result<AnnotationSet, ComponentError> {
        match &self.adapter {
            AdapterBinding::Simulated { profile } => sim::invoke(profile, &self.id, self.task, question, seed),
            AdapterBinding::Http(binding) => Ok(http::invoke(binding, &self.id, self.task, question)),
        }
    }
}

/// A named set of components, keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub scenario: String,
    components: BTreeMap<String, Component>,
}

impl Registry {
    pub fn new(scenario: impl Into<String>) -> Self {
        Registry {
            scenario: scenario.into(),
            components: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, component: Component) -> Result<(), ComponentError> {
        if self.components.contains_key(&component.id) {
            return Err(ComponentError::Duplicate(component.id));
        }
        if let AdapterBinding::Simulated { profile } = &component.adapter {
            profile.validate().map_err(ComponentError::MalformedProfile)?;
        }
        self.components.insert(component.id.clone(), component);
        Ok(())
    }

    pub fn with(mut self, component: Component) -> Result<Self, ComponentError> {
        self.register(component)?;
        Ok(self)
    }

    pub fn get(&self, id: &str) -> Option<&Component> {
        self.components.get(id)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Component> {
        self.components.values()
    }

    /// Components for `task`, sorted by id. NER components are listed under NED.
    pub fn components_for(&self, task: QaTask) -> Vec<&Component> {
        self.components
            .values()
            .filter(|c| c.task.scored_as() == task.scored_as())
            .collect()
    }

    pub fn counts(&self) -> BTreeMap<QaTask, usize> {
        let mut out = BTreeMap::new();
        for c in self.components.values() {
            *out.entry(c.task.scored_as()).or_insert(0) += 1;
        }
        out
    }

    /// Tasks with at least one component, in pipeline order.
    pub fn tasks(&self) -> Vec<QaTask> {
        self.counts().into_keys().collect()
    }

    /// Reads a scenario file: a JSON array of components.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ComponentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let components: Vec<Component> = serde_json::from_str(&text)
            .map_err(|e| ComponentError::Scenario(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let mut reg = Registry::new(name);
        for c in components {
            reg.register(c)?;
        }
        Ok(reg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ComponentError> {
        let list: Vec<&Component> = self.components.values().collect();
        fs::write(path, serde_json::to_string_pretty(&list)?)?;
        Ok(())
    }

    /// Keeps the `n` components with the highest mean F-score for each listed
    /// task (ties by id); other tasks are untouched.
    pub fn prune_by_mean(&self, matrix: &PerformanceMatrix, keep: &[(QaTask, usize)], scenario: &str) -> Registry {
        let mut out = Registry::new(scenario);
        for task in self.tasks() {
            let comps = self.components_for(task);
            let limit = keep.iter().find(|(t, _)| t.scored_as() == task).map(|(_, n)| *n);
            let mut ranked: Vec<(&Component, f64)> = comps
                .into_iter()
                .map(|c| (c, matrix.component_mean(&c.id).unwrap_or(0.0)))
                .collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
            let n = limit.unwrap_or(ranked.len());
            for (c, _) in ranked.into_iter().take(n) {
                out.components.insert(c.id.clone(), c.clone());
            }
        }
        out
    }
}

/// Micro F-score of one output against one gold annotation: items are compared
/// after trimming. Both empty gives 1; exactly one empty gives 0.
pub fn micro_f_score(predicted: &AnnotationSet, gold: &crate::model::GoldAnnotation) -> Result<f64, ComponentError> {
    if predicted.task.scored_as() != gold.task.scored_as() {
        return Err(ComponentError::TaskMismatch {
            predicted: predicted.task,
            gold: gold.task,
        });
    }
    let p: BTreeSet<&str> = predicted.items.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    let g: BTreeSet<&str> = gold.targets().iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    Ok(set_f_score(&p, &g))
}

pub(crate) fn set_f_score(p: &BTreeSet<&str>, g: &BTreeSet<&str>) -> f64 {
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let tp = p.intersection(g).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / p.len() as f64;
    let recall = tp / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Runs a closure inside a pool of `jobs` threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            log::warn!("could not build a {jobs}-thread pool ({e}); using the global pool");
            f()
        }
    }
}

/// Scores every component on every question that has gold for its task.
pub fn build_matrix(
    registry: &Registry,
    questions: &[Question],
    seed: u64,
    jobs: usize,
) -> Result<PerformanceMatrix, ComponentError> {
    let pairs: Vec<(&Component, &Question)> = registry
        .iter()
        .flat_map(|c| questions.iter().filter(|q| q.gold_for(c.task).is_some()).map(move |q| (c, q)))
        .collect();
    let scored: Vec<(String, String, f64)> = with_jobs(jobs, || {
        pairs
            .par_iter()
            .map(|(c, q)| {
                let out = c.invoke(q, seed)?;
                let gold = q.gold_for(c.task).expect("filtered on gold");
                Ok((q.id.clone(), c.id.clone(), micro_f_score(&out, gold)?))
            })
            .collect::<Result<_, ComponentError>>()
    })?;
    let mut matrix = PerformanceMatrix::new();
    for (q, c, f) in scored {
        matrix.insert(q, c, f)?;
    }
    Ok(matrix)
}
