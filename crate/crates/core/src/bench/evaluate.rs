//! K-fold evaluation of learned component selection.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::settings::{ExperimentSetting, TaskPlan};
use super::BenchError;
use crate::components::Registry;
use crate::features::{EmbeddingTable, FeatureConfig};
use crate::learners::{kfold, Hyper, LearnerKind, TrainingSet};
use crate::model::{PerformanceMatrix, QaTask, Question};
use crate::optimiser::{rank_components, train_predictors, training_set, FeatureStore, TaskSetup, TaskSetups};
use crate::rng;
use crate::selection::{rank_ert, rank_rfe, select_top_n, FeatureRanking, Provenance, RankingMethod};

/// A component answers a question when its F-score is strictly above this.
pub const ANSWER_THRESHOLD: f64 = 0.5;

/// Per-fold counts for one task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub total: usize,
    pub answerable: usize,
    pub top1: usize,
    pub top2: usize,
    pub top3: usize,
    /// Number of features the predictors were trained on.
    #[serde(default)]
    pub features: usize,
}

impl TaskCounts {
    pub fn top(&self, n: usize) -> usize {
        match n {
            1 => self.top1,
            2 => self.top2,
            _ => self.top3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub tasks: BTreeMap<QaTask, TaskCounts>,
    /// Predictor training plus test-set scoring, milliseconds.
    pub elapsed_ms: f64,
}

/// Fold means.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanCounts {
    pub total: f64,
    pub answerable: f64,
    pub top1: f64,
    pub top2: f64,
    pub top3: f64,
    pub features: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub folds: usize,
    pub tasks: BTreeMap<QaTask, MeanCounts>,
    pub elapsed_ms: f64,
}

impl Aggregate {
    pub fn from_folds(folds: &[FoldReport]) -> Aggregate {
        let n = folds.len().max(1) as f64;
        let mut tasks: BTreeMap<QaTask, MeanCounts> = BTreeMap::new();
        for f in folds {
            for (t, c) in &f.tasks {
                let m = tasks.entry(*t).or_default();
                m.total += c.total as f64 / n;
                m.answerable += c.answerable as f64 / n;
                m.top1 += c.top1 as f64 / n;
                m.top2 += c.top2 as f64 / n;
                m.top3 += c.top3 as f64 / n;
                m.features += c.features as f64 / n;
            }
        }
        Aggregate {
            folds: folds.len(),
            tasks,
            elapsed_ms: folds.iter().map(|f| f.elapsed_ms).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub setting: String,
    pub scenario: String,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
    /// Feature rankings computed on the first fold's training questions.
    pub rankings: BTreeMap<QaTask, FeatureRanking>,
}

/// Does any of `components` answer the question?
pub fn answerable(matrix: &PerformanceMatrix, question: &str, components: &[&str]) -> bool {
    components.iter().any(|c| matrix.get_or_zero(question, c) > ANSWER_THRESHOLD)
}

/// Counts one task over a test fold. `rank` orders the candidates for a
/// question; top-n looks at the first `min(n, |components|)` of them.
pub fn count_task<F>(
    test: &[&str],
    components: &[&str],
    matrix: &PerformanceMatrix,
    mut rank: F,
) -> Result<TaskCounts, BenchError>
where
    F: FnMut(&str) -> Result<Vec<String>, BenchError>,
{
    let mut counts = TaskCounts {
        total: test.len(),
        ..TaskCounts::default()
    };
    for q in test {
        if answerable(matrix, q, components) {
            counts.answerable += 1;
        }
        let ranked = rank(q)?;
        let hit = |n: usize| {
            ranked
                .iter()
                .take(n.min(components.len()))
                .any(|c| matrix.get_or_zero(q, c) > ANSWER_THRESHOLD)
        };
        counts.top1 += hit(1) as usize;
        counts.top2 += hit(2) as usize;
        counts.top3 += hit(3) as usize;
    }
    Ok(counts)
}

/// Downsamples the majority class so answerable and unanswerable questions
/// are equally represented. Order is preserved.
pub fn balance_by_answerable<'a>(
    ids: &[&'a str],
    matrix: &PerformanceMatrix,
    components: &[&str],
    seed: u64,
) -> Vec<&'a str> {
    let (yes, no): (Vec<usize>, Vec<usize>) = (0..ids.len()).partition(|&i| answerable(matrix, ids[i], components));
    let keep = yes.len().min(no.len());
    if keep == 0 {
        log::warn!("cannot balance {} questions: one class is empty", ids.len());
        return ids.to_vec();
    }
    let mut rng = rng::stream(seed);
    let mut chosen = Vec::with_capacity(2 * keep);
    for mut class in [yes, no] {
        class.shuffle(&mut rng);
        class.truncate(keep);
        chosen.extend(class);
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| ids[i]).collect()
}

/// Something that orders components per question, refitted for every fold.
pub trait Ranker {
    fn fit(&mut self, _fold: usize, _train: &[&str]) -> Result<(), BenchError> {
        Ok(())
    }

    fn rank(&self, task: QaTask, question: &str, candidates: &[&str]) -> Result<Vec<String>, BenchError>;
}

/// Runs a ranker over K folds of `questions`. `components` lists the
/// candidates of every evaluated task.
pub fn evaluate_ranker<R: Ranker>(
    questions: &[&str],
    matrix: &PerformanceMatrix,
    components: &BTreeMap<QaTask, Vec<&str>>,
    k: usize,
    seed: u64,
    ranker: &mut R,
) -> Result<Vec<FoldReport>, BenchError> {
    let folds = kfold(questions.len(), k, seed)?;
    let mut out = Vec::with_capacity(k);
    for (f, fold) in folds.iter().enumerate() {
        let train: Vec<&str> = fold.train.iter().map(|&i| questions[i]).collect();
        let test: Vec<&str> = fold.test.iter().map(|&i| questions[i]).collect();
        let start = Instant::now();
        ranker.fit(f, &train)?;
        let mut tasks = BTreeMap::new();
        for (task, cands) in components {
            let counts = count_task(&test, cands, matrix, |q| ranker.rank(*task, q, cands))?;
            tasks.insert(*task, counts);
        }
        out.push(FoldReport {
            fold: f,
            tasks,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(out)
}

fn setting_error(setting: &ExperimentSetting, message: impl ToString) -> BenchError {
    BenchError::Setting {
        setting: setting.name.clone(),
        message: message.to_string(),
    }
}

/// Ranks features on the training questions of one task and keeps the top N.
#[allow(clippy::too_many_arguments)]
fn select_features(
    plan: &TaskPlan,
    task: QaTask,
    components: &[&str],
    train: &[&str],
    matrix: &PerformanceMatrix,
    store: &FeatureStore,
    seed: u64,
) -> Result<Option<(FeatureRanking, Vec<String>)>, BenchError> {
    let Some(sel) = plan.selection else {
        return Ok(None);
    };
    let sets: Vec<TrainingSet> = components
        .iter()
        .map(|c| training_set(c, task, train, matrix, store, None))
        .collect::<Result<_, _>>()?;
    let provenance = Provenance {
        config: plan.variant.to_string(),
        task,
        seed,
    };
    let dims = sets.first().map_or(0, TrainingSet::dimension);
    let n = sel.n.min(dims);
    if n < sel.n {
        log::warn!("{task}: only {dims} features, keeping all of them");
    }
    let ranking = match sel.method {
        RankingMethod::Ert => rank_ert(&sets, &Hyper::new(), provenance)?,
        RankingMethod::Rfe => rank_rfe(&sets, LearnerKind::LogisticRegression, &Hyper::new(), n, provenance)?,
    };
    let selected = select_top_n(&ranking, n)?;
    Ok(Some((ranking, selected)))
}

/// K-fold evaluation of one setting. Feature selection and predictor training
/// only ever see the training folds.
pub fn evaluate(
    setting: &ExperimentSetting,
    questions: &[Question],
    matrix: &PerformanceMatrix,
    registry: &Registry,
    table: Option<&EmbeddingTable>,
) -> Result<Evaluation, BenchError> {
    if setting.needs_embeddings() && table.is_none() {
        return Err(setting_error(setting, "an embedding table is required"));
    }
    let counts = registry.counts();
    let plans: BTreeMap<QaTask, &TaskPlan> = setting
        .tasks
        .iter()
        .filter(|(t, _)| counts.get(t).is_some_and(|n| *n > 0))
        .map(|(t, p)| (*t, p))
        .collect();
    if plans.is_empty() {
        return Err(setting_error(setting, format!("registry `{}` has no components for its tasks", registry.scenario)));
    }
    let configs: BTreeMap<QaTask, FeatureConfig> =
        plans.iter().map(|(t, p)| (*t, FeatureConfig::new(p.variant, *t))).collect();
    let store = FeatureStore::build(questions, &configs, table)?;
    let components: BTreeMap<QaTask, Vec<&str>> = plans
        .keys()
        .map(|t| (*t, registry.components_for(*t).into_iter().map(|c| c.id.as_str()).collect()))
        .collect();

    let ids: Vec<&str> = questions.iter().map(|q| q.id.as_str()).collect();
    let folds = kfold(ids.len(), setting.k, setting.seed)?;
    let mut reports = Vec::with_capacity(folds.len());
    let mut rankings = BTreeMap::new();
    for (f, fold) in folds.iter().enumerate() {
        let train: Vec<&str> = fold.train.iter().map(|&i| ids[i]).collect();
        let test: Vec<&str> = fold.test.iter().map(|&i| ids[i]).collect();
        let mut elapsed = 0.0;
        let mut tasks = BTreeMap::new();
        for (task, plan) in &plans {
            let cands = &components[task];
            let fold_seed = rng::derive_seed(setting.seed, &[&(f as u64).to_le_bytes(), task.as_str().as_bytes()]);
            let train_ids = if setting.balanced {
                balance_by_answerable(&train, matrix, cands, fold_seed)
            } else {
                train.clone()
            };
            let selected = select_features(plan, *task, cands, &train_ids, matrix, &store, fold_seed)?;
            let features = match &selected {
                Some((_, names)) => names.len(),
                None => store.get(train_ids[0], *task)?.len(),
            };
            let setups: TaskSetups = BTreeMap::from([(
                *task,
                TaskSetup {
                    config: configs[task].clone(),
                    kind: plan.kind,
                    hyper: plan.hyper.clone(),
                    selected: selected.as_ref().map(|(_, names)| names.clone()),
                },
            )]);
            if let Some((ranking, _)) = selected {
                if f == 0 {
                    rankings.insert(*task, ranking);
                }
            }

            let start = Instant::now();
            let only_task = task_registry(registry, *task);
            let predictors = train_predictors(&only_task, &train_ids, matrix, &store, &setups, fold_seed)?;
            let mut c = count_task(&test, cands, matrix, |q| {
                let ranked = rank_components(&predictors, store.get(q, *task)?, *task, &only_task)?;
                Ok(ranked.entries.into_iter().map(|(id, _)| id).collect())
            })?;
            elapsed += start.elapsed().as_secs_f64() * 1e3;
            c.features = features;
            tasks.insert(*task, c);
        }
        log::debug!("{} fold {f}: {:.1} ms", setting.name, elapsed);
        reports.push(FoldReport {
            fold: f,
            tasks,
            elapsed_ms: elapsed,
        });
    }
    Ok(Evaluation {
        setting: setting.name.clone(),
        scenario: registry.scenario.clone(),
        aggregate: Aggregate::from_folds(&reports),
        folds: reports,
        rankings,
    })
}

fn task_registry(registry: &Registry, task: QaTask) -> Registry {
    let mut r = Registry::new(registry.scenario.clone());
    for c in registry.components_for(task) {
        r.register(c.clone()).expect("ids are unique in the source registry");
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[(&str, &str, f64)]) -> PerformanceMatrix {
        let mut m = PerformanceMatrix::new();
        for (q, c, f) in rows {
            m.insert(*q, *c, *f).unwrap();
        }
        m
    }

    #[test]
    fn threshold_is_strict() {
        let m = matrix(&[("q1", "a", 0.5), ("q2", "a", 0.51)]);
        assert!(!answerable(&m, "q1", &["a"]));
        assert!(answerable(&m, "q2", &["a"]));
    }

    #[test]
    fn top_n_is_capped_by_the_candidate_count() {
        let m = matrix(&[("q1", "a", 0.0), ("q1", "b", 1.0)]);
        let c = count_task(&["q1"], &["a", "b"], &m, |_| Ok(vec!["a".into(), "b".into()])).unwrap();
        assert_eq!((c.total, c.answerable, c.top1, c.top2, c.top3), (1, 1, 0, 1, 1));
    }

    #[test]
    fn missing_entries_count_as_zero() {
        let m = matrix(&[("q1", "a", 1.0)]);
        let c = count_task(&["q1", "q2"], &["a"], &m, |_| Ok(vec!["a".into()])).unwrap();
        assert_eq!((c.answerable, c.top1), (1, 1));
    }

    #[test]
    fn balancing_evens_the_classes() {
        let ids = ["q1", "q2", "q3", "q4", "q5"];
        let m = matrix(&[("q1", "a", 1.0), ("q2", "a", 0.0), ("q3", "a", 0.0), ("q4", "a", 0.0), ("q5", "a", 0.0)]);
        let b = balance_by_answerable(&ids, &m, &["a"], 7);
        assert_eq!(b.len(), 2);
        assert!(b.contains(&"q1"));
    }
}
