//! Named experiment settings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::features::FeatureVariant;
use crate::learners::{Hyper, LearnerKind};
use crate::model::QaTask;
use crate::selection::RankingMethod;

pub const DEFAULT_TOP_N: usize = 15;

pub const SETTING_NAMES: [&str; 14] = [
    "Baseline", "CF1", "CF2", "CF3", "CF4", "CF5", "CF6", "F", "FS", "NC", "FS+NC", "ML", "FS+NC+ML", "2.0-pruned",
];

pub const SCENARIO_BASELINE: &str = "baseline";
pub const SCENARIO_NEW: &str = "plus-new-components";
pub const SCENARIO_PRUNED: &str = "pruned-5-3";

/// Top-N feature selection on the training folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub method: RankingMethod,
    pub n: usize,
}

/// How one task is featurised, selected and learned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub variant: FeatureVariant,
    pub kind: LearnerKind,
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
}

impl TaskPlan {
    pub fn new(variant: FeatureVariant, kind: LearnerKind) -> Self {
        TaskPlan {
            variant,
            kind,
            hyper: Hyper::new(),
            selection: None,
        }
    }

    pub fn select(mut self, method: RankingMethod, n: usize) -> Self {
        self.selection = Some(Selection { method, n });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetting {
    pub name: String,
    pub scenario: String,
    pub tasks: BTreeMap<QaTask, TaskPlan>,
    pub k: usize,
    pub seed: u64,
    /// Downsample training rows so answerable and unanswerable are even.
    #[serde(default)]
    pub balanced: bool,
}

fn all_tasks(plan: impl Fn(QaTask) -> TaskPlan) -> BTreeMap<QaTask, TaskPlan> {
    QaTask::EVALUATED.iter().map(|t| (*t, plan(*t))).collect()
}

impl ExperimentSetting {
    /// The same plan for every evaluated task.
    pub fn uniform(name: &str, scenario: &str, plan: TaskPlan, k: usize, seed: u64) -> Self {
        ExperimentSetting {
            name: name.to_string(),
            scenario: scenario.to_string(),
            tasks: all_tasks(|_| plan.clone()),
            k,
            seed,
            balanced: false,
        }
    }

    /// Resolves one of [`SETTING_NAMES`].
    pub fn named(name: &str, k: usize, seed: u64, top_n: usize) -> Result<Self, BenchError> {
        use FeatureVariant::*;
        use LearnerKind::{LogisticRegression as Lr, RandomForest as Rf};
        let lr = |v| TaskPlan::new(v, Lr);
        let ert = RankingMethod::Ert;
        // CF2 for entities, mean embeddings for relations, CF2 elsewhere
        let tuned = |t: QaTask, kind_ned_rl: LearnerKind| {
            let kind = if matches!(t, QaTask::Ned | QaTask::Rl) { kind_ned_rl } else { Lr };
            let variant = if t == QaTask::Rl { CF3 } else { CF2 };
            TaskPlan::new(variant, kind).select(ert, top_n)
        };
        let setting = match name {
            "Baseline" => Self::uniform(name, SCENARIO_BASELINE, lr(CF1), k, seed),
            "CF1" | "CF2" | "CF3" | "CF4" | "CF5" | "CF6" => {
                let v: FeatureVariant = name.parse()?;
                Self::uniform(name, SCENARIO_BASELINE, lr(v), k, seed)
            }
            "F" => Self::uniform(name, SCENARIO_BASELINE, lr(CF2), k, seed),
            "FS" => Self::uniform(name, SCENARIO_BASELINE, lr(CF2).select(ert, top_n), k, seed),
            "NC" => Self::uniform(name, SCENARIO_NEW, lr(CF1), k, seed),
            "FS+NC" => ExperimentSetting {
                tasks: all_tasks(|t| tuned(t, Lr)),
                ..Self::uniform(name, SCENARIO_NEW, lr(CF1), k, seed)
            },
            "ML" => ExperimentSetting {
                tasks: all_tasks(|t| TaskPlan::new(CF1, if matches!(t, QaTask::Ned | QaTask::Rl) { Rf } else { Lr })),
                ..Self::uniform(name, SCENARIO_BASELINE, lr(CF1), k, seed)
            },
            "FS+NC+ML" => ExperimentSetting {
                tasks: all_tasks(|t| tuned(t, Rf)),
                ..Self::uniform(name, SCENARIO_NEW, lr(CF1), k, seed)
            },
            "2.0-pruned" => ExperimentSetting {
                tasks: all_tasks(|t| tuned(t, Rf)),
                ..Self::uniform(name, SCENARIO_PRUNED, lr(CF1), k, seed)
            },
            _ => {
                return Err(BenchError::UnknownSetting {
                    name: name.to_string(),
                    valid: SETTING_NAMES.join(", "),
                })
            }
        };
        Ok(setting)
    }

    /// Regress trees on binarised labels instead of raw F-scores.
    pub fn binarize_tree_labels(mut self) -> Self {
        for plan in self.tasks.values_mut() {
            if plan.kind.is_tree_based() {
                plan.hyper.insert("binarize_labels".into(), 1.0);
            }
        }
        self
    }

    pub fn needs_embeddings(&self) -> bool {
        self.tasks.values().any(|p| p.variant.needs_embeddings())
    }
}
