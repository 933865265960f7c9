//! Running a list of named settings end to end.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluate::evaluate;
use super::report::{write_report, SettingResult};
use super::settings::{ExperimentSetting, DEFAULT_TOP_N, SCENARIO_BASELINE, SCENARIO_NEW, SCENARIO_PRUNED};
use super::{load_dataset, BenchError};
use crate::components::{build_matrix, with_jobs, Registry};
use crate::features::EmbeddingTable;
use crate::model::{PerformanceMatrix, QaTask};

fn default_k() -> usize {
    10
}

fn default_seed() -> u64 {
    42
}

fn default_top_n() -> usize {
    DEFAULT_TOP_N
}

/// Experiment description. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub dataset: PathBuf,
    /// Scenario name to registry file.
    pub registries: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    pub settings: Vec<String>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default)]
    pub binarize_labels: bool,
    #[serde(default)]
    pub balanced: bool,
}

impl ExperimentFile {
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentFile, BenchError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut file: ExperimentFile =
            serde_json::from_str(&text).map_err(|e| BenchError::Experiment(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.resolve_paths(base);
        Ok(file)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.dataset);
        self.registries.values_mut().for_each(join);
        if let Some(e) = self.embeddings.as_mut() {
            join(e);
        }
    }

    /// Every setting resolved, failing on the first unknown name.
    pub fn resolve_settings(&self) -> Result<Vec<ExperimentSetting>, BenchError> {
        self.settings
            .iter()
            .map(|name| {
                let mut s = ExperimentSetting::named(name, self.k, self.seed, self.top_n)?;
                if self.binarize_labels {
                    s = s.binarize_tree_labels();
                }
                s.balanced = self.balanced;
                Ok(s)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub results: Vec<SettingResult>,
}

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    file: &'a ExperimentFile,
    jobs: usize,
    settings: &'a [ExperimentSetting],
}

/// Registries already scored on the dataset, keyed by scenario.
struct Scored {
    registry: Registry,
    matrix: PerformanceMatrix,
}

/// Keeps the best 5 NED and 3 RL components by mean F of the full
/// plus-new-components scenario; CL and QB are kept whole.
const PRUNE_KEEP: [(QaTask, usize); 2] = [(QaTask::Ned, 5), (QaTask::Rl, 3)];

/// Runs every setting of `file` and writes the report to `out`.
pub fn run_experiment(file: &ExperimentFile, out: impl AsRef<Path>, jobs: usize) -> Result<ExperimentOutcome, BenchError> {
    let out = out.as_ref();
    let settings = file.resolve_settings()?;
    fs::create_dir_all(out)?;
    let config = ResolvedConfig {
        file,
        jobs,
        settings: &settings,
    };
    fs::write(out.join("config.json"), serde_json::to_string_pretty(&config)? + "\n")?;

    let questions = load_dataset(&file.dataset)?;
    let table = match &file.embeddings {
        Some(p) => Some(EmbeddingTable::load(p)?),
        None => None,
    };
    log::info!("{} questions, {} settings", questions.len(), settings.len());

    let mut scored: BTreeMap<String, Scored> = BTreeMap::new();
    for setting in &settings {
        if !scored.contains_key(&setting.scenario) {
            let s = score_scenario(&setting.scenario, file, &questions, &mut scored, jobs)?;
            fs::create_dir_all(out.join("matrices"))?;
            s.matrix
                .write_csv(fs::File::create(out.join("matrices").join(format!("{}.csv", setting.scenario)))?)?;
            scored.insert(setting.scenario.clone(), s);
        }
    }

    let mut results = Vec::with_capacity(settings.len());
    for setting in &settings {
        let s = &scored[&setting.scenario];
        log::info!("running {} on {}", setting.name, setting.scenario);
        let evaluation = with_jobs(jobs, || evaluate(setting, &questions, &s.matrix, &s.registry, table.as_ref()))
            .map_err(|e| match e {
                e @ BenchError::Setting { .. } => e,
                other => BenchError::Setting {
                    setting: setting.name.clone(),
                    message: other.to_string(),
                },
            })?;
        results.push(SettingResult {
            setting: setting.clone(),
            registry_counts: s.registry.counts(),
            evaluation,
        });
    }
    write_report(&results, out)?;
    Ok(ExperimentOutcome { results })
}

fn score_scenario(
    scenario: &str,
    file: &ExperimentFile,
    questions: &[crate::model::Question],
    scored: &mut BTreeMap<String, Scored>,
    jobs: usize,
) -> Result<Scored, BenchError> {
    if scenario == SCENARIO_PRUNED && !file.registries.contains_key(SCENARIO_PRUNED) {
        let source = if file.registries.contains_key(SCENARIO_NEW) { SCENARIO_NEW } else { SCENARIO_BASELINE };
        if !scored.contains_key(source) {
            let s = score_scenario(source, file, questions, scored, jobs)?;
            scored.insert(source.to_string(), s);
        }
        let full = &scored[source];
        let registry = full.registry.prune_by_mean(&full.matrix, &PRUNE_KEEP, SCENARIO_PRUNED);
        let counts = registry.counts();
        log::info!(
            "pruned registry: NED={} RL={} CL={} QB={}",
            counts.get(&QaTask::Ned).unwrap_or(&0),
            counts.get(&QaTask::Rl).unwrap_or(&0),
            counts.get(&QaTask::Cl).unwrap_or(&0),
            counts.get(&QaTask::Qb).unwrap_or(&0)
        );
        return Ok(Scored {
            registry,
            matrix: full.matrix.clone(),
        });
    }
    let path = file.registries.get(scenario).ok_or_else(|| {
        BenchError::Experiment(format!("no registry file for scenario `{scenario}`"))
    })?;
    let mut registry = Registry::load(path)?;
    registry.scenario = scenario.to_string();
    let matrix = build_matrix(&registry, questions, file.seed, jobs)?;
    log::info!("scenario {scenario}: {} components, {} matrix entries", registry.len(), matrix.len());
    Ok(Scored { registry, matrix })
}
