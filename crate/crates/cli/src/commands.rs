use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pipeforge::bench::{
    generate_synthetic, load_dataset, run_experiment, save_dataset, synthetic_embeddings, ExperimentFile,
    SyntheticSpec, SCENARIO_BASELINE, SCENARIO_NEW,
};
use pipeforge::components::{build_matrix, with_jobs, Registry};
use pipeforge::features::{extract as extract_features, EmbeddingTable, FeatureConfig, FeatureVariant};
use pipeforge::learners::{Hyper, LearnerKind, TrainingSet};
use pipeforge::optimiser::{
    compose, execute, rank_components, train_predictors, training_set, FeatureStore, Goal, ModelBundle, TaskSetup,
    TaskSetups,
};
use pipeforge::selection::{rank_ert, rank_rfe, select_top_n, FeatureRanking, Provenance, RankingMethod};
use pipeforge::{rng, PerformanceMatrix, QaTask, Question};
use serde::Serialize;

use crate::{AnswerArgs, ExperimentArgs, ExtractArgs, MatrixArgs, SelectArgs, SynthArgs, TrainArgs, TrainingInputs};

/// Writes to stdout; a reader that went away early is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    args: &'a T,
}

fn echo<T: Serialize>(out: &Path, command: &str, seed: u64, args: &T) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let text = serde_json::to_string_pretty(&Echo { command, seed, args })?;
    fs::write(out.join("config.json"), text + "\n")?;
    Ok(())
}

fn load_table(path: Option<&Path>) -> Result<Option<EmbeddingTable>> {
    path.map(|p| EmbeddingTable::load(p).with_context(|| format!("loading embeddings {}", p.display())))
        .transpose()
}

fn load_registry(path: &Path) -> Result<Registry> {
    Registry::load(path).with_context(|| format!("loading registry {}", path.display()))
}

fn load_matrix(inputs: &TrainingInputs, registry: &Registry, questions: &[Question], seed: u64, jobs: usize) -> Result<PerformanceMatrix> {
    match &inputs.matrix {
        Some(p) => {
            let file = fs::File::open(p).with_context(|| format!("opening matrix {}", p.display()))?;
            Ok(PerformanceMatrix::read_csv(file)?)
        }
        None => Ok(build_matrix(registry, questions, seed, jobs)?),
    }
}

fn parse_pairs<V>(pairs: &[String], what: &str, value: impl Fn(&str) -> Result<V>) -> Result<BTreeMap<QaTask, V>> {
    pairs
        .iter()
        .map(|p| {
            let (t, v) = p.split_once('=').ok_or_else(|| anyhow!("{what} `{p}` is not TASK=VALUE"))?;
            let task: QaTask = t.parse()?;
            Ok((task.scored_as(), value(v.trim())?))
        })
        .collect()
}

pub fn extract(a: &ExtractArgs) -> Result<()> {
    if a.config.needs_embeddings() && a.embeddings.is_none() {
        bail!("{} needs an embedding table; pass --embeddings", a.config);
    }
    let questions = load_dataset(&a.dataset)?;
    let table = load_table(a.embeddings.as_deref())?;
    let mut cfg = FeatureConfig::new(a.config, a.task);
    cfg.max_tokens = a.max_tokens;
    if let Some(p) = &a.embeddings {
        cfg = cfg.with_embeddings(p);
    }
    echo(&a.out, "extract", a.common.seed(), a)?;
    let dim = table.as_ref().map_or(0, EmbeddingTable::dimension);
    let mut w = csv::Writer::from_path(a.out.join("features.csv"))?;
    let mut header = vec!["id".to_string()];
    header.extend(cfg.feature_names(dim));
    w.write_record(&header)?;
    for q in &questions {
        let fv = extract_features(q, &cfg, table.as_ref())?;
        let mut row = vec![q.id.clone()];
        row.extend(fv.values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    log::info!("{} rows x {} features", questions.len(), header.len() - 1);
    Ok(())
}

pub fn matrix(a: &MatrixArgs) -> Result<()> {
    let questions = load_dataset(&a.dataset)?;
    let registry = load_registry(&a.registry)?;
    echo(&a.out, "matrix", a.common.seed(), a)?;
    let m = build_matrix(&registry, &questions, a.common.seed(), a.common.jobs)?;
    m.write_csv(fs::File::create(a.out.join("matrix.csv"))?)?;
    log::info!("{} entries for {} components", m.len(), registry.len());
    Ok(())
}

pub fn experiment(a: &ExperimentArgs) -> Result<()> {
    let mut file = ExperimentFile::load(&a.file)?;
    if !a.settings.is_empty() {
        file.settings = a.settings.clone();
    }
    if let Some(seed) = a.common.seed {
        file.seed = seed;
    }
    if let Some(k) = a.k {
        file.k = k;
    }
    if let Some(n) = a.top_n {
        file.top_n = n;
    }
    file.binarize_labels |= a.binarize_labels;
    file.balanced |= a.balanced;
    let outcome = run_experiment(&file, &a.out, a.common.jobs)?;
    let mut table = format!(
        "{:<12} {:<4} {:>8} {:>10} {:>8} {:>8} {:>8}\n",
        "setting", "task", "total", "answerable", "top1", "top2", "top3"
    );
    for r in &outcome.results {
        for (t, m) in &r.evaluation.aggregate.tasks {
            table += &format!(
                "{:<12} {:<4} {:>8.1} {:>10.1} {:>8.1} {:>8.1} {:>8.1}\n",
                r.evaluation.setting, t, m.total, m.answerable, m.top1, m.top2, m.top3
            );
        }
    }
    emit(&table)?;
    log::info!("results in {}", a.out.display());
    Ok(())
}

/// Training sets of every component of `task` over all questions.
fn task_sets(
    registry: &Registry,
    task: QaTask,
    ids: &[&str],
    matrix: &PerformanceMatrix,
    store: &FeatureStore,
) -> Result<Vec<TrainingSet>> {
    registry
        .components_for(task)
        .iter()
        .map(|c| Ok(training_set(&c.id, task, ids, matrix, store, None)?))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn rank_task(
    sets: &[TrainingSet],
    method: RankingMethod,
    estimator: LearnerKind,
    top_n: usize,
    config: FeatureVariant,
    task: QaTask,
    seed: u64,
) -> Result<(FeatureRanking, Vec<String>)> {
    let provenance = Provenance {
        config: config.to_string(),
        task,
        seed,
    };
    let ranking = match method {
        RankingMethod::Ert => rank_ert(sets, &Hyper::new(), provenance)?,
        RankingMethod::Rfe => rank_rfe(sets, estimator, &Hyper::new(), top_n, provenance)?,
    };
    let selected = select_top_n(&ranking, top_n)?;
    Ok((ranking, selected))
}

fn embedding_config(variant: FeatureVariant, task: QaTask, embeddings: Option<&Path>) -> Result<FeatureConfig> {
    let cfg = FeatureConfig::new(variant, task);
    match (variant.needs_embeddings(), embeddings) {
        (false, _) => Ok(cfg),
        (true, None) => bail!("{variant} for {task} needs an embedding table; pass --embeddings"),
        (true, Some(p)) => {
            let abs: PathBuf = fs::canonicalize(p).with_context(|| format!("embeddings {}", p.display()))?;
            Ok(cfg.with_embeddings(abs))
        }
    }
}

pub fn select_features(a: &SelectArgs) -> Result<()> {
    let (seed, jobs) = (a.common.seed(), a.common.jobs);
    let questions = load_dataset(&a.inputs.dataset)?;
    let registry = load_registry(&a.inputs.registry)?;
    let task = a.task.scored_as();
    if registry.components_for(task).is_empty() {
        bail!("registry has no {task} components");
    }
    let cfg = embedding_config(a.config, task, a.inputs.embeddings.as_deref())?;
    let table = load_table(a.inputs.embeddings.as_deref())?;
    echo(&a.out, "select-features", seed, a)?;
    let matrix = load_matrix(&a.inputs, &registry, &questions, seed, jobs)?;
    let store = FeatureStore::build(&questions, &BTreeMap::from([(task, cfg)]), table.as_ref())?;
    let ids: Vec<&str> = questions.iter().map(|q| q.id.as_str()).collect();
    let sets = task_sets(&registry, task, &ids, &matrix, &store)?;
    let (ranking, selected) =
        with_jobs(jobs, || rank_task(&sets, a.method, a.estimator, a.top_n, a.config, task, seed))?;
    ranking.write_csv(fs::File::create(a.out.join(format!("ranking_{task}.csv")))?)?;
    fs::write(a.out.join("selected.txt"), selected.join("\n") + "\n")?;
    let listing: String = selected.iter().enumerate().map(|(i, name)| format!("{:>3} {name}\n", i + 1)).collect();
    emit(&listing)?;
    Ok(())
}

fn parse_hyper(pairs: &[String]) -> Result<Vec<(String, f64)>> {
    pairs
        .iter()
        .map(|p| {
            let (n, v) = p.split_once('=').ok_or_else(|| anyhow!("hyperparameter `{p}` is not NAME=VALUE"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("hyperparameter `{p}`"))?;
            Ok((n.trim().to_string(), v))
        })
        .collect()
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let (seed, jobs) = (a.common.seed(), a.common.jobs);
    let questions = load_dataset(&a.inputs.dataset)?;
    let registry = load_registry(&a.inputs.registry)?;
    let learners = parse_pairs(&a.task_learner, "--task-learner", |v| Ok(v.parse::<LearnerKind>()?))?;
    let configs = parse_pairs(&a.task_config, "--task-config", |v| Ok(v.parse::<FeatureVariant>()?))?;
    let overrides = parse_hyper(&a.hyper)?;

    let mut setups = TaskSetups::new();
    for task in registry.tasks() {
        let kind = learners.get(&task).copied().unwrap_or(a.learner);
        let variant = configs.get(&task).copied().unwrap_or(a.config);
        let mut setup = TaskSetup::new(embedding_config(variant, task, a.inputs.embeddings.as_deref())?, kind);
        let defaults = kind.default_hyper();
        for (name, value) in &overrides {
            if defaults.contains_key(name) {
                setup.hyper.insert(name.clone(), *value);
            }
        }
        if a.binarize_labels && kind.is_tree_based() {
            setup.hyper.insert("binarize_labels".into(), 1.0);
        }
        setups.insert(task, setup);
    }
    for (name, _) in &overrides {
        if !setups.values().any(|s| s.kind.default_hyper().contains_key(name)) {
            bail!("no selected learner takes hyperparameter `{name}`");
        }
    }
    let table = load_table(a.inputs.embeddings.as_deref())?;
    echo(&a.out, "train", seed, a)?;
    let matrix = load_matrix(&a.inputs, &registry, &questions, seed, jobs)?;
    let configs: BTreeMap<QaTask, FeatureConfig> = setups.iter().map(|(t, s)| (*t, s.config.clone())).collect();
    let store = FeatureStore::build(&questions, &configs, table.as_ref())?;
    let ids: Vec<&str> = questions.iter().map(|q| q.id.as_str()).collect();

    if let Some(n) = a.top_n {
        fs::create_dir_all(a.out.join("rankings"))?;
        for (task, setup) in setups.iter_mut() {
            let sets = task_sets(&registry, *task, &ids, &matrix, &store)?;
            let task_seed = rng::derive_seed(seed, &[task.as_str().as_bytes()]);
            let (ranking, selected) = with_jobs(jobs, || {
                rank_task(&sets, a.method, LearnerKind::LogisticRegression, n, setup.config.variant, *task, task_seed)
            })?;
            ranking.write_csv(fs::File::create(a.out.join("rankings").join(format!("{task}.csv")))?)?;
            setup.selected = Some(selected);
        }
    }

    let predictors = with_jobs(jobs, || train_predictors(&registry, &ids, &matrix, &store, &setups, seed))?;
    log::info!("trained {} predictors", predictors.len());
    ModelBundle {
        setups,
        predictors,
        seed,
    }
    .save(&a.out)?;
    Ok(())
}

pub fn answer(a: &AnswerArgs) -> Result<()> {
    let text = a.question.trim();
    if text.is_empty() {
        bail!("the question is empty");
    }
    let bundle = ModelBundle::load(&a.model)
        .with_context(|| format!("model artifacts missing or unreadable in {}", a.model.display()))?;
    let registry = load_registry(&a.registry)?;
    let tasks: Vec<QaTask> = if a.goal.is_empty() {
        [QaTask::Ned, QaTask::Rl, QaTask::Cl, QaTask::Qb]
            .into_iter()
            .filter(|t| bundle.setups.contains_key(t))
            .collect()
    } else {
        a.goal.clone()
    };
    let mut goal = Goal::new(tasks)?;
    for (task, k) in parse_pairs(&a.k, "--k", |v| Ok(v.parse::<usize>()?))? {
        goal = goal.with_k(task, k);
    }

    let source = a.embeddings.clone().or_else(|| {
        goal.tasks
            .iter()
            .filter_map(|t| bundle.setups.get(t))
            .find_map(|s| s.config.embedding_source.clone())
    });
    let table = load_table(source.as_deref())?;
    let question = Question::new("input", text);
    let mut rankings = BTreeMap::new();
    for &task in &goal.tasks {
        let setup = bundle
            .setups
            .get(&task)
            .ok_or_else(|| anyhow!("the model has no predictors for {task}"))?;
        let fv = extract_features(&question, &setup.config, table.as_ref())?;
        rankings.insert(task, rank_components(&bundle.predictors, &fv, task, &registry)?);
    }
    let plans = compose(&goal, &rankings)?;
    let plan = &plans[0];
    let execution = execute(plan, &question, &registry, a.common.seed(), a.fallback)?;
    let doc = serde_json::json!({
        "question": text,
        "seed": a.common.seed(),
        "plans": plans.len(),
        "plan": plan,
        "execution": execution,
        "sparql": execution.sparql,
    });
    let rendered = serde_json::to_string_pretty(&doc)? + "\n";
    if let Some(out) = &a.out {
        echo(out, "answer", a.common.seed(), a)?;
        fs::write(out.join("answer.json"), &rendered)?;
    }
    emit(&rendered)
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let seed = a.common.seed();
    echo(&a.out, "synth", seed, a)?;
    let (questions, baseline) = generate_synthetic(&SyntheticSpec::baseline(a.questions, seed))?;
    let (_, plus) = generate_synthetic(&SyntheticSpec::plus_new_components(a.questions, seed))?;
    save_dataset(&questions, a.out.join("dataset.json"))?;
    baseline.save(a.out.join(format!("{SCENARIO_BASELINE}.json")))?;
    plus.save(a.out.join(format!("{SCENARIO_NEW}.json")))?;
    let table = synthetic_embeddings(&questions, a.embedding_dim, seed)?;
    table.write_text(fs::File::create(a.out.join("embeddings.txt"))?)?;
    let file = ExperimentFile {
        dataset: "dataset.json".into(),
        registries: BTreeMap::from([
            (SCENARIO_BASELINE.to_string(), format!("{SCENARIO_BASELINE}.json").into()),
            (SCENARIO_NEW.to_string(), format!("{SCENARIO_NEW}.json").into()),
        ]),
        embeddings: Some("embeddings.txt".into()),
        settings: ["Baseline", "F", "FS", "NC", "FS+NC", "ML", "FS+NC+ML", "2.0-pruned"]
            .map(String::from)
            .to_vec(),
        k: 10,
        seed,
        top_n: pipeforge::bench::DEFAULT_TOP_N,
        binarize_labels: false,
        balanced: false,
    };
    fs::write(a.out.join("experiment.json"), serde_json::to_string_pretty(&file)? + "\n")?;
    log::info!(
        "{} questions, {} baseline and {} extended components in {}",
        questions.len(),
        baseline.len(),
        plus.len(),
        a.out.display()
    );
    Ok(())
}
