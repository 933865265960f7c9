use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use pipeforge::bench::{
    answerable, balance_by_answerable, evaluate, evaluate_ranker, generate_synthetic, load_dataset, normalize,
    run_experiment, save_dataset, write_report, Aggregate, BenchError, ExperimentFile, ExperimentSetting, FoldReport,
    Ranker, SettingResult, SyntheticSpec, TaskCounts, SETTING_NAMES,
};
use pipeforge::components::build_matrix;
use pipeforge::learners::kfold;
use pipeforge::model::validate_dataset;
use pipeforge::{PerformanceMatrix, QaTask, Question};
use proptest::prelude::*;

#[test]
fn datasets_round_trip_and_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let qs = vec![
        Question::new("a", "Who wrote Dune?").with_gold(QaTask::Ned, ["dbr:Dune"]),
        Question::new("b", "Where is Lima?").with_gold(QaTask::Qb, ["dbr:Lima dbo:location ?x"]),
    ];
    save_dataset(&qs, &path).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), qs);

    let dup = vec![qs[0].clone(), qs[0].clone()];
    save_dataset(&dup, &path).unwrap();
    let err = load_dataset(&path).unwrap_err().to_string();
    assert!(err.contains("duplicate id `a`"), "{err}");

    fs::write(&path, "[{\"id\": 1}]").unwrap();
    assert!(matches!(load_dataset(&path), Err(BenchError::Parse { .. })));
}

#[test]
fn synthetic_corpora_are_reproducible_and_valid() {
    let (a, ra) = generate_synthetic(&SyntheticSpec::baseline(200, 9)).unwrap();
    let (b, rb) = generate_synthetic(&SyntheticSpec::baseline(200, 9)).unwrap();
    assert_eq!((a.clone(), ra.clone()), (b, rb));
    let (c, _) = generate_synthetic(&SyntheticSpec::baseline(200, 10)).unwrap();
    assert_ne!(a, c);
    assert!(validate_dataset(&a).is_empty());
    assert!(a.iter().all(|q| q.gold_for(QaTask::Ned).is_some() && q.gold_for(QaTask::Qb).is_some()));
    let ids: BTreeSet<&str> = a.iter().map(|q| q.id.as_str()).collect();
    assert_eq!(ids.len(), 200);

    let (_, plus) = generate_synthetic(&SyntheticSpec::plus_new_components(200, 9)).unwrap();
    assert_eq!(plus.len(), ra.len() + 5);
    assert!(ra.iter().all(|c| plus.get(&c.id).is_some()));
    assert!(generate_synthetic(&SyntheticSpec::baseline(0, 9)).is_err());
}

/// Orders candidates by their true F-score (best first) or the reverse.
struct Oracle<'a> {
    matrix: &'a PerformanceMatrix,
    reverse: bool,
    fits: usize,
}

impl Ranker for Oracle<'_> {
    fn fit(&mut self, _fold: usize, _train: &[&str]) -> Result<(), BenchError> {
        self.fits += 1;
        Ok(())
    }

    fn rank(&self, _task: QaTask, q: &str, candidates: &[&str]) -> Result<Vec<String>, BenchError> {
        let mut c: Vec<&str> = candidates.to_vec();
        c.sort_by(|a, b| self.matrix.get_or_zero(q, b).total_cmp(&self.matrix.get_or_zero(q, a)));
        if self.reverse {
            c.reverse();
        }
        Ok(c.into_iter().map(String::from).collect())
    }
}

fn hand_matrix() -> (Vec<String>, PerformanceMatrix) {
    let ids: Vec<String> = (0..30).map(|i| format!("q{i:02}")).collect();
    let mut m = PerformanceMatrix::new();
    for (i, q) in ids.iter().enumerate() {
        m.insert(q.clone(), "a", if i % 3 == 0 { 1.0 } else { 0.0 }).unwrap();
        m.insert(q.clone(), "b", if i % 5 == 0 { 0.8 } else { 0.2 }).unwrap();
        if i % 2 == 0 {
            m.insert(q.clone(), "c", 0.6).unwrap();
        }
    }
    (ids, m)
}

#[test]
fn oracle_ranking_hits_every_answerable_question() {
    let (ids, m) = hand_matrix();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let comps = BTreeMap::from([(QaTask::Ned, vec!["a", "b", "c"])]);
    let mut best = Oracle { matrix: &m, reverse: false, fits: 0 };
    let folds = evaluate_ranker(&refs, &m, &comps, 5, 3, &mut best).unwrap();
    assert_eq!(best.fits, 5);
    let mut worst = Oracle { matrix: &m, reverse: true, fits: 0 };
    let bad = evaluate_ranker(&refs, &m, &comps, 5, 3, &mut worst).unwrap();

    let plan = kfold(ids.len(), 5, 3).unwrap();
    for ((good, bad), fold) in folds.iter().zip(&bad).zip(&plan) {
        let g = &good.tasks[&QaTask::Ned];
        let b = &bad.tasks[&QaTask::Ned];
        let expected = fold.test.iter().filter(|&&i| answerable(&m, &ids[i], &["a", "b", "c"])).count();
        assert_eq!(g.total, fold.test.len());
        assert_eq!(g.answerable, expected);
        assert_eq!(g.top1, expected);
        assert!(b.top1 <= g.top1);
        // three candidates, so top-3 sees them all in any order
        assert_eq!(b.top3, expected);
    }
    // a answers multiples of 3, b multiples of 5, c the even ids
    let answerable_total = (0..30).filter(|i| i % 3 == 0 || i % 5 == 0 || i % 2 == 0).count();
    assert_eq!(folds.iter().map(|f| f.tasks[&QaTask::Ned].answerable).sum::<usize>(), answerable_total);
}

#[test]
fn aggregates_are_fold_means() {
    let fold = |top1, ms| FoldReport {
        fold: 0,
        tasks: BTreeMap::from([(
            QaTask::Rl,
            TaskCounts {
                total: 10,
                answerable: 8,
                top1,
                top2: 7,
                top3: 8,
                features: 28,
            },
        )]),
        elapsed_ms: ms,
    };
    let agg = Aggregate::from_folds(&[fold(4, 10.0), fold(6, 30.0)]);
    let m = &agg.tasks[&QaTask::Rl];
    assert_eq!(agg.folds, 2);
    assert_eq!((m.total, m.top1, m.features), (10.0, 5.0, 28.0));
    assert_eq!(agg.elapsed_ms, 20.0);
}

#[test]
fn normalisation_by_hand() {
    let row = |s: &str, m: &str, v: f64| (s.to_string(), "NED".to_string(), m.to_string(), v);
    let rows = [
        row("A", "top1", 250.4),
        row("B", "top1", 245.2),
        row("A", "features", 28.0),
        row("B", "features", 15.0),
        row("A", "top2", 0.0),
        row("B", "top2", 0.0),
    ];
    let n = normalize(&rows, &["features"]);
    let get = |s: &str, m: &str| n.iter().find(|r| r.setting == s && r.metric == m).unwrap().normalized;
    assert_eq!(get("A", "top1"), 1.0);
    assert!((get("B", "top1") - 245.2 / 250.4).abs() < 1e-12);
    assert!((get("A", "features") - 15.0 / 28.0).abs() < 1e-12);
    assert_eq!(get("B", "features"), 1.0);
    assert_eq!(get("A", "top2"), 1.0);
}

#[test]
fn every_setting_name_resolves() {
    for name in SETTING_NAMES {
        let s = ExperimentSetting::named(name, 10, 42, 15).unwrap();
        assert_eq!(s.name, name);
        assert_eq!(s.tasks.len(), 4, "{name}");
    }
    let err = ExperimentSetting::named("Bogus", 10, 42, 15).unwrap_err().to_string();
    assert!(err.contains("Bogus") && err.contains("2.0-pruned"), "{err}");
}

proptest! {
    #[test]
    fn balancing_keeps_order_and_evens_classes(flags in prop::collection::vec(any::<bool>(), 1..60), seed in any::<u64>()) {
        let ids: Vec<String> = (0..flags.len()).map(|i| format!("q{i:02}")).collect();
        let mut m = PerformanceMatrix::new();
        for (id, &yes) in ids.iter().zip(&flags) {
            m.insert(id.clone(), "a", if yes { 1.0 } else { 0.0 }).unwrap();
        }
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let out = balance_by_answerable(&refs, &m, &["a"], seed);
        let yes = flags.iter().filter(|f| **f).count();
        let no = flags.len() - yes;
        if yes > 0 && no > 0 {
            let kept_yes = out.iter().filter(|q| answerable(&m, q, &["a"])).count();
            prop_assert_eq!(kept_yes, yes.min(no));
            prop_assert_eq!(out.len() - kept_yes, yes.min(no));
        } else {
            prop_assert_eq!(out.len(), flags.len());
        }
        let mut sorted = out.clone();
        sorted.sort();
        prop_assert_eq!(sorted, out);
    }
}

fn small_corpus() -> (Vec<Question>, pipeforge::components::Registry, PerformanceMatrix) {
    let (qs, reg) = generate_synthetic(&SyntheticSpec::baseline(120, 3)).unwrap();
    let m = build_matrix(&reg, &qs, 3, 2).unwrap();
    (qs, reg, m)
}

#[test]
fn evaluation_counts_are_consistent() {
    let (qs, reg, m) = small_corpus();
    for (name, features) in [("Baseline", 28), ("FS", 5)] {
        let setting = ExperimentSetting::named(name, 3, 42, 5).unwrap();
        let e = evaluate(&setting, &qs, &m, &reg, None).unwrap();
        assert_eq!(e.folds.len(), 3);
        for task in [QaTask::Ned, QaTask::Rl, QaTask::Cl, QaTask::Qb] {
            // questions without gold for the task count as unanswerable
            let total: usize = e.folds.iter().map(|f| f.tasks[&task].total).sum();
            assert_eq!(total, qs.len(), "{name} {task}");
            for f in &e.folds {
                let c = &f.tasks[&task];
                assert!(c.top1 <= c.top2 && c.top2 <= c.top3 && c.top3 <= c.answerable && c.answerable <= c.total);
            }
        }
        assert_eq!(e.folds[0].tasks[&QaTask::Ned].features, features);
        assert_eq!(e.rankings.is_empty(), name == "Baseline");
    }
}

#[test]
fn same_folds_for_every_setting() {
    let (qs, reg, m) = small_corpus();
    let run = |name: &str| evaluate(&ExperimentSetting::named(name, 3, 42, 5).unwrap(), &qs, &m, &reg, None).unwrap();
    let (a, b) = (run("Baseline"), run("ML"));
    for (fa, fb) in a.folds.iter().zip(&b.folds) {
        for t in fa.tasks.keys() {
            assert_eq!(fa.tasks[t].total, fb.tasks[t].total);
            assert_eq!(fa.tasks[t].answerable, fb.tasks[t].answerable);
        }
    }
}

#[test]
fn embedding_settings_need_a_table() {
    let (qs, reg, m) = small_corpus();
    let s = ExperimentSetting::named("CF3", 3, 42, 5).unwrap();
    assert!(evaluate(&s, &qs, &m, &reg, None).is_err());
}

#[test]
fn report_files_and_experiment_paths() {
    let (qs, reg, m) = small_corpus();
    let setting = ExperimentSetting::named("FS", 3, 42, 5).unwrap();
    let evaluation = evaluate(&setting, &qs, &m, &reg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let result = SettingResult {
        setting,
        registry_counts: reg.counts(),
        evaluation,
    };
    write_report(&[result], dir.path()).unwrap();
    for f in ["folds.csv", "timing.csv", "aggregate.json", "normalized.csv", "timing_normalized.csv", "tables/FS.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let folds = fs::read_to_string(dir.path().join("folds.csv")).unwrap();
    assert_eq!(folds.lines().count(), 1 + 3 * 4);
    assert!(!fs::read_to_string(dir.path().join("aggregate.json")).unwrap().contains("elapsed"));

    save_dataset(&qs, dir.path().join("data.json")).unwrap();
    reg.save(dir.path().join("base.json")).unwrap();
    let doc = r#"{"dataset": "data.json", "registries": {"baseline": "base.json"}, "settings": ["Baseline"], "k": 3}"#;
    fs::write(dir.path().join("exp.json"), doc).unwrap();
    let file = ExperimentFile::load(dir.path().join("exp.json")).unwrap();
    assert_eq!(file.dataset, dir.path().join("data.json"));
    assert_eq!((file.seed, file.top_n), (42, 15));
    let out = run_experiment(&file, dir.path().join("out"), 1).unwrap();
    assert_eq!(out.results.len(), 1);
    assert!(dir.path().join("out/matrices/baseline.csv").exists());
}
