use std::collections::BTreeSet;

use pipeforge::learners::{
    impurity_importance, kfold, train, FoldPlan, Hyper, LearnerError, LearnerKind, Predictor, TrainingSet,
};
use pipeforge::rng;
use pipeforge::selection::{rank_ert, rank_rfe, select_top_n, Provenance, RankingMethod, SelectionError};
use pipeforge::QaTask;
use proptest::prelude::*;
use rand::Rng;

fn names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{i}")).collect()
}

/// y = 1 when x0 > 0.5, other columns are noise.
fn threshold_set(n: usize, d: usize, seed: u64) -> TrainingSet {
    let mut r = rng::stream(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random::<f64>()).collect()).collect();
    let y = x.iter().map(|row| if row[0] > 0.5 { 1.0 } else { 0.0 }).collect();
    TrainingSet::new(x, y, names(d)).unwrap()
}

fn accuracy(p: &Predictor, set: &TrainingSet) -> f64 {
    let hits = set
        .x
        .iter()
        .zip(&set.y)
        .filter(|(row, y)| (p.predict(row).unwrap() > 0.5) == (**y > 0.5))
        .count();
    hits as f64 / set.len() as f64
}

fn small(kind: LearnerKind) -> Hyper {
    let mut h = Hyper::new();
    match kind {
        LearnerKind::RandomForest | LearnerKind::ExtremelyRandomizedTrees => {
            h.insert("n_trees".into(), 20.0);
        }
        LearnerKind::GradientBoostedTrees => {
            h.insert("n_estimators".into(), 30.0);
        }
        _ => {}
    }
    h
}

#[test]
fn every_learner_fits_a_threshold() {
    let train_set = threshold_set(200, 4, 1);
    let test_set = threshold_set(200, 4, 2);
    for kind in LearnerKind::ALL {
        let p = train(kind, &train_set, &small(kind), 7).unwrap();
        let acc = accuracy(&p, &test_set);
        assert!(acc >= 0.85, "{kind}: held-out accuracy {acc}");
        for row in &test_set.x {
            let v = p.predict(row).unwrap();
            assert!((0.0..=1.0).contains(&v), "{kind}: {v}");
        }
    }
}

#[test]
fn models_survive_a_json_round_trip() {
    let set = threshold_set(80, 3, 3);
    for kind in LearnerKind::ALL {
        let p = train(kind, &set, &small(kind), 11).unwrap();
        let back = Predictor::from_json(&p.to_json().unwrap()).unwrap();
        for row in &set.x {
            assert_eq!(p.predict(row).unwrap(), back.predict(row).unwrap(), "{kind}");
        }
    }
}

#[test]
fn same_seed_same_model() {
    let set = threshold_set(80, 3, 4);
    for kind in [LearnerKind::RandomForest, LearnerKind::ExtremelyRandomizedTrees] {
        let a = train(kind, &set, &small(kind), 5).unwrap();
        let b = train(kind, &set, &small(kind), 5).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = train(kind, &set, &small(kind), 6).unwrap();
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }
}

#[test]
fn decision_tree_memorises_separable_data() {
    let set = TrainingSet::new(
        vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        vec![0.0, 0.0, 1.0, 1.0],
        names(1),
    )
    .unwrap();
    let p = train(LearnerKind::DecisionTree, &set, &Hyper::new(), 0).unwrap();
    let got: Vec<f64> = set.x.iter().map(|r| p.predict(r).unwrap()).collect();
    assert_eq!(got, set.y);
}

#[test]
fn logistic_weights_point_the_right_way() {
    let mut r = rng::stream(9);
    let x: Vec<Vec<f64>> = (0..300).map(|_| vec![r.random::<f64>(), r.random::<f64>()]).collect();
    let y = x.iter().map(|row| if row[0] - row[1] > 0.0 { 1.0 } else { 0.0 }).collect();
    let set = TrainingSet::new(x, y, names(2)).unwrap();
    let p = train(LearnerKind::LogisticRegression, &set, &Hyper::new(), 0).unwrap();
    let w = p.coefficients().unwrap();
    assert!(w[0] > 0.0 && w[1] < 0.0, "{w:?}");
    assert!(accuracy(&p, &set) > 0.95);
}

#[test]
fn constant_targets_give_constant_models() {
    let set = TrainingSet::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1.0; 3], names(1)).unwrap();
    for kind in LearnerKind::ALL {
        let p = train(kind, &set, &small(kind), 0).unwrap();
        let v = p.predict(&[5.0]).unwrap();
        assert!(v > 0.9, "{kind}: {v}");
    }
}

#[test]
fn bad_training_sets_are_rejected() {
    assert!(matches!(
        TrainingSet::new(vec![vec![0.0]], vec![1.5], names(1)),
        Err(LearnerError::BadLabel { row: 0, .. })
    ));
    assert!(matches!(
        TrainingSet::new(vec![vec![0.0], vec![0.0, 1.0]], vec![0.0, 1.0], names(1)),
        Err(LearnerError::Dimension { row: 1, .. })
    ));
    assert!(matches!(
        TrainingSet::new(vec![vec![0.0]], vec![0.0], names(2)),
        Err(LearnerError::Dimension { row: 0, expected: 2, found: 1 })
    ));
    assert!(TrainingSet::new(vec![], vec![], names(1)).is_err());
}

#[test]
fn predictions_check_the_row_width() {
    let p = train(LearnerKind::LogisticRegression, &threshold_set(20, 2, 0), &Hyper::new(), 0).unwrap();
    assert!(p.predict(&[0.1]).is_err());
}

#[test]
fn hyperparameters_are_validated() {
    let lr = LearnerKind::LogisticRegression;
    let one = |k: &str, v: f64| Hyper::from([(k.to_string(), v)]);
    assert!(matches!(lr.resolve_hyper(&one("n_trees", 5.0)), Err(LearnerError::UnknownHyper { .. })));
    assert!(lr.resolve_hyper(&one("learning_rate", 0.0)).is_err());
    assert!(LearnerKind::RandomForest.resolve_hyper(&one("max_features", 1.5)).is_err());
    assert!(LearnerKind::RandomForest.resolve_hyper(&one("n_trees", 0.0)).is_err());
    assert_eq!(LearnerKind::RandomForest.resolve_hyper(&one("n_trees", 7.0)).unwrap()["n_trees"], 7.0);
    assert_eq!("rf".parse::<LearnerKind>().unwrap(), LearnerKind::RandomForest);
    assert_eq!("Extra-Trees".parse::<LearnerKind>().unwrap(), LearnerKind::ExtremelyRandomizedTrees);
    assert!("svm".parse::<LearnerKind>().is_err());
}

#[test]
fn tree_importances_are_normalised() {
    let set = threshold_set(150, 4, 5);
    for kind in [LearnerKind::DecisionTree, LearnerKind::RandomForest, LearnerKind::ExtremelyRandomizedTrees] {
        let p = train(kind, &set, &small(kind), 1).unwrap();
        let imp = impurity_importance(&p).unwrap();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let best = imp.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert_eq!(best, 0, "{kind}: {imp:?}");
    }
    let lr = train(LearnerKind::LogisticRegression, &set, &Hyper::new(), 0).unwrap();
    assert!(matches!(impurity_importance(&lr), Err(LearnerError::NotTreeBased { .. })));
    let flat = TrainingSet::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], names(1)).unwrap();
    let stump = train(LearnerKind::DecisionTree, &flat, &Hyper::new(), 0).unwrap();
    assert!(matches!(impurity_importance(&stump), Err(LearnerError::NoSplits)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kfold_partitions_the_rows(n in 2usize..200, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = BTreeSet::new();
        for f in &folds {
            prop_assert_eq!(f.train.len() + f.test.len(), n);
            let train: BTreeSet<_> = f.train.iter().collect();
            prop_assert!(f.test.iter().all(|i| !train.contains(i)));
            for &i in &f.test {
                prop_assert!(seen.insert(i));
            }
        }
        prop_assert_eq!(seen.len(), n);
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(kfold(n, k, seed).unwrap(), folds);
    }

    #[test]
    fn fold_plans_cover_every_id(n in 3usize..60, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        let plan = FoldPlan::new(&ids, 3, seed).unwrap();
        prop_assert_eq!(plan.assignments.len(), n);
        prop_assert_eq!(plan.fold_sizes().iter().sum::<usize>(), n);
    }
}

#[test]
fn kfold_rejects_bad_counts() {
    assert!(kfold(5, 1, 0).is_err());
    assert!(kfold(3, 4, 0).is_err());
}

fn prov() -> Provenance {
    Provenance {
        config: "CF1".into(),
        task: QaTask::Rl,
        seed: 3,
    }
}

#[test]
fn ert_ranks_the_signal_first() {
    let sets = [threshold_set(200, 5, 1), threshold_set(200, 5, 2)];
    let ranking = rank_ert(&sets, &small(LearnerKind::ExtremelyRandomizedTrees), prov()).unwrap();
    assert_eq!(ranking.method, RankingMethod::Ert);
    assert_eq!(ranking.features()[0], "x0");
    assert_eq!(select_top_n(&ranking, 1).unwrap(), ["x0"]);
}

#[test]
fn ranking_needs_consistent_sets() {
    assert!(matches!(rank_ert(&[], &Hyper::new(), prov()), Err(SelectionError::NoData)));
    let a = threshold_set(20, 2, 0);
    let mut b = a.clone();
    b.feature_names = vec!["p".into(), "q".into()];
    assert!(matches!(rank_ert(&[a.clone(), b], &Hyper::new(), prov()), Err(SelectionError::FeatureMismatch)));
    assert!(rank_rfe(&[a.clone()], LearnerKind::LogisticRegression, &Hyper::new(), 0, prov()).is_err());
    assert!(rank_rfe(&[a], LearnerKind::LogisticRegression, &Hyper::new(), 3, prov()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rfe_keeps_survivors_on_top(d in 2usize..7, keep in 1usize..7, seed in 0u64..1000) {
        prop_assume!(keep <= d);
        let set = threshold_set(60, d, seed);
        let r = rank_rfe(&[set], LearnerKind::LogisticRegression, &Hyper::new(), keep, prov()).unwrap();
        prop_assert_eq!(r.len(), d);
        let scores: Vec<f64> = r.entries.iter().map(|e| e.score).collect();
        prop_assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        // eliminated features score their round: 1..=d-keep
        let mut rounds: Vec<f64> = scores[keep..].to_vec();
        rounds.sort_by(f64::total_cmp);
        let want: Vec<f64> = (1..=d - keep).map(|i| i as f64).collect();
        prop_assert_eq!(rounds, want);
        prop_assert!(scores[..keep].iter().all(|&s| s > (d - keep) as f64 || keep == d));
    }
}
