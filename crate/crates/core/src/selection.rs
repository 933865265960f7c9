//! Feature ranking by impurity importance and by recursive elimination.
//!
//! A task has one training set per component (same inputs, different
//! targets); rankings for the task average importances over those sets.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{self, impurity_importance, Hyper, LearnerError, LearnerKind, TrainingSet};
use crate::model::QaTask;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("no training sets to rank features on")]
    NoData,
    #[error("training sets disagree on feature names")]
    FeatureMismatch,
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("ranking csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{n} is outside 1..={len}")]
    OutOfRange { n: usize, len: usize },
    #[error("unknown ranking method `{0}`")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingMethod {
    Ert,
    Rfe,
}

impl fmt::Display for RankingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankingMethod::Ert => "ert",
            RankingMethod::Rfe => "rfe",
        })
    }
}

impl FromStr for RankingMethod {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "ert" => Ok(RankingMethod::Ert),
            "rfe" => Ok(RankingMethod::Rfe),
            _ => Err(SelectionError::UnknownMethod(s.to_string())),
        }
    }
}

/// Where a ranking came from, echoed into its CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: String,
    pub task: QaTask,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub score: f64,
}

/// Features by descending score, ties broken by name ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub method: RankingMethod,
    pub provenance: Provenance,
    pub entries: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn new(method: RankingMethod, provenance: Provenance, scores: Vec<(String, f64)>) -> Self {
        let mut entries: Vec<RankedFeature> = scores
            .into_iter()
            .map(|(feature, score)| RankedFeature { feature, score })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.cmp(&b.feature)));
        FeatureRanking {
            method,
            provenance,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn features(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.feature.as_str()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SelectionError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "feature", "score", "method", "config", "task", "seed"])?;
        for (i, e) in self.entries.iter().enumerate() {
            out.write_record([
                (i + 1).to_string(),
                e.feature.clone(),
                format!("{:.9}", e.score),
                self.method.to_string(),
                self.provenance.config.clone(),
                self.provenance.task.to_string(),
                self.provenance.seed.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<FeatureRanking, SelectionError> {
        #[derive(Deserialize)]
        struct Row {
            feature: String,
            score: f64,
            method: String,
            config: String,
            task: QaTask,
            seed: u64,
        }
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(r).deserialize() {
            let row: Row = rec?;
            rows.push(row);
        }
        let first = rows.first().ok_or(SelectionError::NoData)?;
        let method = first.method.parse()?;
        let provenance = Provenance {
            config: first.config.clone(),
            task: first.task,
            seed: first.seed,
        };
        Ok(FeatureRanking::new(
            method,
            provenance,
            rows.into_iter().map(|r| (r.feature, r.score)).collect(),
        ))
    }
}

/// The first `n` feature names.
pub fn select_top_n(ranking: &FeatureRanking, n: usize) -> Result<Vec<String>, SelectionError> {
    if n == 0 || n > ranking.len() {
        return Err(SelectionError::OutOfRange { n, len: ranking.len() });
    }
    Ok(ranking.entries.iter().take(n).map(|e| e.feature.clone()).collect())
}

fn check_sets(sets: &[TrainingSet]) -> Result<&[String], SelectionError> {
    let first = sets.first().ok_or(SelectionError::NoData)?;
    if sets.iter().any(|s| s.feature_names != first.feature_names) {
        return Err(SelectionError::FeatureMismatch);
    }
    Ok(&first.feature_names)
}

/// Importances of one fitted model; undefined importances become zeros.
fn importance_of(kind: LearnerKind, set: &TrainingSet, hyper: &Hyper, seed: u64) -> Result<Option<Vec<f64>>, SelectionError> {
    let p = learners::train(kind, set, hyper, seed)?;
    if let Some(w) = p.coefficients() {
        return Ok(Some(w.iter().map(|v| v.abs()).collect()));
    }
    match impurity_importance(&p) {
        Ok(v) => Ok(Some(v)),
        Err(LearnerError::NoSplits | LearnerError::NotTreeBased { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn mean_importance(kind: LearnerKind, sets: &[TrainingSet], hyper: &Hyper, seed: u64) -> Result<Vec<f64>, SelectionError> {
    let d = sets[0].dimension();
    let per_set: Vec<Option<Vec<f64>>> = sets
        .par_iter()
        .map(|s| importance_of(kind, s, hyper, seed))
        .collect::<Result<_, _>>()?;
    let defined: Vec<&Vec<f64>> = per_set.iter().flatten().collect();
    if defined.is_empty() {
        log::warn!("{kind}: no informative model among {} training sets, importances are all zero", sets.len());
        return Ok(vec![0.0; d]);
    }
    let mut mean = vec![0.0; d];
    for imp in &defined {
        for (m, v) in mean.iter_mut().zip(imp.iter()) {
            *m += v / defined.len() as f64;
        }
    }
    Ok(mean)
}

/// Ranks by the impurity importance of an extremely randomised trees
/// ensemble, averaged over the sets.
pub fn rank_ert(sets: &[TrainingSet], hyper: &Hyper, provenance: Provenance) -> Result<FeatureRanking, SelectionError> {
    let names = check_sets(sets)?.to_vec();
    let imp = mean_importance(LearnerKind::ExtremelyRandomizedTrees, sets, hyper, provenance.seed)?;
    Ok(FeatureRanking::new(RankingMethod::Ert, provenance, names.into_iter().zip(imp).collect()))
}

/// Recursive feature elimination, one feature per round, until `keep`
/// features remain. The estimator is refitted on the surviving columns each
/// round; the least important feature goes (ties: the lexicographically
/// largest name). Eliminated features score their elimination round
/// (1 = first out); survivors score above every eliminated feature, ordered by
/// their final importance.
pub fn rank_rfe(
    sets: &[TrainingSet],
    estimator: LearnerKind,
    hyper: &Hyper,
    keep: usize,
    provenance: Provenance,
) -> Result<FeatureRanking, SelectionError> {
    let names = check_sets(sets)?.to_vec();
    if keep == 0 || keep > names.len() {
        return Err(SelectionError::OutOfRange { n: keep, len: names.len() });
    }
    let mut alive = names.clone();
    let mut scores: Vec<(String, f64)> = Vec::new();
    let mut round = 0usize;
    loop {
        let projected: Vec<TrainingSet> = sets.iter().map(|s| s.project(&alive).expect("alive names come from the set")).collect();
        let imp = mean_importance(estimator, &projected, hyper, provenance.seed)?;
        if alive.len() <= keep {
            let offset = if round == 0 { 0.0 } else { round as f64 + 1.0 };
            let top = imp.iter().cloned().fold(0.0, f64::max);
            // keep survivors within one unit above the last elimination
            let scale = if offset > 0.0 && top > 0.0 { 1.0 / (top * 2.0) } else { 1.0 };
            scores.extend(alive.into_iter().zip(imp).map(|(n, v)| (n, offset + v * scale)));
            break;
        }
        let worst = (0..alive.len())
            .min_by(|&a, &b| imp[a].total_cmp(&imp[b]).then_with(|| alive[b].cmp(&alive[a])))
            .expect("at least one feature");
        round += 1;
        scores.push((alive.remove(worst), round as f64));
    }
    Ok(FeatureRanking::new(RankingMethod::Rfe, provenance, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config: "CF1".into(),
            task: QaTask::Ned,
            seed: 1,
        }
    }

    #[test]
    fn ties_break_by_name() {
        let r = FeatureRanking::new(
            RankingMethod::Ert,
            prov(),
            vec![("b".into(), 0.5), ("a".into(), 0.5), ("c".into(), 0.9)],
        );
        assert_eq!(r.features(), ["c", "a", "b"]);
        assert!(select_top_n(&r, 10).is_err());
        assert!(select_top_n(&r, 0).is_err());
        assert_eq!(select_top_n(&r, 2).unwrap(), ["c", "a"]);
    }

    #[test]
    fn csv_round_trip() {
        let r = FeatureRanking::new(RankingMethod::Rfe, prov(), vec![("x".into(), 2.0), ("y".into(), 1.0)]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rank,feature,score,method,config,task,seed\n1,x,"));
        assert_eq!(FeatureRanking::read_csv(&buf[..]).unwrap(), r);
    }

    #[test]
    fn rfe_scores_are_strict_and_eliminations_ordered() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 2) as f64, ((i * 7) % 5) as f64, ((i * 3) % 4) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
        let set = TrainingSet::new(x, y, vec!["signal".into(), "n1".into(), "n2".into()]).unwrap();
        let r = rank_rfe(&[set], LearnerKind::LogisticRegression, &Hyper::new(), 1, prov()).unwrap();
        assert_eq!(r.features()[0], "signal");
        let s: Vec<f64> = r.entries.iter().map(|e| e.score).collect();
        assert!(s.windows(2).all(|w| w[0] > w[1]));
    }
}
