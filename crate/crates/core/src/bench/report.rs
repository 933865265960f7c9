//! Comparison tables across settings.
//!
//! Timing never appears in `folds.csv`, `aggregate.json`, `normalized.csv` or
//! `tables/`; it lives in `timing.csv` and `timing_normalized.csv` so the
//! deterministic outputs can be compared byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evaluate::{Evaluation, MeanCounts};
use super::settings::ExperimentSetting;
use super::BenchError;
use crate::model::QaTask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub setting: ExperimentSetting,
    pub registry_counts: BTreeMap<QaTask, usize>,
    pub evaluation: Evaluation,
}

/// One metric of one setting next to its share of the best setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRow {
    pub setting: String,
    pub task: String,
    pub metric: String,
    pub value: f64,
    pub normalized: f64,
}

/// Inverse metrics (fewer is better) normalise as `min / value`, the rest as
/// `value / max`, within each (task, metric) group. A group that is all zero
/// normalises to 1.
pub fn normalize(rows: &[(String, String, String, f64)], inverse: &[&str]) -> Vec<NormalizedRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for (_, task, metric, v) in rows {
        groups.entry((task, metric)).or_default().push(*v);
    }
    rows.iter()
        .map(|(setting, task, metric, value)| {
            let vals = &groups[&(task.as_str(), metric.as_str())];
            let normalized = if inverse.contains(&metric.as_str()) {
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                if *value == 0.0 { 1.0 } else { min / value }
            } else {
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if max == 0.0 { 1.0 } else { value / max }
            };
            NormalizedRow {
                setting: setting.clone(),
                task: task.clone(),
                metric: metric.clone(),
                value: *value,
                normalized,
            }
        })
        .collect()
}

fn metric_rows(mean: &MeanCounts) -> [(&'static str, f64); 6] {
    [
        ("total", mean.total),
        ("answerable", mean.answerable),
        ("top1", mean.top1),
        ("top2", mean.top2),
        ("top3", mean.top3),
        ("features", mean.features),
    ]
}

fn safe_name(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

#[derive(Serialize)]
struct AggregateEntry<'a> {
    setting: &'a str,
    scenario: &'a str,
    registry_counts: &'a BTreeMap<QaTask, usize>,
    folds: usize,
    tasks: &'a BTreeMap<QaTask, MeanCounts>,
}

/// Writes every report file under `dir`.
pub fn write_report(results: &[SettingResult], dir: impl AsRef<Path>) -> Result<(), BenchError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("rankings"))?;
    fs::create_dir_all(dir.join("tables"))?;

    let mut folds = csv::Writer::from_path(dir.join("folds.csv")).map_err(csv_err)?;
    folds
        .write_record(["setting", "fold", "task", "total", "answerable", "top1", "top2", "top3", "features"])
        .map_err(csv_err)?;
    let mut timing = csv::Writer::from_path(dir.join("timing.csv")).map_err(csv_err)?;
    timing.write_record(["setting", "fold", "elapsed_ms"]).map_err(csv_err)?;
    for r in results {
        let name = &r.evaluation.setting;
        for f in &r.evaluation.folds {
            for (t, c) in &f.tasks {
                folds
                    .write_record([
                        name.clone(),
                        f.fold.to_string(),
                        t.to_string(),
                        c.total.to_string(),
                        c.answerable.to_string(),
                        c.top1.to_string(),
                        c.top2.to_string(),
                        c.top3.to_string(),
                        c.features.to_string(),
                    ])
                    .map_err(csv_err)?;
            }
            timing
                .write_record([name.clone(), f.fold.to_string(), format!("{:.3}", f.elapsed_ms)])
                .map_err(csv_err)?;
        }
    }
    folds.flush()?;
    timing.flush()?;

    let entries: Vec<AggregateEntry> = results
        .iter()
        .map(|r| AggregateEntry {
            setting: &r.evaluation.setting,
            scenario: &r.evaluation.scenario,
            registry_counts: &r.registry_counts,
            folds: r.evaluation.aggregate.folds,
            tasks: &r.evaluation.aggregate.tasks,
        })
        .collect();
    fs::write(dir.join("aggregate.json"), serde_json::to_string_pretty(&entries)? + "\n")?;

    for (r, entry) in results.iter().zip(&entries) {
        let stem = safe_name(&r.evaluation.setting);
        let mut table = csv::Writer::from_path(dir.join("tables").join(format!("{stem}.csv"))).map_err(csv_err)?;
        table
            .write_record(["task", "total", "answerable", "top1", "top2", "top3", "features"])
            .map_err(csv_err)?;
        for (t, m) in &r.evaluation.aggregate.tasks {
            let mut rec = vec![t.to_string()];
            rec.extend(metric_rows(m).iter().map(|(_, v)| format!("{v:.1}")));
            table.write_record(rec).map_err(csv_err)?;
        }
        table.flush()?;
        fs::write(dir.join("tables").join(format!("{stem}.json")), serde_json::to_string_pretty(entry)? + "\n")?;
        for (t, ranking) in &r.evaluation.rankings {
            let file = fs::File::create(dir.join("rankings").join(format!("{stem}_{t}.csv")))?;
            ranking.write_csv(file)?;
        }
    }

    let mut rows = Vec::new();
    for r in results {
        for (t, m) in &r.evaluation.aggregate.tasks {
            for (metric, v) in metric_rows(m).into_iter().skip(2) {
                rows.push((r.evaluation.setting.clone(), t.to_string(), metric.to_string(), v));
            }
        }
    }
    write_normalized(&normalize(&rows, &["features"]), &dir.join("normalized.csv"))?;

    let time_rows: Vec<_> = results
        .iter()
        .map(|r| (r.evaluation.setting.clone(), "all".to_string(), "elapsed_ms".to_string(), r.evaluation.aggregate.elapsed_ms))
        .collect();
    write_normalized(&normalize(&time_rows, &["elapsed_ms"]), &dir.join("timing_normalized.csv"))?;
    Ok(())
}

fn write_normalized(rows: &[NormalizedRow], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["setting", "task", "metric", "value", "normalized"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.setting.clone(),
            r.task.clone(),
            r.metric.clone(),
            format!("{:.4}", r.value),
            format!("{:.4}", r.normalized),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: &str, v: f64) -> (String, String, String, f64) {
        (s.into(), "NED".into(), "top1".into(), v)
    }

    #[test]
    fn best_setting_is_one() {
        let out = normalize(&[row("a", 245.2), row("b", 250.4)], &[]);
        assert!((out[0].normalized - 245.2 / 250.4).abs() < 1e-12);
        assert_eq!(out[1].normalized, 1.0);
    }

    #[test]
    fn inverse_metrics_favour_the_smaller_value() {
        let rows = vec![
            ("a".into(), "NED".into(), "features".into(), 28.0),
            ("b".into(), "NED".into(), "features".into(), 15.0),
        ];
        let out = normalize(&rows, &["features"]);
        assert!((out[0].normalized - 15.0 / 28.0).abs() < 1e-12);
        assert_eq!(out[1].normalized, 1.0);
    }

    #[test]
    fn single_setting_normalises_to_one() {
        assert_eq!(normalize(&[row("a", 3.0)], &[])[0].normalized, 1.0);
    }
}
