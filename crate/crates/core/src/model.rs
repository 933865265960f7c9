//! Domain types shared by every module.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::components::AdapterBinding;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown QA task `{0}`")]
    UnknownTask(String),
    #[error("f-score {value} for ({question}, {component}) is outside [0, 1]")]
    ScoreOutOfRange {
        question: String,
        component: String,
        value: f64,
    },
    #[error("performance matrix csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("performance matrix csv row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A stage of a QA pipeline. Iteration order is the declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QaTask {
    #[serde(rename = "NER")]
    Ner,
    #[serde(rename = "NED")]
    Ned,
    #[serde(rename = "RL")]
    Rl,
    #[serde(rename = "CL")]
    Cl,
    #[serde(rename = "QB")]
    Qb,
}

impl QaTask {
    pub const ALL: [QaTask; 5] = [QaTask::Ner, QaTask::Ned, QaTask::Rl, QaTask::Cl, QaTask::Qb];

    /// Tasks that are evaluated. NER tools are chained with a disambiguator and
    /// therefore count as NED components.
    pub const EVALUATED: [QaTask; 4] = [QaTask::Ned, QaTask::Rl, QaTask::Cl, QaTask::Qb];

    pub fn as_str(self) -> &'static str {
        match self {
            QaTask::Ner => "NER",
            QaTask::Ned => "NED",
            QaTask::Rl => "RL",
            QaTask::Cl => "CL",
            QaTask::Qb => "QB",
        }
    }

    /// The task a component of this task is scored under.
    pub fn scored_as(self) -> QaTask {
        match self {
            QaTask::Ner => QaTask::Ned,
            t => t,
        }
    }
}

impl fmt::Display for QaTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QaTask {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NER" => Ok(QaTask::Ner),
            "NED" => Ok(QaTask::Ned),
            "RL" => Ok(QaTask::Rl),
            "CL" => Ok(QaTask::Cl),
            "QB" => Ok(QaTask::Qb),
            _ => Err(ModelError::UnknownTask(s.to_string())),
        }
    }
}

/// Gold labels of one task for one question.
///
/// For QB the comparable set is `query_triples` (canonical triple patterns);
/// for the linking tasks it is `items` (IRIs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldAnnotation {
    pub task: QaTask,
    pub items: BTreeSet<String>,
    pub query_triples: Option<BTreeSet<String>>,
}

impl GoldAnnotation {
    pub fn new<I, S>(task: QaTask, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let values: Vec<String> = values.into_iter().map(|s| s.as_ref().trim().to_string()).collect();
        if task == QaTask::Qb {
            GoldAnnotation {
                task,
                items: BTreeSet::new(),
                query_triples: Some(canonical_triples(values.iter().map(String::as_str))),
            }
        } else {
            GoldAnnotation {
                task,
                items: values.into_iter().collect(),
                query_triples: None,
            }
        }
    }

    /// The set a component's output is compared against.
    pub fn targets(&self) -> &BTreeSet<String> {
        match (&self.task, &self.query_triples) {
            (QaTask::Qb, Some(triples)) => triples,
            _ => &self.items,
        }
    }
}

/// A natural-language question and its optional gold annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "QuestionRecord", into = "QuestionRecord")]
pub struct Question {
    pub id: String,
    pub text: String,
    pub gold: BTreeMap<QaTask, GoldAnnotation>,
    pub precomputed_pos: Option<Vec<(String, String)>>,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Question {
            id: id.into(),
            text: text.into(),
            gold: BTreeMap::new(),
            precomputed_pos: None,
        }
    }

    pub fn with_gold<I, S>(mut self, task: QaTask, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let task = task.scored_as();
        self.gold.insert(task, GoldAnnotation::new(task, values));
        self
    }

    pub fn gold_for(&self, task: QaTask) -> Option<&GoldAnnotation> {
        self.gold.get(&task.scored_as())
    }
}

/// On-disk shape of a dataset entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuestionRecord {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    gold: BTreeMap<QaTask, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<Vec<(String, String)>>,
}

impl From<QuestionRecord> for Question {
    fn from(r: QuestionRecord) -> Self {
        let gold = r
            .gold
            .into_iter()
            .map(|(task, values)| {
                let task = task.scored_as();
                (task, GoldAnnotation::new(task, values))
            })
            .collect();
        Question {
            id: r.id,
            text: r.text,
            gold,
            precomputed_pos: r.pos,
        }
    }
}

impl From<Question> for QuestionRecord {
    fn from(q: Question) -> Self {
        let gold = q
            .gold
            .into_iter()
            .map(|(task, g)| (task, g.targets().iter().cloned().collect()))
            .collect();
        QuestionRecord {
            id: q.id,
            text: q.text,
            gold,
            pos: q.precomputed_pos,
        }
    }
}

/// Output of one component invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub task: QaTask,
    pub items: BTreeSet<String>,
    pub source_component: String,
    pub latency_ms: f64,
    /// Set when the adapter could not obtain an answer (timeout, bad status, ...).
    #[serde(default)]
    pub failed: bool,
}

impl AnnotationSet {
    pub fn empty(task: QaTask, source: &str) -> Self {
        AnnotationSet {
            task,
            items: BTreeSet::new(),
            source_component: source.to_string(),
            latency_ms: 0.0,
            failed: false,
        }
    }
}

/// A registered implementation of one QA task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub name: String,
    pub task: QaTask,
    pub adapter: AdapterBinding,
}

/// Per (question, component) micro F-score. Missing entries mean "not evaluated".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MatrixEntry>", into = "Vec<MatrixEntry>")]
pub struct PerformanceMatrix {
    entries: BTreeMap<(String, String), f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixEntry {
    question_id: String,
    component_id: String,
    f_score: f64,
}

impl TryFrom<Vec<MatrixEntry>> for PerformanceMatrix {
    type Error = ModelError;

    fn try_from(rows: Vec<MatrixEntry>) -> Result<Self, Self::Error> {
        let mut m = PerformanceMatrix::new();
        for r in rows {
            m.insert(r.question_id, r.component_id, r.f_score)?;
        }
        Ok(m)
    }
}

impl From<PerformanceMatrix> for Vec<MatrixEntry> {
    fn from(m: PerformanceMatrix) -> Self {
        m.entries
            .into_iter()
            .map(|((question_id, component_id), f_score)| MatrixEntry {
                question_id,
                component_id,
                f_score,
            })
            .collect()
    }
}

impl PerformanceMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        question: impl Into<String>,
        component: impl Into<String>,
        f_score: f64,
    ) -> Result<(), ModelError> {
        let (question, component) = (question.into(), component.into());
        if !(0.0..=1.0).contains(&f_score) {
            return Err(ModelError::ScoreOutOfRange {
                question,
                component,
                value: f_score,
            });
        }
        self.entries.insert((question, component), f_score);
        Ok(())
    }

    pub fn get(&self, question: &str, component: &str) -> Option<f64> {
        // BTreeMap<(String,String)> cannot be queried by (&str,&str) without allocating
        self.entries
            .get(&(question.to_string(), component.to_string()))
            .copied()
    }

    /// The stored score, or 0.0 when the pair was never evaluated (usually a
    /// question without gold for the component's task).
    pub fn get_or_zero(&self, question: &str, component: &str) -> f64 {
        match self.get(question, component) {
            Some(f) => f,
            None => {
                log::debug!("no performance entry for ({question}, {component}); using 0.0");
                0.0
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.entries
            .iter()
            .map(|((q, c), f)| (q.as_str(), c.as_str(), *f))
    }

    /// Mean F-score of one component over its evaluated questions.
    pub fn component_mean(&self, component: &str) -> Option<f64> {
        let scores: Vec<f64> = self
            .iter()
            .filter(|(_, c, _)| *c == component)
            .map(|(_, _, f)| f)
            .collect();
        if scores.is_empty() {
            None
        } else {
            Some(scores.iter().sum::<f64>() / scores.len() as f64)
        }
    }

    /// Entries grouped by component id.
    pub fn by_component(&self) -> HashMap<&str, Vec<(&str, f64)>> {
        let mut out: HashMap<&str, Vec<(&str, f64)>> = HashMap::new();
        for (q, c, f) in self.iter() {
            out.entry(c).or_default().push((q, f));
        }
        out
    }

    /// `question_id,component_id,f_score` with six fractional digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["question_id", "component_id", "f_score"])?;
        for (q, c, f) in self.iter() {
            w.write_record([q, c, &format!("{f:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ModelError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["question_id", "component_id", "f_score"] {
            return Err(ModelError::BadRow {
                row: 0,
                message: format!("unexpected header {headers:?}"),
            });
        }
        let mut m = PerformanceMatrix::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let f: f64 = rec[2].trim().parse().map_err(|_| ModelError::BadRow {
                row,
                message: format!("non-numeric f_score `{}`", &rec[2]),
            })?;
            m.insert(&rec[0], &rec[1], f)?;
        }
        Ok(m)
    }
}

/// Normalises triple patterns: terms are whitespace separated, a trailing `.`
/// is dropped and variables are renamed `?v0`, `?v1`, ... in order of first
/// appearance across the whole input.
pub fn canonical_triples<'a, I>(patterns: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut vars: HashMap<String, String> = HashMap::new();
    let mut out = BTreeSet::new();
    for pattern in patterns {
        let terms: Vec<&str> = pattern.split_whitespace().collect();
        // a pattern may hold several triples separated by standalone dots
        for triple in terms.split(|t| *t == ".") {
            if triple.is_empty() {
                continue;
            }
            let renamed: Vec<String> = triple
                .iter()
                .map(|t| {
                    let t = t.trim_end_matches('.');
                    if t.starts_with('?') || t.starts_with('$') {
                        let next = format!("?v{}", vars.len());
                        vars.entry(t[1..].to_string()).or_insert(next).clone()
                    } else {
                        t.to_string()
                    }
                })
                .filter(|t| !t.is_empty())
                .collect();
            out.insert(renamed.join(" "));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateId { index: usize, id: String },
    EmptyText { index: usize, id: String },
    PosMismatch { index: usize, id: String },
    EmptyGold { index: usize, id: String, task: QaTask },
    RelativeIri { index: usize, id: String, task: QaTask, iri: String },
    MalformedTriple { index: usize, id: String, pattern: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { index, id } => write!(f, "row {index}: duplicate id `{id}`"),
            Violation::EmptyText { index, id } => write!(f, "row {index} (`{id}`): empty text"),
            Violation::PosMismatch { index, id } => {
                write!(f, "row {index} (`{id}`): pos tokens do not reproduce the text")
            }
            Violation::EmptyGold { index, id, task } => {
                write!(f, "row {index} (`{id}`): empty {task} gold")
            }
            Violation::RelativeIri { index, id, task, iri } => {
                write!(f, "row {index} (`{id}`): {task} gold `{iri}` is not an absolute IRI")
            }
            Violation::MalformedTriple { index, id, pattern } => {
                write!(f, "row {index} (`{id}`): malformed triple pattern `{pattern}`")
            }
        }
    }
}

/// Checks every question invariant. Violations are returned, never raised.
pub fn validate_dataset(questions: &[Question]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (index, q) in questions.iter().enumerate() {
        let id = q.id.clone();
        if !seen.insert(q.id.as_str()) {
            out.push(Violation::DuplicateId { index, id: id.clone() });
        }
        if q.text.trim().is_empty() {
            out.push(Violation::EmptyText { index, id: id.clone() });
        }
        if let Some(pos) = &q.precomputed_pos {
            let joined: String = pos.iter().flat_map(|(t, _)| t.chars()).filter(|c| !c.is_whitespace()).collect();
            let text: String = q.text.chars().filter(|c| !c.is_whitespace()).collect();
            if joined != text {
                out.push(Violation::PosMismatch { index, id: id.clone() });
            }
        }
        for (task, gold) in &q.gold {
            if gold.targets().is_empty() {
                out.push(Violation::EmptyGold { index, id: id.clone(), task: *task });
            }
            if *task == QaTask::Qb {
                for pattern in gold.targets() {
                    if pattern.split_whitespace().count() != 3 {
                        out.push(Violation::MalformedTriple {
                            index,
                            id: id.clone(),
                            pattern: pattern.clone(),
                        });
                    }
                }
            } else {
                for iri in &gold.items {
                    if !iri.contains(':') {
                        out.push(Violation::RelativeIri {
                            index,
                            id: id.clone(),
                            task: *task,
                            iri: iri.clone(),
                        });
                    }
                }
            }
        }
    }
    out
}
