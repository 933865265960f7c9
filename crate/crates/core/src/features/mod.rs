//! Question feature extraction under the six configurations `CF1`..`CF6`.
//!
//! | config | content                                                        |
//! |--------|----------------------------------------------------------------|
//! | CF1    | question type (8), answer type (5), word count, 14 POS counts  |
//! | CF2    | CF1 + 6 character-case dims + 17 entity-type counts (not NED)  |
//! | CF3    | mean word embedding over non-punctuation tokens                |
//! | CF4    | per-token embeddings, padded/truncated to `max_tokens`         |
//! | CF5    | CF3 after stop-word removal                                    |
//! | CF6    | CF1 followed by CF3                                            |

mod embeddings;
mod lexicon;
mod pos;
mod tokenize;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{QaTask, Question};

pub use embeddings::EmbeddingTable;
pub use lexicon::{is_stopword, stopwords, Gazetteer, ENTITY_TYPES};
pub use pos::{pos_tag, PosTag};
pub use tokenize::{is_punctuation, tokenize};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty input")]
    EmptyInput,
    #[error("{tags} precomputed tags for {tokens} tokens")]
    TagCountMismatch { tokens: usize, tags: usize },
    #[error("{config} needs an embedding table")]
    MissingEmbeddings { config: FeatureVariant },
    #[error("embedding line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("embedding line {line}: {message}")]
    EmbeddingFormat { line: usize, message: String },
    #[error("unknown feature configuration `{0}`")]
    UnknownConfig(String),
    #[error("feature `{0}` is not part of this vector")]
    UnknownFeature(String),
    #[error("question `{id}`: {source}")]
    Question {
        id: String,
        #[source]
        source: Box<FeatureError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureVariant {
    CF1,
    CF2,
    CF3,
    CF4,
    CF5,
    CF6,
}

impl FeatureVariant {
    pub const ALL: [FeatureVariant; 6] = [
        FeatureVariant::CF1,
        FeatureVariant::CF2,
        FeatureVariant::CF3,
        FeatureVariant::CF4,
        FeatureVariant::CF5,
        FeatureVariant::CF6,
    ];

    pub fn needs_embeddings(self) -> bool {
        !matches!(self, FeatureVariant::CF1 | FeatureVariant::CF2)
    }
}

impl fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for FeatureVariant {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureVariant::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FeatureError::UnknownConfig(s.to_string()))
    }
}

pub const DEFAULT_MAX_TOKENS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub variant: FeatureVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_source: Option<PathBuf>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    pub for_task: QaTask,
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS
}

impl FeatureConfig {
    pub fn new(variant: FeatureVariant, for_task: QaTask) -> Self {
        FeatureConfig {
            variant,
            embedding_source: None,
            max_tokens: DEFAULT_MAX_TOKENS,
            for_task,
        }
    }

    pub fn with_embeddings(mut self, path: impl Into<PathBuf>) -> Self {
        self.embedding_source = Some(path.into());
        self
    }

    fn includes_entity_types(&self) -> bool {
        self.for_task.scored_as() != QaTask::Ned
    }

    /// Output dimensionality given the embedding dimension (ignored by CF1/CF2).
    pub fn dimension(&self, embedding_dim: usize) -> usize {
        match self.variant {
            FeatureVariant::CF1 => BASIC_DIMS,
            FeatureVariant::CF2 => {
                BASIC_DIMS + CASE_DIMS + if self.includes_entity_types() { ENTITY_TYPES.len() } else { 0 }
            }
            FeatureVariant::CF3 | FeatureVariant::CF5 => embedding_dim,
            FeatureVariant::CF4 => embedding_dim * self.max_tokens,
            FeatureVariant::CF6 => BASIC_DIMS + embedding_dim,
        }
    }

    /// Dimension names, stable for a fixed configuration.
    pub fn feature_names(&self, embedding_dim: usize) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dimension(embedding_dim));
        let emb = |prefix: &str, names: &mut Vec<String>| {
            names.extend((0..embedding_dim).map(|j| format!("{prefix}{j}")));
        };
        match self.variant {
            FeatureVariant::CF1 => basic_names(&mut names),
            FeatureVariant::CF2 => {
                basic_names(&mut names);
                names.extend(CASE_NAMES.iter().map(|n| format!("case:{n}")));
                if self.includes_entity_types() {
                    names.extend(ENTITY_TYPES.iter().map(|n| format!("ent:{n}")));
                }
            }
            FeatureVariant::CF3 => emb("emb:", &mut names),
            FeatureVariant::CF4 => {
                for t in 0..self.max_tokens {
                    emb(&format!("tok{t}:emb:"), &mut names);
                }
            }
            FeatureVariant::CF5 => emb("nostop:emb:", &mut names),
            FeatureVariant::CF6 => {
                basic_names(&mut names);
                emb("emb:", &mut names);
            }
        }
        names
    }
}

/// Named numeric representation of one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub variant: FeatureVariant,
    pub for_task: QaTask,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Projects onto `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<FeatureVector, FeatureError> {
        let values = names
            .iter()
            .map(|n| self.get(n).ok_or_else(|| FeatureError::UnknownFeature(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureVector {
            variant: self.variant,
            for_task: self.for_task,
            names: names.to_vec(),
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    What,
    Which,
    Who,
    When,
    Where,
    How,
    GiveList,
    BooleanAux,
}

impl QuestionType {
    pub const ALL: [QuestionType; 8] = [
        QuestionType::What,
        QuestionType::Which,
        QuestionType::Who,
        QuestionType::When,
        QuestionType::Where,
        QuestionType::How,
        QuestionType::GiveList,
        QuestionType::BooleanAux,
    ];

    pub fn label(self) -> &'static str {
        match self {
            QuestionType::What => "what",
            QuestionType::Which => "which",
            QuestionType::Who => "who",
            QuestionType::When => "when",
            QuestionType::Where => "where",
            QuestionType::How => "how",
            QuestionType::GiveList => "give_list",
            QuestionType::BooleanAux => "boolean_aux",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Boolean,
    Number,
    Date,
    String,
    Resource,
}

impl AnswerType {
    pub const ALL: [AnswerType; 5] = [
        AnswerType::Boolean,
        AnswerType::Number,
        AnswerType::Date,
        AnswerType::String,
        AnswerType::Resource,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AnswerType::Boolean => "boolean",
            AnswerType::Number => "number",
            AnswerType::Date => "date",
            AnswerType::String => "string",
            AnswerType::Resource => "resource",
        }
    }
}

fn words<T: AsRef<str>>(tokens: &[T]) -> impl Iterator<Item = &str> {
    tokens.iter().map(AsRef::as_ref).filter(|t| !is_punctuation(t))
}

fn leading_words<T: AsRef<str>>(tokens: &[T]) -> (String, String) {
    let mut it = words(tokens).map(str::to_lowercase);
    (it.next().unwrap_or_default(), it.next().unwrap_or_default())
}

pub fn question_type<T: AsRef<str>>(tokens: &[T]) -> QuestionType {
    let (first, _) = leading_words(tokens);
    match first.as_str() {
        "what" => QuestionType::What,
        "which" => QuestionType::Which,
        "who" | "whom" | "whose" => QuestionType::Who,
        "when" => QuestionType::When,
        "where" => QuestionType::Where,
        "how" => QuestionType::How,
        "give" | "list" | "show" => QuestionType::GiveList,
        "is" | "are" | "was" | "were" | "do" | "does" | "did" | "can" => QuestionType::BooleanAux,
        _ => QuestionType::GiveList,
    }
}

pub fn answer_type<T: AsRef<str>>(tokens: &[T]) -> AnswerType {
    if question_type(tokens) == QuestionType::BooleanAux {
        return AnswerType::Boolean;
    }
    let (first, second) = leading_words(tokens);
    match (first.as_str(), second.as_str()) {
        ("how", "many" | "much") | ("count", _) => AnswerType::Number,
        ("when", _) => AnswerType::Date,
        ("what" | "how", _) => AnswerType::String,
        _ => AnswerType::Resource,
    }
}

const BASIC_DIMS: usize = 8 + 5 + 1 + 14;
const CASE_DIMS: usize = 6;
const CASE_NAMES: [&str; CASE_DIMS] = [
    "caps_non_initial",
    "all_caps",
    "mixed_case",
    "first_capitalized",
    "digit_tokens",
    "longest_caps_run",
];

fn basic_names(names: &mut Vec<String>) {
    names.extend(QuestionType::ALL.iter().map(|q| format!("qtype:{}", q.label())));
    names.extend(AnswerType::ALL.iter().map(|a| format!("atype:{}", a.label())));
    names.push("n_words".to_string());
    names.extend(PosTag::COUNTED.iter().map(|t| format!("pos:{t}")));
}

/// Tokens and tags of a question, honouring precomputed tags when present.
pub fn analyse(question: &Question) -> Result<Vec<(String, PosTag)>, FeatureError> {
    let wrap = |e: FeatureError| FeatureError::Question {
        id: question.id.clone(),
        source: Box::new(e),
    };
    match &question.precomputed_pos {
        Some(pairs) if !pairs.is_empty() => {
            let (toks, tags): (Vec<String>, Vec<String>) = pairs.iter().cloned().unzip();
            pos_tag(&toks, Some(&tags)).map_err(wrap)
        }
        _ => {
            let toks = tokenize(&question.text).map_err(wrap)?;
            pos_tag(&toks, None).map_err(wrap)
        }
    }
}

fn push_basic(tagged: &[(String, PosTag)], out: &mut Vec<f64>) {
    let tokens: Vec<&str> = tagged.iter().map(|(t, _)| t.as_str()).collect();
    let qt = question_type(&tokens);
    out.extend(QuestionType::ALL.iter().map(|q| f64::from(u8::from(*q == qt))));
    let at = answer_type(&tokens);
    out.extend(AnswerType::ALL.iter().map(|a| f64::from(u8::from(*a == at))));
    out.push(words(&tokens).count() as f64);
    for tag in PosTag::COUNTED {
        let n = tagged
            .iter()
            .filter(|(t, g)| *g == tag && !is_punctuation(t))
            .count();
        out.push(n as f64);
    }
}

fn starts_upper(t: &str) -> bool {
    t.chars().next().is_some_and(char::is_uppercase)
}

fn push_case(tokens: &[&str], out: &mut Vec<f64>) {
    let is_all_caps = |t: &str| {
        let letters: Vec<char> = t.chars().filter(|c| c.is_alphabetic()).collect();
        letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
    };
    let is_mixed = |t: &str| {
        t.chars().skip(1).any(char::is_uppercase) && t.chars().any(char::is_lowercase)
    };
    let caps_non_initial = tokens.iter().skip(1).filter(|t| starts_upper(t)).count();
    let all_caps = tokens.iter().filter(|t| is_all_caps(t)).count();
    let mixed = tokens.iter().filter(|t| is_mixed(t)).count();
    let first = tokens.first().is_some_and(|t| starts_upper(t));
    let digits = tokens.iter().filter(|t| t.chars().any(|c| c.is_ascii_digit())).count();
    let mut longest = 0;
    let mut run = 0;
    for t in tokens {
        run = if starts_upper(t) { run + 1 } else { 0 };
        longest = longest.max(run);
    }
    out.extend([
        caps_non_initial as f64,
        all_caps as f64,
        mixed as f64,
        f64::from(u8::from(first)),
        digits as f64,
        longest as f64,
    ]);
}

fn mean_embedding<'a>(tokens: impl Iterator<Item = &'a str>, table: &EmbeddingTable, out: &mut Vec<f64>) {
    let mut acc = vec![0.0; table.dimension()];
    let mut n = 0usize;
    for t in tokens {
        n += 1;
        if let Some(v) = table.get(t) {
            acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    out.extend(acc);
}

/// Extracts the feature vector of `question` under `config`.
pub fn extract(
    question: &Question,
    config: &FeatureConfig,
    table: Option<&EmbeddingTable>,
) -> Result<FeatureVector, FeatureError> {
    let table = match (config.variant.needs_embeddings(), table) {
        (true, None) => {
            return Err(FeatureError::MissingEmbeddings {
                config: config.variant,
            })
        }
        (_, t) => t,
    };
    let tagged = analyse(question)?;
    let tokens: Vec<&str> = tagged.iter().map(|(t, _)| t.as_str()).collect();
    let content: Vec<&str> = words(&tokens).collect();
    let emb_dim = table.map_or(0, EmbeddingTable::dimension);
    let mut values = Vec::with_capacity(config.dimension(emb_dim));
    match (config.variant, table) {
        (FeatureVariant::CF1, _) => push_basic(&tagged, &mut values),
        (FeatureVariant::CF2, _) => {
            push_basic(&tagged, &mut values);
            push_case(&content, &mut values);
            if config.includes_entity_types() {
                let counts = Gazetteer::bundled().count_types(&content);
                values.extend(counts.iter().map(|c| *c as f64));
            }
        }
        (FeatureVariant::CF3, Some(t)) => mean_embedding(content.iter().copied(), t, &mut values),
        (FeatureVariant::CF4, Some(t)) => {
            for i in 0..config.max_tokens {
                match content.get(i).and_then(|w| t.get(w)) {
                    Some(v) => values.extend_from_slice(v),
                    None => values.extend(std::iter::repeat_n(0.0, t.dimension())),
                }
            }
        }
        (FeatureVariant::CF5, Some(t)) => {
            mean_embedding(content.iter().copied().filter(|w| !is_stopword(w)), t, &mut values)
        }
        (FeatureVariant::CF6, Some(t)) => {
            push_basic(&tagged, &mut values);
            mean_embedding(content.iter().copied(), t, &mut values);
        }
        (_, None) => unreachable!("embedding requirement checked above"),
    }
    let names = config.feature_names(emb_dim);
    debug_assert_eq!(names.len(), values.len());
    Ok(FeatureVector {
        variant: config.variant,
        for_task: config.for_task,
        names,
        values,
    })
}
