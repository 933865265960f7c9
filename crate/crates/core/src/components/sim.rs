//! Seeded stand-ins for real QA services.
//!
//! A profile is a first-match list of rules. Each rule carries a success
//! probability and the kind of damage done on failure. The random stream of an
//! invocation is derived from (call seed, profile seed, question id, component
//! id), so results do not depend on invocation order.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IteratorRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ComponentError;
use crate::features::{self, AnswerType, FeatureConfig, FeatureVariant, FeatureVector, PosTag, QuestionType};
use crate::model::{AnnotationSet, QaTask, Question};
use crate::rng;

/// What a failed invocation emits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Empty,
    /// Gold minus one item.
    Partial,
    /// Gold plus one wrong IRI.
    Spurious,
}

/// Conditions over extractable question properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    Always,
    /// Longest run of consecutive proper-noun tags is at least `n`.
    MinNnpRun { n: usize },
    HasAllCapsToken,
    HasMixedCaseToken,
    QuestionType { label: QuestionType },
    AnswerType { label: AnswerType },
    WordsAtLeast { n: usize },
    WordsAtMost { n: usize },
    HasToken { token: String },
    /// A CF2 feature (entity types included) is at least `min`.
    Feature { name: String, min: f64 },
    GoldSizeAtLeast { n: usize },
    Not { inner: Box<Predicate> },
    All { of: Vec<Predicate> },
    Any { of: Vec<Predicate> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRule {
    pub when: Predicate,
    pub probability: f64,
    #[serde(default)]
    pub noise: NoiseMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    #[serde(default)]
    pub rules: Vec<SimRule>,
    pub base_rate: f64,
    #[serde(default)]
    pub noise: NoiseMode,
    #[serde(default)]
    pub seed: u64,
    /// Surface form to IRI, used when a question carries no gold for the task.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lexicon: BTreeMap<String, String>,
    #[serde(default = "default_latency")]
    pub mean_latency_ms: f64,
}

fn default_latency() -> f64 {
    40.0
}

impl SimProfile {
    pub fn constant(base_rate: f64) -> Self {
        SimProfile {
            rules: Vec::new(),
            base_rate,
            noise: NoiseMode::Empty,
            seed: 0,
            lexicon: BTreeMap::new(),
            mean_latency_ms: default_latency(),
        }
    }

    /// Succeeds with certainty when `when` holds and never otherwise.
    pub fn deterministic(when: Predicate) -> Self {
        let mut p = SimProfile::constant(0.0);
        p.rules.push(SimRule {
            when,
            probability: 1.0,
            noise: NoiseMode::Empty,
        });
        p
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.base_rate) {
            return Err(format!("base_rate {} outside [0, 1]", self.base_rate));
        }
        if let Some(r) = self.rules.iter().find(|r| !ok(r.probability)) {
            return Err(format!("rule probability {} outside [0, 1]", r.probability));
        }
        if !(self.mean_latency_ms >= 0.0 && self.mean_latency_ms.is_finite()) {
            return Err("mean_latency_ms must be finite and non-negative".into());
        }
        Ok(())
    }

    /// The (probability, noise) pair that applies to `question`.
    pub fn resolve(&self, question: &Question, task: QaTask) -> Result<(f64, NoiseMode), ComponentError> {
        let mut facts = Facts::new(question, task);
        for rule in &self.rules {
            if facts.eval(&rule.when)? {
                return Ok((rule.probability, rule.noise));
            }
        }
        Ok((self.base_rate, self.noise))
    }
}

/// Lazily computed question properties for predicate evaluation.
struct Facts<'q> {
    question: &'q Question,
    task: QaTask,
    tagged: Option<Vec<(String, PosTag)>>,
    cf2: Option<FeatureVector>,
}

impl<'q> Facts<'q> {
    fn new(question: &'q Question, task: QaTask) -> Self {
        Facts {
            question,
            task,
            tagged: None,
            cf2: None,
        }
    }

    fn tagged(&mut self) -> Result<&[(String, PosTag)], ComponentError> {
        if self.tagged.is_none() {
            self.tagged = Some(features::analyse(self.question)?);
        }
        Ok(self.tagged.as_deref().unwrap_or_default())
    }

    fn cf2(&mut self) -> Result<&FeatureVector, ComponentError> {
        if self.cf2.is_none() {
            let cfg = FeatureConfig::new(FeatureVariant::CF2, QaTask::Qb);
            self.cf2 = Some(features::extract(self.question, &cfg, None)?);
        }
        Ok(self.cf2.as_ref().expect("set above"))
    }

    fn feature(&mut self, name: &str) -> Result<f64, ComponentError> {
        self.cf2()?
            .get(name)
            .ok_or_else(|| ComponentError::MalformedProfile(format!("unknown feature `{name}`")))
    }

    fn eval(&mut self, p: &Predicate) -> Result<bool, ComponentError> {
        Ok(match p {
            Predicate::Always => true,
            Predicate::MinNnpRun { n } => {
                let mut best = 0;
                let mut run = 0;
                for (_, tag) in self.tagged()? {
                    run = if matches!(tag, PosTag::NNP | PosTag::NNPS) { run + 1 } else { 0 };
                    best = best.max(run);
                }
                best >= *n
            }
            Predicate::HasAllCapsToken => self.feature("case:all_caps")? >= 1.0,
            Predicate::HasMixedCaseToken => self.feature("case:mixed_case")? >= 1.0,
            Predicate::QuestionType { label } => {
                self.feature(&format!("qtype:{}", label.label()))? == 1.0
            }
            Predicate::AnswerType { label } => self.feature(&format!("atype:{}", label.label()))? == 1.0,
            Predicate::WordsAtLeast { n } => self.feature("n_words")? >= *n as f64,
            Predicate::WordsAtMost { n } => self.feature("n_words")? <= *n as f64,
            Predicate::HasToken { token } => {
                let token = token.to_lowercase();
                self.tagged()?.iter().any(|(t, _)| t.to_lowercase() == token)
            }
            Predicate::Feature { name, min } => self.feature(name)? >= *min,
            Predicate::GoldSizeAtLeast { n } => self
                .question
                .gold_for(self.task)
                .is_some_and(|g| g.targets().len() >= *n),
            Predicate::Not { inner } => !self.eval(inner)?,
            Predicate::All { of } => {
                for p in of {
                    if !self.eval(p)? {
                        return Ok(false);
                    }
                }
                true
            }
            Predicate::Any { of } => {
                for p in of {
                    if self.eval(p)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

fn lexicon_hits(profile: &SimProfile, text: &str) -> BTreeSet<String> {
    let words: Vec<String> = features::tokenize(text)
        .unwrap_or_default()
        .into_iter()
        .filter(|t| !features::is_punctuation(t))
        .map(|t| t.to_lowercase())
        .collect();
    profile
        .lexicon
        .iter()
        .filter(|(surface, _)| {
            let needle: Vec<String> = surface.split_whitespace().map(str::to_lowercase).collect();
            !needle.is_empty() && words.windows(needle.len()).any(|w| w == needle.as_slice())
        })
        .map(|(_, iri)| iri.clone())
        .collect()
}

pub(crate) fn invoke(
    profile: &SimProfile,
    component_id: &str,
    task: QaTask,
    question: &Question,
    seed: u64,
) -> Result<AnnotationSet, ComponentError> {
    profile.validate().map_err(ComponentError::MalformedProfile)?;
    let mut rng = rng::stream(rng::derive_seed(
        seed,
        &[&profile.seed.to_le_bytes(), question.id.as_bytes(), component_id.as_bytes()],
    ));
    let (probability, noise) = profile.resolve(question, task)?;
    let success = rng.random::<f64>() < probability;
    let target: BTreeSet<String> = match question.gold_for(task) {
        Some(g) => g.targets().clone(),
        None if task.scored_as() == QaTask::Qb => BTreeSet::new(),
        None => lexicon_hits(profile, &question.text),
    };
    let items = if success {
        target
    } else {
        match noise {
            NoiseMode::Empty => BTreeSet::new(),
            NoiseMode::Partial => {
                let mut t = target;
                if let Some(drop) = t.iter().choose(&mut rng).cloned() {
                    t.remove(&drop);
                }
                t
            }
            NoiseMode::Spurious => {
                let mut t = target;
                t.insert(format!("http://example.org/spurious/{component_id}/{}", rng.random::<u32>()));
                t
            }
        }
    };
    let latency_ms = profile.mean_latency_ms * (0.5 + rng.random::<f64>());
    Ok(AnnotationSet {
        task: task.scored_as(),
        items,
        source_component: component_id.to_string(),
        latency_ms,
        failed: false,
    })
}
