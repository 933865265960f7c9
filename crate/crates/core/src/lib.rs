//! Learned, per-question component selection for collaborative question
//! answering pipelines.
//!
//! The crate is organised the way the runtime flows:
//!
//! * [`model`]: shared domain types (questions, gold annotations, the
//!   per-question performance matrix).
//! * [`features`]: tokenisation, a lexicon/suffix POS tagger, and the six
//!   feature configurations `CF1`..`CF6`.
//! * [`learners`]: from-scratch supervised models behind one [`learners::Predictor`]
//!   type, Gini importance, and K-fold planning.
//! * [`selection`]: ERT importance ranking and recursive feature elimination.
//! * [`components`]: the component registry, simulated and HTTP adapters, and the
//!   micro F-score used to label training data.
//! * [`optimiser`]: per-component predictor training, per-question ranking, greedy
//!   pipeline composition and execution.
//! * [`bench`]: dataset ingestion, a synthetic corpus generator, the fold-based
//!   evaluation harness and comparison reports.

pub mod bench;
pub mod components;
pub mod features;
pub mod learners;
pub mod model;
pub mod optimiser;
pub mod rng;
pub mod selection;

pub use model::{GoldAnnotation, PerformanceMatrix, QaTask, Question};
