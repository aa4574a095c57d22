//! Toolkit for bootstrapping natural-language-understanding models when no
//! training data exists.
//!
//! The pipeline mirrors how such a system is assembled in practice:
//!
//! 1. [`generator`] instantiates question templates with temporal modifiers
//!    and a lexicon of lab-test mentions to produce slot-annotated,
//!    intent-labeled corpora.
//! 2. [`paraphrase`] grows the template inventory through pivot translation
//!    (translate out to a pivot language and back) behind a pluggable
//!    backend, with an offline mock for tests.
//! 3. [`embeddings`] trains skip-gram vectors with negative sampling and
//!    optional hashed character-n-gram subwords on any unlabeled text.
//! 4. [`crf`] and [`neural`] provide a linear-chain CRF slot tagger, a
//!    biLSTM tagger (softmax or CRF output layer) and a convolutional
//!    intent classifier, all trained with Adam and hand-derived gradients.
//! 5. [`eval`] scores predictions with weighted token/span F1 and repeated
//!    k-fold confidence intervals, and computes corpus statistics.
//!
//! Everything is deterministic given explicit seeds; opt-in parallelism is
//! provided by the `parallel` feature (enabled by default) through [`exec`].
//!
//! ```
//! use nlu_forge::data::LabelSchema;
//! use nlu_forge::generator::{generate, sample_pack};
//!
//! let schema = LabelSchema::default();
//! let corpus = generate(&schema, &sample_pack(), 25, 7).unwrap();
//! assert_eq!(corpus.len(), 25);
//! assert!(corpus.utterances.iter().all(|u| u.validate(&schema).is_ok()));
//! ```

pub mod crf;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod exec;
pub mod generator;
pub mod neural;
pub mod paraphrase;

pub use error::{Error, Result};
