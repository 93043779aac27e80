//! Root-and-template aware pre-tokenization.
//!
//! Words of nonconcatenative languages interleave a root with template
//! letters. This crate learns, from a corpus, which single-letter
//! reductions strip template letters, and uses them to rewrite every word
//! as its core letters followed by composite characters that each stand
//! for one `(index, letter)` reduction. The rewrite is lossless and the
//! output is plain text any subword tokenizer can consume.
//!
//! Pipeline:
//!
//! 1. [`corpus`]: normalize and count words into a [`WordFrequencyTable`].
//! 2. [`reduction`]: train a [`ReductionMap`] from the table.
//! 3. [`splinterer`]: encode words and running text; decode them back.
//! 4. [`tokenizer`]: a built-in BPE trainer for raw vs. splintered text.
//! 5. [`metrics`]: intrinsic tokenizer measures for comparing the two.

pub mod corpus;
pub mod error;
pub mod metrics;
pub mod profile;
pub mod reduction;
pub mod splinterer;
pub mod synthetic;
pub mod tokenizer;

pub use corpus::{WordCounter, WordFrequencyTable};
pub use error::{Error, Result};
pub use profile::LanguageProfile;
pub use reduction::{IndexConvention, Reduction, ReductionMap};
pub use splinterer::{BeamConfig, CompositeAlphabet, CompositeBlock, SplinteredWord};
pub use tokenizer::{BpeConfig, TokenizedCorpus, TokenizerModel};
