//! Mining question-answer pairs from sentences paired with Abstract Meaning
//! Representation graphs.
//!
//! The pipeline reads PENMAN graphs, condenses them into a question tree,
//! fills relation-keyed templates with words aligned from a CoNLL-U
//! annotation, ranks the filled candidates with a fluency scorer and takes
//! answers from dependency sub-trees.

pub mod agen;
pub mod annotate;
pub mod corpus;
pub mod penman;
pub mod pipeline;
pub mod preprocess;
pub mod qgen;
pub mod scorer;
pub mod templates;
