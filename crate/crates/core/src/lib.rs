//! Core library for the metaphor paraphrase aptness laboratory: corpus and
//! annotation handling, word embeddings, a small deterministic neural-network
//! engine, the composite sentence-pair scorer, experiment drivers, and the
//! context-compression analysis.

pub mod analysis;
pub mod annotations;
pub mod corpus;
pub mod embeddings;
pub mod experiments;
pub mod model;
pub mod nn;
