//! Ontology recommendation: annotate an input against a corpus of ontology
//! classes and rank ontologies, or small sets of them, by coverage,
//! acceptance, detail of knowledge and specialization.

pub mod annotator;
pub mod config;
pub mod corpus;
pub mod criteria;
pub mod evalharness;
pub mod fixtures;
pub mod ranker;
pub mod service;
pub mod sets;

pub use annotator::{Annotation, MatchType, TermIndex};
pub use config::RecommenderConfig;
pub use corpus::{AcceptanceTable, OntologyRepository};
pub use criteria::{CriterionScores, ScoringConstants};
pub use ranker::{RankedEntry, Weights};
pub use service::{
    Algorithm, Engine, InputType, OutputType, RecommendError, RecommendRequest, Recommendation,
};
