//! Fuzzy full-text retrieval.
//!
//! Documents are analyzed into terms and stored in an [`index::InvertedIndex`]
//! with a sorted dictionary. Query terms are expanded to nearby dictionary
//! terms by edit distance ([`fuzzy_query`]) and documents are ranked by fuzzy
//! similarity or by a TF-IDF cosine baseline ([`scoring`]). Runs are evaluated
//! with precision, recall, average precision and 11-point interpolated
//! precision-recall curves ([`evaluation`]).

pub mod cli;
pub mod corpus_io;
pub mod edit_distance;
pub mod evaluation;
pub mod fuzzy_query;
pub mod index;
pub mod scoring;
pub mod text_analysis;

pub use edit_distance::Metric;
pub use fuzzy_query::{expand_term, parse_query, FuzzyMatch, FuzzyTermSpec, ParsedQuery, QueryDefaults};
pub use index::{build_index, DocumentRecord, InvertedIndex};
pub use scoring::{cosine_score, fuzzy_score, RankedList, ScoredHit};
