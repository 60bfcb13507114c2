//! Travel consultation engine built around tri-valued attribute vectors.
//!
//! A sightseeing spot is described by an [`AttributeVector`] over a fixed
//! [`AttributeSchema`]. During a consultation the engine questions the user
//! only about attributes on which the two candidate spots differ, folds the
//! answers into a user vector with [`merge_update`], and finally recommends
//! the agency-designated spot with reasons drawn from the match/unmatch sets.
//!
//! The [`analysis`] module works offline over persisted transcripts and
//! satisfaction questionnaires.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod lexicon;
pub mod model;
pub mod recommend;
pub mod transcript;

pub use engine::{start_session, step, EngineInput, Session, Speaker, Stage, Turn};
pub use error::{Error, Result};
pub use lexicon::{match_keywords, normalize, KeywordEntry, Lexicon};
pub use model::{
    differing_attributes, extract_attribute_vector, init_user_vector, merge_update, Attribute,
    AttributeGroup, AttributeSchema, AttributeVector, Catalog, QaEntry, SpotRecord, TriValue,
    UpdateRule,
};
pub use recommend::{match_set, recommend, unmatch_set, Branch, RecommendationResult};
pub use transcript::{replay, Transcript, TranscriptHeader};
