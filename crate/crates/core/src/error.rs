use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A token or attribute id does not fit the schema in use.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid spot record `{spot}`: {reason}")]
    InvalidSpot { spot: String, reason: String },

    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("unknown question id `{0}`")]
    UnknownQuestion(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("both candidate spots have id `{0}`")]
    IdenticalSpots(String),

    #[error("session `{0}` has already ended")]
    SessionEnded(String),

    #[error("invalid transcript: {0}")]
    InvalidTranscript(String),

    #[error("invalid questionnaire for session `{session}`: {reason}")]
    InvalidQuestionnaire { session: String, reason: String },

    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),

    /// A statistic could not be computed; `feature` names the offending column when known.
    #[error("cannot compute correlation{}: {reason}", feature.as_ref().map(|f| format!(" for `{f}`")).unwrap_or_default())]
    Statistics {
        feature: Option<String>,
        reason: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
