//! JSONL transcript persistence and replay.
//!
//! A transcript file is a header line followed by one [`Turn`] per line.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{start_session, EngineInput, Session, Speaker, Turn};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::model::{init_user_vector, merge_update, AttributeSchema, AttributeVector, SpotRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub session_id: String,
    pub spot_a: SpotRecord,
    pub spot_b: SpotRecord,
    pub agency_spot: u8,
    pub start_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub turns: Vec<Turn>,
}

impl Session {
    pub fn header(&self) -> TranscriptHeader {
        TranscriptHeader {
            session_id: self.id.clone(),
            spot_a: self.spot_a.clone(),
            spot_b: self.spot_b.clone(),
            agency_spot: self.agency_spot,
            start_time: self.start_time,
        }
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            header: self.header(),
            turns: self.turn_log().to_vec(),
        }
    }
}

impl TranscriptHeader {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("header serializes")
    }
}

pub fn turn_line(turn: &Turn) -> String {
    serde_json::to_string(turn).expect("turn serializes")
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        let mut out = self.header.to_line();
        out.push('\n');
        for turn in &self.turns {
            out.push_str(&turn_line(turn));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::InvalidTranscript("missing header line".into()))?;
        let header: TranscriptHeader = serde_json::from_str(first)
            .map_err(|e| Error::InvalidTranscript(format!("header: {e}")))?;
        let mut turns = Vec::new();
        for (n, line) in lines {
            let turn: Turn = serde_json::from_str(line)
                .map_err(|e| Error::InvalidTranscript(format!("line {}: {e}", n + 1)))?;
            if turn.index != turns.len() {
                return Err(Error::InvalidTranscript(format!(
                    "line {}: expected turn index {}, found {}",
                    n + 1,
                    turns.len(),
                    turn.index
                )));
            }
            turns.push(turn);
        }
        Ok(Transcript { header, turns })
    }

    /// Inputs (utterances and timeouts) with their timestamps, in order.
    pub fn inputs(&self) -> impl Iterator<Item = (EngineInput, u64)> + '_ {
        self.turns.iter().filter_map(|t| match t.speaker {
            Speaker::User => Some((EngineInput::Utterance(t.text.clone()), t.time)),
            Speaker::Event => Some((EngineInput::Timeout, t.time)),
            Speaker::System => None,
        })
    }

    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::User)
    }

    /// The system turn answering input turn `index`.
    pub fn reply_to(&self, index: usize) -> Option<&Turn> {
        self.turns
            .get(index + 1)
            .filter(|t| t.speaker == Speaker::System)
    }
}

/// Rebuilds a session by feeding the transcript's inputs back through the engine.
pub fn replay(
    transcript: &Transcript,
    schema: &Arc<AttributeSchema>,
    lexicon: &Lexicon,
) -> Result<Session> {
    let h = &transcript.header;
    let (mut session, _) = start_session(
        h.session_id.clone(),
        h.spot_a.clone(),
        h.spot_b.clone(),
        h.agency_spot,
        schema,
        h.start_time,
    )?;
    for (input, time) in transcript.inputs() {
        session.step(input, time, lexicon)?;
    }
    Ok(session)
}

/// Re-applies the rules of every logged keyword match to an all-DontCare vector.
///
/// Matches against a spot's own Q&A entries carry no rule and are skipped.
pub fn audit_user_vector(
    transcript: &Transcript,
    schema: &Arc<AttributeSchema>,
    lexicon: &Lexicon,
) -> Result<AttributeVector> {
    let mut v = init_user_vector(schema);
    for turn in &transcript.turns {
        let (Some(qid), Some(i)) = (&turn.matched_question_id, turn.matched_entry_index) else {
            continue;
        };
        let Ok(entries) = lexicon.question(qid) else {
            continue;
        };
        let entry = entries.get(i).ok_or_else(|| {
            Error::InvalidTranscript(format!(
                "turn {}: question `{qid}` has no entry {i}",
                turn.index
            ))
        })?;
        v = merge_update(&v, &entry.rule)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Stage;
    use crate::model::QaEntry;
    use std::collections::BTreeSet;

    fn spot(id: &str) -> SpotRecord {
        SpotRecord {
            id: id.into(),
            name: id.into(),
            introduction: "x".into(),
            qa_entries: vec![QaEntry {
                keywords: vec!["k".into()],
                answer: "a".into(),
            }],
            spot_type: "park".into(),
            paid_admission: false,
            parking: true,
            rain_ok: false,
            recommended_customers: BTreeSet::from(["children".to_string()]),
            recommended_seasons: BTreeSet::new(),
        }
    }

    #[test]
    fn fresh_session_has_header_only() {
        let schema = Arc::new(AttributeSchema::default_schema());
        let (s, _) = start_session("s1", spot("a"), spot("b"), 1, &schema, 42).unwrap();
        let t = s.transcript();
        assert!(t.turns.is_empty());
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(Transcript::from_jsonl(&text).unwrap(), t);
    }

    #[test]
    fn turn_round_trip_and_index_check() {
        let schema = Arc::new(AttributeSchema::default_schema());
        let (s, _) = start_session("s1", spot("a"), spot("b"), 0, &schema, 0).unwrap();
        let mut t = s.transcript();
        t.turns.push(Turn {
            index: 0,
            speaker: Speaker::User,
            text: "hi \"there\"".into(),
            time: 5,
            stage: Stage::AttributeQuestion { attr_id: "park".into() },
            matched_question_id: Some("park".into()),
            matched_entry_index: Some(0),
            fallback: false,
        });
        let back = Transcript::from_jsonl(&t.to_jsonl()).unwrap();
        assert_eq!(back, t);

        t.turns[0].index = 3;
        assert!(Transcript::from_jsonl(&t.to_jsonl()).is_err());
        assert!(Transcript::from_jsonl("").is_err());
    }
}
