//! The consultation state machine.
//!
//! A session walks through greeting, spot introductions with a reason
//! question each, the general "travelling alone" question, one question per
//! attribute on which the two spots differ, the recommendation, a question and
//! answer phase and the final greeting. The engine holds no clock: callers pass
//! `now` (milliseconds) to every call, which keeps sessions deterministic and
//! lets tests drive the five-minute cap directly.
//!
//! Unrecognised answers are acknowledged with the lexicon's fallback response
//! and the dialogue moves on; the engine never asks the user to repeat.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{self, normalize, Lexicon, GENERAL_QUESTION, QA_DONE, REASON_QUESTIONS};
use crate::model::{
    differing_attributes, extract_attribute_vector, init_user_vector, merge_update,
    AttributeSchema, AttributeVector, SpotRecord,
};
use crate::recommend::{recommend, RecommendationResult, SpotNames};

/// Hard limit on dialogue length.
pub const SESSION_LIMIT_MS: u64 = 300_000;

pub const GENERAL_QUESTION_TEXT: &str = "Will you travel alone?";
pub const QA_MISS_TEXT: &str = "Sorry, this information has not been provided.";
pub const CLOSING_TEXT: &str = "Thank you for consulting with us today. Have a wonderful trip!";

/// Prefix of `matched_question_id` for answers taken from a spot's own Q&A entries.
pub const SPOT_QA_PREFIX: &str = "qa:";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    Greeting,
    IntroduceAndAskReason { spot_index: u8 },
    GeneralQuestion,
    AttributeQuestion { attr_id: String },
    Recommendation,
    #[serde(rename = "qanda")]
    QandA,
    FinalGreeting,
    Ended,
}

impl Stage {
    /// Position in the canonical flow. Attribute questions share one rank.
    pub fn rank(&self) -> u8 {
        match self {
            Stage::Greeting => 0,
            Stage::IntroduceAndAskReason { spot_index } => 1 + spot_index.min(&1),
            Stage::GeneralQuestion => 3,
            Stage::AttributeQuestion { .. } => 4,
            Stage::Recommendation => 5,
            Stage::QandA => 6,
            Stage::FinalGreeting => 7,
            Stage::Ended => 8,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Greeting => f.write_str("greeting"),
            Stage::IntroduceAndAskReason { spot_index } => write!(f, "introduce_and_ask_reason({spot_index})"),
            Stage::GeneralQuestion => f.write_str("general_question"),
            Stage::AttributeQuestion { attr_id } => write!(f, "attribute_question({attr_id})"),
            Stage::Recommendation => f.write_str("recommendation"),
            Stage::QandA => f.write_str("qanda"),
            Stage::FinalGreeting => f.write_str("final_greeting"),
            Stage::Ended => f.write_str("ended"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    System,
    Event,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    pub time: u64,
    pub stage: Stage,
    pub matched_question_id: Option<String>,
    pub matched_entry_index: Option<usize>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineInput {
    Utterance(String),
    Timeout,
}

impl EngineInput {
    pub fn utterance(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if normalize(&text).is_empty() {
            return Err(Error::InvalidInput("utterance is empty".into()));
        }
        Ok(EngineInput::Utterance(text))
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub spot_a: SpotRecord,
    pub spot_b: SpotRecord,
    pub agency_spot: u8,
    pub start_time: u64,
    schema: Arc<AttributeSchema>,
    spot_vectors: [AttributeVector; 2],
    user_vector: AttributeVector,
    stage: Stage,
    planned_questions: Vec<String>,
    pending_questions: VecDeque<String>,
    recommendation: Option<RecommendationResult>,
    turn_log: Vec<Turn>,
}

/// Opens a session over two catalog spots. `agency_spot` (0 or 1) selects the
/// spot the agency wants recommended.
pub fn start_session(
    id: impl Into<String>,
    spot_a: SpotRecord,
    spot_b: SpotRecord,
    agency_spot: u8,
    schema: &Arc<AttributeSchema>,
    now: u64,
) -> Result<(Session, String)> {
    if spot_a.id == spot_b.id {
        return Err(Error::IdenticalSpots(spot_a.id));
    }
    if agency_spot > 1 {
        return Err(Error::InvalidInput(format!(
            "agency_spot must be 0 or 1, got {agency_spot}"
        )));
    }
    let va = extract_attribute_vector(&spot_a, schema)?;
    let vb = extract_attribute_vector(&spot_b, schema)?;
    let planned = differing_attributes(&va, &vb)?;
    let greeting = format!(
        "Hello, I am your travel consultant. Today we will compare {} and {}. Those are the two spots you picked, right?",
        spot_a.name, spot_b.name
    );
    let session = Session {
        id: id.into(),
        spot_a,
        spot_b,
        agency_spot,
        start_time: now,
        user_vector: init_user_vector(schema),
        schema: Arc::clone(schema),
        spot_vectors: [va, vb],
        stage: Stage::Greeting,
        pending_questions: planned.iter().cloned().collect(),
        planned_questions: planned,
        recommendation: None,
        turn_log: Vec::new(),
    };
    Ok((session, greeting))
}

/// Advances `session` by one input and returns the system reply.
///
/// On error the session is left unchanged.
pub fn step(session: &mut Session, input: EngineInput, now: u64, lexicon: &Lexicon) -> Result<String> {
    session.step(input, now, lexicon)
}

/// Everything one step decides, computed before the session is touched.
struct Outcome {
    reply: String,
    next: Stage,
    reply_stage: Stage,
    matched: Option<(String, usize)>,
    fallback: bool,
    user_vector: Option<AttributeVector>,
    pop_question: bool,
    recommendation: Option<RecommendationResult>,
}

impl Outcome {
    fn say(reply: String, next: Stage) -> Self {
        Outcome {
            reply,
            reply_stage: next.clone(),
            next,
            matched: None,
            fallback: false,
            user_vector: None,
            pop_question: false,
            recommendation: None,
        }
    }

    fn closing(reply: String) -> Self {
        Outcome {
            reply_stage: Stage::FinalGreeting,
            ..Outcome::say(reply, Stage::Ended)
        }
    }
}

impl Session {
    pub fn stage(&self) -> &Stage {
        &self.stage
    }

    pub fn is_ended(&self) -> bool {
        self.stage == Stage::Ended
    }

    pub fn user_vector(&self) -> &AttributeVector {
        &self.user_vector
    }

    pub fn schema(&self) -> &Arc<AttributeSchema> {
        &self.schema
    }

    /// Attribute vectors of spot A and spot B.
    pub fn spot_vectors(&self) -> &[AttributeVector; 2] {
        &self.spot_vectors
    }

    /// All attribute questions planned at session start, in schema order.
    pub fn planned_questions(&self) -> &[String] {
        &self.planned_questions
    }

    /// Attribute questions not yet asked.
    pub fn pending_questions(&self) -> impl Iterator<Item = &str> {
        self.pending_questions.iter().map(String::as_str)
    }

    pub fn recommendation(&self) -> Option<&RecommendationResult> {
        self.recommendation.as_ref()
    }

    pub fn turn_log(&self) -> &[Turn] {
        &self.turn_log
    }

    pub fn elapsed(&self, now: u64) -> u64 {
        now.saturating_sub(self.start_time)
    }

    fn spot(&self, index: u8) -> &SpotRecord {
        if index == 0 {
            &self.spot_a
        } else {
            &self.spot_b
        }
    }

    fn introduction(&self, index: u8) -> String {
        let spot = self.spot(index);
        let mut text = format!("Let me introduce {}.", spot.name);
        if !spot.introduction.trim().is_empty() {
            text.push(' ');
            text.push_str(spot.introduction.trim());
        }
        text.push_str(&format!(" Why did you choose {}?", spot.name));
        text
    }

    fn qa_prompt(&self) -> String {
        format!(
            "Do you have any questions about {} or {}?",
            self.spot_a.name, self.spot_b.name
        )
    }

    pub fn step(&mut self, input: EngineInput, now: u64, lexicon: &Lexicon) -> Result<String> {
        if self.is_ended() {
            return Err(Error::SessionEnded(self.id.clone()));
        }
        if let EngineInput::Utterance(text) = &input {
            if normalize(text).is_empty() {
                return Err(Error::InvalidInput("utterance is empty".into()));
            }
        }

        let outcome = if self.elapsed(now) > SESSION_LIMIT_MS {
            Outcome::closing(CLOSING_TEXT.to_owned())
        } else {
            self.decide(&input, lexicon)?
        };

        let (speaker, text) = match input {
            EngineInput::Utterance(text) => (Speaker::User, text),
            EngineInput::Timeout => (Speaker::Event, String::new()),
        };
        let index = self.turn_log.len();
        self.turn_log.push(Turn {
            index,
            speaker,
            text,
            time: now,
            stage: self.stage.clone(),
            matched_question_id: None,
            matched_entry_index: None,
            fallback: false,
        });
        let (matched_question_id, matched_entry_index) = match outcome.matched {
            Some((q, i)) => (Some(q), Some(i)),
            None => (None, None),
        };
        self.turn_log.push(Turn {
            index: index + 1,
            speaker: Speaker::System,
            text: outcome.reply.clone(),
            time: now,
            stage: outcome.reply_stage,
            matched_question_id,
            matched_entry_index,
            fallback: outcome.fallback,
        });

        if let Some(v) = outcome.user_vector {
            self.user_vector = v;
        }
        if outcome.pop_question {
            self.pending_questions.pop_front();
        }
        if outcome.recommendation.is_some() {
            self.recommendation = outcome.recommendation;
        }
        self.stage = outcome.next;
        Ok(outcome.reply)
    }

    fn decide(&self, input: &EngineInput, lexicon: &Lexicon) -> Result<Outcome> {
        match &self.stage {
            Stage::Greeting => Ok(Outcome::say(
                self.introduction(0),
                Stage::IntroduceAndAskReason { spot_index: 0 },
            )),
            Stage::IntroduceAndAskReason { spot_index } => {
                let qid = REASON_QUESTIONS[usize::from(*spot_index).min(1)];
                self.answer(input, qid, lexicon)
            }
            Stage::GeneralQuestion => self.answer(input, GENERAL_QUESTION, lexicon),
            Stage::AttributeQuestion { attr_id } => self.answer(input, attr_id, lexicon),
            Stage::Recommendation => Ok(Outcome::say(self.qa_prompt(), Stage::QandA)),
            Stage::QandA => self.question_and_answer(input, lexicon),
            Stage::FinalGreeting => Ok(Outcome::closing(CLOSING_TEXT.to_owned())),
            Stage::Ended => Err(Error::SessionEnded(self.id.clone())),
        }
    }

    /// Handles an answer in any of the question stages, then moves to the next question.
    fn answer(&self, input: &EngineInput, qid: &str, lexicon: &Lexicon) -> Result<Outcome> {
        let mut ack = None;
        let mut matched = None;
        let mut fallback = false;
        let mut user = self.user_vector.clone();
        match input {
            EngineInput::Utterance(text) => match lexicon::match_keywords(text, qid, lexicon)? {
                Some((i, entry)) => {
                    user = merge_update(&user, &entry.rule)?;
                    ack = Some(entry.response.clone());
                    matched = Some((qid.to_owned(), i));
                }
                None => {
                    ack = Some(lexicon.fallback_response.clone());
                    fallback = true;
                }
            },
            // silence: nothing to acknowledge, the question is simply passed over
            EngineInput::Timeout => {}
        }

        let mut outcome = match &self.stage {
            Stage::IntroduceAndAskReason { spot_index: 0 } => Outcome::say(
                self.introduction(1),
                Stage::IntroduceAndAskReason { spot_index: 1 },
            ),
            Stage::IntroduceAndAskReason { .. } => {
                Outcome::say(GENERAL_QUESTION_TEXT.to_owned(), Stage::GeneralQuestion)
            }
            _ => self.next_question_or_recommend(&user)?,
        };
        if let Some(ack) = ack {
            outcome.reply = format!("{ack} {}", outcome.reply);
        }
        outcome.matched = matched;
        outcome.fallback = fallback;
        outcome.user_vector = Some(user);
        Ok(outcome)
    }

    fn next_question_or_recommend(&self, user: &AttributeVector) -> Result<Outcome> {
        // Leaving an attribute question consumes it from the pending list.
        let leaving_attribute = matches!(self.stage, Stage::AttributeQuestion { .. });
        let mut pending = self.pending_questions.iter();
        if leaving_attribute {
            pending.next();
        }
        if let Some(next) = pending.next() {
            let question = self
                .schema
                .get(next)
                .map(|a| a.question_text.clone())
                .unwrap_or_else(|| format!("What do you think about {next}?"));
            let mut o = Outcome::say(question, Stage::AttributeQuestion { attr_id: next.clone() });
            o.pop_question = leaving_attribute;
            return Ok(o);
        }

        let agency = usize::from(self.agency_spot);
        let (agency_spot, other_spot) = if agency == 0 {
            (&self.spot_a, &self.spot_b)
        } else {
            (&self.spot_b, &self.spot_a)
        };
        let result = recommend(
            &self.spot_vectors[agency],
            &self.spot_vectors[1 - agency],
            user,
            &self.schema,
            SpotNames {
                agency_id: &agency_spot.id,
                agency_name: &agency_spot.name,
                other_name: &other_spot.name,
            },
        )?;
        let mut o = Outcome::say(format!("{} {}", result.message, self.qa_prompt()), Stage::QandA);
        o.reply_stage = Stage::Recommendation;
        o.pop_question = leaving_attribute;
        o.recommendation = Some(result);
        Ok(o)
    }

    fn question_and_answer(&self, input: &EngineInput, lexicon: &Lexicon) -> Result<Outcome> {
        let text = match input {
            EngineInput::Timeout => return Ok(Outcome::closing(CLOSING_TEXT.to_owned())),
            EngineInput::Utterance(text) => text,
        };
        let normalized = normalize(text);
        for spot in [&self.spot_a, &self.spot_b] {
            let hit = spot.qa_entries.iter().position(|qa| {
                qa.keywords.iter().any(|k| {
                    let k = normalize(k);
                    !k.is_empty() && normalized.contains(&k)
                })
            });
            if let Some(i) = hit {
                let mut o = Outcome::say(spot.qa_entries[i].answer.clone(), Stage::QandA);
                o.matched = Some((format!("{SPOT_QA_PREFIX}{}", spot.id), i));
                return Ok(o);
            }
        }
        if let Some((i, entry)) = lexicon::match_keywords(text, QA_DONE, lexicon)? {
            let mut o = Outcome::closing(format!("{} {CLOSING_TEXT}", entry.response));
            o.matched = Some((QA_DONE.to_owned(), i));
            o.user_vector = Some(merge_update(&self.user_vector, &entry.rule)?);
            return Ok(o);
        }
        Ok(Outcome::say(QA_MISS_TEXT.to_owned(), Stage::QandA))
    }
}
