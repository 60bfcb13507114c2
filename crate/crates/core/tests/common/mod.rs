#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use advisor_core::analysis::{Annotation, Cause, TurnRef};
use advisor_core::engine::Stage;
use advisor_core::{
    start_session, AttributeSchema, Catalog, EngineInput, Lexicon, Session, SpotRecord,
};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn schema() -> Arc<AttributeSchema> {
    Arc::new(AttributeSchema::default_schema())
}

pub fn catalog() -> Catalog {
    Catalog::from_json(&std::fs::read_to_string(data_dir().join("catalog.json")).unwrap()).unwrap()
}

pub fn lexicon() -> Lexicon {
    let lex = Lexicon::from_json(
        &std::fs::read_to_string(data_dir().join("lexicon.json")).unwrap(),
        &schema(),
    )
    .unwrap();
    lex.check_plan(&schema()).unwrap();
    lex
}

pub fn spot(id: &str) -> SpotRecord {
    catalog().get(id).cloned().unwrap()
}

pub fn open(a: &str, b: &str, agency: u8) -> Session {
    start_session(format!("{a}-{b}"), spot(a), spot(b), agency, &schema(), 0)
        .unwrap()
        .0
}

pub fn say(text: &str) -> EngineInput {
    EngineInput::utterance(text).unwrap()
}

/// Drives a session with one input per second until it ends or inputs run out.
pub fn run(session: &mut Session, lexicon: &Lexicon, inputs: &[EngineInput]) -> Vec<String> {
    let mut replies = Vec::new();
    for (i, input) in inputs.iter().enumerate() {
        if session.is_ended() {
            break;
        }
        let now = session.start_time + 1_000 * (i as u64 + 1);
        replies.push(session.step(input.clone(), now, lexicon).unwrap());
    }
    replies
}

/// Answers every question with "yes" and closes the Q&A.
pub fn affirmative_script(session: &Session) -> Vec<EngineInput> {
    let mut inputs = vec![say("yes, that's right"), say("yes"), say("yes")];
    inputs.push(say("yes")); // general question
    inputs.extend(session.planned_questions().iter().map(|_| say("yes")));
    inputs.push(say("no, that's all"));
    inputs
}

pub fn stage_ranks(session: &Session) -> Vec<u8> {
    session.turn_log().iter().map(|t| t.stage.rank()).collect()
}

pub fn asked_attributes(session: &Session) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in session.turn_log() {
        if let Stage::AttributeQuestion { attr_id } = &t.stage {
            if out.last() != Some(attr_id) {
                out.push(attr_id.clone());
            }
        }
    }
    out
}

/// 483 utterances: 174 appropriate, and causes 139/42/127/20/7 spread over the
/// other 309 with the surplus as multi-label turns.
pub fn cause_corpus() -> (Vec<Annotation>, usize) {
    let n = 483;
    let mut labels: Vec<Vec<Cause>> = Vec::new();
    labels.extend((0..174).map(|_| vec![Cause::Appropriate]));
    let mut remaining: Vec<(Cause, usize)> = vec![
        (Cause::VadFailure, 139),
        (Cause::AsrMisrecognition, 42),
        (Cause::KeywordMissing, 127),
        (Cause::OutOfTopic, 20),
        (Cause::Other, 7),
    ];
    let mut failing: Vec<Vec<Cause>> = vec![Vec::new(); 309];
    let mut slot = 0;
    for (cause, count) in remaining.iter_mut() {
        for _ in 0..*count {
            failing[slot % 309].push(*cause);
            slot += 1;
        }
    }
    labels.extend(failing);
    let anns = labels
        .into_iter()
        .enumerate()
        .map(|(i, causes)| {
            Annotation::new(
                TurnRef { session_id: format!("s{}", i % 32), turn_index: i },
                causes,
            )
            .unwrap()
        })
        .collect();
    (anns, n)
}

