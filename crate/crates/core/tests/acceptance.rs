//! Acceptance gate. Each criterion runs in isolation and reports one
//! PASS/FAIL line; the test fails if any criterion fails.
//!
//! Runs without the libtest harness so the report is always printed:
//! `cargo test -p advisor-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use advisor_core::analysis::{overall_satisfaction, pearson, tally_causes, Cause, Questionnaire};
use advisor_core::engine::{CLOSING_TEXT, QA_MISS_TEXT, SESSION_LIMIT_MS};
use advisor_core::recommend::SpotNames;
use advisor_core::transcript::audit_user_vector;
use advisor_core::{
    merge_update, recommend, replay, AttributeSchema, AttributeVector, Branch, EngineInput,
    Session, Stage, Transcript, TriValue, UpdateRule,
};
use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(10);
const SUITE_TIME_LIMIT: Duration = Duration::from_secs(120);
const PERCENT_TOLERANCE: f64 = 0.05;
const PEARSON_TOLERANCE: f64 = 1e-9;
const RANDOM_RULE_SEQUENCES: usize = 10_000;

fn mini(ids: &[&str]) -> Arc<AttributeSchema> {
    let full = AttributeSchema::default_schema();
    Arc::new(AttributeSchema::new(ids.iter().map(|id| full.get(id).unwrap().clone()).collect()).unwrap())
}

fn vector_from_code(schema: &Arc<AttributeSchema>, mut code: usize) -> AttributeVector {
    let values = (0..schema.len())
        .map(|_| {
            let v = TriValue::ALL[code % 3];
            code /= 3;
            v
        })
        .collect();
    AttributeVector::from_values(schema, values).unwrap()
}

fn criterion_recommendation_oracle() {
    let start = Instant::now();
    let s = mini(&["children", "free_admission", "spring"]);
    let all: Vec<_> = (0..27).map(|c| vector_from_code(&s, c)).collect();
    let names = SpotNames { agency_id: "r", agency_name: "R", other_name: "N" };
    let mut agree = 0usize;
    let mut total = 0usize;
    for v_r in &all {
        for v_n in &all {
            for v_u in &all {
                let (mut m, mut u) = (0, 0);
                for (a, b) in v_r.values().iter().zip(v_u.values()) {
                    m += usize::from(*a == TriValue::Yes && *b == TriValue::Yes);
                    u += usize::from(*a == TriValue::Yes && *b == TriValue::No);
                }
                let oracle = if m == 0 && u == 0 {
                    Branch::Unknown
                } else if m >= u {
                    Branch::MatchDominant
                } else {
                    Branch::MismatchDominant
                };
                let r = recommend(v_r, v_n, v_u, &s, names).unwrap();
                agree += usize::from(r.branch == oracle && r.recommended_spot_id == "r");
                total += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert_eq!(total, 19_683);
    assert_eq!(agree, total, "branch agreement {agree}/{total}");
    assert!(elapsed < ORACLE_TIME_LIMIT, "took {elapsed:?}");
}

fn criterion_merge_table() {
    use TriValue::*;
    let table = [
        (Yes, Yes, Yes),
        (Yes, No, Yes),
        (Yes, DontCare, Yes),
        (No, Yes, Yes),
        (No, No, No),
        (No, DontCare, No),
        (DontCare, Yes, Yes),
        (DontCare, No, No),
        (DontCare, DontCare, DontCare),
    ];
    let one = mini(&["children"]);
    for (current, proposal, expected) in table {
        let user = AttributeVector::from_values(&one, vec![current]).unwrap();
        let rule = UpdateRule::new(AttributeVector::from_values(&one, vec![proposal]).unwrap());
        let out = merge_update(&user, &rule).unwrap();
        assert_eq!(out.values(), &[expected], "({current}, {proposal})");
        assert_eq!(user.values(), &[current], "input mutated");
    }

    let schema = Arc::new(AttributeSchema::default_schema());
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..RANDOM_RULE_SEQUENCES {
        let mut v = advisor_core::init_user_vector(&schema);
        let len = rng.random_range(1..12);
        let mut ever_yes = vec![false; schema.len()];
        for _ in 0..len {
            let proposal: Vec<TriValue> =
                (0..schema.len()).map(|_| TriValue::ALL[rng.random_range(0..3)]).collect();
            let rule = UpdateRule::new(AttributeVector::from_values(&schema, proposal).unwrap());
            v = merge_update(&v, &rule).unwrap();
            for (i, &value) in v.values().iter().enumerate() {
                if ever_yes[i] {
                    assert_eq!(value, Yes, "a Yes was demoted");
                }
                ever_yes[i] |= value == Yes;
            }
        }
    }
}

fn criterion_dialogue_flow() {
    let lex = lexicon();

    // (a) stage order and (b) stage-4 questions for every ordered catalog pair
    let ids: Vec<String> = catalog().spots.iter().map(|s| s.id.clone()).collect();
    for a in &ids {
        for b in ids.iter().filter(|b| *b != a) {
            for agency in 0..2 {
                let mut s = open(a, b, agency);
                let script = affirmative_script(&s);
                run(&mut s, &lex, &script);
                assert!(s.is_ended(), "{a}/{b} did not finish");
                let ranks = stage_ranks(&s);
                assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{a}/{b}: {ranks:?}");
                let mut distinct = ranks.clone();
                distinct.dedup();
                let expected: Vec<u8> = if s.planned_questions().is_empty() {
                    vec![0, 1, 2, 3, 5, 6, 7]
                } else {
                    (0..=7).collect()
                };
                assert_eq!(distinct, expected, "{a}/{b}");
                assert_eq!(asked_attributes(&s), s.planned_questions(), "{a}/{b}");
            }
        }
    }

    // (c) unmatched answers: fallback, never a repeat request
    let mut s = open("riverside_park", "science_museum", 0);
    let mut t = 1_000;
    s.step(EngineInput::Timeout, t, &lex).unwrap();
    while s.stage() != &Stage::QandA {
        t += 1_000;
        let reply = s.step(say("mumble mumble"), t, &lex).unwrap();
        assert!(reply.starts_with(&lex.fallback_response), "{reply}");
        assert_eq!(lex.fallback_response, "I see.");
        let lower = reply.to_lowercase();
        for phrase in ["repeat", "say that again", "pardon", "could you rephrase"] {
            assert!(!lower.contains(phrase), "{reply}");
        }
        assert!(s.turn_log().last().unwrap().fallback);
    }

    // (d) Q&A miss
    let reply = s.step(say("is there a gift shop"), t + 1_000, &lex).unwrap();
    assert_eq!(reply, QA_MISS_TEXT);
    assert_eq!(s.stage(), &Stage::QandA);

    // (e) injected clock past the cap, from every reachable stage
    let probe = open("riverside_park", "science_museum", 0);
    let script = affirmative_script(&probe);
    let mut seen = Vec::new();
    for k in 0..script.len() {
        let mut s = open("riverside_park", "science_museum", 0);
        run(&mut s, &lex, &script[..k]);
        seen.push(s.stage().rank());
        let reply = s.step(EngineInput::Timeout, SESSION_LIMIT_MS + 1, &lex).unwrap();
        assert_eq!(reply, CLOSING_TEXT);
        assert!(s.is_ended());
        assert_eq!(s.turn_log().last().unwrap().stage, Stage::FinalGreeting);
    }
    seen.dedup();
    assert_eq!(seen, vec![0, 1, 2, 3, 4, 6]);
}

fn random_session(rng: &mut StdRng, lex: &advisor_core::Lexicon) -> Session {
    const WORDS: [&str; 12] = [
        "yes", "no", "hmm", "with my kids", "by car", "I love art", "is there parking",
        "when does it open", "no, that's all", "in winter", "my dog", "either",
    ];
    let ids: Vec<String> = catalog().spots.iter().map(|s| s.id.clone()).collect();
    let a = rng.random_range(0..ids.len());
    let b = (a + rng.random_range(1..ids.len())) % ids.len();
    let mut s = open(&ids[a], &ids[b], rng.random_range(0..2));
    let mut now = 0;
    while !s.is_ended() && s.turn_log().len() < 80 {
        now += rng.random_range(500..30_000);
        let input = if rng.random_bool(0.15) {
            EngineInput::Timeout
        } else {
            say(WORDS[rng.random_range(0..WORDS.len())])
        };
        s.step(input, now, lex).unwrap();
    }
    s
}

fn criterion_replay_determinism() {
    let lex = lexicon();
    let schema = schema();
    let mut rng = StdRng::seed_from_u64(42);
    for _ in 0..200 {
        let s = random_session(&mut rng, &lex);
        let bytes = s.transcript().to_jsonl();
        let parsed = Transcript::from_jsonl(&bytes).unwrap();
        let replayed = replay(&parsed, &schema, &lex).unwrap();
        assert_eq!(replayed.user_vector(), s.user_vector());
        assert_eq!(replayed.transcript().to_jsonl(), bytes);
        assert_eq!(&audit_user_vector(&parsed, &schema, &lex).unwrap(), s.user_vector());
    }
}

fn criterion_analysis_arithmetic() {
    let (anns, n) = cause_corpus();
    assert_eq!(n, 483);
    let t = tally_causes(&anns, n).unwrap();
    assert_eq!(t[&Cause::Appropriate].count, 174);
    assert_eq!(t[&Cause::VadFailure].count, 139);
    assert!((t[&Cause::Appropriate].percentage - 36.0).abs() <= PERCENT_TOLERANCE);
    assert!((t[&Cause::VadFailure].percentage - 28.8).abs() <= PERCENT_TOLERANCE);

    let cases: [(&[f64], &[f64], f64); 3] = [
        (&[1., 2., 3.], &[2., 4., 6.], 1.0),
        (&[1., 2., 3.], &[3., 2., 1.], -1.0),
        (&[1., 2., 3., 4.], &[2., 1., 4., 3.], 0.6),
    ];
    for (x, y, expected) in cases {
        let r = pearson(x, y).unwrap();
        assert!((r - expected).abs() < PEARSON_TOLERANCE, "{r} vs {expected}");
    }

    let q = Questionnaire { session_id: "s".into(), items: vec![7; 9] };
    assert_eq!(overall_satisfaction(&q).unwrap(), 63);
}

fn main() -> std::process::ExitCode {
    let suite_start = Instant::now();
    let criteria: [(&str, fn()); 5] = [
        ("recommendation oracle equivalence (3^9 triples, < 10 s)", criterion_recommendation_oracle),
        ("merge-rule table + 10 000 random rule sequences", criterion_merge_table),
        ("dialogue-flow conformance (a)-(e)", criterion_dialogue_flow),
        ("replay determinism", criterion_replay_determinism),
        ("analysis arithmetic (cause tally fixture, pearson 1e-9, 9x7 = 63)", criterion_analysis_arithmetic),
    ];
    let mut failures = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(()) => println!("[PASS] {name} ({:.2?})", start.elapsed()),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("[FAIL] {name}: {msg}");
                failures.push(name);
            }
        }
    }
    let total = suite_start.elapsed();
    if total < SUITE_TIME_LIMIT {
        println!("[PASS] headless suite runtime under 2 minutes ({total:.2?})");
    } else {
        println!("[FAIL] headless suite runtime under 2 minutes ({total:.2?})");
        failures.push("suite runtime");
    }
    if failures.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failures:?}");
        std::process::ExitCode::FAILURE
    }
}
