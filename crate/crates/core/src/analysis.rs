//! Offline analysis of transcripts, response annotations and questionnaires.
//!
//! Per-session features are computed from a transcript plus its annotations,
//! then correlated with the overall satisfaction score across sessions.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::engine::Turn;
use crate::error::{Error, Result};
use crate::lexicon::normalize;
use crate::transcript::Transcript;

pub const DEFAULT_RESTATEMENT_THRESHOLD: f64 = 0.8;
pub const QUESTIONNAIRE_ITEMS: usize = 9;
pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 7;

/// Outcome label for one user utterance. Everything except `Appropriate`
/// is a cause of an incorrect response; several causes may apply at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Appropriate,
    VadFailure,
    AsrMisrecognition,
    KeywordMissing,
    OutOfTopic,
    Other,
}

impl Cause {
    pub const ALL: [Cause; 6] = [
        Cause::Appropriate,
        Cause::VadFailure,
        Cause::AsrMisrecognition,
        Cause::KeywordMissing,
        Cause::OutOfTopic,
        Cause::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Cause::Appropriate => "Understood and answered as expected",
            Cause::VadFailure => "VAD failure",
            Cause::AsrMisrecognition => "ASR misrecognition",
            Cause::KeywordMissing => "Missing keyword",
            Cause::OutOfTopic => "Out of topic",
            Cause::Other => "Other",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Cause::Appropriate => "appropriate",
            Cause::VadFailure => "vad_failure",
            Cause::AsrMisrecognition => "asr_misrecognition",
            Cause::KeywordMissing => "keyword_missing",
            Cause::OutOfTopic => "out_of_topic",
            Cause::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TurnRef {
    pub session_id: String,
    pub turn_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAnnotation")]
pub struct Annotation {
    pub turn_ref: TurnRef,
    causes: BTreeSet<Cause>,
}

#[derive(Deserialize)]
struct RawAnnotation {
    turn_ref: TurnRef,
    causes: BTreeSet<Cause>,
}

impl TryFrom<RawAnnotation> for Annotation {
    type Error = Error;

    fn try_from(raw: RawAnnotation) -> Result<Self> {
        Annotation::new(raw.turn_ref, raw.causes)
    }
}

impl Annotation {
    pub fn new(turn_ref: TurnRef, causes: impl IntoIterator<Item = Cause>) -> Result<Self> {
        let causes: BTreeSet<Cause> = causes.into_iter().collect();
        if causes.is_empty() {
            return Err(Error::InvalidAnnotation(format!(
                "turn {}/{} has no label",
                turn_ref.session_id, turn_ref.turn_index
            )));
        }
        if causes.contains(&Cause::Appropriate) && causes.len() > 1 {
            return Err(Error::InvalidAnnotation(format!(
                "turn {}/{}: `appropriate` cannot be combined with other causes",
                turn_ref.session_id, turn_ref.turn_index
            )));
        }
        Ok(Annotation { turn_ref, causes })
    }

    pub fn causes(&self) -> &BTreeSet<Cause> {
        &self.causes
    }

    pub fn is_appropriate(&self) -> bool {
        self.causes.contains(&Cause::Appropriate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub session_id: String,
    pub items: Vec<u8>,
}

/// Sum of the nine 7-point items, in 9..=63.
pub fn overall_satisfaction(q: &Questionnaire) -> Result<u32> {
    let bad = |reason: String| Error::InvalidQuestionnaire {
        session: q.session_id.clone(),
        reason,
    };
    if q.items.len() != QUESTIONNAIRE_ITEMS {
        return Err(bad(format!(
            "expected {QUESTIONNAIRE_ITEMS} items, got {}",
            q.items.len()
        )));
    }
    if let Some(item) = q.items.iter().find(|i| !(LIKERT_MIN..=LIKERT_MAX).contains(*i)) {
        return Err(bad(format!("item value {item} outside {LIKERT_MIN}..={LIKERT_MAX}")));
    }
    Ok(q.items.iter().map(|&i| u32::from(i)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauseCount {
    pub count: usize,
    /// Percent of all user utterances, 0..=100.
    pub percentage: f64,
}

/// Counts per cause. A turn carrying several causes is counted under each of them.
pub fn tally_causes(
    annotations: &[Annotation],
    n_utterances: usize,
) -> Result<BTreeMap<Cause, CauseCount>> {
    if n_utterances == 0 {
        return Err(Error::InvalidInput("tally over zero utterances".into()));
    }
    let mut seen = HashSet::new();
    let mut counts: BTreeMap<Cause, usize> = Cause::ALL.iter().map(|&c| (c, 0)).collect();
    for a in annotations {
        if !seen.insert(&a.turn_ref) {
            return Err(Error::InvalidAnnotation(format!(
                "turn {}/{} annotated twice",
                a.turn_ref.session_id, a.turn_ref.turn_index
            )));
        }
        for c in &a.causes {
            *counts.get_mut(c).expect("all causes seeded") += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(c, count)| {
            let percentage = 100.0 * count as f64 / n_utterances as f64;
            (c, CauseCount { count, percentage })
        })
        .collect())
}

/// `1 - indel_distance / (|a| + |b|)` over normalized characters; 1.0 for two empty strings.
pub fn utterance_similarity(a: &str, b: &str) -> f64 {
    let a = normalize(a);
    let b = normalize(b);
    rapidfuzz::distance::indel::normalized_similarity(a.chars(), b.chars())
}

/// Indices of user turns that repeat the previous user turn of the same stage.
pub fn detect_restatements(transcript: &Transcript, similarity_threshold: f64) -> Result<Vec<usize>> {
    if !(similarity_threshold > 0.0 && similarity_threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "similarity threshold {similarity_threshold} outside (0, 1]"
        )));
    }
    let mut flagged = Vec::new();
    let mut previous: Option<&Turn> = None;
    for turn in transcript.user_turns() {
        if let Some(prev) = previous {
            if prev.stage == turn.stage
                && utterance_similarity(&prev.text, &turn.text) >= similarity_threshold
            {
                flagged.push(turn.index);
            }
        }
        previous = Some(turn);
    }
    Ok(flagged)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let fail = |reason: &str| Error::Statistics {
        feature: None,
        reason: reason.to_owned(),
    };
    if x.len() != y.len() {
        return Err(fail("series lengths differ"));
    }
    if x.len() < 2 {
        return Err(fail("need at least two observations"));
    }
    let constant = |s: &[f64]| s.iter().all(|v| *v == s[0]);
    if constant(x) || constant(y) {
        return Err(fail("zero variance"));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    pub n_user_utterances: usize,
    pub pct_appropriate: f64,
    pub pct_incorrect: f64,
    pub pct_fallback: f64,
    pub n_restatements: usize,
    pub satisfaction: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    NUserUtterances,
    PctAppropriate,
    PctIncorrect,
    PctFallback,
    NRestatements,
}

impl Feature {
    /// Report row order.
    pub const ALL: [Feature; 5] = [
        Feature::NUserUtterances,
        Feature::PctAppropriate,
        Feature::PctIncorrect,
        Feature::PctFallback,
        Feature::NRestatements,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::NUserUtterances => "n_user_utterances",
            Feature::PctAppropriate => "pct_appropriate",
            Feature::PctIncorrect => "pct_incorrect",
            Feature::PctFallback => "pct_fallback",
            Feature::NRestatements => "n_restatements",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Feature::NUserUtterances => "Number of user utterances",
            Feature::PctAppropriate => "Share of appropriate responses",
            Feature::PctIncorrect => "Share of incorrect responses",
            Feature::PctFallback => "Share of fallback responses",
            Feature::NRestatements => "Number of restatements",
        }
    }

    pub fn value(self, f: &SessionFeatures) -> f64 {
        match self {
            Feature::NUserUtterances => f.n_user_utterances as f64,
            Feature::PctAppropriate => f.pct_appropriate,
            Feature::PctIncorrect => f.pct_incorrect,
            Feature::PctFallback => f.pct_fallback,
            Feature::NRestatements => f.n_restatements as f64,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Features of one session.
///
/// Fractions are over the session's user utterances. An utterance counts as
/// incorrect when it is annotated with a non-appropriate cause and the
/// system did not answer it with the fallback response.
pub fn session_features(
    transcript: &Transcript,
    annotations: &[Annotation],
    satisfaction: u32,
    restatement_threshold: f64,
) -> Result<SessionFeatures> {
    let sid = &transcript.header.session_id;
    let labels: HashMap<usize, &Annotation> = annotations
        .iter()
        .filter(|a| &a.turn_ref.session_id == sid)
        .map(|a| (a.turn_ref.turn_index, a))
        .collect();

    let mut n = 0usize;
    let (mut appropriate, mut incorrect, mut fallback) = (0usize, 0usize, 0usize);
    for turn in transcript.user_turns() {
        n += 1;
        let fell_back = transcript.reply_to(turn.index).is_some_and(|r| r.fallback);
        fallback += usize::from(fell_back);
        match labels.get(&turn.index) {
            Some(a) if a.is_appropriate() => appropriate += 1,
            Some(_) if !fell_back => incorrect += 1,
            _ => {}
        }
    }
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(SessionFeatures {
        n_user_utterances: n,
        pct_appropriate: frac(appropriate),
        pct_incorrect: frac(incorrect),
        pct_fallback: frac(fallback),
        n_restatements: detect_restatements(transcript, restatement_threshold)?.len(),
        satisfaction,
    })
}

fn feature_correlation(features: &[SessionFeatures], feature: Feature) -> Result<f64> {
    let x: Vec<f64> = features.iter().map(|f| feature.value(f)).collect();
    let y: Vec<f64> = features.iter().map(|f| f64::from(f.satisfaction)).collect();
    pearson(&x, &y).map_err(|e| match e {
        Error::Statistics { reason, .. } => Error::Statistics {
            feature: Some(feature.name().to_owned()),
            reason,
        },
        other => other,
    })
}

/// Correlation of every feature with satisfaction, in report row order.
pub fn correlation_report(features: &[SessionFeatures]) -> Result<Vec<(Feature, f64)>> {
    Feature::ALL
        .iter()
        .map(|&f| feature_correlation(features, f).map(|r| (f, r)))
        .collect()
}

/// Aggregate report over a corpus of sessions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub n_sessions: usize,
    pub n_utterances: usize,
    pub mean_satisfaction: Option<f64>,
    pub causes: BTreeMap<Cause, CauseCount>,
    /// Per-feature correlation, or the reason it could not be computed.
    pub correlations: Vec<(Feature, std::result::Result<f64, String>)>,
}

impl AnalysisReport {
    pub fn build(
        transcripts: &[Transcript],
        annotations: &[Annotation],
        questionnaires: &[Questionnaire],
        restatement_threshold: f64,
    ) -> Result<Self> {
        let mut scores = HashMap::new();
        for q in questionnaires {
            scores.insert(q.session_id.as_str(), overall_satisfaction(q)?);
        }
        let n_utterances: usize = transcripts.iter().map(|t| t.user_turns().count()).sum();
        let causes = tally_causes(annotations, n_utterances.max(1))?;

        let mut features = Vec::new();
        for t in transcripts {
            if let Some(&s) = scores.get(t.header.session_id.as_str()) {
                features.push(session_features(t, annotations, s, restatement_threshold)?);
            }
        }
        let mean_satisfaction = (!scores.is_empty())
            .then(|| scores.values().map(|&s| f64::from(s)).sum::<f64>() / scores.len() as f64);
        let correlations = Feature::ALL
            .iter()
            .map(|&f| (f, feature_correlation(&features, f).map_err(|e| e.to_string())))
            .collect();
        Ok(AnalysisReport {
            n_sessions: transcripts.len(),
            n_utterances,
            mean_satisfaction,
            causes,
            correlations,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("section\titem\tvalue\tpercentage\n");
        let _ = writeln!(out, "summary\tsessions\t{}\t", self.n_sessions);
        let _ = writeln!(out, "summary\tuser_utterances\t{}\t", self.n_utterances);
        if let Some(m) = self.mean_satisfaction {
            let _ = writeln!(out, "summary\tmean_satisfaction\t{m:.2}\t");
        }
        for (cause, c) in &self.causes {
            let _ = writeln!(out, "causes\t{}\t{}\t{:.1}", cause.key(), c.count, c.percentage);
        }
        for (feature, r) in &self.correlations {
            match r {
                Ok(r) => {
                    let _ = writeln!(out, "correlation\t{}\t{r:.4}\t", feature.name());
                }
                Err(_) => {
                    let _ = writeln!(out, "correlation\t{}\tNA\t", feature.name());
                }
            }
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} sessions, {} user utterances",
            self.n_sessions, self.n_utterances
        );
        if let Some(m) = self.mean_satisfaction {
            let _ = writeln!(out, "Mean overall satisfaction: {m:.1} / 63");
        }
        out.push('\n');
        out.push_str(&render_cause_table(&self.causes));
        out.push('\n');
        let _ = writeln!(out, "Correlation with overall satisfaction");
        for (feature, r) in &self.correlations {
            let value = match r {
                Ok(r) => format!("{r:+.2}"),
                Err(_) => "n/a".to_owned(),
            };
            let _ = writeln!(out, "  {:<34}{value:>6}", feature.label());
        }
        out
    }
}

/// Plain-text table: appropriate count first, then one row per cause.
pub fn render_cause_table(causes: &BTreeMap<Cause, CauseCount>) -> String {
    let mut out = String::from("Cause of incorrect responses\n");
    for (cause, c) in causes {
        let _ = writeln!(
            out,
            "  {:<36}{:>5} ({:.1}%)",
            cause.label(),
            c.count,
            c.percentage
        );
    }
    out
}

/// Reads a JSONL file body into records, naming the failing line.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| {
                Error::InvalidInput(format!("line {}: {e}", n + 1))
            })
        })
        .collect()
}
