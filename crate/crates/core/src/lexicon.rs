//! Keyword lexicon and utterance matching.
//!
//! Each question id owns an ordered list of [`KeywordEntry`]s. An utterance
//! matches an entry when any of the entry's keywords occurs as a substring of
//! the utterance after both sides pass through [`normalize`]. The first
//! matching entry wins.

use std::sync::Arc;

use caseless::default_case_fold_str;
use indexmap::IndexMap;
use serde::Deserialize;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::model::{AttributeSchema, TriValue, UpdateRule};

pub const DEFAULT_FALLBACK: &str = "I see.";

/// Question ids used by the fixed parts of the dialogue plan. Attribute
/// questions use the attribute id itself.
pub const REASON_QUESTIONS: [&str; 2] = ["reason_0", "reason_1"];
pub const GENERAL_QUESTION: &str = "general";
pub const QA_DONE: &str = "qa_done";

/// Rule key standing for the attribute a question is about.
const SELF_KEY: &str = "$self";

/// NFKC, full case folding, then whitespace collapsed to single spaces.
pub fn normalize(text: &str) -> String {
    let folded: String = default_case_fold_str(&text.nfkc().collect::<String>())
        .nfkc()
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordEntry {
    keywords: Vec<String>,
    normalized: Vec<String>,
    pub rule: UpdateRule,
    pub response: String,
}

impl KeywordEntry {
    pub fn new(keywords: Vec<String>, rule: UpdateRule, response: String) -> Result<Self> {
        if keywords.is_empty() {
            return Err(Error::InvalidLexicon("entry has no keywords".into()));
        }
        if response.trim().is_empty() {
            return Err(Error::InvalidLexicon(format!(
                "entry {keywords:?} has an empty response"
            )));
        }
        let normalized: Vec<String> = keywords.iter().map(|k| normalize(k)).collect();
        if let Some(i) = normalized.iter().position(String::is_empty) {
            return Err(Error::InvalidLexicon(format!(
                "keyword {:?} is empty after normalization",
                keywords[i]
            )));
        }
        Ok(KeywordEntry {
            keywords,
            normalized,
            rule,
            response,
        })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn normalized_keywords(&self) -> &[String] {
        &self.normalized
    }

    fn matches(&self, normalized_utterance: &str) -> bool {
        self.normalized
            .iter()
            .any(|k| normalized_utterance.contains(k.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub fallback_response: String,
    questions: IndexMap<String, Vec<KeywordEntry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(default = "default_fallback")]
    fallback_response: String,
    questions: IndexMap<String, QuestionDef>,
}

fn default_fallback() -> String {
    DEFAULT_FALLBACK.to_owned()
}

/// A question either lists its entries or names another question whose list it reuses.
#[derive(Deserialize)]
#[serde(untagged)]
enum QuestionDef {
    Entries(Vec<EntryDef>),
    Alias(String),
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct EntryDef {
    keywords: Vec<String>,
    #[serde(default)]
    rule: IndexMap<String, TriValue>,
    response: String,
}

impl Lexicon {
    pub fn new(
        fallback_response: String,
        questions: IndexMap<String, Vec<KeywordEntry>>,
    ) -> Result<Self> {
        if fallback_response.trim().is_empty() {
            return Err(Error::InvalidLexicon("fallback_response is empty".into()));
        }
        Ok(Lexicon {
            fallback_response,
            questions,
        })
    }

    /// Parses a lexicon file against `schema`.
    ///
    /// Rules may omit attributes (they default to DontCare) and may use the
    /// key `$self` inside attribute questions to mean the question's own
    /// attribute. A question given as a string reuses the entry list of the
    /// named question, with `$self` rebound to the aliasing question.
    pub fn from_json(text: &str, schema: &Arc<AttributeSchema>) -> Result<Self> {
        let file: LexiconFile = serde_json::from_str(text)?;
        let mut questions = IndexMap::with_capacity(file.questions.len());
        for (qid, def) in &file.questions {
            let defs = match def {
                QuestionDef::Entries(defs) => defs,
                QuestionDef::Alias(target) => match file.questions.get(target) {
                    Some(QuestionDef::Entries(defs)) => defs,
                    Some(QuestionDef::Alias(_)) => {
                        return Err(Error::InvalidLexicon(format!(
                            "question `{qid}` aliases `{target}`, which is itself an alias"
                        )))
                    }
                    None => {
                        return Err(Error::InvalidLexicon(format!(
                            "question `{qid}` aliases unknown question `{target}`"
                        )))
                    }
                },
            };
            let entries = defs
                .iter()
                .map(|d| build_entry(qid, d, schema))
                .collect::<Result<Vec<_>>>()?;
            questions.insert(qid.clone(), entries);
        }
        Lexicon::new(file.fallback_response, questions)
    }

    pub fn question(&self, qid: &str) -> Result<&[KeywordEntry]> {
        self.questions
            .get(qid)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownQuestion(qid.to_owned()))
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &str> {
        self.questions.keys().map(String::as_str)
    }

    /// Verifies that every question the dialogue can ask over `schema` has entries.
    pub fn check_plan(&self, schema: &AttributeSchema) -> Result<()> {
        let fixed = REASON_QUESTIONS.iter().copied().chain([GENERAL_QUESTION, QA_DONE]);
        for qid in fixed.chain(schema.ids()) {
            if !self.questions.contains_key(qid) {
                return Err(Error::InvalidLexicon(format!(
                    "no entries for question `{qid}`"
                )));
            }
        }
        Ok(())
    }
}

fn build_entry(qid: &str, def: &EntryDef, schema: &Arc<AttributeSchema>) -> Result<KeywordEntry> {
    let mut pairs = Vec::with_capacity(def.rule.len());
    for (key, &value) in &def.rule {
        let id = if key == SELF_KEY {
            if schema.index_of(qid).is_none() {
                return Err(Error::InvalidLexicon(format!(
                    "`{SELF_KEY}` used in question `{qid}`, which is not an attribute question"
                )));
            }
            qid
        } else {
            key.as_str()
        };
        pairs.push((id, value));
    }
    let rule = UpdateRule::from_pairs(schema, pairs)
        .map_err(|e| Error::InvalidLexicon(format!("question `{qid}`: {e}")))?;
    KeywordEntry::new(def.keywords.clone(), rule, def.response.clone())
        .map_err(|e| Error::InvalidLexicon(format!("question `{qid}`: {e}")))
}

/// Returns the first entry of `question_id` whose keywords occur in `utterance`,
/// together with its index in the question's list.
pub fn match_keywords<'a>(
    utterance: &str,
    question_id: &str,
    lexicon: &'a Lexicon,
) -> Result<Option<(usize, &'a KeywordEntry)>> {
    let entries = lexicon.question(question_id)?;
    Ok(first_match(utterance, entries))
}

pub(crate) fn first_match<'a>(
    utterance: &str,
    entries: &'a [KeywordEntry],
) -> Option<(usize, &'a KeywordEntry)> {
    let text = normalize(utterance);
    entries.iter().enumerate().find(|(_, e)| e.matches(&text))
}
