//! Recommendation of the agency-designated spot.
//!
//! Three attribute sets drive the decision:
//! the match set `M(V_r, V_u)` (Yes in the agency spot and in the user vector),
//! the agency unmatch set `U(V_r, V_u)` (Yes in the agency spot, No for the user)
//! and the other spot's unmatch set `U(V_n, V_u)`.
//! The agency spot is recommended in every branch; only the explanation changes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{AttributeSchema, AttributeVector, TriValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `|M| >= |U(V_r, V_u)|` with at least one of the sets non-empty.
    MatchDominant,
    /// `|M| < |U(V_r, V_u)|`.
    MismatchDominant,
    /// Both `M` and `U(V_r, V_u)` are empty.
    Unknown,
}

impl Branch {
    /// Empty-empty is tested first so that the unknown-intention branch shadows `>=`.
    pub fn select(matched: usize, unmatched: usize) -> Branch {
        if matched == 0 && unmatched == 0 {
            Branch::Unknown
        } else if matched >= unmatched {
            Branch::MatchDominant
        } else {
            Branch::MismatchDominant
        }
    }
}

/// Why an attribute was spoken in the recommendation message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonRole {
    /// In `M(V_r, V_u)`.
    Match,
    /// In `U(V_r, V_u)`.
    AgencyMismatch,
    /// In `U(V_n, V_u)`.
    OtherMismatch,
    /// A Yes attribute of the agency spot, described generically.
    General,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationResult {
    pub branch: Branch,
    pub recommended_spot_id: String,
    pub m_set: BTreeSet<String>,
    pub u_r_set: BTreeSet<String>,
    pub u_n_set: BTreeSet<String>,
    /// Attributes mentioned in `message`, in the order they are spoken.
    pub reasons: Vec<(ReasonRole, String)>,
    pub message: String,
}

fn collect(spot: &AttributeVector, user: &AttributeVector, wanted: TriValue) -> Result<Vec<String>> {
    spot.check_compatible(user)?;
    Ok(spot
        .iter()
        .zip(user.values())
        .filter(|((_, s), u)| *s == TriValue::Yes && **u == wanted)
        .map(|((id, _), _)| id.to_owned())
        .collect())
}

/// `{ id | spot[id] = Yes and user[id] = Yes }`
pub fn match_set(spot: &AttributeVector, user: &AttributeVector) -> Result<BTreeSet<String>> {
    Ok(collect(spot, user, TriValue::Yes)?.into_iter().collect())
}

/// `{ id | spot[id] = Yes and user[id] = No }`
pub fn unmatch_set(spot: &AttributeVector, user: &AttributeVector) -> Result<BTreeSet<String>> {
    Ok(collect(spot, user, TriValue::No)?.into_iter().collect())
}

/// Identifies the two candidate spots for message rendering.
#[derive(Debug, Clone, Copy)]
pub struct SpotNames<'a> {
    pub agency_id: &'a str,
    pub agency_name: &'a str,
    pub other_name: &'a str,
}

/// Recommends the agency spot `v_r` over `v_n` given the user vector `v_u`.
pub fn recommend(
    v_r: &AttributeVector,
    v_n: &AttributeVector,
    v_u: &AttributeVector,
    schema: &AttributeSchema,
    names: SpotNames<'_>,
) -> Result<RecommendationResult> {
    // ordered lists (schema order) drive the message; sets are the public result
    let m = collect(v_r, v_u, TriValue::Yes)?;
    let u_r = collect(v_r, v_u, TriValue::No)?;
    let u_n = collect(v_n, v_u, TriValue::No)?;
    let branch = Branch::select(m.len(), u_r.len());

    let agency = names.agency_name;
    let other = names.other_name;
    let mut reasons = Vec::new();
    let mut speak = |role: ReasonRole, ids: &[String]| -> String {
        let phrases: Vec<&str> = ids
            .iter()
            .map(|id| {
                reasons.push((role, id.clone()));
                schema
                    .get(id)
                    .map(|a| a.reason_template.as_str())
                    .unwrap_or(id.as_str())
            })
            .collect();
        join_phrases(&phrases)
    };

    let mut parts: Vec<String> = Vec::new();
    match branch {
        Branch::MatchDominant => {
            parts.push(format!("I recommend {agency}."));
            parts.push(format!(
                "{agency} is {}, which matches what you told me.",
                speak(ReasonRole::Match, &m)
            ));
            if !u_n.is_empty() {
                parts.push(format!(
                    "On the other hand, {other} is {}, which does not fit your plans.",
                    speak(ReasonRole::OtherMismatch, &u_n)
                ));
            }
        }
        Branch::MismatchDominant => {
            parts.push(format!(
                "{agency} is {}, which does not quite match what you told me.",
                speak(ReasonRole::AgencyMismatch, &u_r)
            ));
            if !m.is_empty() {
                parts.push(format!(
                    "However, {agency} is {}, just as you wanted.",
                    speak(ReasonRole::Match, &m)
                ));
            }
            if !u_n.is_empty() {
                parts.push(format!(
                    "Also, {other} is {}, which does not fit your plans.",
                    speak(ReasonRole::OtherMismatch, &u_n)
                ));
            }
            parts.push(format!("All things considered, I still recommend {agency}."));
        }
        Branch::Unknown => {
            parts.push(format!("I recommend {agency}."));
            let general = v_r.ids_with(TriValue::Yes);
            if !general.is_empty() {
                parts.push(format!(
                    "Generally, {agency} is {}.",
                    speak(ReasonRole::General, &general)
                ));
            }
        }
    }

    Ok(RecommendationResult {
        branch,
        recommended_spot_id: names.agency_id.to_owned(),
        m_set: m.into_iter().collect(),
        u_r_set: u_r.into_iter().collect(),
        u_n_set: u_n.into_iter().collect(),
        reasons,
        message: parts.join(" "),
    })
}

fn join_phrases(phrases: &[&str]) -> String {
    match phrases {
        [] => String::new(),
        [one] => (*one).to_owned(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}
