//! Scripted, fully deterministic sessions.
//!
//! ```json
//! {"session_id": "demo", "spots": ["riverside_park", "science_museum"], "agency": 0,
//!  "turns": [{"at_ms": 1500, "timeout": true}, {"at_ms": 4000, "text": "with my kids"}]}
//! ```
//!
//! `at_ms` is relative to `start_time` (default 0) and must not decrease.

use advisor_core::{start_session, EngineInput, Session};
use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use crate::resources::Resources;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default = "default_session_id")]
    pub session_id: String,
    pub spots: [String; 2],
    pub agency: u8,
    #[serde(default)]
    pub start_time: u64,
    pub turns: Vec<ScriptTurn>,
}

fn default_session_id() -> String {
    "simulation".to_owned()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptTurn {
    pub at_ms: u64,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub timeout: bool,
}

impl ScriptTurn {
    fn input(&self) -> Result<EngineInput> {
        match (&self.text, self.timeout) {
            (Some(text), false) => Ok(EngineInput::utterance(text.clone())?),
            (None, true) => Ok(EngineInput::Timeout),
            _ => bail!("turn at {} ms needs exactly one of `text` or `timeout: true`", self.at_ms),
        }
    }
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self> {
        let script: Script = serde_json::from_str(text).context("malformed script")?;
        let mut last = 0;
        for turn in &script.turns {
            ensure!(turn.at_ms >= last, "turn times go backwards at {} ms", turn.at_ms);
            last = turn.at_ms;
            turn.input()?;
        }
        Ok(script)
    }
}

#[derive(Debug)]
pub struct Simulation {
    pub session: Session,
    /// Script turns left over after the session ended.
    pub unused_turns: usize,
}

pub fn simulate(resources: &Resources, script: &Script) -> Result<Simulation> {
    let spot = |id: &str| {
        resources
            .catalog
            .get(id)
            .cloned()
            .with_context(|| format!("unknown spot `{id}`"))
    };
    let (mut session, _) = start_session(
        script.session_id.clone(),
        spot(&script.spots[0])?,
        spot(&script.spots[1])?,
        script.agency,
        &resources.schema,
        script.start_time,
    )?;
    let mut used = 0;
    for turn in &script.turns {
        if session.is_ended() {
            break;
        }
        session.step(turn.input()?, script.start_time + turn.at_ms, &resources.lexicon)?;
        used += 1;
    }
    Ok(Simulation {
        unused_turns: script.turns.len() - used,
        session,
    })
}
