//! In-process session store with one append-only JSONL transcript per session.
//!
//! Every step is written to disk before its reply is handed back, and steps on
//! one session are serialized by that session's lock. On startup the store
//! rebuilds sessions by replaying the transcripts it finds.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use advisor_core::transcript::turn_line;
use advisor_core::{replay, start_session, EngineInput, Session, Stage, Transcript};
use thiserror::Error;
use tokio::sync::Mutex;

use crate::resources::Resources;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown spot `{0}`")]
    UnknownSpot(String),
    #[error(transparent)]
    Engine(#[from] advisor_core::Error),
    #[error("transcript i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub reply: String,
    pub stage: Stage,
    pub done: bool,
}

struct Slot {
    session: Session,
    file: File,
    /// Time of the last input, for the idle sweep.
    last_input: u64,
}

pub struct SessionStore {
    dir: PathBuf,
    resources: Arc<Resources>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Slot>>>>,
}

fn append(file: &mut File, lines: &[String]) -> std::io::Result<()> {
    let mut buf = String::new();
    for line in lines {
        buf.push_str(line);
        buf.push('\n');
    }
    file.write_all(buf.as_bytes())?;
    file.sync_data()
}

impl SessionStore {
    /// Opens (creating if needed) `dir` and recovers every transcript in it.
    pub fn open(dir: impl Into<PathBuf>, resources: Arc<Resources>) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let store = SessionStore {
            dir,
            resources,
            sessions: RwLock::new(HashMap::new()),
        };
        store.recover()?;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn resources(&self) -> &Resources {
        &self.resources
    }

    fn path_for(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn recover(&self) -> Result<(), StoreError> {
        let mut recovered = HashMap::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            let restored = Transcript::from_jsonl(&text).and_then(|t| {
                let session = replay(&t, &self.resources.schema, &self.resources.lexicon)?;
                if session.turn_log() != t.turns.as_slice() {
                    return Err(advisor_core::Error::InvalidTranscript(
                        "replay diverges from the recorded turns".into(),
                    ));
                }
                Ok(session)
            });
            match restored {
                Ok(session) => {
                    let file = OpenOptions::new().append(true).open(&path)?;
                    let last_input = session
                        .turn_log()
                        .last()
                        .map_or(session.start_time, |t| t.time);
                    tracing::info!(session = %session.id, turns = session.turn_log().len(), "recovered session");
                    recovered.insert(
                        session.id.clone(),
                        Arc::new(Mutex::new(Slot { session, file, last_input })),
                    );
                }
                Err(e) => tracing::warn!(path = %path.display(), error = %e, "skipping transcript"),
            }
        }
        self.sessions.write().expect("store lock").extend(recovered);
        Ok(())
    }

    /// Starts a session over two catalog spots and persists its header.
    /// Returns the new session id and the greeting.
    pub fn create(
        &self,
        spot_a_id: &str,
        spot_b_id: &str,
        agency_spot: u8,
        now: u64,
    ) -> Result<(String, String), StoreError> {
        let catalog = &self.resources.catalog;
        let a = catalog
            .get(spot_a_id)
            .ok_or_else(|| StoreError::UnknownSpot(spot_a_id.to_owned()))?;
        let b = catalog
            .get(spot_b_id)
            .ok_or_else(|| StoreError::UnknownSpot(spot_b_id.to_owned()))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let (session, greeting) =
            start_session(id.clone(), a.clone(), b.clone(), agency_spot, &self.resources.schema, now)?;
        let mut file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(self.path_for(&id))?;
        append(&mut file, &[session.header().to_line()])?;
        self.sessions.write().expect("store lock").insert(
            id.clone(),
            Arc::new(Mutex::new(Slot { session, file, last_input: now })),
        );
        Ok((id, greeting))
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, StoreError> {
        self.sessions
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(id.to_owned()))
    }

    pub async fn step(&self, id: &str, input: EngineInput, now: u64) -> Result<StepOutcome, StoreError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().await;
        Self::step_locked(&mut slot, input, now, &self.resources)
    }

    fn step_locked(
        slot: &mut Slot,
        input: EngineInput,
        now: u64,
        resources: &Resources,
    ) -> Result<StepOutcome, StoreError> {
        // step a copy so a failed write leaves memory and disk in agreement
        let mut next = slot.session.clone();
        let reply = next.step(input, now, &resources.lexicon)?;
        let new_turns: Vec<String> = next.turn_log()[slot.session.turn_log().len()..]
            .iter()
            .map(turn_line)
            .collect();
        append(&mut slot.file, &new_turns)?;
        slot.session = next;
        slot.last_input = now;
        Ok(StepOutcome {
            reply,
            stage: slot.session.stage().clone(),
            done: slot.session.is_ended(),
        })
    }

    pub async fn transcript(&self, id: &str) -> Result<Transcript, StoreError> {
        let slot = self.slot(id)?;
        let slot = slot.lock().await;
        Ok(slot.session.transcript())
    }

    pub async fn session(&self, id: &str) -> Result<Session, StoreError> {
        let slot = self.slot(id)?;
        let slot = slot.lock().await;
        Ok(slot.session.clone())
    }

    /// Fires a timeout into sessions that sat idle in a stage whose reply does
    /// not depend on what the user says (greeting, Q&A), and closes sessions
    /// past the time cap. Busy sessions are skipped. Returns the ids stepped.
    pub fn sweep(&self, now: u64, idle_ms: u64) -> Vec<String> {
        let slots: Vec<_> = self
            .sessions
            .read()
            .expect("store lock")
            .iter()
            .map(|(id, slot)| (id.clone(), Arc::clone(slot)))
            .collect();
        let mut stepped = Vec::new();
        for (id, slot) in slots {
            let Ok(mut slot) = slot.try_lock() else { continue };
            if slot.session.is_ended() {
                continue;
            }
            let over_cap = slot.session.elapsed(now) > advisor_core::engine::SESSION_LIMIT_MS;
            let idle = now.saturating_sub(slot.last_input) >= idle_ms
                && matches!(slot.session.stage(), Stage::Greeting | Stage::QandA);
            if over_cap || idle {
                match Self::step_locked(&mut slot, EngineInput::Timeout, now, &self.resources) {
                    Ok(_) => stepped.push(id),
                    Err(e) => tracing::warn!(session = %id, error = %e, "idle sweep failed"),
                }
            }
        }
        stepped
    }
}
