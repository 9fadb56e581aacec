//! Interactive conversations held open between requests, independent of any
//! transport. Each session is locked separately, so requests on different
//! sessions never wait on each other.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, PoisonError};

use serde::Serialize;

use crate::conversation::{Conversation, Status, Transcript};
use crate::document::{transcript_to_json, ExplanationDoc, FeedbackDoc};
use crate::error::Error;
use crate::explanation::FeedbackTree;
use crate::model::{Model, WorldId};
use crate::selection::SearchBounds;
use crate::syntax::PropFormula;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SessionError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("feedback is for round {got} but the session is at round {expected}")]
    StaleRound { expected: usize, got: usize },
    #[error("conversation is over ({0})")]
    Finished(Status),
    /// The request itself was unacceptable, e.g. an invalid model.
    #[error(transparent)]
    Rejected(Error),
    /// Feedback that does not fit the pending explanation.
    #[error(transparent)]
    Malformed(Error),
    #[error("could not persist transcript: {0}")]
    Persist(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HistoryEntry {
    pub explanation: ExplanationDoc,
    pub feedback: FeedbackDoc,
}

/// Read-only view of a session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionState {
    pub id: String,
    pub question: String,
    pub round: usize,
    /// `None` while an explanation awaits feedback.
    pub status: Option<Status>,
    pub pending: Option<ExplanationDoc>,
    pub history: Vec<HistoryEntry>,
}

struct Session {
    conversation: Conversation,
}

/// All open sessions.
#[derive(Default)]
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    persist_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes each session's transcript to `<dir>/<id>.json` after every change.
    pub fn with_persistence(dir: PathBuf) -> Self {
        SessionStore {
            sessions: Mutex::default(),
            persist_dir: Some(dir),
        }
    }

    /// Opens a session and announces its first explanation.
    pub fn create(
        &self,
        m: &Model,
        world: &WorldId,
        claim: &PropFormula,
        bounds: SearchBounds,
        max_rounds: usize,
    ) -> Result<String, SessionError> {
        let conversation = Conversation::start(m, world, claim, bounds, max_rounds).map_err(SessionError::Rejected)?;
        let id = format!("{:032x}", rand::random::<u128>());
        let session = Session { conversation };
        self.persist(&id, &session)?;
        self.sessions
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    pub fn get_state(&self, id: &str) -> Result<SessionState, SessionError> {
        let s = self.session(id)?;
        let s = s.lock().unwrap_or_else(PoisonError::into_inner);
        Ok(state(id, &s.conversation))
    }

    /// Feedback on the pending explanation of round `round`.
    pub fn post_feedback(&self, id: &str, round: usize, bits: FeedbackTree) -> Result<SessionState, SessionError> {
        let s = self.session(id)?;
        let mut s = s.lock().unwrap_or_else(PoisonError::into_inner);
        let c = &mut s.conversation;
        if let Some(status) = c.status() {
            return Err(SessionError::Finished(status));
        }
        if round != c.round() {
            return Err(SessionError::StaleRound {
                expected: c.round(),
                got: round,
            });
        }
        c.submit(bits).map_err(|e| match e {
            Error::MalformedFeedback { .. } => SessionError::Malformed(e),
            other => SessionError::Rejected(other),
        })?;
        self.persist(id, &s)?;
        Ok(state(id, &s.conversation))
    }

    pub fn transcript(&self, id: &str) -> Result<Transcript, SessionError> {
        let s = self.session(id)?;
        let s = s.lock().unwrap_or_else(PoisonError::into_inner);
        Ok(s.conversation.transcript())
    }

    fn persist(&self, id: &str, s: &Session) -> Result<(), SessionError> {
        let Some(dir) = &self.persist_dir else {
            return Ok(());
        };
        let json = transcript_to_json(&s.conversation.transcript(), true);
        std::fs::write(dir.join(format!("{id}.json")), json).map_err(|e| SessionError::Persist(e.to_string()))
    }
}

fn state(id: &str, c: &Conversation) -> SessionState {
    SessionState {
        id: id.to_string(),
        question: c.history().question.to_string(),
        round: c.round(),
        status: c.status(),
        pending: c.pending().map(ExplanationDoc::from_explanation),
        history: c
            .history()
            .rounds
            .iter()
            .map(|r| HistoryEntry {
                explanation: ExplanationDoc::from_explanation(&r.explanation),
                feedback: FeedbackDoc::from_tree(r.feedback.bits()),
            })
            .collect(),
    }
}
