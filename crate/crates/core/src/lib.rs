//! Conversational explanations between two agents over justification models.
//!
//! Agent 1 (the explainer) answers a question by announcing an explanation,
//! a tree of propositional formulas. Agent 2 (the explainee) learns from it
//! and reports, per node, whether it can follow. The explainer narrows down
//! what the explainee knows and tries again until the explainee can justify
//! the answer on its own.

pub mod conversation;
pub mod document;
pub mod dynamics;
pub mod error;
pub mod explanation;
pub mod generate;
pub mod model;
pub mod selection;
pub mod semantics;
pub mod session;
pub mod syntax;
pub mod text;

pub use conversation::{
    candidate_count, default_round_limit, replay, run_conversation, Conversation, ConversationHistory, ExplaineeDriver, FeedbackChannel,
    Round, Status, Transcript,
};
pub use document::{load_explanation, load_model, model_digest, Closure, ModelDocument};
pub use dynamics::{
    learn_from_explanation, learn_from_feedback, substitute, update_by_worlds, TraceStep, UpdateKind, UpdateTrace,
};
pub use error::{Error, Result};
pub use explanation::{
    compute_feedback, derive_term, understands, understands_oracle, Explanation, FeedbackRecord, FeedbackTree,
};
pub use model::{validate_model, Model, Violation, WorldId};
pub use selection::{enumerate_available, is_available, most_preferred, prefer, uncertainty_set, why_set, SearchBounds};
pub use semantics::{can_justify, check_validity_samples, eval, eval_dynamic};
pub use session::{SessionError, SessionState, SessionStore};
pub use syntax::{curried, Agent, Formula, PropFormula, Term, Update};
pub use text::{parse_formula, parse_prop, parse_term};
