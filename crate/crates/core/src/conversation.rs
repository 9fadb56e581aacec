//! The explanation dialogue: the explainer announces, the explainee learns and
//! answers with feedback, the explainer learns from the feedback, repeat.

use std::collections::BTreeSet;
use std::sync::mpsc::{Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::document::model_digest;
use crate::dynamics::{learn_from_explanation_traced, learn_from_feedback_traced, UpdateTrace};
use crate::error::{Error, Result};
use crate::explanation::{compute_feedback, derive_term, Explanation, FeedbackRecord, FeedbackTree};
use crate::model::{validate_model, Model, WorldId};
use crate::selection::{candidate_pool, enumerate_available, maxima, SearchBounds};
use crate::syntax::{Agent, PropFormula, Term};

/// One announced explanation and the feedback it received.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub explanation: Explanation,
    pub feedback: FeedbackRecord,
}

/// A question followed by explanation/feedback rounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConversationHistory {
    pub question: PropFormula,
    pub rounds: Vec<Round>,
}

impl ConversationHistory {
    pub fn new(question: PropFormula) -> Self {
        ConversationHistory {
            question,
            rounds: Vec::new(),
        }
    }

    /// The question and the first `k` rounds.
    pub fn pre(&self, k: usize) -> Self {
        ConversationHistory {
            question: self.question.clone(),
            rounds: self.rounds[..k.min(self.rounds.len())].to_vec(),
        }
    }

    pub fn push(&mut self, explanation: Explanation, feedback: FeedbackRecord) {
        self.rounds.push(Round { explanation, feedback });
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    JustifiedByExplainee,
    ExplainerExhausted,
    BoundsReached,
    UntruthfulFeedbackDetected,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::JustifiedByExplainee => "justified by explainee",
            Status::ExplainerExhausted => "explainer exhausted",
            Status::BoundsReached => "round bound reached",
            Status::UntruthfulFeedbackDetected => "untruthful feedback detected",
        };
        f.write_str(s)
    }
}

/// Complete record of a conversation, enough to replay it against the model
/// it started from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub model_digest: String,
    pub actual: WorldId,
    pub history: ConversationHistory,
    /// Per round: the explanation update, then the feedback update unless the
    /// feedback was rejected as untruthful.
    pub traces: Vec<UpdateTrace>,
    pub status: Status,
    /// Ground term with which the explainee ends up justifying the question.
    pub final_term: Option<Term>,
}

/// Where the explainee's answers come from.
pub enum ExplaineeDriver<'a> {
    /// The explainee is the model's agent 2 and answers truthfully.
    Simulated,
    /// Answers arrive from outside, e.g. a person at a terminal or a client of
    /// the session service.
    External(&'a mut dyn FeedbackChannel),
}

/// A source of feedback for announced explanations.
pub trait FeedbackChannel {
    /// Asks for feedback on `e` in round `round`. `retry` carries the reason
    /// the previous answer for the same round was rejected.
    fn request(&mut self, round: usize, e: &Explanation, retry: Option<&Error>) -> Result<FeedbackTree>;
}

/// A feedback channel over std channels, waiting at most `timeout` for each
/// answer.
pub struct MpscChannel {
    pub prompts: Sender<(usize, Explanation, Option<Error>)>,
    pub answers: Receiver<FeedbackTree>,
    pub timeout: Duration,
}

impl FeedbackChannel for MpscChannel {
    fn request(&mut self, round: usize, e: &Explanation, retry: Option<&Error>) -> Result<FeedbackTree> {
        self.prompts
            .send((round, e.clone(), retry.cloned()))
            .map_err(|_| Error::Driver("explainee hung up".into()))?;
        self.answers.recv_timeout(self.timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => Error::Driver("timed out waiting for feedback".into()),
            RecvTimeoutError::Disconnected => Error::Driver("explainee hung up".into()),
        })
    }
}

/// A conversation advanced one feedback at a time. At any point it either
/// has an announced explanation awaiting feedback or a final status.
#[derive(Clone, Debug)]
pub struct Conversation {
    base_digest: String,
    model: Model,
    actual: WorldId,
    bounds: SearchBounds,
    max_rounds: usize,
    history: ConversationHistory,
    traces: Vec<UpdateTrace>,
    pending: Option<Explanation>,
    status: Option<Status>,
    final_term: Option<Term>,
    /// Explanations whose feedback taught the explainer nothing.
    spent: BTreeSet<Explanation>,
}

impl Conversation {
    /// Starts a conversation about `claim` at the actual world and announces
    /// the first explanation, if there is one.
    pub fn start(m: &Model, actual: &WorldId, claim: &PropFormula, bounds: SearchBounds, max_rounds: usize) -> Result<Self> {
        let violations = validate_model(m);
        if !violations.is_empty() {
            return Err(Error::InvalidModel(violations));
        }
        if !m.contains_world(actual) {
            return Err(Error::UnknownWorld(actual.clone()));
        }
        let mut unknown = None;
        claim.for_each_atom(&mut |a| {
            if unknown.is_none() && !m.atoms().contains(a) {
                unknown = Some(a.to_string());
            }
        });
        if let Some(a) = unknown {
            return Err(Error::UnknownAtom(a));
        }
        if max_rounds == 0 {
            return Err(Error::Document("max_rounds must be positive".into()));
        }
        let mut c = Conversation {
            base_digest: model_digest(m),
            model: m.clone(),
            actual: actual.clone(),
            bounds,
            max_rounds,
            history: ConversationHistory::new(claim.clone()),
            traces: Vec::new(),
            pending: None,
            status: None,
            final_term: None,
            spent: BTreeSet::new(),
        };
        c.announce_next()?;
        Ok(c)
    }

    pub fn pending(&self) -> Option<&Explanation> {
        self.pending.as_ref()
    }

    pub fn status(&self) -> Option<Status> {
        self.status
    }

    /// Number of completed rounds.
    pub fn round(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &ConversationHistory {
        &self.history
    }

    pub fn actual(&self) -> &WorldId {
        &self.actual
    }

    /// The current model, with the pending explanation already learned.
    pub fn model(&self) -> &Model {
        &self.model
    }

    /// What a truthful explainee would answer to the pending explanation.
    pub fn simulated_feedback(&self) -> Option<FeedbackRecord> {
        let e = self.pending.as_ref()?;
        compute_feedback(&self.model, &self.actual, e).ok()
    }

    /// Accepts feedback on the pending explanation and announces the next
    /// one or settles the status. Malformed bits are rejected without
    /// changing the state, so the caller may retry.
    pub fn submit(&mut self, bits: FeedbackTree) -> Result<()> {
        let Some(e) = self.pending.clone() else {
            return Err(Error::Driver("conversation is over".into()));
        };
        let fb = FeedbackRecord::new(e.clone(), bits)?;
        let round = self.history.len();
        match learn_from_feedback_traced(&self.model, &self.actual, &fb, round) {
            Err(Error::UntruthfulFeedback { .. }) => {
                self.history.push(e, fb);
                self.pending = None;
                self.status = Some(Status::UntruthfulFeedbackDetected);
                Ok(())
            }
            Err(err) => Err(err),
            Ok((model, step)) => {
                if step.is_noop() {
                    self.spent.insert(e.clone());
                }
                self.traces[round].steps.push(step);
                self.model = model;
                self.pending = None;
                let all_ones = fb.all_ones();
                self.history.push(e.clone(), fb);
                let claim = &self.history.question;
                if all_ones && self.model.ground_witness(Agent::Explainee, &self.actual, claim).is_some() {
                    self.final_term = if &e.claim == claim {
                        Some(derive_term(&self.model, &self.actual, &e, claim)?)
                    } else {
                        self.model.ground_witness(Agent::Explainee, &self.actual, claim).cloned()
                    };
                    self.status = Some(Status::JustifiedByExplainee);
                    return Ok(());
                }
                if self.history.len() >= self.max_rounds {
                    self.status = Some(Status::BoundsReached);
                    return Ok(());
                }
                self.announce_next()
            }
        }
    }

    fn announce_next(&mut self) -> Result<()> {
        let last = self.history.rounds.last().map(|r| &r.feedback);
        let pool = candidate_pool(&self.model, &self.actual, &self.history.question, last, self.bounds);
        let fresh: BTreeSet<_> = pool.explanations.difference(&self.spent).cloned().collect();
        let best = maxima(&self.model, &self.actual, &fresh);
        let Some(e) = best.into_iter().min_by(|a, b| (a.derived().len(), a).cmp(&(b.derived().len(), b))) else {
            self.status = Some(Status::ExplainerExhausted);
            return Ok(());
        };
        let (model, step) = learn_from_explanation_traced(&self.model, &self.actual, &e, self.history.len())?;
        self.model = model;
        self.traces.push(UpdateTrace { steps: vec![step] });
        self.pending = Some(e);
        Ok(())
    }

    pub fn transcript(&self) -> Transcript {
        // The pending round, if any, is not part of the record yet.
        let mut traces = self.traces.clone();
        traces.truncate(self.history.len());
        Transcript {
            model_digest: self.base_digest.clone(),
            actual: self.actual.clone(),
            history: self.history.clone(),
            traces,
            status: self.status.unwrap_or(Status::BoundsReached),
            final_term: self.final_term.clone(),
        }
    }
}

/// Runs a full conversation about `claim` at `actual`.
pub fn run_conversation(
    m: &Model,
    actual: &WorldId,
    claim: &PropFormula,
    bounds: SearchBounds,
    driver: ExplaineeDriver<'_>,
    max_rounds: usize,
) -> Result<Transcript> {
    let mut c = Conversation::start(m, actual, claim, bounds, max_rounds)?;
    let mut channel = match driver {
        ExplaineeDriver::Simulated => None,
        ExplaineeDriver::External(ch) => Some(ch),
    };
    while let Some(e) = c.pending().cloned() {
        match channel.as_mut() {
            None => {
                let fb = compute_feedback(c.model(), actual, &e)?;
                c.submit(fb.bits().clone())?;
            }
            Some(ch) => {
                let mut retry = None;
                loop {
                    let bits = ch.request(c.round(), &e, retry.as_ref())?;
                    match c.submit(bits) {
                        Ok(()) => break,
                        Err(err @ Error::MalformedFeedback { .. }) => retry = Some(err),
                        Err(err) => return Err(err),
                    }
                }
            }
        }
    }
    Ok(c.transcript())
}

/// An upper bound on the number of explanations the explainer could ever
/// announce about `claim`: every available explanation of the claim or,
/// transitively, of any formula occurring in one of them.
pub fn candidate_count(m: &Model, w: &WorldId, claim: &PropFormula, bounds: SearchBounds) -> usize {
    let mut seen = BTreeSet::new();
    let mut goals = vec![claim.clone()];
    let mut done = BTreeSet::new();
    while let Some(g) = goals.pop() {
        if !done.insert(g.clone()) {
            continue;
        }
        for e in enumerate_available(m, w, &BTreeSet::new(), &g, bounds).explanations {
            goals.extend(e.formulas());
            seen.insert(e);
        }
    }
    seen.len()
}

/// A round limit that a truthful conversation never needs to exceed: every
/// round either spends an explanation or rules out at least one world.
pub fn default_round_limit(m: &Model, w: &WorldId, claim: &PropFormula, bounds: SearchBounds) -> usize {
    candidate_count(m, w, claim, bounds) + m.worlds().len()
}

/// Re-applies the updates of `t` to `m0`, checking every recorded step
/// against a fresh computation.
pub fn replay(m0: &Model, t: &Transcript) -> Result<Model> {
    let digest = model_digest(m0);
    if digest != t.model_digest {
        return Err(Error::TraceMismatch(format!(
            "model digest {digest} differs from recorded {}",
            t.model_digest
        )));
    }
    if t.traces.len() != t.history.len() {
        return Err(Error::TraceMismatch(format!(
            "{} rounds but {} traces",
            t.history.len(),
            t.traces.len()
        )));
    }
    let mut m = m0.clone();
    for (i, (round, trace)) in t.history.rounds.iter().zip(&t.traces).enumerate() {
        let (next, step) = learn_from_explanation_traced(&m, &t.actual, &round.explanation, i)?;
        if trace.steps.first() != Some(&step) {
            return Err(Error::TraceMismatch(format!("explanation update of round {i} differs")));
        }
        m = next;
        let last = i + 1 == t.history.len();
        match learn_from_feedback_traced(&m, &t.actual, &round.feedback, i) {
            Err(Error::UntruthfulFeedback { .. }) if last && t.status == Status::UntruthfulFeedbackDetected => {
                if trace.steps.len() != 1 {
                    return Err(Error::TraceMismatch(format!("rejected feedback of round {i} has an update")));
                }
            }
            Err(e) => return Err(e),
            Ok((next, step)) => {
                if trace.steps.get(1) != Some(&step) || trace.steps.len() != 2 {
                    return Err(Error::TraceMismatch(format!("feedback update of round {i} differs")));
                }
                m = next;
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: &str) -> PropFormula {
        PropFormula::atom(n)
    }

    /// Without the rule at `w`, the explainer cannot tell `w` from `v`, where
    /// the explainee does know it.
    fn single_step_model(explainee_knows_rule: bool) -> Model {
        let mut m = Model::new();
        m.add_world("w").set_true("a", "w").set_true("b", "w");
        let rule = PropFormula::implies(p("a"), p("b"));
        if !explainee_knows_rule {
            m.add_world("v").set_true("a", "v").set_true("b", "v");
            m.add_edge(Agent::Explainer, "w", "v").add_edge(Agent::Explainer, "v", "w");
            m.add_evidence(Agent::Explainee, Term::constant("sAB"), "v", rule.clone());
        }
        m.close_relations();
        m.add_evidence(Agent::Explainer, Term::constant("tA"), "w", p("a"));
        m.add_evidence(Agent::Explainer, Term::constant("dAB"), "w", rule.clone());
        m.add_evidence(
            Agent::Explainer,
            Term::app(Term::constant("dAB"), Term::constant("tA")),
            "w",
            p("b"),
        );
        m.add_evidence(Agent::Explainee, Term::constant("sA"), "w", p("a"));
        if explainee_knows_rule {
            m.add_evidence(Agent::Explainee, Term::constant("sAB"), "w", rule);
        }
        m
    }

    #[test]
    fn understood_at_once() {
        let m = single_step_model(true);
        let w = WorldId::new("w");
        let t = run_conversation(&m, &w, &p("b"), SearchBounds::default(), ExplaineeDriver::Simulated, 5).unwrap();
        assert_eq!(t.status, Status::JustifiedByExplainee);
        assert_eq!(t.history.len(), 1);
        assert!(t.history.rounds[0].feedback.all_ones());
        assert_eq!(
            t.final_term,
            Some(Term::app(Term::constant("sAB"), Term::constant("sA")))
        );
        let live = learn_from_explanation_traced(&m, &w, &t.history.rounds[0].explanation, 0).unwrap().0;
        assert_eq!(replay(&m, &t).unwrap().evidence(Agent::Explainee), live.evidence(Agent::Explainee));
    }

    #[test]
    fn nothing_to_say() {
        let m = single_step_model(true);
        let w = WorldId::new("w");
        let t = run_conversation(&m, &w, &p("a"), SearchBounds::default(), ExplaineeDriver::Simulated, 5).unwrap();
        assert_eq!(t.status, Status::ExplainerExhausted);
        assert!(t.history.is_empty());
        assert_eq!(replay(&m, &t).unwrap(), m);
    }

    #[test]
    fn explainer_gives_up_once_step_is_known_unfollowable() {
        // The answer rules out `v`; after that the explainer is sure the
        // explainee cannot follow the step and has nothing else to offer.
        let m = single_step_model(false);
        let w = WorldId::new("w");
        let t = run_conversation(&m, &w, &p("b"), SearchBounds::default(), ExplaineeDriver::Simulated, 5).unwrap();
        assert_eq!(t.status, Status::ExplainerExhausted);
        assert_eq!(t.history.len(), 1);
    }

    #[test]
    fn round_bound() {
        let m = single_step_model(false);
        let w = WorldId::new("w");
        let t = run_conversation(&m, &w, &p("b"), SearchBounds::default(), ExplaineeDriver::Simulated, 1).unwrap();
        assert_eq!(t.status, Status::BoundsReached);
        assert!(Conversation::start(&m, &w, &p("b"), SearchBounds::default(), 0).is_err());
    }

    #[test]
    fn untruthful_answer_is_reported() {
        let m = single_step_model(true);
        let w = WorldId::new("w");
        let mut c = Conversation::start(&m, &w, &p("b"), SearchBounds::default(), 5).unwrap();
        // a single world cannot be ruled out, so claiming ignorance of `a` is a lie
        c.submit(FeedbackTree::chain(&[false, false])).unwrap();
        assert_eq!(c.status(), Some(Status::UntruthfulFeedbackDetected));
        let t = c.transcript();
        assert_eq!(t.traces[0].steps.len(), 1);
        replay(&m, &t).unwrap();
    }

    #[test]
    fn malformed_answer_leaves_state_alone() {
        let m = single_step_model(true);
        let w = WorldId::new("w");
        let mut c = Conversation::start(&m, &w, &p("b"), SearchBounds::default(), 5).unwrap();
        let err = c.submit(FeedbackTree::chain(&[false, true])).unwrap_err();
        assert!(matches!(err, Error::MalformedFeedback { .. }));
        assert_eq!(c.round(), 0);
        assert!(c.pending().is_some());
    }

    #[test]
    fn external_channel_retries_after_rejection() {
        struct Scripted(Vec<FeedbackTree>, usize);
        impl FeedbackChannel for Scripted {
            fn request(&mut self, _: usize, _: &Explanation, retry: Option<&Error>) -> Result<FeedbackTree> {
                if self.1 > 0 {
                    assert!(retry.is_some());
                }
                self.1 += 1;
                Ok(self.0.remove(0))
            }
        }
        let m = single_step_model(true);
        let w = WorldId::new("w");
        let mut ch = Scripted(vec![FeedbackTree::chain(&[false, true]), FeedbackTree::chain(&[true, true])], 0);
        let t = run_conversation(&m, &w, &p("b"), SearchBounds::default(), ExplaineeDriver::External(&mut ch), 5).unwrap();
        assert_eq!(t.status, Status::JustifiedByExplainee);
        assert_eq!(ch.1, 2);
    }

    #[test]
    fn tampered_transcript_is_rejected() {
        let m = single_step_model(true);
        let w = WorldId::new("w");
        let mut t = run_conversation(&m, &w, &p("b"), SearchBounds::default(), ExplaineeDriver::Simulated, 5).unwrap();
        let mut other = m.clone();
        other.set_true("a", "w").declare_atom("zzz");
        assert!(matches!(replay(&other, &t), Err(Error::TraceMismatch(_))));
        t.traces[0].steps[0].evidence_added.clear();
        assert!(matches!(replay(&m, &t), Err(Error::TraceMismatch(_))));
    }

    #[test]
    fn history_prefix() {
        let m = single_step_model(true);
        let w = WorldId::new("w");
        let t = run_conversation(&m, &w, &p("b"), SearchBounds::default(), ExplaineeDriver::Simulated, 5).unwrap();
        assert_eq!(t.history.pre(0), ConversationHistory::new(p("b")));
        assert_eq!(t.history.pre(7), t.history);
    }
}
