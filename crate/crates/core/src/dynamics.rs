//! Model updates: the explainee learning from an explanation, restriction to
//! a set of worlds, and the explainer learning from feedback.
//!
//! Explanation updates only ever add evidence for the explainee at the world
//! where the explanation is heard. Feedback updates only ever remove worlds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explanation::{derived_at, Explanation, FeedbackRecord};
use crate::model::{Model, WorldId};
use crate::syntax::{curried, Agent, PropFormula, Term};

/// Replaces every occurrence of the variable `x` in `s` by `r`.
pub fn substitute(s: &Term, x: &Term, r: &Term) -> Term {
    debug_assert!(matches!(x, Term::Var { .. }), "substitution target must be a variable");
    s.substitute(x, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    ExplanationUpdate,
    FeedbackUpdate,
}

/// One evidence entry `formula ∈ E_agent(term, world)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EvidenceEntry {
    pub agent: Agent,
    pub world: WorldId,
    pub term: Term,
    pub formula: PropFormula,
}

/// The observable effect of one update on a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: UpdateKind,
    /// Conversation round (0-based) whose explanation or feedback caused the step.
    pub round: usize,
    pub evidence_added: Vec<EvidenceEntry>,
    pub worlds_removed: Vec<WorldId>,
}

impl TraceStep {
    pub fn is_noop(&self) -> bool {
        self.evidence_added.is_empty() && self.worlds_removed.is_empty()
    }

    /// Re-applies the recorded effect to `m`.
    pub fn apply(&self, m: &Model) -> Result<Model> {
        let mut out = m.clone();
        for e in &self.evidence_added {
            if !out.contains_world(&e.world) {
                return Err(Error::TraceMismatch(format!("evidence added at unknown world {}", e.world)));
            }
            out.add_evidence(e.agent, e.term.clone(), e.world.clone(), e.formula.clone());
        }
        if !self.worlds_removed.is_empty() {
            let removed: BTreeSet<_> = self.worlds_removed.iter().collect();
            if let Some(w) = removed.iter().find(|w| !out.contains_world(w)) {
                return Err(Error::TraceMismatch(format!("removal of unknown world {w}")));
            }
            let keep: BTreeSet<WorldId> = out.worlds().iter().filter(|w| !removed.contains(w)).cloned().collect();
            out = update_by_worlds(&out, Agent::Explainer, &keep)?;
        }
        Ok(out)
    }
}

/// Ordered record of every update applied during a conversation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateTrace {
    pub steps: Vec<TraceStep>,
}

impl UpdateTrace {
    pub fn replay(&self, base: &Model) -> Result<Model> {
        self.steps.iter().try_fold(base.clone(), |m, step| step.apply(&m))
    }
}

/// The model after the explainee hears `e` at `w`.
pub fn learn_from_explanation(m: &Model, w: &WorldId, e: &Explanation) -> Result<Model> {
    learn_from_explanation_traced(m, w, e, 0).map(|(m, _)| m)
}

/// As [`learn_from_explanation`], also reporting the evidence entries added.
///
/// Each derived formula is recorded under its derived term. Then the derived
/// term of the claim is substituted for both variable forms of the claim
/// (`x{claim}` and `x{claim | H(e)}`) in every explainee entry at `w`: singly
/// for each form and jointly for terms mentioning both.
pub fn learn_from_explanation_traced(
    m: &Model,
    w: &WorldId,
    e: &Explanation,
    round: usize,
) -> Result<(Model, TraceStep)> {
    if !m.contains_world(w) {
        return Err(Error::UnknownWorld(w.clone()));
    }
    e.validate()?;

    let derived: Vec<(PropFormula, Term)> = e
        .post_order()
        .into_iter()
        .filter(|n| !n.is_hypothesis())
        .map(|n| (n.claim.clone(), derived_at(m, Agent::Explainee, w, n)))
        .collect();
    let root_term = derived.last().expect("validated explanation has a derived root").1.clone();

    let mut out = m.clone();
    let mut added = BTreeSet::new();
    let mut add = |out: &mut Model, term: Term, formula: PropFormula| {
        if !out.justifies(Agent::Explainee, &term, w, &formula) {
            out.add_evidence(Agent::Explainee, term.clone(), w.clone(), formula.clone());
            added.insert(EvidenceEntry {
                agent: Agent::Explainee,
                world: w.clone(),
                term,
                formula,
            });
        }
    };

    for (formula, term) in derived {
        add(&mut out, term, formula);
    }

    let bare = Term::var(e.claim.clone(), vec![]);
    let with_hyps = Term::var(e.claim.clone(), e.hypotheses());
    let existing: Vec<(Term, PropFormula)> = out
        .evidence_at(Agent::Explainee, w)
        .iter()
        .flat_map(|(t, fs)| fs.iter().map(move |f| (t.clone(), f.clone())))
        .collect();
    for (s, g) in existing {
        if !(s.contains(&bare) || s.contains(&with_hyps)) {
            continue;
        }
        let single_bare = substitute(&s, &bare, &root_term);
        let single_hyps = substitute(&s, &with_hyps, &root_term);
        let both = substitute(&single_bare, &with_hyps, &root_term);
        for s2 in [single_bare, single_hyps, both] {
            if s2 != s {
                add(&mut out, s2, g.clone());
            }
        }
    }

    let broken: Vec<_> = added
        .iter()
        .filter(|entry| entry.term.is_ground())
        .filter_map(|entry| {
            out.successors(Agent::Explainee, w)
                .find(|u| !out.holds_prop(u, &entry.formula))
                .map(|u| crate::model::Violation::JustificationWithoutBelief {
                    agent: Agent::Explainee,
                    world: w.clone(),
                    term: entry.term.clone(),
                    formula: entry.formula.clone(),
                    counter_world: u.clone(),
                })
        })
        .collect();
    if !broken.is_empty() {
        return Err(Error::BrokenInvariant(broken));
    }

    Ok((
        out,
        TraceStep {
            kind: UpdateKind::ExplanationUpdate,
            round,
            evidence_added: added.into_iter().collect(),
            worlds_removed: Vec::new(),
        },
    ))
}

/// Restricts the model to the worlds in `keep`. The accessibility relation
/// of `agent` is intersected with `keep × keep`; pairs of the other relation
/// with a removed endpoint disappear with the removed worlds, so both
/// relations end up restricted the same way.
pub fn update_by_worlds(m: &Model, _agent: Agent, keep: &BTreeSet<WorldId>) -> Result<Model> {
    if keep.is_empty() {
        return Err(Error::EmptyUpdate);
    }
    if let Some(w) = keep.iter().find(|w| !m.contains_world(w)) {
        return Err(Error::UnknownWorld(w.clone()));
    }
    let inside = |(a, b): &(WorldId, WorldId)| keep.contains(a) && keep.contains(b);
    let mut out = m.clone();
    out.worlds = keep.clone();
    for rel in &mut out.relations {
        rel.retain(inside);
    }
    for ev in &mut out.evidence {
        ev.retain(|w, _| keep.contains(w));
    }
    for ws in out.valuation.values_mut() {
        ws.retain(|w| keep.contains(w));
    }
    Ok(out)
}

/// The set of worlds the explainer keeps for one node of the feedback, or
/// `None` when the feedback carries no information about that node (a 0 on a
/// derived formula with some premise also 0).
pub fn feedback_update_set(m: &Model, fb: &FeedbackRecord, node: &PropFormula) -> Option<BTreeSet<WorldId>> {
    let entries = fb.entries();
    let (sub, bit) = entries.iter().find(|(n, _)| &n.claim == node)?;
    let target = if sub.is_hypothesis() {
        sub.claim.clone()
    } else {
        if !bit {
            let premises_ok = entries
                .iter()
                .filter(|(n, _)| sub.premises.iter().any(|p| p.claim == n.claim))
                .all(|(_, b)| *b);
            if !premises_ok {
                return None;
            }
        }
        curried(&sub.premise_claims(), &sub.claim)
    };
    Some(
        m.worlds()
            .iter()
            .filter(|u| m.ground_witness(Agent::Explainee, u, &target).is_some() == *bit)
            .cloned()
            .collect(),
    )
}

/// The model after the explainer hears `fb`, with `actual` the world where
/// the conversation takes place.
///
/// Fails with [`Error::UntruthfulFeedback`] if some update would remove the
/// actual world.
pub fn learn_from_feedback(m: &Model, actual: &WorldId, fb: &FeedbackRecord) -> Result<Model> {
    learn_from_feedback_traced(m, actual, fb, 0).map(|(m, _)| m)
}

/// Applies the per-node updates in post-order and records removed worlds.
pub fn learn_from_feedback_traced(
    m: &Model,
    actual: &WorldId,
    fb: &FeedbackRecord,
    round: usize,
) -> Result<(Model, TraceStep)> {
    let order = fb.explanation().formulas();
    learn_from_feedback_ordered(m, actual, fb, &order, round)
}

/// Applies the per-node updates in the given node order.
pub fn learn_from_feedback_ordered(
    m: &Model,
    actual: &WorldId,
    fb: &FeedbackRecord,
    order: &[PropFormula],
    round: usize,
) -> Result<(Model, TraceStep)> {
    if !m.contains_world(actual) {
        return Err(Error::UnknownWorld(actual.clone()));
    }
    if !fb.explanation().has_distinct_nodes() {
        return Err(Error::InvalidExplanation("feedback annotates an explanation with repeated formulas".into()));
    }
    let mut out = m.clone();
    let mut removed = Vec::new();
    for node in order {
        if fb.explanation().find(node).is_none() {
            return Err(Error::InvalidExplanation(format!("`{node}` does not occur in the explanation")));
        }
        let Some(keep) = feedback_update_set(&out, fb, node) else {
            continue;
        };
        if !keep.contains(actual) {
            return Err(Error::UntruthfulFeedback {
                formula: node.clone(),
                actual: actual.clone(),
            });
        }
        if keep.len() == out.worlds().len() {
            continue;
        }
        removed.extend(out.worlds().iter().filter(|w| !keep.contains(w)).cloned());
        out = update_by_worlds(&out, Agent::Explainer, &keep)?;
    }
    Ok((
        out,
        TraceStep {
            kind: UpdateKind::FeedbackUpdate,
            round,
            evidence_added: Vec::new(),
            worlds_removed: removed,
        },
    ))
}
