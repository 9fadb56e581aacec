//! The explainer's side: which explanations it may announce, how it ranks
//! them, and which one it picks next in a conversation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::conversation::ConversationHistory;
use crate::dynamics::{learn_from_explanation, learn_from_feedback};
use crate::error::{Error, Result};
use crate::explanation::{is_ground_derived_term, Explanation, FeedbackRecord};
use crate::model::{Model, WorldId};
use crate::syntax::{curried, Agent, PropFormula};

/// Limits on explanation enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    /// Maximal tree height; a single inference has depth 1.
    pub max_depth: usize,
    /// Maximal number of nodes in one explanation.
    pub max_nodes: usize,
}

impl SearchBounds {
    pub fn new(max_depth: usize, max_nodes: usize) -> Result<Self> {
        if max_depth == 0 || max_nodes == 0 {
            return Err(Error::Document("search bounds must be at least 1".into()));
        }
        Ok(SearchBounds { max_depth, max_nodes })
    }
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_depth: 5,
            max_nodes: 16,
        }
    }
}

/// A set of explanations and whether the search that produced it ran to
/// completion within its bounds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Candidates {
    pub explanations: BTreeSet<Explanation>,
    pub complete: bool,
}

/// At every world the explainer considers possible, the explainee has a
/// ground justification of `f`: `B1 T2 f`.
pub fn explainer_sure_explainee_can(m: &Model, w: &WorldId, f: &PropFormula) -> bool {
    m.successors(Agent::Explainer, w)
        .all(|u| m.ground_witness(Agent::Explainee, u, f).is_some())
}

/// At no world the explainer considers possible does the explainee have a
/// ground justification of `f`: `B1 ¬T2 f`.
pub fn explainer_sure_explainee_cannot(m: &Model, w: &WorldId, f: &PropFormula) -> bool {
    m.successors(Agent::Explainer, w)
        .all(|u| m.ground_witness(Agent::Explainee, u, f).is_none())
}

/// Whether the explainer may announce `e` at `w`: it ground-justifies every
/// hypothesis and every derived formula through a derived term, and for no
/// hypothesis or deduction step is it sure the explainee cannot justify it.
pub fn is_available(m: &Model, w: &WorldId, e: &Explanation) -> bool {
    if e.validate().is_err() || !m.contains_world(w) {
        return false;
    }
    e.post_order().into_iter().all(|n| {
        if n.is_hypothesis() {
            m.ground_witness(Agent::Explainer, w, &n.claim).is_some()
                && !explainer_sure_explainee_cannot(m, w, &n.claim)
        } else {
            node_step_available(m, w, n)
        }
    })
}

/// Clauses for a single derived node: the explainer holds the node's claim
/// under one of its derived terms, and does not rule out the explainee
/// justifying the deduction step.
fn node_step_available(m: &Model, w: &WorldId, n: &Explanation) -> bool {
    let held = m
        .evidence_at(Agent::Explainer, w)
        .iter()
        .filter(|(s, fs)| s.is_ground() && fs.contains(&n.claim))
        .any(|(s, _)| is_ground_derived_term(m, Agent::Explainer, w, n, s));
    held && !explainer_sure_explainee_cannot(m, w, &n.step())
}

/// `N(e)`: parts of `e` the explainer is not sure the explainee can justify.
/// Derived formulas are judged by their deduction step.
pub fn uncertainty_set(m: &Model, w: &WorldId, e: &Explanation) -> BTreeSet<PropFormula> {
    e.post_order()
        .into_iter()
        .filter(|n| {
            let part = if n.is_hypothesis() { n.claim.clone() } else { n.step() };
            !explainer_sure_explainee_can(m, w, &part)
        })
        .map(|n| n.claim.clone())
        .collect()
}

/// Ranking key: fewer uncertain parts first, then fewer deduction steps.
fn preference_key(m: &Model, w: &WorldId, e: &Explanation) -> (usize, usize) {
    (uncertainty_set(m, w, e).len(), e.derived().len())
}

/// Compares two explanations under the explainer's preference pre-order.
/// `Greater` means `e1` is strictly preferred, `Equal` that they are
/// equally preferred.
pub fn prefer(m: &Model, w: &WorldId, e1: &Explanation, e2: &Explanation) -> Ordering {
    preference_key(m, w, e2).cmp(&preference_key(m, w, e1))
}

/// Formulas of the annotated explanation that deserve a follow-up: those with
/// bit 0 that are hypotheses or whose premises all have bit 1.
pub fn why_set(fb: &FeedbackRecord) -> BTreeSet<PropFormula> {
    fb.entries()
        .into_iter()
        .filter(|(n, bit)| !bit && (n.is_hypothesis() || n.premises.iter().all(|p| fb.bit_of(&p.claim) == Some(true))))
        .map(|(n, _)| n.claim.clone())
        .collect()
}

/// Every available explanation of `claim` within bounds. A non-empty `hyps`
/// fixes the hypothesis set exactly; an empty one leaves it free.
pub fn enumerate_available(
    m: &Model,
    w: &WorldId,
    hyps: &BTreeSet<PropFormula>,
    claim: &PropFormula,
    bounds: SearchBounds,
) -> Candidates {
    if !m.contains_world(w) {
        return Candidates::default();
    }
    let mut search = Search::new(m, w, hyps, bounds);
    let trees = search.expand(claim, bounds.max_depth, &mut BTreeSet::new());
    let explanations = trees
        .into_iter()
        .filter(|e| !e.is_hypothesis())
        .filter(|e| hyps.is_empty() || e.hypotheses().into_iter().collect::<BTreeSet<_>>() == *hyps)
        .filter(|e| is_available(m, w, e))
        .collect();
    Candidates {
        explanations,
        complete: !search.truncated,
    }
}

/// Inference steps the explainer knows at a world: every split of every
/// ground-justified formula along its implication spine.
fn explainer_rules(m: &Model, w: &WorldId) -> BTreeMap<PropFormula, BTreeSet<Vec<PropFormula>>> {
    let mut rules: BTreeMap<PropFormula, BTreeSet<Vec<PropFormula>>> = BTreeMap::new();
    for (t, fs) in m.evidence_at(Agent::Explainer, w) {
        if !t.is_ground() {
            continue;
        }
        for f in fs {
            for (premises, conclusion) in f.rule_readings() {
                rules.entry(conclusion).or_default().insert(premises);
            }
        }
    }
    rules
}

struct Search<'a> {
    m: &'a Model,
    w: &'a WorldId,
    hyps: &'a BTreeSet<PropFormula>,
    bounds: SearchBounds,
    rules: BTreeMap<PropFormula, BTreeSet<Vec<PropFormula>>>,
    memo: BTreeMap<(PropFormula, usize, BTreeSet<PropFormula>), Vec<Explanation>>,
    truncated: bool,
}

impl<'a> Search<'a> {
    fn new(m: &'a Model, w: &'a WorldId, hyps: &'a BTreeSet<PropFormula>, bounds: SearchBounds) -> Self {
        Search {
            m,
            w,
            hyps,
            bounds,
            rules: explainer_rules(m, w),
            memo: BTreeMap::new(),
            truncated: false,
        }
    }

    /// All locally available trees rooted at `goal` (hypothesis leaves
    /// included) with height at most `depth`, avoiding formulas on the path
    /// from the root.
    fn expand(&mut self, goal: &PropFormula, depth: usize, path: &mut BTreeSet<PropFormula>) -> Vec<Explanation> {
        let key = (goal.clone(), depth, path.clone());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut out = Vec::new();
        let (m, w) = (self.m, self.w);

        if (self.hyps.is_empty() || self.hyps.contains(goal))
            && m.ground_witness(Agent::Explainer, w, goal).is_some()
            && !explainer_sure_explainee_cannot(m, w, goal)
        {
            out.push(Explanation::leaf(goal.clone()));
        }

        let rules: Vec<Vec<PropFormula>> = self
            .rules
            .get(goal)
            .map(|ls| {
                ls.iter()
                    .filter(|l| !l.contains(goal) && !l.iter().any(|p| path.contains(p)))
                    .filter(|l| l.iter().collect::<BTreeSet<_>>().len() == l.len())
                    .cloned()
                    .collect()
            })
            .unwrap_or_default();

        if depth == 0 {
            if !rules.is_empty() {
                self.truncated = true;
            }
        } else {
            path.insert(goal.clone());
            for premises in rules {
                if explainer_sure_explainee_cannot(m, w, &curried(&premises, goal)) {
                    continue;
                }
                let options: Vec<Vec<Explanation>> =
                    premises.iter().map(|p| self.expand(p, depth - 1, path)).collect();
                if options.iter().any(Vec::is_empty) {
                    continue;
                }
                self.combine(goal, &options, &mut out);
            }
            path.remove(goal);
        }

        self.memo.insert(key, out.clone());
        out
    }

    fn combine(&mut self, goal: &PropFormula, options: &[Vec<Explanation>], out: &mut Vec<Explanation>) {
        let mut chosen: Vec<&Explanation> = Vec::with_capacity(options.len());
        let mut used = BTreeSet::from([goal.clone()]);
        self.combine_rec(goal, options, &mut chosen, &mut used, 1, out);
    }

    fn combine_rec<'o>(
        &mut self,
        goal: &PropFormula,
        options: &'o [Vec<Explanation>],
        chosen: &mut Vec<&'o Explanation>,
        used: &mut BTreeSet<PropFormula>,
        size: usize,
        out: &mut Vec<Explanation>,
    ) {
        if chosen.len() == options.len() {
            let node = Explanation::node(goal.clone(), chosen.iter().map(|e| (*e).clone()).collect());
            if node_step_available(self.m, self.w, &node) {
                out.push(node);
            }
            return;
        }
        for option in &options[chosen.len()] {
            let size = size + option.size();
            if size > self.bounds.max_nodes {
                self.truncated = true;
                continue;
            }
            let fs = option.formulas();
            if fs.iter().any(|f| used.contains(f)) {
                continue;
            }
            used.extend(fs.iter().cloned());
            chosen.push(option);
            self.combine_rec(goal, options, chosen, used, size, out);
            chosen.pop();
            for f in &fs {
                used.remove(f);
            }
        }
    }
}

/// The best explanations among `candidates` under the preference pre-order,
/// evaluated in `m`.
pub fn maxima(m: &Model, w: &WorldId, candidates: &BTreeSet<Explanation>) -> BTreeSet<Explanation> {
    let keyed: Vec<_> = candidates.iter().map(|e| (preference_key(m, w, e), e)).collect();
    let Some(best) = keyed.iter().map(|(k, _)| *k).min() else {
        return BTreeSet::new();
    };
    keyed.into_iter().filter(|(k, _)| *k == best).map(|(_, e)| e.clone()).collect()
}

/// The candidate pool for the next announcement in model `m` (the model with
/// every update of the conversation so far already applied): explanations of
/// the original claim, plus follow-ups for the why-set of the last feedback.
pub fn candidate_pool(
    m: &Model,
    w: &WorldId,
    claim: &PropFormula,
    last_feedback: Option<&FeedbackRecord>,
    bounds: SearchBounds,
) -> Candidates {
    let mut pool = enumerate_available(m, w, &BTreeSet::new(), claim, bounds);
    if let Some(fb) = last_feedback {
        for g in why_set(fb) {
            let hyps: BTreeSet<_> = fb
                .explanation()
                .premises_of(&g)
                .unwrap_or_default()
                .into_iter()
                .collect();
            let more = enumerate_available(m, w, &hyps, &g, bounds);
            pool.complete &= more.complete;
            pool.explanations.extend(more.explanations);
        }
    }
    pool
}

/// The most preferred explanations after the conversation history `h`,
/// starting from model `m0` at world `w`. An empty result means the
/// explainer has nothing left to say.
pub fn most_preferred(m0: &Model, w: &WorldId, h: &ConversationHistory, bounds: SearchBounds) -> Result<Candidates> {
    let mut m = m0.clone();
    for round in &h.rounds {
        m = learn_from_explanation(&m, w, &round.explanation)?;
        m = learn_from_feedback(&m, w, &round.feedback)?;
    }
    let pool = candidate_pool(&m, w, &h.question, h.rounds.last().map(|r| &r.feedback), bounds);
    Ok(Candidates {
        explanations: maxima(&m, w, &pool.explanations),
        complete: pool.complete,
    })
}
