//! Explanation trees, the explainee's derived terms, understanding, and
//! truthful feedback.
//!
//! A derived node's feedback bit records whether the explainee understands
//! the subexplanation rooted at that node. For the root this is exactly
//! understanding of the whole explanation, and it makes the monotonicity of
//! feedback toward the root hold by construction.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Model, WorldId};
use crate::syntax::{curried, Agent, PropFormula, Term};

/// A finite tree of propositional formulas. Leaves are hypotheses, internal
/// nodes are derived formulas, the root is the claim. Premise order is the
/// left-to-right order of `premises`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Explanation {
    pub claim: PropFormula,
    pub premises: Vec<Explanation>,
}

impl Explanation {
    pub fn leaf(claim: PropFormula) -> Self {
        Explanation {
            claim,
            premises: Vec::new(),
        }
    }

    pub fn node(claim: PropFormula, premises: Vec<Explanation>) -> Self {
        Explanation { claim, premises }
    }

    /// Builds the chain `h / f1 / f2 / ... / claim` from the bottom up.
    pub fn chain(formulas: &[PropFormula]) -> Self {
        let mut iter = formulas.iter();
        let first = Explanation::leaf(iter.next().expect("non-empty chain").clone());
        iter.fold(first, |acc, f| Explanation::node(f.clone(), vec![acc]))
    }

    pub fn is_hypothesis(&self) -> bool {
        self.premises.is_empty()
    }

    /// Claims of the immediate premises, i.e. `Pr(e, claim(e))`.
    pub fn premise_claims(&self) -> Vec<PropFormula> {
        self.premises.iter().map(|p| p.claim.clone()).collect()
    }

    /// The deduction step `Pr(e, B) => B` of this node as a curried implication.
    pub fn step(&self) -> PropFormula {
        curried(&self.premise_claims(), &self.claim)
    }

    /// Nodes in post-order (premises left to right, then the node).
    pub fn post_order(&self) -> Vec<&Explanation> {
        fn go<'a>(e: &'a Explanation, out: &mut Vec<&'a Explanation>) {
            for p in &e.premises {
                go(p, out);
            }
            out.push(e);
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn formulas(&self) -> Vec<PropFormula> {
        self.post_order().into_iter().map(|n| n.claim.clone()).collect()
    }

    /// `H(e)`, left to right.
    pub fn hypotheses(&self) -> Vec<PropFormula> {
        self.post_order()
            .into_iter()
            .filter(|n| n.is_hypothesis())
            .map(|n| n.claim.clone())
            .collect()
    }

    /// `D(e)`, in post-order.
    pub fn derived(&self) -> Vec<PropFormula> {
        self.post_order()
            .into_iter()
            .filter(|n| !n.is_hypothesis())
            .map(|n| n.claim.clone())
            .collect()
    }

    pub fn find(&self, formula: &PropFormula) -> Option<&Explanation> {
        if &self.claim == formula {
            return Some(self);
        }
        self.premises.iter().find_map(|p| p.find(formula))
    }

    /// `Pr(e, formula)`, or `None` if the formula does not occur.
    pub fn premises_of(&self, formula: &PropFormula) -> Option<Vec<PropFormula>> {
        self.find(formula).map(Explanation::premise_claims)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Explanation::size).sum::<usize>()
    }

    /// Height of the tree; a single hypothesis has depth 0.
    pub fn depth(&self) -> usize {
        self.premises.iter().map(|p| p.depth() + 1).max().unwrap_or(0)
    }

    /// Checks that the tree is a proper explanation: the root is derived and
    /// no formula labels two nodes.
    pub fn validate(&self) -> Result<()> {
        if self.is_hypothesis() {
            return Err(Error::InvalidExplanation(format!(
                "`{}` has no premises; an explanation needs at least one inference",
                self.claim
            )));
        }
        let mut seen = BTreeSet::new();
        for f in self.formulas() {
            if !seen.insert(f.clone()) {
                return Err(Error::InvalidExplanation(format!("formula `{f}` labels more than one node")));
            }
        }
        Ok(())
    }

    pub(crate) fn has_distinct_nodes(&self) -> bool {
        let fs = self.formulas();
        fs.iter().collect::<BTreeSet<_>>().len() == fs.len()
    }
}

/// A tree of bits shaped like an explanation. `true` means justified or
/// understood.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeedbackTree {
    pub bit: bool,
    pub premises: Vec<FeedbackTree>,
}

impl FeedbackTree {
    pub fn new(bit: bool, premises: Vec<FeedbackTree>) -> Self {
        FeedbackTree { bit, premises }
    }

    /// The same bit on every node of `e`'s shape.
    pub fn uniform(e: &Explanation, bit: bool) -> Self {
        FeedbackTree {
            bit,
            premises: e.premises.iter().map(|p| FeedbackTree::uniform(p, bit)).collect(),
        }
    }

    /// Bits of a chain explanation listed from the hypothesis to the claim,
    /// as in `1/0/0`.
    pub fn chain(bits: &[bool]) -> Self {
        let mut iter = bits.iter();
        let first = FeedbackTree::new(*iter.next().expect("non-empty chain"), vec![]);
        iter.fold(first, |acc, b| FeedbackTree::new(*b, vec![acc]))
    }

    pub fn all_ones(&self) -> bool {
        self.bit && self.premises.iter().all(FeedbackTree::all_ones)
    }

    /// Verifies shape-isomorphism with `e` and monotonicity toward the root.
    /// Errors carry the child-index path of the offending node.
    pub fn check_against(&self, e: &Explanation) -> Result<()> {
        fn go(bits: &FeedbackTree, e: &Explanation, path: &mut Vec<usize>) -> Result<()> {
            if bits.premises.len() != e.premises.len() {
                return Err(Error::MalformedFeedback {
                    path: path.clone(),
                    reason: format!(
                        "node `{}` has {} premises but the feedback has {}",
                        e.claim,
                        e.premises.len(),
                        bits.premises.len()
                    ),
                });
            }
            for (i, (b, p)) in bits.premises.iter().zip(&e.premises).enumerate() {
                path.push(i);
                if !b.bit && bits.bit {
                    return Err(Error::MalformedFeedback {
                        path: path.clone(),
                        reason: format!("0 on `{}` but 1 on its conclusion `{}`", p.claim, e.claim),
                    });
                }
                go(b, p, path)?;
                path.pop();
            }
            Ok(())
        }
        go(self, e, &mut Vec::new())
    }
}

/// Feedback bits together with the explanation they annotate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeedbackRecord {
    explanation: Explanation,
    bits: FeedbackTree,
}

impl FeedbackRecord {
    pub fn new(explanation: Explanation, bits: FeedbackTree) -> Result<Self> {
        bits.check_against(&explanation)?;
        Ok(FeedbackRecord { explanation, bits })
    }

    pub fn explanation(&self) -> &Explanation {
        &self.explanation
    }

    pub fn bits(&self) -> &FeedbackTree {
        &self.bits
    }

    /// `(node, bit)` pairs in post-order.
    pub fn entries(&self) -> Vec<(&Explanation, bool)> {
        fn go<'a>(e: &'a Explanation, b: &FeedbackTree, out: &mut Vec<(&'a Explanation, bool)>) {
            for (p, pb) in e.premises.iter().zip(&b.premises) {
                go(p, pb, out);
            }
            out.push((e, b.bit));
        }
        let mut out = Vec::new();
        go(&self.explanation, &self.bits, &mut out);
        out
    }

    /// The bit recorded for `formula`.
    pub fn bit_of(&self, formula: &PropFormula) -> Option<bool> {
        self.entries()
            .into_iter()
            .find(|(n, _)| &n.claim == formula)
            .map(|(_, b)| b)
    }

    pub fn all_ones(&self) -> bool {
        self.bits.all_ones()
    }
}

/// The explainee's derived term of `node` with respect to `e`.
pub fn derive_term(m: &Model, w: &WorldId, e: &Explanation, node: &PropFormula) -> Result<Term> {
    derive_term_for(m, Agent::Explainee, w, e, node)
}

/// Derived-term construction run for an arbitrary agent's evidence.
pub fn derive_term_for(
    m: &Model,
    agent: Agent,
    w: &WorldId,
    e: &Explanation,
    node: &PropFormula,
) -> Result<Term> {
    if !m.contains_world(w) {
        return Err(Error::UnknownWorld(w.clone()));
    }
    match e.find(node) {
        Some(sub) if !sub.is_hypothesis() => Ok(derived_at(m, agent, w, sub)),
        _ => Err(Error::NodeNotDerived(node.clone())),
    }
}

pub(crate) fn derived_at(m: &Model, agent: Agent, w: &WorldId, sub: &Explanation) -> Term {
    debug_assert!(!sub.is_hypothesis());
    match m.ground_witness(agent, w, &sub.step()) {
        Some(d) => sub.premises.iter().fold(d.clone(), |acc, p| {
            let arg = if p.is_hypothesis() {
                m.ground_witness(agent, w, &p.claim)
                    .cloned()
                    .unwrap_or_else(|| Term::var(p.claim.clone(), vec![]))
            } else {
                derived_at(m, agent, w, p)
            };
            Term::app(acc, arg)
        }),
        None => Term::var(sub.claim.clone(), sub.premise_claims()),
    }
}

/// Whether ground `s` is one of the (possibly many) derived terms of the root
/// of `sub` for `agent`, for some choice of witnesses.
pub(crate) fn is_ground_derived_term(m: &Model, agent: Agent, w: &WorldId, sub: &Explanation, s: &Term) -> bool {
    let mut args = Vec::with_capacity(sub.premises.len());
    let mut head = s;
    for _ in 0..sub.premises.len() {
        match head {
            Term::App(f, a) => {
                args.push(a.as_ref());
                head = f;
            }
            _ => return false,
        }
    }
    args.reverse();
    if !head.is_ground() || !m.justifies(agent, head, w, &sub.step()) {
        return false;
    }
    sub.premises.iter().zip(args).all(|(p, t)| {
        if p.is_hypothesis() {
            t.is_ground() && m.justifies(agent, t, w, &p.claim)
        } else {
            is_ground_derived_term(m, agent, w, p, t)
        }
    })
}

/// The explainee understands `e` iff the derived term of its claim is ground.
pub fn understands(m: &Model, w: &WorldId, e: &Explanation) -> Result<bool> {
    Ok(derive_term(m, w, e, &e.claim)?.is_ground())
}

/// Understanding decided directly from evidence: every hypothesis and every
/// deduction step has a ground justification. Does not build derived terms.
pub fn understands_oracle(m: &Model, w: &WorldId, e: &Explanation) -> bool {
    let justified = |f: &PropFormula| {
        m.evidence_at(Agent::Explainee, w)
            .iter()
            .any(|(t, fs)| t.is_ground() && fs.contains(f))
    };
    e.post_order().into_iter().all(|n| {
        if n.is_hypothesis() {
            justified(&n.claim)
        } else {
            justified(&curried(&n.premise_claims(), &n.claim))
        }
    })
}

/// The explainee's truthful feedback on `e` at `w`.
pub fn compute_feedback(m: &Model, w: &WorldId, e: &Explanation) -> Result<FeedbackRecord> {
    if !m.contains_world(w) {
        return Err(Error::UnknownWorld(w.clone()));
    }
    fn go(m: &Model, w: &WorldId, e: &Explanation) -> FeedbackTree {
        if e.is_hypothesis() {
            let bit = m.ground_witness(Agent::Explainee, w, &e.claim).is_some();
            return FeedbackTree::new(bit, vec![]);
        }
        let premises: Vec<_> = e.premises.iter().map(|p| go(m, w, p)).collect();
        let bit = premises.iter().all(|p| p.bit) && m.ground_witness(Agent::Explainee, w, &e.step()).is_some();
        FeedbackTree::new(bit, premises)
    }
    FeedbackRecord::new(e.clone(), go(m, w, e))
}
