//! Propositional formulas, justification terms and the full formula language.
//!
//! All three syntactic categories derive `Ord`. The derived order is the
//! canonical order used whenever the engine has to pick one witness among
//! several: constants sort before variables, variables before applications,
//! and within each kind the fields are compared lexicographically.

use std::fmt;
use std::sync::Arc;

use crate::explanation::{Explanation, FeedbackRecord};

/// An atomic proposition name.
pub type Atom = Arc<str>;

/// A formula of the propositional core: atoms, falsum and implication.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropFormula {
    Atom(Atom),
    Falsum,
    Implies(Box<PropFormula>, Box<PropFormula>),
}

impl PropFormula {
    pub fn atom(name: &str) -> Self {
        PropFormula::Atom(Arc::from(name))
    }

    pub fn implies(antecedent: PropFormula, consequent: PropFormula) -> Self {
        PropFormula::Implies(Box::new(antecedent), Box::new(consequent))
    }

    /// Visits every atom occurring in the formula.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            PropFormula::Atom(name) => f(name),
            PropFormula::Falsum => {}
            PropFormula::Implies(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// Splits the formula along its right spine, returning every reading
    /// `A1 -> (... -> (Ak -> G))` with `k >= 1`, shortest first.
    pub fn rule_readings(&self) -> Vec<(Vec<PropFormula>, PropFormula)> {
        let mut readings = Vec::new();
        let mut premises = Vec::new();
        let mut current = self;
        while let PropFormula::Implies(a, b) = current {
            premises.push((**a).clone());
            readings.push((premises.clone(), (**b).clone()));
            current = b;
        }
        readings
    }
}

/// Builds the right-nested implication `A1 -> (A2 -> (... -> (An -> goal)))`.
///
/// An empty premise list yields `goal` itself.
pub fn curried(premises: &[PropFormula], goal: &PropFormula) -> PropFormula {
    premises
        .iter()
        .rev()
        .fold(goal.clone(), |acc, p| PropFormula::implies(p.clone(), acc))
}

/// A justification term.
///
/// `Var { goal, premises }` is the open assumption `x_goal^{premises}`. With an
/// empty premise list it stands for an unjustified hypothesis, otherwise for an
/// unjustified deduction step; the two forms are distinct terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Arc<str>),
    Var {
        goal: PropFormula,
        premises: Vec<PropFormula>,
    },
    App(Box<Term>, Box<Term>),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Const(Arc::from(name))
    }

    pub fn var(goal: PropFormula, premises: Vec<PropFormula>) -> Self {
        Term::Var { goal, premises }
    }

    pub fn app(function: Term, argument: Term) -> Self {
        Term::App(Box::new(function), Box::new(argument))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var { .. } => false,
            Term::App(f, a) => f.is_ground() && a.is_ground(),
        }
    }

    /// Whether `needle` occurs as a subterm (including the term itself).
    pub fn contains(&self, needle: &Term) -> bool {
        if self == needle {
            return true;
        }
        match self {
            Term::App(f, a) => f.contains(needle) || a.contains(needle),
            _ => false,
        }
    }

    /// Replaces every occurrence of `var` by `replacement`.
    pub fn substitute(&self, var: &Term, replacement: &Term) -> Term {
        if self == var {
            return replacement.clone();
        }
        match self {
            Term::App(f, a) => Term::app(
                f.substitute(var, replacement),
                a.substitute(var, replacement),
            ),
            other => other.clone(),
        }
    }
}

/// The two conversation participants. The explainer always announces to the
/// explainee.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agent {
    Explainer,
    Explainee,
}

impl Agent {
    pub const ALL: [Agent; 2] = [Agent::Explainer, Agent::Explainee];

    /// 1 for the explainer, 2 for the explainee.
    pub fn number(self) -> u8 {
        match self {
            Agent::Explainer => 1,
            Agent::Explainee => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Agent> {
        match n {
            1 => Some(Agent::Explainer),
            2 => Some(Agent::Explainee),
            _ => None,
        }
    }

    pub(crate) fn index(self) -> usize {
        self.number() as usize - 1
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// The full formula language: propositional core, belief, explicit
/// justification, "can justify", and the two dynamic operators.
///
/// `Just` and `Triangle` carry propositional bodies only, since evidence
/// functions range over propositional formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Prop(PropFormula),
    Box(Agent, Box<Formula>),
    Just(Term, Agent, PropFormula),
    Triangle(Agent, PropFormula),
    /// `[agent : explanation] body`
    DynExp(Agent, Explanation, Box<Formula>),
    /// `[agent : feedback] body`
    DynFb(Agent, FeedbackRecord, Box<Formula>),
    /// Implication with at least one non-propositional side. Use
    /// [`Formula::implies`] to keep purely propositional implications inside
    /// `Prop`.
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Prop(PropFormula::atom(name))
    }

    pub fn falsum() -> Self {
        Formula::Prop(PropFormula::Falsum)
    }

    pub fn implies(antecedent: Formula, consequent: Formula) -> Self {
        match (antecedent, consequent) {
            (Formula::Prop(a), Formula::Prop(b)) => Formula::Prop(PropFormula::implies(a, b)),
            (a, b) => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn boxed(agent: Agent, body: Formula) -> Self {
        Formula::Box(agent, Box::new(body))
    }

    /// Wraps `body` in dynamic operators so that `updates` take effect in
    /// the order given (the first update is applied first).
    pub fn after(updates: Vec<Update>, body: Formula) -> Self {
        updates.into_iter().rev().fold(body, |acc, update| match update {
            Update::Explanation(agent, e) => Formula::DynExp(agent, e, Box::new(acc)),
            Update::Feedback(agent, fb) => Formula::DynFb(agent, fb, Box::new(acc)),
        })
    }

    /// Whether the formula lies in the inline grammar (no dynamic operators).
    pub fn is_static(&self) -> bool {
        match self {
            Formula::Prop(_) | Formula::Just(..) | Formula::Triangle(..) => true,
            Formula::Box(_, body) => body.is_static(),
            Formula::Implies(a, b) => a.is_static() && b.is_static(),
            Formula::DynExp(..) | Formula::DynFb(..) => false,
        }
    }
}

impl From<PropFormula> for Formula {
    fn from(p: PropFormula) -> Self {
        Formula::Prop(p)
    }
}

/// A model update named by a dynamic operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Update {
    Explanation(Agent, Explanation),
    Feedback(Agent, FeedbackRecord),
}

/// `A -> false`.
impl std::ops::Not for PropFormula {
    type Output = PropFormula;

    fn not(self) -> PropFormula {
        PropFormula::implies(self, PropFormula::Falsum)
    }
}

impl std::ops::Not for Formula {
    type Output = Formula;

    fn not(self) -> Formula {
        Formula::implies(self, Formula::falsum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> PropFormula {
        PropFormula::atom(n)
    }

    #[test]
    fn curried_shapes() {
        assert_eq!(curried(&[], &a("b")), a("b"));
        assert_eq!(curried(&[a("a")], &a("b")), PropFormula::implies(a("a"), a("b")));
        assert_eq!(
            curried(&[a("a1"), a("a2")], &a("b")),
            PropFormula::implies(a("a1"), PropFormula::implies(a("a2"), a("b")))
        );
    }

    #[test]
    fn curried_depth_and_rightmost_leaf() {
        let premises: Vec<_> = (0..5).map(|i| a(&format!("p{i}"))).collect();
        for n in 0..=premises.len() {
            let mut f = &curried(&premises[..n], &a("g"));
            let mut depth = 0;
            while let PropFormula::Implies(_, rest) = f {
                depth += 1;
                f = rest;
            }
            assert_eq!(depth, n);
            assert_eq!(f, &a("g"));
        }
    }

    #[test]
    fn rule_readings_cover_every_split() {
        let f = curried(&[a("a"), a("b")], &a("c"));
        let readings = f.rule_readings();
        assert_eq!(readings.len(), 2);
        assert_eq!(readings[0], (vec![a("a")], PropFormula::implies(a("b"), a("c"))));
        assert_eq!(readings[1], (vec![a("a"), a("b")], a("c")));
        assert!(a("c").rule_readings().is_empty());
    }

    #[test]
    fn canonical_term_order() {
        let c = Term::constant("z");
        let x = Term::var(a("a"), vec![]);
        let app = Term::app(Term::constant("a"), Term::constant("b"));
        assert!(c < x && x < app);
        assert!(Term::constant("c1") < Term::constant("c2"));
        assert!(Term::var(a("a"), vec![]) < Term::var(a("a"), vec![a("b")]));
    }

    #[test]
    fn hypothesis_and_deduction_variables_differ() {
        assert_ne!(Term::var(a("b"), vec![]), Term::var(a("b"), vec![a("a")]));
    }

    #[test]
    fn substitution() {
        let x = Term::var(a("b"), vec![a("a")]);
        let r = Term::app(Term::constant("dDB"), Term::app(Term::constant("dAD"), Term::constant("tA")));
        assert_eq!(x.substitute(&x, &r), r);
        let s = Term::app(Term::constant("dBC"), x.clone());
        assert_eq!(s.substitute(&x, &r), Term::app(Term::constant("dBC"), r.clone()));
        let c = Term::constant("c");
        assert_eq!(c.substitute(&x, &r), c);
    }

    #[test]
    fn groundness() {
        assert!(Term::app(Term::constant("a"), Term::constant("b")).is_ground());
        assert!(!Term::app(Term::constant("a"), Term::var(a("b"), vec![])).is_ground());
    }
}
