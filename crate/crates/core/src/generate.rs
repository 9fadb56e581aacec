//! Seeded random models, explanations and formulas for property tests and
//! benchmarks.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::explanation::{derive_term_for, Explanation};
use crate::model::{Model, WorldId};
use crate::syntax::{curried, Agent, Formula, PropFormula, Term};

const ATOMS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const CONSTANTS: [&str; 6] = ["k", "m", "n", "r", "s", "t"];

pub struct Generator {
    rng: ChaCha8Rng,
}

/// A small random model with an explanation to test against it.
#[derive(Clone, Debug)]
pub struct Case {
    pub model: Model,
    pub world: WorldId,
    pub explanation: Explanation,
}

/// An instance where some explanation of `claim` is known to both agents at
/// `world`: the explainee understands it and the explainer holds ground
/// derived terms for all of it.
#[derive(Clone, Debug)]
pub struct PlantedCase {
    pub model: Model,
    pub world: WorldId,
    pub claim: PropFormula,
    pub planted: Explanation,
}

fn world(i: usize) -> WorldId {
    WorldId::new(&format!("w{i}"))
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn atom(&mut self) -> PropFormula {
        PropFormula::atom(ATOMS.choose(&mut self.rng).expect("non-empty"))
    }

    /// A propositional formula of implication depth at most `depth`.
    pub fn prop(&mut self, depth: usize) -> PropFormula {
        match self.rng.random_range(0..10) {
            0 => PropFormula::Falsum,
            1..=5 if depth > 0 => PropFormula::implies(self.prop(depth - 1), self.prop(depth - 1)),
            _ => self.atom(),
        }
    }

    pub fn term(&mut self, depth: usize) -> Term {
        match self.rng.random_range(0..6) {
            0 if depth > 0 => {
                let n = self.rng.random_range(0..3);
                let premises = (0..n).map(|_| self.prop(1)).collect();
                Term::var(self.prop(1), premises)
            }
            1..=2 if depth > 0 => Term::app(self.term(depth - 1), self.term(depth - 1)),
            _ => Term::constant(CONSTANTS.choose(&mut self.rng).expect("non-empty")),
        }
    }

    /// A static formula of modal depth at most `depth`.
    pub fn formula(&mut self, depth: usize) -> Formula {
        let agent = if self.rng.random_bool(0.5) { Agent::Explainer } else { Agent::Explainee };
        match self.rng.random_range(0..8) {
            0 if depth > 0 => Formula::boxed(agent, self.formula(depth - 1)),
            1 => Formula::Just(self.term(2), agent, self.prop(2)),
            2 => Formula::Triangle(agent, self.prop(2)),
            3 | 4 if depth > 0 => Formula::implies(self.formula(depth - 1), self.formula(depth - 1)),
            _ => Formula::Prop(self.prop(2)),
        }
    }

    /// An explanation of depth 1 to `max_depth` with distinct nodes drawn
    /// from atoms and simple implications.
    pub fn explanation(&mut self, max_depth: usize) -> Explanation {
        let mut used = BTreeSet::new();
        let claim = self.fresh(&mut used);
        let depth = self.rng.random_range(1..=max_depth.max(1));
        self.node(claim, depth, true, &mut used)
    }

    fn fresh(&mut self, used: &mut BTreeSet<PropFormula>) -> PropFormula {
        loop {
            let f = if self.rng.random_bool(0.8) {
                self.atom()
            } else {
                PropFormula::implies(self.atom(), self.atom())
            };
            if used.insert(f.clone()) {
                return f;
            }
        }
    }

    fn node(&mut self, claim: PropFormula, depth: usize, must_derive: bool, used: &mut BTreeSet<PropFormula>) -> Explanation {
        // 6 atoms and 36 implications leave plenty of room for 15 nodes
        if depth == 0 || (!must_derive && self.rng.random_bool(0.4)) {
            return Explanation::leaf(claim);
        }
        let n = self.rng.random_range(1..=2);
        let premises = (0..n)
            .map(|_| {
                let f = self.fresh(used);
                self.node(f, depth - 1, false, used)
            })
            .collect();
        Explanation::node(claim, premises)
    }

    /// Random worlds (1 to `max_worlds`), closed relations and a valuation
    /// making each atom true with probability `truth`.
    fn frame(&mut self, max_worlds: usize, truth: f64) -> Model {
        let mut m = Model::new();
        let n = self.rng.random_range(1..=max_worlds.max(1));
        for a in ATOMS {
            m.declare_atom(a);
        }
        for i in 0..n {
            m.add_world(world(i));
            for a in ATOMS {
                if self.rng.random_bool(truth) {
                    m.set_true(a, world(i));
                }
            }
        }
        for agent in Agent::ALL {
            for i in 0..n {
                for j in 0..n {
                    if i != j && self.rng.random_bool(0.35) {
                        m.add_edge(agent, world(i), world(j));
                    }
                }
            }
        }
        m.close_relations();
        m
    }

    /// Adds the entry if it keeps the model well-formed.
    fn try_add(m: &mut Model, agent: Agent, t: Term, w: &WorldId, f: PropFormula) -> bool {
        if t.is_ground() && !m.successors(agent, w).all(|u| m.holds_prop(u, &f)) {
            return false;
        }
        m.add_evidence(agent, t, w.clone(), f);
        true
    }

    /// A model with at most `max_worlds` worlds and `max_entries` evidence
    /// entries, most of them about parts of the returned explanation.
    pub fn case(&mut self, max_worlds: usize, max_entries: usize, max_depth: usize) -> Case {
        let mut m = self.frame(max_worlds, 0.8);
        let e = self.explanation(max_depth);
        let worlds: Vec<WorldId> = m.worlds().iter().cloned().collect();
        let w = worlds.choose(&mut self.rng).expect("non-empty").clone();
        let mut relevant: Vec<PropFormula> = e.hypotheses();
        relevant.extend(e.post_order().into_iter().filter(|n| !n.is_hypothesis()).map(|n| n.step()));
        relevant.extend(e.derived());
        let entries = self.rng.random_range(0..=max_entries);
        for _ in 0..entries {
            let agent = if self.rng.random_bool(0.75) { Agent::Explainee } else { Agent::Explainer };
            let at = if self.rng.random_bool(0.7) {
                w.clone()
            } else {
                worlds.choose(&mut self.rng).expect("non-empty").clone()
            };
            let f = if self.rng.random_bool(0.8) {
                relevant.choose(&mut self.rng).expect("non-empty").clone()
            } else {
                self.prop(1)
            };
            let t = if self.rng.random_bool(0.85) {
                Term::constant(CONSTANTS.choose(&mut self.rng).expect("non-empty"))
            } else {
                self.term(2)
            };
            Self::try_add(&mut m, agent, t, &at, f);
        }
        Case {
            model: m,
            world: w,
            explanation: e,
        }
    }

    /// An instance with a planted mutually known explanation, a rival
    /// explanation of the same claim and scattered partial knowledge of both
    /// at other worlds. All atoms are true everywhere, so any evidence is
    /// well-formed.
    pub fn planted(&mut self, max_worlds: usize, max_depth: usize) -> PlantedCase {
        let mut m = self.frame(max_worlds, 1.0);
        let planted = self.explanation(max_depth);
        let claim = planted.claim.clone();
        let rival = loop {
            let r = self.explanation(max_depth);
            if r.is_hypothesis() {
                continue;
            }
            break Explanation::node(claim.clone(), r.premises.into_iter().filter(|p| p.find(&claim).is_none()).collect());
        };
        let worlds: Vec<WorldId> = m.worlds().iter().cloned().collect();
        let w = worlds.choose(&mut self.rng).expect("non-empty").clone();

        let mut fresh = 0usize;
        let mut name = |prefix: &str| {
            fresh += 1;
            Term::constant(&format!("{prefix}{fresh}"))
        };
        let parts = |e: &Explanation| -> Vec<PropFormula> {
            let mut v = e.hypotheses();
            v.extend(e.post_order().into_iter().filter(|n| !n.is_hypothesis()).map(|n| n.step()));
            v
        };

        for f in parts(&planted) {
            m.add_evidence(Agent::Explainee, name("s"), w.clone(), f.clone());
            m.add_evidence(Agent::Explainer, name("d"), w.clone(), f);
        }
        if !rival.premises.is_empty() {
            for f in parts(&rival) {
                if self.rng.random_bool(0.8) {
                    m.add_evidence(Agent::Explainer, name("d"), w.clone(), f.clone());
                }
                if self.rng.random_bool(0.4) {
                    m.add_evidence(Agent::Explainee, name("s"), w.clone(), f);
                }
            }
        }
        for u in worlds.iter().filter(|u| **u != w) {
            for f in parts(&planted).into_iter().chain(parts(&rival)) {
                if self.rng.random_bool(0.5) {
                    m.add_evidence(Agent::Explainee, name("s"), u.clone(), f);
                }
            }
        }
        for e in [&planted, &rival] {
            if !e.is_hypothesis() && e.validate().is_ok() {
                add_derived_terms(&mut m, Agent::Explainer, &w, e);
            }
        }
        PlantedCase {
            model: m,
            world: w,
            claim,
            planted,
        }
    }
}

/// Records, for every derived node of `e`, the agent's canonical derived term
/// when it is ground.
pub fn add_derived_terms(m: &mut Model, agent: Agent, w: &WorldId, e: &Explanation) {
    for n in e.post_order() {
        if n.is_hypothesis() {
            continue;
        }
        if let Ok(t) = derive_term_for(m, agent, w, e, &n.claim) {
            if t.is_ground() {
                m.add_evidence(agent, t, w.clone(), n.claim.clone());
            }
        }
    }
}

/// Whether `agent` ground-justifies every hypothesis and deduction step of
/// `e` at `w`.
pub fn knows_all_parts(m: &Model, agent: Agent, w: &WorldId, e: &Explanation) -> bool {
    e.post_order().into_iter().all(|n| {
        let part = if n.is_hypothesis() {
            n.claim.clone()
        } else {
            curried(&n.premise_claims(), &n.claim)
        };
        m.ground_witness(agent, w, &part).is_some()
    })
}
