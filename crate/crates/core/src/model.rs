//! Multi-agent modular models and their well-formedness check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::syntax::{Agent, Atom, PropFormula, Term};

/// Identifier of a possible world.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldId(Arc<str>);

impl WorldId {
    pub fn new(name: &str) -> Self {
        WorldId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for WorldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for WorldId {
    fn from(s: &str) -> Self {
        WorldId::new(s)
    }
}

/// Evidence held by one agent at one world: term -> justified formulas.
pub type WorldEvidence = BTreeMap<Term, BTreeSet<PropFormula>>;

/// One agent's evidence function, stored sparsely per world. Empty sets are
/// never stored, so every model is finite in the sense required of reasoners
/// with bounded power.
pub type Evidence = BTreeMap<WorldId, WorldEvidence>;

/// A multi-agent modular model over two agents.
///
/// Models are plain values; every update returns a new model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub(crate) atoms: BTreeSet<Atom>,
    pub(crate) worlds: BTreeSet<WorldId>,
    pub(crate) relations: [BTreeSet<(WorldId, WorldId)>; 2],
    pub(crate) evidence: [Evidence; 2],
    pub(crate) valuation: BTreeMap<Atom, BTreeSet<WorldId>>,
}

static EMPTY_WORLD_EVIDENCE: WorldEvidence = BTreeMap::new();

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_atom(&mut self, name: &str) -> &mut Self {
        let atom: Atom = Arc::from(name);
        self.valuation.entry(atom.clone()).or_default();
        self.atoms.insert(atom);
        self
    }

    pub fn add_world(&mut self, w: impl Into<WorldId>) -> &mut Self {
        self.worlds.insert(w.into());
        self
    }

    pub fn add_edge(&mut self, agent: Agent, from: impl Into<WorldId>, to: impl Into<WorldId>) -> &mut Self {
        self.relations[agent.index()].insert((from.into(), to.into()));
        self
    }

    /// Makes `atom` true at `w`, declaring the atom if needed.
    pub fn set_true(&mut self, atom: &str, w: impl Into<WorldId>) -> &mut Self {
        self.declare_atom(atom);
        self.valuation.get_mut(atom).expect("declared").insert(w.into());
        self
    }

    pub fn add_evidence(
        &mut self,
        agent: Agent,
        term: Term,
        w: impl Into<WorldId>,
        formula: PropFormula,
    ) -> &mut Self {
        self.evidence[agent.index()]
            .entry(w.into())
            .or_default()
            .entry(term)
            .or_default()
            .insert(formula);
        self
    }

    /// Removes a single evidence entry, dropping empty containers.
    pub fn remove_evidence(&mut self, agent: Agent, term: &Term, w: &WorldId, formula: &PropFormula) -> bool {
        let Some(at_world) = self.evidence[agent.index()].get_mut(w) else {
            return false;
        };
        let Some(set) = at_world.get_mut(term) else {
            return false;
        };
        let removed = set.remove(formula);
        if set.is_empty() {
            at_world.remove(term);
        }
        if at_world.is_empty() {
            self.evidence[agent.index()].remove(w);
        }
        removed
    }

    /// Closes both accessibility relations under reflexivity and transitivity.
    pub fn close_relations(&mut self) -> &mut Self {
        for rel in &mut self.relations {
            for w in &self.worlds {
                rel.insert((w.clone(), w.clone()));
            }
            loop {
                let mut added = Vec::new();
                for (a, b) in rel.iter() {
                    for (c, d) in rel.range((b.clone(), WorldId::new(""))..) {
                        if c != b {
                            break;
                        }
                        if !rel.contains(&(a.clone(), d.clone())) {
                            added.push((a.clone(), d.clone()));
                        }
                    }
                }
                if added.is_empty() {
                    break;
                }
                rel.extend(added);
            }
        }
        self
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn worlds(&self) -> &BTreeSet<WorldId> {
        &self.worlds
    }

    pub fn contains_world(&self, w: &WorldId) -> bool {
        self.worlds.contains(w)
    }

    pub fn relation(&self, agent: Agent) -> &BTreeSet<(WorldId, WorldId)> {
        &self.relations[agent.index()]
    }

    pub fn accessible(&self, agent: Agent, from: &WorldId, to: &WorldId) -> bool {
        self.relations[agent.index()].contains(&(from.clone(), to.clone()))
    }

    /// R_agent-successors of `w`, in world order.
    pub fn successors<'a>(&'a self, agent: Agent, w: &'a WorldId) -> impl Iterator<Item = &'a WorldId> + 'a {
        self.relations[agent.index()]
            .range((w.clone(), WorldId::new(""))..)
            .take_while(move |(from, _)| from == w)
            .map(|(_, to)| to)
    }

    pub fn evidence(&self, agent: Agent) -> &Evidence {
        &self.evidence[agent.index()]
    }

    /// All evidence `agent` holds at `w`.
    pub fn evidence_at(&self, agent: Agent, w: &WorldId) -> &WorldEvidence {
        self.evidence[agent.index()].get(w).unwrap_or(&EMPTY_WORLD_EVIDENCE)
    }

    /// `formula ∈ E_agent(term, w)`.
    pub fn justifies(&self, agent: Agent, term: &Term, w: &WorldId, formula: &PropFormula) -> bool {
        self.evidence_at(agent, w)
            .get(term)
            .is_some_and(|set| set.contains(formula))
    }

    /// The canonically least ground term justifying `formula` for `agent` at `w`.
    pub fn ground_witness(&self, agent: Agent, w: &WorldId, formula: &PropFormula) -> Option<&Term> {
        self.evidence_at(agent, w)
            .iter()
            .find(|(t, set)| t.is_ground() && set.contains(formula))
            .map(|(t, _)| t)
    }

    /// Every ground term justifying `formula` for `agent` at `w`, in canonical order.
    pub fn ground_witnesses<'a>(
        &'a self,
        agent: Agent,
        w: &WorldId,
        formula: &'a PropFormula,
    ) -> impl Iterator<Item = &'a Term> + 'a {
        self.evidence_at(agent, w)
            .iter()
            .filter(move |(t, set)| t.is_ground() && set.contains(formula))
            .map(|(t, _)| t)
    }

    /// Truth of an atom at a world; atoms are false outside their valuation set.
    pub fn holds_atom(&self, atom: &str, w: &WorldId) -> bool {
        self.valuation.get(atom).is_some_and(|ws| ws.contains(w))
    }

    pub fn valuation(&self) -> &BTreeMap<Atom, BTreeSet<WorldId>> {
        &self.valuation
    }

    /// Number of stored (term, formula) evidence entries for `agent`.
    pub fn evidence_len(&self, agent: Agent) -> usize {
        self.evidence[agent.index()]
            .values()
            .flat_map(|m| m.values())
            .map(BTreeSet::len)
            .sum()
    }

    /// Propositional truth, ignoring undeclared atoms (they are false).
    pub(crate) fn holds_prop(&self, w: &WorldId, f: &PropFormula) -> bool {
        match f {
            PropFormula::Atom(a) => self.holds_atom(a, w),
            PropFormula::Falsum => false,
            PropFormula::Implies(a, b) => !self.holds_prop(w, a) || self.holds_prop(w, b),
        }
    }
}

/// A breach of a model invariant, with its witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoWorlds,
    NotReflexive {
        agent: Agent,
        world: WorldId,
    },
    NotTransitive {
        agent: Agent,
        from: WorldId,
        via: WorldId,
        to: WorldId,
    },
    /// A relation, evidence or valuation entry mentions an undeclared world.
    DanglingWorld {
        context: &'static str,
        world: WorldId,
    },
    /// An evidence formula mentions an undeclared atom.
    UndeclaredAtom {
        agent: Agent,
        world: WorldId,
        atom: Atom,
    },
    /// A ground term justifies a formula that fails at some accessible world.
    JustificationWithoutBelief {
        agent: Agent,
        world: WorldId,
        term: Term,
        formula: PropFormula,
        counter_world: WorldId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoWorlds => write!(f, "model has no worlds"),
            Violation::NotReflexive { agent, world } => {
                write!(f, "R{agent} is not reflexive at {world}")
            }
            Violation::NotTransitive { agent, from, via, to } => write!(
                f,
                "R{agent} is not transitive: {from} -> {via} -> {to} but not {from} -> {to}"
            ),
            Violation::DanglingWorld { context, world } => {
                write!(f, "{context} mentions undeclared world {world}")
            }
            Violation::UndeclaredAtom { agent, world, atom } => {
                write!(f, "evidence of agent {agent} at {world} mentions undeclared atom {atom}")
            }
            Violation::JustificationWithoutBelief {
                agent,
                world,
                term,
                formula,
                counter_world,
            } => write!(
                f,
                "justification yields belief fails: [{term}]{agent} {formula} at {world}, \
                 but {formula} is false at accessible world {counter_world}"
            ),
        }
    }
}

/// Checks every model invariant and reports all breaches found.
///
/// The returned list is empty iff both relations are reflexive and transitive
/// on the declared worlds, no entry refers to an undeclared world or atom, and
/// every ground evidence entry holds at all accessible worlds.
pub fn validate_model(m: &Model) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.worlds.is_empty() {
        out.push(Violation::NoWorlds);
    }

    for agent in Agent::ALL {
        let rel = m.relation(agent);
        for (a, b) in rel {
            for w in [a, b] {
                if !m.worlds.contains(w) {
                    out.push(Violation::DanglingWorld {
                        context: if agent == Agent::Explainer { "R1" } else { "R2" },
                        world: w.clone(),
                    });
                }
            }
        }
        for w in &m.worlds {
            if !rel.contains(&(w.clone(), w.clone())) {
                out.push(Violation::NotReflexive {
                    agent,
                    world: w.clone(),
                });
            }
        }
        for (a, b) in rel {
            for c in m.successors(agent, b) {
                if !rel.contains(&(a.clone(), c.clone())) {
                    out.push(Violation::NotTransitive {
                        agent,
                        from: a.clone(),
                        via: b.clone(),
                        to: c.clone(),
                    });
                }
            }
        }

        for (w, entries) in m.evidence(agent) {
            if !m.worlds.contains(w) {
                out.push(Violation::DanglingWorld {
                    context: "evidence",
                    world: w.clone(),
                });
            }
            for (term, formulas) in entries {
                for formula in formulas {
                    let mut undeclared = Vec::new();
                    formula.for_each_atom(&mut |a| {
                        if !m.atoms.contains(a) {
                            undeclared.push(a.clone());
                        }
                    });
                    for atom in undeclared {
                        out.push(Violation::UndeclaredAtom {
                            agent,
                            world: w.clone(),
                            atom,
                        });
                    }
                    if !term.is_ground() {
                        continue;
                    }
                    if let Some(u) = m.successors(agent, w).find(|u| !m.holds_prop(u, formula)) {
                        out.push(Violation::JustificationWithoutBelief {
                            agent,
                            world: w.clone(),
                            term: term.clone(),
                            formula: formula.clone(),
                            counter_world: u.clone(),
                        });
                    }
                }
            }
        }
    }

    for (atom, ws) in &m.valuation {
        for w in ws {
            if !m.worlds.contains(w) {
                out.push(Violation::DanglingWorld {
                    context: "valuation",
                    world: w.clone(),
                });
            }
        }
        if !m.atoms.contains(atom) {
            out.push(Violation::UndeclaredAtom {
                agent: Agent::Explainer,
                world: ws.iter().next().cloned().unwrap_or_else(|| WorldId::new("?")),
                atom: atom.clone(),
            });
        }
    }
    out
}
