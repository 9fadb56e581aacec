//! Truth evaluation and sanity checks of the model class's validities.

use crate::dynamics::{learn_from_explanation, learn_from_feedback};
use crate::error::{Error, Result};
use crate::model::{Model, WorldId};
use crate::syntax::{Agent, Formula, PropFormula, Term};

/// Evaluates `f` at world `w`.
///
/// Dynamic operators are evaluated in the updated model: `[2: e] φ` after the
/// explainee hears `e` at `w`, `[1: fb] φ` after the explainer hears `fb`
/// with `w` as the actual world.
pub fn eval(m: &Model, w: &WorldId, f: &Formula) -> Result<bool> {
    if !m.contains_world(w) {
        return Err(Error::UnknownWorld(w.clone()));
    }
    check_atoms(m, f)?;
    eval_unchecked(m, w, f)
}

/// Same as [`eval`]; dynamic operators are handled uniformly by both.
pub fn eval_dynamic(m: &Model, w: &WorldId, f: &Formula) -> Result<bool> {
    eval(m, w, f)
}

fn eval_unchecked(m: &Model, w: &WorldId, f: &Formula) -> Result<bool> {
    Ok(match f {
        Formula::Prop(p) => m.holds_prop(w, p),
        Formula::Implies(a, b) => !eval_unchecked(m, w, a)? || eval_unchecked(m, w, b)?,
        Formula::Box(i, body) => {
            for u in m.successors(*i, w) {
                if !eval_unchecked(m, u, body)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Just(t, i, body) => m.justifies(*i, t, w, body),
        Formula::Triangle(i, body) => m.ground_witness(*i, w, body).is_some(),
        Formula::DynExp(i, e, body) => {
            if *i != Agent::Explainee {
                return Err(Error::UnsupportedUpdate(*i));
            }
            let updated = learn_from_explanation(m, w, e)?;
            eval_unchecked(&updated, w, body)?
        }
        Formula::DynFb(j, fb, body) => {
            if *j != Agent::Explainer {
                return Err(Error::UnsupportedUpdate(*j));
            }
            let updated = learn_from_feedback(m, w, fb)?;
            eval_unchecked(&updated, w, body)?
        }
    })
}

fn check_atoms(m: &Model, f: &Formula) -> Result<()> {
    fn prop(m: &Model, p: &PropFormula) -> Result<()> {
        let mut missing = None;
        p.for_each_atom(&mut |a| {
            if missing.is_none() && !m.atoms().contains(a) {
                missing = Some(a.to_string());
            }
        });
        missing.map_or(Ok(()), |a| Err(Error::UnknownAtom(a)))
    }
    match f {
        Formula::Prop(p) | Formula::Just(_, _, p) | Formula::Triangle(_, p) => prop(m, p),
        Formula::Box(_, body) => check_atoms(m, body),
        Formula::Implies(a, b) => {
            check_atoms(m, a)?;
            check_atoms(m, b)
        }
        Formula::DynExp(_, e, body) => {
            e.formulas().iter().try_for_each(|p| prop(m, p))?;
            check_atoms(m, body)
        }
        Formula::DynFb(_, fb, body) => {
            fb.explanation().formulas().iter().try_for_each(|p| prop(m, p))?;
            check_atoms(m, body)
        }
    }
}

/// The canonically least ground term with which `agent` justifies `p` at `w`.
pub fn can_justify(m: &Model, w: &WorldId, agent: Agent, p: &PropFormula) -> Result<Option<Term>> {
    check_atoms(m, &Formula::Prop(p.clone()))?;
    if !m.contains_world(w) {
        return Err(Error::UnknownWorld(w.clone()));
    }
    Ok(m.ground_witness(agent, w, p).cloned())
}

/// A failed instance of one of the checked validities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailedInstance {
    pub world: WorldId,
    pub formula: Formula,
}

/// `[s]i (F -> G)` and `[t]i F` hold at `world` but `[s . t]i G` does not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureCounterexample {
    pub agent: Agent,
    pub world: WorldId,
    pub function: Term,
    pub argument: Term,
    pub premise: PropFormula,
    pub conclusion: PropFormula,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    /// Number of instances checked per family.
    pub instances: usize,
    pub justification_yields_belief: Vec<FailedInstance>,
    pub factivity: Vec<FailedInstance>,
    pub belief_reflexivity: Vec<FailedInstance>,
    /// Witnesses that application closure is not valid in this model.
    pub closure_counterexamples: Vec<ClosureCounterexample>,
}

impl Report {
    /// All three validity families hold on every checked instance.
    pub fn validities_hold(&self) -> bool {
        self.justification_yields_belief.is_empty() && self.factivity.is_empty() && self.belief_reflexivity.is_empty()
    }
}

/// Checks, at every world, the instances `[t]i F -> Bi F`, `[t]i F -> F` and
/// `Bi F -> F` for every ground evidence entry `(t, F)` of the model, and
/// searches the model for counterexamples to application closure.
pub fn check_validity_samples(m: &Model) -> Result<Report> {
    let mut report = Report::default();
    let mut entries = std::collections::BTreeSet::new();
    for agent in Agent::ALL {
        for at_world in m.evidence(agent).values() {
            for (t, fs) in at_world.iter().filter(|(t, _)| t.is_ground()) {
                for f in fs {
                    entries.insert((agent, t.clone(), f.clone()));
                }
            }
        }
    }
    for w in m.worlds() {
        for (agent, t, f) in &entries {
            let just = Formula::Just(t.clone(), *agent, f.clone());
            let belief = Formula::boxed(*agent, Formula::Prop(f.clone()));
            let checks = [
                (Formula::implies(just.clone(), belief.clone()), &mut report.justification_yields_belief),
                (Formula::implies(just, Formula::Prop(f.clone())), &mut report.factivity),
                (Formula::implies(belief, Formula::Prop(f.clone())), &mut report.belief_reflexivity),
            ];
            for (formula, failures) in checks {
                if !eval(m, w, &formula)? {
                    failures.push(FailedInstance {
                        world: w.clone(),
                        formula,
                    });
                }
            }
            report.instances += 1;
        }
        for agent in Agent::ALL {
            let here = m.evidence_at(agent, w);
            for (s, s_fs) in here.iter().filter(|(t, _)| t.is_ground()) {
                for sf in s_fs {
                    let PropFormula::Implies(premise, conclusion) = sf else {
                        continue;
                    };
                    for (t, t_fs) in here.iter().filter(|(t, _)| t.is_ground()) {
                        if !t_fs.contains(premise) {
                            continue;
                        }
                        let applied = Term::app(s.clone(), t.clone());
                        if !m.justifies(agent, &applied, w, conclusion) {
                            report.closure_counterexamples.push(ClosureCounterexample {
                                agent,
                                world: w.clone(),
                                function: s.clone(),
                                argument: t.clone(),
                                premise: (**premise).clone(),
                                conclusion: (**conclusion).clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_formula;

    fn p(n: &str) -> PropFormula {
        PropFormula::atom(n)
    }

    fn chain_model() -> Model {
        // r -> m -> l under R1; p true at r and m, false at l
        let mut m = Model::new();
        for w in ["r", "m", "l"] {
            m.add_world(w);
        }
        m.set_true("p", "r").set_true("p", "m");
        m.add_edge(Agent::Explainer, "r", "m").add_edge(Agent::Explainer, "m", "l");
        m.close_relations();
        m
    }

    #[test]
    fn falsum_is_false() {
        let m = chain_model();
        for w in m.worlds() {
            assert!(!eval(&m, w, &Formula::falsum()).unwrap());
        }
    }

    #[test]
    fn box_agrees_with_successor_enumeration() {
        let m = chain_model();
        let f = Formula::boxed(Agent::Explainer, Formula::atom("p"));
        for w in m.worlds() {
            let brute = m
                .relation(Agent::Explainer)
                .iter()
                .filter(|(a, _)| a == w)
                .all(|(_, b)| m.valuation()["p"].contains(b));
            assert_eq!(eval(&m, w, &f).unwrap(), brute, "world {w}");
        }
        assert!(!eval(&m, &"r".into(), &f).unwrap());
    }

    #[test]
    fn jyb_instance_holds_everywhere() {
        let mut m = Model::new();
        m.add_world("u").add_world("v").set_true("a", "u").set_true("a", "v");
        m.add_edge(Agent::Explainee, "u", "v").close_relations();
        m.add_evidence(Agent::Explainee, Term::constant("t"), "u", p("a"));
        let f = parse_formula("[t]2 a -> B2 a").unwrap();
        for w in m.worlds() {
            assert!(eval(&m, w, &f).unwrap());
        }
    }

    #[test]
    fn triangle_matches_can_justify() {
        let mut m = Model::new();
        m.add_world("w").set_true("p", "w").close_relations();
        let w = WorldId::new("w");
        assert_eq!(can_justify(&m, &w, Agent::Explainee, &p("p")).unwrap(), None);
        m.add_evidence(Agent::Explainee, Term::constant("c2"), "w", p("p"));
        m.add_evidence(Agent::Explainee, Term::constant("c1"), "w", p("p"));
        assert_eq!(
            can_justify(&m, &w, Agent::Explainee, &p("p")).unwrap(),
            Some(Term::constant("c1"))
        );
        assert!(eval(&m, &w, &Formula::Triangle(Agent::Explainee, p("p"))).unwrap());
    }

    #[test]
    fn unknown_world_and_atom() {
        let m = chain_model();
        assert_eq!(
            eval(&m, &"nowhere".into(), &Formula::atom("p")),
            Err(Error::UnknownWorld("nowhere".into()))
        );
        assert_eq!(
            eval(&m, &"r".into(), &Formula::atom("q")),
            Err(Error::UnknownAtom("q".into()))
        );
    }

    #[test]
    fn closure_counterexample_is_found() {
        let mut m = Model::new();
        m.add_world("w").set_true("a", "w").set_true("b", "w").close_relations();
        m.add_evidence(Agent::Explainee, Term::constant("s"), "w", PropFormula::implies(p("a"), p("b")));
        m.add_evidence(Agent::Explainee, Term::constant("t"), "w", p("a"));
        let report = check_validity_samples(&m).unwrap();
        assert!(report.validities_hold());
        assert_eq!(report.closure_counterexamples.len(), 1);
        assert_eq!(report.closure_counterexamples[0].conclusion, p("b"));

        m.add_evidence(
            Agent::Explainee,
            Term::app(Term::constant("s"), Term::constant("t")),
            "w",
            p("b"),
        );
        assert!(check_validity_samples(&m).unwrap().closure_counterexamples.is_empty());
    }

    #[test]
    fn empty_evidence_passes_vacuously() {
        let report = check_validity_samples(&chain_model()).unwrap();
        assert!(report.validities_hold());
        assert_eq!(report.instances, 0);
    }
}
