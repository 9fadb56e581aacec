//! JSON documents for models, explanations, feedback and transcripts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conversation::{ConversationHistory, Status, Transcript};
use crate::dynamics::{EvidenceEntry, TraceStep, UpdateKind, UpdateTrace};
use crate::error::{Error, Result};
use crate::explanation::{Explanation, FeedbackRecord, FeedbackTree};
use crate::model::{validate_model, Model, WorldId};
use crate::syntax::{Agent, PropFormula};
use crate::text::{parse_prop, parse_term};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relations {
    #[serde(rename = "1", default)]
    pub explainer: Vec<(String, String)>,
    #[serde(rename = "2", default)]
    pub explainee: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceDoc {
    pub agent: u8,
    pub term: String,
    pub world: String,
    pub formula: String,
}

/// On-disk form of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u32,
    #[serde(default)]
    pub atoms: Vec<String>,
    pub worlds: Vec<String>,
    #[serde(default)]
    pub relations: Relations,
    #[serde(default)]
    pub evidence: Vec<EvidenceDoc>,
    #[serde(default)]
    pub valuation: BTreeMap<String, Vec<String>>,
}

/// How relation edge lists are treated on load.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Closure {
    /// Add the reflexive-transitive closure.
    #[default]
    Close,
    /// Reject edge lists that are not already closed.
    Strict,
}

fn located(at: impl std::fmt::Display, e: Error) -> Error {
    Error::Document(format!("{at}: {e}"))
}

fn agent(n: u8, at: &str) -> Result<Agent> {
    Agent::from_number(n).ok_or_else(|| Error::Document(format!("{at}: agent must be 1 or 2, got {n}")))
}

impl ModelDocument {
    pub fn from_json(src: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(src)
            .map_err(|e| Error::Document(format!("line {} column {}: {e}", e.line(), e.column())))?;
        if doc.version != FORMAT_VERSION {
            return Err(Error::Document(format!(
                "version: unsupported model format version {}",
                doc.version
            )));
        }
        Ok(doc)
    }

    /// Builds the model and checks every invariant.
    pub fn to_model(&self, closure: Closure) -> Result<Model> {
        let mut m = Model::new();
        for a in &self.atoms {
            m.declare_atom(a);
        }
        for w in &self.worlds {
            m.add_world(w.as_str());
        }
        let rels = [(Agent::Explainer, &self.relations.explainer), (Agent::Explainee, &self.relations.explainee)];
        for (ag, edges) in rels {
            for (a, b) in edges {
                m.add_edge(ag, a.as_str(), b.as_str());
            }
        }
        if closure == Closure::Close {
            m.close_relations();
        }
        for (atom, worlds) in &self.valuation {
            if !self.atoms.contains(atom) {
                return Err(Error::Document(format!("valuation.{atom}: undeclared atom")));
            }
            for w in worlds {
                m.set_true(atom, w.as_str());
            }
        }
        for (i, e) in self.evidence.iter().enumerate() {
            let at = format!("evidence[{i}]");
            let ag = agent(e.agent, &at)?;
            let term = parse_term(&e.term).map_err(|err| located(format!("{at}.term"), err))?;
            let formula = parse_prop(&e.formula).map_err(|err| located(format!("{at}.formula"), err))?;
            m.add_evidence(ag, term, e.world.as_str(), formula);
        }
        let violations = validate_model(&m);
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    /// The canonical document of a model: sorted lists, closed relations.
    pub fn from_model(m: &Model) -> Self {
        let mut evidence = Vec::new();
        for ag in Agent::ALL {
            for (w, at_world) in m.evidence(ag) {
                for (t, fs) in at_world {
                    for f in fs {
                        evidence.push(EvidenceDoc {
                            agent: ag.number(),
                            term: t.to_string(),
                            world: w.to_string(),
                            formula: f.to_string(),
                        });
                    }
                }
            }
        }
        let edges = |ag| {
            m.relation(ag)
                .iter()
                .map(|(a, b): &(WorldId, WorldId)| (a.to_string(), b.to_string()))
                .collect()
        };
        ModelDocument {
            version: FORMAT_VERSION,
            atoms: m.atoms().iter().map(|a| a.to_string()).collect(),
            worlds: m.worlds().iter().map(ToString::to_string).collect(),
            relations: Relations {
                explainer: edges(Agent::Explainer),
                explainee: edges(Agent::Explainee),
            },
            evidence,
            valuation: m
                .valuation()
                .iter()
                .map(|(a, ws)| (a.to_string(), ws.iter().map(ToString::to_string).collect()))
                .collect(),
        }
    }
}

/// Parses and validates a model document.
pub fn load_model(src: &str, closure: Closure) -> Result<Model> {
    ModelDocument::from_json(src)?.to_model(closure)
}

/// Hex SHA-256 of the canonical document, serialized compactly with sorted
/// keys.
pub fn model_digest(m: &Model) -> String {
    let value = serde_json::to_value(ModelDocument::from_model(m)).expect("model documents serialize");
    let bytes = serde_json::to_vec(&value).expect("json values serialize");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplanationDoc {
    pub claim: String,
    #[serde(default)]
    pub premises: Vec<ExplanationDoc>,
}

impl ExplanationDoc {
    pub fn from_explanation(e: &Explanation) -> Self {
        ExplanationDoc {
            claim: e.claim.to_string(),
            premises: e.premises.iter().map(Self::from_explanation).collect(),
        }
    }

    /// Parses every node; the tree itself is not validated.
    pub fn to_explanation(&self) -> Result<Explanation> {
        fn go(d: &ExplanationDoc, path: &mut Vec<usize>) -> Result<Explanation> {
            let claim = parse_prop(&d.claim).map_err(|e| located(format!("node {path:?}"), e))?;
            let mut premises = Vec::with_capacity(d.premises.len());
            for (i, p) in d.premises.iter().enumerate() {
                path.push(i);
                premises.push(go(p, path)?);
                path.pop();
            }
            Ok(Explanation { claim, premises })
        }
        go(self, &mut Vec::new())
    }
}

/// Parses an explanation file, requiring a derived root and distinct nodes.
pub fn load_explanation(src: &str) -> Result<Explanation> {
    let doc: ExplanationDoc = serde_json::from_str(src).map_err(|e| Error::Document(e.to_string()))?;
    let e = doc.to_explanation()?;
    e.validate()?;
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackDoc {
    pub bit: u8,
    #[serde(default)]
    pub premises: Vec<FeedbackDoc>,
}

impl FeedbackDoc {
    pub fn from_tree(t: &FeedbackTree) -> Self {
        FeedbackDoc {
            bit: t.bit as u8,
            premises: t.premises.iter().map(Self::from_tree).collect(),
        }
    }

    pub fn to_tree(&self) -> Result<FeedbackTree> {
        fn go(d: &FeedbackDoc, path: &mut Vec<usize>) -> Result<FeedbackTree> {
            let bit = match d.bit {
                0 => false,
                1 => true,
                b => {
                    return Err(Error::MalformedFeedback {
                        path: path.clone(),
                        reason: format!("bit must be 0 or 1, got {b}"),
                    })
                }
            };
            let mut premises = Vec::with_capacity(d.premises.len());
            for (i, p) in d.premises.iter().enumerate() {
                path.push(i);
                premises.push(go(p, path)?);
                path.pop();
            }
            Ok(FeedbackTree::new(bit, premises))
        }
        go(self, &mut Vec::new())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceEntryDoc {
    pub agent: u8,
    pub world: String,
    pub term: String,
    pub formula: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStepDoc {
    pub kind: UpdateKind,
    #[serde(default)]
    pub evidence_added: Vec<EvidenceEntryDoc>,
    #[serde(default)]
    pub worlds_removed: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundDoc {
    pub explanation: ExplanationDoc,
    pub feedback: FeedbackDoc,
    pub updates: Vec<TraceStepDoc>,
}

/// On-disk form of a transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptDoc {
    pub version: u32,
    pub model_digest: String,
    pub world: String,
    pub question: String,
    pub rounds: Vec<RoundDoc>,
    pub status: Status,
    pub final_term: Option<String>,
}

impl TranscriptDoc {
    pub fn from_transcript(t: &Transcript) -> Self {
        let step = |s: &TraceStep| TraceStepDoc {
            kind: s.kind,
            evidence_added: s
                .evidence_added
                .iter()
                .map(|e| EvidenceEntryDoc {
                    agent: e.agent.number(),
                    world: e.world.to_string(),
                    term: e.term.to_string(),
                    formula: e.formula.to_string(),
                })
                .collect(),
            worlds_removed: s.worlds_removed.iter().map(ToString::to_string).collect(),
        };
        TranscriptDoc {
            version: FORMAT_VERSION,
            model_digest: t.model_digest.clone(),
            world: t.actual.to_string(),
            question: t.history.question.to_string(),
            rounds: t
                .history
                .rounds
                .iter()
                .zip(&t.traces)
                .map(|(r, tr)| RoundDoc {
                    explanation: ExplanationDoc::from_explanation(&r.explanation),
                    feedback: FeedbackDoc::from_tree(r.feedback.bits()),
                    updates: tr.steps.iter().map(step).collect(),
                })
                .collect(),
            status: t.status,
            final_term: t.final_term.as_ref().map(ToString::to_string),
        }
    }

    pub fn to_transcript(&self) -> Result<Transcript> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Document(format!(
                "version: unsupported transcript format version {}",
                self.version
            )));
        }
        let question = parse_prop(&self.question).map_err(|e| located("question", e))?;
        let mut history = ConversationHistory::new(question);
        let mut traces = Vec::with_capacity(self.rounds.len());
        for (i, r) in self.rounds.iter().enumerate() {
            let at = format!("rounds[{i}]");
            let e = r.explanation.to_explanation().map_err(|e| located(&at, e))?;
            let bits = r.feedback.to_tree().map_err(|e| located(&at, e))?;
            let fb = FeedbackRecord::new(e.clone(), bits).map_err(|e| located(&at, e))?;
            history.push(e, fb);
            let mut steps = Vec::with_capacity(r.updates.len());
            for (j, s) in r.updates.iter().enumerate() {
                let mut evidence_added = Vec::with_capacity(s.evidence_added.len());
                for (k, e) in s.evidence_added.iter().enumerate() {
                    let at = format!("{at}.updates[{j}].evidence_added[{k}]");
                    evidence_added.push(EvidenceEntry {
                        agent: agent(e.agent, &at)?,
                        world: WorldId::new(&e.world),
                        term: parse_term(&e.term).map_err(|err| located(format!("{at}.term"), err))?,
                        formula: parse_prop(&e.formula).map_err(|err| located(format!("{at}.formula"), err))?,
                    });
                }
                steps.push(TraceStep {
                    kind: s.kind,
                    round: i,
                    evidence_added,
                    worlds_removed: s.worlds_removed.iter().map(|w| WorldId::new(w)).collect(),
                });
            }
            traces.push(UpdateTrace { steps });
        }
        let final_term = self
            .final_term
            .as_deref()
            .map(parse_term)
            .transpose()
            .map_err(|e| located("final_term", e))?;
        Ok(Transcript {
            model_digest: self.model_digest.clone(),
            actual: WorldId::new(&self.world),
            history,
            traces,
            status: self.status,
            final_term,
        })
    }
}

pub fn transcript_to_json(t: &Transcript, pretty: bool) -> String {
    let doc = TranscriptDoc::from_transcript(t);
    if pretty {
        serde_json::to_string_pretty(&doc)
    } else {
        serde_json::to_string(&doc)
    }
    .expect("transcripts serialize")
}

pub fn transcript_from_json(src: &str) -> Result<Transcript> {
    let doc: TranscriptDoc = serde_json::from_str(src).map_err(|e| Error::Document(e.to_string()))?;
    doc.to_transcript()
}

/// Parses a comma-separated list of propositional formulas. Commas inside
/// parentheses do not split.
pub fn parse_prop_list(src: &str) -> Result<Vec<PropFormula>> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    for (i, ch) in src.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(parse_prop(&src[start..i]).map_err(|e| shift(e, start))?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !src[start..].trim().is_empty() || !out.is_empty() {
        out.push(parse_prop(&src[start..]).map_err(|e| shift(e, start))?);
    }
    Ok(out)
}

fn shift(e: Error, by: usize) -> Error {
    match e {
        Error::Parse { offset, message } => Error::Parse {
            offset: offset + by,
            message,
        },
        other => other,
    }
}
