mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::*;
use xconv_core::document::{transcript_to_json, Closure};
use xconv_core::generate::Generator;
use xconv_core::semantics::check_validity_samples;
use xconv_core::*;

fn chatbot() -> (Model, WorldId) {
    (fixture("chatbot.json"), WorldId::new("w0"))
}

fn fluid_route() -> Explanation {
    Explanation::chain(&[p("sick"), p("fluid_loss"), p("drink_water")])
}

fn thirst_route() -> Explanation {
    Explanation::chain(&[p("sick"), p("thirsty"), p("drink_water")])
}

#[test]
fn chatbot_first_choice_is_a_tie_broken_canonically() {
    let (m, w) = chatbot();
    let h = ConversationHistory::new(p("drink_water"));
    let best = most_preferred(&m, &w, &h, SearchBounds::default()).unwrap();
    assert_eq!(best.explanations, BTreeSet::from([fluid_route(), thirst_route()]));
    assert_eq!(uncertainty_set(&m, &w, &fluid_route()), BTreeSet::from([p("fluid_loss")]));
    assert_eq!(uncertainty_set(&m, &w, &thirst_route()), BTreeSet::from([p("thirsty")]));
}

#[test]
fn chatbot_feedback_teaches_the_explainer() {
    let (m, w) = chatbot();
    let heard = learn_from_explanation(&m, &w, &fluid_route()).unwrap();
    let fb = compute_feedback(&heard, &w, &fluid_route()).unwrap();
    assert_eq!(fb.to_string(), "1/0/0");
    let after = Formula::DynFb(
        Agent::Explainer,
        fb.clone(),
        Box::new(Formula::implies(
            Formula::boxed(Agent::Explainer, Formula::Triangle(Agent::Explainee, p("sick"))),
            Formula::boxed(
                Agent::Explainer,
                !Formula::Triangle(Agent::Explainee, imp("sick", "fluid_loss")),
            ),
        )),
    );
    assert!(eval(&heard, &w, &after).unwrap());
    let learned = learn_from_feedback(&heard, &w, &fb).unwrap();
    assert_eq!(learned.worlds(), &BTreeSet::from([w.clone()]));
    assert_eq!(why_set(&fb), BTreeSet::from([p("fluid_loss")]));

    let mut h = ConversationHistory::new(p("drink_water"));
    h.push(fluid_route(), fb);
    let best = most_preferred(&m, &w, &h, SearchBounds::default()).unwrap();
    assert_eq!(best.explanations, BTreeSet::from([thirst_route()]));
    assert!(best.complete);
}

#[test]
fn chatbot_replay_reaches_the_final_belief() {
    let (m, w) = chatbot();
    let t = run_conversation(&m, &w, &p("drink_water"), SearchBounds::default(), ExplaineeDriver::Simulated, 10).unwrap();
    let final_model = replay(&m, &t).unwrap();
    let term = app(c("r"), app(c("s"), c("t")));
    let justified = Formula::Just(term.clone(), Agent::Explainee, p("drink_water"));
    assert!(eval(&final_model, &w, &justified).unwrap());
    assert!(eval(&final_model, &w, &Formula::boxed(Agent::Explainee, Formula::atom("drink_water"))).unwrap());

    let mut tampered = t.clone();
    tampered.history.rounds.swap(0, 1);
    assert!(replay(&m, &tampered).is_err());
}

#[test]
fn chatbot_round_limit_and_candidate_count() {
    let (m, w) = chatbot();
    let t = run_conversation(&m, &w, &p("drink_water"), SearchBounds::default(), ExplaineeDriver::Simulated, 1).unwrap();
    assert_eq!(t.status, Status::BoundsReached);
    assert_eq!(t.history.len(), 1);
    assert!(candidate_count(&m, &w, &p("drink_water"), SearchBounds::default()) >= 3);
}

#[test]
fn example_four_enumeration_and_ranking() {
    let m = fixture("example4.json");
    let w = WorldId::new("w0");
    let found = enumerate_available(&m, &w, &BTreeSet::new(), &p("b"), SearchBounds::default());
    assert!(found.complete);
    assert_eq!(found.explanations.len(), 2);
    let best = most_preferred(&m, &w, &ConversationHistory::new(p("b")), SearchBounds::default()).unwrap();
    assert_eq!(best.explanations, BTreeSet::from([Explanation::chain(&[p("a"), p("b")])]));
}

#[test]
fn example_one_understanding() {
    let m = fixture("example1.json");
    let w = WorldId::new("w");
    let e = load_explanation(&std::fs::read_to_string(fixture_path("example1_explanation.json")).unwrap()).unwrap();
    assert!(understands(&m, &w, &e).unwrap());
    assert!(understands_oracle(&m, &w, &e));
    assert_eq!(compute_feedback(&m, &w, &e).unwrap().to_string(), "1/1/1");
}

#[test]
fn jyb_violation_is_reported() {
    let src = std::fs::read_to_string(fixture_path("jyb_violation.json")).unwrap();
    match load_model(&src, Closure::Close) {
        Err(Error::InvalidModel(vs)) => assert!(
            vs.iter().any(|v| matches!(v, Violation::JustificationWithoutBelief { .. })),
            "{vs:?}"
        ),
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn fixtures_satisfy_the_validities() {
    for name in MODEL_FIXTURES {
        let m = fixture(name);
        assert!(validate_model(&m).is_empty(), "{name}");
        assert!(check_validity_samples(&m).unwrap().validities_hold(), "{name}");
    }
}

/// Drives a session with the answers a truthful explainee would give.
fn drive_session(store: &SessionStore, m: &Model, w: &WorldId, claim: &PropFormula) -> Transcript {
    let id = store.create(m, w, claim, SearchBounds::default(), 20).unwrap();
    let mut mirror = m.clone();
    loop {
        let state = store.get_state(&id).unwrap();
        let Some(pending) = state.pending else { break };
        let e = pending.to_explanation().unwrap();
        mirror = learn_from_explanation(&mirror, w, &e).unwrap();
        let fb = compute_feedback(&mirror, w, &e).unwrap();
        mirror = learn_from_feedback(&mirror, w, &fb).unwrap();
        store.post_feedback(&id, state.round, fb.bits().clone()).unwrap();
    }
    store.transcript(&id).unwrap()
}

#[test]
fn session_transcripts_match_simulation() {
    let store = SessionStore::new();
    let (m, w) = chatbot();
    let mut cases = vec![(m, w, p("drink_water"))];
    let mut g = Generator::new(99);
    cases.extend((0..20).map(|_| {
        let c = g.planted(3, 3);
        (c.model, c.world, c.claim)
    }));
    for (m, w, claim) in cases {
        let simulated = run_conversation(&m, &w, &claim, SearchBounds::default(), ExplaineeDriver::Simulated, 20).unwrap();
        let session = drive_session(&store, &m, &w, &claim);
        assert_eq!(transcript_to_json(&session, false), transcript_to_json(&simulated, false));
    }
}

#[test]
fn chatbot_session_flow() {
    let store = SessionStore::new();
    let (m, w) = chatbot();
    let id = store.create(&m, &w, &p("drink_water"), SearchBounds::default(), 10).unwrap();
    let s = store.get_state(&id).unwrap();
    assert_eq!(s.pending.unwrap().to_explanation().unwrap(), fluid_route());

    let err = store.post_feedback(&id, 0, FeedbackTree::chain(&[false, true, true])).unwrap_err();
    match err {
        SessionError::Malformed(Error::MalformedFeedback { path, .. }) => assert_eq!(path, vec![0, 0]),
        other => panic!("{other:?}"),
    }
    let s = store.post_feedback(&id, 0, FeedbackTree::chain(&[true, false, false])).unwrap();
    assert_eq!(s.round, 1);
    assert_eq!(s.pending.unwrap().to_explanation().unwrap(), thirst_route());
    let s = store.post_feedback(&id, 1, FeedbackTree::chain(&[true, true, true])).unwrap();
    assert_eq!(s.status, Some(Status::JustifiedByExplainee));
}

#[test]
fn concurrent_sessions_do_not_interfere() {
    let store = Arc::new(SessionStore::new());
    let (m, w) = chatbot();
    let expected = transcript_to_json(
        &run_conversation(&m, &w, &p("drink_water"), SearchBounds::default(), ExplaineeDriver::Simulated, 20).unwrap(),
        false,
    );
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (store, m, w) = (store.clone(), m.clone(), w.clone());
            std::thread::spawn(move || transcript_to_json(&drive_session(&store, &m, &w, &p("drink_water")), false))
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), expected);
    }
}
