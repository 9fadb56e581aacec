use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::io::Write;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn xconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xconv")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_is_silent_on_success() {
    let o = xconv(&["validate", &fixture("chatbot.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty() && o.stderr.is_empty());
}

#[test]
fn validate_reports_violations() {
    let o = xconv(&["validate", &fixture("jyb_violation.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("justification yields belief"));
}

#[test]
fn strict_loading_rejects_unclosed_relations() {
    let o = xconv(&["validate", "--strict", &fixture("example4.json")]);
    let closed = xconv(&["validate", &fixture("example4.json")]);
    assert_eq!(closed.status.code(), Some(0));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(xconv(&["eval"]).status.code(), Some(2));
    assert_eq!(xconv(&["validate", "/nonexistent/model.json"]).status.code(), Some(2));
    let o = xconv(&["eval", &fixture("example1.json"), "--world", "w", "--formula", "B2 (a"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("offset"));
    let o = xconv(&["eval", &fixture("example1.json"), "--world", "nowhere", "--formula", "a"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(xconv(&["--help"]).status.code(), Some(0));
}

#[test]
fn eval_prints_truth_value() {
    let o = xconv(&["eval", &fixture("example1.json"), "--world", "w", "--formula", "[tA]2 a -> B2 a"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true\n");
    let o = xconv(&["eval", &fixture("example1.json"), "--world", "w", "--formula", "[nothing]2 a"]);
    assert_eq!(stdout(&o), "false\n");
}

#[test]
fn derive_and_feedback() {
    let m = fixture("example1.json");
    let e = fixture("example1_explanation.json");
    let o = xconv(&["derive", &m, "--world", "w", "--explanation", &e]);
    assert_eq!(stdout(&o), "b: dAB . tA\nc: dBC . (dAB . tA)\n");
    let o = xconv(&["feedback", &m, "--world", "w", "--explanation", &e]);
    assert_eq!(stdout(&o), "1/1/1\n");
    let o = xconv(&["feedback", &m, "--world", "w", "--explanation", &e, "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["premises"][0]["premises"][0]["bit"], 1);
}

#[test]
fn enumerate_lists_candidates_and_notes_truncation() {
    let m = fixture("chatbot.json");
    let o = xconv(&["enumerate", &m, "--world", "w0", "--claim", "drink_water"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.contains("sick / thirsty / drink_water\tN={thirsty}\tD=2"));
    assert!(o.stderr.is_empty());

    let o = xconv(&["enumerate", &m, "--world", "w0", "--claim", "drink_water", "--max-nodes", "3"]);
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cut short"));

    let o = Command::new(env!("CARGO_BIN_EXE_xconv"))
        .args(["enumerate", &m, "--world", "w0", "--claim", "drink_water"])
        .env("XCONV_MAX_NODES", "3")
        .output()
        .unwrap();
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = xconv(&["enumerate", &m, "--world", "w0", "--claim", "drink_water", "--hyps", "fever"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn converse_chatbot() {
    let m = fixture("chatbot.json");
    let o = xconv(&["converse", &m, "--world", "w0", "--claim", "drink_water"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("feedback 1/0/0"));
    assert!(out.ends_with("justified by explainee: [r . (s . t)]2 drink_water\n"), "{out}");

    let o = xconv(&["converse", &m, "--world", "w0", "--claim", "drink_water", "--pretty"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "JustifiedByExplainee");
    assert_eq!(v["final_term"], "r . (s . t)");
    assert_eq!(v["rounds"].as_array().unwrap().len(), 2);
    assert!(stdout(&o).lines().count() > 10);

    let compact = xconv(&["converse", &m, "--world", "w0", "--claim", "drink_water", "--json"]);
    assert_eq!(stdout(&compact).lines().count(), 1);
    let again: serde_json::Value = serde_json::from_str(&stdout(&compact)).unwrap();
    assert_eq!(again, v);
}

#[test]
fn converse_respects_round_limit() {
    let m = fixture("chatbot.json");
    let o = xconv(&["converse", &m, "--world", "w0", "--claim", "drink_water", "--max-rounds", "1", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "BoundsReached");
}

fn interactive(input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_xconv"))
        .args(["converse", &fixture("chatbot.json"), "--world", "w0", "--claim", "drink_water", "--interactive", "--json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn interactive_feedback_from_stdin() {
    let o = interactive("1/0/0\n1 1 1\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "JustifiedByExplainee");
}

#[test]
fn interactive_retries_malformed_input() {
    let o = interactive("10\n1x0\n011\n100\n111\n");
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.matches("rejected:").count(), 3, "{err}");
}

#[test]
fn interactive_untruthful_answer_ends_the_conversation() {
    // Claiming to know the fluid-loss route is contradicted by the actual world.
    let o = interactive("111\n");
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "UntruthfulFeedbackDetected");
}

#[test]
fn interactive_end_of_input_is_an_error() {
    let o = interactive("");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no more input"));
}
