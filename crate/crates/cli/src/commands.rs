use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use xconv_core::conversation::FeedbackChannel;
use xconv_core::document::{parse_prop_list, transcript_to_json, FeedbackDoc};
use xconv_core::selection::uncertainty_set;
use xconv_core::*;

/// Exit code for a well-formed request whose answer is negative.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit code for bad arguments, unreadable files and syntax errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "xconv", version, about = "Explain a claim to an agent, one feedback round at a time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model document (JSON).
    model: PathBuf,
    /// Reject relations that are not already reflexive and transitive.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug, Clone, Copy)]
struct BoundArgs {
    /// Maximal explanation height.
    #[arg(long, default_value_t = SearchBounds::default().max_depth)]
    max_depth: usize,
    /// Maximal number of nodes per explanation.
    #[arg(long, env = "XCONV_MAX_NODES", default_value_t = SearchBounds::default().max_nodes)]
    max_nodes: usize,
}

impl BoundArgs {
    fn bounds(self) -> Result<SearchBounds, Failure> {
        SearchBounds::new(self.max_depth, self.max_nodes).map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model document; prints nothing when it is well-formed.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Evaluate a formula at a world.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        world: String,
        #[arg(long)]
        formula: String,
    },
    /// Print the explainee's derived term for every derived node.
    Derive {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        world: String,
        #[arg(long)]
        explanation: PathBuf,
    },
    /// Print the explainee's truthful feedback on an explanation.
    Feedback {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        world: String,
        #[arg(long)]
        explanation: PathBuf,
        /// Print the feedback tree as JSON.
        #[arg(long)]
        json: bool,
    },
    /// List the explanations the explainer could give for a claim.
    Enumerate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        world: String,
        #[arg(long)]
        claim: String,
        /// Require exactly these hypotheses (comma-separated formulas).
        #[arg(long)]
        hyps: Option<String>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Run a conversation about a claim.
    Converse {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        world: String,
        #[arg(long)]
        claim: String,
        /// Defaults to a limit no truthful conversation needs to reach.
        #[arg(long)]
        max_rounds: Option<usize>,
        /// Answer as the explainee on standard input.
        #[arg(long)]
        interactive: bool,
        /// Print the transcript as compact JSON.
        #[arg(long, conflicts_with = "pretty")]
        json: bool,
        /// Print the transcript as indented JSON.
        #[arg(long)]
        pretty: bool,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Serve interactive sessions over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Model used by sessions that do not bring their own.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
        /// Origin allowed to call the API from a browser.
        #[arg(long)]
        cors_origin: Option<String>,
        /// Write every session's transcript to this directory.
        #[arg(long)]
        persist_dir: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
}

/// A failed command and its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Document(_) | Error::UnknownWorld(_) | Error::UnknownAtom(_) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        let message = match &e {
            Error::InvalidModel(vs) => vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load(args: &ModelArgs) -> Result<Model, Failure> {
    let closure = if args.strict { Closure::Strict } else { Closure::Close };
    load_model(&read(&args.model)?, closure).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", args.model.display(), f.message);
        f
    })
}

fn world(m: &Model, name: &str) -> Result<WorldId, Failure> {
    let w = WorldId::new(name);
    if m.contains_world(&w) {
        Ok(w)
    } else {
        Err(Error::UnknownWorld(w).into())
    }
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let stdin = std::io::stdin();
    match execute(cli.command, &mut stdout.lock(), &mut stdin.lock()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, input: &mut dyn BufRead) -> Result<i32, Failure> {
    let io = |e: std::io::Error| Failure {
        code: EXIT_DOMAIN,
        message: e.to_string(),
    };
    match command {
        Command::Validate { model } => {
            load(&model)?;
            Ok(0)
        }
        Command::Eval { model, world: w, formula } => {
            let m = load(&model)?;
            let w = world(&m, &w)?;
            let f = parse_formula(&formula)?;
            writeln!(out, "{}", eval(&m, &w, &f)?).map_err(io)?;
            Ok(0)
        }
        Command::Derive { model, world: w, explanation } => {
            let m = load(&model)?;
            let w = world(&m, &w)?;
            let e = load_explanation(&read(&explanation)?)?;
            for f in e.derived() {
                writeln!(out, "{f}: {}", derive_term(&m, &w, &e, &f)?).map_err(io)?;
            }
            Ok(0)
        }
        Command::Feedback { model, world: w, explanation, json } => {
            let m = load(&model)?;
            let w = world(&m, &w)?;
            let e = load_explanation(&read(&explanation)?)?;
            let fb = compute_feedback(&m, &w, &e)?;
            if json {
                let doc = FeedbackDoc::from_tree(fb.bits());
                writeln!(out, "{}", serde_json::to_string(&doc).expect("serializable")).map_err(io)?;
            } else {
                writeln!(out, "{fb}").map_err(io)?;
            }
            Ok(0)
        }
        Command::Enumerate { model, world: w, claim, hyps, bounds } => {
            let m = load(&model)?;
            let w = world(&m, &w)?;
            let claim = parse_prop(&claim)?;
            let hyps: BTreeSet<_> = parse_prop_list(hyps.as_deref().unwrap_or(""))?.into_iter().collect();
            let found = enumerate_available(&m, &w, &hyps, &claim, bounds.bounds()?);
            for e in &found.explanations {
                let n: Vec<String> = uncertainty_set(&m, &w, e).iter().map(ToString::to_string).collect();
                writeln!(out, "{e}\tN={{{}}}\tD={}", n.join(", "), e.derived().len()).map_err(io)?;
            }
            if !found.complete {
                eprintln!("note: search was cut short by --max-depth/--max-nodes");
            }
            Ok(if found.explanations.is_empty() { EXIT_DOMAIN } else { 0 })
        }
        Command::Converse {
            model,
            world: w,
            claim,
            max_rounds,
            interactive,
            json,
            pretty,
            bounds,
        } => {
            let m = load(&model)?;
            let w = world(&m, &w)?;
            let claim = parse_prop(&claim)?;
            let bounds = bounds.bounds()?;
            let limit = max_rounds.unwrap_or_else(|| default_round_limit(&m, &w, &claim, bounds));
            let t = if interactive {
                let mut ch = Prompt { input, out: std::io::stderr() };
                run_conversation(&m, &w, &claim, bounds, ExplaineeDriver::External(&mut ch), limit)?
            } else {
                run_conversation(&m, &w, &claim, bounds, ExplaineeDriver::Simulated, limit)?
            };
            if json || pretty {
                writeln!(out, "{}", transcript_to_json(&t, pretty)).map_err(io)?;
            } else {
                write_summary(out, &t).map_err(io)?;
            }
            Ok(if t.status == Status::JustifiedByExplainee { 0 } else { EXIT_DOMAIN })
        }
        Command::Serve {
            port,
            host,
            model,
            strict,
            cors_origin,
            persist_dir,
            bounds,
        } => {
            let default_model = match model {
                Some(path) => Some(load(&ModelArgs { model: path, strict })?),
                None => None,
            };
            let config = crate::server::Config {
                default_model,
                bounds: bounds.bounds()?,
                cors_origin,
                persist_dir,
            };
            crate::server::serve(&host, port, config).map_err(|e| Failure {
                code: EXIT_DOMAIN,
                message: e.to_string(),
            })?;
            Ok(0)
        }
    }
}

fn write_summary(out: &mut dyn Write, t: &Transcript) -> std::io::Result<()> {
    writeln!(out, "? {}", t.history.question)?;
    for (i, r) in t.history.rounds.iter().enumerate() {
        writeln!(out, "{}. {}", i + 1, r.explanation)?;
        writeln!(out, "   feedback {}", r.feedback)?;
    }
    match &t.final_term {
        Some(term) => writeln!(out, "{}: [{term}]2 {}", t.status, t.history.question),
        None => writeln!(out, "{}", t.status),
    }
}

/// Asks the person at the terminal for feedback. Bits are read in the order
/// the nodes are listed, children before parents.
struct Prompt<'a> {
    input: &'a mut dyn BufRead,
    out: std::io::Stderr,
}

impl FeedbackChannel for Prompt<'_> {
    fn request(&mut self, round: usize, e: &Explanation, retry: Option<&Error>) -> xconv_core::Result<FeedbackTree> {
        let nodes = e.post_order();
        let mut out = self.out.lock();
        let _ = match retry {
            Some(why) => writeln!(out, "rejected: {why}"),
            None => writeln!(out, "round {}: {e}", round + 1),
        };
        for (i, n) in nodes.iter().enumerate() {
            let kind = if n.is_hypothesis() { "hypothesis" } else { "derived" };
            let _ = writeln!(out, "  {}. {} ({kind})", i + 1, n.claim);
        }
        loop {
            let _ = write!(out, "bits for nodes 1-{} (e.g. {}): ", nodes.len(), "1".repeat(nodes.len()));
            let _ = out.flush();
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Ok(0) => return Err(Error::Driver("no more input".into())),
                Err(err) => return Err(Error::Driver(err.to_string())),
                Ok(_) => {}
            }
            match parse_bits(&line, nodes.len()) {
                Ok(bits) => return Ok(assemble(e, &mut bits.into_iter())),
                Err(why) => {
                    let _ = writeln!(out, "rejected: {why}");
                }
            }
        }
    }
}

/// Reads one bit per node; `/`, `,` and whitespace are ignored.
fn parse_bits(line: &str, expected: usize) -> Result<Vec<bool>, String> {
    let bits = line
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '/' && *c != ',')
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(format!("unexpected character `{other}`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if bits.len() != expected {
        return Err(format!("expected {expected} bits, got {}", bits.len()));
    }
    Ok(bits)
}

/// Builds the bit tree from bits listed in post-order.
fn assemble(e: &Explanation, bits: &mut impl Iterator<Item = bool>) -> FeedbackTree {
    let premises = e.premises.iter().map(|p| assemble(p, bits)).collect();
    FeedbackTree::new(bits.next().unwrap_or(false), premises)
}
