//! Plain-ASCII concrete syntax for formulas and terms.
//!
//! Formulas: atoms `[a-z][a-zA-Z0-9_]*`, `false`, right-associative `->`,
//! `B1 φ` / `B2 φ` for belief, `[t]1 p` / `[t]2 p` for explicit justification,
//! `T1 p` / `T2 p` for "can justify", and parentheses. Prefix operators bind
//! tighter than `->`.
//!
//! Terms: identifiers are constants, `x{goal}` and `x{goal | p1, p2}` are
//! variables, `.` is left-associative application.
//!
//! Printing produces text that parses back to the same value. Dynamic
//! operators have no inline syntax; they print in a bracketed human form only.

use std::fmt;

use crate::error::{Error, Result};
use crate::explanation::{Explanation, FeedbackRecord, FeedbackTree};
use crate::syntax::{Agent, Formula, PropFormula, Term};

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropFormula::Atom(a) => f.write_str(a),
            PropFormula::Falsum => f.write_str("false"),
            PropFormula::Implies(a, b) => {
                if matches!(**a, PropFormula::Implies(..)) {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var { goal, premises } if premises.is_empty() => write!(f, "x{{{goal}}}"),
            Term::Var { goal, premises } => {
                write!(f, "x{{{goal} |")?;
                for (i, p) in premises.iter().enumerate() {
                    write!(f, "{}{p}", if i == 0 { " " } else { ", " })?;
                }
                f.write_str("}")
            }
            Term::App(fun, arg) => {
                if matches!(**arg, Term::App(..)) {
                    write!(f, "{fun} . ({arg})")
                } else {
                    write!(f, "{fun} . {arg}")
                }
            }
        }
    }
}

fn is_implication(f: &Formula) -> bool {
    matches!(f, Formula::Implies(..) | Formula::Prop(PropFormula::Implies(..)))
}

struct Operand<'a>(&'a Formula);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_implication(self.0) {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

struct PropOperand<'a>(&'a PropFormula);

impl fmt::Display for PropOperand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if matches!(self.0, PropFormula::Implies(..)) {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Box(i, body) => write!(f, "B{i} {}", Operand(body)),
            Formula::Just(t, i, body) => write!(f, "[{t}]{i} {}", PropOperand(body)),
            Formula::Triangle(i, body) => write!(f, "T{i} {}", PropOperand(body)),
            Formula::DynExp(i, e, body) => write!(f, "[{i}: {e}] {}", Operand(body)),
            Formula::DynFb(i, fb, body) => write!(f, "[{i}: F({})] {}", fb.explanation(), Operand(body)),
            Formula::Implies(a, b) => write!(f, "{} -> {b}", Operand(a)),
        }
    }
}

/// Human rendering: `a / b / c` for chains, `(a / b), d / c` for branching.
impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn node(e: &Explanation, f: &mut fmt::Formatter<'_>, bracket: bool) -> fmt::Result {
            let label = PropOperand(&e.claim);
            if e.is_hypothesis() {
                return write!(f, "{label}");
            }
            if bracket {
                f.write_str("(")?;
            }
            let many = e.premises.len() > 1;
            for (i, p) in e.premises.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                node(p, f, many)?;
            }
            write!(f, " / {label}")?;
            if bracket {
                f.write_str(")")?;
            }
            Ok(())
        }
        node(self, f, false)
    }
}

impl fmt::Display for FeedbackTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn node(b: &FeedbackTree, f: &mut fmt::Formatter<'_>, bracket: bool) -> fmt::Result {
            let bit = u8::from(b.bit);
            if b.premises.is_empty() {
                return write!(f, "{bit}");
            }
            if bracket {
                f.write_str("(")?;
            }
            let many = b.premises.len() > 1;
            for (i, p) in b.premises.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                node(p, f, many)?;
            }
            write!(f, "/{bit}")?;
            if bracket {
                f.write_str(")")?;
            }
            Ok(())
        }
        node(self, f, false)
    }
}

impl fmt::Display for FeedbackRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

/// Parses a formula of the inline grammar.
pub fn parse_formula(src: &str) -> Result<Formula> {
    let mut p = Parser::new(src);
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Parses a formula and requires it to be propositional.
pub fn parse_prop(src: &str) -> Result<PropFormula> {
    let mut p = Parser::new(src);
    let f = p.prop()?;
    p.finish()?;
    Ok(f)
}

/// Parses a justification term.
pub fn parse_term(src: &str) -> Result<Term> {
    let mut p = Parser::new(src);
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset,
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            let found = self.rest().chars().next().map_or("end of input".to_string(), |c| format!("`{c}`"));
            self.err(self.pos, format!("expected `{token}`, found {found}"))
        }
    }

    fn finish(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => self.err(self.pos, format!("unexpected `{c}`")),
        }
    }

    fn ident(&mut self) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += len;
        &rest[..len]
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.unary()?;
        if self.eat("->") {
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn agent(&mut self) -> Result<Agent> {
        let at = self.pos;
        let digit = self.rest().chars().next();
        match digit.and_then(|c| c.to_digit(10)).and_then(|d| Agent::from_number(d as u8)) {
            Some(a) => {
                self.pos += 1;
                Ok(a)
            }
            None => self.err(at, "expected agent index 1 or 2"),
        }
    }

    fn prop_operand(&mut self, what: &str) -> Result<PropFormula> {
        self.skip_ws();
        let at = self.pos;
        match self.unary()? {
            Formula::Prop(p) => Ok(p),
            _ => self.err(at, format!("{what} body must be propositional")),
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        let Some(c) = self.peek() else {
            return self.err(self.pos, "unexpected end of input");
        };
        let at = self.pos;
        match c {
            '(' => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(")")?;
                Ok(f)
            }
            '[' => {
                self.pos += 1;
                let t = self.term()?;
                self.expect("]")?;
                let agent = self.agent()?;
                let body = self.prop_operand("justification")?;
                Ok(Formula::Just(t, agent, body))
            }
            'B' | 'T' => {
                self.pos += 1;
                let agent = self.agent()?;
                if self.rest().starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
                    return self.err(at, "operator must be followed by whitespace or `(`");
                }
                if c == 'B' {
                    Ok(Formula::boxed(agent, self.unary()?))
                } else {
                    Ok(Formula::Triangle(agent, self.prop_operand("T")?))
                }
            }
            c if c.is_ascii_lowercase() => {
                let name = self.ident();
                if name == "false" {
                    Ok(Formula::falsum())
                } else {
                    Ok(Formula::atom(name))
                }
            }
            c => self.err(at, format!("unexpected `{c}`")),
        }
    }

    fn prop(&mut self) -> Result<PropFormula> {
        self.skip_ws();
        let at = self.pos;
        match self.formula()? {
            Formula::Prop(p) => Ok(p),
            _ => self.err(at, "expected a propositional formula"),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let mut t = self.term_primary()?;
        while self.eat(".") {
            let arg = self.term_primary()?;
            t = Term::app(t, arg);
        }
        Ok(t)
    }

    fn term_primary(&mut self) -> Result<Term> {
        let Some(c) = self.peek() else {
            return self.err(self.pos, "expected a term");
        };
        let at = self.pos;
        if c == '(' {
            self.pos += 1;
            let t = self.term()?;
            self.expect(")")?;
            return Ok(t);
        }
        if self.rest().starts_with("x{") {
            self.pos += 2;
            let goal = self.prop()?;
            let mut premises = Vec::new();
            if self.eat("|") {
                premises.push(self.prop()?);
                while self.eat(",") {
                    premises.push(self.prop()?);
                }
            }
            self.expect("}")?;
            return Ok(Term::var(goal, premises));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            return Ok(Term::constant(self.ident()));
        }
        self.err(at, format!("unexpected `{c}` in term"))
    }
}
