//! Reference implementation for tests. Parses with its own Pratt parser and
//! evaluates on plain integers 1..=5, sharing no code with the library's
//! parser or evaluator.

use std::collections::{BTreeMap, BTreeSet};

use riskgrid::{Binding, FactorValue, RuleExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Var(String),
    Is(String, String),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Num(i32),
    Sym(String),
}

pub type Env = BTreeMap<String, Val>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Value(i32),
    Unknown(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    Not,
    And,
    Or,
    Eq,
    Open,
    Close,
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        i += 1;
        match c {
            ' ' | '\t' => {}
            '!' => out.push(Tok::Not),
            '&' => out.push(Tok::And),
            '|' => out.push(Tok::Or),
            '=' => out.push(Tok::Eq),
            '(' => out.push(Tok::Open),
            ')' => out.push(Tok::Close),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i - 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            other => return Err(format!("bad char {other:?}")),
        }
    }
    Ok(out)
}

struct Pratt {
    toks: Vec<Tok>,
    pos: usize,
}

impl Pratt {
    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, String> {
        let mut lhs = match self.next() {
            Some(Tok::Not) => Node::Not(Box::new(self.expr(5)?)),
            Some(Tok::Open) => {
                let inner = self.expr(0)?;
                if self.next() != Some(Tok::Close) {
                    return Err("missing )".into());
                }
                inner
            }
            Some(Tok::Id(name)) => {
                if self.peek() == Some(&Tok::Eq) {
                    self.pos += 1;
                    match self.next() {
                        Some(Tok::Id(v)) => Node::Is(name, v),
                        t => return Err(format!("expected value, got {t:?}")),
                    }
                } else {
                    Node::Var(name)
                }
            }
            t => return Err(format!("unexpected {t:?}")),
        };
        loop {
            let (l, r, and) = match self.peek() {
                Some(Tok::Or) => (1, 2, false),
                Some(Tok::And) => (3, 4, true),
                _ => break,
            };
            if l < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(r)?;
            lhs = if and {
                Node::And(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Or(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }
}

pub fn parse(text: &str) -> Result<Node, String> {
    let mut p = Pratt {
        toks: lex(text)?,
        pos: 0,
    };
    let node = p.expr(0)?;
    if p.pos != p.toks.len() {
        return Err("trailing tokens".into());
    }
    Ok(node)
}

pub fn refs(node: &Node, out: &mut BTreeSet<String>) {
    match node {
        Node::Var(f) | Node::Is(f, _) => {
            out.insert(f.clone());
        }
        Node::Not(c) => refs(c, out),
        Node::And(a, b) | Node::Or(a, b) => {
            refs(a, out);
            refs(b, out);
        }
    }
}

fn value(node: &Node, env: &Env) -> i32 {
    match node {
        Node::Var(f) => match env.get(f) {
            Some(Val::Num(n)) => *n,
            _ => 3,
        },
        Node::Is(f, v) => match env.get(f) {
            Some(Val::Sym(s)) if s == v => 5,
            _ => 1,
        },
        Node::Not(c) => 6 - value(c, env),
        Node::And(a, b) => value(a, env).min(value(b, env)),
        Node::Or(a, b) => value(a, env).max(value(b, env)),
    }
}

/// `nominal` selects assume-nominal; otherwise any unbound reference makes
/// the outcome unknown.
pub fn eval(node: &Node, env: &Env, nominal: bool) -> Outcome {
    let mut used = BTreeSet::new();
    refs(node, &mut used);
    let missing: BTreeSet<String> = used.into_iter().filter(|f| !env.contains_key(f)).collect();
    if !nominal && !missing.is_empty() {
        return Outcome::Unknown(missing);
    }
    Outcome::Value(value(node, env))
}

/// Rules a reviewer would be shown: known values at or above `threshold`,
/// highest first, ties by id.
pub fn presented(
    rules: &[(u32, Node)],
    env: &Env,
    threshold: i32,
    nominal: bool,
) -> Vec<(u32, i32)> {
    let mut shown: Vec<(u32, i32)> = rules
        .iter()
        .filter_map(|(id, node)| match eval(node, env, nominal) {
            Outcome::Value(v) if v >= threshold => Some((*id, v)),
            _ => None,
        })
        .collect();
    shown.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    shown
}

/// Associativity-insensitive structural form.
pub fn shape(node: &Node) -> String {
    fn chain<'a>(node: &'a Node, and: bool, out: &mut Vec<&'a Node>) {
        match (node, and) {
            (Node::And(a, b), true) | (Node::Or(a, b), false) => {
                chain(a, and, out);
                chain(b, and, out);
            }
            _ => out.push(node),
        }
    }
    match node {
        Node::Var(f) => f.clone(),
        Node::Is(f, v) => format!("{f}={v}"),
        Node::Not(c) => format!("(! {})", shape(c)),
        Node::And(..) | Node::Or(..) => {
            let and = matches!(node, Node::And(..));
            let mut parts = Vec::new();
            chain(node, and, &mut parts);
            let inner: Vec<String> = parts.into_iter().map(shape).collect();
            format!("({} {})", if and { "&" } else { "|" }, inner.join(" "))
        }
    }
}

/// Same form as [`shape`] for a library expression.
pub fn shape_of(expr: &RuleExpr) -> String {
    fn chain<'a>(expr: &'a RuleExpr, and: bool, out: &mut Vec<&'a RuleExpr>) {
        match (expr, and) {
            (RuleExpr::And(cs), true) | (RuleExpr::Or(cs), false) => {
                cs.iter().for_each(|c| chain(c, and, out))
            }
            _ => out.push(expr),
        }
    }
    match expr {
        RuleExpr::Factor(f) => f.clone(),
        RuleExpr::EnumIs { factor, value } => format!("{factor}={value}"),
        RuleExpr::Not(c) => format!("(! {})", shape_of(c)),
        RuleExpr::And(_) | RuleExpr::Or(_) => {
            let and = matches!(expr, RuleExpr::And(_));
            let mut parts = Vec::new();
            chain(expr, and, &mut parts);
            let inner: Vec<String> = parts.into_iter().map(shape_of).collect();
            format!("({} {})", if and { "&" } else { "|" }, inner.join(" "))
        }
    }
}

/// Converts a library expression by printing it fully parenthesised and
/// reparsing with the oracle, so no tree is shared.
pub fn from_expr(expr: &RuleExpr) -> Node {
    fn text(expr: &RuleExpr) -> String {
        match expr {
            RuleExpr::Factor(f) => f.clone(),
            RuleExpr::EnumIs { factor, value } => format!("{factor} = {value}"),
            RuleExpr::Not(c) => format!("!({})", text(c)),
            RuleExpr::And(cs) => cs
                .iter()
                .map(|c| format!("({})", text(c)))
                .collect::<Vec<_>>()
                .join(" & "),
            RuleExpr::Or(cs) => cs
                .iter()
                .map(|c| format!("({})", text(c)))
                .collect::<Vec<_>>()
                .join(" | "),
        }
    }
    parse(&text(expr)).expect("oracle parses its own output")
}

pub fn env_of(binding: &Binding) -> Env {
    binding
        .iter()
        .map(|(k, v)| {
            let v = match v {
                FactorValue::Level(l) => Val::Num(l.numeric() as i32),
                FactorValue::Enum(s) => Val::Sym(s.clone()),
            };
            (k.to_string(), v)
        })
        .collect()
}
