use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Logical expression over influencing factors.
///
/// `And`/`Or` hold an ordered list of at least two children. A chain such as
/// `a & b & c` parses to a single three-child `And`; a parenthesized group
/// stays nested, which is what makes printing and re-parsing an identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleExpr {
    Factor(String),
    EnumIs { factor: String, value: String },
    Not(Box<RuleExpr>),
    And(Vec<RuleExpr>),
    Or(Vec<RuleExpr>),
}

impl RuleExpr {
    pub fn factor(id: impl Into<String>) -> Self {
        RuleExpr::Factor(id.into())
    }

    pub fn enum_is(factor: impl Into<String>, value: impl Into<String>) -> Self {
        RuleExpr::EnumIs {
            factor: factor.into(),
            value: value.into(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: RuleExpr) -> Self {
        RuleExpr::Not(Box::new(child))
    }

    pub fn and(children: impl IntoIterator<Item = RuleExpr>) -> Self {
        RuleExpr::And(children.into_iter().collect())
    }

    pub fn or(children: impl IntoIterator<Item = RuleExpr>) -> Self {
        RuleExpr::Or(children.into_iter().collect())
    }

    /// Distinct factor ids referenced anywhere in the tree.
    pub fn factor_ids(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_factors(&mut out);
        out
    }

    fn collect_factors<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            RuleExpr::Factor(id) => {
                out.insert(id);
            }
            RuleExpr::EnumIs { factor, .. } => {
                out.insert(factor);
            }
            RuleExpr::Not(child) => child.collect_factors(out),
            RuleExpr::And(children) | RuleExpr::Or(children) => {
                for child in children {
                    child.collect_factors(out);
                }
            }
        }
    }

    /// Arity check: `Not` has one child by construction, `And`/`Or` need two.
    pub fn is_well_formed(&self) -> bool {
        match self {
            RuleExpr::Factor(_) | RuleExpr::EnumIs { .. } => true,
            RuleExpr::Not(child) => child.is_well_formed(),
            RuleExpr::And(children) | RuleExpr::Or(children) => {
                children.len() >= 2 && children.iter().all(RuleExpr::is_well_formed)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            RuleExpr::Factor(_) | RuleExpr::EnumIs { .. } => 1,
            RuleExpr::Not(child) => 1 + child.depth(),
            RuleExpr::And(children) | RuleExpr::Or(children) => {
                1 + children.iter().map(RuleExpr::depth).max().unwrap_or(0)
            }
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, parenthesize: bool) -> fmt::Result {
        if parenthesize {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Canonical form: minimal parentheses under `!` > `&` > `|`, single spaces
/// around binary operators.
impl fmt::Display for RuleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleExpr::Factor(id) => f.write_str(id),
            RuleExpr::EnumIs { factor, value } => write!(f, "{factor} = {value}"),
            RuleExpr::Not(child) => {
                f.write_str("!")?;
                let wrap = matches!(**child, RuleExpr::And(_) | RuleExpr::Or(_));
                child.write_child(f, wrap)
            }
            RuleExpr::And(children) => {
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    let wrap = matches!(child, RuleExpr::And(_) | RuleExpr::Or(_));
                    child.write_child(f, wrap)?;
                }
                Ok(())
            }
            RuleExpr::Or(children) => {
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    child.write_child(f, matches!(child, RuleExpr::Or(_)))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Increases,
    Decreases,
}

impl Polarity {
    pub fn sign(self) -> char {
        match self {
            Polarity::Increases => '+',
            Polarity::Decreases => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RiskTarget {
    Risk(String),
    /// Every risk in the catalog (`*`).
    All,
}

impl RiskTarget {
    pub fn as_str(&self) -> &str {
        match self {
            RiskTarget::Risk(id) => id,
            RiskTarget::All => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RiskEffect {
    pub polarity: Polarity,
    pub target: RiskTarget,
}

impl RiskEffect {
    pub fn increases(risk: impl Into<String>) -> Self {
        RiskEffect {
            polarity: Polarity::Increases,
            target: RiskTarget::Risk(risk.into()),
        }
    }

    pub fn decreases(risk: impl Into<String>) -> Self {
        RiskEffect {
            polarity: Polarity::Decreases,
            target: RiskTarget::Risk(risk.into()),
        }
    }

    pub fn decreases_all() -> Self {
        RiskEffect {
            polarity: Polarity::Decreases,
            target: RiskTarget::All,
        }
    }

    /// Whether this effect touches `risk_id`, counting the wildcard.
    pub fn affects(&self, risk_id: &str) -> bool {
        match &self.target {
            RiskTarget::All => true,
            RiskTarget::Risk(id) => id == risk_id,
        }
    }
}

impl fmt::Display for RiskEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.polarity.sign(), self.target.as_str())
    }
}

impl Serialize for RiskEffect {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Evidence gathered from project retrospectives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Confidence {
    pub confirmations: u32,
    pub refutations: u32,
}

impl Confidence {
    pub fn is_empty(&self) -> bool {
        self.confirmations == 0 && self.refutations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: u32,
    pub expr: RuleExpr,
    pub effects: Vec<RiskEffect>,
    pub description: String,
    /// Transcription notes, e.g. operators supplied where the source had none.
    pub provenance: String,
    pub confidence: Confidence,
    /// Retired rules stay in the rulebase but are not evaluated.
    pub retired: bool,
}

impl Rule {
    pub fn new(id: u32, expr: RuleExpr, effects: Vec<RiskEffect>) -> Self {
        Rule {
            id,
            expr,
            effects,
            description: String::new(),
            provenance: String::new(),
            confidence: Confidence::default(),
            retired: false,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn effects_text(&self) -> String {
        self.effects
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// `<id>: <expr> -> <effects>`
    pub fn canonical(&self) -> String {
        format!("{}: {} -> {}", self.id, self.expr, self.effects_text())
    }

    /// Full rulebase document line including attributes.
    pub fn document_line(&self) -> String {
        let mut line = format!("rule {}", self.canonical());
        line.push_str("  desc=");
        push_quoted(&mut line, &self.description);
        if !self.provenance.is_empty() {
            line.push_str(" prov=");
            push_quoted(&mut line, &self.provenance);
        }
        if !self.confidence.is_empty() {
            line.push_str(&format!(
                " conf={}/{}",
                self.confidence.confirmations, self.confidence.refutations
            ));
        }
        if self.retired {
            line.push_str(" status=retired");
        }
        line
    }
}

/// Canonical rule text, as produced by [`Rule::canonical`].
pub fn serialize_rule(rule: &Rule) -> String {
    rule.canonical()
}

pub(crate) fn push_quoted(out: &mut String, text: &str) {
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out.push('"');
}

pub(crate) fn quoted(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    push_quoted(&mut out, text);
    out
}
