//! The rule language: expressions, rules and the rulebase document format.

mod ast;
mod lexer;
mod lint;
mod parser;
mod rulebase;

use std::fmt;

use thiserror::Error;

pub use ast::{serialize_rule, Confidence, Polarity, RiskEffect, RiskTarget, Rule, RuleExpr};
pub use lint::{lint_rulebase, LintWarning};
pub use parser::{parse_expr, parse_rule, parse_rule_body};
pub use rulebase::{parse_rulebase, validate_rule, Rulebase};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unknown operator `{operator}`")]
    UnknownOperator {
        line: usize,
        column: usize,
        operator: String,
    },
    #[error("{line}:{column}: rule {rule_id} has no effects")]
    EmptyEffects {
        line: usize,
        column: usize,
        rule_id: u32,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::UnknownOperator { line, .. }
            | ParseError::EmptyEffects { line, .. } => *line,
        }
    }
}

/// A cross-reference or typing problem in a rulebase.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("duplicate {what} id `{id}`")]
    Duplicate { what: &'static str, id: String },
    #[error("rule {rule_id}: reference to undeclared factor `{factor}`")]
    UnknownFactor { rule_id: u32, factor: String },
    #[error("rule {rule_id}: reference to undeclared risk `{risk}`")]
    UnknownRisk { rule_id: u32, risk: String },
    #[error("rule {rule_id}: enum factor `{factor}` used as an atom; compare it with `=`")]
    EnumUsedAsAtom { rule_id: u32, factor: String },
    #[error("rule {rule_id}: ordinal factor `{factor}` compared with `=`")]
    OrdinalCompared { rule_id: u32, factor: String },
    #[error("rule {rule_id}: `{value}` is not a value of enum factor `{factor}`")]
    UnknownEnumValue {
        rule_id: u32,
        factor: String,
        value: String,
    },
    #[error("rule {rule_id}: malformed expression (and/or need two operands)")]
    Malformed { rule_id: u32 },
    #[error("rule {rule_id}: no effects")]
    NoEffects { rule_id: u32 },
    #[error("factor `{factor}`: invalid enum domain: {problem}")]
    BadEnumDomain { factor: String, problem: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RulebaseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: {error}")]
    Invalid { line: usize, error: ValidationError },
}

/// Every problem found in a rulebase document, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct RulebaseErrors(pub Vec<RulebaseError>);

impl fmt::Display for RulebaseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, err) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{err}")?;
        }
        Ok(())
    }
}
