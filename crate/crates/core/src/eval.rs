//! Rule relevance under five-level min/max semantics.
//!
//! A bare factor evaluates to its assessed level, `!` reflects the scale,
//! `&` takes the minimum and `|` the maximum. Enum predicates are crisp:
//! `very_high` when the bound value matches, `very_low` otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dsl::{RiskEffect, RuleExpr, Rulebase};
use crate::scale::ScaleLevel;

/// Assessed value of one factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorValue {
    Level(ScaleLevel),
    Enum(String),
}

impl fmt::Display for FactorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorValue::Level(level) => level.fmt(f),
            FactorValue::Enum(value) => f.write_str(value),
        }
    }
}

impl From<ScaleLevel> for FactorValue {
    fn from(level: ScaleLevel) -> Self {
        FactorValue::Level(level)
    }
}

impl FactorValue {
    /// Level names read as levels; anything else is an enum value. Enum
    /// domains may not contain level names, so this is unambiguous.
    pub fn parse(text: &str) -> Self {
        match text.parse::<ScaleLevel>() {
            Ok(level) => FactorValue::Level(level),
            Err(_) => FactorValue::Enum(text.to_string()),
        }
    }
}

impl Serialize for FactorValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FactorValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Ok(FactorValue::parse(&text))
    }
}

/// Factor id → assessed value. Missing entries mean "not assessed".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Binding(BTreeMap<String, FactorValue>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, factor: impl Into<String>, value: impl Into<FactorValue>) -> Self {
        self.insert(factor, value);
        self
    }

    pub fn insert(
        &mut self,
        factor: impl Into<String>,
        value: impl Into<FactorValue>,
    ) -> Option<FactorValue> {
        self.0.insert(factor.into(), value.into())
    }

    pub fn get(&self, factor: &str) -> Option<&FactorValue> {
        self.0.get(factor)
    }

    pub fn contains(&self, factor: &str) -> bool {
        self.0.contains_key(factor)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FactorValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Entries from `other` win on conflict.
    pub fn merge(&mut self, other: &Binding) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }
}

impl FromIterator<(String, FactorValue)> for Binding {
    fn from_iter<T: IntoIterator<Item = (String, FactorValue)>>(iter: T) -> Self {
        Binding(iter.into_iter().collect())
    }
}

/// How unassessed factors are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Any unbound reference makes the rule indeterminate.
    #[default]
    Strict,
    /// Unbound ordinal factors read as `medium`, unbound enum predicates as
    /// `very_low`.
    AssumeNominal,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Strict => "strict",
            EvalMode::AssumeNominal => "assume_nominal",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(EvalMode::Strict),
            "assume_nominal" | "assume-nominal" => Ok(EvalMode::AssumeNominal),
            other => Err(format!(
                "unknown mode `{other}` (expected strict or assume_nominal)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    Level(ScaleLevel),
    /// The unbound factors that blocked evaluation.
    Indeterminate(BTreeSet<String>),
}

impl Relevance {
    pub fn level(&self) -> Option<ScaleLevel> {
        match self {
            Relevance::Level(level) => Some(*level),
            Relevance::Indeterminate(_) => None,
        }
    }

    pub fn meets(&self, threshold: ScaleLevel) -> bool {
        self.level().is_some_and(|level| level >= threshold)
    }
}

impl fmt::Display for Relevance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relevance::Level(level) => level.fmt(f),
            Relevance::Indeterminate(_) => f.write_str("indeterminate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("enum factor `{factor}` used as an ordinal atom")]
    EnumAsOrdinal { factor: String },
    #[error("ordinal factor `{factor}` compared with `=`")]
    OrdinalCompared { factor: String },
    #[error("rule {rule_id}: {source}")]
    InRule {
        rule_id: u32,
        #[source]
        source: Box<EvalError>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleRelevance {
    pub rule_id: u32,
    pub relevance: Relevance,
    pub effects: Vec<RiskEffect>,
}

pub fn negate(level: ScaleLevel) -> ScaleLevel {
    level.negate()
}

/// Evaluates an expression. In strict mode every unbound factor in the tree
/// is collected, not just the first one met.
pub fn eval_expr(
    expr: &RuleExpr,
    binding: &Binding,
    mode: EvalMode,
) -> Result<Relevance, EvalError> {
    let mut missing = BTreeSet::new();
    let level = walk(expr, binding, &mut missing)?;
    if mode == EvalMode::Strict && !missing.is_empty() {
        return Ok(Relevance::Indeterminate(missing));
    }
    Ok(Relevance::Level(level))
}

// Unbound references evaluate to their assume-nominal value and are recorded
// in `missing`; the caller decides what that means.
fn walk(
    expr: &RuleExpr,
    binding: &Binding,
    missing: &mut BTreeSet<String>,
) -> Result<ScaleLevel, EvalError> {
    Ok(match expr {
        RuleExpr::Factor(id) => match binding.get(id) {
            Some(FactorValue::Level(level)) => *level,
            Some(FactorValue::Enum(_)) => {
                return Err(EvalError::EnumAsOrdinal { factor: id.clone() })
            }
            None => {
                missing.insert(id.clone());
                ScaleLevel::Medium
            }
        },
        RuleExpr::EnumIs { factor, value } => match binding.get(factor) {
            Some(FactorValue::Enum(bound)) if bound == value => ScaleLevel::VeryHigh,
            Some(FactorValue::Enum(_)) => ScaleLevel::VeryLow,
            Some(FactorValue::Level(_)) => {
                return Err(EvalError::OrdinalCompared {
                    factor: factor.clone(),
                })
            }
            None => {
                missing.insert(factor.clone());
                ScaleLevel::VeryLow
            }
        },
        RuleExpr::Not(child) => walk(child, binding, missing)?.negate(),
        RuleExpr::And(children) => {
            fold(children, binding, missing, ScaleLevel::VeryHigh, Ord::min)?
        }
        RuleExpr::Or(children) => fold(children, binding, missing, ScaleLevel::VeryLow, Ord::max)?,
    })
}

fn fold(
    children: &[RuleExpr],
    binding: &Binding,
    missing: &mut BTreeSet<String>,
    identity: ScaleLevel,
    combine: fn(ScaleLevel, ScaleLevel) -> ScaleLevel,
) -> Result<ScaleLevel, EvalError> {
    let mut acc = identity;
    for child in children {
        acc = combine(acc, walk(child, binding, missing)?);
    }
    Ok(acc)
}

/// One entry per active rule, ordered by rule id.
pub fn evaluate_rules(
    rulebase: &Rulebase,
    binding: &Binding,
    mode: EvalMode,
) -> Result<Vec<RuleRelevance>, EvalError> {
    let mut rules: Vec<_> = rulebase.active_rules().collect();
    rules.sort_by_key(|r| r.id);
    rules
        .into_iter()
        .map(|rule| {
            let relevance =
                eval_expr(&rule.expr, binding, mode).map_err(|e| EvalError::InRule {
                    rule_id: rule.id,
                    source: Box::new(e),
                })?;
            Ok(RuleRelevance {
                rule_id: rule.id,
                relevance,
                effects: rule.effects.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Ranking {
    /// Determinate entries at or above the threshold, most relevant first,
    /// ties by ascending rule id.
    pub ranked: Vec<RuleRelevance>,
    /// Indeterminate entries in rule-id order.
    pub indeterminate: Vec<RuleRelevance>,
}

pub fn rank_and_filter(relevances: &[RuleRelevance], threshold: ScaleLevel) -> Ranking {
    let mut ranked: Vec<RuleRelevance> = relevances
        .iter()
        .filter(|r| r.relevance.meets(threshold))
        .cloned()
        .collect();
    ranked.sort_by(|a, b| {
        b.relevance
            .level()
            .cmp(&a.relevance.level())
            .then(a.rule_id.cmp(&b.rule_id))
    });
    let mut indeterminate: Vec<RuleRelevance> = relevances
        .iter()
        .filter(|r| r.relevance.level().is_none())
        .cloned()
        .collect();
    indeterminate.sort_by_key(|r| r.rule_id);
    Ranking {
        ranked,
        indeterminate,
    }
}
