//! Rule-based identification of project-specific risks in distributed
//! software development.
//!
//! Influencing factors of a project are assessed on a five-level scale, the
//! rules of a knowledge base are evaluated against them and the most relevant
//! rules are reported together with the risks they raise or mitigate.

pub mod catalog;
pub mod dsl;
pub mod eval;
pub mod kb;
pub mod project;
pub mod scale;

pub use catalog::{FactorCatalog, FactorDef, FactorKind, RiskCatalog, RiskDef, Scope};
pub use dsl::{parse_rule, parse_rulebase, serialize_rule, Rule, RuleExpr, Rulebase};
pub use eval::{
    eval_expr, evaluate_rules, negate, rank_and_filter, Binding, EvalMode, FactorValue, Relevance,
};
pub use scale::ScaleLevel;
