use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::ast::RiskTarget;
use super::rulebase::Rulebase;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum LintWarning {
    UnusedFactor {
        factor: String,
    },
    /// No active rule names this risk explicitly (wildcards do not count).
    UntargetedRisk {
        risk: String,
    },
    DuplicateExpression {
        expr: String,
        rule_ids: Vec<u32>,
    },
}

impl fmt::Display for LintWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LintWarning::UnusedFactor { factor } => {
                write!(f, "factor `{factor}` is declared but referenced by no rule")
            }
            LintWarning::UntargetedRisk { risk } => {
                write!(f, "risk `{risk}` is not targeted by any rule effect")
            }
            LintWarning::DuplicateExpression { expr, rule_ids } => {
                let ids: Vec<String> = rule_ids.iter().map(u32::to_string).collect();
                write!(f, "rules {} share the expression `{expr}`", ids.join(", "))
            }
        }
    }
}

/// Housekeeping warnings over the active rules of a validated rulebase.
pub fn lint_rulebase(rulebase: &Rulebase) -> Vec<LintWarning> {
    let mut used_factors = BTreeSet::new();
    let mut targeted = BTreeSet::new();
    let mut by_expr: BTreeMap<String, Vec<u32>> = BTreeMap::new();

    for rule in rulebase.active_rules() {
        used_factors.extend(rule.expr.factor_ids());
        for effect in &rule.effects {
            if let RiskTarget::Risk(id) = &effect.target {
                targeted.insert(id.as_str());
            }
        }
        by_expr
            .entry(rule.expr.to_string())
            .or_default()
            .push(rule.id);
    }

    let mut warnings: Vec<LintWarning> = rulebase
        .factors()
        .iter()
        .filter(|f| !used_factors.contains(f.id.as_str()))
        .map(|f| LintWarning::UnusedFactor {
            factor: f.id.clone(),
        })
        .collect();
    warnings.extend(
        rulebase
            .risks()
            .iter()
            .filter(|r| !targeted.contains(r.id.as_str()))
            .map(|r| LintWarning::UntargetedRisk { risk: r.id.clone() }),
    );

    let mut duplicates: Vec<(String, Vec<u32>)> = by_expr
        .into_iter()
        .filter(|(_, ids)| ids.len() > 1)
        .collect();
    duplicates.sort_by_key(|(_, ids)| ids[0]);
    warnings.extend(
        duplicates
            .into_iter()
            .map(|(expr, rule_ids)| LintWarning::DuplicateExpression { expr, rule_ids }),
    );
    warnings
}
