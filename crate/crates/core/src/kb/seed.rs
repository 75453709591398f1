use chrono::Utc;

use super::{KbError, KnowledgeBase};
use crate::dsl::{parse_rulebase, Rulebase};

const SEED: &str = include_str!("../../seed/gsd_risks.rules");

pub const SEED_FACTORS: usize = 23;
pub const SEED_RULES: usize = 36;
pub const SEED_RISKS: usize = 9;

/// Phrasings found in rule text, mapped to canonical risk ids.
pub const RISK_SYNONYMS: &[(&str, &str)] = &[
    ("communication problem", "communication_problems"),
    ("communication problems", "communication_problems"),
    ("lack of trust", "lack_of_trust"),
    ("coordination problem", "coordination_problems"),
    ("coordination problems", "coordination_problems"),
    ("quality problem", "quality_problems"),
    ("quality problems", "quality_problems"),
    ("productivity drop", "productivity_drop"),
    ("productivity downfall", "productivity_drop"),
    ("productivity problems", "productivity_drop"),
    ("risk of project failure", "project_failure_risk"),
    ("risk of project failures", "project_failure_risk"),
    ("project failure risk", "project_failure_risk"),
    ("cost overhead", "cost_overhead"),
    ("travel cost overhead", "travel_cost_overhead"),
    ("ip protection issues", "ip_protection_issues"),
];

/// Canonical risk id for a phrasing, case-insensitive. Canonical ids map to
/// themselves.
pub fn canonical_risk_id(phrase: &str) -> Option<&'static str> {
    let phrase = phrase.trim().to_lowercase();
    RISK_SYNONYMS
        .iter()
        .find(|(from, to)| *from == phrase || *to == phrase)
        .map(|(_, to)| *to)
}

/// Raw text of the built-in seed document.
pub fn seed_document() -> &'static str {
    SEED
}

pub(crate) fn seed_rulebase() -> Result<Rulebase, KbError> {
    let rulebase = parse_rulebase(SEED).map_err(|e| KbError::SeedCorrupt(e.to_string()))?;
    let counts = (
        rulebase.factors().len(),
        rulebase.rules().len(),
        rulebase.risks().len(),
    );
    if counts != (SEED_FACTORS, SEED_RULES, SEED_RISKS) {
        return Err(KbError::SeedCorrupt(format!(
            "expected {SEED_FACTORS} factors, {SEED_RULES} rules and {SEED_RISKS} risks, found {} factors, {} rules and {} risks",
            counts.0, counts.1, counts.2
        )));
    }
    Ok(rulebase)
}

/// Version 1 of the built-in knowledge base.
pub fn load_seeded_kb() -> Result<KnowledgeBase, KbError> {
    Ok(KnowledgeBase::genesis(seed_rulebase()?, Utc::now()))
}
