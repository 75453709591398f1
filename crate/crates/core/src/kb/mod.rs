//! Versioned knowledge base with an append-only changelog.
//!
//! Every committed change bumps the version by one and appends an
//! [`UpdateEvent`]. Folding the changelog over the base rulebase reproduces
//! the current state; [`KnowledgeBase::replay`] does exactly that and is the
//! same transition function used when committing.

mod seed;
mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{FactorDef, FactorKind};
use crate::dsl::{
    parse_rule, parse_rule_body, validate_rule, ParseError, Rule, Rulebase, ValidationError,
};
use crate::scale::ScaleLevel;

pub use seed::{
    canonical_risk_id, load_seeded_kb, seed_document, RISK_SYNONYMS, SEED_FACTORS, SEED_RISKS,
    SEED_RULES,
};
pub use store::KbStore;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("unknown rule {0}")]
    UnknownRule(u32),
    #[error("rule {0} is retired")]
    RetiredRule(u32),
    #[error("rule id {requested} does not match the expected id {expected}")]
    IdMismatch { requested: u32, expected: u32 },
    #[error("factor `{0}` is already declared")]
    DuplicateFactor(String),
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("knowledge base is corrupt: {0}")]
    Corrupt(String),
    #[error("{0} is a plain rulebase file and cannot be updated")]
    ReadOnly(String),
    #[error("seed knowledge base is corrupt: {0}")]
    SeedCorrupt(String),
    #[error("changelog does not replay at version {version}: {message}")]
    Replay { version: u64, message: String },
    #[error("knowledge base is at version {actual}, update expected version {expected}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Confirmed,
    Refuted,
}

/// A change as requested by a user, before it is checked and committed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangeRequest {
    Confirm {
        rule_id: u32,
    },
    Refute {
        rule_id: u32,
    },
    /// `rule` is `[<id>:] <expr> -> <effects>`.
    Modify {
        rule_id: u32,
        rule: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
    },
    AddRule {
        rule: String,
        #[serde(default)]
        description: String,
        #[serde(default)]
        provenance: String,
    },
    RetireRule {
        rule_id: u32,
    },
    AddFactor {
        factor: FactorDef,
    },
}

/// A committed change, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Change {
    /// Genesis event; `digest` is the SHA-256 of the base document.
    Seed {
        digest: String,
        factors: usize,
        risks: usize,
        rules: usize,
    },
    Confirm {
        rule_id: u32,
    },
    Refute {
        rule_id: u32,
    },
    Modify {
        rule_id: u32,
        old: String,
        new: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        description: Option<String>,
    },
    AddRule {
        rule_id: u32,
        rule: String,
        description: String,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        provenance: String,
    },
    RetireRule {
        rule_id: u32,
    },
    AddFactor {
        factor: FactorDef,
    },
}

impl Change {
    pub fn kind(&self) -> &'static str {
        match self {
            Change::Seed { .. } => "seed",
            Change::Confirm { .. } => "confirm",
            Change::Refute { .. } => "refute",
            Change::Modify { .. } => "modify",
            Change::AddRule { .. } => "add_rule",
            Change::RetireRule { .. } => "retire_rule",
            Change::AddFactor { .. } => "add_factor",
        }
    }

    pub fn target(&self) -> String {
        match self {
            Change::Seed { .. } => "kb".to_string(),
            Change::Confirm { rule_id }
            | Change::Refute { rule_id }
            | Change::Modify { rule_id, .. }
            | Change::AddRule { rule_id, .. }
            | Change::RetireRule { rule_id } => format!("rule {rule_id}"),
            Change::AddFactor { factor } => format!("factor {}", factor.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateEvent {
    /// Version this event produced.
    pub version: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub change: Change,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Immutable knowledge-base value. Updates return a new value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    version: u64,
    rulebase: Rulebase,
    changelog: Vec<UpdateEvent>,
}

pub fn document_digest(rulebase: &Rulebase) -> String {
    Sha256::digest(rulebase.to_document().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl KnowledgeBase {
    /// Version 1 over `base`, with a single seed event.
    pub fn genesis(base: Rulebase, at: DateTime<Utc>) -> Self {
        let seed = UpdateEvent {
            version: 1,
            timestamp: at,
            change: Change::Seed {
                digest: document_digest(&base),
                factors: base.factors().len(),
                risks: base.risks().len(),
                rules: base.rules().len(),
            },
            note: String::new(),
        };
        KnowledgeBase {
            version: 1,
            rulebase: base,
            changelog: vec![seed],
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn rulebase(&self) -> &Rulebase {
        &self.rulebase
    }

    pub fn changelog(&self) -> &[UpdateEvent] {
        &self.changelog
    }

    /// Folds `events` over `base`. The first event must be the seed event
    /// for exactly this base document.
    pub fn replay(base: Rulebase, events: &[UpdateEvent]) -> Result<Self, KbError> {
        let Some((first, rest)) = events.split_first() else {
            return Err(KbError::Replay {
                version: 0,
                message: "changelog is empty".into(),
            });
        };
        let Change::Seed { digest, .. } = &first.change else {
            return Err(KbError::Replay {
                version: first.version,
                message: "first event is not a seed event".into(),
            });
        };
        if first.version != 1 {
            return Err(KbError::Replay {
                version: first.version,
                message: "seed event must produce version 1".into(),
            });
        }
        if *digest != document_digest(&base) {
            return Err(KbError::Replay {
                version: 1,
                message: "base document does not match the seed digest".into(),
            });
        }
        let mut kb = KnowledgeBase {
            version: 1,
            rulebase: base,
            changelog: vec![first.clone()],
        };
        for event in rest {
            if event.version != kb.version + 1 {
                return Err(KbError::Replay {
                    version: event.version,
                    message: format!("expected version {}", kb.version + 1),
                });
            }
            if matches!(event.change, Change::Seed { .. }) {
                return Err(KbError::Replay {
                    version: event.version,
                    message: "seed event after genesis".into(),
                });
            }
            apply_recorded(&mut kb.rulebase, &event.change).map_err(|e| KbError::Replay {
                version: event.version,
                message: e.to_string(),
            })?;
            kb.version = event.version;
            kb.changelog.push(event.clone());
        }
        Ok(kb)
    }

    /// Checks `request` against the current state and commits it as the next
    /// version. On error `self` is untouched.
    pub fn apply_change(&self, request: ChangeRequest, note: &str) -> Result<Self, KbError> {
        self.apply_change_at(request, note, Utc::now())
    }

    pub fn apply_change_at(
        &self,
        request: ChangeRequest,
        note: &str,
        at: DateTime<Utc>,
    ) -> Result<Self, KbError> {
        let change = self.resolve(request)?;
        let mut rulebase = self.rulebase.clone();
        apply_recorded(&mut rulebase, &change)?;
        let version = self.version + 1;
        let mut changelog = self.changelog.clone();
        changelog.push(UpdateEvent {
            version,
            timestamp: at,
            change,
            note: note.to_string(),
        });
        Ok(KnowledgeBase {
            version,
            rulebase,
            changelog,
        })
    }

    /// Like [`apply_change`](Self::apply_change) but fails with
    /// [`KbError::VersionConflict`] unless the caller saw the current version.
    pub fn apply_change_expecting(
        &self,
        expected_version: u64,
        request: ChangeRequest,
        note: &str,
    ) -> Result<Self, KbError> {
        if expected_version != self.version {
            return Err(KbError::VersionConflict {
                expected: expected_version,
                actual: self.version,
            });
        }
        self.apply_change(request, note)
    }

    pub fn record_retrospective(
        &self,
        rule_id: u32,
        outcome: Outcome,
        note: &str,
    ) -> Result<Self, KbError> {
        let request = match outcome {
            Outcome::Confirmed => ChangeRequest::Confirm { rule_id },
            Outcome::Refuted => ChangeRequest::Refute { rule_id },
        };
        self.apply_change(request, note)
    }

    fn existing(&self, rule_id: u32) -> Result<&Rule, KbError> {
        self.rulebase
            .rule(rule_id)
            .ok_or(KbError::UnknownRule(rule_id))
    }

    fn resolve(&self, request: ChangeRequest) -> Result<Change, KbError> {
        Ok(match request {
            ChangeRequest::Confirm { rule_id } => {
                self.existing(rule_id)?;
                Change::Confirm { rule_id }
            }
            ChangeRequest::Refute { rule_id } => {
                self.existing(rule_id)?;
                Change::Refute { rule_id }
            }
            ChangeRequest::Modify {
                rule_id,
                rule,
                description,
            } => {
                let current = self.existing(rule_id)?;
                if current.retired {
                    return Err(KbError::RetiredRule(rule_id));
                }
                let (requested, expr, effects) = parse_rule_body(&rule)?;
                if let Some(requested) = requested.filter(|&r| r != rule_id) {
                    return Err(KbError::IdMismatch {
                        requested,
                        expected: rule_id,
                    });
                }
                let new = Rule::new(rule_id, expr, effects).canonical();
                Change::Modify {
                    rule_id,
                    old: current.canonical(),
                    new,
                    description,
                }
            }
            ChangeRequest::AddRule {
                rule,
                description,
                provenance,
            } => {
                let (requested, expr, effects) = parse_rule_body(&rule)?;
                let rule_id = self.rulebase.next_rule_id();
                if let Some(requested) = requested.filter(|&r| r != rule_id) {
                    return Err(KbError::IdMismatch {
                        requested,
                        expected: rule_id,
                    });
                }
                Change::AddRule {
                    rule_id,
                    rule: Rule::new(rule_id, expr, effects).canonical(),
                    description,
                    provenance,
                }
            }
            ChangeRequest::RetireRule { rule_id } => {
                if self.existing(rule_id)?.retired {
                    return Err(KbError::RetiredRule(rule_id));
                }
                Change::RetireRule { rule_id }
            }
            ChangeRequest::AddFactor { factor } => Change::AddFactor { factor },
        })
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The single state transition shared by commit and replay.
fn apply_recorded(rulebase: &mut Rulebase, change: &Change) -> Result<(), KbError> {
    match change {
        Change::Seed { .. } => {
            return Err(KbError::Replay {
                version: 0,
                message: "seed event cannot be applied to an existing knowledge base".into(),
            })
        }
        Change::Confirm { rule_id } => {
            let rule = rulebase
                .rule_mut(*rule_id)
                .ok_or(KbError::UnknownRule(*rule_id))?;
            rule.confidence.confirmations += 1;
        }
        Change::Refute { rule_id } => {
            let rule = rulebase
                .rule_mut(*rule_id)
                .ok_or(KbError::UnknownRule(*rule_id))?;
            rule.confidence.refutations += 1;
        }
        Change::Modify {
            rule_id,
            old,
            new,
            description,
        } => {
            let current = rulebase
                .rule(*rule_id)
                .ok_or(KbError::UnknownRule(*rule_id))?;
            if current.canonical() != *old {
                return Err(KbError::Replay {
                    version: 0,
                    message: format!("rule {rule_id} does not read `{old}`"),
                });
            }
            let parsed = parse_rule(new)?;
            if parsed.id != *rule_id {
                return Err(KbError::IdMismatch {
                    requested: parsed.id,
                    expected: *rule_id,
                });
            }
            let mut updated = current.clone();
            updated.expr = parsed.expr;
            updated.effects = parsed.effects;
            if let Some(description) = description {
                updated.description = description.clone();
            }
            let errors = validate_rule(&updated, rulebase.factors(), rulebase.risks());
            if !errors.is_empty() {
                return Err(KbError::Invalid(errors));
            }
            *rulebase.rule_mut(*rule_id).expect("checked above") = updated;
        }
        Change::AddRule {
            rule_id,
            rule,
            description,
            provenance,
        } => {
            let mut parsed = parse_rule(rule)?;
            if parsed.id != *rule_id || rulebase.rule(*rule_id).is_some() {
                return Err(KbError::IdMismatch {
                    requested: parsed.id,
                    expected: rulebase.next_rule_id(),
                });
            }
            parsed.description = description.clone();
            parsed.provenance = provenance.clone();
            let errors = validate_rule(&parsed, rulebase.factors(), rulebase.risks());
            if !errors.is_empty() {
                return Err(KbError::Invalid(errors));
            }
            rulebase.push_rule(parsed);
        }
        Change::RetireRule { rule_id } => {
            let rule = rulebase
                .rule_mut(*rule_id)
                .ok_or(KbError::UnknownRule(*rule_id))?;
            rule.retired = true;
        }
        Change::AddFactor { factor } => {
            if !is_identifier(&factor.id) {
                return Err(KbError::InvalidFactor(format!(
                    "`{}` is not an identifier",
                    factor.id
                )));
            }
            if rulebase.factors().contains(&factor.id) {
                return Err(KbError::DuplicateFactor(factor.id.clone()));
            }
            if let FactorKind::Enum(values) = &factor.kind {
                let bad = values.is_empty()
                    || values.iter().enumerate().any(|(i, v)| {
                        !is_identifier(v) || values[..i].contains(v) || ScaleLevel::is_level_name(v)
                    });
                if bad {
                    return Err(KbError::InvalidFactor(format!(
                        "`{}` has an invalid enum domain",
                        factor.id
                    )));
                }
            }
            rulebase.insert_factor(factor.clone());
        }
    }
    Ok(())
}
