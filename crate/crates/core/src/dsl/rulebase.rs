use std::collections::{BTreeMap, HashMap};

use super::ast::{quoted, RiskTarget, Rule, RuleExpr};
use super::lexer::{tokenize, TokenKind};
use super::parser::Parser;
use super::{ParseError, RulebaseError, RulebaseErrors, ValidationError};
use crate::catalog::{FactorCatalog, FactorDef, FactorKind, RiskCatalog, RiskDef, Scope};
use crate::scale::ScaleLevel;

/// Factor catalog, risk catalog and rules, fully cross-checked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Rulebase {
    factors: FactorCatalog,
    risks: RiskCatalog,
    rules: Vec<Rule>,
}

impl Rulebase {
    /// Builds a rulebase, rejecting it if any cross-reference does not resolve.
    pub fn new(
        factors: FactorCatalog,
        risks: RiskCatalog,
        rules: Vec<Rule>,
    ) -> Result<Self, Vec<ValidationError>> {
        let rulebase = Rulebase {
            factors,
            risks,
            rules,
        };
        let errors = rulebase.validate();
        if errors.is_empty() {
            Ok(rulebase)
        } else {
            Err(errors)
        }
    }

    pub fn factors(&self) -> &FactorCatalog {
        &self.factors
    }

    pub fn risks(&self) -> &RiskCatalog {
        &self.risks
    }

    /// All rules including retired ones, in document order.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn active_rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(|r| !r.retired)
    }

    pub fn rule(&self, id: u32) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn next_rule_id(&self) -> u32 {
        self.rules.iter().map(|r| r.id).max().unwrap_or(0) + 1
    }

    pub(crate) fn rule_mut(&mut self, id: u32) -> Option<&mut Rule> {
        self.rules.iter_mut().find(|r| r.id == id)
    }

    pub(crate) fn push_rule(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    pub(crate) fn insert_factor(&mut self, def: FactorDef) -> Option<FactorDef> {
        self.factors.insert(def)
    }

    pub fn validate(&self) -> Vec<ValidationError> {
        let mut errors = Vec::new();
        for def in self.factors.iter() {
            if let Some(problem) = enum_domain_problem(&def.kind) {
                errors.push(ValidationError::BadEnumDomain {
                    factor: def.id.clone(),
                    problem,
                });
            }
        }
        let mut seen = HashMap::new();
        for rule in &self.rules {
            if seen.insert(rule.id, ()).is_some() {
                errors.push(ValidationError::Duplicate {
                    what: "rule",
                    id: rule.id.to_string(),
                });
            }
            errors.extend(validate_rule(rule, &self.factors, &self.risks));
        }
        errors
    }

    /// Canonical rulebase document.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        for def in self.factors.iter() {
            out.push_str(&format!(
                "factor {} scope={} kind={} name={}\n",
                def.id,
                def.scope,
                def.kind,
                quoted(&def.name)
            ));
        }
        if !self.factors.is_empty() {
            out.push('\n');
        }
        for risk in self.risks.iter() {
            out.push_str(&format!(
                "risk {} name={} impact={}\n",
                risk.id,
                quoted(&risk.name),
                quoted(&risk.impact)
            ));
        }
        if !self.risks.is_empty() {
            out.push('\n');
        }
        for rule in &self.rules {
            out.push_str(&rule.document_line());
            out.push('\n');
        }
        out
    }
}

fn enum_domain_problem(kind: &FactorKind) -> Option<String> {
    let FactorKind::Enum(values) = kind else {
        return None;
    };
    if values.is_empty() {
        return Some("no values".into());
    }
    for (i, value) in values.iter().enumerate() {
        if values[..i].contains(value) {
            return Some(format!("value `{value}` repeated"));
        }
        if ScaleLevel::is_level_name(value) {
            return Some(format!("value `{value}` collides with a scale level name"));
        }
    }
    None
}

/// Checks one rule's references and typing against the catalogs.
pub fn validate_rule(
    rule: &Rule,
    factors: &FactorCatalog,
    risks: &RiskCatalog,
) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    if !rule.expr.is_well_formed() {
        errors.push(ValidationError::Malformed { rule_id: rule.id });
    }
    check_expr(rule.id, &rule.expr, factors, &mut errors);
    if rule.effects.is_empty() {
        errors.push(ValidationError::NoEffects { rule_id: rule.id });
    }
    for effect in &rule.effects {
        if let RiskTarget::Risk(risk) = &effect.target {
            if !risks.contains(risk) {
                errors.push(ValidationError::UnknownRisk {
                    rule_id: rule.id,
                    risk: risk.clone(),
                });
            }
        }
    }
    errors
}

fn check_expr(
    rule_id: u32,
    expr: &RuleExpr,
    factors: &FactorCatalog,
    errors: &mut Vec<ValidationError>,
) {
    match expr {
        RuleExpr::Factor(id) => match factors.get(id) {
            None => errors.push(ValidationError::UnknownFactor {
                rule_id,
                factor: id.clone(),
            }),
            Some(def) if def.kind.is_enum() => errors.push(ValidationError::EnumUsedAsAtom {
                rule_id,
                factor: id.clone(),
            }),
            Some(_) => {}
        },
        RuleExpr::EnumIs { factor, value } => match factors.get(factor) {
            None => errors.push(ValidationError::UnknownFactor {
                rule_id,
                factor: factor.clone(),
            }),
            Some(def) if !def.kind.is_enum() => errors.push(ValidationError::OrdinalCompared {
                rule_id,
                factor: factor.clone(),
            }),
            Some(def) if !def.kind.allows(value) => {
                errors.push(ValidationError::UnknownEnumValue {
                    rule_id,
                    factor: factor.clone(),
                    value: value.clone(),
                })
            }
            Some(_) => {}
        },
        RuleExpr::Not(child) => check_expr(rule_id, child, factors, errors),
        RuleExpr::And(children) | RuleExpr::Or(children) => {
            for child in children {
                check_expr(rule_id, child, factors, errors);
            }
        }
    }
}

enum Declaration {
    Factor(FactorDef),
    Risk(RiskDef),
    Rule(Rule),
}

fn parse_declaration(text: &str, line: usize) -> Result<Option<Declaration>, ParseError> {
    let mut p = Parser::new(tokenize(text, line)?);
    let keyword = match p.peek_kind().clone() {
        TokenKind::Eof => return Ok(None),
        TokenKind::Ident(word) => word,
        other => {
            return Err(p.error_here(format!(
                "expected `factor`, `risk` or `rule`, found {other}"
            )))
        }
    };
    let keyword_token = p.bump();
    let decl = match keyword.as_str() {
        "factor" => Declaration::Factor(parse_factor(&mut p)?),
        "risk" => Declaration::Risk(parse_risk(&mut p)?),
        "rule" => Declaration::Rule(p.rule()?),
        other => {
            return Err(ParseError::Syntax {
                line,
                column: keyword_token.column,
                message: format!("expected `factor`, `risk` or `rule`, found `{other}`"),
            })
        }
    };
    Ok(Some(decl))
}

fn parse_factor(p: &mut Parser) -> Result<FactorDef, ParseError> {
    let id = p.expect_ident("factor id")?;
    let mut scope = None;
    let mut kind = None;
    let mut name = None;
    while *p.peek_kind() != TokenKind::Eof {
        let key_token = p.peek().clone();
        let key = p.expect_ident("`scope`, `kind` or `name`")?;
        p.expect(TokenKind::Eq, "`=`")?;
        let duplicate = match key.as_str() {
            "scope" => {
                let value_token = p.peek().clone();
                let value = p.expect_ident("scope")?;
                let parsed = value
                    .parse::<Scope>()
                    .map_err(|message| ParseError::Syntax {
                        line: value_token.line,
                        column: value_token.column,
                        message,
                    })?;
                scope.replace(parsed).is_some()
            }
            "kind" => kind.replace(parse_kind(p)?).is_some(),
            "name" => name.replace(p.expect_str("quoted display name")?).is_some(),
            _ => {
                return Err(ParseError::Syntax {
                    line: key_token.line,
                    column: key_token.column,
                    message: format!("unknown factor attribute `{key}`"),
                })
            }
        };
        if duplicate {
            return Err(ParseError::Syntax {
                line: key_token.line,
                column: key_token.column,
                message: format!("duplicate attribute `{key}`"),
            });
        }
    }
    let missing = |what: &str| p.error_here(format!("factor `{id}` is missing `{what}=`"));
    Ok(FactorDef {
        scope: scope.ok_or_else(|| missing("scope"))?,
        kind: kind.ok_or_else(|| missing("kind"))?,
        name: name.ok_or_else(|| missing("name"))?,
        id,
    })
}

fn parse_kind(p: &mut Parser) -> Result<FactorKind, ParseError> {
    let token = p.peek().clone();
    let word = p.expect_ident("`ordinal` or `enum(...)`")?;
    match word.as_str() {
        "ordinal" => Ok(FactorKind::Ordinal),
        "enum" => {
            p.expect(TokenKind::LParen, "`(`")?;
            let mut values = vec![p.expect_ident("enum value")?];
            while *p.peek_kind() == TokenKind::Comma {
                p.bump();
                values.push(p.expect_ident("enum value")?);
            }
            p.expect(TokenKind::RParen, "`)`")?;
            Ok(FactorKind::Enum(values))
        }
        other => Err(ParseError::Syntax {
            line: token.line,
            column: token.column,
            message: format!("unknown factor kind `{other}`"),
        }),
    }
}

fn parse_risk(p: &mut Parser) -> Result<RiskDef, ParseError> {
    let id = p.expect_ident("risk id")?;
    let mut name = None;
    let mut impact = None;
    while *p.peek_kind() != TokenKind::Eof {
        let key_token = p.peek().clone();
        let key = p.expect_ident("`name` or `impact`")?;
        p.expect(TokenKind::Eq, "`=`")?;
        let slot = match key.as_str() {
            "name" => &mut name,
            "impact" => &mut impact,
            _ => {
                return Err(ParseError::Syntax {
                    line: key_token.line,
                    column: key_token.column,
                    message: format!("unknown risk attribute `{key}`"),
                })
            }
        };
        if slot.replace(p.expect_str("quoted text")?).is_some() {
            return Err(ParseError::Syntax {
                line: key_token.line,
                column: key_token.column,
                message: format!("duplicate attribute `{key}`"),
            });
        }
    }
    let name = name.ok_or_else(|| p.error_here(format!("risk `{id}` is missing `name=`")))?;
    Ok(RiskDef {
        id,
        name,
        impact: impact.unwrap_or_default(),
    })
}

/// Parses and cross-checks a rulebase document. All problems are collected
/// before failing.
pub fn parse_rulebase(text: &str) -> Result<Rulebase, RulebaseErrors> {
    let mut errors = Vec::new();
    let mut factors = FactorCatalog::new();
    let mut risks = RiskCatalog::new();
    let mut rules: Vec<(usize, Rule)> = Vec::new();
    let mut factor_lines = HashMap::new();
    let mut risk_lines = HashMap::new();
    let mut rule_lines: BTreeMap<u32, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        match parse_declaration(raw, line) {
            Ok(None) => {}
            Ok(Some(Declaration::Factor(def))) => {
                if factor_lines.insert(def.id.clone(), line).is_some() {
                    errors.push(RulebaseError::Invalid {
                        line,
                        error: ValidationError::Duplicate {
                            what: "factor",
                            id: def.id.clone(),
                        },
                    });
                    continue;
                }
                if let Some(problem) = enum_domain_problem(&def.kind) {
                    errors.push(RulebaseError::Invalid {
                        line,
                        error: ValidationError::BadEnumDomain {
                            factor: def.id.clone(),
                            problem,
                        },
                    });
                }
                factors.insert(def);
            }
            Ok(Some(Declaration::Risk(def))) => {
                if risk_lines.insert(def.id.clone(), line).is_some() {
                    errors.push(RulebaseError::Invalid {
                        line,
                        error: ValidationError::Duplicate {
                            what: "risk",
                            id: def.id.clone(),
                        },
                    });
                    continue;
                }
                risks.insert(def);
            }
            Ok(Some(Declaration::Rule(rule))) => {
                if rule_lines.contains_key(&rule.id) {
                    errors.push(RulebaseError::Invalid {
                        line,
                        error: ValidationError::Duplicate {
                            what: "rule",
                            id: rule.id.to_string(),
                        },
                    });
                    continue;
                }
                rule_lines.insert(rule.id, line);
                rules.push((line, rule));
            }
            Err(err) => errors.push(RulebaseError::Parse(err)),
        }
    }

    for (line, rule) in &rules {
        for error in validate_rule(rule, &factors, &risks) {
            errors.push(RulebaseError::Invalid { line: *line, error });
        }
    }

    if errors.is_empty() {
        Ok(Rulebase {
            factors,
            risks,
            rules: rules.into_iter().map(|(_, rule)| rule).collect(),
        })
    } else {
        errors.sort_by_key(|e| match e {
            RulebaseError::Parse(p) => p.line(),
            RulebaseError::Invalid { line, .. } => *line,
        });
        Err(RulebaseErrors(errors))
    }
}

impl std::str::FromStr for Rulebase {
    type Err = RulebaseErrors;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rulebase(s)
    }
}
