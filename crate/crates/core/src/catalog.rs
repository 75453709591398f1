//! Factor and risk catalogs.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Where a factor is assessed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Between two collaborating sites.
    Relationship,
    Site,
    Task,
    Project,
}

impl Scope {
    /// Catalog grouping order: relationships, site, task, project.
    pub const ALL: [Scope; 4] = [
        Scope::Relationship,
        Scope::Site,
        Scope::Task,
        Scope::Project,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Relationship => "relationship",
            Scope::Site => "site",
            Scope::Task => "task",
            Scope::Project => "project",
        }
    }

    pub fn category_label(self) -> &'static str {
        match self {
            Scope::Relationship => "Relationships between sites",
            Scope::Site => "Characteristics of the site",
            Scope::Task => "Characteristics of the tasks",
            Scope::Project => "Project characteristics",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relationship" => Ok(Scope::Relationship),
            "site" => Ok(Scope::Site),
            "task" => Ok(Scope::Task),
            "project" => Ok(Scope::Project),
            other => Err(format!(
                "unknown scope `{other}` (expected project, site, task or relationship)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "values")]
pub enum FactorKind {
    Ordinal,
    Enum(Vec<String>),
}

impl FactorKind {
    pub fn is_enum(&self) -> bool {
        matches!(self, FactorKind::Enum(_))
    }

    pub fn allows(&self, value: &str) -> bool {
        match self {
            FactorKind::Ordinal => false,
            FactorKind::Enum(values) => values.iter().any(|v| v == value),
        }
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorKind::Ordinal => f.write_str("ordinal"),
            FactorKind::Enum(values) => write!(f, "enum({})", values.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorDef {
    pub id: String,
    pub scope: Scope,
    pub kind: FactorKind,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskDef {
    pub id: String,
    pub name: String,
    pub impact: String,
}

/// Declared influencing factors, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactorCatalog {
    factors: IndexMap<String, FactorDef>,
}

impl FactorCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the displaced definition if the id was already declared.
    pub fn insert(&mut self, def: FactorDef) -> Option<FactorDef> {
        self.factors.insert(def.id.clone(), def)
    }

    pub fn get(&self, id: &str) -> Option<&FactorDef> {
        self.factors.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.factors.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FactorDef> {
        self.factors.values()
    }

    pub fn in_scope(&self, scope: Scope) -> impl Iterator<Item = &FactorDef> {
        self.iter().filter(move |f| f.scope == scope)
    }
}

/// Declared risks, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RiskCatalog {
    risks: IndexMap<String, RiskDef>,
}

impl RiskCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, def: RiskDef) -> Option<RiskDef> {
        self.risks.insert(def.id.clone(), def)
    }

    pub fn get(&self, id: &str) -> Option<&RiskDef> {
        self.risks.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.risks.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.risks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.risks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RiskDef> {
        self.risks.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.risks.keys().map(String::as_str)
    }
}
