//! Distributed project model: sites, tasks, assignments and scoped factor
//! assessments.
//!
//! Project-scope factors are assessed once, site and task factors per site or
//! task, and relationship factors per unordered pair of sites. An evaluation
//! context is one assignment (task at a remote site) paired with the
//! coordinating site.

mod assess;
mod compare;
mod file;
mod resolve;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{FactorCatalog, FactorKind, Scope};
use crate::eval::{Binding, EvalError, FactorValue};
use crate::scale::ScaleLevel;

pub use assess::{assess_project, ContextAssessment, RiskHit, RiskRollup, ScenarioReport};
pub use compare::{
    compare_scenarios, Comparison, ComparisonCell, ComparisonRow, RiskCountCell, RiskCountRow,
    Variant,
};
pub use resolve::{resolve_binding, EvaluationContext, SITE_COUNT_FACTOR};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub name: String,
}

/// Unordered pair of distinct sites, stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SitePair(String, String);

impl SitePair {
    /// `None` when both ids are the same site.
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Option<Self> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(SitePair(a, b)),
            std::cmp::Ordering::Greater => Some(SitePair(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> &str {
        &self.0
    }

    pub fn second(&self) -> &str {
        &self.1
    }

    pub fn contains(&self, site: &str) -> bool {
        self.0 == site || self.1 == site
    }
}

impl fmt::Display for SitePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.0, self.1)
    }
}

impl FromStr for SitePair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('+')
            .ok_or_else(|| format!("pair key `{s}` must have the form <siteA>+<siteB>"))?;
        if a.is_empty() || b.is_empty() || b.contains('+') {
            return Err(format!("pair key `{s}` must have the form <siteA>+<siteB>"));
        }
        SitePair::new(a, b).ok_or_else(|| format!("pair key `{s}` names the same site twice"))
    }
}

/// Minimum number of involved sites for each level above `very_low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteCountScale {
    pub low: u32,
    pub medium: u32,
    pub high: u32,
    pub very_high: u32,
}

impl Default for SiteCountScale {
    fn default() -> Self {
        SiteCountScale {
            low: 3,
            medium: 4,
            high: 5,
            very_high: 6,
        }
    }
}

impl SiteCountScale {
    pub fn level_for(&self, sites: usize) -> ScaleLevel {
        let sites = sites as u64;
        if sites >= u64::from(self.very_high) {
            ScaleLevel::VeryHigh
        } else if sites >= u64::from(self.high) {
            ScaleLevel::High
        } else if sites >= u64::from(self.medium) {
            ScaleLevel::Medium
        } else if sites >= u64::from(self.low) {
            ScaleLevel::Low
        } else {
            ScaleLevel::VeryLow
        }
    }

    fn is_increasing(&self) -> bool {
        self.low < self.medium && self.medium < self.high && self.high < self.very_high
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ProjectError {
    #[error("malformed project document: {message}")]
    Format { message: String },
    #[error("{referenced_by}: undeclared site `{site}`")]
    UndeclaredSite { site: String, referenced_by: String },
    #[error("{referenced_by}: undeclared task `{task}`")]
    UndeclaredTask { task: String, referenced_by: String },
    #[error("bindings.pair: {message}")]
    BadPair { message: String },
    #[error("site_count_scale: thresholds must be strictly increasing")]
    BadSiteCountScale,
    #[error("{section}: undeclared factor `{factor}`")]
    UnknownFactor { factor: String, section: String },
    #[error(
        "{section}: factor `{factor}` has {declared} scope and cannot be bound at {bound_at} scope"
    )]
    WrongScope {
        factor: String,
        section: String,
        declared: Scope,
        bound_at: Scope,
    },
    #[error("{section}: factor `{factor}` expects {expected}, got `{value}`")]
    KindMismatch {
        factor: String,
        section: String,
        value: String,
        expected: String,
    },
    #[error("task `{task}` is not assigned to site `{site}`")]
    NotAssigned { task: String, site: String },
    #[error("variant `{variant}` has a different task set (missing: [{}], extra: [{}])", missing.join(", "), extra.join(", "))]
    MismatchedTasks {
        variant: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("{context}: {message}")]
    Evaluation { context: String, message: String },
}

impl ProjectError {
    pub(crate) fn evaluation(context: String, err: EvalError) -> Self {
        ProjectError::Evaluation {
            context,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ProjectErrors(pub Vec<ProjectError>);

impl fmt::Display for ProjectErrors {
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

impl From<ProjectError> for ProjectErrors {
    fn from(err: ProjectError) -> Self {
        ProjectErrors(vec![err])
    }
}

fn into_result(errors: Vec<ProjectError>) -> Result<(), ProjectErrors> {
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ProjectErrors(errors))
    }
}

/// A project and its factor assessments. Immutable once loaded; edits
/// produce a new value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectAssessment {
    pub id: String,
    pub name: Option<String>,
    pub coordinating_site: String,
    pub sites: Vec<Site>,
    pub tasks: Vec<Task>,
    /// Task id → site id, in document order.
    pub assignments: IndexMap<String, String>,
    pub project_bindings: Binding,
    pub site_bindings: BTreeMap<String, Binding>,
    pub task_bindings: BTreeMap<String, Binding>,
    pub pair_bindings: BTreeMap<SitePair, Binding>,
    pub site_count_scale: Option<SiteCountScale>,
}

impl ProjectAssessment {
    pub fn new(id: impl Into<String>, coordinating_site: impl Into<String>) -> Self {
        ProjectAssessment {
            id: id.into(),
            name: None,
            coordinating_site: coordinating_site.into(),
            sites: Vec::new(),
            tasks: Vec::new(),
            assignments: IndexMap::new(),
            project_bindings: Binding::new(),
            site_bindings: BTreeMap::new(),
            task_bindings: BTreeMap::new(),
            pair_bindings: BTreeMap::new(),
            site_count_scale: None,
        }
    }

    pub fn site(&self, id: &str) -> Option<&Site> {
        self.sites.iter().find(|s| s.id == id)
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn has_site(&self, id: &str) -> bool {
        self.site(id).is_some()
    }

    pub fn has_task(&self, id: &str) -> bool {
        self.task(id).is_some()
    }

    /// Assignments in task declaration order.
    pub fn ordered_assignments(&self) -> Vec<(&str, &str)> {
        self.tasks
            .iter()
            .filter_map(|t| {
                self.assignments
                    .get(&t.id)
                    .map(|s| (t.id.as_str(), s.as_str()))
            })
            .collect()
    }

    /// Distinct sites appearing in assignments, plus the coordinating site.
    pub fn involved_site_count(&self) -> usize {
        let mut sites: Vec<&str> = self.assignments.values().map(String::as_str).collect();
        sites.push(&self.coordinating_site);
        sites.sort_unstable();
        sites.dedup();
        sites.len()
    }

    pub fn site_count_scale(&self) -> SiteCountScale {
        self.site_count_scale.unwrap_or_default()
    }

    /// Reassigns a task, producing a new project value.
    pub fn with_assignment(&self, task: &str, site: &str) -> Self {
        let mut next = self.clone();
        next.assignments.insert(task.to_string(), site.to_string());
        next
    }

    /// Internal consistency: ids, assignments, pair keys and the site-count
    /// mapping.
    pub fn validate_structure(&self) -> Result<(), ProjectErrors> {
        let mut errors = Vec::new();
        let mut seen = Vec::new();
        for site in &self.sites {
            if seen.contains(&site.id.as_str()) || site.id.is_empty() {
                errors.push(ProjectError::Format {
                    message: format!("site id `{}` is empty or repeated", site.id),
                });
            }
            seen.push(&site.id);
        }
        let mut seen = Vec::new();
        for task in &self.tasks {
            if seen.contains(&task.id.as_str()) || task.id.is_empty() {
                errors.push(ProjectError::Format {
                    message: format!("task id `{}` is empty or repeated", task.id),
                });
            }
            seen.push(&task.id);
        }
        if !self.has_site(&self.coordinating_site) {
            errors.push(ProjectError::UndeclaredSite {
                site: self.coordinating_site.clone(),
                referenced_by: "project.coordinating_site".into(),
            });
        }
        for (task, site) in &self.assignments {
            if !self.has_task(task) {
                errors.push(ProjectError::UndeclaredTask {
                    task: task.clone(),
                    referenced_by: "assignments".into(),
                });
            }
            if !self.has_site(site) {
                errors.push(ProjectError::UndeclaredSite {
                    site: site.clone(),
                    referenced_by: format!("assignments.{task}"),
                });
            }
        }
        for site in self.site_bindings.keys() {
            if !self.has_site(site) {
                errors.push(ProjectError::UndeclaredSite {
                    site: site.clone(),
                    referenced_by: format!("bindings.site.{site}"),
                });
            }
        }
        for task in self.task_bindings.keys() {
            if !self.has_task(task) {
                errors.push(ProjectError::UndeclaredTask {
                    task: task.clone(),
                    referenced_by: format!("bindings.task.{task}"),
                });
            }
        }
        for pair in self.pair_bindings.keys() {
            for site in [pair.first(), pair.second()] {
                if !self.has_site(site) {
                    errors.push(ProjectError::UndeclaredSite {
                        site: site.to_string(),
                        referenced_by: format!("bindings.pair.{pair}"),
                    });
                }
            }
        }
        if let Some(scale) = &self.site_count_scale {
            if !scale.is_increasing() {
                errors.push(ProjectError::BadSiteCountScale);
            }
        }
        into_result(errors)
    }

    /// Structure plus factor references: every bound factor is declared, is
    /// bound in the section matching its scope, and has a value of its kind.
    pub fn validate(&self, catalog: &FactorCatalog) -> Result<(), ProjectErrors> {
        let mut errors = match self.validate_structure() {
            Ok(()) => Vec::new(),
            Err(ProjectErrors(errors)) => errors,
        };
        for (section, scope, binding) in self.sections() {
            check_binding(catalog, &section, scope, binding, &mut errors);
        }
        into_result(errors)
    }

    fn sections(&self) -> Vec<(String, Scope, &Binding)> {
        let mut out = vec![(
            "bindings.project".to_string(),
            Scope::Project,
            &self.project_bindings,
        )];
        out.extend(
            self.site_bindings
                .iter()
                .map(|(id, b)| (format!("bindings.site.{id}"), Scope::Site, b)),
        );
        out.extend(
            self.task_bindings
                .iter()
                .map(|(id, b)| (format!("bindings.task.{id}"), Scope::Task, b)),
        );
        out.extend(
            self.pair_bindings
                .iter()
                .map(|(pair, b)| (format!("bindings.pair.{pair}"), Scope::Relationship, b)),
        );
        out
    }
}

pub(crate) fn check_binding(
    catalog: &FactorCatalog,
    section: &str,
    scope: Scope,
    binding: &Binding,
    errors: &mut Vec<ProjectError>,
) {
    for (factor, value) in binding.iter() {
        let Some(def) = catalog.get(factor) else {
            errors.push(ProjectError::UnknownFactor {
                factor: factor.to_string(),
                section: section.to_string(),
            });
            continue;
        };
        if def.scope != scope {
            errors.push(ProjectError::WrongScope {
                factor: factor.to_string(),
                section: section.to_string(),
                declared: def.scope,
                bound_at: scope,
            });
        }
        let kind_ok = match (&def.kind, value) {
            (FactorKind::Ordinal, FactorValue::Level(_)) => true,
            (FactorKind::Enum(_), FactorValue::Enum(v)) => def.kind.allows(v),
            _ => false,
        };
        if !kind_ok {
            errors.push(ProjectError::KindMismatch {
                factor: factor.to_string(),
                section: section.to_string(),
                value: value.to_string(),
                expected: match &def.kind {
                    FactorKind::Ordinal => "a scale level".to_string(),
                    FactorKind::Enum(values) => format!("one of {}", values.join(", ")),
                },
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_pairs_are_unordered() {
        assert_eq!(SitePair::new("B", "A"), SitePair::new("A", "B"));
        assert_eq!(SitePair::new("A", "A"), None);
        assert_eq!("B+A".parse::<SitePair>().unwrap().to_string(), "A+B");
        assert!("A-B".parse::<SitePair>().is_err());
        assert!("A+A".parse::<SitePair>().is_err());
        assert!("A+B+C".parse::<SitePair>().is_err());
    }

    #[test]
    fn default_site_count_mapping() {
        let scale = SiteCountScale::default();
        let expected = [
            (1, ScaleLevel::VeryLow),
            (2, ScaleLevel::VeryLow),
            (3, ScaleLevel::Low),
            (4, ScaleLevel::Medium),
            (5, ScaleLevel::High),
            (6, ScaleLevel::VeryHigh),
            (11, ScaleLevel::VeryHigh),
        ];
        for (sites, level) in expected {
            assert_eq!(scale.level_for(sites), level, "{sites} sites");
        }
    }

    #[test]
    fn structure_errors_are_collected() {
        let mut p = ProjectAssessment::new("p", "Z");
        p.sites.push(Site {
            id: "A".into(),
            name: "A".into(),
        });
        p.assignments.insert("T9".into(), "Q".into());
        p.site_count_scale = Some(SiteCountScale {
            low: 3,
            medium: 3,
            high: 5,
            very_high: 6,
        });
        let errors = p.validate_structure().unwrap_err().0;
        assert_eq!(errors.len(), 4, "{errors:?}");
    }
}
