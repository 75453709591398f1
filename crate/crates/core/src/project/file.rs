//! Project document schema (TOML on disk, the same shape as JSON over HTTP).
//!
//! ```toml
//! [project]
//! id = "figure2"
//! coordinating_site = "A"
//!
//! [sites]
//! A = "Headquarters"
//! B = "Nearshore lab"
//!
//! [tasks]
//! T1 = "Implementation"
//!
//! [assignments]
//! T1 = "B"
//!
//! [bindings.project]
//! process_maturity = "high"
//!
//! [bindings.site.B]
//! transparency = "medium"
//!
//! [bindings.task.T1]
//! process_phase = "coding"
//!
//! [bindings.pair."A+B"]
//! cultural_difference = "high"
//!
//! [site_count_scale]   # optional, minimum site counts per level
//! low = 3
//! medium = 4
//! high = 5
//! very_high = 6
//! ```

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{ProjectAssessment, ProjectError, ProjectErrors, Site, SiteCountScale, SitePair, Task};
use crate::eval::Binding;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectFile {
    project: Header,
    #[serde(default)]
    sites: IndexMap<String, String>,
    #[serde(default)]
    tasks: IndexMap<String, String>,
    #[serde(default)]
    assignments: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Bindings::is_empty")]
    bindings: Bindings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    site_count_scale: Option<SiteCountScale>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    coordinating_site: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Bindings {
    #[serde(default, skip_serializing_if = "Binding::is_empty")]
    project: Binding,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    site: IndexMap<String, Binding>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    task: IndexMap<String, Binding>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pair: IndexMap<String, Binding>,
}

impl Bindings {
    fn is_empty(&self) -> bool {
        self.project.is_empty()
            && self.site.is_empty()
            && self.task.is_empty()
            && self.pair.is_empty()
    }
}

impl TryFrom<ProjectFile> for ProjectAssessment {
    type Error = ProjectErrors;

    fn try_from(file: ProjectFile) -> Result<Self, Self::Error> {
        let mut errors = Vec::new();
        let mut pair_bindings = BTreeMap::new();
        for (key, binding) in file.bindings.pair {
            match key.parse::<SitePair>() {
                Ok(pair) => {
                    if pair_bindings.insert(pair.clone(), binding).is_some() {
                        errors.push(ProjectError::BadPair {
                            message: format!("pair {pair} is bound more than once"),
                        });
                    }
                }
                Err(message) => errors.push(ProjectError::BadPair { message }),
            }
        }
        let project = ProjectAssessment {
            id: file.project.id,
            name: file.project.name,
            coordinating_site: file.project.coordinating_site,
            sites: file
                .sites
                .into_iter()
                .map(|(id, name)| Site { id, name })
                .collect(),
            tasks: file
                .tasks
                .into_iter()
                .map(|(id, name)| Task { id, name })
                .collect(),
            assignments: file.assignments,
            project_bindings: file.bindings.project,
            site_bindings: file.bindings.site.into_iter().collect(),
            task_bindings: file.bindings.task.into_iter().collect(),
            pair_bindings,
            site_count_scale: file.site_count_scale,
        };
        if let Err(ProjectErrors(structural)) = project.validate_structure() {
            errors.extend(structural);
        }
        if errors.is_empty() {
            Ok(project)
        } else {
            Err(ProjectErrors(errors))
        }
    }
}

impl From<&ProjectAssessment> for ProjectFile {
    fn from(p: &ProjectAssessment) -> Self {
        ProjectFile {
            project: Header {
                id: p.id.clone(),
                name: p.name.clone(),
                coordinating_site: p.coordinating_site.clone(),
            },
            sites: p
                .sites
                .iter()
                .map(|s| (s.id.clone(), s.name.clone()))
                .collect(),
            tasks: p
                .tasks
                .iter()
                .map(|t| (t.id.clone(), t.name.clone()))
                .collect(),
            assignments: p.assignments.clone(),
            bindings: Bindings {
                project: p.project_bindings.clone(),
                site: p
                    .site_bindings
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect(),
                task: p
                    .task_bindings
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect(),
                pair: p
                    .pair_bindings
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.clone()))
                    .collect(),
            },
            site_count_scale: p.site_count_scale,
        }
    }
}

impl Serialize for ProjectAssessment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ProjectFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProjectAssessment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = ProjectFile::deserialize(deserializer)?;
        ProjectAssessment::try_from(file).map_err(serde::de::Error::custom)
    }
}

fn format_error(message: impl ToString) -> ProjectErrors {
    ProjectErrors(vec![ProjectError::Format {
        message: message.to_string(),
    }])
}

impl ProjectAssessment {
    /// Parses a project file, reporting structural problems individually.
    pub fn from_toml_str(text: &str) -> Result<Self, ProjectErrors> {
        let file: ProjectFile = toml::from_str(text).map_err(|e| format_error(e.message()))?;
        ProjectAssessment::try_from(file)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ProjectFile::from(self)).expect("project documents always serialize")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self, ProjectErrors> {
        let file: ProjectFile = serde_json::from_value(value).map_err(format_error)?;
        ProjectAssessment::try_from(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FactorValue;
    use crate::scale::ScaleLevel;

    const DOC: &str = r#"
[project]
id = "demo"
coordinating_site = "A"

[sites]
A = "Headquarters"
B = "Remote"

[tasks]
T1 = "Build"

[assignments]
T1 = "B"

[bindings.project]
process_maturity = "high"

[bindings.task.T1]
process_phase = "coding"

[bindings.pair."B+A"]
cultural_difference = "very_high"
"#;

    #[test]
    fn parses_and_normalizes_pairs() {
        let p = ProjectAssessment::from_toml_str(DOC).unwrap();
        assert_eq!(p.sites.len(), 2);
        let pair = SitePair::new("A", "B").unwrap();
        assert_eq!(
            p.pair_bindings[&pair].get("cultural_difference"),
            Some(&FactorValue::Level(ScaleLevel::VeryHigh))
        );
        assert_eq!(
            p.task_bindings["T1"].get("process_phase"),
            Some(&FactorValue::Enum("coding".into()))
        );
    }

    #[test]
    fn toml_round_trip_is_stable() {
        let p = ProjectAssessment::from_toml_str(DOC).unwrap();
        let text = p.to_toml_string();
        let again = ProjectAssessment::from_toml_str(&text).unwrap();
        assert_eq!(again, p);
        assert_eq!(again.to_toml_string(), text);
        assert!(text.contains("[bindings.pair.\"A+B\"]"), "{text}");
    }

    #[test]
    fn json_shape_matches_toml_shape() {
        let p = ProjectAssessment::from_toml_str(DOC).unwrap();
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(
            json["bindings"]["pair"]["A+B"]["cultural_difference"],
            "very_high"
        );
        assert_eq!(ProjectAssessment::from_json_value(json).unwrap(), p);
    }

    #[test]
    fn malformed_documents() {
        assert!(ProjectAssessment::from_toml_str("not toml at all [").is_err());
        assert!(ProjectAssessment::from_toml_str("[project]\nid = \"x\"\n").is_err());
        let dup = DOC.replace(
            "[bindings.task.T1]",
            "[bindings.pair.\"A+B\"]\ntime_zone_difference = \"low\"\n\n[bindings.task.T1]",
        );
        let errors = ProjectAssessment::from_toml_str(&dup).unwrap_err();
        assert!(
            matches!(errors.0[0], ProjectError::BadPair { .. }),
            "{errors}"
        );
        let unknown_site = DOC.replace("T1 = \"B\"", "T1 = \"C\"");
        let errors = ProjectAssessment::from_toml_str(&unknown_site).unwrap_err();
        assert_eq!(
            errors.0,
            vec![ProjectError::UndeclaredSite {
                site: "C".into(),
                referenced_by: "assignments.T1".into()
            }]
        );
    }
}
