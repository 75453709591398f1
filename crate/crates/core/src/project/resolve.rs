use serde::Serialize;

use super::{check_binding, ProjectAssessment, ProjectError, ProjectErrors, SitePair};
use crate::catalog::{FactorCatalog, Scope};
use crate::eval::{Binding, FactorValue};

/// Derived from the assignments rather than assessed.
pub const SITE_COUNT_FACTOR: &str = "number_of_involved_sites";

/// One (task, remote site, counterpart site) triple with its merged binding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvaluationContext {
    pub task: String,
    pub remote_site: String,
    pub counterpart_site: String,
    pub binding: Binding,
}

impl EvaluationContext {
    /// Resolves the context for `task` at `remote_site` against
    /// `counterpart_site`, or the coordinating site when `None`.
    pub fn resolve(
        project: &ProjectAssessment,
        catalog: &FactorCatalog,
        task: &str,
        remote_site: &str,
        counterpart_site: Option<&str>,
    ) -> Result<Self, ProjectErrors> {
        let counterpart = counterpart_site.unwrap_or(&project.coordinating_site);
        let mut errors = Vec::new();
        if !project.has_task(task) {
            errors.push(ProjectError::UndeclaredTask {
                task: task.to_string(),
                referenced_by: "evaluation context".into(),
            });
        }
        for site in [remote_site, counterpart] {
            if !project.has_site(site) {
                errors.push(ProjectError::UndeclaredSite {
                    site: site.to_string(),
                    referenced_by: "evaluation context".into(),
                });
            }
        }
        if errors.is_empty()
            && project.assignments.get(task).map(String::as_str) != Some(remote_site)
        {
            errors.push(ProjectError::NotAssigned {
                task: task.to_string(),
                site: remote_site.to_string(),
            });
        }
        if !errors.is_empty() {
            return Err(ProjectErrors(errors));
        }

        let empty = Binding::new();
        let pair = SitePair::new(remote_site, counterpart);
        let mut sections: Vec<(String, Scope, &Binding)> = vec![
            (
                "bindings.project".into(),
                Scope::Project,
                &project.project_bindings,
            ),
            (
                format!("bindings.site.{remote_site}"),
                Scope::Site,
                project.site_bindings.get(remote_site).unwrap_or(&empty),
            ),
            (
                format!("bindings.task.{task}"),
                Scope::Task,
                project.task_bindings.get(task).unwrap_or(&empty),
            ),
        ];
        if let Some(pair) = &pair {
            sections.push((
                format!("bindings.pair.{pair}"),
                Scope::Relationship,
                project.pair_bindings.get(pair).unwrap_or(&empty),
            ));
        }

        let mut binding = Binding::new();
        for (section, scope, scoped) in sections {
            check_binding(catalog, &section, scope, scoped, &mut errors);
            binding.merge(scoped);
        }
        if !errors.is_empty() {
            return Err(ProjectErrors(errors));
        }

        if catalog.contains(SITE_COUNT_FACTOR) && !binding.contains(SITE_COUNT_FACTOR) {
            let level = project
                .site_count_scale()
                .level_for(project.involved_site_count());
            binding.insert(SITE_COUNT_FACTOR, FactorValue::Level(level));
        }

        Ok(EvaluationContext {
            task: task.to_string(),
            remote_site: remote_site.to_string(),
            counterpart_site: counterpart.to_string(),
            binding,
        })
    }

    pub fn label(&self) -> String {
        format!("{}@{}", self.task, self.remote_site)
    }
}

/// Merged binding for `task` performed at `remote_site`, paired with the
/// coordinating site.
pub fn resolve_binding(
    project: &ProjectAssessment,
    catalog: &FactorCatalog,
    task: &str,
    remote_site: &str,
) -> Result<Binding, ProjectErrors> {
    EvaluationContext::resolve(project, catalog, task, remote_site, None).map(|ctx| ctx.binding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{FactorDef, FactorKind};
    use crate::project::{Site, Task};
    use crate::scale::ScaleLevel;

    fn catalog() -> FactorCatalog {
        let mut c = FactorCatalog::new();
        for (id, scope) in [
            ("cultural_difference", Scope::Relationship),
            ("time_zone_difference", Scope::Relationship),
            ("transparency", Scope::Site),
            ("complexity", Scope::Task),
            ("time_pressure", Scope::Project),
            (SITE_COUNT_FACTOR, Scope::Project),
        ] {
            c.insert(FactorDef {
                id: id.into(),
                scope,
                kind: FactorKind::Ordinal,
                name: id.into(),
            });
        }
        c
    }

    fn project() -> ProjectAssessment {
        let mut p = ProjectAssessment::new("p", "A");
        for id in ["A", "B", "C"] {
            p.sites.push(Site {
                id: id.into(),
                name: id.into(),
            });
        }
        p.tasks.push(Task {
            id: "T1".into(),
            name: "T1".into(),
        });
        p.tasks.push(Task {
            id: "T2".into(),
            name: "T2".into(),
        });
        p.assignments.insert("T1".into(), "B".into());
        p.pair_bindings.insert(
            SitePair::new("A", "B").unwrap(),
            Binding::new().with("cultural_difference", ScaleLevel::High),
        );
        p.pair_bindings.insert(
            SitePair::new("B", "C").unwrap(),
            Binding::new().with("cultural_difference", ScaleLevel::VeryLow),
        );
        p.site_bindings.insert(
            "B".into(),
            Binding::new().with("transparency", ScaleLevel::Low),
        );
        p
    }

    #[test]
    fn pair_lookup_is_scoped_to_counterpart() {
        let b = resolve_binding(&project(), &catalog(), "T1", "B").unwrap();
        assert_eq!(
            b.get("cultural_difference"),
            Some(&FactorValue::Level(ScaleLevel::High))
        );
        assert_eq!(
            b.get("transparency"),
            Some(&FactorValue::Level(ScaleLevel::Low))
        );
        let ctx = EvaluationContext::resolve(&project(), &catalog(), "T1", "B", Some("C")).unwrap();
        assert_eq!(
            ctx.binding.get("cultural_difference"),
            Some(&FactorValue::Level(ScaleLevel::VeryLow))
        );
    }

    #[test]
    fn site_count_is_derived() {
        let b = resolve_binding(&project(), &catalog(), "T1", "B").unwrap();
        assert_eq!(
            b.get(SITE_COUNT_FACTOR),
            Some(&FactorValue::Level(ScaleLevel::VeryLow))
        );
        let p = project().with_assignment("T2", "C");
        let b = resolve_binding(&p, &catalog(), "T1", "B").unwrap();
        assert_eq!(
            b.get(SITE_COUNT_FACTOR),
            Some(&FactorValue::Level(ScaleLevel::Low))
        );
    }

    #[test]
    fn wrong_scope_names_factor_and_scope() {
        let mut p = project();
        p.site_bindings.insert(
            "B".into(),
            Binding::new().with("time_zone_difference", ScaleLevel::High),
        );
        let errors = resolve_binding(&p, &catalog(), "T1", "B").unwrap_err();
        assert_eq!(
            errors.0,
            vec![ProjectError::WrongScope {
                factor: "time_zone_difference".into(),
                section: "bindings.site.B".into(),
                declared: Scope::Relationship,
                bound_at: Scope::Site,
            }]
        );
        let message = errors.to_string();
        assert!(message.contains("time_zone_difference") && message.contains("relationship"));
    }

    #[test]
    fn unknown_or_unassigned() {
        let p = project();
        assert!(matches!(
            resolve_binding(&p, &catalog(), "T1", "C").unwrap_err().0[..],
            [ProjectError::NotAssigned { .. }]
        ));
        assert!(matches!(
            resolve_binding(&p, &catalog(), "T7", "B").unwrap_err().0[..],
            [ProjectError::UndeclaredTask { .. }]
        ));
        assert!(matches!(
            resolve_binding(&p, &catalog(), "T1", "Q").unwrap_err().0[..],
            [ProjectError::UndeclaredSite { .. }]
        ));
    }
}
