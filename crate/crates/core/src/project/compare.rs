use std::collections::BTreeSet;

use serde::Serialize;

use super::{assess_project, ProjectAssessment, ProjectError, ProjectErrors, ScenarioReport};
use crate::dsl::{Polarity, Rulebase};
use crate::eval::{EvalMode, Relevance};
use crate::scale::ScaleLevel;

/// One allocation scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub label: String,
    pub project: ProjectAssessment,
}

impl Variant {
    pub fn new(label: impl Into<String>, project: ProjectAssessment) -> Self {
        Variant {
            label: label.into(),
            project,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComparisonCell {
    /// Site the task is assigned to in this variant, if any.
    pub site: Option<String>,
    pub relevance: Option<Relevance>,
    pub reported: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComparisonRow {
    pub task: String,
    pub rule_id: u32,
    pub cells: Vec<ComparisonCell>,
}

impl ComparisonRow {
    pub fn status_differs(&self) -> bool {
        self.cells
            .windows(2)
            .any(|w| w[0].reported != w[1].reported)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RiskCountCell {
    pub increasing: usize,
    pub mitigating: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RiskCountRow {
    pub task: String,
    pub risk: String,
    pub cells: Vec<RiskCountCell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub threshold: ScaleLevel,
    pub mode: EvalMode,
    /// Per task and rule, one cell per variant.
    pub rows: Vec<ComparisonRow>,
    /// Per task and risk, counts of reported rules per variant.
    pub risk_rows: Vec<RiskCountRow>,
    /// Rows whose reported/filtered status differs between variants.
    pub delta: Vec<ComparisonRow>,
}

/// Side-by-side assessment of variants that share a task set.
pub fn compare_scenarios(
    variants: &[Variant],
    rulebase: &Rulebase,
    threshold: ScaleLevel,
    mode: EvalMode,
) -> Result<Comparison, ProjectErrors> {
    let Some(first) = variants.first() else {
        return Ok(Comparison {
            labels: Vec::new(),
            threshold,
            mode,
            rows: Vec::new(),
            risk_rows: Vec::new(),
            delta: Vec::new(),
        });
    };
    let task_set = |p: &ProjectAssessment| -> BTreeSet<String> {
        p.tasks.iter().map(|t| t.id.clone()).collect()
    };
    let reference = task_set(&first.project);
    let mut errors = Vec::new();
    for variant in &variants[1..] {
        let tasks = task_set(&variant.project);
        if tasks != reference {
            errors.push(ProjectError::MismatchedTasks {
                variant: variant.label.clone(),
                missing: reference.difference(&tasks).cloned().collect(),
                extra: tasks.difference(&reference).cloned().collect(),
            });
        }
    }
    if !errors.is_empty() {
        return Err(ProjectErrors(errors));
    }

    let mut reports: Vec<ScenarioReport> = Vec::with_capacity(variants.len());
    for variant in variants {
        match assess_project(&variant.project, rulebase, threshold, mode) {
            Ok(report) => reports.push(report),
            Err(ProjectErrors(errs)) => {
                errors.extend(errs.into_iter().map(|e| ProjectError::Evaluation {
                    context: format!("variant {}", variant.label),
                    message: e.to_string(),
                }))
            }
        }
    }
    if !errors.is_empty() {
        return Err(ProjectErrors(errors));
    }

    let mut rule_ids: Vec<u32> = rulebase.active_rules().map(|r| r.id).collect();
    rule_ids.sort_unstable();

    let mut rows = Vec::new();
    let mut risk_rows = Vec::new();
    for task in &first.project.tasks {
        let contexts: Vec<_> = reports.iter().map(|r| r.context(&task.id)).collect();
        for &rule_id in &rule_ids {
            let cells = contexts
                .iter()
                .map(|ctx| match ctx {
                    None => ComparisonCell {
                        site: None,
                        relevance: None,
                        reported: false,
                    },
                    Some(ctx) => {
                        let relevance = ctx
                            .relevances
                            .iter()
                            .find(|r| r.rule_id == rule_id)
                            .map(|r| r.relevance.clone());
                        ComparisonCell {
                            site: Some(ctx.context.remote_site.clone()),
                            reported: ctx.ranking.ranked.iter().any(|r| r.rule_id == rule_id),
                            relevance,
                        }
                    }
                })
                .collect();
            rows.push(ComparisonRow {
                task: task.id.clone(),
                rule_id,
                cells,
            });
        }
        for risk in rulebase.risks().iter() {
            let cells = contexts
                .iter()
                .map(|ctx| {
                    let mut cell = RiskCountCell {
                        increasing: 0,
                        mitigating: 0,
                    };
                    for entry in ctx.iter().flat_map(|c| c.ranking.ranked.iter()) {
                        for effect in entry.effects.iter().filter(|e| e.affects(&risk.id)) {
                            match effect.polarity {
                                Polarity::Increases => cell.increasing += 1,
                                Polarity::Decreases => cell.mitigating += 1,
                            }
                        }
                    }
                    cell
                })
                .collect();
            risk_rows.push(RiskCountRow {
                task: task.id.clone(),
                risk: risk.id.clone(),
                cells,
            });
        }
    }
    let delta = rows
        .iter()
        .filter(|r| r.status_differs())
        .cloned()
        .collect();

    Ok(Comparison {
        labels: variants.iter().map(|v| v.label.clone()).collect(),
        threshold,
        mode,
        rows,
        risk_rows,
        delta,
    })
}
