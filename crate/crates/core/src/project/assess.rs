use serde::Serialize;

use super::{EvaluationContext, ProjectAssessment, ProjectError, ProjectErrors};
use crate::dsl::{Polarity, Rulebase};
use crate::eval::{evaluate_rules, rank_and_filter, EvalMode, Ranking, RuleRelevance};
use crate::scale::ScaleLevel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextAssessment {
    pub context: EvaluationContext,
    /// Every active rule, in rule-id order, before filtering.
    pub relevances: Vec<RuleRelevance>,
    pub ranking: Ranking,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RiskHit {
    pub task: String,
    pub remote_site: String,
    pub rule_id: u32,
    pub level: ScaleLevel,
}

/// Reported rules touching one risk, split by polarity. Nothing is netted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RiskRollup {
    pub risk: String,
    pub increasing: Vec<RiskHit>,
    pub mitigating: Vec<RiskHit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub label: String,
    pub threshold: ScaleLevel,
    pub mode: EvalMode,
    pub contexts: Vec<ContextAssessment>,
    pub risks: Vec<RiskRollup>,
}

impl ScenarioReport {
    pub fn context(&self, task: &str) -> Option<&ContextAssessment> {
        self.contexts.iter().find(|c| c.context.task == task)
    }
}

/// Evaluates every assignment of `project` as its own context.
pub fn assess_project(
    project: &ProjectAssessment,
    rulebase: &Rulebase,
    threshold: ScaleLevel,
    mode: EvalMode,
) -> Result<ScenarioReport, ProjectErrors> {
    project.validate(rulebase.factors())?;

    let mut contexts = Vec::new();
    let mut errors = Vec::new();
    for (task, site) in project.ordered_assignments() {
        let context =
            match EvaluationContext::resolve(project, rulebase.factors(), task, site, None) {
                Ok(context) => context,
                Err(ProjectErrors(errs)) => {
                    errors.extend(errs);
                    continue;
                }
            };
        match evaluate_rules(rulebase, &context.binding, mode) {
            Ok(relevances) => {
                let ranking = rank_and_filter(&relevances, threshold);
                contexts.push(ContextAssessment {
                    context,
                    relevances,
                    ranking,
                });
            }
            Err(err) => errors.push(ProjectError::evaluation(context.label(), err)),
        }
    }
    if !errors.is_empty() {
        return Err(ProjectErrors(errors));
    }

    let risks = rulebase
        .risks()
        .iter()
        .map(|risk| {
            let mut rollup = RiskRollup {
                risk: risk.id.clone(),
                increasing: Vec::new(),
                mitigating: Vec::new(),
            };
            for ctx in &contexts {
                for entry in &ctx.ranking.ranked {
                    let level = entry
                        .relevance
                        .level()
                        .expect("ranked entries are determinate");
                    for effect in entry.effects.iter().filter(|e| e.affects(&risk.id)) {
                        let hit = RiskHit {
                            task: ctx.context.task.clone(),
                            remote_site: ctx.context.remote_site.clone(),
                            rule_id: entry.rule_id,
                            level,
                        };
                        match effect.polarity {
                            Polarity::Increases => rollup.increasing.push(hit),
                            Polarity::Decreases => rollup.mitigating.push(hit),
                        }
                    }
                }
            }
            rollup
        })
        .collect();

    Ok(ScenarioReport {
        label: project.id.clone(),
        threshold,
        mode,
        contexts,
        risks,
    })
}
