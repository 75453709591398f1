//! Report documents shared by the CLI and the service. Rendering depends only
//! on the knowledge base, the project, the threshold and the mode.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use riskgrid::kb::KnowledgeBase;
use riskgrid::project::{assess_project, compare_scenarios, ProjectAssessment, Variant};
use riskgrid::{EvalMode, Relevance, Rule, ScaleLevel};

use crate::error::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!(
                "unknown format `{other}` (expected text, json or csv)"
            )),
        }
    }
}

impl Format {
    pub fn content_type(self) -> &'static str {
        match self {
            Format::Text => "text/plain; charset=utf-8",
            Format::Json => "application/json",
            Format::Csv => "text/csv; charset=utf-8",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskMeta {
    pub id: String,
    pub name: String,
    pub site: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiteMeta {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectMeta {
    pub id: String,
    pub name: Option<String>,
    pub coordinating_site: String,
    pub sites: Vec<SiteMeta>,
    pub tasks: Vec<TaskMeta>,
}

impl ProjectMeta {
    fn of(project: &ProjectAssessment) -> Self {
        ProjectMeta {
            id: project.id.clone(),
            name: project.name.clone(),
            coordinating_site: project.coordinating_site.clone(),
            sites: project
                .sites
                .iter()
                .map(|s| SiteMeta {
                    id: s.id.clone(),
                    name: s.name.clone(),
                })
                .collect(),
            tasks: project
                .tasks
                .iter()
                .map(|t| TaskMeta {
                    id: t.id.clone(),
                    name: t.name.clone(),
                    site: project.assignments.get(&t.id).cloned(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedRule {
    pub rule_id: u32,
    pub expression: String,
    pub relevance: ScaleLevel,
    pub effects: Vec<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndeterminateRule {
    pub rule_id: u32,
    pub expression: String,
    pub missing: Vec<String>,
    pub effects: Vec<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextSection {
    pub task: String,
    pub remote_site: String,
    pub counterpart_site: String,
    pub ranked: Vec<RankedRule>,
    pub indeterminate: Vec<IndeterminateRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RiskRef {
    pub task: String,
    pub remote_site: String,
    pub rule_id: u32,
    pub relevance: ScaleLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RiskSummary {
    pub risk: String,
    pub name: String,
    pub increasing: Vec<RiskRef>,
    pub mitigating: Vec<RiskRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportDocument {
    pub project: ProjectMeta,
    pub kb_version: u64,
    pub threshold: ScaleLevel,
    pub mode: EvalMode,
    pub contexts: Vec<ContextSection>,
    pub risks: Vec<RiskSummary>,
}

fn effects_of(rule: &Rule) -> Vec<String> {
    rule.effects.iter().map(ToString::to_string).collect()
}

impl ReportDocument {
    pub fn build(
        project: &ProjectAssessment,
        kb: &KnowledgeBase,
        threshold: ScaleLevel,
        mode: EvalMode,
    ) -> Result<Self, AppError> {
        let rulebase = kb.rulebase();
        let scenario = assess_project(project, rulebase, threshold, mode)?;
        let rule = |id: u32| rulebase.rule(id).expect("evaluated rules exist");
        let contexts = scenario
            .contexts
            .iter()
            .map(|ctx| ContextSection {
                task: ctx.context.task.clone(),
                remote_site: ctx.context.remote_site.clone(),
                counterpart_site: ctx.context.counterpart_site.clone(),
                ranked: ctx
                    .ranking
                    .ranked
                    .iter()
                    .map(|r| {
                        let rule = rule(r.rule_id);
                        RankedRule {
                            rule_id: r.rule_id,
                            expression: rule.expr.to_string(),
                            relevance: r.relevance.level().expect("ranked entries are determinate"),
                            effects: effects_of(rule),
                            description: rule.description.clone(),
                        }
                    })
                    .collect(),
                indeterminate: ctx
                    .ranking
                    .indeterminate
                    .iter()
                    .map(|r| {
                        let rule = rule(r.rule_id);
                        let missing = match &r.relevance {
                            Relevance::Indeterminate(m) => m.iter().cloned().collect(),
                            Relevance::Level(_) => Vec::new(),
                        };
                        IndeterminateRule {
                            rule_id: r.rule_id,
                            expression: rule.expr.to_string(),
                            missing,
                            effects: effects_of(rule),
                            description: rule.description.clone(),
                        }
                    })
                    .collect(),
            })
            .collect();
        let refs = |hits: &[riskgrid::project::RiskHit]| -> Vec<RiskRef> {
            hits.iter()
                .map(|h| RiskRef {
                    task: h.task.clone(),
                    remote_site: h.remote_site.clone(),
                    rule_id: h.rule_id,
                    relevance: h.level,
                })
                .collect()
        };
        let risks = scenario
            .risks
            .iter()
            .map(|r| RiskSummary {
                risk: r.risk.clone(),
                name: rulebase
                    .risks()
                    .get(&r.risk)
                    .map(|d| d.name.clone())
                    .unwrap_or_default(),
                increasing: refs(&r.increasing),
                mitigating: refs(&r.mitigating),
            })
            .collect();
        Ok(ReportDocument {
            project: ProjectMeta::of(project),
            kb_version: kb.version(),
            threshold,
            mode,
            contexts,
            risks,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Text => self.to_text(),
            Format::Csv => self.to_csv(),
        }
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        let p = &self.project;
        match &p.name {
            Some(name) => writeln!(out, "Project {} ({name})", p.id),
            None => writeln!(out, "Project {}", p.id),
        }
        .unwrap();
        writeln!(out, "Coordinating site: {}", p.coordinating_site).unwrap();
        writeln!(out, "Knowledge base version: {}", self.kb_version).unwrap();
        writeln!(out, "Threshold: {}  Mode: {}", self.threshold, self.mode).unwrap();
        writeln!(out).unwrap();
        writeln!(out, "Sites").unwrap();
        for s in &p.sites {
            writeln!(out, "  {}  {}", s.id, s.name).unwrap();
        }
        writeln!(out, "Tasks").unwrap();
        for t in &p.tasks {
            let site = t.site.as_deref().unwrap_or("unassigned");
            writeln!(out, "  {}  {} -> {site}", t.id, t.name).unwrap();
        }
        for ctx in &self.contexts {
            writeln!(out).unwrap();
            writeln!(
                out,
                "== Task {} at {} (counterpart {}) ==",
                ctx.task, ctx.remote_site, ctx.counterpart_site
            )
            .unwrap();
            if ctx.ranked.is_empty() {
                writeln!(out, "No rules at or above {}.", self.threshold).unwrap();
            }
            for r in &ctx.ranked {
                writeln!(
                    out,
                    "[{}] rule {}: {} -> {}",
                    r.relevance,
                    r.rule_id,
                    r.expression,
                    r.effects.join(", ")
                )
                .unwrap();
                writeln!(out, "    {}", r.description).unwrap();
            }
            if !ctx.indeterminate.is_empty() {
                writeln!(out, "Indeterminate:").unwrap();
                for r in &ctx.indeterminate {
                    writeln!(
                        out,
                        "  rule {}: missing {}",
                        r.rule_id,
                        r.missing.join(", ")
                    )
                    .unwrap();
                }
            }
        }
        writeln!(out).unwrap();
        writeln!(out, "== Risks ==").unwrap();
        for risk in &self.risks {
            let list = |refs: &[RiskRef]| {
                if refs.is_empty() {
                    "none".to_string()
                } else {
                    refs.iter()
                        .map(|r| {
                            format!(
                                "rule {} {}@{} {}",
                                r.rule_id, r.task, r.remote_site, r.relevance
                            )
                        })
                        .collect::<Vec<_>>()
                        .join("; ")
                }
            };
            writeln!(out, "{}", risk.risk).unwrap();
            writeln!(out, "  raised by: {}", list(&risk.increasing)).unwrap();
            writeln!(out, "  mitigated by: {}", list(&risk.mitigating)).unwrap();
        }
        out
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "task",
            "remote_site",
            "status",
            "rule_id",
            "relevance",
            "expression",
            "effects",
            "missing",
            "description",
        ])
        .unwrap();
        for ctx in &self.contexts {
            for r in &ctx.ranked {
                w.write_record([
                    ctx.task.as_str(),
                    &ctx.remote_site,
                    "ranked",
                    &r.rule_id.to_string(),
                    r.relevance.as_str(),
                    &r.expression,
                    &r.effects.join("; "),
                    "",
                    &r.description,
                ])
                .unwrap();
            }
            for r in &ctx.indeterminate {
                w.write_record([
                    ctx.task.as_str(),
                    &ctx.remote_site,
                    "indeterminate",
                    &r.rule_id.to_string(),
                    "",
                    &r.expression,
                    &r.effects.join("; "),
                    &r.missing.join("; "),
                    &r.description,
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompareCell {
    pub site: Option<String>,
    /// A level name, `indeterminate`, or absent when the task is unassigned.
    pub relevance: Option<String>,
    pub reported: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompareRow {
    pub task: String,
    pub rule_id: u32,
    pub expression: String,
    pub cells: Vec<CompareCell>,
    pub delta: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RiskCountRow {
    pub task: String,
    pub risk: String,
    /// `[increasing, mitigating]` per variant.
    pub counts: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComparisonDocument {
    pub kb_version: u64,
    pub threshold: ScaleLevel,
    pub mode: EvalMode,
    pub variants: Vec<String>,
    pub rows: Vec<CompareRow>,
    pub risks: Vec<RiskCountRow>,
}

impl ComparisonDocument {
    pub fn build(
        variants: &[Variant],
        kb: &KnowledgeBase,
        threshold: ScaleLevel,
        mode: EvalMode,
    ) -> Result<Self, AppError> {
        if variants.len() < 2 {
            return Err(AppError::invalid(
                "compare",
                "compare needs at least two variants",
            ));
        }
        let rulebase = kb.rulebase();
        let cmp = compare_scenarios(variants, rulebase, threshold, mode)?;
        let rows = cmp
            .rows
            .iter()
            .map(|row| CompareRow {
                task: row.task.clone(),
                rule_id: row.rule_id,
                expression: rulebase
                    .rule(row.rule_id)
                    .map(|r| r.expr.to_string())
                    .unwrap_or_default(),
                cells: row
                    .cells
                    .iter()
                    .map(|c| CompareCell {
                        site: c.site.clone(),
                        relevance: c.relevance.as_ref().map(ToString::to_string),
                        reported: c.reported,
                    })
                    .collect(),
                delta: row.status_differs(),
            })
            .collect();
        let risks = cmp
            .risk_rows
            .iter()
            .map(|r| RiskCountRow {
                task: r.task.clone(),
                risk: r.risk.clone(),
                counts: r
                    .cells
                    .iter()
                    .map(|c| [c.increasing, c.mitigating])
                    .collect(),
            })
            .collect();
        Ok(ComparisonDocument {
            kb_version: kb.version(),
            threshold,
            mode,
            variants: cmp.labels,
            rows,
            risks,
        })
    }

    pub fn delta(&self) -> impl Iterator<Item = &CompareRow> {
        self.rows.iter().filter(|r| r.delta)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => to_json(self),
            Format::Text => self.to_text(),
            Format::Csv => self.to_csv(),
        }
    }

    fn cell_text(cell: &CompareCell) -> String {
        match (&cell.relevance, cell.reported) {
            (None, _) => "-".into(),
            (Some(level), true) => format!("{level} *"),
            (Some(level), false) => level.clone(),
        }
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "Knowledge base version: {}", self.kb_version).unwrap();
        writeln!(out, "Threshold: {}  Mode: {}", self.threshold, self.mode).unwrap();
        writeln!(out, "Variants: {}", self.variants.join(", ")).unwrap();
        writeln!(out, "Reported rules are marked with *.").unwrap();
        let shown: Vec<&CompareRow> = self
            .rows
            .iter()
            .filter(|r| r.cells.iter().any(|c| c.reported))
            .collect();
        let mut task = None;
        for row in &shown {
            if task != Some(&row.task) {
                task = Some(&row.task);
                let sites: Vec<String> = self
                    .variants
                    .iter()
                    .zip(&row.cells)
                    .map(|(label, c)| format!("{label}@{}", c.site.as_deref().unwrap_or("-")))
                    .collect();
                writeln!(out).unwrap();
                writeln!(out, "== Task {} : {} ==", row.task, sites.join(" | ")).unwrap();
            }
            let cells: Vec<String> = row.cells.iter().map(Self::cell_text).collect();
            writeln!(
                out,
                "rule {:>3}  {}  ({})",
                row.rule_id,
                cells.join(" | "),
                row.expression
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "== Delta ==").unwrap();
        let delta: Vec<&CompareRow> = self.delta().collect();
        if delta.is_empty() {
            writeln!(out, "No differences in reported rules.").unwrap();
        }
        for row in delta {
            let cells: Vec<String> = self
                .variants
                .iter()
                .zip(&row.cells)
                .map(|(label, c)| {
                    let status = if c.reported { "reported" } else { "filtered" };
                    format!(
                        "{label} {status} ({})",
                        c.relevance.as_deref().unwrap_or("unassigned")
                    )
                })
                .collect();
            writeln!(
                out,
                "rule {} on {}: {}",
                row.rule_id,
                row.task,
                cells.join(", ")
            )
            .unwrap();
        }
        out
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "task".to_string(),
            "rule_id".to_string(),
            "delta".to_string(),
        ];
        for label in &self.variants {
            header.push(format!("{label}_site"));
            header.push(format!("{label}_relevance"));
            header.push(format!("{label}_reported"));
        }
        w.write_record(&header).unwrap();
        for row in &self.rows {
            let mut record = vec![
                row.task.clone(),
                row.rule_id.to_string(),
                row.delta.to_string(),
            ];
            for c in &row.cells {
                record.push(c.site.clone().unwrap_or_default());
                record.push(c.relevance.clone().unwrap_or_default());
                record.push(c.reported.to_string());
            }
            w.write_record(&record).unwrap();
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}
