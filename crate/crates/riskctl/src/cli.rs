use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use riskgrid::dsl::lint_rulebase;
use riskgrid::kb::{ChangeRequest, KbStore, KnowledgeBase};
use riskgrid::project::Variant;
use riskgrid::{EvalMode, FactorDef, FactorKind, ScaleLevel, Scope};

use crate::app::{load_project, read_kb, variant_label, writable_kb};
use crate::error::AppError;
use crate::report::{to_json, ComparisonDocument, Format, ReportDocument};

#[derive(Debug, Parser)]
#[command(
    name = "riskctl",
    version,
    about = "Identify project-specific risks of distributed development"
)]
pub struct Cli {
    /// Directory holding stored projects and the default knowledge base.
    #[arg(
        long,
        global = true,
        env = "RISKGRID_DATA",
        default_value = ".riskgrid"
    )]
    pub data_dir: PathBuf,

    /// Knowledge-base directory or plain rulebase file.
    #[arg(long, global = true)]
    pub kb: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(short = 't', long, default_value = "high")]
    pub threshold: ScaleLevel,

    #[arg(long, default_value = "strict")]
    pub mode: EvalMode,

    #[arg(long, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank the rules that apply to each task assignment of a project.
    Assess {
        #[arg(short = 'p', long)]
        project: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Compare allocation variants side by side.
    Compare {
        #[arg(required = true, num_args = 2..)]
        projects: Vec<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Inspect or update the knowledge base.
    Kb {
        #[command(subcommand)]
        action: KbCommand,
    },
    /// Report unused factors, untargeted risks and duplicate rules.
    Lint {
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum KbCommand {
    /// Record that a rule held in a finished project.
    Confirm {
        rule_id: u32,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Record that a rule did not hold in a finished project.
    Refute {
        rule_id: u32,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Add a rule, e.g. '37: staff_motivation & time_pressure -> + quality_problems'.
    AddRule {
        rule: String,
        #[arg(long, default_value = "")]
        desc: String,
        #[arg(long, default_value = "")]
        prov: String,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Replace a rule's expression and effects.
    Modify {
        rule_id: u32,
        rule: String,
        #[arg(long)]
        desc: Option<String>,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Exclude a rule from evaluation while keeping it on record.
    Retire {
        rule_id: u32,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Declare a new influencing factor.
    AddFactor {
        id: String,
        #[arg(long)]
        scope: Scope,
        /// `ordinal` or `enum(a,b,...)`.
        #[arg(long, default_value = "ordinal")]
        kind: String,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Print the changelog.
    Log {
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Print the current rulebase document.
    Show,
}

fn parse_kind(text: &str) -> Result<FactorKind, AppError> {
    let text = text.trim();
    if text == "ordinal" {
        return Ok(FactorKind::Ordinal);
    }
    text.strip_prefix("enum(")
        .and_then(|rest| rest.strip_suffix(')'))
        .map(|values| FactorKind::Enum(values.split(',').map(|v| v.trim().to_string()).collect()))
        .ok_or_else(|| {
            AppError::invalid(
                "usage",
                format!("unknown factor kind `{text}` (expected ordinal or enum(a,b,...))"),
            )
        })
}

/// Runs every command except `serve` and returns what goes to stdout.
pub fn run(cli: &Cli) -> Result<String, AppError> {
    let kb_path = cli.kb.as_deref();
    match &cli.command {
        Command::Assess { project, eval } => {
            let project = load_project(project)?;
            let kb = read_kb(kb_path, &cli.data_dir)?;
            Ok(
                ReportDocument::build(&project, &kb, eval.threshold, eval.mode)?
                    .render(eval.format),
            )
        }
        Command::Compare { projects, eval } => {
            let mut variants = Vec::new();
            let mut errors = Vec::new();
            for path in projects {
                match load_project(path) {
                    Ok(p) => variants.push(Variant::new(variant_label(path), p)),
                    Err(AppError::Invalid(items)) => errors.extend(items),
                    Err(other) => return Err(other),
                }
            }
            if !errors.is_empty() {
                return Err(AppError::Invalid(errors));
            }
            let kb = read_kb(kb_path, &cli.data_dir)?;
            Ok(
                ComparisonDocument::build(&variants, &kb, eval.threshold, eval.mode)?
                    .render(eval.format),
            )
        }
        Command::Lint { format } => {
            let kb = read_kb(kb_path, &cli.data_dir)?;
            let warnings = lint_rulebase(kb.rulebase());
            Ok(match format {
                Format::Json => to_json(&warnings),
                _ => warnings.iter().map(|w| format!("warning: {w}\n")).collect(),
            })
        }
        Command::Kb { action } => run_kb(action, kb_path, &cli.data_dir),
        Command::Serve { .. } => Err(AppError::invalid(
            "usage",
            "serve is handled by the binary entry point",
        )),
    }
}

fn commit(
    store: &KbStore,
    kb: &KnowledgeBase,
    request: ChangeRequest,
    note: &str,
) -> Result<KnowledgeBase, AppError> {
    let next = kb.apply_change(request, note)?;
    store.commit(kb.version(), &next)?;
    Ok(next)
}

fn run_kb(action: &KbCommand, kb_path: Option<&Path>, data_dir: &Path) -> Result<String, AppError> {
    match action {
        KbCommand::Log { format } => {
            let kb = read_kb(kb_path, data_dir)?;
            let mut out = String::new();
            for event in kb.changelog() {
                match format {
                    Format::Json => {
                        out.push_str(&serde_json::to_string(event).expect("events serialize"));
                        out.push('\n');
                    }
                    _ => {
                        write!(
                            out,
                            "v{}  {}  {}  {}",
                            event.version,
                            event.timestamp.to_rfc3339(),
                            event.change.kind(),
                            event.change.target()
                        )
                        .unwrap();
                        if !event.note.is_empty() {
                            write!(out, "  \"{}\"", event.note).unwrap();
                        }
                        out.push('\n');
                    }
                }
            }
            return Ok(out);
        }
        KbCommand::Show => return Ok(read_kb(kb_path, data_dir)?.rulebase().to_document()),
        _ => {}
    }

    let (store, kb) = writable_kb(kb_path, data_dir)?;
    let (request, note) = match action {
        KbCommand::Confirm { rule_id, note } => {
            (ChangeRequest::Confirm { rule_id: *rule_id }, note)
        }
        KbCommand::Refute { rule_id, note } => (ChangeRequest::Refute { rule_id: *rule_id }, note),
        KbCommand::AddRule {
            rule,
            desc,
            prov,
            note,
        } => (
            ChangeRequest::AddRule {
                rule: rule.clone(),
                description: desc.clone(),
                provenance: prov.clone(),
            },
            note,
        ),
        KbCommand::Modify {
            rule_id,
            rule,
            desc,
            note,
        } => (
            ChangeRequest::Modify {
                rule_id: *rule_id,
                rule: rule.clone(),
                description: desc.clone(),
            },
            note,
        ),
        KbCommand::Retire { rule_id, note } => {
            (ChangeRequest::RetireRule { rule_id: *rule_id }, note)
        }
        KbCommand::AddFactor {
            id,
            scope,
            kind,
            name,
            note,
        } => (
            ChangeRequest::AddFactor {
                factor: FactorDef {
                    id: id.clone(),
                    scope: *scope,
                    kind: parse_kind(kind)?,
                    name: name.clone().unwrap_or_else(|| id.clone()),
                },
            },
            note,
        ),
        KbCommand::Log { .. } | KbCommand::Show => unreachable!("handled above"),
    };
    let next = commit(&store, &kb, request, note)?;
    let event = next.changelog().last().expect("a change was recorded");
    Ok(format!(
        "{} {}; knowledge base at version {}\n",
        event.change.kind(),
        event.change.target(),
        next.version()
    ))
}
