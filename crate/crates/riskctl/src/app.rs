//! Operations shared by the CLI and the service.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use riskgrid::dsl::Confidence;
use riskgrid::kb::{load_seeded_kb, KbStore, KnowledgeBase};
use riskgrid::project::ProjectAssessment;
use riskgrid::{FactorKind, Scope};

use crate::error::AppError;

/// Loads a project from TOML, or from JSON when the extension is `.json`.
pub fn load_project(path: &Path) -> Result<ProjectAssessment, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path.display(), e))?;
    let project = if path.extension().is_some_and(|e| e == "json") {
        let value = serde_json::from_str(&text)
            .map_err(|e| AppError::invalid("format", format!("{}: {e}", path.display())))?;
        ProjectAssessment::from_json_value(value)?
    } else {
        ProjectAssessment::from_toml_str(&text)?
    };
    Ok(project)
}

pub fn default_kb_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("kb")
}

/// Knowledge base for read-only commands. An explicit path is opened (and
/// initialised if it is a missing directory); otherwise the data directory's
/// store is used when present, else the built-in seed.
pub fn read_kb(kb: Option<&Path>, data_dir: &Path) -> Result<KnowledgeBase, AppError> {
    if let Some(path) = kb {
        return Ok(KbStore::open(path)?.1);
    }
    let dir = default_kb_dir(data_dir);
    if dir.exists() {
        Ok(KbStore::open(dir)?.1)
    } else {
        Ok(load_seeded_kb()?)
    }
}

/// Store for commands that write, created from the seed if missing.
pub fn writable_kb(
    kb: Option<&Path>,
    data_dir: &Path,
) -> Result<(KbStore, KnowledgeBase), AppError> {
    let path = kb.map_or_else(|| default_kb_dir(data_dir), Path::to_path_buf);
    Ok(KbStore::open(path)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorEntry {
    pub id: String,
    pub name: String,
    pub kind: FactorKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorGroup {
    pub scope: Scope,
    pub label: &'static str,
    pub factors: Vec<FactorEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorCatalogView {
    pub kb_version: u64,
    pub groups: Vec<FactorGroup>,
}

pub fn factor_catalog(kb: &KnowledgeBase) -> FactorCatalogView {
    let groups = Scope::ALL
        .iter()
        .map(|&scope| FactorGroup {
            scope,
            label: scope.category_label(),
            factors: kb
                .rulebase()
                .factors()
                .in_scope(scope)
                .map(|f| FactorEntry {
                    id: f.id.clone(),
                    name: f.name.clone(),
                    kind: f.kind.clone(),
                })
                .collect(),
        })
        .collect();
    FactorCatalogView {
        kb_version: kb.version(),
        groups,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleEntry {
    pub id: u32,
    pub expression: String,
    pub effects: Vec<String>,
    pub description: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub provenance: String,
    pub confidence: Confidence,
    pub retired: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleListView {
    pub kb_version: u64,
    pub rules: Vec<RuleEntry>,
}

pub fn rule_list(kb: &KnowledgeBase) -> RuleListView {
    RuleListView {
        kb_version: kb.version(),
        rules: kb
            .rulebase()
            .rules()
            .iter()
            .map(|r| RuleEntry {
                id: r.id,
                expression: r.expr.to_string(),
                effects: r.effects.iter().map(ToString::to_string).collect(),
                description: r.description.clone(),
                provenance: r.provenance.clone(),
                confidence: r.confidence,
                retired: r.retired,
            })
            .collect(),
    }
}

/// Label for a variant loaded from `path`: the file stem.
pub fn variant_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
