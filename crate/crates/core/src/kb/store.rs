//! On-disk layout of a knowledge-base directory:
//!
//! * `base.rules` the rulebase the changelog starts from
//! * `changelog.jsonl` one [`UpdateEvent`] per line
//! * `rulebase.rules` snapshot of the current state, checked on load

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::Utc;

use super::seed::seed_rulebase;
use super::{KbError, KnowledgeBase, UpdateEvent};
use crate::dsl::{parse_rulebase, Rulebase};

const BASE: &str = "base.rules";
const CHANGELOG: &str = "changelog.jsonl";
const SNAPSHOT: &str = "rulebase.rules";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Backing {
    Directory(PathBuf),
    /// A bare rulebase document, served read-only as version 1.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbStore {
    backing: Backing,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KbError + '_ {
    move |source| KbError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read(path: &Path) -> Result<String, KbError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes through a temporary file so readers never see a torn snapshot.
fn write_atomic(path: &Path, contents: &str) -> Result<(), KbError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn parse_changelog(path: &Path, text: &str) -> Result<Vec<UpdateEvent>, KbError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| KbError::Corrupt(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

impl KbStore {
    /// Opens `path`. A missing or empty directory is initialised from the
    /// built-in seed; an existing file is read as a plain rulebase.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, KnowledgeBase), KbError> {
        let path = path.as_ref();
        if path.is_file() {
            let text = read(path)?;
            let rulebase = parse_rulebase(&text)
                .map_err(|e| KbError::Corrupt(format!("{}: {e}", path.display())))?;
            let store = KbStore {
                backing: Backing::File(path.to_path_buf()),
            };
            return Ok((store, KnowledgeBase::genesis(rulebase, Utc::now())));
        }
        let empty = !path.exists() || fs::read_dir(path).map_err(io_err(path))?.next().is_none();
        if empty {
            return Self::init(path, seed_rulebase()?);
        }
        let store = KbStore {
            backing: Backing::Directory(path.to_path_buf()),
        };
        let kb = store.load()?;
        Ok((store, kb))
    }

    /// Creates a store at `dir` whose history starts at `base`.
    pub fn init(dir: impl AsRef<Path>, base: Rulebase) -> Result<(Self, KnowledgeBase), KbError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let kb = KnowledgeBase::genesis(base, Utc::now());
        let document = kb.rulebase().to_document();
        write_atomic(&dir.join(BASE), &document)?;
        let mut log = String::new();
        for event in kb.changelog() {
            log.push_str(&serde_json::to_string(event).expect("events serialize"));
            log.push('\n');
        }
        write_atomic(&dir.join(CHANGELOG), &log)?;
        write_atomic(&dir.join(SNAPSHOT), &document)?;
        let store = KbStore {
            backing: Backing::Directory(dir.to_path_buf()),
        };
        Ok((store, kb))
    }

    pub fn path(&self) -> &Path {
        match &self.backing {
            Backing::Directory(p) | Backing::File(p) => p,
        }
    }

    pub fn is_read_only(&self) -> bool {
        matches!(self.backing, Backing::File(_))
    }

    fn dir(&self) -> Result<&Path, KbError> {
        match &self.backing {
            Backing::Directory(dir) => Ok(dir),
            Backing::File(file) => Err(KbError::ReadOnly(file.display().to_string())),
        }
    }

    fn load(&self) -> Result<KnowledgeBase, KbError> {
        let dir = self.dir()?;
        let base_path = dir.join(BASE);
        let log_path = dir.join(CHANGELOG);
        let snapshot_path = dir.join(SNAPSHOT);
        for required in [&base_path, &log_path, &snapshot_path] {
            if !required.is_file() {
                return Err(KbError::Corrupt(format!(
                    "{} is missing",
                    required.display()
                )));
            }
        }
        let base = parse_rulebase(&read(&base_path)?)
            .map_err(|e| KbError::Corrupt(format!("{}: {e}", base_path.display())))?;
        let events = parse_changelog(&log_path, &read(&log_path)?)?;
        let kb = KnowledgeBase::replay(base, &events)?;
        if read(&snapshot_path)? != kb.rulebase().to_document() {
            return Err(KbError::Corrupt(format!(
                "{} does not match the replayed changelog at version {}",
                snapshot_path.display(),
                kb.version()
            )));
        }
        Ok(kb)
    }

    /// Persists the events of `kb` newer than `previous_version`. Fails with
    /// a conflict if the stored history has moved on since it was read.
    pub fn commit(&self, previous_version: u64, kb: &KnowledgeBase) -> Result<(), KbError> {
        let dir = self.dir()?;
        let log_path = dir.join(CHANGELOG);
        let stored = parse_changelog(&log_path, &read(&log_path)?)?;
        let actual = stored.last().map_or(0, |e| e.version);
        if actual != previous_version {
            return Err(KbError::VersionConflict {
                expected: previous_version,
                actual,
            });
        }
        let mut lines = String::new();
        for event in kb
            .changelog()
            .iter()
            .filter(|e| e.version > previous_version)
        {
            lines.push_str(&serde_json::to_string(event).expect("events serialize"));
            lines.push('\n');
        }
        let mut file = fs::OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(io_err(&log_path))?;
        file.write_all(lines.as_bytes())
            .map_err(io_err(&log_path))?;
        file.sync_all().map_err(io_err(&log_path))?;
        write_atomic(&dir.join(SNAPSHOT), &kb.rulebase().to_document())
    }
}
