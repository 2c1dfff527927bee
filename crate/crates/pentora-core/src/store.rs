//! On-disk layout of run artifacts.
//!
//! One directory per job under `<out>/runs/<job-id>/`:
//!
//! ```text
//! runs/<job-id>/
//!   job.json                    self-describing job document
//!   report.json, report.md      synthesized reports
//!   evidence/<seq>_<kind>.txt   evidence bodies
//!   transcripts/<agent>.jsonl   one chat message per line
//! ```
//!
//! Every byte persisted through a [`RunDir`] passes the redaction filter, so
//! job-scoped secret values never reach disk no matter which code path wrote
//! them.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;

use crate::domain::EvidenceItem;

const REDACTED: &str = "[redacted]";

pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    /// `root` is the operator-chosen output directory; runs live under
    /// `<root>/runs`.
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn runs_root(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn create(&self, job_id: &str) -> std::io::Result<RunDir> {
        let dir = self.runs_root().join(job_id);
        std::fs::create_dir_all(dir.join("evidence"))?;
        std::fs::create_dir_all(dir.join("transcripts"))?;
        Ok(RunDir {
            dir,
            redactions: Mutex::new(Vec::new()),
            evidence_seq: Mutex::new(0),
        })
    }
}

pub struct RunDir {
    dir: PathBuf,
    redactions: Mutex<Vec<String>>,
    evidence_seq: Mutex<u32>,
}

impl RunDir {
    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Register secret values to scrub from everything written from now on.
    pub fn add_redactions<I: IntoIterator<Item = String>>(&self, values: I) {
        let mut redactions = self.redactions.lock().unwrap();
        for value in values {
            if !value.is_empty() && !redactions.contains(&value) {
                redactions.push(value);
            }
        }
    }

    fn redact(&self, text: &str) -> String {
        let redactions = self.redactions.lock().unwrap();
        let mut out = text.to_string();
        for secret in redactions.iter() {
            if out.contains(secret.as_str()) {
                out = out.replace(secret.as_str(), REDACTED);
            }
        }
        out
    }

    pub fn write_text(&self, rel: &str, text: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, self.redact(text))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> std::io::Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        self.write_text(rel, &text)
    }

    pub fn append_jsonl<T: Serialize>(&self, rel: &str, value: &T) -> std::io::Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let line = serde_json::to_string(value)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        writeln!(file, "{}", self.redact(&line))
    }

    /// Persist an evidence body; returns its path relative to the run dir.
    pub fn write_evidence(&self, item: &EvidenceItem) -> std::io::Result<String> {
        let seq = {
            let mut guard = self.evidence_seq.lock().unwrap();
            let seq = *guard;
            *guard += 1;
            seq
        };
        let kind = serde_json::to_value(item.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_else(|| "evidence".into());
        let rel = format!("evidence/{seq:03}_{kind}.txt");
        self.write_text(&rel, &item.content)?;
        Ok(rel)
    }

    /// True if `value` occurs in any file under the run directory.
    /// Grep-style check used by secret-purging tests.
    pub fn contains_text(&self, value: &str) -> std::io::Result<bool> {
        fn walk(dir: &Path, needle: &str) -> std::io::Result<bool> {
            for entry in std::fs::read_dir(dir)? {
                let entry = entry?;
                let path = entry.path();
                if path.is_dir() {
                    if walk(&path, needle)? {
                        return Ok(true);
                    }
                } else if std::fs::read_to_string(&path)
                    .map(|text| text.contains(needle))
                    .unwrap_or(false)
                {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        walk(&self.dir, value)
    }
}
