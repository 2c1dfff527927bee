//! System prompt templates.
//!
//! Prompts are a configuration surface, not code: the bundled templates are
//! compiled in as defaults and can be overridden per-file from a prompt
//! directory. Placeholders use `{name}` syntax and are replaced literally;
//! nothing from `withheld_metadata` is ever rendered.

use std::path::Path;

use crate::domain::{Job, PocArtifact};

const COORDINATOR_TEMPLATE: &str = include_str!("../../prompts/coordinator.txt");
const SANDBOX_TEMPLATE: &str = include_str!("../../prompts/sandbox.txt");
const VALIDATION_TEMPLATE: &str = include_str!("../../prompts/validation.txt");

#[derive(Debug, Clone)]
pub struct PromptSet {
    pub coordinator: String,
    pub sandbox: String,
    pub validation: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            coordinator: COORDINATOR_TEMPLATE.to_string(),
            sandbox: SANDBOX_TEMPLATE.to_string(),
            validation: VALIDATION_TEMPLATE.to_string(),
        }
    }
}

impl PromptSet {
    /// Load templates from `dir`, falling back to the bundled defaults for
    /// any file that is absent.
    pub fn load(dir: Option<&Path>) -> Self {
        let mut set = Self::default();
        if let Some(dir) = dir {
            for (name, slot) in [
                ("coordinator.txt", &mut set.coordinator),
                ("sandbox.txt", &mut set.sandbox),
                ("validation.txt", &mut set.validation),
            ] {
                if let Ok(text) = std::fs::read_to_string(dir.join(name)) {
                    *slot = text;
                }
            }
        }
        set
    }
}

pub fn render(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in substitutions {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

pub fn coordinator_prompt(set: &PromptSet, job: &Job) -> String {
    let source_section = match &job.target.source_path {
        Some(path) => format!("Local source checkout: {path}"),
        None => String::new(),
    };
    render(
        &set.coordinator,
        &[
            ("mode", &job.mode.to_string()),
            ("target_url", &job.target.url),
            ("description", &job.target.description),
            ("source_section", &source_section),
        ],
    )
}

pub fn sandbox_prompt(set: &PromptSet, job: &Job) -> String {
    render(
        &set.sandbox,
        &[
            ("mode", &job.mode.to_string()),
            ("target_url", &job.target.url),
        ],
    )
}

pub fn validation_prompt(set: &PromptSet, job: &Job, candidate: &PocArtifact) -> String {
    let oracle = serde_json::to_string(&candidate.expected_oracle).unwrap_or_default();
    let kind = serde_json::to_value(candidate.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    render(
        &set.validation,
        &[
            ("target_url", &job.target.url),
            ("kind", &kind),
            ("poc_body", &candidate.body),
            ("oracle", &oracle),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BudgetPolicy, JobMode, TargetDescriptor};

    fn job() -> Job {
        Job::new(
            "j1",
            JobMode::Ctf,
            TargetDescriptor {
                url: "http://127.0.0.1:9000/".into(),
                description: "a small notes app".into(),
                source_path: None,
                withheld_metadata: vec!["category-sentinel-xyzzy".into()],
            },
            BudgetPolicy::default(),
        )
        .unwrap()
    }

    #[test]
    fn coordinator_prompt_carries_target_but_never_withheld_metadata() {
        let prompt = coordinator_prompt(&PromptSet::default(), &job());
        assert!(prompt.contains("http://127.0.0.1:9000/"));
        assert!(prompt.contains("a small notes app"));
        assert!(prompt.contains("mode: ctf"));
        assert!(!prompt.contains("category-sentinel-xyzzy"));
    }

    #[test]
    fn prompt_dir_overrides_defaults() {
        let tmp = tempfile::tempdir().unwrap();
        std::fs::write(tmp.path().join("sandbox.txt"), "custom {target_url}").unwrap();
        let set = PromptSet::load(Some(tmp.path()));
        assert_eq!(
            sandbox_prompt(&set, &job()),
            "custom http://127.0.0.1:9000/"
        );
        // Coordinator falls back to the bundled template.
        assert!(
            set.coordinator.contains("rules of engagement")
                || set.coordinator.contains("Rules of engagement")
        );
    }
}
