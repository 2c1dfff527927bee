//! Run configuration shared by the CLI, the controller, and the harness.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::accounting::{CostModel, StopPolicy};
use crate::domain::JobMode;
use crate::sandbox::SandboxConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderSelection {
    /// Replay a fixture file; no network, deterministic simulated time.
    Scripted { fixture: PathBuf },
    /// Chat-completions endpoint; credentials come from `api_key_env`.
    Http {
        endpoint: String,
        #[serde(default = "default_api_key_env")]
        api_key_env: String,
    },
}

fn default_api_key_env() -> String {
    "PENTORA_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineSelection {
    /// In-process runtime: commands run in isolated host temp dirs.
    Fake,
    /// CLI-compatible container engine.
    Docker {
        #[serde(default = "default_engine_binary")]
        binary: String,
        #[serde(default)]
        endpoint: Option<String>,
    },
}

fn default_engine_binary() -> String {
    "docker".into()
}

/// A provider paired with the clock that meters it.
pub type ProviderWithClock = (
    std::sync::Arc<dyn crate::gateway::Provider>,
    std::sync::Arc<dyn crate::clock::Clock>,
);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: JobMode,
    pub provider: ProviderSelection,
    pub model: String,
    pub cost_model: CostModel,
    pub stop_policy: StopPolicy,
    pub engine: EngineSelection,
    /// Tool image for the job container.
    pub image: String,
    /// Network the job container joins; defaults to a job-scoped name.
    #[serde(default)]
    pub network: Option<String>,
    /// Job networks are created without general egress by default.
    #[serde(default = "default_true")]
    pub network_internal: bool,
    pub parallelism: usize,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub anonymize: bool,
    /// Bound on the global retry loop.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    /// Step cap for one delegated sandbox agent.
    #[serde(default = "default_max_delegate_steps")]
    pub max_delegate_steps: u32,
    /// Safety valve per agent loop when all budget thresholds are disabled.
    #[serde(default = "default_max_steps_per_agent")]
    pub max_steps_per_agent: u32,
    /// Validation refinement rounds after a failing PoC.
    #[serde(default = "default_refinement_rounds")]
    pub validation_refinement_rounds: u32,
    #[serde(default)]
    pub sandbox: SandboxConfig,
    #[serde(default)]
    pub prompt_dir: Option<PathBuf>,
    /// Job-scoped secrets injected into the container and purged at teardown.
    #[serde(default)]
    pub secrets: BTreeMap<String, String>,
    #[serde(default)]
    pub webhook_url: Option<String>,
}

fn default_true() -> bool {
    true
}
fn default_max_attempts() -> u32 {
    3
}
fn default_max_delegate_steps() -> u32 {
    12
}
fn default_max_steps_per_agent() -> u32 {
    256
}
fn default_refinement_rounds() -> u32 {
    2
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: JobMode::Ctf,
            provider: ProviderSelection::Http {
                endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
                api_key_env: default_api_key_env(),
            },
            model: "default".into(),
            cost_model: CostModel::default(),
            stop_policy: StopPolicy::default(),
            engine: EngineSelection::Fake,
            image: "pentora-toolbox".into(),
            network: None,
            network_internal: true,
            parallelism: 4,
            out_dir: PathBuf::from("pentora-out"),
            anonymize: false,
            max_attempts: default_max_attempts(),
            max_delegate_steps: default_max_delegate_steps(),
            max_steps_per_agent: default_max_steps_per_agent(),
            validation_refinement_rounds: default_refinement_rounds(),
            sandbox: SandboxConfig::default(),
            prompt_dir: None,
            secrets: BTreeMap::new(),
            webhook_url: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if let ProviderSelection::Scripted { fixture } = &self.provider {
            if fixture.as_os_str().is_empty() {
                return Err("scripted provider requires a fixture path".into());
            }
        }
        self.cost_model.validate()?;
        self.stop_policy.validate()?;
        if self.parallelism == 0 {
            return Err("parallelism must be at least 1".into());
        }
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        Ok(())
    }

    pub fn network_for(&self, job_id: &str) -> String {
        self.network
            .clone()
            .unwrap_or_else(|| format!("pentora-{job_id}"))
    }

    /// Instantiate the configured provider together with its time source.
    ///
    /// Scripted runs get a virtual clock advanced by the fixture's declared
    /// latencies, so recorded wall-clock figures are deterministic;
    /// `fixture_override` lets the suite harness point one run at a
    /// per-challenge fixture file. `substitutions` are applied literally to
    /// the fixture text (`{target_url}` and friends).
    pub fn build_provider(
        &self,
        fixture_override: Option<&std::path::Path>,
        substitutions: &[(&str, &str)],
    ) -> Result<ProviderWithClock, String> {
        use std::sync::Arc;
        match &self.provider {
            ProviderSelection::Scripted { fixture } => {
                let path = fixture_override.unwrap_or(fixture.as_path());
                let clock = crate::clock::VirtualClock::new();
                let provider = crate::gateway::load_fixture(path, substitutions)
                    .map_err(|e| e.to_string())?
                    .with_clock(clock.clone());
                Ok((Arc::new(provider), Arc::new(clock)))
            }
            ProviderSelection::Http {
                endpoint,
                api_key_env,
            } => {
                let provider = crate::gateway::http::HttpProvider::new(
                    crate::gateway::http::HttpProviderConfig {
                        endpoint: endpoint.clone(),
                        api_key_env: api_key_env.clone(),
                        model: self.model.clone(),
                        timeout_secs: 120,
                    },
                );
                Ok((Arc::new(provider), Arc::new(crate::clock::SystemClock)))
            }
        }
    }

    /// Instantiate the configured container runtime. The docker engine is
    /// probed here, so configuration errors surface before any container is
    /// created.
    pub fn build_runtime(
        &self,
    ) -> Result<std::sync::Arc<dyn crate::sandbox::ContainerRuntime>, String> {
        use std::sync::Arc;
        match &self.engine {
            EngineSelection::Fake => Ok(Arc::new(crate::sandbox::FakeRuntime::new())),
            EngineSelection::Docker { binary, endpoint } => {
                let runtime = crate::sandbox::DockerRuntime::new(binary.clone(), endpoint.clone());
                runtime.probe().map_err(|e| e.to_string())?;
                Ok(Arc::new(runtime))
            }
        }
    }
}
