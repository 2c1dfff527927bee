//! Per-job container lifecycle and in-container execution.
//!
//! One fresh container per job, shared by all of that job's agents. The
//! [`SandboxManager`] enforces handle uniqueness, stream truncation, and
//! graceful teardown with secret purging; the engine behind it is swappable
//! via [`ContainerRuntime`] (a real CLI-driven engine or the in-process
//! [`FakeRuntime`]).

pub mod docker;
pub mod fake;
pub mod runtime;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use docker::DockerRuntime;
pub use fake::FakeRuntime;
pub use runtime::{ContainerRuntime, ContainerSpec, ExecPayload, RawExec, TIMEOUT_EXIT_CODE};

use crate::clock::{Clock, TimestampMs};
use crate::store::RunDir;

#[derive(Debug, thiserror::Error)]
pub enum SandboxError {
    #[error("container engine unavailable: {0}")]
    EngineUnavailable(String),
    #[error("image missing: {0}")]
    ImageMissing(String),
    #[error("a live container already exists for job {0}")]
    DuplicateContainer(String),
    #[error("container is dead: {0}")]
    DeadContainer(String),
    #[error("script interpreter missing: {0}")]
    InterpreterMissing(String),
    #[error("no recording for command: {0}")]
    ReplayMiss(String),
    #[error("io error: {0}")]
    Io(String),
}

impl SandboxError {
    pub(crate) fn io(e: std::io::Error) -> Self {
        SandboxError::Io(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Job-scoped credentials injected into the container environment at job
/// start and purged at teardown.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SecretScope {
    pub entries: BTreeMap<String, String>,
    pub purged: bool,
}

impl SecretScope {
    pub fn new<I: IntoIterator<Item = (String, String)>>(entries: I) -> Self {
        Self {
            entries: entries.into_iter().collect(),
            purged: false,
        }
    }

    pub fn values(&self) -> Vec<String> {
        self.entries.values().cloned().collect()
    }

    pub fn purge(&mut self) {
        self.entries.clear();
        self.purged = true;
    }
}

/// Reference to one job's container. Clones share liveness, so teardown is
/// visible to every agent holding the handle.
#[derive(Debug, Clone)]
pub struct ContainerHandle {
    pub job_id: String,
    pub runtime_id: String,
    pub image: String,
    pub network: String,
    pub created_at_ms: TimestampMs,
    alive: Arc<AtomicBool>,
}

impl ContainerHandle {
    pub fn alive(&self) -> bool {
        self.alive.load(Ordering::SeqCst)
    }

    fn mark_dead(&self) {
        self.alive.store(false, Ordering::SeqCst);
    }
}

/// Truncated, bounded outcome of one in-container execution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecResult {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
    pub duration_ms: u64,
    /// True iff either stream was cut by the output cap.
    pub truncated: bool,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandboxConfig {
    /// Per-stream cap; head+tail retained around the cut.
    pub output_cap_bytes: usize,
    pub head_bytes: usize,
    pub tail_bytes: usize,
    pub default_timeout_secs: u64,
    pub interpreter: String,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            output_cap_bytes: 64 * 1024,
            head_bytes: 48 * 1024,
            tail_bytes: 16 * 1024,
            default_timeout_secs: 120,
            interpreter: "python3".into(),
        }
    }
}

impl SandboxConfig {
    pub fn default_timeout(&self) -> Duration {
        Duration::from_secs(self.default_timeout_secs)
    }
}

/// Cut a stream to the configured cap keeping its head and tail.
fn truncate_stream(text: &str, config: &SandboxConfig) -> (String, bool) {
    if text.len() <= config.output_cap_bytes {
        return (text.to_string(), false);
    }
    let head_end = floor_char_boundary(text, config.head_bytes);
    let tail_start = ceil_char_boundary(text, text.len() - config.tail_bytes.min(text.len()));
    let cut = text.len() - head_end - (text.len() - tail_start);
    (
        format!(
            "{}\n...[{} bytes truncated]...\n{}",
            &text[..head_end],
            cut,
            &text[tail_start..]
        ),
        true,
    )
}

fn floor_char_boundary(s: &str, mut idx: usize) -> usize {
    idx = idx.min(s.len());
    while idx > 0 && !s.is_char_boundary(idx) {
        idx -= 1;
    }
    idx
}

fn ceil_char_boundary(s: &str, mut idx: usize) -> usize {
    idx = idx.min(s.len());
    while idx < s.len() && !s.is_char_boundary(idx) {
        idx += 1;
    }
    idx
}

// ---------------------------------------------------------------------------
// Manager
// ---------------------------------------------------------------------------

/// Owns the job-id → container registry on top of a runtime.
///
/// Create/teardown for a given job are serialized by the registry lock;
/// exec calls run concurrently against the engine.
pub struct SandboxManager {
    runtime: Arc<dyn ContainerRuntime>,
    config: SandboxConfig,
    clock: Arc<dyn Clock>,
    handles: Mutex<HashMap<String, ContainerHandle>>,
}

impl SandboxManager {
    pub fn new(
        runtime: Arc<dyn ContainerRuntime>,
        config: SandboxConfig,
        clock: Arc<dyn Clock>,
    ) -> Self {
        Self {
            runtime,
            config,
            clock,
            handles: Mutex::new(HashMap::new()),
        }
    }

    pub fn runtime(&self) -> &Arc<dyn ContainerRuntime> {
        &self.runtime
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    /// Later agents of the same job resolve to the already-registered handle.
    pub fn handle_for(&self, job_id: &str) -> Option<ContainerHandle> {
        self.handles
            .lock()
            .unwrap()
            .get(job_id)
            .filter(|h| h.alive())
            .cloned()
    }

    /// Start the job's container with secrets injected as environment
    /// entries. Exactly one container is ever associated with a job:
    /// repeated creation is rejected even after teardown.
    pub fn create_job_container(
        &self,
        job_id: &str,
        image: &str,
        network: &str,
        secrets: &SecretScope,
    ) -> Result<ContainerHandle, SandboxError> {
        let mut handles = self.handles.lock().unwrap();
        if handles.contains_key(job_id) {
            return Err(SandboxError::DuplicateContainer(job_id.to_string()));
        }
        let spec = ContainerSpec {
            job_id: job_id.to_string(),
            image: image.to_string(),
            network: network.to_string(),
            env: secrets.entries.clone(),
        };
        let runtime_id = self.runtime.create(&spec)?;
        let handle = ContainerHandle {
            job_id: job_id.to_string(),
            runtime_id,
            image: image.to_string(),
            network: network.to_string(),
            created_at_ms: self.clock.now_ms(),
            alive: Arc::new(AtomicBool::new(true)),
        };
        handles.insert(job_id.to_string(), handle.clone());
        Ok(handle)
    }

    fn exec(
        &self,
        handle: &ContainerHandle,
        payload: ExecPayload,
        timeout: Option<Duration>,
    ) -> Result<ExecResult, SandboxError> {
        if !handle.alive() {
            return Err(SandboxError::DeadContainer(handle.job_id.clone()));
        }
        let timeout = timeout.unwrap_or_else(|| self.config.default_timeout());
        let raw = self.runtime.exec(&handle.runtime_id, &payload, timeout)?;
        if let ExecPayload::Script { interpreter, .. } = &payload {
            // 127 from the in-container shell means the interpreter binary
            // was not found.
            if raw.exit_code == 127 && raw.stderr.contains("not found") {
                return Err(SandboxError::InterpreterMissing(interpreter.clone()));
            }
        }
        let (stdout, out_cut) = truncate_stream(&raw.stdout, &self.config);
        let (stderr, err_cut) = truncate_stream(&raw.stderr, &self.config);
        Ok(ExecResult {
            stdout,
            stderr,
            exit_code: if raw.timed_out {
                TIMEOUT_EXIT_CODE
            } else {
                raw.exit_code
            },
            duration_ms: raw.duration.min(timeout).as_millis() as u64,
            truncated: out_cut || err_cut,
            timed_out: raw.timed_out,
        })
    }

    /// Run a shell command in the job container.
    pub fn exec_command(
        &self,
        handle: &ContainerHandle,
        command: &str,
        timeout: Option<Duration>,
    ) -> Result<ExecResult, SandboxError> {
        self.exec(handle, ExecPayload::Shell(command.to_string()), timeout)
    }

    /// Write `source` to a job-scoped temp file inside the container and run
    /// it with the configured interpreter.
    pub fn exec_script(
        &self,
        handle: &ContainerHandle,
        source: &str,
        timeout: Option<Duration>,
    ) -> Result<ExecResult, SandboxError> {
        self.exec(
            handle,
            ExecPayload::Script {
                interpreter: self.config.interpreter.clone(),
                source: source.to_string(),
            },
            timeout,
        )
    }

    /// Stop and remove the job container, purging job-scoped secrets.
    ///
    /// Idempotent: tearing down a dead handle succeeds. An unreachable
    /// engine is retried once and then recorded as a leak for operator
    /// action; the handle is considered dead either way.
    pub fn teardown(
        &self,
        handle: &ContainerHandle,
        secrets: &mut SecretScope,
        run_dir: Option<&RunDir>,
    ) -> Result<(), SandboxError> {
        let was_alive = handle.alive();
        handle.mark_dead();
        if let Some(registered) = self.handles.lock().unwrap().get(&handle.job_id) {
            registered.mark_dead();
        }

        if was_alive {
            let mut result = self.runtime.remove(&handle.runtime_id);
            if let Err(SandboxError::EngineUnavailable(_)) = result {
                result = self.runtime.remove(&handle.runtime_id);
            }
            if let Err(err) = result {
                tracing::error!(
                    job_id = %handle.job_id,
                    runtime_id = %handle.runtime_id,
                    error = %err,
                    "container teardown failed; leak recorded for operator action"
                );
                if let Some(dir) = run_dir {
                    let _ = dir.write_json(
                        "container_leak.json",
                        &serde_json::json!({
                            "job_id": handle.job_id,
                            "runtime_id": handle.runtime_id,
                            "image": handle.image,
                            "error": err.to_string(),
                        }),
                    );
                }
            }
        }
        secrets.purge();
        Ok(())
    }
}
