//! In-process runtime for engine-free runs and the test suite.
//!
//! Host mode gives every container an isolated temporary directory and runs
//! commands in it with the job's environment; replay mode answers from a
//! recorded tape. Both implement [`ContainerRuntime`] so the whole job
//! lifecycle can be exercised without a container engine.

use std::collections::{BTreeMap, HashMap};
use std::process::Command;
use std::sync::Mutex;
use std::time::Duration;

use super::runtime::{run_with_timeout, ContainerRuntime, ContainerSpec, ExecPayload, RawExec};
use super::SandboxError;

enum Mode {
    Host,
    Replay {
        tape: HashMap<String, RawExec>,
        strict: bool,
    },
}

struct HostContainer {
    dir: tempfile::TempDir,
    env: BTreeMap<String, String>,
    script_seq: u32,
}

pub struct FakeRuntime {
    mode: Mode,
    containers: Mutex<HashMap<String, HostContainer>>,
    image_catalog: Option<Vec<String>>,
    next_id: Mutex<u64>,
}

impl Default for FakeRuntime {
    fn default() -> Self {
        Self::new()
    }
}

impl FakeRuntime {
    /// Host mode: commands execute in an isolated temp dir per container.
    pub fn new() -> Self {
        Self {
            mode: Mode::Host,
            containers: Mutex::new(HashMap::new()),
            image_catalog: None,
            next_id: Mutex::new(0),
        }
    }

    /// Replay mode: answers recorded per command/script text.
    pub fn replay<I: IntoIterator<Item = (String, RawExec)>>(tape: I, strict: bool) -> Self {
        Self {
            mode: Mode::Replay {
                tape: tape.into_iter().collect(),
                strict,
            },
            containers: Mutex::new(HashMap::new()),
            image_catalog: None,
            next_id: Mutex::new(0),
        }
    }

    /// Restrict which image references `create` accepts.
    pub fn with_image_catalog<I: IntoIterator<Item = String>>(mut self, images: I) -> Self {
        self.image_catalog = Some(images.into_iter().collect());
        self
    }

    /// Host path of a container's filesystem; test hook.
    pub fn container_dir(&self, runtime_id: &str) -> Option<std::path::PathBuf> {
        self.containers
            .lock()
            .unwrap()
            .get(runtime_id)
            .map(|c| c.dir.path().to_path_buf())
    }
}

impl ContainerRuntime for FakeRuntime {
    fn create(&self, spec: &ContainerSpec) -> Result<String, SandboxError> {
        if let Some(catalog) = &self.image_catalog {
            if !catalog.contains(&spec.image) {
                return Err(SandboxError::ImageMissing(spec.image.clone()));
            }
        }
        let id = {
            let mut next = self.next_id.lock().unwrap();
            *next += 1;
            format!("fake-{}-{}", spec.job_id, *next)
        };
        let dir = tempfile::TempDir::with_prefix(format!("pentora-{}-", spec.job_id))
            .map_err(|e| SandboxError::EngineUnavailable(e.to_string()))?;
        self.containers.lock().unwrap().insert(
            id.clone(),
            HostContainer {
                dir,
                env: spec.env.clone(),
                script_seq: 0,
            },
        );
        Ok(id)
    }

    fn exec(
        &self,
        runtime_id: &str,
        payload: &ExecPayload,
        timeout: Duration,
    ) -> Result<RawExec, SandboxError> {
        if let Mode::Replay { tape, strict } = &self.mode {
            let key = match payload {
                ExecPayload::Shell(command) => command.clone(),
                ExecPayload::Script { source, .. } => source.clone(),
            };
            return match tape.get(&key) {
                Some(recorded) => Ok(recorded.clone()),
                None if *strict => Err(SandboxError::ReplayMiss(key)),
                None => Ok(RawExec::default()),
            };
        }

        let (dir, env, script_path) = {
            let mut containers = self.containers.lock().unwrap();
            let container = containers
                .get_mut(runtime_id)
                .ok_or_else(|| SandboxError::DeadContainer(runtime_id.to_string()))?;
            let script_path = if let ExecPayload::Script { .. } = payload {
                container.script_seq += 1;
                Some(
                    container
                        .dir
                        .path()
                        .join(format!("script_{}.py", container.script_seq)),
                )
            } else {
                None
            };
            (
                container.dir.path().to_path_buf(),
                container.env.clone(),
                script_path,
            )
        };

        let mut cmd = match payload {
            ExecPayload::Shell(command) => {
                let mut cmd = Command::new("sh");
                cmd.arg("-c").arg(command);
                cmd
            }
            ExecPayload::Script {
                interpreter,
                source,
            } => {
                let path = script_path.expect("script path reserved");
                std::fs::write(&path, source).map_err(SandboxError::io)?;
                let mut cmd = Command::new(interpreter);
                cmd.arg(&path);
                cmd
            }
        };
        cmd.current_dir(&dir);
        for (key, value) in &env {
            cmd.env(key, value);
        }

        match run_with_timeout(cmd, None, timeout) {
            Ok(raw) => Ok(raw),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => match payload {
                ExecPayload::Script { interpreter, .. } => {
                    Err(SandboxError::InterpreterMissing(interpreter.clone()))
                }
                ExecPayload::Shell(_) => Err(SandboxError::EngineUnavailable(e.to_string())),
            },
            Err(e) => Err(SandboxError::io(e)),
        }
    }

    fn remove(&self, runtime_id: &str) -> Result<(), SandboxError> {
        // Dropping the TempDir deletes the filesystem; repeated removal is a
        // no-op.
        self.containers.lock().unwrap().remove(runtime_id);
        Ok(())
    }
}
