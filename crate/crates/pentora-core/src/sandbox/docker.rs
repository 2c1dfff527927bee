//! Container engine backend driven through its CLI.
//!
//! Works with any engine exposing a docker-compatible command line (docker,
//! podman). Containers are started detached with a keep-alive command and
//! torn down with a forced remove; job networks are created `--internal` so
//! the container reaches only its target by default.

use std::process::Command;
use std::time::Duration;

use super::runtime::{run_with_timeout, ContainerRuntime, ContainerSpec, ExecPayload, RawExec};
use super::SandboxError;

#[derive(Debug, Clone)]
pub struct DockerRuntime {
    /// Engine binary, e.g. "docker" or "podman".
    binary: String,
    /// Optional DOCKER_HOST-style endpoint.
    endpoint: Option<String>,
}

impl DockerRuntime {
    pub fn new(binary: impl Into<String>, endpoint: Option<String>) -> Self {
        Self {
            binary: binary.into(),
            endpoint,
        }
    }

    fn command(&self) -> Command {
        let mut cmd = Command::new(&self.binary);
        if let Some(endpoint) = &self.endpoint {
            cmd.env("DOCKER_HOST", endpoint);
        }
        cmd
    }

    fn run_engine(&self, args: &[&str]) -> Result<RawExec, SandboxError> {
        let mut cmd = self.command();
        cmd.args(args);
        run_with_timeout(cmd, None, Duration::from_secs(120)).map_err(SandboxError::io)
    }

    /// Check the engine is reachable before any container is created.
    pub fn probe(&self) -> Result<(), SandboxError> {
        let mut cmd = self.command();
        cmd.args(["version", "--format", "{{.Server.Version}}"]);
        match run_with_timeout(cmd, None, Duration::from_secs(10)) {
            Ok(out) if out.exit_code == 0 => Ok(()),
            Ok(out) => Err(SandboxError::EngineUnavailable(
                out.stderr.trim().to_string(),
            )),
            Err(e) => Err(SandboxError::EngineUnavailable(e.to_string())),
        }
    }

    /// Build an image from a directory containing a Dockerfile.
    pub fn build_image(
        &self,
        tag: &str,
        context_dir: &std::path::Path,
    ) -> Result<(), SandboxError> {
        let context = context_dir.to_string_lossy().into_owned();
        let out = self.run_engine(&["build", "-t", tag, &context])?;
        if out.exit_code != 0 {
            return Err(SandboxError::ImageMissing(format!(
                "build of {tag} failed: {}",
                out.stderr.trim()
            )));
        }
        Ok(())
    }

    /// Start an arbitrary service container (used for challenge targets).
    pub fn run_detached(
        &self,
        image: &str,
        network: &str,
        name: &str,
        env: &[(String, String)],
    ) -> Result<String, SandboxError> {
        let mut args: Vec<String> = vec![
            "run".into(),
            "-d".into(),
            "--name".into(),
            name.into(),
            "--network".into(),
            network.into(),
        ];
        for (key, value) in env {
            args.push("-e".into());
            args.push(format!("{key}={value}"));
        }
        args.push(image.into());
        let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = self.run_engine(&arg_refs)?;
        if out.exit_code != 0 {
            let stderr = out.stderr.trim().to_string();
            if stderr.contains("No such image")
                || stderr.contains("pull access denied")
                || stderr.contains("manifest unknown")
                || stderr.contains("not found")
            {
                return Err(SandboxError::ImageMissing(stderr));
            }
            return Err(SandboxError::EngineUnavailable(stderr));
        }
        Ok(out.stdout.trim().to_string())
    }
}

impl ContainerRuntime for DockerRuntime {
    fn create(&self, spec: &ContainerSpec) -> Result<String, SandboxError> {
        let mut args: Vec<String> = vec![
            "run".into(),
            "-d".into(),
            "--label".into(),
            format!("pentora.job={}", spec.job_id),
            "--network".into(),
            spec.network.clone(),
        ];
        for (key, value) in &spec.env {
            args.push("-e".into());
            args.push(format!("{key}={value}"));
        }
        args.push(spec.image.clone());
        // Keep the container alive for exec sessions.
        args.extend(["sleep".into(), "infinity".into()]);
        let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = self.run_engine(&arg_refs)?;
        if out.exit_code != 0 {
            let stderr = out.stderr.trim().to_string();
            if stderr.contains("No such image")
                || stderr.contains("pull access denied")
                || stderr.contains("manifest unknown")
                || stderr.contains("not found")
            {
                return Err(SandboxError::ImageMissing(stderr));
            }
            return Err(SandboxError::EngineUnavailable(stderr));
        }
        Ok(out.stdout.trim().to_string())
    }

    fn exec(
        &self,
        runtime_id: &str,
        payload: &ExecPayload,
        timeout: Duration,
    ) -> Result<RawExec, SandboxError> {
        let (mut cmd, stdin) = match payload {
            ExecPayload::Shell(command) => {
                let mut cmd = self.command();
                cmd.args(["exec", runtime_id, "sh", "-c", command]);
                (cmd, None)
            }
            ExecPayload::Script {
                interpreter,
                source,
            } => {
                // Ship the source over stdin to avoid quoting pitfalls.
                let mut cmd = self.command();
                let runner =
                    format!("cat > /tmp/pentora_script && exec {interpreter} /tmp/pentora_script");
                cmd.args(["exec", "-i", runtime_id, "sh", "-c", &runner]);
                (cmd, Some(source.clone()))
            }
        };
        let raw = run_with_timeout(cmd, stdin, timeout).map_err(SandboxError::io)?;
        if !raw.timed_out && raw.exit_code != 0 {
            // 125 is the engine's own failure code; older engines report a
            // stopped container through stderr instead.
            let stderr = raw.stderr.to_lowercase();
            if raw.exit_code == 125
                || stderr.contains("is not running")
                || stderr.contains("no such container")
            {
                return Err(SandboxError::DeadContainer(runtime_id.to_string()));
            }
        }
        Ok(raw)
    }

    fn remove(&self, runtime_id: &str) -> Result<(), SandboxError> {
        let out = self.run_engine(&["rm", "-f", runtime_id])?;
        let stderr = out.stderr.to_lowercase();
        if out.exit_code == 0 || stderr.contains("no such container") {
            return Ok(());
        }
        Err(SandboxError::EngineUnavailable(
            out.stderr.trim().to_string(),
        ))
    }

    fn ensure_network(&self, name: &str, internal: bool) -> Result<(), SandboxError> {
        let inspect = self.run_engine(&["network", "inspect", name])?;
        if inspect.exit_code == 0 {
            return Ok(());
        }
        let mut args = vec!["network", "create"];
        if internal {
            args.push("--internal");
        }
        args.push(name);
        let out = self.run_engine(&args)?;
        if out.exit_code != 0 && !out.stderr.contains("already exists") {
            return Err(SandboxError::EngineUnavailable(
                out.stderr.trim().to_string(),
            ));
        }
        Ok(())
    }

    fn remove_network(&self, name: &str) -> Result<(), SandboxError> {
        let out = self.run_engine(&["network", "rm", name])?;
        let stderr = out.stderr.to_lowercase();
        if out.exit_code == 0 || stderr.contains("no such network") || stderr.contains("not found")
        {
            return Ok(());
        }
        Err(SandboxError::EngineUnavailable(
            out.stderr.trim().to_string(),
        ))
    }
}
