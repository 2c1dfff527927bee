//! Container runtime interface and process-execution plumbing.

use std::collections::BTreeMap;
use std::io::Read;
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::SandboxError;

/// Exit code reported when a command is cut by the per-command timeout.
pub const TIMEOUT_EXIT_CODE: i32 = 124;

/// Per-stream capture ceiling before manager-level truncation; protects the
/// host from commands that stream gigabytes.
const CAPTURE_LIMIT: u64 = 4 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ContainerSpec {
    pub job_id: String,
    pub image: String,
    pub network: String,
    pub env: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub enum ExecPayload {
    /// Shell command line run by `sh -c`.
    Shell(String),
    /// Script source written to a job-scoped temp file and run by the
    /// interpreter.
    Script { interpreter: String, source: String },
}

/// Raw outcome of one in-container execution, before truncation policy.
#[derive(Debug, Clone, Default)]
pub struct RawExec {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
    pub duration: Duration,
    pub timed_out: bool,
}

/// Engine abstraction: one fresh container per job, concurrent exec
/// sessions, explicit removal. Implementations must be safe to share across
/// the agents of one job.
pub trait ContainerRuntime: Send + Sync {
    /// Start a container and return its engine identifier.
    fn create(&self, spec: &ContainerSpec) -> Result<String, SandboxError>;

    fn exec(
        &self,
        runtime_id: &str,
        payload: &ExecPayload,
        timeout: Duration,
    ) -> Result<RawExec, SandboxError>;

    /// Stop and remove the container. Must be idempotent.
    fn remove(&self, runtime_id: &str) -> Result<(), SandboxError>;

    /// Create the named job-scoped network if the engine has one.
    fn ensure_network(&self, _name: &str, _internal: bool) -> Result<(), SandboxError> {
        Ok(())
    }

    fn remove_network(&self, _name: &str) -> Result<(), SandboxError> {
        Ok(())
    }
}

/// Run a host process with a hard timeout, killing its whole process group
/// on expiry so piped readers terminate. Used by both the fake runtime and
/// the engine CLI backend.
pub(crate) fn run_with_timeout(
    mut cmd: Command,
    stdin_data: Option<String>,
    timeout: Duration,
) -> std::io::Result<RawExec> {
    cmd.stdout(Stdio::piped()).stderr(Stdio::piped());
    cmd.stdin(if stdin_data.is_some() {
        Stdio::piped()
    } else {
        Stdio::null()
    });
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }

    let started = Instant::now();
    let mut child = cmd.spawn()?;

    if let Some(data) = stdin_data {
        if let Some(mut stdin) = child.stdin.take() {
            use std::io::Write;
            let _ = stdin.write_all(data.as_bytes());
        }
    }

    fn capture(
        reader: impl Read + Send + 'static,
        sink: Arc<Mutex<Vec<u8>>>,
    ) -> std::thread::JoinHandle<()> {
        std::thread::spawn(move || {
            let mut reader = reader;
            let mut buf = Vec::new();
            let _ = Read::by_ref(&mut reader)
                .take(CAPTURE_LIMIT)
                .read_to_end(&mut buf);
            // Drain anything beyond the capture limit so the child never
            // blocks on a full pipe.
            let _ = std::io::copy(&mut reader, &mut std::io::sink());
            *sink.lock().unwrap() = buf;
        })
    }

    let stdout_buf = Arc::new(Mutex::new(Vec::new()));
    let stderr_buf = Arc::new(Mutex::new(Vec::new()));
    let stdout_thread = capture(
        child.stdout.take().expect("stdout piped"),
        stdout_buf.clone(),
    );
    let stderr_thread = capture(
        child.stderr.take().expect("stderr piped"),
        stderr_buf.clone(),
    );

    let mut timed_out = false;
    let exit_code = loop {
        match child.try_wait()? {
            Some(status) => break status.code().unwrap_or(-1),
            None if started.elapsed() >= timeout => {
                timed_out = true;
                #[cfg(unix)]
                unsafe {
                    libc::killpg(child.id() as i32, libc::SIGKILL);
                }
                let _ = child.kill();
                let _ = child.wait();
                break TIMEOUT_EXIT_CODE;
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };

    let _ = stdout_thread.join();
    let _ = stderr_thread.join();
    let duration = started.elapsed().min(timeout);

    let take =
        |buf: &Arc<Mutex<Vec<u8>>>| String::from_utf8_lossy(&buf.lock().unwrap()).into_owned();
    Ok(RawExec {
        stdout: take(&stdout_buf),
        stderr: take(&stderr_buf),
        exit_code,
        duration,
        timed_out,
    })
}
