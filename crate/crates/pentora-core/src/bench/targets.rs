//! Challenge target deployment.
//!
//! Built-in targets run as in-process HTTP servers on an ephemeral port, so
//! a whole suite can execute without a container engine; docker targets are
//! built from the challenge's build context and joined to the job network.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct Route {
    pub path: String,
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

impl Route {
    pub fn html(path: &str, body: &str) -> Self {
        Self {
            path: path.into(),
            status: 200,
            content_type: "text/html".into(),
            body: body.into(),
        }
    }

    pub fn text(path: &str, body: &str) -> Self {
        Self {
            path: path.into(),
            status: 200,
            content_type: "text/plain".into(),
            body: body.into(),
        }
    }
}

/// Minimal HTTP/1.1 server for toy challenge targets.
pub struct ToyServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    accept_thread: Option<std::thread::JoinHandle<()>>,
}

impl ToyServer {
    pub fn start(routes: Vec<Route>) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&shutdown);
        let accept_thread = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let routes = routes.clone();
                    std::thread::spawn(move || {
                        let _ = serve_connection(stream, &routes);
                    });
                }
            }
        });
        Ok(Self {
            addr,
            shutdown,
            accept_thread: Some(accept_thread),
        })
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}/", self.port())
    }

    pub fn stop(mut self) {
        self.shutdown_now();
    }

    fn shutdown_now(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Unblock the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for ToyServer {
    fn drop(&mut self) {
        if self.accept_thread.is_some() {
            self.shutdown_now();
        }
    }
}

fn serve_connection(stream: TcpStream, routes: &[Route]) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();

    // Drain headers (and any body we do not care about).
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        if let Some(value) = trimmed.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }
    if content_length > 0 {
        let mut body = vec![0u8; content_length.min(1 << 20)];
        let _ = reader.read_exact(&mut body);
    }

    let mut stream = stream;
    let normalized = if path.len() > 1 {
        path.trim_end_matches('/')
    } else {
        path.as_str()
    };
    let route = routes
        .iter()
        .find(|r| r.path == path || r.path.trim_end_matches('/') == normalized);
    let (status, reason, content_type, body) = match route {
        Some(route) => (
            route.status,
            "OK",
            route.content_type.clone(),
            route.body.clone(),
        ),
        None => (
            404,
            "Not Found",
            "text/plain".to_string(),
            "not found\n".to_string(),
        ),
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

/// Routes for the bundled toy challenges. The flag lands wherever the
/// challenge's weakness exposes it.
pub fn builtin_routes(name: &str, flag: &str) -> Option<Vec<Route>> {
    match name {
        "hidden_path" => Some(vec![
            Route::html(
                "/",
                "<html><body><h1>Orchid Notes</h1>\
                 <p>Nothing to see here yet.</p>\
                 <!-- TODO: remove /hidden before launch -->\
                 </body></html>",
            ),
            Route::text("/hidden", &format!("maintenance note\n{flag}\n")),
        ]),
        "robots_leak" => Some(vec![
            Route::html(
                "/",
                "<html><body><h1>Catalog</h1><p>Browse our items.</p></body></html>",
            ),
            Route::text("/robots.txt", "User-agent: *\nDisallow: /backup-3f91a/\n"),
            Route::text("/backup-3f91a", &format!("old export\n{flag}\n")),
        ]),
        "env_debug" => Some(vec![
            Route::html(
                "/",
                "<html><body><h1>Status board</h1>\
                 <p>Operational. <a href=\"/debug/vars\">diagnostics</a></p></body></html>",
            ),
            Route::text(
                "/debug/vars",
                &format!("APP_ENV=prod\nWORKERS=4\nFLAG={flag}\nCACHE=redis://cache:6379\n"),
            ),
        ]),
        _ => None,
    }
}
