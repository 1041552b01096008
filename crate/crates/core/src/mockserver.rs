//! A scripted HTTP/1.1 server for exercising redirect expansion and catalog
//! harvesting without touching the network.
//!
//! The server listens on `127.0.0.1` and routes on the `Host` header plus the
//! request target, so it can stand in for any number of hostnames when used
//! as the client's HTTP proxy (`CONNECT` tunnels are accepted). Each route
//! holds a script of responses; the last one repeats once the script is
//! exhausted. Unknown routes answer `404`.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
    pub delay: Duration,
}

impl MockResponse {
    pub fn status(status: u16) -> Self {
        Self {
            status,
            headers: Vec::new(),
            body: String::new(),
            delay: Duration::ZERO,
        }
    }

    pub fn ok(body: impl Into<String>) -> Self {
        Self {
            body: body.into(),
            ..Self::status(200)
        }
    }

    pub fn json(body: impl Into<String>) -> Self {
        Self::ok(body).header("Content-Type", "application/json")
    }

    pub fn redirect(status: u16, location: impl Into<String>) -> Self {
        Self::status(status).header("Location", location)
    }

    pub fn header(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

/// One request as seen by the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestLog {
    pub method: String,
    pub host: String,
    pub target: String,
    pub status: u16,
}

type RouteKey = (String, String);

#[derive(Debug, Default)]
struct Routes {
    scripts: HashMap<RouteKey, VecDeque<MockResponse>>,
}

impl Routes {
    fn next(&mut self, host: &str, target: &str) -> MockResponse {
        let path_only = target.split('?').next().unwrap_or(target);
        let key = [target, path_only]
            .into_iter()
            .map(|t| (host.to_owned(), t.to_owned()))
            .find(|k| self.scripts.contains_key(k));
        let Some(script) = key.and_then(|k| self.scripts.get_mut(&k)) else {
            return MockResponse::status(404);
        };
        if script.len() > 1 {
            script.pop_front().expect("non-empty script")
        } else {
            script.front().cloned().unwrap_or_else(|| MockResponse::status(404))
        }
    }
}

/// Route table builder for [`MockServer`].
#[derive(Debug, Default)]
pub struct MockServerBuilder {
    routes: Routes,
}

impl MockServerBuilder {
    /// Adds a response to the script of `host` + `target`. `target` is the
    /// path, optionally with a query string that must match exactly.
    pub fn route(mut self, host: &str, target: &str, response: MockResponse) -> Self {
        self.routes
            .scripts
            .entry((host.to_ascii_lowercase(), target.to_owned()))
            .or_default()
            .push_back(response);
        self
    }

    pub fn start(self) -> std::io::Result<MockServer> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let routes = Arc::new(Mutex::new(self.routes));
        let log = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let (routes, log, stop) = (routes.clone(), log.clone(), stop.clone());
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let (routes, log) = (routes.clone(), log.clone());
                    thread::spawn(move || {
                        let _ = serve(stream, &routes, &log);
                    });
                }
            })
        };
        Ok(MockServer {
            addr,
            log,
            stop,
            handle: Some(handle),
        })
    }
}

pub struct MockServer {
    addr: SocketAddr,
    log: Arc<Mutex<Vec<RequestLog>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn builder() -> MockServerBuilder {
        MockServerBuilder::default()
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://127.0.0.1:<port>`, suitable as an HTTP proxy address.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<RequestLog> {
        self.log.lock().expect("log lock").clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

struct Head {
    method: String,
    target: String,
    host: Option<String>,
}

fn read_head(reader: &mut impl BufRead) -> std::io::Result<Option<Head>> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    let mut parts = line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_owned();
    let target = parts.next().unwrap_or_default().to_owned();
    let mut host = None;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("host") {
                host = Some(value.trim().to_owned());
            }
        }
    }
    Ok(Some(Head { method, target, host }))
}

fn strip_port(host: &str) -> String {
    let host = match host.rsplit_once(':') {
        Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h,
        _ => host,
    };
    host.to_ascii_lowercase()
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        301 => "Moved Permanently",
        302 => "Found",
        303 => "See Other",
        307 => "Temporary Redirect",
        308 => "Permanent Redirect",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    }
}

fn serve(stream: TcpStream, routes: &Mutex<Routes>, log: &Mutex<Vec<RequestLog>>) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let Some(mut head) = read_head(&mut reader)? else {
        return Ok(());
    };
    if head.method.eq_ignore_ascii_case("CONNECT") {
        writer.write_all(b"HTTP/1.1 200 Connection established\r\n\r\n")?;
        writer.flush()?;
        let tunnel_host = strip_port(&head.target);
        match read_head(&mut reader)? {
            Some(inner) => {
                head = inner;
                head.host.get_or_insert(tunnel_host);
            }
            None => return Ok(()),
        }
    }
    // Absolute-form targets carry the host themselves.
    let (host, target) = match head.target.split_once("://") {
        Some((_, rest)) => {
            let (h, path) = rest.split_at(rest.find('/').unwrap_or(rest.len()));
            (h.to_owned(), if path.is_empty() { "/".into() } else { path.to_owned() })
        }
        None => (head.host.clone().unwrap_or_default(), head.target.clone()),
    };
    let host = strip_port(&host);
    let response = routes.lock().expect("routes lock").next(&host, &target);
    log.lock().expect("log lock").push(RequestLog {
        method: head.method.clone(),
        host,
        target,
        status: response.status,
    });
    if !response.delay.is_zero() {
        thread::sleep(response.delay);
    }
    let mut out = format!(
        "HTTP/1.1 {} {}\r\nContent-Length: {}\r\nConnection: close\r\n",
        response.status,
        reason(response.status),
        response.body.len()
    );
    for (name, value) in &response.headers {
        out.push_str(&format!("{name}: {value}\r\n"));
    }
    out.push_str("\r\n");
    if !head.method.eq_ignore_ascii_case("HEAD") {
        out.push_str(&response.body);
    }
    writer.write_all(out.as_bytes())?;
    writer.flush()
}
