use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde_json::Value;

use super::protocol;
use super::ProbabilityMatrix;
use crate::data::{Row, Schema};
use crate::error::{Error, Result};

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const STDERR_KEEP: usize = 4096;

struct ProcessIo {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<Vec<u8>>>,
    stderr_reader: Option<JoinHandle<()>>,
}

/// A model living in a child process. Requests are serialised through a
/// mutex, so one request is in flight per handle.
pub struct ProcessModel {
    command: String,
    classes: Vec<String>,
    schema: Schema,
    timeout: Duration,
    io: Mutex<ProcessIo>,
}

impl fmt::Debug for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessModel")
            .field("command", &self.command)
            .field("classes", &self.classes)
            .finish_non_exhaustive()
    }
}

impl ProcessModel {
    pub fn open(command: &str, classes: Vec<String>, schema: Schema) -> Result<Self> {
        Self::open_with_timeout(command, classes, schema, DEFAULT_TIMEOUT)
    }

    pub fn open_with_timeout(
        command: &str,
        classes: Vec<String>,
        schema: Schema,
        timeout: Duration,
    ) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::input("an external model needs at least 2 classes"));
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Transport(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr_pipe = child.stderr.take().expect("piped stderr");

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(Vec::new()));
        let sink = Arc::clone(&stderr);
        let stderr_reader = thread::spawn(move || {
            let mut buf = [0u8; 1024];
            while let Ok(n) = stderr_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut kept = sink.lock().unwrap_or_else(|p| p.into_inner());
                kept.extend_from_slice(&buf[..n]);
                if kept.len() > STDERR_KEEP {
                    let cut = kept.len() - STDERR_KEEP;
                    kept.drain(..cut);
                }
            }
        });

        let model = ProcessModel {
            command: command.to_owned(),
            classes,
            schema,
            timeout,
            io: Mutex::new(ProcessIo {
                child,
                stdin,
                lines: rx,
                stderr,
                stderr_reader: Some(stderr_reader),
            }),
        };
        let reply = model.request(&protocol::handshake_request(&model.schema, &model.classes))?;
        if reply.get("ok").and_then(Value::as_bool) != Some(true) {
            let detail = reply
                .get("error")
                .map(Value::to_string)
                .unwrap_or_else(|| reply.to_string());
            return Err(Error::Transport(format!("handshake rejected: {detail}")));
        }
        if let Some(theirs) = reply.get("classes").and_then(Value::as_array) {
            if theirs.len() != model.classes.len() {
                return Err(Error::Protocol(format!(
                    "model reports {} classes, caller expects {}",
                    theirs.len(),
                    model.classes.len()
                )));
            }
        }
        Ok(model)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub(super) fn predict(&self, rows: &[Row]) -> Result<ProbabilityMatrix> {
        let reply = self.request(&protocol::predict_request(&self.schema, rows))?;
        protocol::decode_probabilities(&reply, rows.len(), self.classes.len())
    }

    fn request(&self, message: &Value) -> Result<Value> {
        let mut io = self.io.lock().unwrap_or_else(|p| p.into_inner());
        let sent = match io.stdin.as_mut() {
            Some(stdin) => writeln!(stdin, "{message}").and_then(|()| stdin.flush()),
            None => Err(std::io::Error::other("stdin closed")),
        };
        if let Err(e) = sent {
            return Err(io.transport_error(&format!("write failed: {e}")));
        }
        match io.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => serde_json::from_str(&line)
                .map_err(|e| Error::Protocol(format!("malformed response {line:?}: {e}"))),
            Ok(Err(e)) => Err(io.transport_error(&format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                let _ = io.child.kill();
                Err(io.transport_error(&format!("no response within {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(io.transport_error("model process closed its output"))
            }
        }
    }
}

impl ProcessIo {
    fn transport_error(&mut self, what: &str) -> Error {
        // Give an exiting child a moment so its stderr is complete.
        let deadline = Instant::now() + Duration::from_millis(500);
        let mut status = None;
        while Instant::now() < deadline {
            match self.child.try_wait() {
                Ok(Some(s)) => {
                    status = Some(s);
                    break;
                }
                Ok(None) => thread::sleep(Duration::from_millis(10)),
                Err(_) => break,
            }
        }
        if status.is_some() {
            if let Some(handle) = self.stderr_reader.take() {
                let _ = handle.join();
            }
        }
        let stderr = self.stderr.lock().unwrap_or_else(|p| p.into_inner());
        let excerpt = String::from_utf8_lossy(&stderr).trim().to_owned();
        let status = status.map(|s| format!(" ({s})")).unwrap_or_default();
        if excerpt.is_empty() {
            Error::Transport(format!("{what}{status}"))
        } else {
            Error::Transport(format!("{what}{status}; stderr: {excerpt}"))
        }
    }
}

impl Drop for ProcessModel {
    fn drop(&mut self) {
        let io = self.io.get_mut().unwrap_or_else(|p| p.into_inner());
        if let Some(mut stdin) = io.stdin.take() {
            let _ = writeln!(stdin, "{}", protocol::shutdown_request());
            let _ = stdin.flush();
        }
        let deadline = Instant::now() + Duration::from_secs(1);
        loop {
            match io.child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => {
                    let _ = io.child.kill();
                    let _ = io.child.wait();
                    break;
                }
            }
        }
    }
}

/// A model behind `POST <url>` taking `{"rows": ...}`.
pub struct HttpModel {
    url: String,
    classes: Vec<String>,
    schema: Schema,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpModel")
            .field("url", &self.url)
            .field("classes", &self.classes)
            .finish_non_exhaustive()
    }
}

impl HttpModel {
    pub fn open(url: &str, classes: Vec<String>, schema: Schema) -> Result<Self> {
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(Error::Transport(format!("not an http(s) URL: {url:?}")));
        }
        if classes.len() < 2 {
            return Err(Error::input("an external model needs at least 2 classes"));
        }
        let url = if url.trim_end_matches('/').ends_with("/predict") {
            url.to_owned()
        } else {
            format!("{}/predict", url.trim_end_matches('/'))
        };
        let agent = ureq::AgentBuilder::new().timeout(DEFAULT_TIMEOUT).build();
        Ok(HttpModel {
            url,
            classes,
            schema,
            agent,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub(super) fn predict(&self, rows: &[Row]) -> Result<ProbabilityMatrix> {
        let body = serde_json::json!({ "rows": protocol::encode_rows(&self.schema, rows) });
        let response = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json")
            .send_string(&body.to_string())
            .map_err(|e| Error::Transport(format!("POST {}: {e}", self.url)))?;
        let text = response
            .into_string()
            .map_err(|e| Error::Transport(format!("reading response: {e}")))?;
        let reply: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
        protocol::decode_probabilities(&reply, rows.len(), self.classes.len())
    }
}
