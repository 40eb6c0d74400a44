use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::protocol::{Hello, HelloBody, Request, Response};
use super::{Classifier, ClassifierError, Prediction};
use crate::imaging::Image;

fn default_timeout() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSettings {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    /// Per-message timeout, including the handshake.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Class count the server must announce; any count >= 2 is accepted when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_count: Option<usize>,
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    line_no: usize,
    next_id: u64,
    timeout: Duration,
}

impl Session {
    fn read_line(&mut self) -> Result<String, ClassifierError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => {
                self.line_no += 1;
                Ok(line)
            }
            Ok(Err(e)) => Err(ClassifierError::Process(format!("reading stdout: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(ClassifierError::Timeout(self.timeout.as_secs_f64())),
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.wait().ok().map(|s| s.to_string());
                Err(ClassifierError::Process(format!(
                    "server closed its output ({})",
                    status.unwrap_or_else(|| "unknown status".into())
                )))
            }
        }
    }

    fn violation(&self, reason: impl Into<String>) -> ClassifierError {
        ClassifierError::Protocol {
            line: self.line_no,
            reason: reason.into(),
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        // closing stdin ends the session
        drop(self.stdin.take());
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Client for a classifier server speaking the line-delimited JSON protocol.
///
/// The session is a single-owner resource; concurrent callers are serialized.
pub struct ExternalClassifier {
    name: String,
    class_count: usize,
    session: Mutex<Session>,
}

impl std::fmt::Debug for ExternalClassifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalClassifier")
            .field("name", &self.name)
            .field("class_count", &self.class_count)
            .finish()
    }
}

impl ExternalClassifier {
    /// Spawns the process and consumes its hello message.
    pub fn spawn(settings: &ExternalSettings) -> Result<Self, ClassifierError> {
        let (program, args) = settings
            .command
            .split_first()
            .ok_or_else(|| ClassifierError::Spec("empty command".into()))?;
        if !(settings.timeout_secs > 0.0) {
            return Err(ClassifierError::Spec("timeout must be positive".into()));
        }
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ClassifierError::Spawn {
                command: settings.command.join(" "),
                source,
            })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut session = Session {
            child,
            stdin,
            lines: rx,
            line_no: 0,
            next_id: 0,
            timeout: Duration::from_secs_f64(settings.timeout_secs),
        };

        let line = session.read_line()?;
        let hello: Hello = serde_json::from_str(&line)
            .map_err(|e| session.violation(format!("malformed hello: {e}")))?;
        let HelloBody { name, classes } = hello.hello;
        if classes < 2 {
            return Err(session.violation(format!("class count {classes} < 2")));
        }
        if let Some(expected) = settings.class_count.filter(|&c| c != classes) {
            return Err(session.violation(format!(
                "server announced {classes} classes, configuration expects {expected}"
            )));
        }
        log::debug!("external classifier {name:?} ready with {classes} classes");
        Ok(Self {
            name,
            class_count: classes,
            session: Mutex::new(session),
        })
    }
}

impl Classifier for ExternalClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn class_count(&self) -> usize {
        self.class_count
    }

    fn predict(&self, images: &[Image]) -> Result<Vec<Prediction>, ClassifierError> {
        let mut session = self
            .session
            .lock()
            .map_err(|_| ClassifierError::Process("session poisoned by an earlier failure".into()))?;
        let id = session.next_id;
        session.next_id += 1;

        let mut line = serde_json::to_string(&Request::encode(id, images))
            .map_err(|e| ClassifierError::Process(e.to_string()))?;
        line.push('\n');
        let stdin = session
            .stdin
            .as_mut()
            .ok_or_else(|| ClassifierError::Process("stdin closed".into()))?;
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| ClassifierError::Process(format!("writing request: {e}")))?;

        let reply = session.read_line()?;
        let response: Response = serde_json::from_str(&reply)
            .map_err(|e| session.violation(format!("malformed response: {e}")))?;
        let probs = match response {
            Response::Error { error, .. } => {
                return Err(ClassifierError::Process(format!("server error: {error}")))
            }
            Response::Probs { id: got, probs } => {
                if got != id {
                    return Err(session.violation(format!("response id {got}, expected {id}")));
                }
                probs
            }
        };
        if probs.len() != images.len() {
            return Err(session.violation(format!(
                "{} probability rows for {} images",
                probs.len(),
                images.len()
            )));
        }
        probs
            .into_iter()
            .enumerate()
            .map(|(index, row)| {
                Prediction::new(row).map_err(|reason| ClassifierError::InvalidPrediction { index, reason })
            })
            .collect()
    }
}
