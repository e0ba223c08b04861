//! Executor running as a child process, driven over its stdin/stdout.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{decode, encode, Handshake, Outcome, RequestKind, SandboxRequest, SandboxResponse, PROTOCOL_VERSION};
use super::{SandboxSession, SessionError};

#[derive(Debug, Clone)]
pub struct ExecutorConfig {
    pub program: PathBuf,
    pub args: Vec<String>,
    /// Slack on top of each request's own limit before the host gives up.
    pub grace: Duration,
    /// Limit the executor applies to each call of generated code.
    pub per_call_timeout: Duration,
    pub protocol: String,
}

impl ExecutorConfig {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExecutorConfig {
            program: program.into(),
            args: Vec::new(),
            grace: Duration::from_secs(10),
            per_call_timeout: Duration::from_secs(1),
            protocol: PROTOCOL_VERSION.to_string(),
        }
    }

    pub fn args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.args.extend(args.into_iter().map(Into::into));
        self
    }

    pub fn grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    pub fn per_call_timeout(mut self, t: Duration) -> Self {
        self.per_call_timeout = t;
        self
    }
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Running {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ProcessSandbox {
    config: ExecutorConfig,
    running: Option<Running>,
}

impl ProcessSandbox {
    /// Starts the executor and waits for its handshake.
    pub fn spawn(config: ExecutorConfig) -> Result<Self, SessionError> {
        let running = start(&config)?;
        Ok(ProcessSandbox {
            config,
            running: Some(running),
        })
    }

    fn kill(&mut self) {
        if let Some(r) = self.running.take() {
            r.kill();
        }
    }

    /// Next protocol line, skipping anything that is not a JSON object.
    fn read_response(&mut self, deadline: Instant) -> Result<String, RecvTimeoutError> {
        let lines = &self.running.as_ref().expect("running").lines;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = lines.recv_timeout(left)?;
            if line.trim_start().starts_with('{') {
                return Ok(line);
            }
            tracing::warn!(line = %line, "ignoring non-protocol output from executor");
        }
    }
}

fn start(config: &ExecutorConfig) -> Result<Running, SessionError> {
    let mut child = Command::new(&config.program)
        .args(&config.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|source| SessionError::Spawn {
            program: config.program.display().to_string(),
            source,
        })?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, lines) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let running = Running { child, stdin, lines };
    let got = match running.lines.recv_timeout(config.grace) {
        Ok(line) => match decode::<Handshake>(&line) {
            Ok(h) => h.protocol,
            Err(_) => line,
        },
        Err(_) => "no handshake".to_string(),
    };
    if got != config.protocol {
        running.kill();
        return Err(SessionError::Handshake {
            expected: config.protocol.clone(),
            got,
        });
    }
    tracing::debug!(program = %config.program.display(), "executor ready");
    Ok(running)
}

impl SandboxSession for ProcessSandbox {
    fn request(&mut self, req: &SandboxRequest) -> Result<SandboxResponse, SessionError> {
        let Some(running) = self.running.as_mut() else {
            return Err(SessionError::Dead);
        };
        let reply = |outcome| Ok(SandboxResponse { id: req.id, outcome });
        let crashed = || Outcome::Failure {
            failure: req.kind.crash_failure(),
        };

        let mut line = encode(req);
        line.push('\n');
        if running
            .stdin
            .write_all(line.as_bytes())
            .and_then(|()| running.stdin.flush())
            .is_err()
        {
            self.kill();
            return reply(crashed());
        }

        let limit = req.kind.time_limit(self.config.per_call_timeout);
        let deadline = Instant::now() + limit + self.config.grace;
        match self.read_response(deadline) {
            Ok(line) => {
                let resp = decode::<SandboxResponse>(&line).map_err(|e| {
                    self.kill();
                    SessionError::Protocol(e.to_string())
                })?;
                if matches!(req.kind, RequestKind::Shutdown) {
                    self.kill();
                }
                Ok(resp)
            }
            Err(RecvTimeoutError::Timeout) => {
                tracing::warn!(request = req.kind.name(), "executor missed its deadline; killing it");
                self.kill();
                reply(Outcome::Failure {
                    failure: req.kind.overrun_failure(format!(
                        "executor gave no answer within {:.1} s and was killed",
                        (limit + self.config.grace).as_secs_f64()
                    )),
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                tracing::warn!(request = req.kind.name(), "executor exited mid-request");
                self.kill();
                reply(crashed())
            }
        }
    }

    fn is_alive(&self) -> bool {
        self.running.is_some()
    }

    fn restart(&mut self) -> Result<(), SessionError> {
        self.kill();
        self.running = Some(start(&self.config)?);
        Ok(())
    }
}

impl Drop for ProcessSandbox {
    fn drop(&mut self) {
        self.kill();
    }
}
