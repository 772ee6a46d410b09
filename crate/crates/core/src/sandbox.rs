//! Client side of the code-execution runner protocol.
//!
//! The runner is an external executable started with `--serve`. Each frame
//! is a 4-byte big-endian length followed by that many bytes of UTF-8
//! JSON. One request frame gets exactly one response frame.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAX_FRAME_BYTES: usize = 16 << 20;
pub const MIN_TIMEOUT_MS: u64 = 100;
pub const MAX_TIMEOUT_MS: u64 = 60_000;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("runner io: {0}")]
    Io(#[from] io::Error),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("runner at {0} could not be started: {1}")]
    Spawn(PathBuf, io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub code: String,
    pub stdin_payload: String,
    pub timeout_ms: u64,
    pub memory_limit_mb: u64,
}

impl ExecRequest {
    pub fn new(code: impl Into<String>, timeout_ms: u64, memory_limit_mb: u64) -> Self {
        Self {
            code: code.into(),
            stdin_payload: String::new(),
            timeout_ms,
            memory_limit_mb,
        }
    }

    pub fn validate(&self) -> Result<(), SandboxError> {
        if self.code.trim().is_empty() {
            return Err(SandboxError::InvalidRequest("code is empty".into()));
        }
        if !(MIN_TIMEOUT_MS..=MAX_TIMEOUT_MS).contains(&self.timeout_ms) {
            return Err(SandboxError::InvalidRequest(format!(
                "timeout_ms {} outside {MIN_TIMEOUT_MS}..={MAX_TIMEOUT_MS}",
                self.timeout_ms
            )));
        }
        if self.memory_limit_mb == 0 {
            return Err(SandboxError::InvalidRequest("memory_limit_mb is zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecStatus {
    #[serde(rename = "OK")]
    Ok,
    Timeout,
    RuntimeError,
    MemoryExceeded,
    ProtocolError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecResult {
    pub status: ExecStatus,
    pub stdout: String,
    pub stderr: String,
    pub duration_ms: u64,
}

impl ExecResult {
    pub fn protocol_error(detail: impl Into<String>) -> Self {
        Self {
            status: ExecStatus::ProtocolError,
            stdout: String::new(),
            stderr: detail.into(),
            duration_ms: 0,
        }
    }
}

/// Wire form of a request.
#[derive(Debug, Serialize, Deserialize)]
pub struct RequestFrame {
    pub version: u32,
    pub id: u64,
    #[serde(flatten)]
    pub request: ExecRequest,
}

/// Wire form of a response.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseFrame {
    pub version: u32,
    pub id: u64,
    #[serde(flatten)]
    pub result: ExecResult,
}

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&n| n as usize <= MAX_FRAME_BYTES)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<Vec<u8>, SandboxError> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(SandboxError::Protocol(format!("frame of {len} bytes exceeds limit")));
    }
    let mut buf = vec![0; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Anything that can execute a program and report its output.
pub trait CodeRunner: Send + Sync {
    fn execute(&self, req: &ExecRequest) -> Result<ExecResult, SandboxError>;
}

struct Worker {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl Worker {
    fn spawn(program: &PathBuf, args: &[String]) -> Result<Self, SandboxError> {
        let mut child = Command::new(program)
            .args(args)
            .arg("--serve")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| SandboxError::Spawn(program.clone(), e))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self { child, stdin, stdout })
    }

    fn call(&mut self, frame: &RequestFrame) -> Result<ExecResult, SandboxError> {
        let body = serde_json::to_vec(frame).map_err(|e| SandboxError::Protocol(e.to_string()))?;
        write_frame(&mut self.stdin, &body)?;
        let reply = read_frame(&mut self.stdout)?;
        let reply: ResponseFrame =
            serde_json::from_slice(&reply).map_err(|e| SandboxError::Protocol(format!("bad response: {e}")))?;
        if reply.version != PROTOCOL_VERSION {
            return Err(SandboxError::Protocol(format!(
                "runner speaks version {}",
                reply.version
            )));
        }
        if reply.id != frame.id {
            return Err(SandboxError::Protocol(format!(
                "response id {} for request {}",
                reply.id, frame.id
            )));
        }
        Ok(reply.result)
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Pool of runner processes, each serving one request at a time. Workers
/// are started lazily and replaced after an I/O or protocol failure.
pub struct ProcessRunner {
    program: PathBuf,
    args: Vec<String>,
    capacity: usize,
    idle: Mutex<(Vec<Worker>, usize)>,
    freed: Condvar,
    next_id: AtomicU64,
}

impl std::fmt::Debug for ProcessRunner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProcessRunner")
            .field("program", &self.program)
            .field("args", &self.args)
            .field("capacity", &self.capacity)
            .finish()
    }
}

impl ProcessRunner {
    /// `program args... --serve` is what gets spawned.
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>, capacity: usize) -> Self {
        Self {
            program: program.into(),
            args,
            capacity: capacity.max(1),
            idle: Mutex::new((Vec::new(), 0)),
            freed: Condvar::new(),
            next_id: AtomicU64::new(1),
        }
    }

    /// Starts one worker to check the runner can be launched.
    pub fn probe(&self) -> Result<(), SandboxError> {
        let w = self.checkout()?;
        self.checkin(Some(w));
        Ok(())
    }

    fn checkout(&self) -> Result<Worker, SandboxError> {
        let mut guard = self.idle.lock().expect("runner pool lock");
        loop {
            if let Some(w) = guard.0.pop() {
                return Ok(w);
            }
            if guard.1 < self.capacity {
                guard.1 += 1;
                drop(guard);
                return Worker::spawn(&self.program, &self.args).inspect_err(|_| {
                    self.idle.lock().expect("runner pool lock").1 -= 1;
                    self.freed.notify_one();
                });
            }
            guard = self.freed.wait(guard).expect("runner pool lock");
        }
    }

    fn checkin(&self, w: Option<Worker>) {
        let mut guard = self.idle.lock().expect("runner pool lock");
        match w {
            Some(w) => guard.0.push(w),
            None => guard.1 -= 1,
        }
        self.freed.notify_one();
    }
}

impl CodeRunner for ProcessRunner {
    fn execute(&self, req: &ExecRequest) -> Result<ExecResult, SandboxError> {
        req.validate()?;
        let frame = RequestFrame {
            version: PROTOCOL_VERSION,
            id: self.next_id.fetch_add(1, Ordering::Relaxed),
            request: req.clone(),
        };
        let mut last = None;
        for _ in 0..2 {
            let mut w = self.checkout()?;
            match w.call(&frame) {
                Ok(r) => {
                    self.checkin(Some(w));
                    return Ok(r);
                }
                Err(e) => {
                    log::warn!("runner {} failed: {e}; restarting", self.program.display());
                    drop(w);
                    self.checkin(None);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}
