//! One directory per run:
//!
//! ```text
//! <root>/<run_id>/run.json          run metadata
//! <root>/<run_id>/config.toml       config snapshot
//! <root>/<run_id>/rounds/<s>.jsonl  committed rounds, append-only
//! <root>/<run_id>/state/<s>.json    latest stream state
//! <root>/<run_id>/report/           report files
//! ```
//!
//! Every file carries a schema version; readers reject a newer major.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, EngineOptions, RoundRecord, StreamProgress, StreamSink, StreamSpec};
use crate::metrics::{LevelTally, StreamStatus};
use crate::protocol::message::now_ms;
use crate::report::route_dir;
use crate::tasks::TaskId;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("run not found: {0}")]
    RunNotFound(String),
    #[error("run {0} already exists")]
    RunExists(String),
    #[error("config conflict: run was created with config {stored}, got {given}")]
    ConfigConflict { stored: String, given: String },
    #[error("{path}: schema version {found} is newer than supported {SCHEMA_VERSION}")]
    SchemaVersionMismatch { path: String, found: String },
    #[error("{path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid run id {0:?}")]
    InvalidRunId(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn check_version(path: &Path, found: &str) -> Result<(), StoreError> {
    let major = |v: &str| v.split('.').next().and_then(|m| m.parse::<u32>().ok());
    match (major(found), major(SCHEMA_VERSION)) {
        (Some(f), Some(ours)) if f <= ours => Ok(()),
        (Some(_), _) => Err(StoreError::SchemaVersionMismatch {
            path: path.display().to_string(),
            found: found.to_string(),
        }),
        _ => Err(StoreError::Corrupt {
            path: path.display().to_string(),
            message: format!("unreadable schema version {found:?}"),
        }),
    }
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema_version: String,
    #[serde(flatten)]
    body: T,
}

fn read_versioned<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, StoreError> {
    #[derive(Deserialize)]
    struct Header {
        schema_version: String,
    }
    let corrupt = |e: serde_json::Error| StoreError::Corrupt {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let h: Header = serde_json::from_str(text).map_err(corrupt)?;
    check_version(path, &h.schema_version)?;
    let v: Versioned<T> = serde_json::from_str(text).map_err(corrupt)?;
    Ok(v.body)
}

fn to_versioned<T: Serialize>(body: &T) -> String {
    serde_json::to_string(&Versioned {
        schema_version: SCHEMA_VERSION.to_string(),
        body,
    })
    .expect("store records serialize")
}

/// Writes via a temp file and rename so readers never see half a file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Stream state as persisted; the transcript lives in the round file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamState {
    pub stream_id: String,
    pub task: TaskId,
    pub status: StreamStatus,
    pub levels: Vec<LevelTally>,
    pub current: LevelTally,
    pub round: u32,
    pub rounds: u64,
    pub regenerations: u64,
}

impl From<&StreamProgress> for StreamState {
    fn from(p: &StreamProgress) -> Self {
        Self {
            stream_id: p.stream_id.clone(),
            task: p.task,
            status: p.status.clone(),
            levels: p.levels.clone(),
            current: p.current,
            round: p.round,
            rounds: p.rounds,
            regenerations: p.regenerations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub config_hash: String,
    pub created_ms: u64,
    pub updated_ms: u64,
}

/// Everything persisted about a run, minus round bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub streams: BTreeMap<String, StreamState>,
    /// Round files, relative to the run directory.
    pub transcripts: BTreeMap<String, String>,
    /// Report files, relative to the run directory.
    pub reports: Vec<String>,
}

/// The directory holding all runs.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn run_dir(&self, run_id: &str) -> Result<PathBuf, StoreError> {
        let ok = !run_id.is_empty()
            && run_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !run_id.starts_with('.');
        if !ok {
            return Err(StoreError::InvalidRunId(run_id.to_string()));
        }
        Ok(self.root.join(run_id))
    }

    pub fn create(&self, run_id: &str, config_toml: &str, config_hash: &str) -> Result<RunHandle, StoreError> {
        let dir = self.run_dir(run_id)?;
        if dir.join("run.json").exists() {
            return Err(StoreError::RunExists(run_id.to_string()));
        }
        for sub in ["rounds", "state", "report"] {
            fs::create_dir_all(dir.join(sub)).map_err(io_err(&dir))?;
        }
        let now = now_ms();
        let meta = RunMeta {
            run_id: run_id.to_string(),
            config_hash: config_hash.to_string(),
            created_ms: now,
            updated_ms: now,
        };
        write_atomic(&dir.join("config.toml"), config_toml)?;
        write_atomic(&dir.join("run.json"), &to_versioned(&meta))?;
        Ok(RunHandle::new(dir, meta))
    }

    pub fn open(&self, run_id: &str) -> Result<RunHandle, StoreError> {
        let dir = self.run_dir(run_id)?;
        let path = dir.join("run.json");
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::RunNotFound(run_id.to_string()))
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        let meta: RunMeta = read_versioned(&path, &text)?;
        Ok(RunHandle::new(dir, meta))
    }

    /// Run ids, sorted.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(ids),
            Err(e) => return Err(io_err(&self.root)(e)),
        };
        for entry in entries {
            let entry = entry.map_err(io_err(&self.root))?;
            if entry.path().join("run.json").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// An open run. One writer per stream file; metadata updates go through
/// the handle's lock.
#[derive(Debug)]
pub struct RunHandle {
    dir: PathBuf,
    meta: Mutex<RunMeta>,
    writers: Mutex<BTreeMap<String, File>>,
}

impl RunHandle {
    fn new(dir: PathBuf, meta: RunMeta) -> Self {
        Self {
            dir,
            meta: Mutex::new(meta),
            writers: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> RunMeta {
        self.meta.lock().expect("meta lock").clone()
    }

    pub fn config_toml(&self) -> Result<String, StoreError> {
        let p = self.dir.join("config.toml");
        fs::read_to_string(&p).map_err(io_err(&p))
    }

    pub fn check_config(&self, hash: &str) -> Result<(), StoreError> {
        let stored = self.meta().config_hash;
        if stored != hash {
            return Err(StoreError::ConfigConflict {
                stored,
                given: hash.to_string(),
            });
        }
        Ok(())
    }

    pub fn rounds_path(&self, stream_id: &str) -> PathBuf {
        self.dir.join("rounds").join(format!("{}.jsonl", route_dir(stream_id)))
    }

    fn state_path(&self, stream_id: &str) -> PathBuf {
        self.dir.join("state").join(format!("{}.json", route_dir(stream_id)))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.dir.join("report")
    }

    fn touch(&self) -> Result<(), StoreError> {
        let mut meta = self.meta.lock().expect("meta lock");
        meta.updated_ms = now_ms().max(meta.updated_ms);
        write_atomic(&self.dir.join("run.json"), &to_versioned(&*meta))
    }

    /// Committed rounds of a stream. A trailing line without a newline is
    /// an interrupted write and is dropped.
    pub fn load_rounds(&self, stream_id: &str) -> Result<Vec<RoundRecord>, StoreError> {
        let path = self.rounds_path(stream_id);
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let mut out = Vec::new();
        let mut reader = BufReader::new(file);
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(io_err(&path))?;
            if n == 0 || !line.ends_with('\n') {
                if n > 0 {
                    log::warn!("{}: dropping partial trailing record", path.display());
                }
                break;
            }
            out.push(read_versioned(&path, line.trim_end())?);
        }
        Ok(out)
    }

    /// Drops a partial trailing record so appends start on a line boundary.
    fn repair_tail(path: &Path) -> Result<(), StoreError> {
        let Ok(bytes) = fs::read(path) else { return Ok(()) };
        if bytes.is_empty() || bytes.ends_with(b"\n") {
            return Ok(());
        }
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
        f.set_len(keep as u64).map_err(io_err(path))
    }

    /// Progress of a stream, folded from its committed rounds.
    pub fn load_progress(&self, spec: &StreamSpec, options: &EngineOptions) -> Result<StreamProgress, StoreError> {
        let mut p = StreamProgress::new(spec, options);
        for rec in self.load_rounds(&spec.stream_id)? {
            p.apply(&rec, options).map_err(|e| StoreError::Corrupt {
                path: self.rounds_path(&spec.stream_id).display().to_string(),
                message: e.to_string(),
            })?;
        }
        Ok(p)
    }

    pub fn load_states(&self) -> Result<BTreeMap<String, StreamState>, StoreError> {
        let dir = self.dir.join("state");
        let mut out = BTreeMap::new();
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        for entry in entries {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let state: StreamState = read_versioned(&path, &text)?;
            out.insert(state.stream_id.clone(), state);
        }
        Ok(out)
    }

    pub fn record(&self) -> Result<RunRecord, StoreError> {
        let streams = self.load_states()?;
        let transcripts = streams
            .keys()
            .map(|s| (s.clone(), format!("rounds/{}.jsonl", route_dir(s))))
            .collect();
        let mut reports = Vec::new();
        collect_files(&self.report_dir(), &self.dir, &mut reports);
        reports.sort();
        Ok(RunRecord {
            meta: self.meta(),
            streams,
            transcripts,
            reports,
        })
    }
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<String>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for e in entries.flatten() {
        let p = e.path();
        if p.is_dir() {
            collect_files(&p, base, out);
        } else if let Ok(rel) = p.strip_prefix(base) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
}

fn sink_err(e: StoreError) -> EngineError {
    EngineError::Store(e.to_string())
}

impl StreamSink for RunHandle {
    fn commit_round(&self, record: &RoundRecord) -> Result<(), EngineError> {
        let mut writers = self.writers.lock().expect("writer lock");
        if !writers.contains_key(&record.stream_id) {
            let path = self.rounds_path(&record.stream_id);
            Self::repair_tail(&path).map_err(sink_err)?;
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| sink_err(io_err(&path)(e)))?;
            writers.insert(record.stream_id.clone(), f);
        }
        let f = writers.get_mut(&record.stream_id).expect("inserted");
        let mut line = to_versioned(record);
        line.push('\n');
        let path = self.rounds_path(&record.stream_id);
        f.write_all(line.as_bytes())
            .and_then(|_| f.sync_data())
            .map_err(|e| sink_err(io_err(&path)(e)))
    }

    fn update_state(&self, progress: &StreamProgress) -> Result<(), EngineError> {
        let state = StreamState::from(progress);
        write_atomic(&self.state_path(&progress.stream_id), &to_versioned(&state)).map_err(sink_err)?;
        self.touch().map_err(sink_err)
    }
}
