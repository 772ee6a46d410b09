//! Run configuration: a single TOML file holding backends, the network,
//! task parameters, engine options and the code runner.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::backend::{CapabilityProfile, ChatBackend, HttpBackend, HttpConfig, ScriptedBackend};
use crate::engine::{Backends, Engine, EngineOptions};
use crate::network::{build_network, AgentNode, EvalNetwork, EvalRoute, NetworkConfig, TopologyKind};
use crate::sandbox::ProcessRunner;
use crate::tasks::{DirImageStore, Generator, ImageStore, TaskParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Scripted(CapabilityProfile),
    Http(HttpConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub topology: TopologyKind,
    pub nodes: Vec<AgentNode>,
    pub routes: Vec<EvalRoute>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerConfig {
    /// Started as `program args... --serve`.
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_pool")]
    pub pool: usize,
}

fn default_pool() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreConfig {
    #[serde(default = "default_runs_dir")]
    pub dir: PathBuf,
}

fn default_runs_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            dir: default_runs_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub store: StoreConfig,
    #[serde(default)]
    pub engine: EngineOptions,
    #[serde(default)]
    pub tasks: TaskParams,
    /// Generated images are written here; kept in memory when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runner: Option<RunnerConfig>,
    pub backends: BTreeMap<String, BackendConfig>,
    pub network: NetworkSection,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("backend {name}: {message}")]
    Backend { name: String, message: String },
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// `${NAME}` is accepted only where a credential is expected; backends
/// name their key variable in `api_key_env` instead of embedding it.
fn interpolation_sites(value: &toml::Value, path: &str, out: &mut Vec<String>) {
    match value {
        toml::Value::String(s) if s.contains("${") => out.push(path.to_string()),
        toml::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                interpolation_sites(v, &format!("{path}[{i}]"), out);
            }
        }
        toml::Value::Table(t) => {
            for (k, v) in t {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                interpolation_sites(v, &p, out);
            }
        }
        _ => {}
    }
}

/// Replaces `${NAME}` with the environment value.
fn interpolate(s: &str) -> Result<String, String> {
    let mut out = String::new();
    let mut rest = s;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let end = rest[start..]
            .find('}')
            .ok_or_else(|| format!("unclosed ${{ in {s:?}"))?
            + start;
        let name = &rest[start + 2..end];
        let value = std::env::var(name).map_err(|_| format!("environment variable {name} is not set"))?;
        out.push_str(&value);
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl Config {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let parse_err = |e: toml::de::Error| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Parse {
                path: path.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        };
        let raw: toml::Value = toml::from_str(text).map_err(parse_err)?;
        let mut sites = Vec::new();
        interpolation_sites(&raw, "", &mut sites);
        let misplaced: Vec<String> = sites
            .into_iter()
            .filter(|p| !(p.starts_with("backends.") && p.ends_with(".auth_template")))
            .map(|p| format!("{p}: environment interpolation is only allowed in credential fields"))
            .collect();
        if !misplaced.is_empty() {
            return Err(ConfigError::Validation(misplaced));
        }
        let config: Config = toml::from_str(text).map_err(parse_err)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Every violation, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if let Err(e) = self.engine.validate() {
            errs.extend(e.split("; ").map(|s| format!("engine: {s}")));
        }
        let t = &self.tasks;
        if t.precision > 18 {
            errs.push(format!("tasks.precision {} above 18", t.precision));
        }
        if !(0.0..=1.0).contains(&t.stu_threshold) {
            errs.push(format!("tasks.stu_threshold {} outside [0, 1]", t.stu_threshold));
        }
        if !(0.0..=1.0).contains(&t.iqp_control_ratio) {
            errs.push(format!(
                "tasks.iqp_control_ratio {} outside [0, 1]",
                t.iqp_control_ratio
            ));
        }
        if t.relative_tolerance < 0.0 {
            errs.push("tasks.relative_tolerance is negative".into());
        }
        if !(100..=60_000).contains(&t.code_timeout_ms) {
            errs.push(format!(
                "tasks.code_timeout_ms {} outside [100, 60000]",
                t.code_timeout_ms
            ));
        }
        if self.backends.is_empty() {
            errs.push("no backends defined".into());
        }
        for (name, b) in &self.backends {
            match b {
                BackendConfig::Scripted(p) => {
                    if let Err(e) = p.validate() {
                        errs.push(format!("backends.{name}: {e}"));
                    }
                }
                BackendConfig::Http(h) => {
                    if h.endpoint.is_empty() {
                        errs.push(format!("backends.{name}: endpoint is empty"));
                    }
                    if h.model.is_empty() {
                        errs.push(format!("backends.{name}: model is empty"));
                    }
                }
            }
        }
        if let Some(r) = &self.runner {
            if r.pool == 0 {
                errs.push("runner.pool must be at least 1".into());
            }
        }
        if let Err(e) = build_network(&self.network_config()) {
            errs.push(format!("network: {e}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(errs))
        }
    }

    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            topology: self.network.topology,
            nodes: self.network.nodes.clone(),
            routes: self.network.routes.clone(),
            known_models: Some(self.backends.keys().cloned().collect()),
        }
    }

    pub fn network(&self) -> Result<EvalNetwork, ConfigError> {
        build_network(&self.network_config()).map_err(|e| ConfigError::Validation(vec![format!("network: {e}")]))
    }

    /// SHA-256 of the resolved config. Fixed for the lifetime of a run.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Builds the engine. With `simulate`, HTTP backends are replaced by
    /// scripted ones with the default profile, so nothing leaves the host.
    pub fn engine(&self, simulate: bool) -> Result<Engine, ConfigError> {
        let images: Option<Arc<dyn ImageStore>> = self
            .images_dir
            .as_ref()
            .map(|d| Arc::new(DirImageStore::new(d)) as Arc<dyn ImageStore>);
        let mut generator = Generator::new(self.tasks.clone());
        if let Some(store) = &images {
            generator = generator.with_image_store(store.clone());
        }
        let mut backends = Backends::new();
        for (name, b) in &self.backends {
            let backend: Arc<dyn ChatBackend> = match b {
                BackendConfig::Scripted(p) => Arc::new(ScriptedBackend::new(name, p.clone())),
                BackendConfig::Http(_) if simulate => {
                    Arc::new(ScriptedBackend::new(name, CapabilityProfile::default()))
                }
                BackendConfig::Http(h) => {
                    let mut h = h.clone();
                    h.auth_template = interpolate(&h.auth_template).map_err(|message| ConfigError::Backend {
                        name: name.clone(),
                        message,
                    })?;
                    let store = images.clone().unwrap_or_else(|| generator.images().clone());
                    Arc::new(
                        HttpBackend::new(name, h, Some(store)).map_err(|e| ConfigError::Backend {
                            name: name.clone(),
                            message: e.to_string(),
                        })?,
                    )
                }
            };
            backends.insert(name.clone(), backend);
        }
        let runner = self.runner.as_ref().map(|r| {
            Arc::new(ProcessRunner::new(r.program.clone(), r.args.clone(), r.pool))
                as Arc<dyn crate::sandbox::CodeRunner>
        });
        Ok(Engine {
            generator,
            backends,
            runner,
            options: self.engine.clone(),
        })
    }
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Config::parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[backends.sim]
kind = "scripted"
default = { kind = "threshold", k = 3 }

[network]
topology = "line"
nodes = [
  { node_id = "E", model_ref = "sim", role = "interviewee" },
  { node_id = "I", model_ref = "sim", role = "interviewer", task_binding = "BTT" },
]
routes = [{ from = "E", to = "I" }]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = Config::parse(MINIMAL, "m.toml").unwrap();
        assert_eq!(c.engine.q_total, 10);
        assert_eq!(c.engine.initial_level, 1);
        assert_eq!(c.store.dir, PathBuf::from("runs"));
        assert!(matches!(c.backends["sim"], BackendConfig::Scripted(_)));
        let again = Config::parse(&c.to_toml(), "again.toml").unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn all_violations_listed() {
        let text = MINIMAL.replace("node_id = \"I\"", "node_id = \"E\"") + "\n[engine]\nq_total = 0\n";
        match Config::parse(&text, "bad.toml") {
            Err(ConfigError::Validation(v)) => {
                assert!(v.iter().any(|e| e.contains("q_total")), "{v:?}");
                assert!(v.iter().any(|e| e.contains("duplicate node id")), "{v:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_error_has_location() {
        let text = MINIMAL.replace("k = 3", "k = ");
        match Config::parse(&text, "p.toml") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interpolation_only_for_credentials() {
        let text = MINIMAL.replace("topology = \"line\"", "topology = \"${TOPO}\"");
        assert!(matches!(
            Config::parse(&text, "i.toml"),
            Err(ConfigError::Validation(_))
        ));
        std::env::set_var("EVALNET_TEST_TOKEN", "abc");
        assert_eq!(interpolate("Bearer ${EVALNET_TEST_TOKEN}").unwrap(), "Bearer abc");
        assert!(interpolate("${EVALNET_SURELY_UNSET_VAR}").is_err());
    }

    #[test]
    fn http_backend_needs_key_unless_simulated() {
        let text = MINIMAL.replace(
            "[network]",
            "[backends.live]\nkind = \"http\"\nendpoint = \"http://127.0.0.1:9/v1/chat\"\nmodel = \"x\"\napi_key_env = \"EVALNET_SURELY_UNSET_KEY\"\n\n[network]",
        );
        let c = Config::parse(&text, "h.toml").unwrap();
        assert!(matches!(c.engine(false), Err(ConfigError::Backend { .. })));
        assert!(c.engine(true).is_ok());
    }
}
