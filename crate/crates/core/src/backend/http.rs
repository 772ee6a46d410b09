use std::sync::Arc;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::limiter::{Limiter, LimiterConfig};
use super::{check_capability, BackendError, ChatBackend, ChatMessage, ChatReply, ChatRequest, Usage};
use crate::tasks::ImageStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the credential.
    pub api_key_env: Option<String>,
    pub auth_header: String,
    /// `{key}` is replaced by the credential.
    pub auth_template: String,
    /// Dotted path to the reply text; numeric parts index arrays.
    pub response_path: String,
    pub max_tokens_field: String,
    pub max_new_tokens: Option<u32>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub images: bool,
    pub limiter: LimiterConfig,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            api_key_env: None,
            auth_header: "Authorization".into(),
            auth_template: "Bearer {key}".into(),
            response_path: "choices.0.message.content".into(),
            max_tokens_field: "max_tokens".into(),
            max_new_tokens: None,
            timeout_ms: 120_000,
            max_retries: 3,
            backoff_ms: 500,
            max_backoff_ms: 30_000,
            images: false,
            limiter: LimiterConfig::default(),
        }
    }
}

/// Follows `path` through objects and arrays.
pub fn json_path<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.')
        .filter(|p| !p.is_empty())
        .try_fold(v, |cur, part| match cur {
            Value::Array(items) => items.get(part.parse::<usize>().ok()?),
            Value::Object(map) => map.get(part),
            _ => None,
        })
}

pub struct HttpBackend {
    name: String,
    config: HttpConfig,
    auth: Option<String>,
    client: reqwest::blocking::Client,
    limiter: Limiter,
    images: Option<Arc<dyn ImageStore>>,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("name", &self.name)
            .field("endpoint", &self.config.endpoint)
            .field("model", &self.config.model)
            .finish_non_exhaustive()
    }
}

impl HttpBackend {
    /// Reads the credential from the environment now, so a missing key
    /// fails before the run starts.
    pub fn new(
        name: impl Into<String>,
        config: HttpConfig,
        images: Option<Arc<dyn ImageStore>>,
    ) -> Result<Self, BackendError> {
        let auth = match &config.api_key_env {
            Some(var) => {
                let key = std::env::var(var)
                    .map_err(|_| BackendError::AuthFailure(format!("environment variable {var} is not set")))?;
                Some(config.auth_template.replace("{key}", &key))
            }
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self {
            name: name.into(),
            limiter: Limiter::new(config.limiter),
            config,
            auth,
            client,
            images,
        })
    }

    fn content(&self, m: &ChatMessage) -> Result<Value, BackendError> {
        if m.images.is_empty() {
            return Ok(Value::String(m.content.clone()));
        }
        let store = self.images.as_ref().ok_or_else(|| BackendError::Capability {
            backend: self.name.clone(),
            what: "image inputs without an image store".into(),
        })?;
        let mut parts = vec![json!({"type": "text", "text": m.content})];
        for r in &m.images {
            let png = store.png(r).map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
            let url = format!(
                "data:image/png;base64,{}",
                base64::engine::general_purpose::STANDARD.encode(png)
            );
            parts.push(json!({"type": "image_url", "image_url": {"url": url}}));
        }
        Ok(Value::Array(parts))
    }

    /// The JSON body posted for `req`.
    pub fn body(&self, req: &ChatRequest) -> Result<Value, BackendError> {
        let messages = req
            .messages
            .iter()
            .map(|m| Ok(json!({"role": m.role.as_str(), "content": self.content(m)?})))
            .collect::<Result<Vec<_>, BackendError>>()?;
        let model = if self.config.model.is_empty() {
            &req.model_name
        } else {
            &self.config.model
        };
        let mut body = json!({
            "model": model,
            "messages": messages,
            "temperature": req.temperature,
        });
        let max = self.config.max_new_tokens.unwrap_or(req.max_new_tokens);
        body[self.config.max_tokens_field.as_str()] = json!(max);
        Ok(body)
    }

    fn attempt(&self, body: &Value) -> Result<ChatReply, BackendError> {
        let _permit = self.limiter.acquire();
        let mut post = self.client.post(&self.config.endpoint).json(body);
        if let Some(auth) = &self.auth {
            post = post.header(self.config.auth_header.as_str(), auth);
        }
        let resp = post.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(BackendError::AuthFailure(format!("HTTP {status}")));
        }
        if status.as_u16() == 429 {
            let retry_after_ms = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(|s| s * 1000);
            return Err(BackendError::RateLimited { retry_after_ms });
        }
        if status.is_server_error() {
            return Err(BackendError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::MalformedServerReply(format!("HTTP {status}")));
        }
        let v: Value = resp
            .json()
            .map_err(|e| BackendError::MalformedServerReply(e.to_string()))?;
        let text = json_path(&v, &self.config.response_path)
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::MalformedServerReply(format!("no string at {}", self.config.response_path)))?;
        Ok(ChatReply {
            text: text.to_string(),
            usage: Usage {
                prompt_tokens: json_path(&v, "usage.prompt_tokens").and_then(Value::as_u64),
                completion_tokens: json_path(&v, "usage.completion_tokens").and_then(Value::as_u64),
            },
        })
    }

    fn backoff(&self, attempt: u32, err: &BackendError) -> Duration {
        let exp = self
            .config
            .backoff_ms
            .saturating_mul(1u64 << attempt.min(16))
            .min(self.config.max_backoff_ms);
        match err {
            BackendError::RateLimited {
                retry_after_ms: Some(ms),
            } => Duration::from_millis((*ms).min(self.config.max_backoff_ms).max(exp)),
            _ => Duration::from_millis(exp),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports_images(&self) -> bool {
        self.config.images
    }

    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, BackendError> {
        check_capability(self, req)?;
        let body = self.body(req)?;
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(r) => return Ok(r),
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    let wait = self.backoff(attempt, &e);
                    log::warn!("{}: {e}; retrying in {wait:?}", self.name);
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(e) if e.is_transient() => {
                    return Err(BackendError::RetriesExhausted {
                        attempts: attempt + 1,
                        last: Box::new(e),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::Mutex;

    /// Serves the canned `(status, extra headers, body)` responses in order
    /// and records each request body.
    fn serve(responses: Vec<(u16, &'static str, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (status, headers, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line.to_ascii_lowercase().starts_with("authorization:") {
                        log.lock().unwrap().push(line.trim().to_string());
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n{headers}\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, seen)
    }

    fn backend(url: String) -> HttpBackend {
        HttpBackend::new(
            "live",
            HttpConfig {
                endpoint: url,
                model: "m1".into(),
                backoff_ms: 1,
                max_retries: 2,
                ..HttpConfig::default()
            },
            None,
        )
        .unwrap()
    }

    fn req() -> ChatRequest {
        ChatRequest::new("m1", vec![ChatMessage::system("s"), ChatMessage::user("What is 1+1?")])
    }

    const OK: &str = r#"{"choices":[{"message":{"content":"<answer> 2 </answer>"}}],"usage":{"prompt_tokens":5,"completion_tokens":3}}"#;

    #[test]
    fn extracts_reply_and_sends_messages() {
        let (url, seen) = serve(vec![(200, "", OK.into())]);
        let r = backend(url).chat(&req()).unwrap();
        assert_eq!(r.text, "<answer> 2 </answer>");
        assert_eq!(r.usage.completion_tokens, Some(3));
        let sent: Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
        assert_eq!(sent["model"], "m1");
        assert_eq!(sent["messages"][1]["content"], "What is 1+1?");
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["max_tokens"], 4096);
    }

    #[test]
    fn retries_rate_limits_then_succeeds() {
        let (url, seen) = serve(vec![
            (429, "Retry-After: 0\r\n", "{}".into()),
            (503, "", "{}".into()),
            (200, "", OK.into()),
        ]);
        assert_eq!(backend(url).chat(&req()).unwrap().text, "<answer> 2 </answer>");
        assert_eq!(seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn auth_failure_is_fatal() {
        let (url, seen) = serve(vec![(401, "", "{}".into()), (200, "", OK.into())]);
        assert!(matches!(backend(url).chat(&req()), Err(BackendError::AuthFailure(_))));
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn retry_budget() {
        let (url, _) = serve(vec![
            (500, "", "{}".into()),
            (500, "", "{}".into()),
            (500, "", "{}".into()),
        ]);
        assert!(matches!(
            backend(url).chat(&req()),
            Err(BackendError::RetriesExhausted { attempts: 3, .. })
        ));
    }

    #[test]
    fn malformed_reply() {
        let (url, _) = serve(vec![(200, "", r#"{"choices":[]}"#.into())]);
        assert!(matches!(
            backend(url).chat(&req()),
            Err(BackendError::MalformedServerReply(_))
        ));
    }

    #[test]
    fn credential_from_environment() {
        std::env::set_var("EVALNET_TEST_KEY", "sekrit");
        let (url, seen) = serve(vec![(200, "", OK.into())]);
        let b = HttpBackend::new(
            "live",
            HttpConfig {
                endpoint: url,
                api_key_env: Some("EVALNET_TEST_KEY".into()),
                ..HttpConfig::default()
            },
            None,
        )
        .unwrap();
        b.chat(&req()).unwrap();
        assert_eq!(
            seen.lock().unwrap()[0].to_ascii_lowercase(),
            "authorization: bearer sekrit"
        );
        let missing = HttpBackend::new(
            "live",
            HttpConfig {
                api_key_env: Some("EVALNET_SURELY_UNSET".into()),
                ..HttpConfig::default()
            },
            None,
        );
        assert!(matches!(missing, Err(BackendError::AuthFailure(_))));
    }

    #[test]
    fn multimodal_payload() {
        let store = Arc::new(crate::tasks::MemoryImageStore::new());
        let img = crate::oracles::ImageBuffer::filled(2, 2, [0, 0, 0]).unwrap();
        let r = store.put(&img).unwrap();
        let b = HttpBackend::new(
            "vis",
            HttpConfig {
                images: true,
                ..HttpConfig::default()
            },
            Some(store),
        )
        .unwrap();
        let req = ChatRequest::new("m", vec![ChatMessage::user("look").with_images(vec![r])]);
        let body = b.body(&req).unwrap();
        assert_eq!(body["messages"][0]["content"][0]["text"], "look");
        assert!(body["messages"][0]["content"][1]["image_url"]["url"]
            .as_str()
            .unwrap()
            .starts_with("data:image/png;base64,"));
    }

    #[test]
    fn path_lookup() {
        let v = json!({"a": [{"b": "x"}]});
        assert_eq!(json_path(&v, "a.0.b"), Some(&json!("x")));
        assert_eq!(json_path(&v, "a.1.b"), None);
    }
}
