//! Model adapters: offline mocks and an HTTP chat-completion client.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::extract::{extract_method, strip_fences};
use super::prompt::Mitigation;
use super::HarnessError;
use crate::lexer::{END_TAG, START_TAG};

/// Environment variable holding the API token for remote adapters.
pub const API_KEY_ENV: &str = "ACR_API_KEY";

/// One generation request.
#[derive(Debug, Clone)]
pub struct Query<'a> {
    /// Stable key: the instance id, or `id:ptype` for a variant.
    pub key: &'a str,
    pub prompt: &'a str,
    /// The tagged input code (used by mocks).
    pub input: &'a str,
    /// The reference revision (used by mocks only).
    pub reference: &'a str,
    pub n: usize,
}

pub trait ModelAdapter: Send + Sync {
    fn name(&self) -> &str;

    fn instruction_tuned(&self) -> bool {
        true
    }

    /// Raw responses, at most `q.n`.
    fn generate(&self, q: &Query<'_>) -> Result<Vec<String>, HarnessError>;
}

/// A candidate revision after post-processing.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: String,
    /// No method could be extracted; `text` is the fence-stripped response.
    pub unparseable: bool,
}

/// Query the adapter and extract one method per response.
pub fn query_model(adapter: &dyn ModelAdapter, q: &Query<'_>) -> Result<Vec<Candidate>, HarnessError> {
    let responses = adapter.generate(q)?;
    if responses.is_empty() {
        return Err(HarnessError::EmptyResponse(q.key.to_string()));
    }
    Ok(responses
        .iter()
        .take(q.n)
        .map(|r| match extract_method(r) {
            Some(text) => Candidate {
                text,
                unparseable: false,
            },
            None => Candidate {
                text: strip_fences(r).to_string(),
                unparseable: true,
            },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockMode {
    /// Returns the reference revision.
    EchoGt,
    /// Returns the input unchanged.
    EchoInput,
    /// Returns the reference with one extra dead statement.
    GtPlusNoise,
    /// Returns canned responses by query key.
    Scripted(HashMap<String, Vec<String>>),
}

pub struct MockAdapter {
    pub name: String,
    pub mode: MockMode,
    pub instruction_tuned: bool,
}

#[derive(Debug, Deserialize)]
struct ScriptLine {
    key: String,
    responses: Vec<String>,
}

impl MockAdapter {
    pub fn new(mode: MockMode) -> Self {
        let name = match &mode {
            MockMode::EchoGt => "mock-echo-gt",
            MockMode::EchoInput => "mock-echo-input",
            MockMode::GtPlusNoise => "mock-gt-plus-noise",
            MockMode::Scripted(_) => "mock-scripted",
        };
        MockAdapter {
            name: name.to_string(),
            mode,
            instruction_tuned: true,
        }
    }

    /// Canned responses from a JSONL file of `{"key": .., "responses": [..]}`.
    pub fn scripted_from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let l: ScriptLine = serde_json::from_str(line)
                .map_err(|e| HarnessError::Schema(format!("{}:{}: {e}", path.display(), i + 1)))?;
            map.insert(l.key, l.responses);
        }
        Ok(MockAdapter::new(MockMode::Scripted(map)))
    }
}

/// The reference with `int acrNoise = 0;` as the first body statement.
pub fn with_noise(reference: &str) -> String {
    match reference.find('{') {
        Some(i) => format!("{} int acrNoise = 0;{}", &reference[..=i], &reference[i + 1..]),
        None => reference.to_string(),
    }
}

impl ModelAdapter for MockAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn instruction_tuned(&self) -> bool {
        self.instruction_tuned
    }

    fn generate(&self, q: &Query<'_>) -> Result<Vec<String>, HarnessError> {
        let one = match &self.mode {
            MockMode::EchoGt => q.reference.to_string(),
            MockMode::EchoInput => q.input.replace(START_TAG, "").replace(END_TAG, ""),
            MockMode::GtPlusNoise => with_noise(q.reference),
            MockMode::Scripted(map) => {
                let rs = map
                    .get(q.key)
                    .filter(|r| !r.is_empty())
                    .ok_or_else(|| HarnessError::EmptyResponse(q.key.to_string()))?;
                return Ok(rs.iter().cycle().take(q.n).cloned().collect());
            }
        };
        Ok(vec![one; q.n])
    }
}

/// Sends one JSON request and returns the JSON response.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, body: &Value, api_key: Option<&str>, timeout: Duration) -> Result<Value, String>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self, HarnessError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| HarnessError::Transport(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn post(&self, url: &str, body: &Value, api_key: Option<&str>, timeout: Duration) -> Result<Value, String> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(k) = api_key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()));
        }
        resp.json::<Value>().map_err(|e| e.to_string())
    }
}

/// Adapter settings, typically read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterConfig {
    pub name: String,
    /// `http` or `mock`.
    pub kind: String,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub samples: usize,
    pub mitigation: Mitigation,
    pub timeout_secs: u64,
    pub max_parallel: usize,
    pub retries: u32,
    pub retry_backoff_ms: u64,
    pub instruction_tuned: bool,
    /// For `kind = "mock"`: echo-gt, echo-input, gt-plus-noise or scripted.
    pub mock_mode: String,
    /// Response script for the scripted mock.
    pub script: Option<String>,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            name: String::new(),
            kind: "mock".into(),
            endpoint: String::new(),
            model: String::new(),
            temperature: 0.2,
            samples: 10,
            mitigation: Mitigation::None,
            timeout_secs: 60,
            max_parallel: 4,
            retries: 3,
            retry_backoff_ms: 500,
            instruction_tuned: true,
            mock_mode: "echo-gt".into(),
            script: None,
        }
    }
}

impl AdapterConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(HarnessError::Config("temperature must be non-negative".into()));
        }
        if self.samples == 0 {
            return Err(HarnessError::Config("samples must be at least 1".into()));
        }
        if self.kind == "http" && (self.endpoint.is_empty() || self.model.is_empty()) {
            return Err(HarnessError::Config("http adapters need an endpoint and a model".into()));
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: AdapterConfig =
            toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse `mock:<mode>`, `mock:scripted=<path>` or a path to a TOML file.
    pub fn from_descriptor(descriptor: &str) -> Result<Self, HarnessError> {
        if let Some(mode) = descriptor.strip_prefix("mock:") {
            let (mode, script) = match mode.split_once('=') {
                Some((m, p)) => (m, Some(p.to_string())),
                None => (mode, None),
            };
            let cfg = AdapterConfig {
                name: format!("mock-{mode}"),
                mock_mode: mode.to_string(),
                script,
                ..Default::default()
            };
            return Ok(cfg);
        }
        Self::from_toml_file(Path::new(descriptor))
    }

    pub fn build(&self) -> Result<Box<dyn ModelAdapter>, HarnessError> {
        self.validate()?;
        match self.kind.as_str() {
            "mock" => {
                let mut m = match self.mock_mode.as_str() {
                    "echo-gt" => MockAdapter::new(MockMode::EchoGt),
                    "echo-input" => MockAdapter::new(MockMode::EchoInput),
                    "gt-plus-noise" => MockAdapter::new(MockMode::GtPlusNoise),
                    "scripted" => {
                        let path = self
                            .script
                            .as_deref()
                            .ok_or_else(|| HarnessError::Config("scripted mock needs a script path".into()))?;
                        MockAdapter::scripted_from_file(Path::new(path))?
                    }
                    other => return Err(HarnessError::Config(format!("unknown mock mode `{other}`"))),
                };
                if !self.name.is_empty() {
                    m.name = self.name.clone();
                }
                m.instruction_tuned = self.instruction_tuned;
                Ok(Box::new(m))
            }
            "http" => Ok(Box::new(HttpAdapter::from_env(
                self.clone(),
                Box::new(ReqwestTransport::new()?),
            ))),
            other => Err(HarnessError::Config(format!("unknown adapter kind `{other}`"))),
        }
    }
}

/// Chat-completion client: one user message, no system prompt.
pub struct HttpAdapter {
    config: AdapterConfig,
    transport: Box<dyn Transport>,
    api_key: Option<String>,
}

impl HttpAdapter {
    /// The API key is taken from `ACR_API_KEY` when set.
    pub fn from_env(config: AdapterConfig, transport: Box<dyn Transport>) -> Self {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        HttpAdapter {
            config,
            transport,
            api_key,
        }
    }

    pub fn with_key(config: AdapterConfig, transport: Box<dyn Transport>, api_key: Option<String>) -> Self {
        HttpAdapter {
            config,
            transport,
            api_key,
        }
    }

    fn request(&self, prompt: &str, n: usize) -> Result<Vec<String>, HarnessError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "n": n,
        });
        let timeout = Duration::from_secs(self.config.timeout_secs);
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.retry_backoff_ms << (attempt - 1)));
            }
            match self
                .transport
                .post(&self.config.endpoint, &body, self.api_key.as_deref(), timeout)
            {
                Ok(v) => return Ok(parse_choices(&v)),
                Err(e) => {
                    log::warn!("{}: attempt {} failed: {e}", self.config.name, attempt + 1);
                    last = e;
                }
            }
        }
        Err(HarnessError::Transport(format!(
            "{} attempts failed, last error: {last}",
            self.config.retries + 1
        )))
    }
}

fn parse_choices(v: &Value) -> Vec<String> {
    v.get("choices")
        .and_then(Value::as_array)
        .map(|cs| {
            cs.iter()
                .filter_map(|c| {
                    c.pointer("/message/content")
                        .or_else(|| c.get("text"))
                        .and_then(Value::as_str)
                        .map(str::to_string)
                })
                .collect()
        })
        .unwrap_or_default()
}

impl ModelAdapter for HttpAdapter {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn instruction_tuned(&self) -> bool {
        self.config.instruction_tuned
    }

    fn generate(&self, q: &Query<'_>) -> Result<Vec<String>, HarnessError> {
        let mut out = Vec::new();
        // Some endpoints ignore `n`; ask again for the remainder.
        for _ in 0..q.n {
            let got = self.request(q.prompt, q.n - out.len())?;
            if got.is_empty() {
                break;
            }
            out.extend(got);
            if out.len() >= q.n {
                break;
            }
        }
        out.truncate(q.n);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Flaky {
        failures: usize,
        calls: AtomicUsize,
    }

    impl Transport for Flaky {
        fn post(&self, _: &str, body: &Value, key: Option<&str>, _: Duration) -> Result<Value, String> {
            let k = self.calls.fetch_add(1, Ordering::SeqCst);
            assert_eq!(key, Some("secret"));
            if k < self.failures {
                return Err("connection reset".into());
            }
            let n = body["n"].as_u64().unwrap() as usize;
            let choices: Vec<Value> = (0..n)
                .map(|_| json!({"message": {"content": "```java\nvoid f() { g(); }\n```"}}))
                .collect();
            Ok(json!({ "choices": choices }))
        }
    }

    fn config(retries: u32) -> AdapterConfig {
        AdapterConfig {
            name: "remote".into(),
            kind: "http".into(),
            endpoint: "http://unused".into(),
            model: "m".into(),
            retries,
            retry_backoff_ms: 0,
            ..Default::default()
        }
    }

    fn query(n: usize) -> Query<'static> {
        Query {
            key: "k",
            prompt: "p",
            input: "",
            reference: "",
            n,
        }
    }

    #[test]
    fn retries_within_budget_succeed() {
        let t = Flaky {
            failures: 2,
            calls: AtomicUsize::new(0),
        };
        let a = HttpAdapter::with_key(config(3), Box::new(t), Some("secret".into()));
        let c = query_model(&a, &query(3)).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].text, "void f() { g(); }");
    }

    #[test]
    fn exhausted_budget_surfaces_transport_error() {
        let t = Flaky {
            failures: 5,
            calls: AtomicUsize::new(0),
        };
        let a = HttpAdapter::with_key(config(3), Box::new(t), Some("secret".into()));
        assert!(matches!(a.generate(&query(1)), Err(HarnessError::Transport(_))));
    }

    #[test]
    fn mock_modes() {
        let q = Query {
            key: "k",
            prompt: "",
            input: "void f() { <START> a(); <END> }",
            reference: "void f() { b(); }",
            n: 2,
        };
        let gt = MockAdapter::new(MockMode::EchoGt).generate(&q).unwrap();
        assert_eq!(gt, vec!["void f() { b(); }"; 2]);
        let inp = MockAdapter::new(MockMode::EchoInput).generate(&q).unwrap();
        assert!(!inp[0].contains(START_TAG));
        let noisy = MockAdapter::new(MockMode::GtPlusNoise).generate(&q).unwrap();
        assert_eq!(noisy[0], "void f() { int acrNoise = 0; b(); }");
    }
}
