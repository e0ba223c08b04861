//! Sources of assistant replies: an OpenAI-compatible HTTP endpoint, or a
//! fixed script for reproducible runs.

use std::collections::VecDeque;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::conversation::{Message, Speaker};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("scripted backend has no reply left (after {served} replies)")]
    Exhausted { served: usize },
    #[error("request failed after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },
    #[error("endpoint answered {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("unexpected reply shape: {0}")]
    Shape(String),
    #[error("could not read script `{path}`: {source}")]
    Script {
        path: String,
        source: std::io::Error,
    },
    #[error("script line {line}: {message}")]
    ScriptLine { line: usize, message: String },
    #[error("missing setting {0}")]
    Config(&'static str),
}

pub trait ModelBackend: Send {
    /// The assistant's answer to `messages`, whose last entry is the new
    /// user message.
    fn reply(&mut self, messages: &[Message]) -> Result<String, BackendError>;
}

/// Replies from a list, in order.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    replies: VecDeque<String>,
    served: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptLine {
    Text(String),
    Object { content: String },
}

impl ScriptedBackend {
    pub fn new(replies: impl IntoIterator<Item = impl Into<String>>) -> Self {
        ScriptedBackend {
            replies: replies.into_iter().map(Into::into).collect(),
            served: 0,
        }
    }

    /// One assistant message per line: a JSON string, or an object with a
    /// `content` field.
    pub fn from_jsonl(text: &str) -> Result<Self, BackendError> {
        let mut replies = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ScriptLine = serde_json::from_str(line).map_err(|e| BackendError::ScriptLine {
                line: i + 1,
                message: e.to_string(),
            })?;
            replies.push(match parsed {
                ScriptLine::Text(t) | ScriptLine::Object { content: t } => t,
            });
        }
        Ok(Self::new(replies))
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|source| BackendError::Script {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_jsonl(&text)
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl ModelBackend for ScriptedBackend {
    fn reply(&mut self, _messages: &[Message]) -> Result<String, BackendError> {
        let r = self.replies.pop_front().ok_or(BackendError::Exhausted { served: self.served })?;
        self.served += 1;
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpSettings {
    /// Base URL, or the full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub max_tokens: Option<u32>,
}

impl HttpSettings {
    /// Reads `AUTOTOS_ENDPOINT`, `AUTOTOS_MODEL` and `AUTOTOS_API_KEY`.
    pub fn from_env() -> Result<Self, BackendError> {
        let var = |k| std::env::var(k).ok().filter(|v: &String| !v.is_empty());
        Ok(HttpSettings {
            endpoint: var("AUTOTOS_ENDPOINT").ok_or(BackendError::Config("AUTOTOS_ENDPOINT"))?,
            model: var("AUTOTOS_MODEL").ok_or(BackendError::Config("AUTOTOS_MODEL"))?,
            api_key: var("AUTOTOS_API_KEY"),
            temperature: 0.0,
            max_tokens: None,
        })
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Chat-completions client with greedy decoding.
pub struct HttpBackend {
    settings: HttpSettings,
    client: reqwest::blocking::Client,
    retries: u32,
    backoff: Duration,
    last_attempts: u32,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| BackendError::Transport { attempts: 0, last: e.to_string() })?;
        Ok(HttpBackend {
            settings,
            client,
            retries: 3,
            backoff: Duration::from_secs(1),
            last_attempts: 0,
        })
    }

    /// Base delay between attempts; doubled after each failure.
    pub fn backoff(mut self, d: Duration) -> Self {
        self.backoff = d;
        self
    }

    /// Attempts used by the most recent call.
    pub fn last_attempts(&self) -> u32 {
        self.last_attempts
    }

    fn body(&self, messages: &[Message]) -> serde_json::Value {
        let msgs: Vec<_> = messages
            .iter()
            .map(|m| {
                let role = match m.speaker {
                    Speaker::System => "system",
                    Speaker::User => "user",
                    Speaker::Assistant => "assistant",
                };
                json!({ "role": role, "content": m.content })
            })
            .collect();
        let mut body = json!({
            "model": self.settings.model,
            "messages": msgs,
            "temperature": self.settings.temperature,
        });
        if let Some(n) = self.settings.max_tokens {
            body["max_tokens"] = json!(n);
        }
        body
    }
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(BackendError),
}

impl HttpBackend {
    fn attempt(&self, body: &serde_json::Value) -> Attempt {
        let mut req = self.client.post(self.settings.url()).json(body);
        if let Some(key) = &self.settings.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.is_server_error() || status.as_u16() == 429 {
            return Attempt::Retry(format!("status {status}"));
        }
        if !status.is_success() {
            return Attempt::Fatal(BackendError::Rejected {
                status: status.as_u16(),
                body: text,
            });
        }
        let v: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fatal(BackendError::Shape(e.to_string())),
        };
        match v.pointer("/choices/0/message/content").and_then(|c| c.as_str()) {
            Some(c) => Attempt::Done(c.to_string()),
            None => Attempt::Fatal(BackendError::Shape("no choices[0].message.content".into())),
        }
    }
}

impl ModelBackend for HttpBackend {
    fn reply(&mut self, messages: &[Message]) -> Result<String, BackendError> {
        let body = self.body(messages);
        let mut delay = self.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            self.last_attempts = attempts;
            match self.attempt(&body) {
                Attempt::Done(text) => {
                    tracing::info!(attempts, "model replied");
                    return Ok(text);
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(last) if attempts > self.retries => {
                    return Err(BackendError::Transport { attempts, last })
                }
                Attempt::Retry(last) => {
                    tracing::warn!(attempt = attempts, error = %last, "model call failed; retrying");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    #[test]
    fn script_lines_and_exhaustion() {
        let mut b = ScriptedBackend::from_jsonl("\"one\"\n\n{\"content\":\"two\"}\n").unwrap();
        assert_eq!(b.reply(&[]).unwrap(), "one");
        assert_eq!(b.reply(&[]).unwrap(), "two");
        assert!(matches!(b.reply(&[]), Err(BackendError::Exhausted { served: 2 })));
        assert!(ScriptedBackend::from_jsonl("nope").is_err());
    }

    /// Serves one canned HTTP response per connection, in order, and returns
    /// the request bodies it saw.
    fn serve(responses: Vec<(u16, &'static str)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
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
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            bodies
        });
        (url, handle)
    }

    fn settings(url: String) -> HttpSettings {
        HttpSettings {
            endpoint: url,
            model: "m".into(),
            api_key: Some("k".into()),
            temperature: 0.0,
            max_tokens: None,
        }
    }

    fn user(text: &str) -> Vec<Message> {
        vec![Message { speaker: Speaker::User, content: text.into(), about: None }]
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"def f(s):\n    return []"}}]}"#;

    #[test]
    fn retries_server_errors() {
        let (url, server) = serve(vec![(500, "{}"), (500, "{}"), (200, OK)]);
        let mut b = HttpBackend::new(settings(url)).unwrap().backoff(Duration::from_millis(5));
        assert_eq!(b.reply(&user("hi")).unwrap(), "def f(s):\n    return []");
        assert_eq!(b.last_attempts(), 3);
        let bodies = server.join().unwrap();
        let sent: serde_json::Value = serde_json::from_str(&bodies[2]).unwrap();
        assert_eq!(sent["temperature"], 0.0);
        assert_eq!(sent["messages"][0]["content"], "hi");
    }

    #[test]
    fn gives_up_after_three_retries() {
        let (url, server) = serve(vec![(503, "{}"); 4]);
        let mut b = HttpBackend::new(settings(url)).unwrap().backoff(Duration::from_millis(1));
        assert!(matches!(b.reply(&user("hi")), Err(BackendError::Transport { attempts: 4, .. })));
        server.join().unwrap();
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, server) = serve(vec![(401, "bad key")]);
        let mut b = HttpBackend::new(settings(url)).unwrap().backoff(Duration::from_millis(1));
        assert!(matches!(b.reply(&user("hi")), Err(BackendError::Rejected { status: 401, .. })));
        server.join().unwrap();
    }
}
