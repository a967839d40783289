use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{whitespace_tokens, CallTag, LlmBackend, LlmError, LlmExchange, LlmRequest};

/// Request/response field mapping of a live completion endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendProfile {
    /// `POST {base}/v1/chat/completions`; `messages`, `temperature`,
    /// `max_tokens` in; `choices[0].message.content` and
    /// `usage.{prompt,completion}_tokens` out.
    Openai,
    /// `POST {base}/api/generate` with `stream: false`; `prompt`,
    /// `options.{temperature,num_predict}` in; `response`,
    /// `prompt_eval_count`, `eval_count` out.
    Ollama,
}

/// Blocking client for an HTTP JSON completion endpoint.
pub struct HttpBackend {
    id: String,
    profile: BackendProfile,
    base_url: String,
    api_key: Option<String>,
    timeout: Duration,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(
        id: impl Into<String>,
        profile: BackendProfile,
        base_url: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            id: id.into(),
            profile,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            timeout,
            agent,
        }
    }

    fn endpoint(&self) -> String {
        match self.profile {
            BackendProfile::Openai => format!("{}/v1/chat/completions", self.base_url),
            BackendProfile::Ollama => format!("{}/api/generate", self.base_url),
        }
    }

    fn body(&self, request: &LlmRequest) -> Value {
        match self.profile {
            BackendProfile::Openai => json!({
                "model": request.model,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "max_tokens": request.max_output_tokens,
                "stream": false,
            }),
            BackendProfile::Ollama => json!({
                "model": request.model,
                "prompt": request.prompt,
                "stream": false,
                "options": {
                    "temperature": request.temperature,
                    "num_predict": request.max_output_tokens,
                },
            }),
        }
    }

    /// Returns (text, prompt tokens, completion tokens) from a response body.
    fn decode(&self, request: &LlmRequest, body: &Value) -> Result<(String, u64, u64), LlmError> {
        let (text, prompt, completion) = match self.profile {
            BackendProfile::Openai => (
                body.pointer("/choices/0/message/content")
                    .and_then(Value::as_str),
                body.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
                body.pointer("/usage/completion_tokens")
                    .and_then(Value::as_u64),
            ),
            BackendProfile::Ollama => (
                body.get("response").and_then(Value::as_str),
                body.get("prompt_eval_count").and_then(Value::as_u64),
                body.get("eval_count").and_then(Value::as_u64),
            ),
        };
        let text = text
            .ok_or_else(|| LlmError::Protocol("response lacks completion text".into()))?
            .to_string();
        let prompt = prompt.unwrap_or_else(|| whitespace_tokens(&request.prompt));
        let completion = completion.unwrap_or_else(|| whitespace_tokens(&text));
        Ok((text, prompt, completion))
    }
}

impl LlmBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &LlmRequest, tag: &CallTag) -> Result<LlmExchange, LlmError> {
        let started = Instant::now();
        let mut call = self.agent.post(&self.endpoint());
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(self.body(request))
            .map_err(|e| self.map_err(e))?;
        let status = response.status();
        if !status.is_success() {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(if status.is_server_error() || status.as_u16() == 404 {
                LlmError::BackendUnavailable(format!("{}: HTTP {status}: {detail}", self.id))
            } else {
                LlmError::Protocol(format!("HTTP {status}: {detail}"))
            });
        }
        let body: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| self.map_err(e))?;
        let (response_text, prompt_tokens, completion_tokens) = self.decode(request, &body)?;
        Ok(LlmExchange {
            request: request.clone(),
            tag: tag.clone(),
            response_text,
            prompt_tokens,
            completion_tokens,
            wall_time: started.elapsed().as_secs_f64(),
            backend: self.id.clone(),
        })
    }
}

impl HttpBackend {
    fn map_err(&self, err: ureq::Error) -> LlmError {
        match err {
            ureq::Error::Timeout(_) => LlmError::Timeout(self.timeout),
            ureq::Error::ConnectionFailed | ureq::Error::HostNotFound | ureq::Error::Io(_) => {
                LlmError::BackendUnavailable(format!("{}: {err}", self.id))
            }
            other => LlmError::Protocol(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread;

    use super::*;

    /// Serves one HTTP request with `reply`, returning the request body.
    fn one_shot_server(reply: Value) -> (String, thread::JoinHandle<(String, Value)>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let payload = reply.to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                payload.len(),
                payload
            )
            .unwrap();
            (request_line, serde_json::from_slice(&body).unwrap())
        });
        (url, handle)
    }

    #[test]
    fn openai_wire_mapping() {
        let (url, server) = one_shot_server(json!({
            "choices": [{"message": {"role": "assistant", "content": "```go\npackage main\n```"}}],
            "usage": {"prompt_tokens": 11, "completion_tokens": 7}
        }));
        let backend = HttpBackend::new(
            "oa",
            BackendProfile::Openai,
            url,
            Some("k".into()),
            Duration::from_secs(5),
        );
        let req = LlmRequest::new("qwen", 0.1, "translate", 256).unwrap();
        let ex = backend
            .complete(&req, &CallTag::new("translate", 1))
            .unwrap();
        let (line, body) = server.join().unwrap();
        assert!(line.starts_with("POST /v1/chat/completions"));
        assert_eq!(body["model"], "qwen");
        assert_eq!(body["messages"][0]["content"], "translate");
        assert_eq!(body["max_tokens"], 256);
        assert_eq!(ex.response_text, "```go\npackage main\n```");
        assert_eq!((ex.prompt_tokens, ex.completion_tokens), (11, 7));
    }

    #[test]
    fn ollama_wire_mapping_with_missing_counts() {
        let (url, server) = one_shot_server(json!({"response": "package main", "done": true}));
        let backend = HttpBackend::new(
            "ol",
            BackendProfile::Ollama,
            url,
            None,
            Duration::from_secs(5),
        );
        let req = LlmRequest::new("gemma3", 0.8, "two words", 64).unwrap();
        let ex = backend
            .complete(&req, &CallTag::new("translate", 1))
            .unwrap();
        let (line, body) = server.join().unwrap();
        assert!(line.starts_with("POST /api/generate"));
        assert_eq!(body["options"]["temperature"], 0.8);
        assert_eq!(body["stream"], false);
        assert_eq!((ex.prompt_tokens, ex.completion_tokens), (2, 2));
    }

    #[test]
    fn refused_connection_is_unavailable() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        drop(listener);
        let backend = HttpBackend::new(
            "x",
            BackendProfile::Openai,
            url,
            None,
            Duration::from_secs(2),
        );
        let req = LlmRequest::new("m", 0.1, "p", 8).unwrap();
        assert!(matches!(
            backend.complete(&req, &CallTag::new("t", 1)),
            Err(LlmError::BackendUnavailable(_))
        ));
    }

    /// Talks to a real local model when `REFAAS_LIVE_LLM_URL` is set.
    #[test]
    #[ignore = "needs a locally served model"]
    fn live_backend_smoke() {
        let url = std::env::var("REFAAS_LIVE_LLM_URL").expect("REFAAS_LIVE_LLM_URL");
        let model =
            std::env::var("REFAAS_LIVE_LLM_MODEL").unwrap_or_else(|_| "qwen2.5-coder:32b".into());
        let backend = HttpBackend::new(
            "live",
            BackendProfile::Ollama,
            url,
            None,
            Duration::from_secs(600),
        );
        let req = LlmRequest::new(model, 0.1, "Write a Go hello world program.", 256).unwrap();
        let ex = backend
            .complete(&req, &CallTag::new("translate", 1))
            .unwrap();
        assert!(!ex.response_text.trim().is_empty());
    }
}
