use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{whitespace_tokens, CallTag, LlmBackend, LlmError, LlmExchange, LlmRequest};

/// One scripted response.
///
/// `template_id` may be `*` and `attempt` may be omitted to match any call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub template_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    pub response_text: String,
}

impl ReplayEntry {
    fn specificity(&self, tag: &CallTag) -> Option<u8> {
        let template = if self.template_id == tag.template_id {
            2
        } else if self.template_id == "*" {
            0
        } else {
            return None;
        };
        let attempt = match self.attempt {
            Some(a) if a == tag.attempt => 1,
            Some(_) => return None,
            None => 0,
        };
        Some(template + attempt)
    }
}

/// Deterministic stand-in for a model: answers each call with the transcript
/// entry matching its (template id, attempt) and fails loudly when none does.
///
/// Lookups are stateless, so one backend can serve many jobs concurrently and
/// identical call sequences always yield identical exchanges.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    id: String,
    entries: Vec<ReplayEntry>,
}

impl ReplayBackend {
    pub fn new(id: impl Into<String>, entries: Vec<ReplayEntry>) -> Self {
        Self {
            id: id.into(),
            entries,
        }
    }

    /// Parses a transcript: a JSON list of entries.
    pub fn from_json(id: impl Into<String>, text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(id, serde_json::from_str(text)?))
    }

    /// Loads `<name>.replay.json`; the backend id becomes `replay:<name>`.
    pub fn load(path: &Path) -> io::Result<Self> {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .map(|n| n.trim_end_matches(".json").trim_end_matches(".replay"))
            .unwrap_or("transcript");
        let text = fs::read_to_string(path)?;
        Self::from_json(format!("replay:{name}"), &text)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn entries(&self) -> &[ReplayEntry] {
        &self.entries
    }
}

impl LlmBackend for ReplayBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &LlmRequest, tag: &CallTag) -> Result<LlmExchange, LlmError> {
        // Most specific match wins; among equals, the first in the file.
        let entry = self
            .entries
            .iter()
            .filter_map(|e| e.specificity(tag).map(|s| (s, e)))
            .fold(None::<(u8, &ReplayEntry)>, |best, (s, e)| match best {
                Some((bs, _)) if bs >= s => best,
                _ => Some((s, e)),
            })
            .map(|(_, e)| e)
            .ok_or_else(|| LlmError::TranscriptExhausted {
                template_id: tag.template_id.clone(),
                attempt: tag.attempt,
            })?;
        Ok(LlmExchange {
            request: request.clone(),
            tag: tag.clone(),
            response_text: entry.response_text.clone(),
            prompt_tokens: whitespace_tokens(&request.prompt),
            completion_tokens: whitespace_tokens(&entry.response_text),
            wall_time: 0.0,
            backend: self.id.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backend() -> ReplayBackend {
        ReplayBackend::from_json(
            "replay:t",
            r#"[
              {"template_id": "translate", "attempt": 1, "response_text": "first answer"},
              {"template_id": "translate", "attempt": 2, "response_text": "second"},
              {"template_id": "*", "response_text": "fallback text here"}
            ]"#,
        )
        .unwrap()
    }

    fn req() -> LlmRequest {
        LlmRequest::new("any", 0.1, "please translate this", 64).unwrap()
    }

    #[test]
    fn returns_scripted_text_with_whitespace_tokens() {
        let ex = backend()
            .complete(&req(), &CallTag::new("translate", 1))
            .unwrap();
        assert_eq!(ex.response_text, "first answer");
        assert_eq!(ex.prompt_tokens, 3);
        assert_eq!(ex.completion_tokens, 2);
        assert_eq!(ex.backend, "replay:t");
    }

    #[test]
    fn specific_entry_beats_wildcard() {
        let b = backend();
        assert_eq!(
            b.complete(&req(), &CallTag::new("translate", 2))
                .unwrap()
                .response_text,
            "second"
        );
        assert_eq!(
            b.complete(&req(), &CallTag::new("translate", 3))
                .unwrap()
                .response_text,
            "fallback text here"
        );
    }

    #[test]
    fn exhaustion_is_loud() {
        let b = ReplayBackend::new("r", vec![]);
        assert_eq!(
            b.complete(&req(), &CallTag::new("document", 1)),
            Err(LlmError::TranscriptExhausted {
                template_id: "document".into(),
                attempt: 1
            })
        );
    }

    #[test]
    fn deterministic() {
        let b = backend();
        let tags = [CallTag::new("translate", 1), CallTag::new("align", 4)];
        let first: Vec<_> = tags.iter().map(|t| b.complete(&req(), t)).collect();
        let second: Vec<_> = tags.iter().map(|t| b.complete(&req(), t)).collect();
        assert_eq!(first, second);
    }
}
