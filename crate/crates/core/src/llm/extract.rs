use serde::{Deserialize, Serialize};

use super::LlmError;

/// What code in one language looks like inside a model response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSyntax {
    /// Fence info-strings that denote this language (`go`, `golang`, ...).
    pub fence_tags: Vec<String>,
    /// Prefixes that a plausible first line of unfenced code starts with.
    pub anchors: Vec<String>,
}

struct Block {
    info: String,
    body: String,
}

fn fence_marker(line: &str) -> Option<(&str, &str)> {
    let indent = line.len() - line.trim_start_matches(' ').len();
    if indent > 3 {
        return None;
    }
    let trimmed = &line[indent..];
    for ch in ['`', '~'] {
        let run = trimmed.len() - trimmed.trim_start_matches(ch).len();
        if run >= 3 {
            return Some(trimmed.split_at(run));
        }
    }
    None
}

fn fenced_blocks(text: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let Some((marker, info)) = fence_marker(line) else {
            continue;
        };
        let info = info
            .split_whitespace()
            .next()
            .unwrap_or("")
            .to_ascii_lowercase();
        let mut body = Vec::new();
        for inner in lines.by_ref() {
            match fence_marker(inner) {
                Some((close, rest))
                    if close.starts_with(&marker[..1])
                        && close.len() >= marker.len()
                        && rest.trim().is_empty() =>
                {
                    break
                }
                _ => body.push(inner),
            }
        }
        blocks.push(Block {
            info,
            body: body.join("\n"),
        });
    }
    blocks
}

/// Drops leading blank lines and trailing whitespace.
fn tidy(code: &str) -> String {
    let start = code
        .lines()
        .take_while(|l| l.trim().is_empty())
        .map(|l| l.len() + 1)
        .sum::<usize>()
        .min(code.len());
    code[start..].trim_end().to_string()
}

/// Pulls the source program out of a model response.
///
/// The last fenced block whose info-string names the language (or is empty)
/// wins. Without a usable fence, the whole response is returned if its first
/// non-blank line starts with one of the language anchors.
pub fn extract_code(response: &str, syntax: &CodeSyntax) -> Result<String, LlmError> {
    let chosen = fenced_blocks(response)
        .into_iter()
        .rfind(|b| b.info.is_empty() || syntax.fence_tags.iter().any(|t| t == &b.info));
    if let Some(block) = chosen {
        let code = tidy(&block.body);
        if code.is_empty() {
            return Err(LlmError::ExtractionFailed(
                "matching code block is empty".into(),
            ));
        }
        return Ok(code);
    }
    let first = response
        .lines()
        .map(str::trim_start)
        .find(|l| !l.is_empty());
    match first {
        Some(line) if syntax.anchors.iter().any(|a| line.starts_with(a.as_str())) => {
            Ok(tidy(response))
        }
        _ => Err(LlmError::ExtractionFailed(
            "response contains no code block for the target language".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn go() -> CodeSyntax {
        CodeSyntax {
            fence_tags: vec!["go".into(), "golang".into()],
            anchors: vec!["package ".into()],
        }
    }

    #[test]
    fn strips_fence_and_prose() {
        let out = extract_code(
            "Here is the code:\n```go\npackage main\n```\nHope it helps",
            &go(),
        );
        assert_eq!(out.unwrap(), "package main");
    }

    #[test]
    fn last_fence_wins() {
        let text = "Draft:\n```go\npackage draft\n```\nFinal:\n```go\npackage main\n\nfunc main() {}\n```\n";
        assert_eq!(
            extract_code(text, &go()).unwrap(),
            "package main\n\nfunc main() {}"
        );
    }

    #[test]
    fn other_language_fences_are_skipped() {
        let text = "```go\npackage main\n```\nand the original:\n```python\nprint(1)\n```";
        assert_eq!(extract_code(text, &go()).unwrap(), "package main");
    }

    #[test]
    fn untagged_fence_counts() {
        assert_eq!(
            extract_code("```\npackage x\n```", &go()).unwrap(),
            "package x"
        );
    }

    #[test]
    fn prose_without_code_fails() {
        let err = extract_code("I translated the function. It adds two numbers.", &go());
        assert!(matches!(err, Err(LlmError::ExtractionFailed(_))));
    }

    #[test]
    fn bare_code_with_anchor_is_accepted() {
        assert_eq!(
            extract_code("\n\npackage main\nfunc main() {}\n\n", &go()).unwrap(),
            "package main\nfunc main() {}"
        );
    }

    #[test]
    fn unterminated_fence_runs_to_end() {
        assert_eq!(
            extract_code("```go\npackage main\nfunc main() {}", &go()).unwrap(),
            "package main\nfunc main() {}"
        );
    }

    proptest! {
        #[test]
        fn extraction_is_idempotent(
            body in proptest::collection::vec("[a-z(){} =\t]{0,30}", 0..8),
            prose in "[A-Za-z ,.]{0,40}",
        ) {
            let code = format!("package main\n{}", body.join("\n"));
            let response = format!("{prose}\n```go\n{code}\n```\n{prose}");
            let once = extract_code(&response, &go()).unwrap();
            let twice = extract_code(&once, &go()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
