use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LlmError;

/// Whether a template's response is expected to carry code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateOutput {
    /// The response must yield a target-language source file.
    Code,
    /// Advisory text (e.g. documentation); never fails extraction.
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub body: String,
    pub output: TemplateOutput,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, output: TemplateOutput, body: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            body: body.into(),
            output,
        }
    }

    /// Parses the template file format: an `output: code|text` header line,
    /// a `---` separator line, then the body.
    pub fn parse(id: impl Into<String>, text: &str) -> Result<Self, String> {
        let (header, body) = text
            .split_once("\n---\n")
            .ok_or_else(|| "missing `---` header separator".to_string())?;
        let mut output = None;
        for line in header.lines().map(str::trim).filter(|l| !l.is_empty()) {
            match line.split_once(':') {
                Some(("output", "code")) | Some(("output", " code")) => {
                    output = Some(TemplateOutput::Code)
                }
                Some(("output", "text")) | Some(("output", " text")) => {
                    output = Some(TemplateOutput::Text)
                }
                _ => return Err(format!("unrecognized header line `{line}`")),
            }
        }
        Ok(Self::new(
            id,
            output.ok_or_else(|| "header lacks `output:`".to_string())?,
            body,
        ))
    }

    /// Placeholder names referenced by the body, in order of appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut out = Vec::new();
        scan(&self.body, |piece| {
            if let Piece::Placeholder(name) = piece {
                if !out.contains(&name) {
                    out.push(name);
                }
            }
        });
        out
    }
}

enum Piece<'a> {
    Text(&'a str),
    Placeholder(&'a str),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Splits `body` into literal text and `{identifier}` placeholders. Braces
/// that do not enclose an identifier are literal.
fn scan<'a>(body: &'a str, mut emit: impl FnMut(Piece<'a>)) {
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_ident(&after[..close]) => {
                emit(Piece::Text(&rest[..open]));
                emit(Piece::Placeholder(&after[..close]));
                rest = &after[close + 1..];
            }
            _ => {
                emit(Piece::Text(&rest[..=open]));
                rest = after;
            }
        }
    }
    emit(Piece::Text(rest));
}

/// Substitutes every `{name}` placeholder in one pass. Bound values are
/// emitted verbatim and never re-scanned.
pub fn render(
    template: &PromptTemplate,
    bindings: &BTreeMap<&str, String>,
) -> Result<String, LlmError> {
    let mut out = String::with_capacity(template.body.len() * 2);
    let mut missing = None;
    scan(&template.body, |piece| match piece {
        Piece::Text(t) => out.push_str(t),
        Piece::Placeholder(name) => match bindings.get(name) {
            Some(value) => out.push_str(value),
            None => {
                missing.get_or_insert_with(|| name.to_string());
            }
        },
    });
    match missing {
        Some(name) => Err(LlmError::MissingBinding(name)),
        None => Ok(out),
    }
}

const BUILTIN: &[(&str, &str)] = &[
    (
        "document",
        include_str!("../../../../templates/document.prompt"),
    ),
    (
        "translate",
        include_str!("../../../../templates/translate.prompt"),
    ),
    (
        "fix_build",
        include_str!("../../../../templates/fix_build.prompt"),
    ),
    ("align", include_str!("../../../../templates/align.prompt")),
];

/// Prompt templates by id.
#[derive(Debug, Clone, Default)]
pub struct TemplateStore {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateStore {
    /// The bundled `document`, `translate`, `fix_build` and `align` templates.
    pub fn builtin() -> Self {
        let mut store = Self::default();
        for (id, text) in BUILTIN {
            store.insert(PromptTemplate::parse(*id, text).expect("bundled template parses"));
        }
        store
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.id.clone(), template);
    }

    /// Adds (or replaces) templates from `<id>.prompt` files in `dir`.
    pub fn load_dir(&mut self, dir: &Path) -> io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let (Some(stem), Some("prompt")) = (
                path.file_stem().and_then(|s| s.to_str()),
                path.extension().and_then(|s| s.to_str()),
            ) else {
                continue;
            };
            let text = fs::read_to_string(&path)?;
            let template = PromptTemplate::parse(stem, &text).map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}: {e}", path.display()),
                )
            })?;
            self.insert(template);
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate, LlmError> {
        self.templates
            .get(id)
            .ok_or_else(|| LlmError::UnknownTemplate(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.templates.contains_key(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bindings(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn substitutes_all_placeholders() {
        let t = PromptTemplate::new(
            "t",
            TemplateOutput::Code,
            "Translate to {target_language}:\n{source_code}",
        );
        let out = render(
            &t,
            &bindings(&[("target_language", "go"), ("source_code", "def f(): pass")]),
        )
        .unwrap();
        assert_eq!(out, "Translate to go:\ndef f(): pass");
    }

    #[test]
    fn missing_binding() {
        let t = PromptTemplate::new("t", TemplateOutput::Code, "{target_language} {source_code}");
        assert_eq!(
            render(&t, &bindings(&[("target_language", "go")])),
            Err(LlmError::MissingBinding("source_code".into()))
        );
    }

    #[test]
    fn braces_in_bindings_are_not_resubstituted() {
        let t = PromptTemplate::new("t", TemplateOutput::Code, "code: {source_code}");
        let out = render(
            &t,
            &bindings(&[
                ("source_code", "x = {target_language} {}"),
                ("target_language", "go"),
            ]),
        )
        .unwrap();
        assert_eq!(out, "code: x = {target_language} {}");
    }

    #[test]
    fn literal_braces_in_body_survive() {
        let t = PromptTemplate::new(
            "t",
            TemplateOutput::Text,
            "JSON like {\"a\": 1} and {} for {x}",
        );
        assert_eq!(t.placeholders(), ["x"]);
        assert_eq!(
            render(&t, &bindings(&[("x", "X")])).unwrap(),
            "JSON like {\"a\": 1} and {} for X"
        );
    }

    #[test]
    fn builtin_templates_use_known_placeholders() {
        let known = [
            "source_code",
            "source_language",
            "target_language",
            "error_output",
            "original_code",
            "current_code",
            "documented_code",
        ];
        let store = TemplateStore::builtin();
        for id in ["document", "translate", "fix_build", "align"] {
            let t = store.get(id).unwrap();
            for p in t.placeholders() {
                assert!(known.contains(&p), "{id}: {p}");
            }
        }
        assert_eq!(store.get("document").unwrap().output, TemplateOutput::Text);
        assert_eq!(store.get("fix_build").unwrap().output, TemplateOutput::Code);
    }

    #[test]
    fn parse_header() {
        let t = PromptTemplate::parse("x", "output: text\n---\nhello {source_code}").unwrap();
        assert_eq!(t.output, TemplateOutput::Text);
        assert_eq!(t.body, "hello {source_code}");
        assert!(PromptTemplate::parse("x", "hello").is_err());
    }
}
