use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a function language/runtime, e.g. `python` or `go`.
///
/// The set of usable languages is open: any id with an adapter profile in the
/// [`LanguageRegistry`](crate::runner::LanguageRegistry) can be built and
/// invoked. Ids are stored lowercase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct LanguageId(String);

impl LanguageId {
    pub fn new(name: impl AsRef<str>) -> Self {
        Self(name.as_ref().trim().to_ascii_lowercase())
    }

    pub fn python() -> Self {
        Self::new("python")
    }

    pub fn go() -> Self {
        Self::new("go")
    }

    /// Languages that ship with a bundled adapter profile.
    pub fn builtin() -> Vec<LanguageId> {
        vec![Self::python(), Self::go()]
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<String> for LanguageId {
    fn from(value: String) -> Self {
        Self::new(value)
    }
}

impl From<&str> for LanguageId {
    fn from(value: &str) -> Self {
        Self::new(value)
    }
}

impl From<LanguageId> for String {
    fn from(value: LanguageId) -> Self {
        value.0
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
