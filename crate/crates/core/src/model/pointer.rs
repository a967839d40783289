//! Minimal JSON pointer helpers (RFC 6901 syntax only; evaluation is done by
//! `serde_json::Value::pointer`).

/// Returns true when `pointer` is syntactically a JSON pointer: either empty
/// (whole document) or a sequence of `/`-prefixed reference tokens in which
/// every `~` is followed by `0` or `1`.
pub fn is_valid(pointer: &str) -> bool {
    if pointer.is_empty() {
        return true;
    }
    if !pointer.starts_with('/') {
        return false;
    }
    let mut chars = pointer.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '~' && !matches!(chars.next(), Some('0') | Some('1')) {
            return false;
        }
    }
    true
}

pub fn escape_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

/// Appends one reference token to `base`.
pub fn child(base: &str, token: &str) -> String {
    let mut out = String::with_capacity(base.len() + token.len() + 1);
    out.push_str(base);
    out.push('/');
    out.push_str(&escape_token(token));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax() {
        assert!(is_valid(""));
        assert!(is_valid("/error"));
        assert!(is_valid("/a~1b/~0c/0"));
        assert!(!is_valid("error"));
        assert!(!is_valid("/a~2"));
        assert!(!is_valid("/a~"));
    }

    #[test]
    fn escaping_round_trips_through_serde_json() {
        let doc = serde_json::json!({"a/b": {"c~d": 1}});
        let path = child(&child("", "a/b"), "c~d");
        assert_eq!(path, "/a~1b/c~0d");
        assert_eq!(doc.pointer(&path), Some(&serde_json::json!(1)));
    }
}
