//! Deterministic inputs for the criterion benchmarks.

use std::collections::BTreeMap;

use refaas_core::{DeploymentPackage, LanguageId, Manifest};
use serde_json::{json, Value};

/// A records document shaped like the ETL corpus function's input.
pub fn records(n: usize) -> Value {
    let rows: Vec<Value> = (0..n)
        .map(|i| {
            json!({
                "id": i,
                "name": format!("user-{i}"),
                "score": i as f64 * 1.25 + 0.1,
                "tags": ["a", "b", if i % 2 == 0 { "even" } else { "odd" }],
                "address": {"city": "Berlin", "zip": format!("{:05}", 10000 + i)},
            })
        })
        .collect();
    json!({ "records": rows, "count": n })
}

/// `records(n)` with every score nudged by a relative `delta`.
pub fn nudged(n: usize, delta: f64) -> Value {
    let mut v = records(n);
    for row in v["records"].as_array_mut().unwrap() {
        let s = row["score"].as_f64().unwrap();
        row["score"] = json!(s * (1.0 + delta));
    }
    v
}

/// A model answer with prose around `blocks` fenced snippets, the last in Go.
pub fn llm_response(blocks: usize) -> String {
    let mut out = String::from("Here is my reasoning about the function.\n\n");
    for i in 0..blocks {
        out.push_str(&format!("Step {i}: restate the handler.\n\n```python\ndef handler(event):\n    return {{\"step\": {i}}}\n```\n\n"));
    }
    out.push_str("Final answer:\n\n```go\npackage main\n\nimport \"fmt\"\n\nfunc main() {\n\tfmt.Println(\"{}\")\n}\n```\n\nThat should build.\n");
    out
}

/// A python package with `files` source files of `size` bytes each.
pub fn package(files: usize, size: usize) -> DeploymentPackage {
    let mut map = BTreeMap::new();
    map.insert(
        "handler.py".to_string(),
        b"def handler(event):\n    return event\n".to_vec(),
    );
    for i in 0..files {
        let line = format!("VALUE_{i} = {i}\n");
        let body: Vec<u8> = line.bytes().cycle().take(size).collect();
        map.insert(format!("lib/module_{i}.py"), body);
    }
    DeploymentPackage::new(Manifest::new(LanguageId::python(), "handler.py"), map)
        .expect("valid package")
}

#[cfg(test)]
mod tests {
    use refaas_core::llm::extract_code;
    use refaas_core::runner::{compare_json, LanguageRegistry, DEFAULT_TOLERANCE};
    use refaas_core::{parse_package, serialize_package};

    use super::*;

    #[test]
    fn inputs_are_what_the_benchmarks_expect() {
        assert!(
            compare_json(&records(50), &nudged(50, 1e-12), &[], DEFAULT_TOLERANCE)
                .unwrap()
                .equal
        );
        assert!(
            !compare_json(&records(50), &nudged(50, 1e-3), &[], DEFAULT_TOLERANCE)
                .unwrap()
                .equal
        );
        let go = LanguageRegistry::builtin();
        let syntax = &go.get(&LanguageId::go()).unwrap().syntax;
        assert!(extract_code(&llm_response(4), syntax)
            .unwrap()
            .starts_with("package main"));
        let pkg = package(8, 1024);
        assert_eq!(
            parse_package(&serialize_package(&pkg).unwrap()).unwrap(),
            pkg
        );
    }
}
