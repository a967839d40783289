//! Proptest generators shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use refaas_core::{
    DeploymentPackage, LanguageId, Manifest, MatchMode, MatchOverride, TestCase, TestSuite,
};
use serde_json::{Map, Number, Value};

fn leaf() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::from),
        (-1e12f64..1e12).prop_map(|f| Number::from_f64(f).map_or(Value::Null, Value::Number)),
        "[a-zA-Z0-9 _/~.-]{0,12}".prop_map(Value::String),
    ]
}

/// JSON documents of depth at most 6 and roughly 200 nodes at most.
pub fn json() -> impl Strategy<Value = Value> {
    leaf().prop_recursive(6, 200, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(Value::Array),
            prop::collection::btree_map("[a-z~/]{1,6}", inner, 0..6)
                .prop_map(|m| Value::Object(m.into_iter().collect::<Map<_, _>>())),
        ]
    })
}

/// Serializes `v` with object keys in the order given by `seed`.
pub fn to_text_shuffled(v: &Value, seed: &mut u64) -> String {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            for i in (1..keys.len()).rev() {
                *seed = seed
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                keys.swap(i, (*seed >> 33) as usize % (i + 1));
            }
            let parts: Vec<String> = keys
                .into_iter()
                .map(|k| {
                    format!(
                        "{}:{}",
                        Value::String(k.clone()),
                        to_text_shuffled(&m[k], seed)
                    )
                })
                .collect();
            format!("{{{}}}", parts.join(","))
        }
        Value::Array(a) => {
            let parts: Vec<String> = a.iter().map(|x| to_text_shuffled(x, seed)).collect();
            format!("[{}]", parts.join(","))
        }
        other => other.to_string(),
    }
}

fn segment() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9_][a-zA-Z0-9_.-]{0,7}".prop_filter("dot segments", |s| s != "." && s != "..")
}

fn rel_path() -> impl Strategy<Value = String> {
    prop::collection::vec(segment(), 1..4).prop_map(|s| s.join("/"))
}

/// Valid packages with 1 to 6 files and arbitrary contents.
pub fn package() -> impl Strategy<Value = DeploymentPackage> {
    (
        prop::sample::select(vec![LanguageId::python(), LanguageId::go()]),
        prop::collection::btree_map(rel_path(), prop::collection::vec(any::<u8>(), 0..64), 1..6),
        any::<prop::sample::Index>(),
        prop::collection::btree_map("[a-z]{1,6}", "[ -~]{0,10}", 0..3),
    )
        .prop_filter_map(
            "file shadows a directory",
            |(language, files, pick, build_config)| {
                let names: Vec<&String> = files.keys().collect();
                let clash = names
                    .iter()
                    .any(|a| names.iter().any(|b| b.starts_with(&format!("{a}/"))));
                if clash || files.contains_key(refaas_core::MANIFEST_FILE) {
                    return None;
                }
                let entrypoint = pick.get(&names).to_string();
                let mut manifest = Manifest::new(language, entrypoint);
                manifest.build_config = build_config;
                DeploymentPackage::new(manifest, files).ok()
            },
        )
}

/// Valid suites of 1 to 5 uniquely named cases.
pub fn suite() -> impl Strategy<Value = TestSuite> {
    prop::collection::btree_map(
        "[a-z0-9_]{1,10}",
        (json(), json(), prop::option::of("/[a-z]{1,5}")),
        1..5,
    )
    .prop_map(|cases| {
        let cases = cases
            .into_iter()
            .map(|(name, (input_event, expected_output, over))| TestCase {
                name,
                input_event,
                expected_output,
                match_overrides: over
                    .map(|path| MatchOverride {
                        path,
                        mode: MatchMode::Present,
                    })
                    .into_iter()
                    .collect(),
            })
            .collect();
        TestSuite::new(cases).unwrap()
    })
}

/// Archive entry names that must never be accepted.
pub const HOSTILE_NAMES: &[&str] = &[
    "../evil",
    "a/../../evil",
    "a/b/../../../evil",
    "/etc/passwd",
    "\\windows\\evil",
    "C:/evil",
    "c:\\evil",
    "a\\..\\..\\evil",
    "./../evil",
    "a/./b",
    "a//b",
    "..",
];

pub fn hostile_name() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(HOSTILE_NAMES.to_vec()).prop_map(str::to_string),
        (rel_path(), 1usize..4).prop_map(|(p, ups)| format!("{}{p}", "../".repeat(ups))),
        rel_path().prop_map(|p| format!("/{p}")),
        (rel_path(), rel_path()).prop_map(|(a, b)| format!("{a}/../../{b}")),
    ]
}

/// A zip holding a valid python manifest, a handler and one extra entry.
pub fn archive_with_entry(name: &str) -> Vec<u8> {
    use std::io::Write;
    let mut zip = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let opts = zip::write::SimpleFileOptions::default();
    zip.start_file(refaas_core::MANIFEST_FILE, opts).unwrap();
    zip.write_all(br#"{"language":"python","entrypoint":"handler.py"}"#)
        .unwrap();
    zip.start_file("handler.py", opts).unwrap();
    zip.write_all(b"print(1)\n").unwrap();
    zip.start_file(name, opts).unwrap();
    zip.write_all(b"x").unwrap();
    zip.finish().unwrap().into_inner()
}

pub fn files_of(pkg: &DeploymentPackage) -> &BTreeMap<String, Vec<u8>> {
    &pkg.files
}
