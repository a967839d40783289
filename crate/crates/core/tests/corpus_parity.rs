use std::path::{Path, PathBuf};
use std::sync::Arc;

use refaas_core::corpus::load_corpus;
use refaas_core::runner::{
    run_suite, Builder, InvokeLimits, LanguageRegistry, ProcessInvoker, Toolchain,
};
use refaas_core::LanguageId;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn corpus_has_fourteen_paired_functions() {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    assert_eq!(corpus.len(), 14);
    for f in &corpus {
        assert!(f.package(&LanguageId::python()).is_some(), "{}", f.id);
        assert!(f.package(&LanguageId::go()).is_some(), "{}", f.id);
        assert_eq!(f.suite.len(), 4, "{}", f.id);
    }
    let offline: Vec<_> = corpus
        .iter()
        .filter(|f| !f.ci)
        .map(|f| f.id.as_str())
        .collect();
    assert_eq!(offline, ["f09_http_get", "f10_weather"]);
}

#[test]
fn original_and_reference_agree_on_every_suite() {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    let toolchain = Toolchain::new(Arc::new(LanguageRegistry::builtin()));
    let invoker = ProcessInvoker::new();
    let sandbox = tempfile::tempdir().unwrap();
    for f in &corpus {
        for (lang, pkg) in &f.packages {
            let built = toolchain
                .build(pkg, &sandbox.path().join(format!("{}-{lang}", f.id)))
                .unwrap();
            assert!(built.ok, "{} {lang}: {}", f.id, built.stderr);
            if !f.ci {
                continue;
            }
            let summary = run_suite(
                built.artifact.as_ref().unwrap(),
                &f.suite,
                &invoker,
                &InvokeLimits::default(),
                1e-9,
            );
            assert!(
                summary.validation,
                "{} {lang}: {:#?}",
                f.id,
                summary
                    .per_case
                    .iter()
                    .filter(|c| !c.verdict.equal)
                    .collect::<Vec<_>>()
            );
        }
    }
}
