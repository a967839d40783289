mod common;

use common::strategies::{json, to_text_shuffled};
use proptest::prelude::*;
use refaas_core::runner::{compare_json, DEFAULT_TOLERANCE};
use serde_json::{json, Value};

fn equal(e: &Value, a: &Value, tol: f64) -> bool {
    compare_json(e, a, &[], tol).unwrap().equal
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reflexive(x in json()) {
        prop_assert!(equal(&x, &x, 0.0));
        prop_assert!(equal(&x, &x, DEFAULT_TOLERANCE));
    }

    #[test]
    fn symmetric_at_zero_tolerance(x in json(), y in json()) {
        prop_assert_eq!(equal(&x, &y, 0.0), equal(&y, &x, 0.0));
    }

    #[test]
    fn key_order_never_matters(x in json(), y in json(), seed in any::<u64>()) {
        let mut s = seed;
        let shuffled: Value = serde_json::from_str(&to_text_shuffled(&x, &mut s)).unwrap();
        prop_assert!(equal(&x, &shuffled, 0.0));
        let before = compare_json(&x, &y, &[], DEFAULT_TOLERANCE).unwrap();
        let after = compare_json(&shuffled, &y, &[], DEFAULT_TOLERANCE).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn verdict_matches_mismatch_list(x in json(), y in json()) {
        let v = compare_json(&x, &y, &[], DEFAULT_TOLERANCE).unwrap();
        prop_assert_eq!(v.equal, v.mismatches.is_empty());
    }

    #[test]
    fn mismatch_paths_resolve(x in json(), y in json()) {
        let v = compare_json(&x, &y, &[], DEFAULT_TOLERANCE).unwrap();
        for m in &v.mismatches {
            prop_assert!(x.pointer(&m.path).is_some() || y.pointer(&m.path).is_some(), "{}", m.path);
        }
    }

    #[test]
    fn tolerance_boundary(f in prop_oneof![-1e9f64..-1e-3, 1e-3f64..1e9]) {
        let close = json!({"v": f * (1.0 + 1e-10)});
        let far = json!({"v": f * (1.0 + 1e-6)});
        let exp = json!({"v": f});
        prop_assert!(equal(&exp, &close, DEFAULT_TOLERANCE));
        prop_assert!(!equal(&exp, &far, DEFAULT_TOLERANCE));
    }
}
