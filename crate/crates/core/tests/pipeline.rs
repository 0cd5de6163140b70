mod common;

use common::{band_dataset, rule_model, ANCHOR_ROW};
use serde_json::json;
use surrogate_core::config::validate;
use surrogate_core::evaluation::{local_fidelity, stability};
use surrogate_core::explain::{Explanation, Surrogate};
use surrogate_core::pipeline::{run, surrogate_inputs};
use surrogate_core::report::{explain, verify, ReportOptions};
use surrogate_core::Error;

#[test]
fn rule_feature_ranks_first_with_positive_sign() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    let config = validate(&json!({})).unwrap();
    let mut first = 0;
    for seed in 0..100 {
        let r = run(&config, &ds, &model, &anchor, seed).unwrap();
        let Explanation::Attribution {
            items,
            target_class,
            ..
        } = &r.explanation
        else {
            panic!("linear surrogate gives attributions")
        };
        assert_eq!(*target_class, 1);
        if items[0].feature == 0 && items[0].value > 0.0 {
            first += 1;
        }
    }
    assert!(first >= 95, "rank-1 in {first} of 100 seeds");
}

#[test]
fn same_seed_gives_identical_reports() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    for doc in [
        json!({}),
        json!({"representation": {"kind": "tree", "max_depth": 2}, "surrogate": {"kind": "tree"}, "sampler": {"kind": "mixup", "n_samples": 300}}),
        json!({"surrogate": {"kind": "tree", "input": "raw"}, "kernel": {"distance_domain": "binary"}}),
        json!({"representation": {"kind": "tree", "encode_mode": "same_leaf"}, "selection": {"method": "forward_selection", "k": 1}}),
    ] {
        let config = validate(&doc).unwrap();
        let a = explain(&config, &ds, &model, &anchor, 7, ReportOptions::default()).unwrap();
        let b = explain(&config, &ds, &model, &anchor, 7, ReportOptions::default()).unwrap();
        assert_eq!(
            a.to_canonical_json().unwrap(),
            b.to_canonical_json().unwrap(),
            "{doc}"
        );
        let c = explain(&config, &ds, &model, &anchor, 8, ReportOptions::default()).unwrap();
        assert_ne!(a.sample_digest, c.sample_digest);
    }
}

#[test]
fn stored_fidelity_matches_recomputation() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    for doc in [
        json!({}),
        json!({"surrogate": {"kind": "tree", "input": "raw"}}),
    ] {
        let config = validate(&doc).unwrap();
        let report = explain(
            &config,
            &ds,
            &model,
            &anchor,
            3,
            ReportOptions {
                full: true,
                timings: false,
            },
        )
        .unwrap();
        let text = report.to_canonical_json().unwrap();
        let parsed: surrogate_core::report::ExplanationReport =
            serde_json::from_str(&text).unwrap();
        let samples = parsed.samples.as_ref().unwrap();
        let inputs = surrogate_inputs(samples, parsed.surrogate.uses_raw_input());
        let again = local_fidelity(
            &parsed.surrogate,
            &samples.probabilities,
            &inputs,
            &samples.weights,
            parsed.target_class,
        )
        .unwrap();
        assert_eq!(again, report.fidelity);
        assert!(verify(&text).unwrap().passed());
    }
}

#[test]
fn verify_rejects_tampering_and_digest_only_reports() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    let config = validate(&json!({})).unwrap();
    let slim = explain(&config, &ds, &model, &anchor, 1, ReportOptions::default()).unwrap();
    let v = verify(&slim.to_canonical_json().unwrap()).unwrap();
    assert!(!v.passed());
    assert!(v.fingerprint_ok);
    assert!(v.problems[0].contains("--full-report"));

    let full = explain(
        &config,
        &ds,
        &model,
        &anchor,
        1,
        ReportOptions {
            full: true,
            timings: false,
        },
    )
    .unwrap();
    let mut doc: serde_json::Value =
        serde_json::from_str(&full.to_canonical_json().unwrap()).unwrap();
    doc["config"]["kernel"]["width"] = json!(0.5);
    assert!(!verify(&doc.to_string()).unwrap().fingerprint_ok);

    let mut doc: serde_json::Value =
        serde_json::from_str(&full.to_canonical_json().unwrap()).unwrap();
    doc["fidelity"]["weighted_r2"] = json!(0.123);
    let v = verify(&doc.to_string()).unwrap();
    assert!(v.fingerprint_ok && v.sample_digest_ok && !v.fidelity_ok);

    let mut doc: serde_json::Value =
        serde_json::from_str(&full.to_canonical_json().unwrap()).unwrap();
    doc["samples"]["weights"][0] = json!(0.5);
    assert!(!verify(&doc.to_string()).unwrap().sample_digest_ok);
}

#[test]
fn timings_only_on_request() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    let config = validate(&json!({})).unwrap();
    let plain = explain(&config, &ds, &model, &anchor, 1, ReportOptions::default()).unwrap();
    assert!(plain.timings.is_none());
    let timed = explain(
        &config,
        &ds,
        &model,
        &anchor,
        1,
        ReportOptions {
            full: false,
            timings: true,
        },
    )
    .unwrap();
    let stages: Vec<&str> = timed
        .timings
        .as_ref()
        .unwrap()
        .iter()
        .map(|t| t.stage.as_str())
        .collect();
    assert_eq!(stages.first(), Some(&"representation"));
    assert!(stages.contains(&"surrogate") && stages.contains(&"fidelity"));
}

#[test]
fn tree_surrogate_rules_start_at_anchor_leaf() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    let config =
        validate(&json!({"surrogate": {"kind": "tree", "input": "raw", "max_depth": 2}})).unwrap();
    let r = run(&config, &ds, &model, &anchor, 11).unwrap();
    let Explanation::Rules { items, .. } = &r.explanation else {
        panic!()
    };
    assert!(items[0].contains_anchor);
    assert!(items[1..].iter().all(|i| !i.contains_anchor));
    let Surrogate::Tree(tree) = &r.surrogate else {
        panic!()
    };
    assert_eq!(items.len(), tree.tree.n_leaves());
    assert!(items[0].rule.contains("x0 > "), "{}", items[0].rule);
    assert_eq!(items[0].probabilities, vec![0.0, 1.0]);
}

#[test]
fn errors_carry_the_stage() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    let config = validate(&json!({"surrogate": {"target_class": "medium"}})).unwrap();
    let err = run(&config, &ds, &model, &anchor, 0).unwrap_err();
    assert_eq!(err.stage(), Some("target"));

    let config =
        validate(&json!({"surrogate": {"ridge": 0.0}, "sampler": {"scale": 1e-9, "n_samples": 5}}))
            .unwrap();
    // Every sample lands in the anchor's bins: collinear constant columns.
    let err = run(&config, &ds, &model, &anchor, 0).unwrap_err();
    assert_eq!(err.stage(), Some("surrogate"));
    assert!(matches!(err.root(), Error::Solver(m) if m.contains("penalty")));
}

#[test]
fn stability_of_the_rule_case() {
    let ds = band_dataset();
    let model = rule_model(&ds);
    let anchor = ds.instance(ANCHOR_ROW).unwrap();
    let config = validate(&json!({})).unwrap();
    let seeds: Vec<u64> = (100..120).collect();
    let s = stability(&config, &ds, &model, &anchor, &seeds, 1).unwrap();
    assert_eq!(s.runs, 20);
    assert!(s.mean_jaccard >= 0.9, "{}", s.mean_jaccard);

    let s = stability(&config, &ds, &model, &anchor, &[5, 5, 5], 2).unwrap();
    assert!(s.features.iter().all(|f| f.std == 0.0));
    assert_eq!(s.mean_jaccard, 1.0);

    let s = stability(&config, &ds, &model, &anchor, &[9, 1, 4, 3, 2], 4).unwrap();
    assert_eq!(s.seeds, vec![1, 2, 3, 4, 9]);
    assert_eq!(s.mean_jaccard, 1.0);

    assert!(matches!(
        stability(&config, &ds, &model, &anchor, &[1], 1),
        Err(Error::Input(_))
    ));
}
