//! End-to-end tests of the `tropom` binary: exit codes, JSON output, index
//! conventions, and byte stability, cross-checked against the library.

use serde_json::Value;
use std::io::Write as _;
use std::process::{Command, Output, Stdio};

use tropom::bigraph::BiGraph;
use tropom::fms::ValidationMode;
use tropom::json::{handle_from_str, handle_to_string};
use tropom::matchfield::LinkageVariant;
use tropom::{
    enumerate, EnumerationKind, EnumerationTask, FineMixedSubdivision, MatchingField,
    ObjectHandle,
};

fn tropom_bin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tropom"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .expect("piped stdin")
        .write_all(stdin.as_bytes())
        .expect("stdin accepts input");
    child.wait_with_output().expect("binary exits")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_str(stdout_str(output).trim()).expect("stdout is one JSON document")
}

fn staircase() -> FineMixedSubdivision {
    let cells = [
        [0b1111u64, 0b0001],
        [0b1110, 0b0011],
        [0b1100, 0b0111],
        [0b1000, 0b1111],
    ]
    .into_iter()
    .map(|rows| BiGraph::from_rows(2, 4, rows.to_vec()).unwrap())
    .collect();
    FineMixedSubdivision::new(2, 4, cells).unwrap()
}

fn staircase_json() -> String {
    handle_to_string(&ObjectHandle::Fms(staircase()), false)
}

#[test]
fn validate_accepts_the_staircase_subdivision() {
    let out = tropom_bin(&["validate", "--kind", "fms", "--mode", "full"], &staircase_json());
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], true);
    assert!(report["checked"].as_array().unwrap().len() >= 3);
    assert_eq!(report["violations"], serde_json::json!([]));
}

#[test]
fn validate_rejects_an_unlawful_tree_collection_with_witnesses() {
    // Four spanning trees that are not a subdivision: three staircase cells
    // plus an incompatible fourth tree. The library agrees before the binary
    // is consulted.
    let cells: Vec<BiGraph> = [
        [0b1111u64, 0b0001],
        [0b1110, 0b0011],
        [0b1100, 0b0111],
        [0b0001, 0b1111],
    ]
    .into_iter()
    .map(|rows| BiGraph::from_rows(2, 4, rows.to_vec()).unwrap())
    .collect();
    let fms = FineMixedSubdivision::new(2, 4, cells).unwrap();
    assert!(!fms.validate(ValidationMode::Full).verdict);
    let out = tropom_bin(&["validate"], &handle_to_string(&ObjectHandle::Fms(fms), false));
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], false);
    assert!(!report["violations"].as_array().unwrap().is_empty());
    assert!(report["violations"][0]["rule"].is_string());
    assert!(report["violations"][0]["witness"].is_object() || report["violations"][0]["witness"].is_array());
}

#[test]
fn construct_failure_is_a_verdict_not_a_usage_error() {
    // A well-formed document the constructor rejects: the same cell twice.
    let cell = serde_json::json!({"n": 2, "d": 4, "edges": [[1,4],[2,1],[2,2],[2,3],[2,4]]});
    let doc = serde_json::json!({
        "kind": "fms", "n": 2, "d": 4, "cells": [cell, cell],
    });
    let out = tropom_bin(&["validate"], &doc.to_string());
    assert_eq!(code(&out), 1, "stderr: {}", stderr_str(&out));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], false);
    assert_eq!(report["violations"][0]["rule"], "input.construct");

    // A non-tree cell, by contrast, constructs fine and fails validation
    // under the axiom's own rule.
    let doc = serde_json::json!({
        "kind": "fms", "n": 2, "d": 4,
        "cells": [{"n": 2, "d": 4, "edges": [[1,2],[1,4],[2,1],[2,3]]}],
    });
    let out = tropom_bin(&["validate"], &doc.to_string());
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["violations"][0]["rule"], "fms.cell_is_tree");
}

#[test]
fn malformed_input_is_a_usage_error() {
    for bad in ["not json", "{\"kind\":\"simplex\"}", "{\"kind\":\"fms\"}"] {
        let out = tropom_bin(&["validate"], bad);
        assert_eq!(code(&out), 2, "input: {bad}");
        assert!(stdout_str(&out).is_empty(), "input: {bad}");
        assert!(!stderr_str(&out).is_empty(), "input: {bad}");
    }
}

#[test]
fn inconsistent_flags_are_usage_errors() {
    for args in [
        ["validate", "--kind", "tom"].as_slice(),
        &["validate", "--variant", "strong"],
        &["validate", "--level", "trianguloid"],
        &["validate", "--mode", "sideways"],
    ] {
        let out = tropom_bin(args, &staircase_json());
        assert_eq!(code(&out), 2, "args: {args:?}");
        assert!(!stderr_str(&out).is_empty(), "args: {args:?}");
    }
}

#[test]
fn enumerate_count_only_prints_one_summary_line() {
    let out = tropom_bin(
        &["enumerate", "--kind", "fms", "--n", "2", "--d", "2", "--count-only"],
        "",
    );
    assert_eq!(code(&out), 0);
    let text = stdout_str(&out);
    assert_eq!(text.trim().lines().count(), 1);
    let summary = stdout_json(&out);
    assert_eq!(summary["kind"], "fms");
    assert_eq!(summary["n"], 2);
    assert_eq!(summary["d"], 2);
    assert_eq!(summary["count"], 2);
    assert!(summary["elapsed_ms"].is_u64());
    assert!(summary.get("complete").is_none(), "full run must not be flagged");
}

#[test]
fn enumerate_streams_objects_in_library_order_then_a_summary() {
    let out = tropom_bin(&["enumerate", "--kind", "fms", "--n", "2", "--d", "3"], "");
    assert_eq!(code(&out), 0);
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 7, "6 objects plus a summary");
    let expected = enumerate(&EnumerationTask::new(EnumerationKind::Fms, 2, 3)).unwrap();
    for (line, object) in lines[..6].iter().zip(&expected.objects) {
        assert_eq!(&handle_from_str(line).unwrap(), object);
        assert_eq!(*line, handle_to_string(object, false));
    }
    let summary: Value = serde_json::from_str(lines[6]).unwrap();
    assert_eq!(summary["count"], 6);
}

#[test]
fn truncated_enumeration_is_flagged_incomplete() {
    let out = tropom_bin(
        &[
            "enumerate", "--kind", "fms", "--n", "3", "--d", "3", "--count-only", "--limit", "5",
        ],
        "",
    );
    assert_eq!(code(&out), 0);
    let summary = stdout_json(&out);
    assert_eq!(summary["complete"], false);
    assert!(summary["count"].as_u64().unwrap() < 108);
}

#[test]
fn size_limit_env_var_caps_enumeration() {
    let child = Command::new(env!("CARGO_BIN_EXE_tropom"))
        .args(["enumerate", "--kind", "fms", "--n", "3", "--d", "3", "--count-only"])
        .env("TROPOM_SIZE_LIMIT", "5")
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr_str(&out).contains("TROPOM_SIZE_LIMIT"));
}

#[test]
fn minor_uses_one_based_indices() {
    let out = tropom_bin(&["minor", "--delete-left", "1"], &staircase_json());
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let expected = ObjectHandle::Fms(staircase()).minor(&[0], &[]).unwrap();
    assert_eq!(stdout_str(&out).trim(), handle_to_string(&expected, false));

    let out = tropom_bin(&["minor", "--delete-left", "0"], &staircase_json());
    assert_eq!(code(&out), 2, "index 0 must be rejected as 1-based input");
    let out = tropom_bin(&["minor", "--delete-left", "9"], &staircase_json());
    assert_eq!(code(&out), 2, "out-of-range index");
}

#[test]
fn roundtrip_passes_and_output_is_byte_stable() {
    let first = tropom_bin(&["roundtrip"], &staircase_json());
    assert_eq!(code(&first), 0, "stderr: {}", stderr_str(&first));
    assert_eq!(stdout_json(&first)["verdict"], true);
    let second = tropom_bin(&["roundtrip"], &staircase_json());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn convert_walks_the_cycle_back_to_the_same_bytes() {
    let fms_json = staircase_json();
    let mut doc = fms_json.clone();
    for target in ["tom", "matching_stack", "matching_field", "tope_arrangement", "fms"] {
        let out = tropom_bin(&["convert", "--to", target], &doc);
        assert_eq!(code(&out), 0, "to {target}: {}", stderr_str(&out));
        doc = stdout_str(&out).trim().to_string();
        let kind = handle_from_str(&doc).unwrap().kind();
        let want = if target == "fms" { "fms" } else { target };
        assert_eq!(kind, want);
    }
    assert_eq!(doc, fms_json, "the conversion cycle must land on the original bytes");
}

#[test]
fn counterexample_union_not_a_type_matches_the_published_graphs() {
    let first = tropom_bin(&["counterexample", "ensembles-lemma-3.16"], "");
    assert_eq!(code(&first), 0, "stderr: {}", stderr_str(&first));
    let value = stdout_json(&first);
    assert_eq!(value["verdict"], "union not a type");
    assert_eq!(value["first"]["edges"], serde_json::json!([[1, 2], [1, 4], [2, 1]]));
    assert_eq!(value["second"]["edges"], serde_json::json!([[1, 4], [2, 1], [2, 3]]));
    assert_eq!(
        value["union"]["edges"],
        serde_json::json!([[1, 2], [1, 4], [2, 1], [2, 3]])
    );
    assert_eq!(value["context"]["kind"], "tom");
    let second = tropom_bin(&["counterexample", "ensembles-lemma-3.16"], "");
    assert_eq!(first.stdout, second.stdout, "byte-identical reproduction");
}

#[test]
fn counterexample_pretri_violates_exactly_the_hexagon() {
    let out = tropom_bin(&["counterexample", "pretri-not-trianguloid"], "");
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let value = stdout_json(&out);
    assert_eq!(value["object"]["kind"], "tope_arrangement");
    assert_eq!(value["report"]["verdict"], false);
    assert!(value["report"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["rule"] == "arrangement.hexagon"));

    // The emitted object really is a pre-trianguloid and not a trianguloid.
    let object = value["object"].to_string();
    let as_pretri = tropom_bin(&["validate", "--level", "pre_trianguloid"], &object);
    assert_eq!(code(&as_pretri), 0);
    let as_tri = tropom_bin(&["validate", "--level", "trianguloid"], &object);
    assert_eq!(code(&as_tri), 1);

    let again = tropom_bin(&["counterexample", "pretri-not-trianguloid"], "");
    assert_eq!(out.stdout, again.stdout, "byte-identical reproduction");
}

#[test]
fn unknown_counterexample_lists_the_catalog() {
    let out = tropom_bin(&["counterexample", "no-such-thing"], "");
    assert_eq!(code(&out), 2);
    let err = stderr_str(&out);
    assert!(err.contains("ensembles-lemma-3.16") && err.contains("pretri-not-trianguloid"));
}

#[test]
fn validate_variant_flag_selects_one_linkage_formulation() {
    let linked = MatchingField::from_images(3, 2, false, |elems| (0..elems.len()).collect())
        .unwrap();
    assert!(linked.check_linkage(LinkageVariant::Strong).verdict);
    let doc = handle_to_string(&ObjectHandle::Field(linked), false);
    for variant in ["strong", "weak", "three_element", "exchange", "elimination", "all"] {
        let out = tropom_bin(&["validate", "--variant", variant], &doc);
        assert_eq!(code(&out), 0, "variant {variant}: {}", stderr_str(&out));
    }

    let unlinked = enumerate(&EnumerationTask::new(EnumerationKind::MatchingField, 3, 2))
        .unwrap()
        .objects
        .into_iter()
        .find(|h| match h {
            ObjectHandle::Field(f) => !f.check_linkage(LinkageVariant::Strong).verdict,
            _ => false,
        })
        .expect("a non-linked (3,2) field exists");
    let doc = handle_to_string(&unlinked, false);
    let out = tropom_bin(&["validate", "--variant", "strong"], &doc);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["verdict"], false);
}
