//! Extraction over the bundled C fixture tree, checked edge-for-edge against
//! a hand-built call graph.

use std::path::Path;

use netspectra::callgraph::{extract_pcn, ExtractOptions};

fn corpus_root() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))
}

const LABELS: [&str; 12] = [
    "alloc_table",
    "apply_clamp",
    "clamp_idx",
    "common_fn",
    "copy_name",
    "format_entry",
    "init_system",
    "log_msg",
    "main",
    "run_worker",
    "scale_all",
    "step",
];

// (caller, callee) by label; every call the fixture tree contains,
// deduplicated, including the recursion in step and the merged body of
// the two common_fn variants.
const EDGES: [(&str, &str); 14] = [
    ("apply_clamp", "clamp_idx"),
    ("apply_clamp", "log_msg"),
    ("common_fn", "alloc_table"),
    ("common_fn", "log_msg"),
    ("copy_name", "log_msg"),
    ("init_system", "alloc_table"),
    ("init_system", "log_msg"),
    ("main", "init_system"),
    ("main", "log_msg"),
    ("main", "run_worker"),
    ("run_worker", "step"),
    ("scale_all", "log_msg"),
    ("step", "log_msg"),
    ("step", "step"),
];

#[test]
fn extracts_the_expected_network_from_the_fixture_tree() {
    let (g, report) = extract_pcn(corpus_root(), &ExtractOptions::default()).unwrap();

    let labels = g.labels().expect("extraction labels nodes");
    assert_eq!(labels, &LABELS);

    let idx = |name: &str| LABELS.iter().position(|l| *l == name).unwrap();
    let want: Vec<(usize, usize)> = EDGES.iter().map(|&(u, v)| (idx(u), idx(v))).collect();
    let got: Vec<(usize, usize)> = g.edges().collect();
    assert_eq!(got, want);

    assert_eq!(report.n_procedures, 12);
    assert_eq!(report.n_calls, 14);
    // calloc, fprintf, sprintf, printf have no body anywhere in the tree
    assert_eq!(report.unresolved_call_names, 4);
    assert!(report.skipped_files.is_empty());
}

#[test]
fn extraction_is_reproducible() {
    let (a, _) = extract_pcn(corpus_root(), &ExtractOptions::default()).unwrap();
    let (b, _) = extract_pcn(corpus_root(), &ExtractOptions::default()).unwrap();
    assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
    assert_eq!(a.labels(), b.labels());
}

#[test]
fn header_only_filter_sees_just_the_inline_definition() {
    let options = ExtractOptions {
        extensions: vec!["h".into()],
    };
    let (g, report) = extract_pcn(corpus_root(), &options).unwrap();
    assert_eq!(g.labels().unwrap(), &["clamp_idx".to_string()]);
    assert_eq!(report.n_procedures, 1);
    assert_eq!(report.n_calls, 0);
}
