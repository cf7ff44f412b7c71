mod common;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;

fn files_in(dir: &std::path::Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn report_json(dir: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn golden_extract_matches_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let out = extract_golden(dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(files_in(dir.path()), ["cskg.provenance.tsv", "cskg.tsv", "report.json"]);
    let expected = golden().join("expected");
    for name in ["cskg.tsv", "cskg.provenance.tsv"] {
        assert_eq!(
            std::fs::read_to_string(dir.path().join(name)).unwrap(),
            std::fs::read_to_string(expected.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn missing_frequency_file_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cskg.tsv");
    let missing = dir.path().join("no-such-freq.tsv");
    let run = run(&[
        "extract",
        "--edges",
        &golden_input("edges.tsv"),
        "--nodes",
        &golden_input("nodes.tsv"),
        "--freq",
        path_str(&missing),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(run.status.code(), Some(1));
    assert!(stderr(&run).contains("no-such-freq.tsv"), "{}", stderr(&run));
    assert!(files_in(dir.path()).is_empty(), "{:?}", files_in(dir.path()));
}

#[test]
fn threshold_of_one_rejects_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = extract_golden(dir.path(), &["--threshold", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cskg = std::fs::read_to_string(dir.path().join("cskg.tsv")).unwrap();
    assert_eq!(cskg.lines().count(), 1);
    let report = report_json(dir.path());
    assert_eq!(report["stages"]["after_commonness_filter"], 0);
    assert_eq!(report["stages"]["after_dedup"], 0);
    assert_eq!(report["configuration"]["threshold"], 1.0);
}

#[test]
fn invalid_configuration_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    for flags in [&["--threshold", "0"][..], &["--threshold", "-1e-6"], &["--combiner", "mean"], &["--jobs", "0"], &["--bogus"]] {
        let out = extract_golden(dir.path(), flags);
        assert_eq!(out.status.code(), Some(2), "{flags:?}: {}", stderr(&out));
    }
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn bad_mapping_file_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let mapping = dir.path().join("mapping.tsv");
    std::fs::write(&mapping, "property\taction\ttarget\ttarget_label\nP279\tsideways\t/r/IsA\tis a\n").unwrap();
    let out = extract_golden(dir.path(), &["--mapping", path_str(&mapping)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mapping.tsv:2"), "{}", stderr(&out));
}

#[test]
fn strict_aborts_on_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = extract_golden(dir.path(), &["--strict"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("malformed"), "{}", stderr(&out));
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn missing_edge_column_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.tsv");
    std::fs::write(&edges, "id\tsubject\tlabel\tnode2\ns1\tQ1\tP279\tQ3\n").unwrap();
    let out = run(&[
        "extract",
        "--edges",
        path_str(&edges),
        "--nodes",
        &golden_input("nodes.tsv"),
        "--freq",
        &golden_input("freq.tsv"),
        "--out",
        path_str(&dir.path().join("o.tsv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("node1"));
}

#[test]
fn unusable_spill_directory_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = wdcs()
        .args([
            "extract",
            "--edges",
            &golden_input("edges.tsv"),
            "--nodes",
            &golden_input("nodes.tsv"),
            "--freq",
            &golden_input("freq.tsv"),
            "--out",
            path_str(&dir.path().join("o.tsv")),
        ])
        .env("WDCS_TMPDIR", dir.path().join("absent"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("absent"), "{}", stderr(&out));
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(extract_golden(a.path(), &[]).status.success());
    assert!(extract_golden(b.path(), &["--jobs", "1"]).status.success());
    for name in ["cskg.tsv", "cskg.provenance.tsv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let mut ra = report_json(a.path());
    let mut rb = report_json(b.path());
    ra.as_object_mut().unwrap().remove("produced_at");
    rb.as_object_mut().unwrap().remove("produced_at");
    assert_eq!(ra, rb);
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# thresholds\nthreshold = 1\nallow-leading-digit = true\n").unwrap();
    let out = extract_golden(dir.path(), &["--config", path_str(&conf)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = report_json(dir.path());
    assert_eq!(report["stages"]["after_dedup"], 0);
    assert_eq!(report["configuration"]["allow_leading_digit"], true);

    let out = extract_golden(dir.path(), &["--config", path_str(&conf), "--threshold", "1e-6"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = report_json(dir.path());
    assert_eq!(report["configuration"]["threshold"], 1e-6);
    assert!(report["stages"]["after_dedup"].as_u64().unwrap() > 0);
}

#[test]
fn leading_digit_flag_admits_more_concepts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(extract_golden(dir.path(), &[]).status.success());
    let base = report_json(dir.path())["stages"]["after_concept_filter"].as_u64().unwrap();
    assert!(extract_golden(dir.path(), &["--allow-leading-digit"]).status.success());
    let relaxed = report_json(dir.path())["stages"]["after_concept_filter"].as_u64().unwrap();
    assert_eq!(relaxed, base + 1);
}

#[test]
fn symmetric_canonicalization_merges_antonym_pair() {
    let dir = tempfile::tempdir().unwrap();
    assert!(extract_golden(dir.path(), &["--symmetric-canonical"]).status.success());
    let cskg = std::fs::read_to_string(dir.path().join("cskg.tsv")).unwrap();
    let antonyms: Vec<&str> = cskg.lines().filter(|l| l.contains("/r/Antonym")).collect();
    assert_eq!(antonyms.len(), 1, "{antonyms:?}");
    assert!(antonyms[0].starts_with("Q17-antonym-Q18\t"));
}

#[test]
fn stats_on_extracted_graph() {
    let dir = tempfile::tempdir().unwrap();
    assert!(extract_golden(dir.path(), &[]).status.success());
    let cskg = dir.path().join("cskg.tsv");
    let out = run(&["stats", "--edges", path_str(&cskg), "--top", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();

    let text = std::fs::read_to_string(&cskg).unwrap();
    let mut nodes = HashSet::new();
    let mut edges = 0u64;
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split('\t').collect();
        nodes.insert(cells[1].to_string());
        nodes.insert(cells[3].to_string());
        edges += 1;
    }
    assert_eq!(stats["edge_count"], edges);
    assert_eq!(stats["node_count"], nodes.len() as u64);
    assert_eq!(stats["mean_degree"].as_f64().unwrap(), 2.0 * edges as f64 / nodes.len() as f64);
    assert_eq!(stats["top_pagerank"].as_array().unwrap().len(), 3);
    assert!(stats["input_digest"].as_str().unwrap().starts_with("sha256:"));

    let written = dir.path().join("stats.tsv");
    let out = run(&["stats", "--edges", path_str(&cskg), "--format", "tsv", "--out", path_str(&written)]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    assert!(std::fs::read_to_string(&written).unwrap().starts_with("key\tvalue\nnodes\t"));
}

#[test]
fn overlap_of_a_file_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    assert!(extract_golden(dir.path(), &[]).status.success());
    let cskg = dir.path().join("cskg.tsv");
    let out = run(&["overlap", "--left", path_str(&cskg), "--right", path_str(&cskg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["left_only"], 0);
    assert_eq!(report["right_only"], 0);
    assert!(report["both"].as_u64().unwrap() >= 35);
    assert_eq!(report["counting_basis"], "expanded-label-triples");
}

#[test]
fn overlap_requires_label_columns() {
    let out = run(&["overlap", "--left", &golden_input("edges.tsv"), "--right", &golden_input("edges.tsv")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("node1;label"), "{}", stderr(&out));
}

#[test]
fn diff_renders_published_growth() {
    let dir = tempfile::tempdir().unwrap();
    let snapshots = write_temporal_stats(dir.path());
    let out = run(&["diff", "--old", path_str(&snapshots[0]), "--new", path_str(&snapshots[2]), "--format", "tsv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("relation\told\tnew\tgrowth\n/r/IsA\t31,668\t72,707\t230%\n"), "{text}");
    assert!(text.contains("\nedges\t41,769\t101,771\t244%\n"));
    let rows = parse_diff_tsv(&text);
    assert_eq!(rows["/r/SimilarTo"], "1,232%");
    assert_eq!(rows["/r/HasPrerequisite"], "1,000%");

    let json = run(&["diff", "--old", path_str(&snapshots[0]), "--new", path_str(&snapshots[1])]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(report["edges"]["growth_pct"], 150);
}

#[test]
fn diff_rejects_non_stats_input() {
    let out = run(&["diff", "--old", &golden_input("edges.tsv"), "--new", &golden_input("edges.tsv")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not a stats report"));
}

#[test]
fn freqdist_ranks_fifty_relations_after_exclusion() {
    let mut rng = StdRng::seed_from_u64(17);
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.tsv");
    let mut text = String::from("node1\tlabel\tnode2\n");
    let mut oracle: BTreeMap<String, u64> = BTreeMap::new();
    for i in 0..6000 {
        let relation = if i % 7 == 0 {
            ["P31", "P279"][i % 2].to_string()
        } else {
            format!("P{}", 1000 + rng.gen_range(0..80) * rng.gen_range(1..3))
        };
        let _ = writeln!(text, "Q{}\t{relation}\tQ{}", rng.gen_range(0..500), rng.gen_range(0..500));
        *oracle.entry(relation).or_default() += 1;
    }
    std::fs::write(&edges, text).unwrap();
    let out = run(&["freqdist", "--edges", path_str(&edges), "--exclude", "P31,P279", "--top", "50"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows: Vec<(usize, String, u64)> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c[0].parse().unwrap(), c[1].to_string(), c[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 50);
    oracle.remove("P31");
    oracle.remove("P279");
    let mut expected: Vec<(String, u64)> = oracle.into_iter().collect();
    expected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    for (i, (rank, relation, count)) in rows.iter().enumerate() {
        assert_eq!(*rank, i + 1);
        assert_eq!((relation, count), (&expected[i].0, &expected[i].1));
    }
    assert!(rows.windows(2).all(|w| w[0].2 >= w[1].2));
}

#[test]
fn freqdist_needs_an_input() {
    let out = run(&["freqdist", "--top", "5"]);
    assert_eq!(out.status.code(), Some(2));
}
