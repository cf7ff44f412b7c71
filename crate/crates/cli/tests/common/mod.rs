#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wdcs::analytics::stats::mean_degree;
use wdcs::analytics::GraphStats;

pub fn wdcs() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wdcs"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    wdcs().args(args).output().expect("spawn wdcs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn golden_input(name: &str) -> String {
    golden().join(name).to_string_lossy().into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Runs `extract` on the golden fixture into `dir`, returning the process
/// output. Extra flags are appended.
pub fn extract_golden(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.join("cskg.tsv");
    let report = dir.join("report.json");
    let mut args = vec![
        "extract".to_string(),
        "--edges".into(),
        golden_input("edges.tsv"),
        "--nodes".into(),
        golden_input("nodes.tsv"),
        "--freq".into(),
        golden_input("freq.tsv"),
        "--out".into(),
        path_str(&out).into(),
        "--report".into(),
        path_str(&report).into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    wdcs().args(&args).env("WDCS_TMPDIR", dir).output().expect("spawn wdcs")
}

/// Published relation counts of the temporal comparison, oldest snapshot
/// first.
pub const TEMPORAL_RELATIONS: &[(&str, [u64; 3])] = &[
    ("/r/IsA", [31_668, 45_606, 72_707]),
    ("/r/PartOf", [3_390, 4_416, 7_938]),
    ("/r/HasContext", [1_968, 3_189, 6_152]),
    ("/r/DistinctFrom", [782, 2_011, 4_934]),
    ("/r/HasPrerequisite", [413, 1_965, 4_131]),
    ("/r/UsedFor", [735, 1_215, 2_469]),
    ("/r/Antonym", [1_109, 1_530, 2_184]),
    ("/r/MadeOf", [415, 834, 1_426]),
    ("/r/Synonym", [478, 655, 1_070]),
    ("/r/HasProperty", [339, 650, 1_049]),
    ("/r/Causes", [150, 238, 651]),
    ("/r/DerivedFrom", [190, 293, 540]),
    ("/r/SimilarTo", [28, 77, 345]),
    ("/r/CreatedBy", [51, 68, 187]),
    ("/r/RelatedTo", [33, 40, 42]),
];

/// Published growth relative to the oldest snapshot, for the two later ones.
pub const TEMPORAL_GROWTH: &[(&str, [&str; 2])] = &[
    ("/r/IsA", ["144%", "230%"]),
    ("/r/PartOf", ["130%", "234%"]),
    ("/r/HasContext", ["162%", "313%"]),
    ("/r/DistinctFrom", ["257%", "631%"]),
    ("/r/HasPrerequisite", ["476%", "1,000%"]),
    ("/r/UsedFor", ["165%", "336%"]),
    ("/r/Antonym", ["138%", "197%"]),
    ("/r/MadeOf", ["201%", "344%"]),
    ("/r/Synonym", ["137%", "224%"]),
    ("/r/HasProperty", ["192%", "309%"]),
    ("/r/Causes", ["159%", "434%"]),
    ("/r/DerivedFrom", ["154%", "284%"]),
    ("/r/SimilarTo", ["275%", "1,232%"]),
    ("/r/CreatedBy", ["133%", "367%"]),
    ("/r/RelatedTo", ["121%", "127%"]),
];

pub const SUBSET_EDGES: [u64; 3] = [41_769, 62_787, 101_771];
pub const SUBSET_NODES: [u64; 3] = [32_620, 47_056, 71_243];
pub const SUBSET_EDGE_GROWTH: [&str; 2] = ["150%", "244%"];
pub const FULL_EDGES: [u64; 3] = [405_081_219, 696_605_955, 1_105_944_515];
pub const FULL_NODES: [u64; 3] = [42_187_222, 53_004_762, 84_601_621];
pub const FULL_EDGE_GROWTH: [&str; 2] = ["172%", "273%"];

/// The twenty most frequent relations after the label filters.
pub const TOP_RELATIONS: &[(&str, u64)] = &[
    ("P279", 172_535),
    ("P31", 141_499),
    ("P361", 9_118),
    ("P1889", 7_767),
    ("P527", 6_252),
    ("P681", 5_607),
    ("P2302", 5_180),
    ("P1269", 4_792),
    ("P2548", 4_345),
    ("P366", 3_045),
    ("P461", 3_028),
    ("P1963", 2_382),
    ("P680", 2_369),
    ("P1659", 2_344),
    ("P641", 2_338),
    ("P156", 2_244),
    ("P155", 2_234),
    ("P186", 2_047),
    ("P360", 1_914),
    ("P1687", 1_746),
];

pub fn stats_report(histogram: BTreeMap<String, u64>, edges: u64, nodes: u64) -> GraphStats {
    GraphStats {
        node_count: nodes,
        edge_count: edges,
        relation_histogram: histogram,
        mean_degree: mean_degree(edges, nodes),
        top_pagerank: Vec::new(),
        produced_at: "2020-05-04T00:00:00Z".into(),
        input_digest: String::new(),
    }
}

/// Writes one stats report per snapshot of the subset and returns the paths.
pub fn write_temporal_stats(dir: &Path) -> [PathBuf; 3] {
    std::array::from_fn(|i| {
        let histogram = TEMPORAL_RELATIONS.iter().map(|(r, c)| (r.to_string(), c[i])).collect();
        let path = dir.join(format!("subset-{i}.json"));
        std::fs::write(&path, stats_report(histogram, SUBSET_EDGES[i], SUBSET_NODES[i]).to_json()).unwrap();
        path
    })
}

pub fn write_full_stats(dir: &Path) -> [PathBuf; 3] {
    std::array::from_fn(|i| {
        let path = dir.join(format!("full-{i}.json"));
        std::fs::write(&path, stats_report(BTreeMap::new(), FULL_EDGES[i], FULL_NODES[i]).to_json()).unwrap();
        path
    })
}

/// `relation -> rendered growth` from a diff TSV.
pub fn parse_diff_tsv(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .skip(1)
        .map(|line| {
            let cells: Vec<&str> = line.split('\t').collect();
            (cells[0].to_string(), cells[3].to_string())
        })
        .collect()
}
