use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use crate::tabular::EdgeRecord;

pub fn relation_histogram<'a>(edges: impl IntoIterator<Item = &'a EdgeRecord>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for e in edges {
        *counts.entry(e.relation.clone()).or_insert(0) += 1;
    }
    counts
}

/// The `top_k` most frequent relations, excluded ones removed first. Ties are
/// broken by relation id.
pub fn relation_frequency_distribution(
    histogram: &BTreeMap<String, u64>,
    top_k: usize,
    exclude: &HashSet<String>,
) -> Vec<(String, u64)> {
    let mut ranked: Vec<(String, u64)> = histogram
        .iter()
        .filter(|(r, _)| !exclude.contains(*r))
        .map(|(r, &c)| (r.clone(), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    ranked
}

/// `rank\trelation\tcount` rows, ranks starting at 1.
pub fn render_tsv(distribution: &[(String, u64)]) -> String {
    let mut out = String::from("rank\trelation\tcount\n");
    for (i, (relation, count)) in distribution.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}", i + 1, crate::tsv::escape(relation), count);
    }
    out
}
