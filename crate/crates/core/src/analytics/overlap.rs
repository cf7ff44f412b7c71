//! Lexical overlap between two edge files: edges are equal when their subject
//! label, relation and object label are identical.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::format_count;
use crate::error::{Error, Result};
use crate::tabular::{EdgeReader, MalformedPolicy};

pub const COUNTING_BASIS: &str = "expanded-label-triples";

pub type LabelTriple = (String, String, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub both: u64,
    pub left_only: u64,
    pub right_only: u64,
    /// `left_only / (left_only + both)` in percent, to one decimal.
    pub left_only_pct: Option<f64>,
    pub right_only_pct: Option<f64>,
    pub counting_basis: String,
}

fn share_pct(only: u64, both: u64) -> Option<f64> {
    let total = (only + both) as u128;
    (total > 0).then(|| super::round_ratio(1000 * only as u128, total) as f64 / 10.0)
}

impl OverlapReport {
    pub fn from_counts(both: u64, left_only: u64, right_only: u64) -> Self {
        OverlapReport {
            both,
            left_only,
            right_only,
            left_only_pct: share_pct(left_only, both),
            right_only_pct: share_pct(right_only, both),
            counting_basis: COUNTING_BASIS.to_string(),
        }
    }

    pub fn from_sets(left: &HashSet<LabelTriple>, right: &HashSet<LabelTriple>) -> Self {
        let both = left.intersection(right).count() as u64;
        OverlapReport::from_counts(both, left.len() as u64 - both, right.len() as u64 - both)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("overlap serialize");
        s.push('\n');
        s
    }

    pub fn render_tsv(&self) -> String {
        let pct = |p: Option<f64>| p.map(|p| format!(" ({p:.1}%)")).unwrap_or_default();
        let mut out = String::from("both\tleft_only\tright_only\tcounting_basis\n");
        let _ = writeln!(
            out,
            "{}\t{}{}\t{}{}\t{}",
            format_count(self.both),
            format_count(self.left_only),
            pct(self.left_only_pct),
            format_count(self.right_only),
            pct(self.right_only_pct),
            self.counting_basis
        );
        out
    }
}

fn normalize(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Every (subject label, relation, object label) combination of the file's
/// edges, over all `|`-separated labels of each endpoint.
pub fn label_triples(path: impl AsRef<Path>) -> Result<HashSet<LabelTriple>> {
    let path = path.as_ref();
    let mut reader = EdgeReader::open(path, MalformedPolicy::default())?;
    for column in ["node1;label", "node2;label"] {
        if !reader.has_column(column) {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: column.into(),
            });
        }
    }
    let mut triples = HashSet::new();
    for edge in reader.by_ref() {
        let edge = edge?;
        let (Some(l1), Some(l2)) = (&edge.node1_label, &edge.node2_label) else {
            continue;
        };
        let relation = edge.relation.trim();
        let lefts: Vec<String> = l1.split('|').map(normalize).filter(|l| !l.is_empty()).collect();
        let rights: Vec<String> = l2.split('|').map(normalize).filter(|l| !l.is_empty()).collect();
        for a in &lefts {
            for b in &rights {
                triples.insert((a.clone(), relation.to_string(), b.clone()));
            }
        }
    }
    Ok(triples)
}

pub fn compute_overlap(left: impl AsRef<Path>, right: impl AsRef<Path>) -> Result<OverlapReport> {
    let left = label_triples(left)?;
    let right = label_triples(right)?;
    Ok(OverlapReport::from_sets(&left, &right))
}
