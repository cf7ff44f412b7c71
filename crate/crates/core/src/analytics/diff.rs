//! Growth of per-relation, edge and node counts between two snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{format_count, round_ratio, GraphStats};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountSnapshot {
    pub relation_counts: BTreeMap<String, u64>,
    pub edge_count: u64,
    pub node_count: u64,
}

impl From<&GraphStats> for CountSnapshot {
    fn from(stats: &GraphStats) -> Self {
        CountSnapshot {
            relation_counts: stats.relation_histogram.clone(),
            edge_count: stats.edge_count,
            node_count: stats.node_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthStatus {
    Both,
    /// Absent from the old snapshot; growth is undefined.
    New,
    /// Absent from the new snapshot.
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub key: String,
    pub old_count: u64,
    pub new_count: u64,
    /// `round(100 * new / old)`, halves away from zero.
    pub growth_pct: Option<u64>,
    pub status: GrowthStatus,
}

impl GrowthRow {
    pub fn new(key: impl Into<String>, old_count: u64, new_count: u64, status: GrowthStatus) -> Self {
        GrowthRow {
            key: key.into(),
            old_count,
            new_count,
            growth_pct: growth_percent(old_count, new_count),
            status,
        }
    }

    pub fn rendered_growth(&self) -> String {
        match self.growth_pct {
            Some(p) => format_percent(p),
            None => "new".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    /// Ordered by new count, descending, then by relation.
    pub relations: Vec<GrowthRow>,
    pub edges: GrowthRow,
    pub nodes: GrowthRow,
}

pub fn growth_percent(old: u64, new: u64) -> Option<u64> {
    (old > 0).then(|| round_ratio(100 * new as u128, old as u128) as u64)
}

/// `1232` -> `1,232%`.
pub fn format_percent(pct: u64) -> String {
    format!("{}%", format_count(pct))
}

pub fn temporal_diff_counts(old: &CountSnapshot, new: &CountSnapshot) -> DiffReport {
    let keys: BTreeSet<&String> = old.relation_counts.keys().chain(new.relation_counts.keys()).collect();
    let mut relations: Vec<GrowthRow> = keys
        .into_iter()
        .map(|k| {
            let o = old.relation_counts.get(k).copied();
            let n = new.relation_counts.get(k).copied();
            let status = match (o, n) {
                (Some(_), Some(_)) => GrowthStatus::Both,
                (None, _) => GrowthStatus::New,
                (_, None) => GrowthStatus::Removed,
            };
            GrowthRow::new(k.clone(), o.unwrap_or(0), n.unwrap_or(0), status)
        })
        .collect();
    relations.sort_by(|a, b| b.new_count.cmp(&a.new_count).then_with(|| a.key.cmp(&b.key)));
    let total = |key: &str, o: u64, n: u64| {
        let status = if o == 0 { GrowthStatus::New } else { GrowthStatus::Both };
        GrowthRow::new(key, o, n, status)
    };
    DiffReport {
        relations,
        edges: total("edges", old.edge_count, new.edge_count),
        nodes: total("nodes", old.node_count, new.node_count),
    }
}

pub fn temporal_diff(old: &GraphStats, new: &GraphStats) -> DiffReport {
    temporal_diff_counts(&old.into(), &new.into())
}

impl DiffReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("diff serialize");
        s.push('\n');
        s
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::from("relation\told\tnew\tgrowth\n");
        for row in self.relations.iter().chain([&self.edges, &self.nodes]) {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                row.key,
                format_count(row.old_count),
                format_count(row.new_count),
                row.rendered_growth()
            );
        }
        out
    }
}
