use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pagerank::{pagerank, GraphBuilder, PageRankConfig};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::tabular::{EdgeReader, EdgeRecord, MalformedPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedNode {
    pub node: String,
    pub label: Option<String>,
    pub score: f64,
}

/// Summary of an edge file. Serialized as the stats report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: u64,
    pub edge_count: u64,
    pub relation_histogram: BTreeMap<String, u64>,
    /// `2 * edge_count / node_count`; absent for an empty graph.
    pub mean_degree: Option<f64>,
    pub top_pagerank: Vec<RankedNode>,
    pub produced_at: String,
    pub input_digest: String,
}

impl GraphStats {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Report {
            path: origin.to_path_buf(),
            message: format!("not a stats report: {e}"),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GraphStats::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::from("key\tvalue\n");
        let _ = writeln!(out, "nodes\t{}", self.node_count);
        let _ = writeln!(out, "edges\t{}", self.edge_count);
        match self.mean_degree {
            Some(m) => {
                let _ = writeln!(out, "mean_degree\t{m:.2}");
            }
            None => out.push_str("mean_degree\tundefined\n"),
        }
        for (relation, count) in &self.relation_histogram {
            let _ = writeln!(out, "relation:{relation}\t{count}");
        }
        for (i, r) in self.top_pagerank.iter().enumerate() {
            let _ = writeln!(
                out,
                "pagerank:{}\t{}\t{}\t{:.6e}",
                i + 1,
                r.node,
                r.label.as_deref().unwrap_or(""),
                r.score
            );
        }
        out
    }
}

pub fn mean_degree(edge_count: u64, node_count: u64) -> Option<f64> {
    (node_count > 0).then(|| (2 * edge_count) as f64 / node_count as f64)
}

#[derive(Debug, Clone)]
pub struct StatsOptions {
    pub top_k: usize,
    pub pagerank: PageRankConfig,
    pub mode: ExecMode,
    pub malformed: MalformedPolicy,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            top_k: 10,
            pagerank: PageRankConfig::default(),
            mode: ExecMode::default(),
            malformed: MalformedPolicy::default(),
        }
    }
}

/// Accumulates statistics from edges in one pass.
#[derive(Debug, Default)]
pub struct StatsBuilder {
    graph: GraphBuilder,
    histogram: BTreeMap<String, u64>,
    labels: HashMap<String, String>,
    edges: u64,
}

impl StatsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, edge: &EdgeRecord) {
        self.edges += 1;
        self.graph.add_edge(&edge.node1, &edge.node2);
        match self.histogram.get_mut(&edge.relation) {
            Some(c) => *c += 1,
            None => {
                self.histogram.insert(edge.relation.clone(), 1);
            }
        }
        for (node, label) in [(&edge.node1, &edge.node1_label), (&edge.node2, &edge.node2_label)] {
            if let Some(label) = label {
                if !self.labels.contains_key(node) {
                    self.labels.insert(node.clone(), label.clone());
                }
            }
        }
    }

    pub fn finish(self, options: &StatsOptions, input_digest: String) -> Result<GraphStats> {
        let node_count = self.graph.node_count() as u64;
        let graph = self.graph.build();
        let top_pagerank = if node_count == 0 || options.top_k == 0 {
            Vec::new()
        } else {
            let pr = pagerank(&graph, &options.pagerank, options.mode)?;
            let mut order: Vec<usize> = (0..graph.node_count()).collect();
            order.sort_by(|&a, &b| {
                pr.scores[b]
                    .total_cmp(&pr.scores[a])
                    .then_with(|| graph.names()[a].cmp(&graph.names()[b]))
            });
            order
                .into_iter()
                .take(options.top_k)
                .map(|i| {
                    let node = graph.names()[i].clone();
                    RankedNode {
                        label: self.labels.get(&node).cloned(),
                        node,
                        score: pr.scores[i],
                    }
                })
                .collect()
        };
        Ok(GraphStats {
            node_count,
            edge_count: self.edges,
            relation_histogram: self.histogram,
            mean_degree: mean_degree(self.edges, node_count),
            top_pagerank,
            produced_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            input_digest,
        })
    }
}

pub fn compute_stats(path: impl AsRef<Path>, options: &StatsOptions) -> Result<GraphStats> {
    let mut reader = EdgeReader::open(path, options.malformed)?;
    let mut builder = StatsBuilder::new();
    for edge in reader.by_ref() {
        builder.add(&edge?);
    }
    let digest = reader.input_digest();
    builder.finish(options, digest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats_of(edges: &[EdgeRecord]) -> GraphStats {
        let mut b = StatsBuilder::new();
        edges.iter().for_each(|e| b.add(e));
        b.finish(&StatsOptions::default(), String::new()).unwrap()
    }

    #[test]
    fn single_edge() {
        let s = stats_of(&[EdgeRecord::new("a", "r", "b")]);
        assert_eq!((s.node_count, s.edge_count), (2, 1));
        assert_eq!(s.mean_degree, Some(1.0));
        assert_eq!(s.top_pagerank[0].node, "b");
    }

    #[test]
    fn empty_graph_flags_mean_degree() {
        let s = stats_of(&[]);
        assert_eq!((s.node_count, s.edge_count), (0, 0));
        assert_eq!(s.mean_degree, None);
        assert!(s.top_pagerank.is_empty());
        assert!(s.render_tsv().contains("mean_degree\tundefined"));
    }

    #[test]
    fn published_sizes_give_published_degree() {
        let m = mean_degree(106_103, 71_243).unwrap();
        assert!((m - 2.98).abs() <= 0.005, "{m}");
    }

    #[test]
    fn json_round_trip() {
        let s = stats_of(&[EdgeRecord::new("a", "r", "b").with_labels("x", "y")]);
        let back = GraphStats::from_json(&s.to_json(), Path::new("mem")).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.top_pagerank[0].label.as_deref(), Some("y"));
        assert!(GraphStats::from_json("{}", Path::new("mem")).is_err());
    }
}
