//! PageRank by power iteration on a directed multigraph.
//!
//! Parallel edges count with multiplicity. Dangling nodes spread their mass
//! uniformly and teleportation is uniform. The per-node gather is the only
//! parallel step; all reductions run sequentially so both execution modes
//! produce bit-identical scores.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub damping: f64,
    /// Stop once the L1 change between iterations drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

/// Compressed in-adjacency of a directed graph over interned node names.
#[derive(Debug, Clone, Default)]
pub struct DirectedGraph {
    names: Vec<String>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    out_degree: Vec<u32>,
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    index: HashMap<String, u32>,
    names: Vec<String>,
    edges: Vec<(u32, u32)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn add_edge(&mut self, from: &str, to: &str) {
        let (u, v) = (self.intern(from), self.intern(to));
        self.edges.push((u, v));
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn build(self) -> DirectedGraph {
        let n = self.names.len();
        let mut out_degree = vec![0u32; n];
        let mut in_offsets = vec![0usize; n + 1];
        for &(u, v) in &self.edges {
            out_degree[u as usize] += 1;
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![0u32; self.edges.len()];
        for &(u, v) in &self.edges {
            in_sources[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        DirectedGraph {
            names: self.names,
            in_offsets,
            in_sources,
            out_degree,
        }
    }
}

impl DirectedGraph {
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut b = GraphBuilder::new();
        for (u, v) in edges {
            b.add_edge(u, v);
        }
        b.build()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.in_sources.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn predecessors(&self, v: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, u: usize) -> u32 {
        self.out_degree[u]
    }
}

#[derive(Debug, Clone)]
pub struct PageRank {
    /// Scores indexed like [`DirectedGraph::names`].
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iterations` ran out before the tolerance was met.
    pub converged: bool,
    pub last_delta: f64,
}

impl PageRank {
    pub fn by_node<'g>(&self, graph: &'g DirectedGraph) -> HashMap<&'g str, f64> {
        graph.names().iter().map(String::as_str).zip(self.scores.iter().copied()).collect()
    }
}

pub fn pagerank(graph: &DirectedGraph, config: &PageRankConfig, mode: ExecMode) -> Result<PageRank> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::Config("PageRank needs a non-empty graph".into()));
    }
    if !(config.damping > 0.0 && config.damping < 1.0) {
        return Err(Error::Config(format!("damping must lie in (0, 1), got {}", config.damping)));
    }
    let d = config.damping;
    let nf = n as f64;
    let mut scores = vec![1.0 / nf; n];
    let mut contrib = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut iterations = 0;
    let mut delta = f64::INFINITY;

    while iterations < config.max_iterations {
        let mut dangling = 0.0;
        for (c, (&x, &deg)) in contrib.iter_mut().zip(scores.iter().zip(&graph.out_degree)) {
            if deg == 0 {
                dangling += x;
                *c = 0.0;
            } else {
                *c = x / deg as f64;
            }
        }
        let base = (1.0 - d) / nf + d * dangling / nf;
        exec::fill_indexed(mode, &mut next, |v| {
            let gathered: f64 = graph.predecessors(v).iter().map(|&u| contrib[u as usize]).sum();
            base + d * gathered
        });
        let total: f64 = next.iter().sum();
        delta = 0.0;
        for (x, y) in scores.iter_mut().zip(next.iter_mut()) {
            *y /= total;
            delta += (*y - *x).abs();
        }
        std::mem::swap(&mut scores, &mut next);
        iterations += 1;
        if delta < config.tolerance {
            break;
        }
    }
    let converged = delta < config.tolerance;
    if !converged {
        log::warn!("PageRank stopped after {iterations} iterations with L1 change {delta:e}");
    }
    Ok(PageRank {
        scores,
        iterations,
        converged,
        last_delta: delta,
    })
}
