//! End-to-end extraction: label lifting, the concept and commonness filters,
//! relation mapping, blacklisting and consolidation into CSKG edges.
//!
//! The edge file is streamed once. Edges that survive both label filters are
//! written to a spill file while the blacklist is collected; the second pass
//! reads that much smaller file, maps relations and feeds the consolidator.
//! Outputs are written to temporary files next to their destinations and only
//! renamed into place once everything succeeded.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::commonness::{load_frequency_table, Combiner, CommonnessRule, CommonnessThreshold, Comparison};
use crate::concept::{is_concept_edge, ConceptRule};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::extsort::SortConfig;
use crate::relations::{
    load_mapping, map_edge, BlacklistSet, ConsolidateOptions, Consolidator, CskgWriter, DropReason, MapOutcome,
    MappingTable,
};
use crate::tabular::{file_digest, lift_edge, read_node_labels, EdgeReader, EdgeRecord, EdgeWriter, MalformedPolicy};

pub const DEFAULT_BATCH_SIZE: usize = 1 << 16;
pub const DEFAULT_CENSUS_TOP: usize = 50;

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub edges: PathBuf,
    pub nodes: PathBuf,
    pub freq: PathBuf,
    pub out: PathBuf,
    pub report: PathBuf,
    pub mapping: Option<PathBuf>,
    pub threshold: CommonnessThreshold,
    pub comparison: Comparison,
    pub combiner: Combiner,
    pub language: String,
    pub malformed: MalformedPolicy,
    pub concept_rule: ConceptRule,
    pub symmetric_canonical: bool,
    pub census_top: usize,
    pub mode: ExecMode,
    pub batch_size: usize,
    pub sort: SortConfig,
}

impl ExtractConfig {
    pub fn new(
        edges: impl Into<PathBuf>,
        nodes: impl Into<PathBuf>,
        freq: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
        report: impl Into<PathBuf>,
    ) -> Self {
        ExtractConfig {
            edges: edges.into(),
            nodes: nodes.into(),
            freq: freq.into(),
            out: out.into(),
            report: report.into(),
            mapping: None,
            threshold: CommonnessThreshold::default(),
            comparison: Comparison::default(),
            combiner: Combiner::default(),
            language: "en".into(),
            malformed: MalformedPolicy::default(),
            concept_rule: ConceptRule::default(),
            symmetric_canonical: false,
            census_top: DEFAULT_CENSUS_TOP,
            mode: ExecMode::default(),
            batch_size: DEFAULT_BATCH_SIZE,
            sort: SortConfig::default(),
        }
    }
}

/// `<out stem>.provenance.tsv` next to the CSKG output.
pub fn provenance_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "edges".into());
    out.with_file_name(format!("{stem}.provenance.tsv"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub input: u64,
    pub after_concept_filter: u64,
    pub after_commonness_filter: u64,
    /// Edges whose relation has a mapping rule; not a subset count of the
    /// previous stage's survivors in any other sense.
    pub after_mapping: u64,
    pub after_blacklist: u64,
    pub after_dedup: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub unmapped_relation: u64,
    pub blacklist_relation: u64,
    pub blacklisted_node: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub relation: String,
    pub label: Option<String>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRelation {
    pub relation: String,
    pub reason: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub threshold: f64,
    pub comparison: String,
    pub combiner: String,
    pub language: String,
    pub mapping: String,
    pub strict: bool,
    pub allow_leading_digit: bool,
    pub symmetric_canonical: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub malformed_edge_rows: u64,
    pub malformed_node_rows: u64,
    pub duplicate_node_ids: u64,
    pub duplicate_frequency_terms: u64,
    pub labelled_nodes: u64,
    pub frequency_terms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigests {
    pub edges: String,
    pub nodes: String,
    pub freq: String,
    pub mapping: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub stages: StageCounts,
    pub dropped: DropCounts,
    /// Most frequent relations among the edges entering relation mapping.
    pub relation_census: Vec<CensusEntry>,
    pub relations_entering_mapping: u64,
    /// `after_mapping / after_commonness_filter`.
    pub mapped_fraction: Option<f64>,
    pub dropped_relation_census: Vec<DroppedRelation>,
    pub blacklist_size: u64,
    pub output_relations: BTreeMap<String, u64>,
    pub configuration: ConfigEcho,
    pub diagnostics: Diagnostics,
    pub inputs: InputDigests,
    pub produced_at: String,
}

impl ExtractionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialize");
        s.push('\n');
        s
    }
}

enum Screened {
    NotConcept,
    NotCommon,
    Kept(EdgeRecord),
}

fn temp_beside(path: &Path) -> Result<NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    tempfile::Builder::new()
        .prefix(".wdcs-")
        .tempfile_in(&dir)
        .map_err(|e| Error::io(&dir, e))
}

fn persist(tmp: NamedTempFile, dest: &Path) -> Result<()> {
    tmp.persist(dest).map_err(|e| Error::io(dest, e.error))?;
    Ok(())
}

fn spill_file(sort: &SortConfig) -> Result<NamedTempFile> {
    let dir = sort.spill_dir.clone().unwrap_or_else(std::env::temp_dir);
    tempfile::Builder::new()
        .prefix("wdcs-filtered-")
        .suffix(".tsv")
        .tempfile_in(&dir)
        .map_err(|e| Error::Spill {
            dir,
            message: e.to_string(),
        })
}

fn read_batch<I: Iterator<Item = Result<EdgeRecord>>>(edges: &mut I, size: usize) -> Result<Vec<EdgeRecord>> {
    let mut batch = Vec::with_capacity(size.min(1 << 20));
    for edge in edges.by_ref() {
        batch.push(edge?);
        if batch.len() >= size {
            break;
        }
    }
    Ok(batch)
}

pub fn extract(config: &ExtractConfig) -> Result<ExtractionReport> {
    let out_tmp = temp_beside(&config.out)?;
    let prov_dest = provenance_path(&config.out);
    let prov_tmp = temp_beside(&prov_dest)?;
    let report_tmp = temp_beside(&config.report)?;
    let labels = read_node_labels(&config.nodes, &config.language, config.malformed)?;
    let table = load_frequency_table(&config.freq, config.combiner)?;
    let mapping: MappingTable = load_mapping(config.mapping.as_deref())?;
    let mapping_digest = match &config.mapping {
        Some(path) => file_digest(path)?,
        None => mapping.provenance().to_string(),
    };
    let commonness = CommonnessRule {
        table: &table,
        threshold: config.threshold,
        comparison: config.comparison,
    };
    let batch_size = config.batch_size.max(1);
    let mut stages = StageCounts::default();
    let mut dropped = DropCounts::default();

    // Pass 1: screen every edge, keep survivors on disk, collect the blacklist.
    let mut reader = EdgeReader::open(&config.edges, config.malformed)?;
    let spill = spill_file(&config.sort)?;
    let spill_path = spill.path().to_path_buf();
    let mut spill_writer = EdgeWriter::new(BufWriter::with_capacity(1 << 20, spill.as_file()))
        .map_err(|e| Error::io(&spill_path, e))?;
    let mut census: HashMap<String, (u64, Option<String>)> = HashMap::new();
    let mut blacklist = BlacklistSet::new();
    loop {
        let batch = read_batch(&mut reader, batch_size)?;
        if batch.is_empty() {
            break;
        }
        stages.input += batch.len() as u64;
        let screened = exec::map_batch(config.mode, batch, |mut edge| {
            lift_edge(&mut edge, &labels);
            if !is_concept_edge(&edge, &config.concept_rule) {
                Screened::NotConcept
            } else if !commonness.is_common_edge(&edge) {
                Screened::NotCommon
            } else {
                Screened::Kept(edge)
            }
        });
        for outcome in screened {
            let edge = match outcome {
                Screened::NotConcept => continue,
                Screened::NotCommon => {
                    stages.after_concept_filter += 1;
                    continue;
                }
                Screened::Kept(edge) => edge,
            };
            stages.after_concept_filter += 1;
            stages.after_commonness_filter += 1;
            let entry = census.entry(edge.relation.clone()).or_insert((0, None));
            entry.0 += 1;
            if entry.1.is_none() {
                entry.1 = edge.relation_label.clone();
            }
            blacklist.observe(&edge, &mapping);
            spill_writer.write(&edge).map_err(|e| Error::io(&spill_path, e))?;
        }
    }
    spill_writer.finish().map_err(|e| Error::io(&spill_path, e))?;
    let edges_digest = reader.input_digest();
    let malformed_edge_rows = reader.malformed();
    log::info!(
        "screened {} edges: {} concepts, {} common, {} blacklisted nodes",
        stages.input,
        stages.after_concept_filter,
        stages.after_commonness_filter,
        blacklist.len()
    );

    // Pass 2: map, drop blacklisted endpoints, consolidate.
    let mut consolidator = Consolidator::new(ConsolidateOptions {
        symmetric_canonicalization: config.symmetric_canonical,
        sort: SortConfig {
            mode: config.mode,
            ..config.sort.clone()
        },
    });
    let mut dropped_census: BTreeMap<(String, &'static str), u64> = BTreeMap::new();
    let mut filtered = EdgeReader::open(&spill_path, MalformedPolicy::Abort)?;
    loop {
        let batch = read_batch(&mut filtered, batch_size)?;
        if batch.is_empty() {
            break;
        }
        let outcomes = exec::map_batch(config.mode, batch, |edge| {
            let outcome = map_edge(&edge, &mapping);
            (edge.relation, outcome)
        });
        for (relation, outcome) in outcomes {
            match outcome {
                MapOutcome::Dropped(reason) => {
                    let key = match reason {
                        DropReason::UnmappedRelation => {
                            dropped.unmapped_relation += 1;
                            "unmapped-relation"
                        }
                        DropReason::BlacklistRelation => {
                            dropped.blacklist_relation += 1;
                            "blacklist-relation"
                        }
                    };
                    *dropped_census.entry((relation, key)).or_insert(0) += 1;
                }
                MapOutcome::Mapped(edge) => {
                    stages.after_mapping += 1;
                    if blacklist.touches(&edge) {
                        dropped.blacklisted_node += 1;
                        continue;
                    }
                    stages.after_blacklist += 1;
                    consolidator.push(edge)?;
                }
            }
        }
    }
    drop(filtered);
    drop(spill);

    let mut writer = CskgWriter::new(BufWriter::new(out_tmp.as_file()), BufWriter::new(prov_tmp.as_file()))
        .map_err(|e| Error::io(&config.out, e))?;
    let mut output_relations: BTreeMap<String, u64> = BTreeMap::new();
    for item in consolidator.finish()? {
        let item = item?;
        stages.after_dedup += 1;
        *output_relations.entry(item.edge.relation.clone()).or_insert(0) += 1;
        writer.write(&item).map_err(|e| Error::io(&config.out, e))?;
    }
    writer.finish().map_err(|e| Error::io(&config.out, e))?;

    let mut relation_census: Vec<CensusEntry> = census
        .iter()
        .map(|(relation, (count, label))| CensusEntry {
            relation: relation.clone(),
            label: label.clone(),
            count: *count,
        })
        .collect();
    relation_census.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.relation.cmp(&b.relation)));
    relation_census.truncate(config.census_top);
    let mut dropped_relation_census: Vec<DroppedRelation> = dropped_census
        .into_iter()
        .map(|((relation, reason), count)| DroppedRelation {
            relation,
            reason: reason.to_string(),
            count,
        })
        .collect();
    dropped_relation_census.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.relation.cmp(&b.relation)));

    let report = ExtractionReport {
        mapped_fraction: (stages.after_commonness_filter > 0)
            .then(|| stages.after_mapping as f64 / stages.after_commonness_filter as f64),
        stages,
        dropped,
        relation_census,
        relations_entering_mapping: census.len() as u64,
        dropped_relation_census,
        blacklist_size: blacklist.len() as u64,
        output_relations,
        configuration: ConfigEcho {
            threshold: config.threshold.value(),
            comparison: match config.comparison {
                Comparison::Inclusive => ">=".into(),
                Comparison::StrictAbove => ">".into(),
            },
            combiner: config.combiner.to_string(),
            language: config.language.clone(),
            mapping: mapping.provenance().to_string(),
            strict: config.malformed == MalformedPolicy::Abort,
            allow_leading_digit: config.concept_rule.allow_leading_digit,
            symmetric_canonical: config.symmetric_canonical,
        },
        diagnostics: Diagnostics {
            malformed_edge_rows,
            malformed_node_rows: labels.malformed(),
            duplicate_node_ids: labels.duplicates(),
            duplicate_frequency_terms: table.duplicates(),
            labelled_nodes: labels.len() as u64,
            frequency_terms: table.len() as u64,
        },
        inputs: InputDigests {
            edges: edges_digest,
            nodes: file_digest(&config.nodes)?,
            freq: table.digest().unwrap_or_default().to_string(),
            mapping: mapping_digest,
        },
        produced_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };

    {
        let mut w = BufWriter::new(report_tmp.as_file());
        w.write_all(report.to_json().as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&config.report, e))?;
    }
    persist(out_tmp, &config.out)?;
    persist(prov_tmp, &prov_dest)?;
    persist(report_tmp, &config.report)?;
    Ok(report)
}

/// Opens a file for writing through a temporary sibling; call
/// [`AtomicFile::commit`] to move it into place.
pub struct AtomicFile {
    tmp: NamedTempFile,
    dest: PathBuf,
}

impl AtomicFile {
    pub fn create(dest: impl AsRef<Path>) -> Result<Self> {
        let dest = dest.as_ref().to_path_buf();
        Ok(AtomicFile {
            tmp: temp_beside(&dest)?,
            dest,
        })
    }

    pub fn file(&self) -> &File {
        self.tmp.as_file()
    }

    pub fn write_all(&mut self, bytes: &[u8]) -> Result<()> {
        self.tmp.as_file_mut().write_all(bytes).map_err(|e| Error::io(&self.dest, e))
    }

    pub fn commit(self) -> Result<()> {
        persist(self.tmp, &self.dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_sits_beside_output() {
        assert_eq!(provenance_path(Path::new("/x/wikidata-cs.tsv")), PathBuf::from("/x/wikidata-cs.provenance.tsv"));
        assert_eq!(provenance_path(Path::new("out")), PathBuf::from("out.provenance.tsv"));
    }

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn tiny_extraction() {
        let dir = tempfile::tempdir().unwrap();
        let edges = write(
            dir.path(),
            "edges.tsv",
            "id\tnode1\tlabel\tnode2\n\
             s1\tQ1\tP361\tQ2\n\
             s2\tQ2\tP527\tQ1\n\
             s3\tQ3\tP279\tQ1\n\
             s4\tQ4\tP681\tQ5\n\
             s5\tQ4\tP279\tQ1\n\
             s6\tQ1\tP9999\tQ2\n\
             s7\tQ6\tP279\tQ1\n",
        );
        let nodes = write(
            dir.path(),
            "nodes.tsv",
            "id\tlabel\nQ1\t'car'@en\nQ2\t'wheel'@en\nQ3\t'truck'@en\nQ4\t'protein'@en\nQ5\t'cell'@en\nQ6\t'Ford'@en\n",
        );
        let freq = write(dir.path(), "freq.tsv", "car\t1e-4\nwheel\t1e-4\ntruck\t1e-5\nprotein\t1e-5\ncell\t1e-5\nford\t1e-5\n");
        let mut config = ExtractConfig::new(&edges, &nodes, &freq, dir.path().join("cs.tsv"), dir.path().join("r.json"));
        config.sort.spill_dir = Some(dir.path().to_path_buf());
        let report = extract(&config).unwrap();
        assert_eq!(
            report.stages,
            StageCounts {
                input: 7,
                after_concept_filter: 6,
                after_commonness_filter: 6,
                after_mapping: 4,
                after_blacklist: 3,
                after_dedup: 2,
            }
        );
        assert_eq!(report.dropped.unmapped_relation, 1);
        assert_eq!(report.dropped.blacklist_relation, 1);
        assert_eq!(report.blacklist_size, 2);
        let out = std::fs::read_to_string(dir.path().join("cs.tsv")).unwrap();
        let ids: Vec<&str> = out.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(ids, ["Q1-partof-Q2", "Q3-isa-Q1"]);
        let prov = std::fs::read_to_string(dir.path().join("cs.provenance.tsv")).unwrap();
        assert_eq!(prov.lines().count(), 4);
    }

    #[test]
    fn nothing_written_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let edges = write(dir.path(), "edges.tsv", "node1\tlabel\tnode2\nQ1\tP279\tQ2\n");
        let nodes = write(dir.path(), "nodes.tsv", "id\tlabel\nQ1\t'a'@en\n");
        let mut config = ExtractConfig::new(&edges, &nodes, dir.path().join("missing.tsv"), dir.path().join("cs.tsv"), dir.path().join("r.json"));
        config.sort.spill_dir = Some(dir.path().to_path_buf());
        let err = extract(&config).unwrap_err();
        assert!(err.to_string().contains("missing.tsv"));
        let names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names.len(), 2, "{names:?}");
    }
}
