//! Streaming reader and writer for KGTK-style edge and node files, plus the
//! relational primitives the extraction needs: label lifting, the `ifexists`
//! join and compaction.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extsort::{ExternalSorter, SortConfig, Sorted, SpillRecord};
use crate::tsv::{self, Header};

/// Column names written by [`EdgeWriter`], in order.
pub const EDGE_COLUMNS: [&str; 9] = [
    "id",
    "node1",
    "relation",
    "node2",
    "node1;label",
    "node2;label",
    "relation;label",
    "source",
    "sentence",
];

/// One directed labeled edge. Empty cells are read as `None`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRecord {
    pub id: String,
    pub node1: String,
    pub relation: String,
    pub node2: String,
    pub node1_label: Option<String>,
    pub node2_label: Option<String>,
    pub relation_label: Option<String>,
    pub source: Option<String>,
    pub sentence: Option<String>,
}

impl EdgeRecord {
    pub fn new(node1: impl Into<String>, relation: impl Into<String>, node2: impl Into<String>) -> Self {
        EdgeRecord {
            node1: node1.into(),
            relation: relation.into(),
            node2: node2.into(),
            ..Default::default()
        }
    }

    pub fn with_labels(mut self, node1_label: &str, node2_label: &str) -> Self {
        self.node1_label = Some(node1_label.to_string());
        self.node2_label = Some(node2_label.to_string());
        self
    }

    pub fn column(&self, column: Column) -> Option<&str> {
        match column {
            Column::Id => Some(self.id.as_str()),
            Column::Node1 => Some(self.node1.as_str()),
            Column::Relation => Some(self.relation.as_str()),
            Column::Node2 => Some(self.node2.as_str()),
            Column::Node1Label => self.node1_label.as_deref(),
            Column::Node2Label => self.node2_label.as_deref(),
            Column::RelationLabel => self.relation_label.as_deref(),
            Column::Source => self.source.as_deref(),
            Column::Sentence => self.sentence.as_deref(),
        }
    }

    fn fields(&self) -> [&str; 9] {
        [
            &self.id,
            &self.node1,
            &self.relation,
            &self.node2,
            self.node1_label.as_deref().unwrap_or(""),
            self.node2_label.as_deref().unwrap_or(""),
            self.relation_label.as_deref().unwrap_or(""),
            self.source.as_deref().unwrap_or(""),
            self.sentence.as_deref().unwrap_or(""),
        ]
    }
}

/// First entry of a `|`-separated label list.
pub fn primary_label(label: &str) -> &str {
    label.split('|').next().unwrap_or(label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Id,
    Node1,
    Relation,
    Node2,
    Node1Label,
    Node2Label,
    RelationLabel,
    Source,
    Sentence,
}

impl Column {
    pub const TRIPLE: [Column; 3] = [Column::Node1, Column::Relation, Column::Node2];

    pub fn parse(name: &str) -> Option<Column> {
        Some(match name {
            "id" => Column::Id,
            "node1" => Column::Node1,
            "relation" | "label" => Column::Relation,
            "node2" => Column::Node2,
            "node1;label" => Column::Node1Label,
            "node2;label" => Column::Node2Label,
            "relation;label" | "label;label" => Column::RelationLabel,
            "source" => Column::Source,
            "sentence" => Column::Sentence,
            _ => return None,
        })
    }
}

/// What to do with a row that does not fit the header.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MalformedPolicy {
    #[default]
    SkipAndCount,
    Abort,
}

/// A reader that hashes every byte it passes through.
pub struct DigestReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> DigestReader<R> {
    pub fn new(inner: R) -> Self {
        DigestReader {
            inner,
            hasher: Sha256::new(),
        }
    }

    /// `sha256:<hex>` of the bytes read so far.
    pub fn digest(&self) -> String {
        format!("sha256:{}", hex::encode(self.hasher.clone().finalize()))
    }
}

impl<R: Read> Read for DigestReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// `sha256:<hex>` of a whole file.
pub fn file_digest(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = DigestReader::new(file);
    io::copy(&mut reader, &mut io::sink()).map_err(|e| Error::io(path, e))?;
    Ok(reader.digest())
}

pub(crate) type FileSource = BufReader<DigestReader<File>>;

pub(crate) fn open_source(path: &Path) -> Result<FileSource> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::with_capacity(1 << 20, DigestReader::new(file)))
}

#[derive(Debug, Clone, Default)]
struct EdgeColumns {
    id: Option<usize>,
    node1: usize,
    relation: usize,
    node2: usize,
    node1_label: Option<usize>,
    node2_label: Option<usize>,
    relation_label: Option<usize>,
    source: Option<usize>,
    sentence: Option<usize>,
}

impl EdgeColumns {
    fn resolve(header: &Header, path: &Path) -> Result<Self> {
        let required = |name: &str| {
            header.index_of(name).ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
        };
        let relation = match header.index_of("relation").or_else(|| header.index_of("label")) {
            Some(i) => i,
            None => {
                return Err(Error::MissingColumn {
                    path: path.to_path_buf(),
                    column: "relation (or label)".into(),
                })
            }
        };
        Ok(EdgeColumns {
            id: header.index_of("id"),
            node1: required("node1")?,
            relation,
            node2: required("node2")?,
            node1_label: header.index_of("node1;label"),
            node2_label: header.index_of("node2;label"),
            relation_label: header
                .index_of("relation;label")
                .or_else(|| header.index_of("label;label")),
            source: header.index_of("source"),
            sentence: header.index_of("sentence"),
        })
    }
}

/// Streaming edge file reader yielding records in file order.
pub struct EdgeReader<R = FileSource> {
    path: PathBuf,
    reader: R,
    header: Header,
    columns: EdgeColumns,
    policy: MalformedPolicy,
    line_no: u64,
    line: String,
    malformed: u64,
    records: u64,
    finished: bool,
}

impl EdgeReader<FileSource> {
    pub fn open(path: impl AsRef<Path>, policy: MalformedPolicy) -> Result<Self> {
        let path = path.as_ref();
        EdgeReader::from_reader(open_source(path)?, path, policy)
    }

    /// `sha256:<hex>` of the bytes consumed; the whole file once exhausted.
    pub fn input_digest(&self) -> String {
        self.reader.get_ref().digest()
    }
}

/// Opens an edge file with the default skip-and-count policy.
pub fn read_edge_file(path: impl AsRef<Path>) -> Result<EdgeReader> {
    EdgeReader::open(path, MalformedPolicy::default())
}

impl<R: BufRead> EdgeReader<R> {
    pub fn from_reader(mut reader: R, path: impl AsRef<Path>, policy: MalformedPolicy) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut line = String::new();
        reader.read_line(&mut line).map_err(|e| Error::io(&path, e))?;
        let header = Header::parse(&line);
        let columns = EdgeColumns::resolve(&header, &path)?;
        Ok(EdgeReader {
            path,
            reader,
            header,
            columns,
            policy,
            line_no: 1,
            line,
            malformed: 0,
            records: 0,
            finished: false,
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.header.index_of(name).is_some()
    }

    /// Rows skipped so far under [`MalformedPolicy::SkipAndCount`].
    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn parse_line(&self) -> std::result::Result<EdgeRecord, String> {
        let line = tsv::trim_newline(&self.line);
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != self.header.len() {
            return Err(format!(
                "expected {} columns, found {}",
                self.header.len(),
                cells.len()
            ));
        }
        let required = |i: usize, name: &str| -> std::result::Result<String, String> {
            let value = tsv::unescape(cells[i]);
            if value.is_empty() {
                Err(format!("empty {name}"))
            } else {
                Ok(value.into_owned())
            }
        };
        let optional = |i: Option<usize>| {
            i.map(|i| cells[i])
                .filter(|c| !c.is_empty())
                .map(|c| tsv::unescape(c).into_owned())
        };
        let c = &self.columns;
        Ok(EdgeRecord {
            id: c.id.map(|i| tsv::unescape(cells[i]).into_owned()).unwrap_or_default(),
            node1: required(c.node1, "node1")?,
            relation: required(c.relation, "relation")?,
            node2: required(c.node2, "node2")?,
            node1_label: optional(c.node1_label),
            node2_label: optional(c.node2_label),
            relation_label: optional(c.relation_label),
            source: optional(c.source),
            sentence: optional(c.sentence),
        })
    }
}

impl<R: BufRead> Iterator for EdgeReader<R> {
    type Item = Result<EdgeRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            self.line.clear();
            match self.reader.read_line(&mut self.line) {
                Ok(0) => {
                    self.finished = true;
                    if self.malformed > 0 {
                        log::warn!(
                            "{}: skipped {} malformed rows",
                            self.path.display(),
                            self.malformed
                        );
                    }
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.finished = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
            }
            self.line_no += 1;
            if tsv::trim_newline(&self.line).is_empty() {
                continue;
            }
            match self.parse_line() {
                Ok(record) => {
                    self.records += 1;
                    return Some(Ok(record));
                }
                Err(reason) => match self.policy {
                    MalformedPolicy::SkipAndCount => self.malformed += 1,
                    MalformedPolicy::Abort => {
                        self.finished = true;
                        return Some(Err(Error::MalformedRow {
                            path: self.path.clone(),
                            line: self.line_no,
                            reason,
                        }));
                    }
                },
            }
        }
    }
}

/// Writes edge files with the full column set of [`EDGE_COLUMNS`].
pub struct EdgeWriter<W: Write> {
    out: W,
    buf: String,
}

impl<W: Write> EdgeWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        let mut buf = String::new();
        tsv::push_row(&mut buf, EDGE_COLUMNS);
        out.write_all(buf.as_bytes())?;
        Ok(EdgeWriter { out, buf })
    }

    pub fn write(&mut self, edge: &EdgeRecord) -> io::Result<()> {
        self.buf.clear();
        tsv::push_row(&mut self.buf, edge.fields());
        self.out.write_all(self.buf.as_bytes())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_edge_file<'a>(
    path: impl AsRef<Path>,
    edges: impl IntoIterator<Item = &'a EdgeRecord>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = EdgeWriter::new(io::BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    for edge in edges {
        writer.write(edge).map_err(|e| Error::io(path, e))?;
    }
    writer.finish().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A node id paired with its label in the requested language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: String,
    pub label: Option<String>,
}

/// Node id to label lookup. Multiple labels of one node are joined with `|`.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    labels: HashMap<String, String>,
    duplicates: u64,
    malformed: u64,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn insert(&mut self, id: impl Into<String>, label: impl Into<String>) {
        self.labels.insert(id.into(), label.into());
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows whose id had already been seen.
    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn malformed(&self) -> u64 {
        self.malformed
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for LabelMap {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        let mut map = LabelMap::new();
        for (k, v) in iter {
            map.insert(k, v);
        }
        map
    }
}

/// Splits a KGTK list on `|` separators that are not backslash-escaped.
fn split_list(value: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut current = String::new();
    let mut chars = value.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('|') => current.push('|'),
                Some(other) => {
                    current.push('\\');
                    current.push(other);
                }
                None => current.push('\\'),
            },
            '|' => items.push(std::mem::take(&mut current)),
            c => current.push(c),
        }
    }
    items.push(current);
    items
}

/// Parses one label-list item, returning its text and language (if qualified).
pub fn parse_label_item(item: &str) -> (String, Option<&str>) {
    if let Some(body) = item.strip_prefix('\'') {
        if let Some(at) = body.rfind("'@") {
            let text = body[..at].replace("\\'", "'");
            return (text, Some(&body[at + 2..]));
        }
    }
    if item.len() >= 2 && item.starts_with('"') && item.ends_with('"') {
        return (item[1..item.len() - 1].replace("\\\"", "\""), None);
    }
    (item.to_string(), None)
}

/// Labels of a node-file cell that match `language`; plain strings match any.
pub fn label_in_language(value: &str, language: &str) -> Option<String> {
    let matching: Vec<String> = split_list(value)
        .iter()
        .filter_map(|item| {
            let (text, lang) = parse_label_item(item.trim());
            let text = text.trim().to_string();
            match lang {
                _ if text.is_empty() => None,
                Some(l) if l != language => None,
                _ => Some(text),
            }
        })
        .collect();
    (!matching.is_empty()).then(|| matching.join("|"))
}

/// Loads the labels of the requested language from a node file.
pub fn read_node_labels(
    path: impl AsRef<Path>,
    language: &str,
    policy: MalformedPolicy,
) -> Result<LabelMap> {
    let path = path.as_ref();
    let mut reader = open_source(path)?;
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    let header = Header::parse(&line);
    let missing = |column: &str| Error::MissingColumn {
        path: path.to_path_buf(),
        column: column.to_string(),
    };
    let id_col = header.index_of("id").ok_or_else(|| missing("id"))?;
    let label_col = header.index_of("label").ok_or_else(|| missing("label"))?;

    let mut map = LabelMap::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut line_no = 1u64;
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            break;
        }
        line_no += 1;
        let row = tsv::trim_newline(&line);
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split('\t').collect();
        if cells.len() != header.len() || cells[id_col].is_empty() {
            if policy == MalformedPolicy::Abort {
                return Err(Error::MalformedRow {
                    path: path.to_path_buf(),
                    line: line_no,
                    reason: format!("expected {} columns with a non-empty id", header.len()),
                });
            }
            map.malformed += 1;
            continue;
        }
        let id = tsv::unescape(cells[id_col]);
        if seen.contains(id.as_ref()) {
            map.duplicates += 1;
        } else {
            seen.insert(id.to_string());
        }
        match label_in_language(&tsv::unescape(cells[label_col]), language) {
            Some(label) => map.insert(id.into_owned(), label),
            None => {
                map.labels.remove(id.as_ref());
            }
        }
    }
    if map.duplicates > 0 {
        log::warn!(
            "{}: {} duplicate node ids (last row wins)",
            path.display(),
            map.duplicates
        );
    }
    Ok(map)
}

/// Replaces the endpoint and relation labels of an edge with those in `labels`.
/// Missing ids leave the field absent.
pub fn lift_edge(edge: &mut EdgeRecord, labels: &LabelMap) {
    edge.node1_label = labels.get(&edge.node1).map(str::to_string);
    edge.node2_label = labels.get(&edge.node2).map(str::to_string);
    edge.relation_label = labels.get(&edge.relation).map(str::to_string);
}

pub fn lift_labels<'a, I>(edges: I, labels: &'a LabelMap) -> impl Iterator<Item = EdgeRecord> + 'a
where
    I: IntoIterator<Item = EdgeRecord>,
    I::IntoIter: 'a,
{
    edges.into_iter().map(move |mut edge| {
        lift_edge(&mut edge, labels);
        edge
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum JoinMode {
    #[default]
    BothEndpoints,
    EitherEndpoint,
}

pub fn exists_in(edge: &EdgeRecord, keep: &HashSet<String>, mode: JoinMode) -> bool {
    match mode {
        JoinMode::BothEndpoints => keep.contains(&edge.node1) && keep.contains(&edge.node2),
        JoinMode::EitherEndpoint => keep.contains(&edge.node1) || keep.contains(&edge.node2),
    }
}

/// The `ifexists` join: keeps edges whose endpoints are in `keep`.
pub fn filter_if_exists<'a, I>(
    edges: I,
    keep: &'a HashSet<String>,
    mode: JoinMode,
) -> impl Iterator<Item = EdgeRecord> + 'a
where
    I: IntoIterator<Item = EdgeRecord>,
    I::IntoIter: 'a,
{
    edges.into_iter().filter(move |e| exists_in(e, keep, mode))
}

fn encode_opt(out: &mut String, value: Option<&str>) {
    if let Some(v) = value {
        out.push('=');
        out.push_str(&tsv::escape(v));
    }
}

fn decode_opt(cell: &str) -> Option<Option<String>> {
    if cell.is_empty() {
        return Some(None);
    }
    cell.strip_prefix('=').map(|v| Some(tsv::unescape(v).into_owned()))
}

/// Appends an edge as nine tab-separated spill cells.
pub(crate) fn encode_edge(out: &mut String, edge: &EdgeRecord) {
    for (i, field) in [&edge.id, &edge.node1, &edge.relation, &edge.node2].iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(&tsv::escape(field));
    }
    for value in [
        &edge.node1_label,
        &edge.node2_label,
        &edge.relation_label,
        &edge.source,
        &edge.sentence,
    ] {
        out.push('\t');
        encode_opt(out, value.as_deref());
    }
}

pub(crate) fn decode_edge(cells: &[&str]) -> Option<EdgeRecord> {
    if cells.len() != 9 {
        return None;
    }
    let plain = |i: usize| tsv::unescape(cells[i]).into_owned();
    Some(EdgeRecord {
        id: plain(0),
        node1: plain(1),
        relation: plain(2),
        node2: plain(3),
        node1_label: decode_opt(cells[4])?,
        node2_label: decode_opt(cells[5])?,
        relation_label: decode_opt(cells[6])?,
        source: decode_opt(cells[7])?,
        sentence: decode_opt(cells[8])?,
    })
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct KeyedEdge {
    key: Vec<Option<String>>,
    seq: u64,
    edge: EdgeRecord,
}

impl SpillRecord for KeyedEdge {
    fn encode(&self, out: &mut String) {
        out.push_str(&self.key.len().to_string());
        for k in &self.key {
            out.push('\t');
            encode_opt(out, k.as_deref());
        }
        out.push('\t');
        out.push_str(&self.seq.to_string());
        out.push('\t');
        encode_edge(out, &self.edge);
    }

    fn decode(line: &str) -> Option<Self> {
        let cells: Vec<&str> = line.split('\t').collect();
        let n: usize = cells.first()?.parse().ok()?;
        if cells.len() != n + 11 {
            return None;
        }
        let key = cells[1..=n].iter().map(|c| decode_opt(c)).collect::<Option<Vec<_>>>()?;
        let seq = cells[n + 1].parse().ok()?;
        let edge = decode_edge(&cells[n + 2..])?;
        Some(KeyedEdge { key, seq, edge })
    }
}

/// Keeps the first record of every distinct key tuple and yields the survivors
/// sorted by key. Spills to disk past `config.chunk_size` records.
pub fn compact<I>(edges: I, key: &[Column], config: SortConfig) -> Result<Compacted>
where
    I: IntoIterator<Item = Result<EdgeRecord>>,
{
    if key.is_empty() {
        return Err(Error::Config("compact needs at least one key column".into()));
    }
    let mut sorter = ExternalSorter::new(config);
    for (seq, edge) in edges.into_iter().enumerate() {
        let edge = edge?;
        let key = key.iter().map(|&c| edge.column(c).map(str::to_string)).collect();
        sorter.push(KeyedEdge {
            key,
            seq: seq as u64,
            edge,
        })?;
    }
    Ok(Compacted {
        sorted: sorter.finish()?,
        last_key: None,
    })
}

pub struct Compacted {
    sorted: Sorted<KeyedEdge>,
    last_key: Option<Vec<Option<String>>>,
}

impl Iterator for Compacted {
    type Item = Result<EdgeRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let item = match self.sorted.next()? {
                Ok(item) => item,
                Err(e) => return Some(Err(e)),
            };
            if self.last_key.as_ref() == Some(&item.key) {
                continue;
            }
            self.last_key = Some(item.key);
            return Some(Ok(item.edge));
        }
    }
}
