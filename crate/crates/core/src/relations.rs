//! Relation mapping onto the ConceptNet vocabulary, removal of domain-specific
//! knowledge, and consolidation into CSKG edges.
//!
//! Every Wikidata property of interest has exactly one [`MappingRule`]. A rule
//! either renames the relation (optionally swapping the endpoints, for
//! properties stated in the direction opposite to ConceptNet), or drops the
//! edge. Dropping with [`Action::DropBlacklist`] additionally marks both
//! endpoints as domain-specific, and any other edge touching them is removed
//! by [`apply_blacklist`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::extsort::{ExternalSorter, SortConfig, Sorted, SpillRecord};
use crate::tabular::EdgeRecord;
use crate::tsv;

/// The mapping transcribed from the published Wikidata to ConceptNet table.
pub const BUILTIN_MAPPING_TSV: &str = include_str!("../data/conceptnet_mapping.tsv");
pub const BUILTIN_PROVENANCE: &str = "builtin";

/// Relations whose direction carries no meaning.
pub const SYMMETRIC_RELATIONS: [&str; 4] = ["/r/Antonym", "/r/Synonym", "/r/DistinctFrom", "/r/SimilarTo"];

/// ConceptNet 5.7 relations accepted as targets of custom inverse rules.
pub const CONCEPTNET_RELATIONS: [&str; 34] = [
    "/r/RelatedTo",
    "/r/FormOf",
    "/r/IsA",
    "/r/PartOf",
    "/r/HasA",
    "/r/UsedFor",
    "/r/CapableOf",
    "/r/AtLocation",
    "/r/Causes",
    "/r/HasSubevent",
    "/r/HasFirstSubevent",
    "/r/HasLastSubevent",
    "/r/HasPrerequisite",
    "/r/HasProperty",
    "/r/MotivatedByGoal",
    "/r/ObstructedBy",
    "/r/Desires",
    "/r/CreatedBy",
    "/r/Synonym",
    "/r/Antonym",
    "/r/DistinctFrom",
    "/r/DerivedFrom",
    "/r/SymbolOf",
    "/r/DefinedAs",
    "/r/MannerOf",
    "/r/LocatedNear",
    "/r/HasContext",
    "/r/SimilarTo",
    "/r/EtymologicallyRelatedTo",
    "/r/EtymologicallyDerivedFrom",
    "/r/CausesDesire",
    "/r/MadeOf",
    "/r/ReceivesAction",
    "/r/InstanceOf",
];

pub const CSKG_HEADER: &str =
    "id\tnode1\trelation\tnode2\tnode1;label\tnode2;label\trelation;label\trelation;dimension\tsource\tsentence";
pub const PROVENANCE_HEADER: &str = "final_edge_id\toriginal_property\toriginal_node1\toriginal_node2";
pub const SOURCE_TAG: &str = "WD";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    MapForward(String),
    MapInverse(String),
    DropBlacklist,
    DropSilent,
}

impl Action {
    pub fn target(&self) -> Option<&str> {
        match self {
            Action::MapForward(t) | Action::MapInverse(t) => Some(t),
            _ => None,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Action::MapForward(_) => "forward",
            Action::MapInverse(_) => "inverse",
            Action::DropBlacklist => "drop_blacklist",
            Action::DropSilent => "drop",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingRule {
    pub property: String,
    pub action: Action,
    /// Conventional label of the target relation; empty for drop actions.
    pub target_label: String,
}

#[derive(Debug, Clone)]
pub struct MappingTable {
    rules: Vec<MappingRule>,
    index: HashMap<String, usize>,
    provenance: String,
}

fn is_property_id(s: &str) -> bool {
    s.strip_prefix('P')
        .is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && !digits.starts_with('0'))
}

fn is_relation_string(s: &str) -> bool {
    s.strip_prefix("/r/").is_some_and(|name| {
        let mut chars = name.chars();
        chars.next().is_some_and(|c| c.is_ascii_uppercase()) && chars.all(|c| c.is_ascii_alphanumeric())
    })
}

impl MappingTable {
    pub fn builtin() -> Self {
        MappingTable::parse(BUILTIN_MAPPING_TSV, BUILTIN_PROVENANCE).expect("builtin mapping is well-formed")
    }

    /// Parses `property<TAB>action<TAB>target<TAB>target_label` rows. Blank
    /// lines, `#` comments and a leading header are ignored.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut table = MappingTable {
            rules: Vec::new(),
            index: HashMap::new(),
            provenance: origin.to_string(),
        };
        let fail = |line: usize, message: String| Error::Mapping {
            origin: origin.to_string(),
            line: line as u64,
            message,
        };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let row = raw.trim_end_matches('\r');
            if row.trim().is_empty() || row.starts_with('#') || row.starts_with("property\taction") {
                continue;
            }
            let cells: Vec<&str> = row.split('\t').map(str::trim).collect();
            if cells.len() < 2 || cells.len() > 4 {
                return Err(fail(line_no, format!("expected 4 columns, found {}", cells.len())));
            }
            let cell = |i: usize| cells.get(i).copied().unwrap_or("");
            let property = cell(0);
            if !is_property_id(property) {
                return Err(fail(line_no, format!("`{property}` is not a property id")));
            }
            let (target, label) = (cell(2), cell(3));
            let action = match cell(1) {
                "forward" => Action::MapForward(target.to_string()),
                "inverse" => Action::MapInverse(target.to_string()),
                "drop_blacklist" => Action::DropBlacklist,
                "drop" => Action::DropSilent,
                other => return Err(fail(line_no, format!("unknown action `{other}`"))),
            };
            match action.target() {
                Some(t) if !is_relation_string(t) => {
                    return Err(fail(line_no, format!("malformed relation `{t}`")));
                }
                Some(_) if label.is_empty() => {
                    return Err(fail(line_no, "mapped rule needs a target label".into()));
                }
                None if !target.is_empty() => {
                    return Err(fail(line_no, format!("drop action must not name a target (`{target}`)")));
                }
                _ => {}
            }
            if table.index.contains_key(property) {
                return Err(fail(line_no, format!("duplicate rule for {property}")));
            }
            table.index.insert(property.to_string(), table.rules.len());
            table.rules.push(MappingRule {
                property: property.to_string(),
                action,
                target_label: label.to_string(),
            });
        }
        let forward: HashSet<&str> = table
            .rules
            .iter()
            .filter_map(|r| match &r.action {
                Action::MapForward(t) => Some(t.as_str()),
                _ => None,
            })
            .collect();
        for rule in &table.rules {
            if let Action::MapInverse(t) = &rule.action {
                if !forward.contains(t.as_str()) && !CONCEPTNET_RELATIONS.contains(&t.as_str()) {
                    let line = text.lines().position(|l| l.starts_with(&rule.property)).unwrap_or(0) + 1;
                    return Err(fail(line, format!("inverse target {t} is not a known ConceptNet relation")));
                }
            }
        }
        Ok(table)
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn rules(&self) -> &[MappingRule] {
        &self.rules
    }

    pub fn rule(&self, property: &str) -> Option<&MappingRule> {
        self.index.get(property).map(|&i| &self.rules[i])
    }

    pub fn mapped_properties(&self) -> usize {
        self.rules.iter().filter(|r| r.action.target().is_some()).count()
    }

    pub fn targets(&self) -> BTreeSet<&str> {
        self.rules.iter().filter_map(|r| r.action.target()).collect()
    }

    pub fn blacklist_properties(&self) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| r.action == Action::DropBlacklist)
            .map(|r| r.property.as_str())
            .collect()
    }

    pub fn is_blacklist_relation(&self, property: &str) -> bool {
        self.rule(property).is_some_and(|r| r.action == Action::DropBlacklist)
    }
}

/// Loads a mapping file, or the builtin table when no path is given.
pub fn load_mapping(path: Option<&Path>) -> Result<MappingTable> {
    match path {
        None => Ok(MappingTable::builtin()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            MappingTable::parse(&text, &path.display().to_string())
        }
    }
}

/// Endpoints of every edge stated with a domain-specific relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlacklistSet {
    nodes: HashSet<String>,
}

impl BlacklistSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the endpoints of `edge` if its relation is a blacklist relation.
    pub fn observe(&mut self, edge: &EdgeRecord, table: &MappingTable) {
        if table.is_blacklist_relation(&edge.relation) {
            self.nodes.insert(edge.node1.clone());
            self.nodes.insert(edge.node2.clone());
        }
    }

    pub fn contains(&self, node: &str) -> bool {
        self.nodes.contains(node)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn touches(&self, edge: &MappedEdge) -> bool {
        self.contains(&edge.node1) || self.contains(&edge.node2)
    }
}

impl<S: Into<String>> FromIterator<S> for BlacklistSet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        BlacklistSet {
            nodes: iter.into_iter().map(Into::into).collect(),
        }
    }
}

pub fn build_blacklist<'a>(edges: impl IntoIterator<Item = &'a EdgeRecord>, table: &MappingTable) -> BlacklistSet {
    let mut set = BlacklistSet::new();
    for edge in edges {
        set.observe(edge, table);
    }
    set
}

/// The source statement an output edge was derived from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Statement {
    pub property: String,
    pub node1: String,
    pub node2: String,
}

/// An edge whose relation has been renamed into ConceptNet and whose direction
/// has been normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedEdge {
    pub node1: String,
    pub relation: String,
    pub node2: String,
    pub node1_label: Option<String>,
    pub node2_label: Option<String>,
    pub relation_label: String,
    pub origin: Statement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    UnmappedRelation,
    BlacklistRelation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapOutcome {
    Mapped(MappedEdge),
    Dropped(DropReason),
}

pub fn map_edge(edge: &EdgeRecord, table: &MappingTable) -> MapOutcome {
    let Some(rule) = table.rule(&edge.relation) else {
        return MapOutcome::Dropped(DropReason::UnmappedRelation);
    };
    let origin = Statement {
        property: edge.relation.clone(),
        node1: edge.node1.clone(),
        node2: edge.node2.clone(),
    };
    let (target, inverse) = match &rule.action {
        Action::MapForward(t) => (t, false),
        Action::MapInverse(t) => (t, true),
        Action::DropBlacklist => return MapOutcome::Dropped(DropReason::BlacklistRelation),
        Action::DropSilent => return MapOutcome::Dropped(DropReason::UnmappedRelation),
    };
    let mut mapped = MappedEdge {
        node1: edge.node1.clone(),
        relation: target.clone(),
        node2: edge.node2.clone(),
        node1_label: edge.node1_label.clone(),
        node2_label: edge.node2_label.clone(),
        relation_label: rule.target_label.clone(),
        origin,
    };
    if inverse {
        std::mem::swap(&mut mapped.node1, &mut mapped.node2);
        std::mem::swap(&mut mapped.node1_label, &mut mapped.node2_label);
    }
    MapOutcome::Mapped(mapped)
}

/// Streaming blacklist filter that counts what it drops.
pub struct BlacklistFilter<'a, I> {
    inner: I,
    blacklist: &'a BlacklistSet,
    removed: u64,
}

pub fn apply_blacklist<I>(edges: I, blacklist: &BlacklistSet) -> BlacklistFilter<'_, I::IntoIter>
where
    I: IntoIterator<Item = MappedEdge>,
{
    BlacklistFilter {
        inner: edges.into_iter(),
        blacklist,
        removed: 0,
    }
}

impl<I> BlacklistFilter<'_, I> {
    pub fn removed(&self) -> u64 {
        self.removed
    }
}

impl<I: Iterator<Item = MappedEdge>> Iterator for BlacklistFilter<'_, I> {
    type Item = MappedEdge;

    fn next(&mut self) -> Option<MappedEdge> {
        for edge in self.inner.by_ref() {
            if !self.blacklist.touches(&edge) {
                return Some(edge);
            }
            self.removed += 1;
        }
        None
    }
}

/// One row of the 10-column CSKG edge format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CskgEdge {
    pub id: String,
    pub node1: String,
    pub relation: String,
    pub node2: String,
    pub node1_label: String,
    pub node2_label: String,
    pub relation_label: String,
    pub relation_dimension: String,
    pub source: String,
    pub sentence: String,
}

impl CskgEdge {
    fn fields(&self) -> [&str; 10] {
        [
            &self.id,
            &self.node1,
            &self.relation,
            &self.node2,
            &self.node1_label,
            &self.node2_label,
            &self.relation_label,
            &self.relation_dimension,
            &self.source,
            &self.sentence,
        ]
    }
}

/// A consolidated edge with every statement merged into it, ordered by
/// property and then endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsolidatedEdge {
    pub edge: CskgEdge,
    pub statements: Vec<Statement>,
}

/// `<node1>-<relname>-<node2>`, relname being the lowercased local name.
pub fn base_edge_id(node1: &str, relation: &str, node2: &str) -> String {
    let local = relation.rsplit('/').next().unwrap_or(relation).to_lowercase();
    format!("{node1}-{local}-{node2}")
}

#[derive(Debug, Clone, Default)]
pub struct ConsolidateOptions {
    pub symmetric_canonicalization: bool,
    pub sort: SortConfig,
}

fn push_cell(out: &mut String, value: &str) {
    out.push_str(&tsv::escape(value));
    out.push('\t');
}

fn push_opt(out: &mut String, value: &Option<String>) {
    if let Some(v) = value {
        out.push('=');
        out.push_str(&tsv::escape(v));
    }
    out.push('\t');
}

fn take_opt(cell: &str) -> Option<Option<String>> {
    if cell.is_empty() {
        Some(None)
    } else {
        cell.strip_prefix('=').map(|v| Some(tsv::unescape(v).into_owned()))
    }
}

fn take(cell: &str) -> String {
    tsv::unescape(cell).into_owned()
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TripleEntry {
    node1: String,
    relation: String,
    node2: String,
    node1_label: Option<String>,
    node2_label: Option<String>,
    relation_label: String,
    origin: Statement,
    seq: u64,
}

impl SpillRecord for TripleEntry {
    fn encode(&self, out: &mut String) {
        push_cell(out, &self.node1);
        push_cell(out, &self.relation);
        push_cell(out, &self.node2);
        out.push_str(&self.seq.to_string());
        out.push('\t');
        push_opt(out, &self.node1_label);
        push_opt(out, &self.node2_label);
        push_cell(out, &self.relation_label);
        push_cell(out, &self.origin.property);
        push_cell(out, &self.origin.node1);
        out.push_str(&tsv::escape(&self.origin.node2));
    }

    fn decode(line: &str) -> Option<Self> {
        let c: Vec<&str> = line.split('\t').collect();
        if c.len() != 10 {
            return None;
        }
        Some(TripleEntry {
            node1: take(c[0]),
            relation: take(c[1]),
            node2: take(c[2]),
            seq: c[3].parse().ok()?,
            node1_label: take_opt(c[4])?,
            node2_label: take_opt(c[5])?,
            relation_label: take(c[6]),
            origin: Statement {
                property: take(c[7]),
                node1: take(c[8]),
                node2: take(c[9]),
            },
        })
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct GroupEntry {
    base_id: String,
    node1: String,
    relation: String,
    node2: String,
    node1_label: Option<String>,
    node2_label: Option<String>,
    relation_label: String,
    statements: Vec<Statement>,
}

impl SpillRecord for GroupEntry {
    fn encode(&self, out: &mut String) {
        push_cell(out, &self.base_id);
        push_cell(out, &self.node1);
        push_cell(out, &self.relation);
        push_cell(out, &self.node2);
        push_opt(out, &self.node1_label);
        push_opt(out, &self.node2_label);
        push_cell(out, &self.relation_label);
        out.push_str(&self.statements.len().to_string());
        for s in &self.statements {
            out.push('\t');
            push_cell(out, &s.property);
            push_cell(out, &s.node1);
            out.push_str(&tsv::escape(&s.node2));
        }
    }

    fn decode(line: &str) -> Option<Self> {
        let c: Vec<&str> = line.split('\t').collect();
        if c.len() < 8 {
            return None;
        }
        let n: usize = c[7].parse().ok()?;
        if c.len() != 8 + 3 * n {
            return None;
        }
        let statements = c[8..]
            .chunks(3)
            .map(|s| Statement {
                property: take(s[0]),
                node1: take(s[1]),
                node2: take(s[2]),
            })
            .collect();
        Some(GroupEntry {
            base_id: take(c[0]),
            node1: take(c[1]),
            relation: take(c[2]),
            node2: take(c[3]),
            node1_label: take_opt(c[4])?,
            node2_label: take_opt(c[5])?,
            relation_label: take(c[6]),
            statements,
        })
    }
}

/// Deduplicates mapped edges on their triple and assigns CSKG ids.
///
/// Grouping and id ordering both go through the external sorter, so this is
/// the pipeline's only global synchronization point.
pub struct Consolidator {
    options: ConsolidateOptions,
    sorter: ExternalSorter<TripleEntry>,
    seq: u64,
}

impl Consolidator {
    pub fn new(options: ConsolidateOptions) -> Self {
        Consolidator {
            sorter: ExternalSorter::new(options.sort.clone()),
            options,
            seq: 0,
        }
    }

    pub fn push(&mut self, mut edge: MappedEdge) -> Result<()> {
        if self.options.symmetric_canonicalization
            && SYMMETRIC_RELATIONS.contains(&edge.relation.as_str())
            && edge.node1 > edge.node2
        {
            std::mem::swap(&mut edge.node1, &mut edge.node2);
            std::mem::swap(&mut edge.node1_label, &mut edge.node2_label);
        }
        let entry = TripleEntry {
            node1: edge.node1,
            relation: edge.relation,
            node2: edge.node2,
            seq: self.seq,
            node1_label: edge.node1_label,
            node2_label: edge.node2_label,
            relation_label: edge.relation_label,
            origin: edge.origin,
        };
        self.seq += 1;
        self.sorter.push(entry)
    }

    pub fn finish(self) -> Result<Consolidated> {
        let mut groups = ExternalSorter::new(self.options.sort.clone());
        let mut current: Option<GroupEntry> = None;
        for entry in self.sorter.finish()? {
            let entry = entry?;
            if let Some(group) = current.as_mut() {
                if group.node1 == entry.node1 && group.relation == entry.relation && group.node2 == entry.node2 {
                    group.statements.push(entry.origin);
                    continue;
                }
            }
            if let Some(done) = current.take() {
                groups.push(done)?;
            }
            current = Some(GroupEntry {
                base_id: base_edge_id(&entry.node1, &entry.relation, &entry.node2),
                node1: entry.node1,
                relation: entry.relation,
                node2: entry.node2,
                node1_label: entry.node1_label,
                node2_label: entry.node2_label,
                relation_label: entry.relation_label,
                statements: vec![entry.origin],
            });
        }
        if let Some(done) = current {
            groups.push(done)?;
        }
        Ok(Consolidated {
            groups: groups.finish()?,
            last_base: None,
            collisions: 0,
        })
    }
}

pub fn consolidate<I>(edges: I, options: ConsolidateOptions) -> Result<Consolidated>
where
    I: IntoIterator<Item = MappedEdge>,
{
    let mut consolidator = Consolidator::new(options);
    for edge in edges {
        consolidator.push(edge)?;
    }
    consolidator.finish()
}

/// Consolidated edges in id order.
pub struct Consolidated {
    groups: Sorted<GroupEntry>,
    last_base: Option<String>,
    collisions: u32,
}

impl Iterator for Consolidated {
    type Item = Result<ConsolidatedEdge>;

    fn next(&mut self) -> Option<Self::Item> {
        let group = match self.groups.next()? {
            Ok(g) => g,
            Err(e) => return Some(Err(e)),
        };
        let id = if self.last_base.as_deref() == Some(group.base_id.as_str()) {
            self.collisions += 1;
            if self.collisions > 9999 {
                return Some(Err(Error::IdSpaceExhausted(group.base_id)));
            }
            format!("{}-{:04}", group.base_id, self.collisions)
        } else {
            self.collisions = 0;
            self.last_base = Some(group.base_id.clone());
            group.base_id.clone()
        };
        Some(Ok(ConsolidatedEdge {
            edge: CskgEdge {
                id,
                node1: group.node1,
                relation: group.relation,
                node2: group.node2,
                node1_label: group.node1_label.unwrap_or_default(),
                node2_label: group.node2_label.unwrap_or_default(),
                relation_label: group.relation_label,
                relation_dimension: String::new(),
                source: SOURCE_TAG.to_string(),
                sentence: String::new(),
            },
            statements: group.statements,
        }))
    }
}

/// Writes CSKG edges and, alongside, the provenance of each one.
pub struct CskgWriter<W: Write, P: Write> {
    edges: W,
    provenance: P,
    buf: String,
}

impl<W: Write, P: Write> CskgWriter<W, P> {
    pub fn new(mut edges: W, mut provenance: P) -> io::Result<Self> {
        writeln!(edges, "{CSKG_HEADER}")?;
        writeln!(provenance, "{PROVENANCE_HEADER}")?;
        Ok(CskgWriter {
            edges,
            provenance,
            buf: String::new(),
        })
    }

    pub fn write(&mut self, item: &ConsolidatedEdge) -> io::Result<()> {
        self.buf.clear();
        tsv::push_row(&mut self.buf, item.edge.fields());
        self.edges.write_all(self.buf.as_bytes())?;
        for s in &item.statements {
            self.buf.clear();
            tsv::push_row(&mut self.buf, [item.edge.id.as_str(), &s.property, &s.node1, &s.node2]);
            self.provenance.write_all(self.buf.as_bytes())?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<(W, P)> {
        self.edges.flush()?;
        self.provenance.flush()?;
        Ok((self.edges, self.provenance))
    }
}
