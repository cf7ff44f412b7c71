//! Commonness of labels, approximated by corpus usage frequencies of words and
//! phrases.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tabular::{open_source, primary_label, EdgeRecord};
use crate::tsv;

pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// How a multi-word label is scored when the table has no entry for the
/// whole phrase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Combiner {
    /// The phrase is as common as its rarest word.
    #[default]
    MinToken,
    Product,
    /// Only exact table entries count.
    LookupOnly,
}

impl Combiner {
    pub fn as_str(self) -> &'static str {
        match self {
            Combiner::MinToken => "min",
            Combiner::Product => "product",
            Combiner::LookupOnly => "lookup",
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Combiner::MinToken),
            "product" => Ok(Combiner::Product),
            "lookup" => Ok(Combiner::LookupOnly),
            other => Err(Error::Config(format!(
                "unknown combiner `{other}` (expected min, product or lookup)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonnessThreshold(f64);

impl CommonnessThreshold {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(CommonnessThreshold(value))
        } else {
            Err(Error::Config(format!("threshold must be positive, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for CommonnessThreshold {
    fn default() -> Self {
        CommonnessThreshold(DEFAULT_THRESHOLD)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Comparison {
    /// frequency >= threshold
    #[default]
    Inclusive,
    /// frequency > threshold
    StrictAbove,
}

/// Lowercase term to usage frequency in (0, 1]. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct FrequencyTable {
    terms: HashMap<String, f64>,
    combiner: Combiner,
    duplicates: u64,
    digest: Option<String>,
}

fn normalize(term: &str) -> String {
    term.trim().to_lowercase()
}

fn check_frequency(value: f64) -> std::result::Result<f64, String> {
    if !value.is_finite() {
        Err(format!("frequency `{value}` is not a finite number"))
    } else if value <= 0.0 || value > 1.0 {
        Err(format!("frequency {value} outside (0, 1]"))
    } else {
        Ok(value)
    }
}

impl FrequencyTable {
    /// Builds a table from in-memory terms; duplicates keep the maximum.
    pub fn from_terms<S: AsRef<str>>(
        terms: impl IntoIterator<Item = (S, f64)>,
        combiner: Combiner,
    ) -> Result<Self> {
        let mut table = FrequencyTable {
            combiner,
            ..Default::default()
        };
        for (term, freq) in terms {
            let freq = check_frequency(freq).map_err(Error::Config)?;
            table.insert(normalize(term.as_ref()), freq);
        }
        Ok(table)
    }

    fn insert(&mut self, term: String, freq: f64) {
        match self.terms.get_mut(&term) {
            Some(existing) => {
                self.duplicates += 1;
                if freq > *existing {
                    *existing = freq;
                }
            }
            None => {
                self.terms.insert(term, freq);
            }
        }
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    /// `sha256:<hex>` of the source file, when loaded from one.
    pub fn digest(&self) -> Option<&str> {
        self.digest.as_deref()
    }

    pub fn lookup(&self, term: &str) -> Option<f64> {
        self.terms.get(&normalize(term)).copied()
    }

    /// Frequency estimate for a word or phrase; 0 when unknown.
    pub fn phrase_frequency(&self, label: &str) -> f64 {
        let phrase = normalize(label);
        if let Some(&f) = self.terms.get(&phrase) {
            return f;
        }
        let mut tokens = phrase.split_ascii_whitespace().peekable();
        if self.combiner == Combiner::LookupOnly || tokens.peek().is_none() {
            return 0.0;
        }
        let mut acc: Option<f64> = None;
        for token in tokens {
            let Some(&f) = self.terms.get(token) else {
                return 0.0;
            };
            acc = Some(match (acc, self.combiner) {
                (None, _) => f,
                (Some(a), Combiner::Product) => a * f,
                (Some(a), _) => a.min(f),
            });
        }
        acc.unwrap_or(0.0)
    }
}

/// Loads a `term<TAB>frequency` file. An initial `term\tfrequency` header is
/// skipped.
pub fn load_frequency_table(path: impl AsRef<Path>, combiner: Combiner) -> Result<FrequencyTable> {
    let path = path.as_ref();
    let mut reader = open_source(path)?;
    let mut table = FrequencyTable {
        combiner,
        ..Default::default()
    };
    let mut line = String::new();
    let mut line_no = 0u64;
    let fail = |line: u64, message: String| Error::FrequencyTable {
        path: path.to_path_buf(),
        line,
        message,
    };
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            break;
        }
        line_no += 1;
        let row = tsv::trim_newline(&line);
        if row.trim().is_empty() || (line_no == 1 && row.trim() == "term\tfrequency") {
            continue;
        }
        let Some((term, freq)) = row.split_once('\t') else {
            return Err(fail(line_no, "expected `term<TAB>frequency`".into()));
        };
        if freq.contains('\t') {
            return Err(fail(line_no, "expected exactly two columns".into()));
        }
        let value: f64 = freq
            .trim()
            .parse()
            .map_err(|_| fail(line_no, format!("frequency `{}` is not a number", freq.trim())))?;
        let value = check_frequency(value).map_err(|m| fail(line_no, m))?;
        let term = normalize(&tsv::unescape(term));
        if term.is_empty() {
            return Err(fail(line_no, "empty term".into()));
        }
        table.insert(term, value);
    }
    table.digest = Some(reader.get_ref().digest());
    Ok(table)
}

/// Per-edge commonness predicate.
#[derive(Debug, Clone, Copy)]
pub struct CommonnessRule<'a> {
    pub table: &'a FrequencyTable,
    pub threshold: CommonnessThreshold,
    pub comparison: Comparison,
}

impl<'a> CommonnessRule<'a> {
    pub fn new(table: &'a FrequencyTable, threshold: CommonnessThreshold) -> Self {
        CommonnessRule {
            table,
            threshold,
            comparison: Comparison::Inclusive,
        }
    }

    pub fn is_common(&self, label: Option<&str>) -> bool {
        let Some(label) = label else {
            return false;
        };
        let f = self.table.phrase_frequency(primary_label(label));
        match self.comparison {
            Comparison::Inclusive => f >= self.threshold.value(),
            Comparison::StrictAbove => f > self.threshold.value(),
        }
    }

    pub fn is_common_edge(&self, edge: &EdgeRecord) -> bool {
        self.is_common(edge.node1_label.as_deref()) && self.is_common(edge.node2_label.as_deref())
    }
}

pub struct CommonFilter<'a, I> {
    inner: I,
    rule: CommonnessRule<'a>,
    removed: u64,
}

pub fn filter_common_edges<'a, I>(edges: I, rule: CommonnessRule<'a>) -> CommonFilter<'a, I::IntoIter>
where
    I: IntoIterator<Item = EdgeRecord>,
{
    CommonFilter {
        inner: edges.into_iter(),
        rule,
        removed: 0,
    }
}

impl<I> CommonFilter<'_, I> {
    pub fn removed(&self) -> u64 {
        self.removed
    }
}

impl<I: Iterator<Item = EdgeRecord>> Iterator for CommonFilter<'_, I> {
    type Item = EdgeRecord;

    fn next(&mut self) -> Option<EdgeRecord> {
        for edge in self.inner.by_ref() {
            if self.rule.is_common_edge(&edge) {
                return Some(edge);
            }
            self.removed += 1;
        }
        None
    }
}
