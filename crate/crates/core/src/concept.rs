//! Concept detection from label capitalization: concepts carry lowercase
//! labels, named entities are capitalized.

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::tabular::{primary_label, EdgeRecord};

/// Label rule for concepts. The defaults are the rule used for extraction;
/// the other settings exist for sensitivity analysis. A label must always be
/// present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConceptRule {
    pub require_lowercase_first: bool,
    pub forbid_any_uppercase: bool,
    /// Accept a leading decimal digit in place of a lowercase letter.
    pub allow_leading_digit: bool,
}

impl Default for ConceptRule {
    fn default() -> Self {
        ConceptRule {
            require_lowercase_first: true,
            forbid_any_uppercase: true,
            allow_leading_digit: false,
        }
    }
}

fn is_lowercase_letter(c: char) -> bool {
    get_general_category(c) == GeneralCategory::LowercaseLetter
}

// Titlecase letters (e.g. U+01C5) count as capitals.
fn is_capital(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::UppercaseLetter | GeneralCategory::TitlecaseLetter
    )
}

pub fn is_concept_label(label: Option<&str>, rule: &ConceptRule) -> bool {
    let Some(label) = label else {
        return false;
    };
    let Some(first) = label.chars().next() else {
        return false;
    };
    if rule.require_lowercase_first {
        let digit_ok = rule.allow_leading_digit && get_general_category(first) == GeneralCategory::DecimalNumber;
        if !is_lowercase_letter(first) && !digit_ok {
            return false;
        }
    }
    !(rule.forbid_any_uppercase && label.chars().any(is_capital))
}

/// Both endpoint labels must pass. Multi-label nodes are judged by their
/// first label.
pub fn is_concept_edge(edge: &EdgeRecord, rule: &ConceptRule) -> bool {
    let judge = |label: &Option<String>| is_concept_label(label.as_deref().map(primary_label), rule);
    judge(&edge.node1_label) && judge(&edge.node2_label)
}

/// Streaming concept filter that counts what it drops.
pub struct ConceptFilter<I> {
    inner: I,
    rule: ConceptRule,
    removed: u64,
}

pub fn filter_concept_edges<I>(edges: I, rule: ConceptRule) -> ConceptFilter<I::IntoIter>
where
    I: IntoIterator<Item = EdgeRecord>,
{
    ConceptFilter {
        inner: edges.into_iter(),
        rule,
        removed: 0,
    }
}

impl<I> ConceptFilter<I> {
    pub fn removed(&self) -> u64 {
        self.removed
    }
}

impl<I: Iterator<Item = EdgeRecord>> Iterator for ConceptFilter<I> {
    type Item = EdgeRecord;

    fn next(&mut self) -> Option<EdgeRecord> {
        for edge in self.inner.by_ref() {
            if is_concept_edge(&edge, &self.rule) {
                return Some(edge);
            }
            self.removed += 1;
        }
        None
    }
}
