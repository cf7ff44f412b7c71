//! Field escaping and header handling shared by every tab-separated format.

use std::borrow::Cow;

/// Escapes backslash, tab, newline and carriage return so the value fits in
/// one cell.
pub fn escape(value: &str) -> Cow<'_, str> {
    if !value.contains(['\\', '\t', '\n', '\r']) {
        return Cow::Borrowed(value);
    }
    let mut out = String::with_capacity(value.len() + 4);
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    Cow::Owned(out)
}

/// Inverse of [`escape`]. Unknown escape sequences are kept verbatim.
pub fn unescape(cell: &str) -> Cow<'_, str> {
    if !cell.contains('\\') {
        return Cow::Borrowed(cell);
    }
    let mut out = String::with_capacity(cell.len());
    let mut chars = cell.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    Cow::Owned(out)
}

/// Strips the line terminator left by `read_line`.
pub(crate) fn trim_newline(line: &str) -> &str {
    let line = line.strip_suffix('\n').unwrap_or(line);
    line.strip_suffix('\r').unwrap_or(line)
}

/// Column names of a header line, in file order.
#[derive(Debug, Clone)]
pub struct Header {
    columns: Vec<String>,
}

impl Header {
    pub fn parse(line: &str) -> Self {
        let columns = trim_newline(line)
            .split('\t')
            .map(|c| c.trim().to_string())
            .collect();
        Header { columns }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }
}

/// Writes one row of already-unescaped values, escaping each cell.
pub(crate) fn push_row<'a>(out: &mut String, fields: impl IntoIterator<Item = &'a str>) {
    for (i, field) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(&escape(field));
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn escapes_control_characters() {
        assert_eq!(escape("a\tb\nc\\d"), "a\\tb\\nc\\\\d");
        assert!(matches!(escape("plain"), Cow::Borrowed(_)));
    }

    #[test]
    fn unknown_escapes_survive() {
        assert_eq!(unescape("a\\|b"), "a\\|b");
        assert_eq!(unescape("trailing\\"), "trailing\\");
    }

    #[test]
    fn header_lookup() {
        let h = Header::parse("node1\tlabel\tnode2\r\n");
        assert_eq!(h.len(), 3);
        assert_eq!(h.index_of("node2"), Some(2));
        assert_eq!(h.index_of("relation"), None);
    }

    proptest! {
        #[test]
        fn escape_round_trips(s in "\\PC*|[\\\\\t\n\r a-z]*") {
            let escaped = escape(&s);
            prop_assert!(!escaped.contains(['\t', '\n', '\r']));
            prop_assert_eq!(unescape(&escaped).into_owned(), s.clone());
        }
    }
}
