//! Line-oriented helpers shared by the plain-text file formats.
//!
//! All formats are UTF-8, comma-separated, one record per line. Blank lines
//! and `#` comments are ignored. Multi-table files split into sections with a
//! line of the form `NAME:`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Row<'a> {
    pub line: usize,
    pub text: &'a str,
}

impl<'a> Row<'a> {
    pub fn fields(&self) -> Vec<&'a str> {
        self.text.split(',').map(str::trim).collect()
    }

    /// Fields with an exact arity check.
    pub fn expect(&self, n: usize) -> Result<Vec<&'a str>> {
        let fields = self.fields();
        if fields.len() != n {
            return Err(Error::Parse {
                line: Some(self.line),
                msg: format!("expected {n} fields, found {}", fields.len()),
            });
        }
        Ok(fields)
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: Some(self.line), msg: msg.into() }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Section<'a> {
    pub name: Option<String>,
    pub rows: Vec<Row<'a>>,
}

impl<'a> Section<'a> {
    /// Rows with a leading header row (matching `header`, case-insensitive,
    /// whitespace-insensitive) removed.
    pub fn body(&self, header: &str) -> &[Row<'a>] {
        match self.rows.first() {
            Some(first) if same_header(first.text, header) => &self.rows[1..],
            _ => &self.rows,
        }
    }
}

fn same_header(line: &str, header: &str) -> bool {
    let norm = |s: &str| -> String { s.chars().filter(|c| !c.is_whitespace()).flat_map(char::to_lowercase).collect() };
    norm(line) == norm(header)
}

fn content_lines(src: &str) -> impl Iterator<Item = Row<'_>> {
    src.lines().enumerate().filter_map(|(i, raw)| {
        let text = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        (!text.is_empty()).then_some(Row { line: i + 1, text })
    })
}

fn section_name(text: &str) -> Option<String> {
    let name = text.strip_suffix(':')?.trim();
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_uppercase() || c == '_' || c.is_ascii_digit());
    ok.then(|| name.to_string())
}

/// Splits `src` into sections. Rows before the first section header land in
/// an unnamed leading section.
pub(crate) fn sections(src: &str) -> Vec<Section<'_>> {
    let mut out = vec![Section { name: None, rows: Vec::new() }];
    for row in content_lines(src) {
        if let Some(name) = section_name(row.text) {
            out.push(Section { name: Some(name), rows: Vec::new() });
        } else {
            out.last_mut().expect("non-empty").rows.push(row);
        }
    }
    out
}

/// Single-table file: every content line, no sections allowed.
pub(crate) fn table(src: &str) -> Result<Section<'_>> {
    let mut secs = sections(src);
    if secs.len() > 1 {
        let name = secs[1].name.clone().unwrap_or_default();
        return Err(Error::parse(format!("unexpected section `{name}:`")));
    }
    Ok(secs.remove(0))
}

pub(crate) fn parse_num<T: std::str::FromStr>(row: &Row<'_>, field: &str, what: &str) -> Result<T> {
    field.parse().map_err(|_| row.err(format!("invalid {what} `{field}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_sections_and_strips_comments() {
        let src = "pre\nES:\n# comment\nid,active_power\n1,2 # trailing\n\nROUTES:\n1,2,R1\n";
        let secs = sections(src);
        assert_eq!(secs.len(), 3);
        assert_eq!(secs[0].rows.len(), 1);
        assert_eq!(secs[1].name.as_deref(), Some("ES"));
        let body = secs[1].body("id, active_power");
        assert_eq!(body.len(), 1);
        assert_eq!(body[0].text, "1,2");
        assert_eq!(body[0].line, 5);
        assert_eq!(secs[2].rows[0].fields(), vec!["1", "2", "R1"]);
    }

    #[test]
    fn lowercase_colon_lines_are_rows() {
        let secs = sections("a:\nB:\n");
        assert_eq!(secs[0].rows.len(), 1);
        assert_eq!(secs[1].name.as_deref(), Some("B"));
    }
}
