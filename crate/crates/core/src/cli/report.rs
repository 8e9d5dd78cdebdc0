//! Report plumbing. The structured format is line-delimited: a version
//! header, then one record per line as `kind key=value key=value ...`.
//! Values containing spaces are double-quoted. A single `meta
//! timestamp=...` line is the only nondeterministic output; consumers
//! comparing runs byte-for-byte are expected to strip it.

use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Record {
        Record { kind: kind.to_string(), fields: Vec::new() }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> Record {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    fn render(&self) -> String {
        let mut out = self.kind.clone();
        for (k, v) in &self.fields {
            if v.contains(' ') || v.contains('"') || v.is_empty() {
                let escaped = v.replace('\\', "\\\\").replace('"', "\\\"");
                let _ = write!(out, " {k}=\"{escaped}\"");
            } else {
                let _ = write!(out, " {k}={v}");
            }
        }
        out
    }
}

/// Accumulates both representations of one run; `failed` drives exit code 1.
#[derive(Debug, Default)]
pub struct Report {
    pub records: Vec<Record>,
    pub table: String,
    pub failed: bool,
}

pub const STRUCTURED_HEADER: &str = "#tate v1";

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn record(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn table_line(&mut self, line: impl AsRef<str>) {
        self.table.push_str(line.as_ref());
        self.table.push('\n');
    }

    pub fn table_rows(&mut self, header: &[&str], rows: &[Vec<String>]) {
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in rows {
            for (i, cell) in row.iter().enumerate() {
                if i < widths.len() {
                    widths[i] = widths[i].max(cell.len());
                }
            }
        }
        let fmt_row = |cells: &[String]| -> String {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{:<width$}", c, width = widths.get(i).copied().unwrap_or(0)))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let head: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        self.table_line(fmt_row(&head));
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        self.table_line(fmt_row(&rule));
        for row in rows {
            self.table_line(fmt_row(row));
        }
    }

    pub fn mark_failed(&mut self) {
        self.failed = true;
    }

    pub fn render_structured(&self) -> String {
        let mut out = String::from(STRUCTURED_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.render());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_render_deterministically() {
        let r = Record::new("check")
            .field("name", "chain-map")
            .field("pass", true)
            .field("note", "has spaces");
        assert_eq!(r.render(), "check name=chain-map pass=true note=\"has spaces\"");
    }

    #[test]
    fn tables_align() {
        let mut rep = Report::new();
        rep.table_rows(
            &["name", "deg"],
            &[
                vec!["y1".into(), "1".into()],
                vec!["longer".into(), "12".into()],
            ],
        );
        let lines: Vec<&str> = rep.table.lines().collect();
        assert_eq!(lines[0], "name    deg");
        assert_eq!(lines[2], "y1      1");
        assert_eq!(lines[3], "longer  12");
    }
}
