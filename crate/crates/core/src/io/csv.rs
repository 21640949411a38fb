//! CSV artifacts with a `#`-prefixed metadata header.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A table of numeric columns. Column labels carry their unit, e.g.
/// `"f [Hz]"`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        self.render(",")
    }

    /// Whitespace-separated columns for gnuplot.
    pub fn to_plot_data(&self) -> String {
        self.render(" ")
    }

    fn render(&self, sep: &str) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        if sep == "," {
            let _ = writeln!(s, "{}", self.columns.join(","));
        } else {
            let quoted: Vec<String> = self.columns.iter().map(|c| format!("\"{c}\"")).collect();
            let _ = writeln!(s, "# {}", quoted.join(" "));
        }
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(s, "{}", cells.join(sep));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut t = Table::default();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            if let Some(m) = line.strip_prefix("# ") {
                if let Some((k, v)) = m.split_once(": ") {
                    t.meta.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                t.columns = line.split(',').map(str::to_string).collect();
                header_seen = true;
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("'{c}' is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != t.columns.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("{} cells for {} columns", row.len(), t.columns.len()),
                });
            }
            t.rows.push(row);
        }
        Ok(t)
    }

    pub fn read(path: &Path) -> Result<Table> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Table::parse(&text)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}
