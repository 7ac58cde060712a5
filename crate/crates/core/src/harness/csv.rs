//! Deterministic CSV output.
//!
//! Layout contract: line 1 is a `#`-prefixed header carrying the version
//! string and the full invocation, line 2 the column names, then the data
//! rows.  Floats are printed with 17 significant digits so the file
//! round-trips the exact f64 values.

use std::io::Write;
use std::path::Path;

pub const VERSION_TAG: &str = concat!("fput-kdv-v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    F(f64),
    U(u64),
    I(i64),
    S(String),
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::F(x) => fmt_f64(*x),
            Field::U(x) => x.to_string(),
            Field::I(x) => x.to_string(),
            Field::S(s) => s.clone(),
        }
    }
}

pub fn render(invocation: &str, columns: &[&str], rows: &[Vec<Field>]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {VERSION_TAG} | {invocation}\n"));
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let line: Vec<String> = row.iter().map(Field::render).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write(
    path: &Path,
    invocation: &str,
    columns: &[&str],
    rows: &[Vec<Field>],
) -> std::io::Result<()> {
    let text = render(invocation, columns, rows);
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())
}
