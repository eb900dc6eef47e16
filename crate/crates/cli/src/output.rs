//! Rendering of command results as CSV tables or JSON documents.

use serde_json::Value;
use std::fmt::Write as _;

/// Integers print without a fraction, moderate magnitudes in shortest
/// round-trip decimal, everything else in shortest round-trip scientific form.
pub fn format_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == x.trunc() && x.abs() < 1e16 {
        if x == 0.0 {
            return "0".into();
        }
        return format!("{}", x as i64);
    }
    let a = x.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// key,value rows for single-record results.
    pub fn from_pairs(pairs: Vec<(&str, Cell)>) -> Self {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in pairs {
            t.push(vec![Cell::Text(k.into()), v]);
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.header.iter().map(|h| quote(h)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_num(*x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => quote(s),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// A result with both renderings available.
pub struct Rendered {
    pub json: Value,
    pub table: Table,
}

pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_num(1.0), "1");
        assert_eq!(format_num(-0.125), "-0.125");
        assert_eq!(format_num(0.1), "0.1");
        assert_eq!(format_num(1e-7), "1e-7");
        assert_eq!(format_num(2.5e20), "2.5e20");
        assert_eq!(format_num(-0.0), "0");
        for x in [std::f64::consts::PI, 1.0 / 3.0, 6.02e23, 1.234e-300, -9.87654321e-6] {
            assert_eq!(format_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Text("x,y".into()), Cell::Int(3)]);
        assert_eq!(t.to_csv(), "a,b\n\"x,y\",3\n");
    }
}
