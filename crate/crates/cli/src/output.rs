//! CSV and JSON emission. Reals are written with the fewest significant
//! digits (at most 17) that parse back to the same double.

use hermite_core::verify::{CheckReport, Expected};
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{Map, Value};
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Shortest round-trip digits (never more than 17); positional notation for
/// decimal exponents in `[-5, 16]`, scientific otherwise.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };
    if !(-5..=16).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}

/// serde_json formatter writing floats through [`fmt_real`].
struct RealFormatter;

impl Formatter for RealFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_real(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn write_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, RealFormatter);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    writeln!(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Real(x) => fmt_real(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            // Non-finite reals become null.
            Cell::Real(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

/// Rows under named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, out: &mut dyn Write, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::to_csv))?;
                }
                w.flush()
            }
            Format::Json => {
                let records: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let map: Map<String, Value> =
                            self.columns.iter().cloned().zip(row.iter().map(Cell::to_json)).collect();
                        Value::Object(map)
                    })
                    .collect();
                write_json(out, &records)
            }
        }
    }
}

/// A single real: bare on one line for CSV, `{"value": x}` for JSON.
pub fn write_scalar(out: &mut dyn Write, x: f64, format: Format) -> io::Result<()> {
    match format {
        Format::Csv => writeln!(out, "{}", fmt_real(x)),
        Format::Json => {
            let mut map = Map::new();
            map.insert("value".into(), Cell::Real(x).to_json());
            write_json(out, &Value::Object(map))
        }
    }
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(";")
}

/// Reports as CSV rows or a JSON array. Runtimes are included only when
/// `timings` is set, so untimed output is byte-identical across runs.
pub fn write_reports(out: &mut dyn Write, reports: &[CheckReport], format: Format, timings: bool) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut columns = vec!["name", "pass", "computed", "expected", "tolerance"];
            if timings {
                columns.push("runtime");
            }
            columns.push("notes");
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&columns)?;
            for r in reports {
                let expected = match &r.expected {
                    Expected::Values(v) => joined(v),
                    Expected::Property(p) => p.clone(),
                };
                let mut row = vec![
                    r.name.clone(),
                    r.pass.to_string(),
                    joined(&r.computed),
                    expected,
                    fmt_real(r.tolerance),
                ];
                if timings {
                    row.push(fmt_real(r.runtime));
                }
                row.push(r.notes.join("; "));
                w.write_record(&row)?;
            }
            w.flush()
        }
        Format::Json => {
            let mut values = Vec::with_capacity(reports.len());
            for r in reports {
                let mut v = serde_json::to_value(r).map_err(io::Error::other)?;
                if !timings {
                    if let Value::Object(map) = &mut v {
                        map.remove("runtime");
                    }
                }
                values.push(v);
            }
            write_json(out, &values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_with_short_forms() {
        assert_eq!(fmt_real(0.25), "0.25");
        assert_eq!(fmt_real(-3.0), "-3");
        assert_eq!(fmt_real(1e-7), "1e-7");
        assert_eq!(fmt_real(120.5), "120.5");
        assert_eq!(fmt_real(1e20), "1e20");
        assert_eq!(fmt_real(0.000123), "0.000123");
        for x in [std::f64::consts::PI, 0.1 + 0.2, 2.0f64.sqrt() * 1e-9, -1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_real(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(fmt_real(1e-6), "1e-6");
        assert_eq!(fmt_real(1e-5), "0.00001");
    }

    #[test]
    fn csv_quotes_fields() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a, b".into(), 0.5.into()]);
        let mut buf = Vec::new();
        t.write(&mut buf, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,value\n\"a, b\",0.5\n");
    }

    #[test]
    fn json_uses_the_same_reals() {
        let mut t = Table::new(&["x"]);
        t.push(vec![(0.1 + 0.2).into()]);
        t.push(vec![f64::NAN.into()]);
        let mut buf = Vec::new();
        t.write(&mut buf, Format::Json).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "[{\"x\":0.30000000000000004},{\"x\":null}]\n");
    }

    #[test]
    fn untimed_reports_omit_runtime() {
        let mut r = CheckReport::numeric("c", vec![1.0], vec![1.0], 0.0);
        r.runtime = 1.5;
        let mut buf = Vec::new();
        write_reports(&mut buf, &[r.clone()], Format::Json, false).unwrap();
        assert!(!String::from_utf8(buf).unwrap().contains("runtime"));
        let mut buf = Vec::new();
        write_reports(&mut buf, &[r], Format::Csv, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("name,pass,computed,expected,tolerance,runtime,notes"));
    }
}
