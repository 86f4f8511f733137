//! CSV and manifest writing.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Value};

use crate::runner::{Cell, Outcome, Table};
use crate::scenario::Scenario;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Shortest `%g`-style rendering with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => fmt_num(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

pub fn csv_bytes(t: &Table) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&t.header).expect("in-memory write");
    for row in &t.rows {
        w.write_record(row.iter().map(cell)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn manifest(s: &Scenario, o: &Outcome, csv_name: &str, threads: usize, overrides: &[String], wall_time: f64) -> Value {
    json!({
        "mlz_version": env!("CARGO_PKG_VERSION"),
        "kind": s.job.kind(),
        "name": s.name,
        "csv": csv_name,
        "columns": o.table.header,
        "rows": o.table.rows.len(),
        "scenario": s.document,
        "config": s.config,
        "overrides": overrides,
        "env_default_tol": std::env::var("MLZ_DEFAULT_TOL").ok(),
        "threads": threads,
        "converged": o.converged(),
        "points": o.points,
        "summary": o.summary,
        "wall_time_s": wall_time,
    })
}

/// Write `<output>` and `<stem>.manifest.json` into `dir`; returns both paths.
pub fn write_all(dir: &Path, s: &Scenario, o: &Outcome, manifest: &Value) -> io::Result<(String, String)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(&s.output);
    fs::write(&csv_path, csv_bytes(&o.table))?;
    let stem = Path::new(&s.output).file_stem().map_or_else(|| s.name.clone(), |x| x.to_string_lossy().into_owned());
    let man_path = dir.join(format!("{stem}.manifest.json"));
    let mut text = serde_json::to_string_pretty(manifest).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(&man_path, text)?;
    Ok((csv_path.display().to_string(), man_path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 1e-7), "6.66666666667e-8");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_num(0.2 + 0.1), "0.3");
        assert_eq!(fmt_num(9.9999999999999), "10");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let t = Table {
            header: vec!["a".into(), "b".into()],
            rows: vec![vec![Cell::Int(1), Cell::Num(0.25)], vec![Cell::Text("x".into()), Cell::Num(1e-20)]],
        };
        assert_eq!(String::from_utf8(csv_bytes(&t)).unwrap(), "a,b\n1,0.25\nx,1e-20\n");
    }

    proptest! {
        #[test]
        fn twelve_digits_round_trip(x in -1e30f64..1e30) {
            let s = fmt_num(x);
            let back: f64 = s.parse().unwrap();
            prop_assert!((back - x).abs() <= 5e-12 * x.abs());
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect::<String>();
            prop_assert!(digits.trim_start_matches('0').len() <= SIGNIFICANT_DIGITS);
        }
    }
}
