//! Text formats of the campaign artifacts.
//!
//! Statistics CSV:
//!
//! ```text
//! # c1_seconds=63.089
//! model,h,delta,rho,cost_ratio,sigma
//! 1,0.0078125,0.25,1,1,0.006694
//! ```
//!
//! Subset ranking CSV: `rank,subset,V,Bmin_over_C1,bmin_rank` with subsets
//! written as `{1;3;9}`.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::mfmc::{ModelStat, ModelStats, Subset, SubsetRow};

pub const STATS_HEADER: [&str; 6] = ["model", "h", "delta", "rho", "cost_ratio", "sigma"];
pub const SUBSETS_HEADER: [&str; 5] = ["rank", "subset", "V", "Bmin_over_C1", "bmin_rank"];
const C1_KEY: &str = "c1_seconds";

fn csv_error(label: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: label.to_string(),
        line,
        message: e.to_string(),
    }
}

fn to_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("CSV buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn parse_number(field: &str) -> Option<f64> {
    let field = field.trim();
    if let Some((a, b)) = field.split_once('/') {
        let a: f64 = a.trim().parse().ok()?;
        let b: f64 = b.trim().parse().ok()?;
        return Some(a / b);
    }
    field.parse().ok()
}

// Ratio whose product with `c1` reproduces `cost` exactly, when one exists
// within a few ulps of the quotient.
fn exact_ratio(cost: f64, c1: f64) -> f64 {
    let q = cost / c1;
    for step in [0i64, 1, -1, 2, -2] {
        let cand = f64::from_bits((q.to_bits() as i64 + step) as u64);
        if cand * c1 == cost {
            return cand;
        }
    }
    q
}

pub fn format_stats(stats: &ModelStats) -> Result<String> {
    let c1 = stats.high_fidelity().cost;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STATS_HEADER).map_err(|e| csv_error("stats", e))?;
    for m in stats.models() {
        w.write_record([
            m.id.to_string(),
            m.h.to_string(),
            m.delta.to_string(),
            m.rho.to_string(),
            exact_ratio(m.cost, c1).to_string(),
            m.sigma.to_string(),
        ])
        .map_err(|e| csv_error("stats", e))?;
    }
    Ok(format!("# {C1_KEY}={c1}\n{}", to_string(w)?))
}

/// Parses the statistics CSV; `label` names the source in error messages.
pub fn parse_stats(text: &str, label: &str) -> Result<ModelStats> {
    let perr = |line: usize, message: String| Error::Parse {
        path: label.to_string(),
        line,
        message,
    };
    let mut c1 = None;
    for (k, line) in text.lines().enumerate() {
        let Some(rest) = line.trim().strip_prefix('#') else {
            continue;
        };
        if let Some((key, value)) = rest.split_once('=') {
            if key.trim() == C1_KEY {
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| perr(k + 1, format!("bad {C1_KEY} value {value:?}")))?;
                if !(v > 0.0) {
                    return Err(perr(k + 1, format!("{C1_KEY} must be positive")));
                }
                c1 = Some(v);
            }
        }
    }
    let c1 = c1.unwrap_or(1.0);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_error(label, e))?.clone();
    if header.iter().collect::<Vec<_>>() != STATS_HEADER {
        let line = header.position().map_or(1, |p| p.line() as usize);
        return Err(perr(
            line,
            format!("expected header {:?}, found {:?}", STATS_HEADER.join(","), header),
        ));
    }
    let mut models = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(label, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| {
            parse_number(&rec[i])
                .ok_or_else(|| perr(line, format!("column {} is not a number: {:?}", STATS_HEADER[i], &rec[i])))
        };
        let id_text = rec[0].trim().trim_start_matches('f');
        let id: usize = id_text
            .parse()
            .map_err(|_| perr(line, format!("bad model id {:?}", &rec[0])))?;
        models.push(ModelStat {
            id,
            h: num(1)?,
            delta: num(2)?,
            rho: num(3)?,
            cost: num(4)? * c1,
            sigma: num(5)?,
        });
    }
    ModelStats::new(models).map_err(|e| perr(0, e.to_string()))
}

pub fn read_stats(path: &Path) -> Result<ModelStats> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stats(&text, &path.display().to_string())
}

pub fn write_stats(path: &Path, stats: &ModelStats) -> Result<()> {
    write_text(path, &format_stats(stats)?)
}

pub fn format_subsets(rows: &[SubsetRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUBSETS_HEADER).map_err(|e| csv_error("subsets", e))?;
    for r in rows {
        w.write_record([
            r.rank.to_string(),
            r.subset.to_string(),
            r.v.to_string(),
            r.bmin_over_c1.to_string(),
            r.bmin_rank.to_string(),
        ])
        .map_err(|e| csv_error("subsets", e))?;
    }
    to_string(w)
}

pub fn parse_subsets(text: &str, label: &str) -> Result<Vec<SubsetRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(label, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let perr = |message: String| Error::Parse {
            path: label.to_string(),
            line,
            message,
        };
        if rec.len() != SUBSETS_HEADER.len() {
            return Err(perr(format!("expected {} columns", SUBSETS_HEADER.len())));
        }
        let int = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| perr(format!("bad {} {:?}", SUBSETS_HEADER[i], &rec[i])))
        };
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| perr(format!("bad {} {:?}", SUBSETS_HEADER[i], &rec[i])))
        };
        rows.push(SubsetRow {
            rank: int(0)?,
            subset: rec[1].parse::<Subset>().map_err(|e| perr(e.to_string()))?,
            v: num(2)?,
            bmin_over_c1: num(3)?,
            bmin_rank: int(4)?,
        });
    }
    Ok(rows)
}

pub fn write_subsets(path: &Path, rows: &[SubsetRow]) -> Result<()> {
    write_text(path, &format_subsets(rows)?)
}

/// Serializes rows with a header taken from the field names.
pub fn format_records<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| csv_error("records", e))?;
    }
    to_string(w)
}

/// Field values as a square matrix, one grid row per line.
pub fn format_field(field: &Field) -> String {
    let mut out = String::new();
    for row in field.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_field_values(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        for cell in line.split(',') {
            values.push(cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: "field".into(),
                line: k + 1,
                message: format!("bad value {cell:?}"),
            })?);
        }
    }
    Ok(values)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals() {
        assert_eq!(parse_number("1/128"), Some(0.0078125));
        assert_eq!(parse_number(" 0.25 "), Some(0.25));
        assert_eq!(parse_number("6.694e-3"), Some(6.694e-3));
        assert_eq!(parse_number("x"), None);
    }

    #[test]
    fn exact_ratio_reproduces_cost() {
        let c1 = 0.1 + 0.2;
        for cost in [0.3, 0.017, 1e-5, 0.123456789] {
            let r = exact_ratio(cost, c1);
            assert!((r * c1 - cost).abs() <= f64::EPSILON * cost);
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "# c1_seconds=2\nmodel,h,delta,rho,cost_ratio,sigma\n1,0.1,0.2,1,1,0.5\n2,0.1,x,0.9,0.5,0.5\n";
        match parse_stats(text, "s.csv") {
            Err(Error::Parse { path, line, .. }) => {
                assert_eq!(path, "s.csv");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_header = "model,h,delta,rho,cost,sigma\n";
        assert!(matches!(parse_stats(bad_header, "s"), Err(Error::Parse { .. })));
    }

    #[test]
    fn cost_scale_from_comment() {
        let text = "# c1_seconds=4\nmodel,h,delta,rho,cost_ratio,sigma\n1,1/16,0.25,1,1,0.5\n2,1/8,0.25,0.9,0.25,0.5\n";
        let s = parse_stats(text, "s").unwrap();
        assert_eq!(s.get(2).unwrap().cost, 1.0);
        assert_eq!(s.get(1).unwrap().h, 0.0625);
    }
}
