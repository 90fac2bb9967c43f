//! Input formats.
//!
//! A confusion matrix is accepted as
//!
//! * a JSON record `{"tp": 26, "fn": 0, "fp": 2, "tn": 6}`,
//! * a JSON 2×2 table `[[26, 0], [2, 6]]` (rows reference positive/negative,
//!   columns predicted positive/negative),
//! * a CSV record with a `tp,fn,fp,tn` header (any column order) and one row,
//! * a headerless 2×2 CSV table,
//! * an inline `tp,fn,fp,tn` list such as `26,0,2,6`.
//!
//! Leaderboards are CSV with a `name,accuracy[,n]` header; accuracies are
//! decimals in `[0, 1]` or percentages with a trailing `%`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cm::{CmRecord, ConfusionMatrix};
use crate::error::{Error, Result};
use crate::leaderboard::Submission;

/// Either wire form of a confusion matrix. Counts are validated by
/// [`CmInput::to_cm`], so range errors keep their own codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CmInput {
    Record(CmRecord),
    Table([[i64; 2]; 2]),
}

impl CmInput {
    pub fn to_cm(&self) -> Result<ConfusionMatrix> {
        match self {
            CmInput::Record(r) => ConfusionMatrix::try_from(r.clone()),
            CmInput::Table(t) => ConfusionMatrix::from_table(*t),
        }
    }
}

/// Reads `src` as a file if one exists at that path, else parses it inline.
pub fn parse_cm(src: &str) -> Result<ConfusionMatrix> {
    let path = Path::new(src);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        parse_cm_text(&text, &path.display().to_string())
    } else {
        parse_cm_text(src, "inline")
    }
}

fn json_error(origin: &str, e: serde_json::Error) -> Error {
    Error::parse(
        format!("{origin}:{}:{}", e.line(), e.column()),
        e.to_string(),
    )
}

pub fn parse_cm_text(text: &str, origin: &str) -> Result<ConfusionMatrix> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let rec: crate::cm::CmRecord =
            serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
        return ConfusionMatrix::try_from(rec);
    }
    if trimmed.starts_with('[') {
        let table: [[i64; 2]; 2] =
            serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
        return ConfusionMatrix::from_table(table);
    }
    parse_cm_csv(text, origin)
}

fn csv_rows(text: &str, origin: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::parse(origin, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

fn parse_count(field: &str, origin: &str, line: usize, col: usize) -> Result<i64> {
    field.parse::<i64>().map_err(|_| {
        Error::parse(
            format!("{origin}:{line} field {col}"),
            format!("`{field}` is not an integer count"),
        )
    })
}

fn parse_cm_csv(text: &str, origin: &str) -> Result<ConfusionMatrix> {
    let rows = csv_rows(text, origin)?;
    let Some((first_line, first)) = rows.first() else {
        return Err(Error::parse(origin, "no confusion matrix found"));
    };
    let is_header = first.iter().any(|f| f.parse::<i64>().is_err());
    if is_header {
        let names: Vec<String> = first.iter().map(|f| f.to_ascii_lowercase()).collect();
        let (line, values) = rows.get(1).ok_or_else(|| {
            Error::parse(format!("{origin}:{first_line}"), "header without a data row")
        })?;
        if values.len() != names.len() {
            return Err(Error::parse(
                format!("{origin}:{line}"),
                format!("expected {} fields, found {}", names.len(), values.len()),
            ));
        }
        let get = |key: &str| -> Result<i64> {
            let col = names.iter().position(|n| n == key).ok_or_else(|| {
                Error::parse(format!("{origin}:{first_line}"), format!("missing `{key}` column"))
            })?;
            parse_count(&values[col], origin, *line, col + 1)
        };
        return ConfusionMatrix::new(get("tp")?, get("fn")?, get("fp")?, get("tn")?);
    }
    match rows.as_slice() {
        [(line, rec)] if rec.len() == 4 => {
            let v: Vec<i64> = rec
                .iter()
                .enumerate()
                .map(|(i, f)| parse_count(f, origin, *line, i + 1))
                .collect::<Result<_>>()?;
            ConfusionMatrix::new(v[0], v[1], v[2], v[3])
        }
        [(l1, r1), (l2, r2)] if r1.len() == 2 && r2.len() == 2 => ConfusionMatrix::from_table([
            [parse_count(&r1[0], origin, *l1, 1)?, parse_count(&r1[1], origin, *l1, 2)?],
            [parse_count(&r2[0], origin, *l2, 1)?, parse_count(&r2[1], origin, *l2, 2)?],
        ]),
        _ => Err(Error::parse(
            origin,
            "expected a tp,fn,fp,tn record or a 2×2 table",
        )),
    }
}

/// Parses an accuracy field; returns the value and its decimal places.
pub fn parse_accuracy(field: &str) -> Option<(f64, u32)> {
    let (num, scale) = match field.strip_suffix('%') {
        Some(p) => (p.trim(), 2),
        None => (field, 0),
    };
    let value: f64 = num.parse().ok()?;
    let decimals = num.split_once('.').map_or(0, |(_, f)| f.len() as u32);
    let value = if scale == 2 { value / 100.0 } else { value };
    Some((value, decimals + scale))
}

pub fn parse_leaderboard_csv(text: &str, default_n: Option<u64>) -> Result<Vec<Submission>> {
    let origin = "leaderboard";
    let rows = csv_rows(text, origin)?;
    let Some(((hline, header), body)) = rows.split_first() else {
        return Err(Error::parse(origin, "empty leaderboard"));
    };
    let header: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    let col = |key: &str| header.iter().position(|h| h == key);
    let name_col = col("name")
        .ok_or_else(|| Error::parse(format!("{origin}:{hline}"), "missing `name` column"))?;
    let acc_col = col("accuracy")
        .ok_or_else(|| Error::parse(format!("{origin}:{hline}"), "missing `accuracy` column"))?;
    let n_col = col("n");
    if n_col.is_none() && default_n.is_none() {
        return Err(Error::parse(
            format!("{origin}:{hline}"),
            "no `n` column; supply the test-set size separately",
        ));
    }
    body.iter()
        .map(|(line, rec)| {
            let field = |i: usize| {
                rec.get(i).map(String::as_str).ok_or_else(|| {
                    Error::parse(format!("{origin}:{line}"), format!("missing field {}", i + 1))
                })
            };
            let name = field(name_col)?;
            let raw = field(acc_col)?;
            let (acc, decimals) = parse_accuracy(raw).ok_or_else(|| {
                Error::parse(
                    format!("{origin}:{line} field {}", acc_col + 1),
                    format!("`{raw}` is not an accuracy"),
                )
            })?;
            let n = match n_col {
                Some(c) => {
                    let raw = field(c)?;
                    raw.parse::<u64>().map_err(|_| {
                        Error::parse(
                            format!("{origin}:{line} field {}", c + 1),
                            format!("`{raw}` is not a sample size"),
                        )
                    })?
                }
                None => default_n.expect("checked above"),
            };
            Submission::with_decimals(name, acc, n, decimals)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cm() -> ConfusionMatrix {
        ConfusionMatrix::new(26, 0, 2, 6).unwrap()
    }

    #[test]
    fn json_record() {
        let cm = parse_cm_text(r#"{"tp":26,"fn":0,"fp":2,"tn":6}"#, "t").unwrap();
        assert_eq!(cm, small_cm());
    }

    #[test]
    fn json_table() {
        assert_eq!(parse_cm_text("[[26,0],[2,6]]", "t").unwrap(), small_cm());
    }

    #[test]
    fn missing_field_is_parse_error() {
        let err = parse_cm_text(r#"{"tp":26,"fn":0,"fp":2}"#, "t").unwrap_err();
        assert_eq!(err.code(), "ParseError");
        let err = parse_cm_text("tp,fn,fp\n26,0,2\n", "t").unwrap_err();
        assert!(err.to_string().contains("missing `tn`"), "{err}");
    }

    #[test]
    fn csv_record_any_order() {
        assert_eq!(parse_cm_text("tn,fp,fn,tp\n6,2,0,26\n", "t").unwrap(), small_cm());
    }

    #[test]
    fn csv_table_with_comments() {
        let text = "# rows: reference +/-\n26, 0\n2, 6\n";
        assert_eq!(parse_cm_text(text, "t").unwrap(), small_cm());
    }

    #[test]
    fn inline_record() {
        assert_eq!(parse_cm("26,0,2,6").unwrap(), small_cm());
    }

    #[test]
    fn negative_count() {
        assert_eq!(parse_cm("26,-1,2,6").unwrap_err().code(), "NegativeCount");
    }

    #[test]
    fn bad_field_has_context() {
        let err = parse_cm_text("26,0\nx,6\n", "cm.csv").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cm.csv:2 field 1"), "{msg}");
    }

    #[test]
    fn leaderboard_with_n_column() {
        let subs = parse_leaderboard_csv("name,accuracy,n\na,0.9,10\nb,80%,10\n", None).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[1].acc_point, 0.8);
        assert_eq!(subs[1].decimals, 2);
        assert_eq!(subs[1].correct(), 8);
    }

    #[test]
    fn leaderboard_global_n() {
        let subs = parse_leaderboard_csv("name,accuracy\na,0.976\n", Some(15123)).unwrap();
        assert_eq!(subs[0].n, 15123);
        assert!(parse_leaderboard_csv("name,accuracy\na,0.976\n", None).is_err());
    }

    #[test]
    fn leaderboard_rounding_error() {
        let err = parse_leaderboard_csv("name,accuracy,n\na,0.5004,10\n", None).unwrap_err();
        assert_eq!(err.code(), "RoundingInconsistent");
    }

    #[test]
    fn cm_input_forms() {
        let a: CmInput = serde_json::from_str(r#"{"tp":26,"fn":0,"fp":2,"tn":6}"#).unwrap();
        let b: CmInput = serde_json::from_str("[[26,0],[2,6]]").unwrap();
        assert_eq!(a.to_cm().unwrap(), b.to_cm().unwrap());
    }
}
