use std::io::BufRead;

use super::{RelativeRanking, SystemJudgment};
use crate::{Result, Scalar};

/// Parsed rows plus the (1-based line, problem) of every row that was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRows<R> {
    pub rows: Vec<R>,
    pub malformed: Vec<(usize, String)>,
}

fn parse_rows<R>(
    reader: impl BufRead,
    fields: usize,
    mut parse: impl FnMut(&[&str]) -> std::result::Result<R, String>,
) -> Result<ParsedRows<R>> {
    let mut out = ParsedRows {
        rows: Vec::new(),
        malformed: Vec::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != fields {
            out.malformed.push((
                i + 1,
                format!(
                    "expected {fields} tab-separated fields, found {}",
                    cols.len()
                ),
            ));
            continue;
        }
        match parse(&cols) {
            Ok(r) => out.rows.push(r),
            Err(reason) => out.malformed.push((i + 1, reason)),
        }
    }
    Ok(out)
}

/// DARR judgments: `seg_id \t better_system \t worse_system`.
pub fn read_darr(reader: impl BufRead) -> Result<ParsedRows<RelativeRanking>> {
    parse_rows(reader, 3, |c| {
        if c.iter().any(|f| f.trim().is_empty()) {
            return Err("empty field".to_string());
        }
        RelativeRanking::new(c[0].trim(), c[1].trim(), c[2].trim()).map_err(|e| e.to_string())
    })
}

/// System judgments: `system \t human_score`.
pub fn read_system_judgments<T: Scalar>(
    reader: impl BufRead,
) -> Result<ParsedRows<SystemJudgment<T>>> {
    parse_rows(reader, 2, |c| {
        let system = c[0].trim();
        if system.is_empty() {
            return Err("empty system name".to_string());
        }
        let score = c[1]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .and_then(T::from_f64)
            .ok_or_else(|| format!("bad human score {:?}", c[1]))?;
        Ok(SystemJudgment {
            system: system.to_string(),
            human_score: score,
        })
    })
}
