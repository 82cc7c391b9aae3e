use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::run::AggregateResult;
use super::HarnessError;

const HEADER: &str = "t,mean_regret,stderr_regret,mean_reward";

/// One parsed row of an emitted results file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub mean_reward: f64,
}

/// Writes every `thin`-th round (and always the last) with 12 significant digits.
pub fn write_csv<W: Write>(result: &AggregateResult, mut out: W, thin: usize) -> std::io::Result<()> {
    let thin = thin.max(1);
    let n = result.mean_regret.len();
    writeln!(out, "{HEADER}")?;
    for i in 0..n {
        let t = i + 1;
        if t % thin != 0 && t != n {
            continue;
        }
        writeln!(
            out,
            "{t},{:.11e},{:.11e},{:.11e}",
            result.mean_regret[i], result.stderr_regret[i], result.mean_reward[i]
        )?;
    }
    out.flush()
}

pub fn emit_csv(result: &AggregateResult, path: &Path, thin: usize) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_csv(result, BufWriter::new(file), thin).map_err(io)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, HarnessError> {
    let bad = |msg: String| HarnessError::Runtime(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != HEADER {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(e.to_string()));
        rows.push(CsvRow {
            t: rec[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            mean_regret: num(1)?,
            stderr_regret: num(2)?,
            mean_reward: num(3)?,
        });
    }
    Ok(rows)
}
