//! Plain-text file formats shared by the CLI and the browser demo.
//!
//! * path CSV: header `n,x`, one row `n,X_n` per step, integers only
//! * samples CSV: header `rep,mu_hat,beta1..betap`, one row per replication
//! * Q-Q CSV: header `z,value`
//! * histogram CSV: header `bin_left,bin_right,count`
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the exact values.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::inference::normality::HistogramBin;
use crate::montecarlo::{component_name, McSummary};
use crate::simulate::CountPath;

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn write_path_csv(path: &CountPath) -> String {
    let mut out = String::with_capacity(path.len() * 8 + 4);
    out.push_str("n,x\n");
    for (i, x) in path.counts.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, x);
    }
    out
}

pub fn read_path_csv(text: &str) -> Result<CountPath> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "n,x")) => {}
        Some((line, other)) => {
            return Err(format_err(
                line,
                format!("expected header `n,x`, found `{other}`"),
            ))
        }
        None => return Err(format_err(1, "empty file")),
    }
    let mut counts = Vec::new();
    for (line, row) in lines {
        let (n, x) = row
            .split_once(',')
            .ok_or_else(|| format_err(line, "expected two columns"))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| format_err(line, format!("step index `{n}` is not an integer")))?;
        if n != counts.len() + 1 {
            return Err(format_err(
                line,
                format!("expected step {}, found {n}", counts.len() + 1),
            ));
        }
        let x: u64 = x
            .trim()
            .parse()
            .map_err(|_| format_err(line, format!("count `{x}` is not a nonnegative integer")))?;
        counts.push(x);
    }
    if counts.is_empty() {
        return Err(format_err(2, "path has no rows"));
    }
    CountPath::from_counts(counts)
}

pub fn write_samples_csv(summary: &McSummary) -> String {
    let dim = summary.mean_theta.len();
    let mut out = String::from("rep");
    for c in 0..dim {
        out.push(',');
        out.push_str(&component_name(c));
    }
    out.push('\n');
    for (rep, row) in summary
        .replications
        .iter()
        .zip(&summary.per_component_samples)
    {
        let _ = write!(out, "{rep}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Parsed samples file: column names (without `rep`), replication ids, rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplesTable {
    pub columns: Vec<String>,
    pub replications: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl SamplesTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_samples_csv(text: &str) -> Result<SamplesTable> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| format_err(1, "empty file"))?;
    let mut names = header.split(',').map(|s| s.trim().to_string());
    if names.next().as_deref() != Some("rep") {
        return Err(format_err(hline, "first column must be `rep`"));
    }
    let columns: Vec<String> = names.collect();
    if columns.is_empty() {
        return Err(format_err(hline, "no sample columns"));
    }
    let mut replications = Vec::new();
    let mut rows = Vec::new();
    for (line, row) in lines {
        let mut fields = row.split(',');
        let rep = fields
            .next()
            .and_then(|r| r.trim().parse().ok())
            .ok_or_else(|| format_err(line, "replication id is not an integer"))?;
        let values: Vec<f64> = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| format_err(line, format!("value `{f}` is not a number")))
            })
            .collect::<Result<_>>()?;
        if values.len() != columns.len() {
            return Err(format_err(
                line,
                format!("expected {} values, found {}", columns.len(), values.len()),
            ));
        }
        replications.push(rep);
        rows.push(values);
    }
    Ok(SamplesTable {
        columns,
        replications,
        rows,
    })
}

pub fn write_qq_csv(pairs: &[(f64, f64)]) -> String {
    let mut out = String::from("z,value\n");
    for (z, v) in pairs {
        let _ = writeln!(out, "{z},{v}");
    }
    out
}

pub fn write_histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", b.left, b.right, b.count);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::ThetaVector;
    use crate::montecarlo::summarize;
    use proptest::prelude::*;

    #[test]
    fn path_header_required() {
        assert!(matches!(
            read_path_csv("x,n\n1,2\n"),
            Err(Error::Format { line: 1, .. })
        ));
        assert!(matches!(
            read_path_csv("n,x\n1,2\n3,4\n"),
            Err(Error::Format { line: 3, .. })
        ));
        assert!(matches!(
            read_path_csv("n,x\n1,-2\n"),
            Err(Error::Format { line: 2, .. })
        ));
        assert!(read_path_csv("n,x\n").is_err());
    }

    #[test]
    fn samples_round_trip() {
        let truth = ThetaVector::new(1.0, vec![0.5, 0.1]);
        let rows = vec![vec![1.1, 0.45, -0.02], vec![0.9, 0.55, 0.1 + 0.2]];
        let s = summarize(&rows, &truth, true).unwrap();
        let table = read_samples_csv(&write_samples_csv(&s)).unwrap();
        assert_eq!(table.columns, vec!["mu_hat", "beta1", "beta2"]);
        assert_eq!(table.rows, rows);
        assert_eq!(table.column("beta2").unwrap(), vec![-0.02, 0.1 + 0.2]);
    }

    proptest! {
        #[test]
        fn path_round_trip(counts in prop::collection::vec(any::<u64>(), 1..200)) {
            let path = CountPath::from_counts(counts.clone()).unwrap();
            let back = read_path_csv(&write_path_csv(&path)).unwrap();
            prop_assert_eq!(back.counts, counts);
        }
    }
}
