//! Report rendering (JSON, aligned text, CSV) and report comparison.

use std::str::FromStr;

use serde::Serialize;

use super::{EvalReport, Scores};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Table => "txt",
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

/// Aligned plain-text table. Numeric columns are right-aligned, the rest
/// left-aligned.
pub(crate) fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    let mut numeric = vec![true; header.len()];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
            if !cell.is_empty() && cell.parse::<f64>().is_err() {
                numeric[i] = false;
            }
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| -> String {
        let parts: Vec<String> = cells
            .enumerate()
            .map(|(i, c)| {
                let w = widths[i];
                if numeric[i] {
                    format!("{c:>w$}")
                } else {
                    format!("{c:<w$}")
                }
            })
            .collect();
        let mut l = parts.join("  ").trim_end().to_string();
        l.push('\n');
        l
    };
    let mut out = line(&mut header.iter().copied());
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}

pub(crate) fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

const SCORE_HEADER: [&str; 6] = ["Acc", "P", "R", "F1", "F0.5", "F2"];

impl EvalReport {
    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            ReportFormat::Table => {
                let fmt = |s: &Scores| s.as_array().map(|v| format!("{v:.1}"));
                let mut rows: Vec<Vec<String>> = self
                    .folds
                    .iter()
                    .map(|f| {
                        let mut r = vec![f.fold.clone(), f.test_rows.to_string()];
                        r.extend(fmt(&f.metrics.scores));
                        if f.metrics.is_degenerate() {
                            r[0].push('*');
                        }
                        r
                    })
                    .collect();
                let mut avg = vec!["∅".to_string(), String::new()];
                avg.extend(fmt(&self.averages));
                rows.push(avg);
                let mut header = vec!["Fold", "n"];
                header.extend(SCORE_HEADER);
                let mut out = format!("{}\n", self.protocol);
                out.push_str(&aligned(&header, &rows));
                if self.folds.iter().any(|f| f.metrics.is_degenerate()) {
                    out.push_str("* precision or recall undefined (no predicted or no actual positives); reported as 0\n");
                }
                Ok(out)
            }
            ReportFormat::Csv => {
                let mut rows: Vec<Vec<String>> = self
                    .folds
                    .iter()
                    .map(|f| {
                        let c = &f.confusion;
                        let mut r = vec![
                            f.fold.clone(),
                            c.tp.to_string(),
                            c.fp.to_string(),
                            c.fn_.to_string(),
                            c.tn.to_string(),
                        ];
                        r.extend(f.metrics.scores.as_array().map(|v| v.to_string()));
                        r
                    })
                    .collect();
                let mut avg = vec!["mean".to_string(), String::new(), String::new(), String::new(), String::new()];
                avg.extend(self.averages.as_array().map(|v| v.to_string()));
                rows.push(avg);
                csv_string(
                    &["fold", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f1", "f05", "f2"],
                    &rows,
                )
            }
        }
    }
}

/// Variant minus base, in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaRow {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

impl DeltaRow {
    fn between(base: &Scores, variant: &Scores) -> Self {
        DeltaRow {
            accuracy: variant.accuracy - base.accuracy,
            precision: variant.precision - base.precision,
            recall: variant.recall - base.recall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaTable {
    pub folds: Vec<(String, DeltaRow)>,
    pub averages: DeltaRow,
}

pub fn compare_reports(base: &EvalReport, variant: &EvalReport) -> Result<DeltaTable> {
    let ids = |r: &EvalReport| r.folds.iter().map(|f| f.fold.clone()).collect::<Vec<_>>();
    if ids(base) != ids(variant) {
        return Err(Error::InvalidArgument(format!(
            "reports have different folds: {:?} vs {:?}",
            ids(base),
            ids(variant)
        )));
    }
    let folds = base
        .folds
        .iter()
        .zip(&variant.folds)
        .map(|(b, v)| (b.fold.clone(), DeltaRow::between(&b.metrics.scores, &v.metrics.scores)))
        .collect();
    Ok(DeltaTable {
        folds,
        averages: DeltaRow::between(&base.averages, &variant.averages),
    })
}

impl DeltaTable {
    pub fn render(&self, format: ReportFormat) -> Result<String> {
        let cells = |d: &DeltaRow, signed: bool| {
            [d.accuracy, d.precision, d.recall].map(|v| if signed { format!("{v:+.1}") } else { v.to_string() })
        };
        match format {
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            ReportFormat::Table => {
                let mut rows: Vec<Vec<String>> = self
                    .folds
                    .iter()
                    .map(|(id, d)| std::iter::once(id.clone()).chain(cells(d, true)).collect())
                    .collect();
                rows.push(std::iter::once("∅".to_string()).chain(cells(&self.averages, true)).collect());
                Ok(aligned(&["Fold", "ΔAcc", "ΔP", "ΔR"], &rows))
            }
            ReportFormat::Csv => {
                let mut rows: Vec<Vec<String>> = self
                    .folds
                    .iter()
                    .map(|(id, d)| std::iter::once(id.clone()).chain(cells(d, false)).collect())
                    .collect();
                rows.push(std::iter::once("mean".to_string()).chain(cells(&self.averages, false)).collect());
                csv_string(&["fold", "accuracy", "precision", "recall"], &rows)
            }
        }
    }
}

/// Reads a report previously written as JSON.
pub fn report_from_json(text: &str) -> Result<EvalReport> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{metrics, Confusion, FoldResult};

    fn fold(id: &str, c: Confusion) -> FoldResult {
        FoldResult {
            fold: id.into(),
            train_rows: 10,
            test_rows: c.total(),
            synthetic_rows: 0,
            confusion: c,
            metrics: metrics(&c),
        }
    }

    fn report() -> EvalReport {
        EvalReport::new(
            "test",
            vec![
                fold("S1", Confusion { tp: 2, fp: 1, fn_: 1, tn: 6 }),
                fold("S2", Confusion { tp: 0, fp: 0, fn_: 0, tn: 4 }),
            ],
        )
    }

    #[test]
    fn table_has_fold_rows_and_average() {
        let t = report().render(ReportFormat::Table).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "test");
        assert!(lines[3].starts_with("S1 ") && lines[3].contains("80.0") && lines[3].contains("66.7"));
        assert!(lines[4].starts_with("S2*"));
        assert!(lines[5].starts_with("∅"));
        assert!(t.contains("reported as 0"));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let r = report();
        let csv = r.render(ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("fold,tp,fp,fn,tn,"));
        let back = report_from_json(&r.render(ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn deltas() {
        let base = report();
        let same = compare_reports(&base, &base).unwrap();
        assert!(same.folds.iter().all(|(_, d)| *d == DeltaRow { accuracy: 0.0, precision: 0.0, recall: 0.0 }));

        let mut variant = base.clone();
        variant.folds[0].metrics.scores.recall = base.folds[0].metrics.scores.recall + 24.6;
        let variant = EvalReport::new("v", variant.folds);
        let d = compare_reports(&base, &variant).unwrap();
        assert!((d.folds[0].1.recall - 24.6).abs() < 1e-9);
        let mean: f64 = d.folds.iter().map(|(_, r)| r.recall).sum::<f64>() / 2.0;
        assert!((d.averages.recall - mean).abs() < 1e-9);
        assert!(d.render(ReportFormat::Table).unwrap().contains("+24.6"));

        let mut other = base.clone();
        other.folds.pop();
        assert!(compare_reports(&base, &other).is_err());
    }
}
