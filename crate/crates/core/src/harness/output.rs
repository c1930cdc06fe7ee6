//! Sweep tables as CSV.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use super::sweep::{sort_rows, summarize_cells, CellSummary, SweepRow, SweepTable};
use super::HarnessError;
use crate::analysis::{EncounterCounts, MetricSummary, Ratio};

pub const ROW_HEADER: [&str; 11] = [
    "cva_deg", "t_grm", "t_loom", "trial", "seed", "tp", "fp", "tn", "fn", "mobility", "safety",
];

pub const CELL_HEADER: [&str; 11] = [
    "cva_deg",
    "t_grm",
    "t_loom",
    "trials",
    "failures",
    "mobility_mean",
    "mobility_std",
    "mobility_excluded",
    "safety_mean",
    "safety_std",
    "safety_excluded",
];

fn ratio_field(r: Ratio) -> String {
    r.value().map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_records<W: Write>(out: W, header: &[&str], records: impl Iterator<Item = Vec<String>>) -> csv::Result<()> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn row_record(r: &SweepRow) -> Vec<String> {
    let m = r.metrics();
    let mut rec = vec![
        r.cva_deg.to_string(),
        r.t_grm.to_string(),
        r.t_loom.to_string(),
        r.trial.to_string(),
        r.seed.to_string(),
    ];
    match &r.counts {
        Some(c) => rec.extend([c.tp, c.fp, c.tn, c.fn_].iter().map(u64::to_string)),
        None => rec.extend(std::iter::repeat_n(String::new(), 4)),
    }
    rec.push(ratio_field(m.mobility));
    rec.push(ratio_field(m.safety));
    rec
}

fn cell_record(c: &CellSummary) -> Vec<String> {
    let summary = |s: &MetricSummary| [opt_field(s.mean), opt_field(s.std), s.excluded.to_string()];
    let mut rec = vec![
        c.cva_deg.to_string(),
        c.t_grm.to_string(),
        c.t_loom.to_string(),
        c.aggregate.trials.to_string(),
        c.failures.to_string(),
    ];
    rec.extend(summary(&c.aggregate.mobility));
    rec.extend(summary(&c.aggregate.safety));
    rec
}

/// Per-trial rows in CSV form.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, &ROW_HEADER, rows.iter().map(row_record)).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

pub fn cells_to_csv(cells: &[CellSummary]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, &CELL_HEADER, cells.iter().map(cell_record)).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Writes the per-trial rows, sorted, to `path`.
pub fn emit_csv(table: &SweepTable, path: &Path) -> Result<(), HarnessError> {
    let mut rows = table.rows.clone();
    sort_rows(&mut rows);
    write_text(path, &rows_to_csv(&rows))
}

pub fn emit_cells_csv(cells: &[CellSummary], path: &Path) -> Result<(), HarnessError> {
    write_text(path, &cells_to_csv(cells))
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T, String> {
    rec[i]
        .parse()
        .map_err(|_| format!("line {line}: bad `{}` value `{}`", ROW_HEADER[i], &rec[i]))
}

fn parse_ratio(rec: &csv::StringRecord, i: usize, line: u64) -> Result<Option<f64>, String> {
    if rec[i].is_empty() {
        Ok(None)
    } else {
        parse_field(rec, i, line).map(Some)
    }
}

/// Parses per-trial CSV text. Metrics are recomputed from the counts and
/// checked against the printed values; rows without counts come back as
/// failed trials.
pub fn parse_rows(text: &str) -> Result<Vec<SweepRow>, String> {
    let mut rdr = ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(ROW_HEADER) {
        return Err(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = rec.position().map_or(0, |p| p.line());
        let counts = if rec[5].is_empty() {
            None
        } else {
            Some(EncounterCounts {
                tp: parse_field(&rec, 5, line)?,
                fp: parse_field(&rec, 6, line)?,
                tn: parse_field(&rec, 7, line)?,
                fn_: parse_field(&rec, 8, line)?,
            })
        };
        let row = SweepRow {
            cva_deg: parse_field(&rec, 0, line)?,
            t_grm: parse_field(&rec, 1, line)?,
            t_loom: parse_field(&rec, 2, line)?,
            trial: parse_field(&rec, 3, line)?,
            seed: parse_field(&rec, 4, line)?,
            failure: counts.is_none().then(|| "trial failed".to_string()),
            counts,
        };
        let printed = (parse_ratio(&rec, 9, line)?, parse_ratio(&rec, 10, line)?);
        let m = row.metrics();
        let consistent = |p: Option<f64>, r: Ratio| match (p, r.value()) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 5e-7,
            _ => false,
        };
        if !consistent(printed.0, m.mobility) || !consistent(printed.1, m.safety) {
            return Err(format!("line {line}: metrics disagree with counts"));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a per-trial CSV back into a table with recomputed cell summaries.
pub fn read_csv(path: &Path) -> Result<SweepTable, HarnessError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    let mut rows = parse_rows(&text).map_err(|msg| HarnessError::Parse {
        path: path.display().to_string(),
        msg,
    })?;
    sort_rows(&mut rows);
    let cells = summarize_cells(&rows);
    Ok(SweepTable { rows, cells })
}
