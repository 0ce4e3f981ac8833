//! File artifacts: loss curves, barrier reports, matrices and the results table.

use std::fs;
use std::path::Path;

use chemnmf::diagnostics::{monotone_escape_check, LayerBarrier, LayerBarrierReport};
use chemnmf::{MultiLayerResult, NonNegMatrix, SolveTrace};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::runner::ResultRow;

fn create(path: &Path) -> CliResult<fs::File> {
    fs::File::create(path).map_err(|e| CliError::io(path, e))
}

/// Loss curve CSV with one row per solver iteration, layers concatenated in order.
pub fn emit_trace_curves(traces: &[&SolveTrace], path: &Path) -> CliResult<()> {
    if traces.is_empty() {
        return Err(CliError::config("loss curve needs at least one layer"));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::io(path, e);
    w.write_record(["layer", "iteration", "divergence", "is_final_of_layer"])
        .map_err(err)?;
    for (l, trace) in traces.iter().enumerate() {
        let n = trace.divergences.len();
        for (i, d) in trace.divergences.iter().enumerate() {
            w.write_record([
                (l + 1).to_string(),
                (i + 1).to_string(),
                d.to_string(),
                (i + 1 == n).to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn emit_loss_curves(result: &MultiLayerResult, path: &Path) -> CliResult<()> {
    let traces: Vec<&SolveTrace> = result.layers.iter().map(|l| &l.trace).collect();
    emit_trace_curves(&traces, path)
}

/// On-disk barrier report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierFile {
    pub layers: Vec<LayerBarrier>,
    #[serde(rename = "xi_ML")]
    pub cumulative_barrier: f64,
    pub beta: f64,
    pub z: f64,
    /// 1-based first layer of the trailing non-increasing barrier run; `null`
    /// when there is none or fewer than two layers.
    pub monotone_suffix: Option<usize>,
}

impl BarrierFile {
    pub fn from_report(report: &LayerBarrierReport) -> CliResult<Self> {
        if report.layers.is_empty() {
            return Err(CliError::config("barrier report has no layers"));
        }
        let monotone_suffix = if report.layers.len() >= 2 {
            monotone_escape_check(report)?.suffix_start
        } else {
            None
        };
        Ok(Self {
            layers: report.layers.clone(),
            cumulative_barrier: report.cumulative_barrier,
            beta: report.beta,
            z: report.z,
            monotone_suffix,
        })
    }
}

pub fn emit_barrier_report(report: &LayerBarrierReport, path: &Path) -> CliResult<()> {
    let file = BarrierFile::from_report(report)?;
    let mut json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::numeric(format!("barrier report: {e}")))?;
    json.push('\n');
    fs::write(path, json).map_err(|e| CliError::io(path, e))
}

pub fn read_barrier_report(path: &Path) -> CliResult<BarrierFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn write_matrix_csv(m: &NonNegMatrix, path: &Path) -> CliResult<()> {
    let mut out = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|c| m.get(r, c).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Writes `results.csv` next to a temporary sibling and renames it into
/// place, so a failed run never leaves a partial table.
pub fn write_results(rows: &[ResultRow], path: &Path) -> CliResult<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file_mut());
        for row in rows {
            w.serialize(row).map_err(|e| CliError::io(path, e))?;
        }
        if rows.is_empty() {
            w.write_record(ResultRow::HEADER).map_err(|e| CliError::io(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Newline- or comma-separated non-negative integer labels.
pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::data(format!("{}: bad label {t:?}", path.display())))
        })
        .collect()
}

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
