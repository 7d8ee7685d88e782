//! On-disk artifacts: JSON report, flat CSV mirrors, residual histories,
//! sweep grids and matrices. Writes go through a temp file and a rename.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::eval::{EvaluationReport, SweepGrid};
use crate::solver::ResidualRecord;
use crate::Matrix;

/// Writes `bytes` to `path` atomically (sibling temp file, then rename).
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn comment_lines(out: &mut String, comments: &[String]) {
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn report_json(report: &EvaluationReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// One row per `(method, percentage)` cell.
pub fn report_csv(report: &EvaluationReport, comments: &[String]) -> String {
    let mut out = String::new();
    comment_lines(&mut out, comments);
    out.push_str("method,percentage,rmse_mean,rmse_std,r_mean,r_std,completed,failed\n");
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.method,
            c.percentage,
            opt(c.rmse_mean),
            opt(c.rmse_std),
            opt(c.r_mean),
            opt(c.r_std),
            c.completed,
            c.failed
        ));
    }
    out
}

/// `iteration,residual1,residual2,mu`.
pub fn residual_csv(history: &[ResidualRecord], comments: &[String]) -> String {
    let mut out = String::new();
    comment_lines(&mut out, comments);
    out.push_str("iteration,residual1,residual2,mu\n");
    for r in history {
        out.push_str(&format!("{},{:e},{:e},{:e}\n", r.iteration, r.primal, r.consensus, r.mu));
    }
    out
}

/// `lambda,beta,rmse`; failed cells leave `rmse` empty.
pub fn sweep_csv(grid: &SweepGrid, comments: &[String]) -> String {
    let mut out = String::new();
    comment_lines(&mut out, comments);
    out.push_str("lambda,beta,rmse\n");
    for c in &grid.cells {
        out.push_str(&format!("{},{},{}\n", c.lambda, c.beta, opt(c.rmse)));
    }
    out
}

/// Plain numeric CSV, one matrix row per line.
pub fn matrix_csv(m: &Matrix, comments: &[String]) -> String {
    let mut out = String::new();
    comment_lines(&mut out, comments);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
