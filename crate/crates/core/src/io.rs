//! CSV and JSON artifacts written by the command-line pipelines.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{BenchRow, MultiplicityReport};
use crate::error::Result;
use crate::solver::{Solution, SolutionKind};

/// JSON sidecar stored next to each solution CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionMeta {
    pub kind: SolutionKind,
    pub residual_sup: f64,
    pub iterations: usize,
    pub final_eps: f64,
    pub final_eta: f64,
    pub s: f64,
    pub gamma: f64,
    pub n: usize,
    pub r_trunc: f64,
    pub converged: bool,
}

impl SolutionMeta {
    pub fn new(sol: &Solution, s: f64) -> Self {
        SolutionMeta {
            kind: sol.kind,
            residual_sup: sol.residual_sup,
            iterations: sol.iterations,
            final_eps: sol.final_eps,
            final_eta: sol.final_eta,
            s,
            gamma: sol.gamma,
            n: sol.u.grid().n_interior(),
            r_trunc: sol.u.grid().r_trunc(),
            converged: sol.converged,
        }
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns the CSV path.
pub fn write_solution(dir: &Path, stem: &str, sol: &Solution, s: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let mut w = BufWriter::new(File::create(&csv)?);
    sol.u.write_csv(&mut w)?;
    w.flush()?;
    write_json(&dir.join(format!("{stem}.json")), &SolutionMeta::new(sol, s))?;
    Ok(csv)
}

/// Report JSON with candidate files given relative to the report.
pub fn multiplicity_json(report: &MultiplicityReport, files: &[String]) -> Value {
    let candidates: Vec<Value> = report
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({
                "label": c.label,
                "residual": c.residual,
                "file": files.get(i),
            })
        })
        .collect();
    json!({
        "case_id": report.case_id,
        "s": report.s,
        "gamma": report.gamma,
        "n": report.n,
        "candidates": candidates,
        "pairwise_sup_distances": report.pairwise,
        "distinct_count": report.distinct_count,
        "assertions": report.assertions,
    })
}

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n,s,direct_seconds,fast_seconds,max_rel_diff")?;
    for r in rows {
        writeln!(w, "{},{},{:.6e},{:.6e},{:.3e}", r.n, r.s, r.direct_seconds, r.fast_seconds, r.max_rel_diff)?;
    }
    w.flush()?;
    Ok(())
}
