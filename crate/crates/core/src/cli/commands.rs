use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, Twist};
use crate::model::build_model;

use super::config::RunConfig;
use super::report::{LevelEigenvalue, ModelSummary, MomentRow, Report, Timings};
use super::suites::{moment_rows, run_suites, Context};

/// Size of the off-flip coupling injected by `--corrupt-twist`.
pub const CORRUPTION: f64 = 0.1;

pub fn cmd_validate(cfg: &RunConfig) -> Result<()> {
    cfg.validate()
}

pub fn build_space(cfg: &RunConfig, corrupt_twist: bool) -> Result<FockSpace> {
    cfg.validate()?;
    let model = build_model(cfg.spec())?;
    Ok(if corrupt_twist {
        let twist = Twist::from_model(&model).corrupted(CORRUPTION);
        FockSpace::with_twist(model, twist)
    } else {
        FockSpace::new(model)
    })
}

/// Runs the selected suites.  The report depends only on the config.
pub fn cmd_check(cfg: &RunConfig, corrupt_twist: bool) -> Result<(Report, Timings)> {
    let fs = build_space(cfg, corrupt_twist)?;
    let positivity = (0..=fs.truncation())
        .map(|n| LevelEigenvalue {
            level: n,
            min_eigenvalue: fs.kernel().min_eigenvalue(n),
        })
        .collect();
    let moments = if fs.kernel().factor(fs.truncation()).is_ok() {
        moment_rows(&fs, (2 * (fs.truncation() - 1)).min(4))?
    } else {
        Vec::new()
    };
    let ctx = Context::new(
        fs,
        cfg.tolerances.clone(),
        cfg.t_grid.clone(),
        cfg.seed,
        cfg.samples,
    );
    let mut suites = Vec::new();
    let mut timings = Timings::new();
    for (report, secs) in run_suites(&ctx, &cfg.suites()) {
        timings.insert(report.name.clone(), secs);
        suites.push(report);
    }
    let pass = suites.iter().all(|s| s.pass);
    let report = Report {
        model: ModelSummary::from(cfg.spec()),
        seed: cfg.seed,
        suites,
        positivity,
        moments,
        pass,
    };
    Ok((report, timings))
}

/// Writes `report.json` and `timings.json` into `dir`.
pub fn write_outputs(report: &Report, timings: &Timings, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    let mut t = serde_json::to_string_pretty(timings).map_err(Error::from)?;
    t.push('\n');
    std::fs::write(dir.join("timings.json"), t)?;
    Ok(())
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Moments of every coordinate word of length `1..=2 max_order`.
pub fn cmd_moments(cfg: &RunConfig, max_order: usize) -> Result<String> {
    let n = cfg.spec().truncation;
    if max_order == 0 || 2 * max_order > 2 * n.saturating_sub(1) {
        return Err(Error::TruncationOverflow {
            order: 2 * max_order,
            truncation: n,
        });
    }
    let fs = build_space(cfg, false)?;
    let rows: Vec<MomentRow> = moment_rows(&fs, 2 * max_order)?;
    to_csv(&rows)
}

#[derive(Serialize)]
struct ScanRow {
    q: f64,
    level: usize,
    min_eigenvalue: f64,
}

/// Minimum eigenvalue of `P^(n)` for `n = 1..=level` with every `q_ij`
/// set to each grid value in turn.
pub fn cmd_scan(cfg: &RunConfig, q_grid: &[f64], level: usize) -> Result<String> {
    if q_grid.is_empty() {
        return Err(Error::Usage("empty q grid".into()));
    }
    let specs = q_grid
        .iter()
        .map(|&q| {
            let mut spec = cfg.spec().clone();
            for row in spec.q.iter_mut() {
                row.iter_mut().for_each(|x| *x = q);
            }
            spec.truncation = level;
            let v = spec.violations();
            if v.is_empty() {
                Ok(spec)
            } else {
                Err(Error::InvalidSpec(v))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<ScanRow>> = specs
        .par_iter()
        .zip(q_grid)
        .map(|(spec, &q)| {
            let fs = FockSpace::new(build_model(spec)?);
            Ok((1..=level)
                .map(|n| ScanRow {
                    q,
                    level: n,
                    min_eigenvalue: fs.kernel().min_eigenvalue(n),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    to_csv(&rows.into_iter().flatten().collect::<Vec<_>>())
}
