use std::fs;
use std::path::{Path, PathBuf};

use super::protocols::ExperimentReport;
use crate::error::Result;
use crate::io::save_png;

/// Files written by [`write_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub samples: PathBuf,
    pub residuals: PathBuf,
    pub grid: PathBuf,
    pub config: PathBuf,
}

/// Writes `report.csv`, `samples.csv`, `residuals.csv`, `grid.png` and the
/// resolved `config.toml` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<ReportPaths> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        csv: dir.join("report.csv"),
        samples: dir.join("samples.csv"),
        residuals: dir.join("residuals.csv"),
        grid: dir.join("grid.png"),
        config: dir.join("config.toml"),
    };

    let mut w = csv::Writer::from_path(&paths.csv)?;
    w.write_record(["condition", "psnr", "rmse", "ssim"])?;
    for row in &report.rows {
        w.write_record([
            row.condition.clone(),
            row.psnr.to_string(),
            row.rmse.to_string(),
            row.ssim.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths.samples)?;
    w.write_record([
        "condition",
        "category",
        "index",
        "psnr",
        "rmse",
        "ssim",
        "iterations",
        "converged",
    ])?;
    for s in &report.samples {
        w.write_record([
            s.condition.clone(),
            s.category.to_string(),
            s.index.to_string(),
            s.psnr.to_string(),
            s.rmse.to_string(),
            s.ssim.to_string(),
            s.iterations.to_string(),
            s.converged.to_string(),
        ])?;
    }
    w.flush()?;

    write_residuals(&paths.residuals, &report.residuals)?;
    save_png(&paths.grid, &report.grid)?;
    let mut snapshot = format!("# {} protocol, seed {}\n", report.protocol, report.seed);
    snapshot.push_str(&report.config.to_toml()?);
    fs::write(&paths.config, snapshot)?;
    Ok(paths)
}

/// `condition,iter,residual` rows, iterations counted from 1.
pub fn write_residuals(path: impl AsRef<Path>, runs: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["condition", "iter", "residual"])?;
    for (label, history) in runs {
        for (k, r) in history.iter().enumerate() {
            w.write_record([label.clone(), (k + 1).to_string(), r.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
