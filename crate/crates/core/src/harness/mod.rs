//! Metrics, experiment protocols and report output.
//!
//! LPIPS and FID are not reported: both need pretrained perceptual networks.

pub mod config;
pub mod metrics;
pub mod protocols;
pub mod report;

pub use config::{ExperimentConfig, Protocol, ReportConfig, SceneConfig};
pub use metrics::{psnr, psnr_from_rmse, rmse, ssim, PSNR_CAP_DB};
pub use protocols::{
    geometry_conditions, item_noise_seed, luminance_offsets, noise_floor_psnr, reconstruct, run_ablation,
    run_geometry_sweep, run_luminance_sweep, test_corpus, CorpusItem, ExperimentReport, GeometryCondition, MetricRow,
    RunOutput, Sample,
};
pub use report::{write_report, write_residuals, ReportPaths};
