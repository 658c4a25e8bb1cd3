//! Image-quality metrics, image export, pipeline orchestration, timing
//! and table reproduction.

mod image;
mod pipeline;
mod quality;
mod report;
mod reproduce;

pub use image::{
    decode_pgm, decode_power_image, encode_pgm, encode_power_image, export_image, export_mask, gray_level,
    log_compress, read_power_image, write_power_image,
};
pub use pipeline::{
    run_pipeline, run_pipelines, PipelineImage, PipelineKind, PipelineOptions, PipelineRun, Stage, StageTimes,
};
pub use quality::{
    bilinear, compute_cnr, compute_snr, line_profile, roi_pair_pixels, roi_stats, RoiStats, MIN_ROI_PIXELS,
};
pub use report::{
    bench, mean_sd, Manifest, MetricsReport, MetricsRow, MetricsSamples, TimingReport, TimingRow, MANIFEST_NAME,
};
pub use reproduce::{
    pattern_token, reproduce_tables, ReproduceConfig, ReproduceOutput, TABLE_II_NAME, TABLE_I_NAME, TABLE_V_NAME,
};
