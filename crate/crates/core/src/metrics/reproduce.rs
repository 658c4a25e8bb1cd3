use std::path::PathBuf;

use crate::acquisition::{format_rois, write_dataset, AcquisitionConfig};
use crate::compounding::FmasVariant;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::simulator::{BuiltinScene, SceneSetup};
use crate::subaperture::{AperturePattern, SuppressorMode};

use super::image::{export_image, export_mask, write_power_image};
use super::pipeline::{run_pipelines, PipelineKind, PipelineOptions};
use super::quality::roi_stats;
use super::report::{bench, Manifest, MetricsReport, MetricsSamples, TimingReport};

pub const TABLE_I_NAME: &str = "table_i.csv";
pub const TABLE_II_NAME: &str = "table_ii.csv";
pub const TABLE_V_NAME: &str = "table_v_timing.csv";

/// Settings for a full table reproduction.
#[derive(Debug, Clone)]
pub struct ReproduceConfig {
    pub config: AcquisitionConfig,
    /// Scene scored for the pipeline comparison.
    pub scene: BuiltinScene,
    /// Scene scored for the aperture-pattern comparison.
    pub pattern_scene: BuiltinScene,
    pub seed: u64,
    /// Strictly increasing ensemble lengths; lengths beyond a scene's frame
    /// count are skipped for that scene.
    pub ensembles: Vec<usize>,
    /// Independent realizations averaged per table cell.
    pub repeats: usize,
    /// First entry is used for the pipeline comparison.
    pub patterns: Vec<AperturePattern>,
    pub variant: FmasVariant,
    pub suppressor: SuppressorMode,
    pub dynamic_range_db: f64,
    pub timing_runs: usize,
    pub timing_frames: usize,
    pub out_dir: PathBuf,
}

impl ReproduceConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config: AcquisitionConfig::desk(),
            scene: BuiltinScene::TwoChannels,
            pattern_scene: BuiltinScene::GratingLobe,
            seed: 1,
            ensembles: vec![25, 50, 100, 200],
            repeats: 5,
            patterns: vec![AperturePattern::ALTERNATE, AperturePattern::QUADS, AperturePattern::PAIRS],
            variant: FmasVariant::default(),
            suppressor: SuppressorMode::default(),
            dynamic_range_db: 50.0,
            timing_runs: 5,
            timing_frames: 10,
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.ensembles.is_empty() || self.ensembles[0] == 0 || self.ensembles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("ensemble lengths must be positive and strictly increasing"));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats ≥ 1"));
        }
        if self.patterns.is_empty() {
            return Err(Error::invalid("at least one aperture pattern"));
        }
        if !(self.dynamic_range_db > 0.0) {
            return Err(Error::invalid("dynamic range must be positive"));
        }
        if self.timing_frames == 0 {
            return Err(Error::invalid("timing_frames ≥ 1"));
        }
        Ok(())
    }

    /// Seed of realization `repeat`.
    pub fn realization_seed(&self, repeat: usize) -> u64 {
        self.seed.wrapping_add(repeat as u64)
    }
}

#[derive(Debug, Clone)]
pub struct ReproduceOutput {
    pub table_i: MetricsReport,
    pub table_ii: MetricsReport,
    pub timing: Option<TimingReport>,
    /// Every file written, manifest last.
    pub files: Vec<PathBuf>,
}

fn options_for(setup: &SceneSetup, cfg: &ReproduceConfig, pattern: AperturePattern) -> PipelineOptions {
    let mut o = PipelineOptions::new(setup.grid);
    o.apodization = setup.apodization;
    o.clutter = setup.clutter;
    o.pattern = pattern;
    o.variant = cfg.variant;
    o.suppressor = cfg.suppressor;
    o
}

struct Sweep<'a> {
    cfg: &'a ReproduceConfig,
    files: Vec<PathBuf>,
}

impl Sweep<'_> {
    fn ensembles(&self, frames: usize) -> Vec<usize> {
        self.cfg.ensembles.iter().copied().filter(|&n| n <= frames).collect()
    }

    /// Runs `kinds` on every realization of `scene` for each pattern; images
    /// of the first realization are exported.
    fn run(
        &mut self,
        scene: BuiltinScene,
        kinds: &[PipelineKind],
        patterns: &[AperturePattern],
        label_patterns: bool,
    ) -> Result<MetricsReport> {
        let cfg = self.cfg;
        let mut samples = MetricsSamples::default();
        for repeat in 0..cfg.repeats {
            let setup = scene.setup(&cfg.config, cfg.realization_seed(repeat))?;
            let ensembles = self.ensembles(setup.frames);
            if ensembles.is_empty() {
                return Err(Error::invalid(format!("scene `{}` has fewer frames than every ensemble length", setup.name)));
            }
            if repeat == 0 {
                let path = cfg.out_dir.join(format!("{}_rois.txt", setup.name));
                let rois: Vec<_> = setup.rois.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
                write_atomic(&path, format_rois(&rois).as_bytes())?;
                self.files.push(path);
            }
            let data = setup.simulate::<f32>()?;
            for &pattern in patterns {
                let mut options = options_for(&setup, cfg, pattern);
                let tag = label_patterns.then(|| pattern.name());
                for &ensemble in &ensembles {
                    options.ensemble = Some(0..ensemble);
                    let run = run_pipelines(&data, kinds, &options)?;
                    for img in &run.images {
                        for (a, b) in &setup.rois {
                            let stats = roi_stats(&img.image, a, b)?;
                            samples.push(img.kind, tag.clone(), &a.label, ensemble, stats.snr_db()?, stats.cnr_db()?);
                        }
                        if repeat == 0 {
                            let stem = match &tag {
                                Some(_) => format!("{}_{}-{}_{}", setup.name, img.kind, pattern_token(pattern), ensemble),
                                None => format!("{}_{}_{}", setup.name, img.kind, ensemble),
                            };
                            self.export(&stem, img)?;
                        }
                    }
                }
            }
        }
        Ok(samples.report())
    }

    fn export(&mut self, stem: &str, img: &super::pipeline::PipelineImage<f32>) -> Result<()> {
        let dir = &self.cfg.out_dir;
        let pgm = dir.join(format!("{stem}.pgm"));
        export_image(&img.image, self.cfg.dynamic_range_db, &pgm)?;
        let raw = dir.join(format!("{stem}.pim"));
        write_power_image(&img.image, &raw)?;
        self.files.push(pgm);
        self.files.push(raw);
        if let Some(mask) = &img.mask {
            let m = dir.join(format!("{stem}_mask.pgm"));
            export_mask(mask, &m)?;
            self.files.push(m);
        }
        Ok(())
    }
}

/// `1100` for the pairs pattern.
pub fn pattern_token(p: AperturePattern) -> String {
    let k = p.run_length();
    format!("{}{}", "1".repeat(k), "0".repeat(k))
}

/// Runs the pipeline comparison, the aperture-pattern comparison and the
/// timing harness, writing CSV tables, images and a manifest into
/// `cfg.out_dir`. Timing is skipped when `cfg.timing_runs` is 0.
pub fn reproduce_tables(cfg: &ReproduceConfig) -> Result<ReproduceOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut sweep = Sweep { cfg, files: Vec::new() };

    let table_i = sweep.run(cfg.scene, &PipelineKind::ALL, &cfg.patterns[..1], false)?;
    let path = cfg.out_dir.join(TABLE_I_NAME);
    write_atomic(&path, table_i.to_csv().as_bytes())?;
    sweep.files.push(path);

    let sub = [PipelineKind::Asap, PipelineKind::AsapFmas, PipelineKind::Samas];
    let table_ii = sweep.run(cfg.pattern_scene, &sub, &cfg.patterns, true)?;
    let path = cfg.out_dir.join(TABLE_II_NAME);
    write_atomic(&path, table_ii.to_csv_with_pattern().as_bytes())?;
    sweep.files.push(path);

    let timing = if cfg.timing_runs > 0 { Some(timing_table(cfg, &mut sweep.files)?) } else { None };

    let mut manifest = Manifest::new("reproduce");
    manifest.config(&cfg.config);
    manifest.set("scene", cfg.scene.name());
    manifest.set("pattern_scene", cfg.pattern_scene.name());
    manifest.set("seed", cfg.seed);
    manifest.set(
        "realization_seeds",
        (0..cfg.repeats).map(|r| cfg.realization_seed(r).to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.set("ensembles", cfg.ensembles.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","));
    manifest.set("repeats", cfg.repeats);
    manifest.set("patterns", cfg.patterns.iter().map(|p| p.name()).collect::<Vec<_>>().join(","));
    manifest.set("fmas_variant", cfg.variant.name());
    manifest.set("suppressor", cfg.suppressor.name());
    manifest.set("dynamic_range_db", cfg.dynamic_range_db);
    manifest.set("timing_runs", cfg.timing_runs);
    manifest.set("timing_frames", cfg.timing_frames);
    manifest.set("sample_type", "f32");
    for f in &sweep.files {
        manifest.output(f);
    }
    let m = manifest.write(&cfg.out_dir)?;
    sweep.files.push(m);
    Ok(ReproduceOutput { table_i, table_ii, timing, files: sweep.files })
}

/// Benchmarks every pipeline on the first `timing_frames` frames of the
/// main scene, stored as a temporary dataset file.
fn timing_table(cfg: &ReproduceConfig, files: &mut Vec<PathBuf>) -> Result<TimingReport> {
    let setup = cfg.scene.setup(&cfg.config, cfg.seed)?;
    let mut short = setup.clone();
    short.frames = cfg.timing_frames.min(setup.frames);
    let data = short.simulate::<f32>()?;
    let dir = tempfile::tempdir_in(&cfg.out_dir)?;
    let path = dir.path().join("timing.sbf");
    write_dataset(&data, &path)?;
    let mut options = options_for(&setup, cfg, cfg.patterns[0]);
    options.ensemble = None;
    let report = bench::<f32>(&path, &PipelineKind::ALL, &options, cfg.timing_runs)?;
    let out = cfg.out_dir.join(TABLE_V_NAME);
    write_atomic(&out, report.to_csv().as_bytes())?;
    files.push(out);
    Ok(report)
}
