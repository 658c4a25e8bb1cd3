use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::acquisition::{read_dataset, AcquisitionConfig, KeyValues};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::scalar::Real;

use super::pipeline::{run_pipeline, PipelineKind, PipelineOptions, Stage};

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub pipeline: PipelineKind,
    pub stage: Stage,
    /// Per frame.
    pub mean_ms: f64,
    pub sd_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    pub runs: usize,
    pub frames: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn get(&self, pipeline: PipelineKind, stage: Stage) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.pipeline == pipeline && r.stage == stage)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pipeline,stage,mean_ms,sd_ms\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.6},{:.6}", r.pipeline, r.stage.name(), r.mean_ms, r.sd_ms);
        }
        s
    }
}

/// Times each pipeline `runs` times on the dataset at `path` (loading it
/// afresh every run) on a single worker thread.
pub fn bench<T: Real>(path: &Path, kinds: &[PipelineKind], options: &PipelineOptions, runs: usize) -> Result<TimingReport> {
    if runs == 0 {
        return Err(Error::invalid("bench needs at least one run"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::numerical(format!("cannot start timing worker: {e}")))?;
    pool.install(|| {
        let mut report = TimingReport { runs, ..Default::default() };
        for &kind in kinds {
            let mut samples: Vec<(Stage, Vec<f64>)> = Stage::ALL.iter().map(|&s| (s, Vec::new())).collect();
            for _ in 0..runs {
                let start = std::time::Instant::now();
                let data = read_dataset::<T>(path)?;
                let load = start.elapsed();
                let frames = options.ensemble.as_ref().map_or(data.frames(), |r| r.len()).max(1);
                report.frames = frames;
                let (_, mut times) = run_pipeline(&data, kind, options)?;
                times.add(Stage::Load, load);
                for (stage, v) in samples.iter_mut() {
                    if let Some(d) = times.get(*stage) {
                        let per = if *stage == Stage::Load { data.frames().max(1) } else { frames };
                        v.push(d.as_secs_f64() * 1e3 / per as f64);
                    }
                }
            }
            for (stage, v) in samples {
                if v.is_empty() {
                    continue;
                }
                let (mean_ms, sd_ms) = mean_sd(&v);
                report.rows.push(TimingRow { pipeline: kind, stage, mean_ms, sd_ms });
            }
        }
        Ok(report)
    })
}

/// One `(pipeline, ROI pair, ensemble)` cell of a metrics table; the
/// statistics run over repeated independent realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub pipeline: PipelineKind,
    /// Aperture pattern name for sub-aperture pipelines.
    pub pattern: Option<String>,
    pub roi: String,
    pub ensemble: usize,
    pub snr_db: f64,
    pub snr_sd: f64,
    pub cnr_db: f64,
    pub cnr_sd: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

fn num(v: f64) -> String {
    if v.is_finite() { format!("{v:.4}") } else { "nan".into() }
}

impl MetricsReport {
    pub fn get(&self, pipeline: PipelineKind, pattern: Option<&str>, roi: &str, ensemble: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| {
            r.pipeline == pipeline && r.roi == roi && r.ensemble == ensemble && (pattern.is_none() || r.pattern.as_deref() == pattern)
        })
    }

    /// `pipeline,roi,ensemble,snr_db,snr_sd,cnr_db,cnr_sd`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pipeline,roi,ensemble,snr_db,snr_sd,cnr_db,cnr_sd\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", r.pipeline, r.roi, r.ensemble, num(r.snr_db), num(r.snr_sd), num(r.cnr_db), num(r.cnr_sd));
        }
        s
    }

    /// As [`to_csv`](Self::to_csv) with a `pattern` column after `pipeline`.
    pub fn to_csv_with_pattern(&self) -> String {
        let mut s = String::from("pipeline,pattern,roi,ensemble,snr_db,snr_sd,cnr_db,cnr_sd\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.pipeline,
                r.pattern.as_deref().unwrap_or(""),
                r.roi,
                r.ensemble,
                num(r.snr_db),
                num(r.snr_sd),
                num(r.cnr_db),
                num(r.cnr_sd)
            );
        }
        s
    }
}

struct Cell {
    pipeline: PipelineKind,
    pattern: Option<String>,
    roi: String,
    ensemble: usize,
    snr: Vec<f64>,
    cnr: Vec<f64>,
}

/// SNR and CNR of every realization, grouped by
/// `(pipeline, pattern, roi, ensemble)` in first-seen order.
#[derive(Default)]
pub struct MetricsSamples {
    cells: Vec<Cell>,
}

impl MetricsSamples {
    pub fn push(&mut self, pipeline: PipelineKind, pattern: Option<String>, roi: &str, ensemble: usize, snr: f64, cnr: f64) {
        let found = self
            .cells
            .iter_mut()
            .find(|c| c.pipeline == pipeline && c.pattern == pattern && c.roi == roi && c.ensemble == ensemble);
        match found {
            Some(c) => {
                c.snr.push(snr);
                c.cnr.push(cnr);
            }
            None => self.cells.push(Cell { pipeline, pattern, roi: roi.to_string(), ensemble, snr: vec![snr], cnr: vec![cnr] }),
        }
    }

    pub fn report(self) -> MetricsReport {
        let rows = self
            .cells
            .into_iter()
            .map(|c| {
                let (snr_db, snr_sd) = mean_sd(&c.snr);
                let (cnr_db, cnr_sd) = mean_sd(&c.cnr);
                let repeats = c.snr.len();
                MetricsRow { pipeline: c.pipeline, pattern: c.pattern, roi: c.roi, ensemble: c.ensemble, snr_db, snr_sd, cnr_db, cnr_sd, repeats }
            })
            .collect();
        MetricsReport { rows }
    }
}

/// Record of a run written next to its outputs.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: KeyValues,
    pub outputs: Vec<PathBuf>,
}

pub const MANIFEST_NAME: &str = "manifest.txt";

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut entries = KeyValues::new();
        entries.set("command", command);
        entries.set("tool_version", env!("CARGO_PKG_VERSION"));
        entries.set("tool_name", env!("CARGO_PKG_NAME"));
        Self { entries, outputs: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.set(key, value);
    }

    pub fn config(&mut self, config: &AcquisitionConfig) {
        for (k, v) in config.to_key_values().iter() {
            self.entries.set(&format!("config.{k}"), v);
        }
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn to_text(&self) -> String {
        let mut kv = self.entries.clone();
        for (i, p) in self.outputs.iter().enumerate() {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            kv.set(&format!("output.{i}"), name);
        }
        kv.to_text()
    }

    /// Writes `manifest.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        write_atomic(&path, self.to_text().as_bytes())?;
        Ok(path)
    }

    /// Writes `<file>.manifest.txt` next to a single output file.
    pub fn write_beside(&self, file: &Path) -> Result<PathBuf> {
        let mut name = file.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.txt");
        let path = file.with_file_name(name);
        write_atomic(&path, self.to_text().as_bytes())?;
        Ok(path)
    }
}
