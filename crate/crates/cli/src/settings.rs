//! Run settings: acquisition fields plus pipeline and sweep keys, read from a
//! key-value file and `--set` overrides.

use std::ops::Range;
use std::path::Path;

use pwdoppler::acquisition::{AcquisitionConfig, KeyValues};
use pwdoppler::beamformer::ApodizationWindow;
use pwdoppler::clutter::{ClutterFilter, RollingWindow, SvdRank, SvdThresholds};
use pwdoppler::metrics::{Manifest, PipelineKind, PipelineOptions};
use pwdoppler::simulator::{BuiltinScene, SceneSetup};
use pwdoppler::subaperture::AsapPowerMode;
use pwdoppler::{AperturePattern, ApodizationSpec, Error, FmasVariant, ImageGrid, Result, SuppressorMode};

const CONFIG_KEYS: &[&str] = &[
    "num_elements",
    "pitch",
    "center_frequency",
    "transmit_frequency",
    "sampling_frequency",
    "sound_speed",
    "angles",
    "prf",
    "frame_rate",
    "tukey_alpha",
];

const RUN_KEYS: &[&str] = &[
    "scene",
    "seed",
    "frames",
    "noise_sigma",
    "contrast",
    "intra_frame_motion",
    "pipelines",
    "pattern",
    "fmas_variant",
    "suppressor",
    "asap_power",
    "apodization",
    "f_number",
    "clutter",
    "grid",
    "ensemble",
    "dynamic_range_db",
    "precision",
    "runs",
    "repeats",
    "ensembles",
    "patterns",
    "pattern_scene",
    "timing_runs",
    "timing_frames",
];

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub kv: KeyValues,
}

impl Settings {
    /// Reads `file` (if any) and applies `overrides` in order. Unknown keys
    /// are rejected.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut kv = match file {
            Some(p) => KeyValues::load(p)?,
            None => KeyValues::new(),
        };
        for o in overrides {
            kv.set_assignment(o)?;
        }
        for (k, _) in kv.iter() {
            if !CONFIG_KEYS.contains(&k) && !RUN_KEYS.contains(&k) {
                return Err(invalid(format!("unknown setting `{k}`")));
            }
        }
        Ok(Self { kv })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.kv.get(key)
    }

    fn parsed<V: std::str::FromStr>(&self, key: &str, default: V) -> Result<V> {
        Ok(self.kv.parsed(key)?.unwrap_or(default))
    }

    /// Acquisition config starting from the desk defaults.
    pub fn config(&self) -> Result<AcquisitionConfig> {
        let c = AcquisitionConfig::from_key_values(&self.kv)?;
        c.validate()?;
        Ok(c)
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed("seed", 1)
    }

    pub fn builtin_scene(&self) -> Result<Option<BuiltinScene>> {
        self.get("scene").map(BuiltinScene::parse).transpose()
    }

    pub fn precision(&self) -> Result<Precision> {
        match self.get("precision").unwrap_or("f32") {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(invalid(format!("precision must be f32 or f64, got `{other}`"))),
        }
    }

    pub fn pipelines(&self) -> Result<Vec<PipelineKind>> {
        match self.get("pipelines") {
            None | Some("all") => Ok(PipelineKind::ALL.to_vec()),
            Some(list) => list.split(',').map(|s| PipelineKind::parse(s.trim())).collect(),
        }
    }

    pub fn dynamic_range_db(&self) -> Result<f64> {
        self.parsed("dynamic_range_db", 50.0)
    }

    pub fn runs(&self) -> Result<usize> {
        self.parsed("runs", 5)
    }

    pub fn ensemble(&self, frames: usize) -> Result<Range<usize>> {
        let r = match self.get("ensemble") {
            None | Some("all") => 0..frames,
            Some(s) => match s.split_once("..") {
                Some((a, b)) => {
                    let a = a.trim().parse().map_err(|_| invalid(format!("bad ensemble `{s}`")))?;
                    let b = b.trim().parse().map_err(|_| invalid(format!("bad ensemble `{s}`")))?;
                    a..b
                }
                None => 0..s.trim().parse().map_err(|_| invalid(format!("bad ensemble `{s}`")))?,
            },
        };
        if r.is_empty() || r.end > frames {
            return Err(invalid(format!("ensemble {}..{} does not fit {frames} frames", r.start, r.end)));
        }
        Ok(r)
    }

    /// Pipeline options: explicit keys win over the defaults of `scene`.
    pub fn pipeline_options(&self, scene: Option<&SceneSetup>, config: &AcquisitionConfig) -> Result<PipelineOptions> {
        let grid = match self.get("grid") {
            Some(g) => parse_grid(g)?,
            None => match scene {
                Some(s) => s.grid,
                None => default_grid(config)?,
            },
        };
        let mut o = PipelineOptions::new(grid);
        if let Some(s) = scene {
            o.apodization = s.apodization;
            o.clutter = s.clutter;
        }
        if let Some(a) = self.get("apodization") {
            o.apodization.window = parse_window(a)?;
        }
        if let Some(f) = self.kv.parsed::<f64>("f_number")? {
            o.apodization.f_number = f;
        }
        o.apodization.validate()?;
        if let Some(c) = self.get("clutter") {
            o.clutter = parse_clutter(c, config.frame_rate)?;
        }
        if let Some(p) = self.get("pattern") {
            o.pattern = AperturePattern::parse(p)?;
        }
        if let Some(v) = self.get("fmas_variant") {
            o.variant = FmasVariant::parse(v)?;
        }
        if let Some(s) = self.get("suppressor") {
            o.suppressor = SuppressorMode::parse(s)?;
        }
        if let Some(m) = self.get("asap_power") {
            o.asap_power = match m {
                "real" => AsapPowerMode::RealPart,
                "magnitude" => AsapPowerMode::Magnitude,
                other => return Err(invalid(format!("asap_power must be real or magnitude, got `{other}`"))),
            };
        }
        Ok(o)
    }

    /// Records every setting (resolved config included) in `manifest`.
    pub fn record(&self, manifest: &mut Manifest, config: &AcquisitionConfig) {
        manifest.config(config);
        for (k, v) in self.kv.iter() {
            if !CONFIG_KEYS.contains(&k) {
                manifest.set(&format!("setting.{k}"), v);
            }
        }
    }
}

/// `x_min,x_max,z_min,z_max,nx,nz` in metres and pixels.
pub fn parse_grid(s: &str) -> Result<ImageGrid> {
    let f: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || invalid(format!("grid must be `x_min,x_max,z_min,z_max,nx,nz`, got `{s}`"));
    if f.len() != 6 {
        return Err(bad());
    }
    let v: Vec<f64> = f[..4].iter().map(|x| x.parse().map_err(|_| bad())).collect::<Result<_>>()?;
    let nx = f[4].parse().map_err(|_| bad())?;
    let nz = f[5].parse().map_err(|_| bad())?;
    ImageGrid::new(v[0], v[1], v[2], v[3], nx, nz)
}

/// Aperture-wide grid from 5 to 30 mm deep at half-pitch lateral spacing.
fn default_grid(config: &AcquisitionConfig) -> Result<ImageGrid> {
    let ha = config.half_aperture();
    let nx = (2.0 * ha / (0.5 * config.pitch)).round() as usize + 1;
    let dz = config.wavelength() / 2.0;
    let nz = (25e-3 / dz).round() as usize + 1;
    ImageGrid::new(-ha, ha, 5e-3, 30e-3, nx, nz)
}

pub fn parse_window(s: &str) -> Result<ApodizationWindow> {
    match s.split_once(':') {
        None if s == "rectangular" => Ok(ApodizationWindow::Rectangular),
        None if s == "hann" => Ok(ApodizationWindow::Hann),
        Some(("tukey", a)) => {
            let a = a.parse().map_err(|_| invalid(format!("bad Tukey alpha `{a}`")))?;
            let w = ApodizationWindow::Tukey(a);
            ApodizationSpec { window: w, f_number: 0.0 }.validate()?;
            Ok(w)
        }
        _ => Err(invalid(format!("apodization must be rectangular, hann or tukey:<alpha>, got `{s}`"))),
    }
}

/// `none`, `svd_knee`, `svd:<low>[:<high>]`, `rolling:<frames>` or
/// `rolling_hz:<cutoff>`.
pub fn parse_clutter(s: &str, frame_rate: f64) -> Result<ClutterFilter> {
    let bad = || invalid(format!("unrecognised clutter filter `{s}`"));
    let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["none"] => Ok(ClutterFilter::None),
        ["svd_knee"] => Ok(ClutterFilter::Svd(SvdRank::Knee { high_cut: None })),
        ["svd", lo] => Ok(ClutterFilter::Svd(SvdRank::Fixed(SvdThresholds::new(num(lo)?, None)))),
        ["svd", lo, hi] => Ok(ClutterFilter::Svd(SvdRank::Fixed(SvdThresholds::new(num(lo)?, Some(num(hi)?))))),
        ["rolling", w] => Ok(ClutterFilter::Rolling(RollingWindow::new(num(w)?)?)),
        ["rolling_hz", f] => {
            let f: f64 = f.parse().map_err(|_| bad())?;
            Ok(ClutterFilter::Rolling(RollingWindow::for_cutoff(f, frame_rate, 1000)?))
        }
        _ => Err(bad()),
    }
}

pub fn parse_list<V>(s: Option<&str>, item: impl Fn(&str) -> Result<V>) -> Result<Option<Vec<V>>> {
    s.map(|s| s.split(',').map(|t| item(t.trim())).collect()).transpose()
}
