use std::fmt;
use std::ops::Range;
use std::time::{Duration, Instant};

use crate::acquisition::{ChannelDataSet, ImageGrid};
use crate::beamformer::{beamform_stacks_with, AnalyticImageStack, ApodizationSpec, DasBeamformer, FrameSeries};
use crate::clutter::{filter_dataset, ClutterFilter, SvdThresholds};
use crate::compounding::{coherent_compound, fmas_compound, FmasVariant, PowerImage};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::subaperture::{
    apply_suppressor, asap_power_with, ensemble_mean, frame_products, sidelobe_suppressor, split_aperture,
    AperturePattern, AsapPowerMode, CorrelationImage, SuppressorMask, SuppressorMode,
};

/// One of the five image-formation paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PipelineKind {
    PdCc,
    PdFmas,
    Asap,
    AsapFmas,
    Samas,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 5] =
        [PipelineKind::PdCc, PipelineKind::PdFmas, PipelineKind::Asap, PipelineKind::AsapFmas, PipelineKind::Samas];

    pub fn name(&self) -> &'static str {
        match self {
            PipelineKind::PdCc => "pd_cc",
            PipelineKind::PdFmas => "pd_fmas",
            PipelineKind::Asap => "asap",
            PipelineKind::AsapFmas => "asap_fmas",
            PipelineKind::Samas => "samas",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown pipeline `{s}`")))
    }

    pub fn uses_subapertures(&self) -> bool {
        matches!(self, PipelineKind::Asap | PipelineKind::AsapFmas | PipelineKind::Samas)
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub grid: ImageGrid,
    pub apodization: ApodizationSpec,
    pub pattern: AperturePattern,
    pub variant: FmasVariant,
    pub suppressor: SuppressorMode,
    pub asap_power: AsapPowerMode,
    pub clutter: ClutterFilter,
    /// Frames used; `None` takes the whole dataset.
    pub ensemble: Option<Range<usize>>,
}

impl PipelineOptions {
    pub fn new(grid: ImageGrid) -> Self {
        Self {
            grid,
            apodization: ApodizationSpec::default(),
            pattern: AperturePattern::default(),
            variant: FmasVariant::default(),
            suppressor: SuppressorMode::default(),
            asap_power: AsapPowerMode::default(),
            clutter: ClutterFilter::None,
            ensemble: None,
        }
    }
}

/// Timed processing stage. `Beamform` spans every stage from DAS to the
/// suppressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Load,
    Clutter,
    Beamform,
    Das,
    Combine,
    Correlation,
    Ensemble,
    Suppressor,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Load,
        Stage::Clutter,
        Stage::Beamform,
        Stage::Das,
        Stage::Combine,
        Stage::Correlation,
        Stage::Ensemble,
        Stage::Suppressor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Load => "load",
            Stage::Clutter => "clutter",
            Stage::Beamform => "beamform",
            Stage::Das => "das",
            Stage::Combine => "combine",
            Stage::Correlation => "correlation",
            Stage::Ensemble => "ensemble",
            Stage::Suppressor => "suppressor",
        }
    }

    /// Stages nested inside [`Stage::Beamform`].
    pub fn is_beamform_substage(&self) -> bool {
        matches!(self, Stage::Das | Stage::Combine | Stage::Correlation | Stage::Ensemble | Stage::Suppressor)
    }
}

/// Accumulated wall time per stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimes {
    totals: Vec<(Stage, Duration)>,
}

impl StageTimes {
    pub fn add(&mut self, stage: Stage, d: Duration) {
        match self.totals.iter_mut().find(|(s, _)| *s == stage) {
            Some((_, t)) => *t += d,
            None => self.totals.push((stage, d)),
        }
    }

    pub fn time<R>(&mut self, stage: Stage, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.add(stage, start.elapsed());
        r
    }

    pub fn get(&self, stage: Stage) -> Option<Duration> {
        self.totals.iter().find(|(s, _)| *s == stage).map(|(_, d)| *d)
    }

    pub fn stages(&self) -> impl Iterator<Item = (Stage, Duration)> + '_ {
        self.totals.iter().copied()
    }
}

/// Power image of one pipeline; SAMAS also returns its suppressor.
#[derive(Debug, Clone)]
pub struct PipelineImage<T> {
    pub kind: PipelineKind,
    pub image: PowerImage<T>,
    pub mask: Option<SuppressorMask<T>>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun<T> {
    pub images: Vec<PipelineImage<T>>,
    pub times: StageTimes,
    /// Number of DAS passes over the channel data.
    pub beamform_passes: usize,
    /// SVD cut actually applied, when the clutter filter is an SVD.
    pub svd_thresholds: Option<SvdThresholds>,
    pub frames: usize,
}

impl<T: Real> PipelineRun<T> {
    pub fn image(&self, kind: PipelineKind) -> Option<&PowerImage<T>> {
        self.images.iter().find(|i| i.kind == kind).map(|i| &i.image)
    }
}

/// Intermediates shared between pipelines of one run.
struct Shared<'a, T: Real> {
    full: Option<&'a AnalyticImageStack<T>>,
    subs: Option<(&'a AnalyticImageStack<T>, &'a AnalyticImageStack<T>)>,
    variant: FmasVariant,
    asap: Option<CorrelationImage<T>>,
    asap_fmas: Option<CorrelationImage<T>>,
}

fn correlate<T: Real, V: crate::compounding::PixelValue<T>>(
    times: &mut StageTimes,
    a: &FrameSeries<V>,
    b: &FrameSeries<V>,
) -> Result<CorrelationImage<T>> {
    let n = a.frames();
    let products = times.time(Stage::Correlation, || frame_products(a, b, 0..n))?;
    times.time(Stage::Ensemble, || ensemble_mean(&products))
}

fn self_power<T: Real>(r: CorrelationImage<T>) -> Result<PowerImage<T>> {
    PowerImage::new(r.grid, r.values.iter().map(|v| v.re.max(T::zero())).collect(), r.ensemble_length)
}

impl<T: Real> Shared<'_, T> {
    fn full(&self) -> &AnalyticImageStack<T> {
        self.full.expect("full-aperture stack requested")
    }

    fn subs(&self) -> (&AnalyticImageStack<T>, &AnalyticImageStack<T>) {
        self.subs.expect("sub-aperture stacks requested")
    }

    fn asap(&mut self, times: &mut StageTimes) -> Result<CorrelationImage<T>> {
        if let Some(r) = &self.asap {
            return Ok(r.clone());
        }
        let (s1, s2) = self.subs();
        let c1 = times.time(Stage::Combine, || coherent_compound(s1))?;
        let c2 = times.time(Stage::Combine, || coherent_compound(s2))?;
        let r: CorrelationImage<T> = correlate(times, &c1, &c2)?;
        self.asap = Some(r.clone());
        Ok(r)
    }

    fn asap_fmas(&mut self, times: &mut StageTimes) -> Result<CorrelationImage<T>> {
        if let Some(r) = &self.asap_fmas {
            return Ok(r.clone());
        }
        let (s1, s2) = self.subs();
        let v = self.variant;
        let f1 = times.time(Stage::Combine, || fmas_compound(s1, v))?;
        let f2 = times.time(Stage::Combine, || fmas_compound(s2, v))?;
        let r: CorrelationImage<T> = correlate(times, &f1, &f2)?;
        self.asap_fmas = Some(r.clone());
        Ok(r)
    }
}

/// Runs several pipelines on one dataset with a single DAS pass shared by
/// all of them.
pub fn run_pipelines<T: Real>(
    data: &ChannelDataSet<T>,
    kinds: &[PipelineKind],
    options: &PipelineOptions,
) -> Result<PipelineRun<T>> {
    if kinds.is_empty() {
        return Err(Error::invalid("no pipeline selected"));
    }
    let mut times = StageTimes::default();
    let sliced;
    let data = match &options.ensemble {
        Some(r) if *r != (0..data.frames()) => {
            if r.is_empty() {
                return Err(Error::invalid("empty ensemble"));
            }
            sliced = data.slice_frames(r.clone())?;
            &sliced
        }
        _ => data,
    };
    if data.frames() == 0 {
        return Err(Error::invalid("empty ensemble"));
    }
    let (filtered, svd_thresholds) = times.time(Stage::Clutter, || filter_dataset(data, &options.clutter))?;

    let need_full = kinds.iter().any(|k| !k.uses_subapertures());
    let need_sub = kinds.iter().any(|k| k.uses_subapertures());
    let split = if need_sub { Some(split_aperture(data.config().num_elements, options.pattern)?) } else { None };
    let mut masks = Vec::new();
    if need_full {
        masks.push(None);
    }
    if let Some((m1, m2)) = &split {
        masks.push(Some(m1));
        masks.push(Some(m2));
    }

    let beam_start = Instant::now();
    let stacks = times.time(Stage::Das, || -> Result<_> {
        let bf = DasBeamformer::for_dataset(&filtered, &options.grid, &options.apodization)?;
        beamform_stacks_with(&bf, &filtered, &masks, true)
    })?;
    let mut shared = Shared {
        full: need_full.then(|| &stacks[0]),
        subs: need_sub.then(|| {
            let o = usize::from(need_full);
            (&stacks[o], &stacks[o + 1])
        }),
        variant: options.variant,
        asap: None,
        asap_fmas: None,
    };

    let mut images = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let (image, mask) = match kind {
            PipelineKind::PdCc => {
                let c = times.time(Stage::Combine, || coherent_compound(shared.full()))?;
                (self_power(correlate::<T, Cplx<T>>(&mut times, &c, &c)?)?, None)
            }
            PipelineKind::PdFmas => {
                let f = times.time(Stage::Combine, || fmas_compound(shared.full(), options.variant))?;
                (self_power(correlate::<T, T>(&mut times, &f, &f)?)?, None)
            }
            PipelineKind::Asap => {
                let r = shared.asap(&mut times)?;
                (times.time(Stage::Ensemble, || asap_power_with(&r, options.asap_power)), None)
            }
            PipelineKind::AsapFmas => {
                let r = shared.asap_fmas(&mut times)?;
                (times.time(Stage::Ensemble, || asap_power_with(&r, options.asap_power)), None)
            }
            PipelineKind::Samas => {
                let ra = shared.asap(&mut times)?;
                let rf = shared.asap_fmas(&mut times)?;
                let power = asap_power_with(&rf, AsapPowerMode::RealPart);
                let (mask, image) = times.time(Stage::Suppressor, || -> Result<_> {
                    let mask = sidelobe_suppressor(&ra, options.suppressor);
                    let image = apply_suppressor(&mask, &power)?;
                    Ok((mask, image))
                })?;
                (image, Some(mask))
            }
        };
        images.push(PipelineImage { kind, image, mask });
    }
    times.add(Stage::Beamform, beam_start.elapsed());
    Ok(PipelineRun { images, times, beamform_passes: 1, svd_thresholds, frames: data.frames() })
}

/// Single pipeline with its own DAS pass.
pub fn run_pipeline<T: Real>(
    data: &ChannelDataSet<T>,
    kind: PipelineKind,
    options: &PipelineOptions,
) -> Result<(PowerImage<T>, StageTimes)> {
    let mut run = run_pipelines(data, &[kind], options)?;
    let img = run.images.pop().expect("one pipeline").image;
    Ok((img, run.times))
}
