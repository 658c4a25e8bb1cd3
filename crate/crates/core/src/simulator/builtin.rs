//! Named phantoms with their imaging grid, metric ROIs and clutter filter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pulse::PulseSpec;
use super::scene::{mix_seed, PhantomScene, Scatterer};
use super::synth::{synthesize_sequence, ContrastMode, RecordWindow, SequenceOptions};
use crate::acquisition::{AcquisitionConfig, ChannelDataSet, ImageGrid, Roi};
use crate::beamformer::{ApodizationSpec, ApodizationWindow};
use crate::clutter::{ClutterFilter, RollingWindow, SvdRank};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinScene {
    /// 3 × 3 grid of static points.
    PointGrid,
    /// Two horizontal vessels of nonlinear scatterers flowing in opposite
    /// directions, imaged with amplitude modulation.
    TwoChannels,
    /// Strong static tissue speckle over a slow vessel, imaged linearly.
    TissuePlusFlow,
    /// One vessel with a bright segment whose sub-aperture grating lobes fall
    /// on a weak flowing segment at the same depth.
    GratingLobe,
}

impl BuiltinScene {
    pub const ALL: [BuiltinScene; 4] =
        [BuiltinScene::PointGrid, BuiltinScene::TwoChannels, BuiltinScene::TissuePlusFlow, BuiltinScene::GratingLobe];

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinScene::PointGrid => "point_grid",
            BuiltinScene::TwoChannels => "two_channels",
            BuiltinScene::TissuePlusFlow => "tissue_plus_flow",
            BuiltinScene::GratingLobe => "grating_lobe",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scene `{s}`")))
    }

    /// Scene, grid and ROIs for `config` (element count and angles are
    /// taken from it). `seed` drives both scatterer placement and noise.
    pub fn setup(&self, config: &AcquisitionConfig, seed: u64) -> Result<SceneSetup> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed));
        let pulse = PulseSpec::three_cycle(config.transmit_frequency);
        let ha = config.half_aperture();
        match self {
            BuiltinScene::PointGrid => {
                let mut s = Vec::new();
                for iz in 0..3 {
                    for ix in 0..3 {
                        s.push(Scatterer::fixed((ix as f64 - 1.0) * 4.0 * MM, (15.0 + 5.0 * iz as f64) * MM, 1.0));
                    }
                }
                let grid = ImageGrid::new(-6.0 * MM, 6.0 * MM, 12.0 * MM, 28.0 * MM, 97, 129)?;
                Ok(SceneSetup {
                    name: self.name().into(),
                    config: config.clone(),
                    scene: PhantomScene::new(s, 0.05, seed),
                    pulse,
                    mode: ContrastMode::Linear,
                    frames: 8,
                    grid,
                    rois: vec![(Roi::ellipse("A", 0.0, 20.0 * MM, 0.6 * MM, 0.6 * MM), Roi::rect("B", 2.0 * MM, 17.5 * MM, 0.8 * MM, 0.8 * MM))],
                    clutter: ClutterFilter::None,
                    apodization: ApodizationSpec::default(),
                    sequence: SequenceOptions::default(),
                })
            }
            BuiltinScene::TwoChannels => {
                let frames = 200;
                let duration = frames as f64 / config.frame_rate;
                let speed = 4.0 * MM;
                let mut s = Vec::new();
                for &(zc, v) in &[(15.0 * MM, speed), (21.0 * MM, -speed)] {
                    let travel = v.abs() * duration;
                    let n = (6.0 * (2.0 * ha + travel) / MM) as usize;
                    for _ in 0..n {
                        // start upstream so the vessel stays filled for the whole sequence
                        let u: f64 = rng.random_range(-ha..ha + travel);
                        let x = if v > 0.0 { u - travel } else { -u + travel };
                        let z = zc + rng.random_range(-0.5 * MM..0.5 * MM);
                        s.push(Scatterer { x, z, amplitude: rng.random_range(0.5..1.0), vx: v, vz: 0.0, gamma: 2.0 });
                    }
                }
                let grid = ImageGrid::new(-5.0 * MM, 5.0 * MM, 12.0 * MM, 26.0 * MM, 81, 113)?;
                let window = RollingWindow::for_cutoff(5.0, config.frame_rate, 100)?;
                Ok(SceneSetup {
                    name: self.name().into(),
                    config: config.clone(),
                    scene: PhantomScene::new(s, 0.13, seed),
                    pulse,
                    mode: ContrastMode::AmplitudeModulation,
                    frames,
                    grid,
                    rois: vec![
                        (Roi::rect("A", 0.0, 15.0 * MM, 3.0 * MM, 0.3 * MM), Roi::rect("noise_A", 0.0, 18.0 * MM, 3.0 * MM, 1.2 * MM)),
                        (Roi::rect("B", 0.0, 21.0 * MM, 3.0 * MM, 0.3 * MM), Roi::rect("noise_B", 0.0, 24.0 * MM, 3.0 * MM, 1.2 * MM)),
                    ],
                    clutter: ClutterFilter::Rolling(window),
                    apodization: ApodizationSpec { window: ApodizationWindow::Rectangular, f_number: 1.5 },
                    sequence: SequenceOptions::default(),
                })
            }
            BuiltinScene::TissuePlusFlow => {
                let frames = 40;
                let mut s = Vec::new();
                for _ in 0..300 {
                    let x = rng.random_range(-4.0 * MM..4.0 * MM);
                    let z = rng.random_range(14.0 * MM..22.0 * MM);
                    s.push(Scatterer::fixed(x, z, 100.0 * rng.random_range(0.5..1.0)));
                }
                let duration = frames as f64 / config.frame_rate;
                let v = 5.0 * MM;
                for _ in 0..40 {
                    let x = rng.random_range(-3.0 * MM - v * duration..3.0 * MM);
                    let z = 18.0 * MM + rng.random_range(-0.3 * MM..0.3 * MM);
                    s.push(Scatterer { vx: v, ..Scatterer::fixed(x, z, 1.0) });
                }
                let grid = ImageGrid::new(-4.0 * MM, 4.0 * MM, 14.0 * MM, 22.0 * MM, 41, 41)?;
                Ok(SceneSetup {
                    name: self.name().into(),
                    config: config.clone(),
                    scene: PhantomScene::new(s, 0.01, seed),
                    pulse,
                    mode: ContrastMode::Linear,
                    frames,
                    grid,
                    rois: vec![(Roi::rect("flow", 0.0, 18.0 * MM, 2.5 * MM, 0.3 * MM), Roi::rect("tissue", 0.0, 15.5 * MM, 2.5 * MM, 1.0 * MM))],
                    clutter: ClutterFilter::Svd(SvdRank::Knee { high_cut: None }),
                    apodization: ApodizationSpec::default(),
                    sequence: SequenceOptions::default(),
                })
            }
            BuiltinScene::GratingLobe => {
                let frames = 50;
                let duration = frames as f64 / config.frame_rate;
                let v = 5.0 * MM;
                let drift = 1.0 * MM;
                let mut s = Vec::new();
                // bright, slowly perfused segment on the left
                for _ in 0..60 {
                    let x = rng.random_range(-6.5 * MM..-3.0 * MM);
                    let z = 20.0 * MM + rng.random_range(-0.3 * MM..0.3 * MM);
                    let amplitude = 10.0 * rng.random_range(0.5..1.0);
                    let vx = rng.random_range(-drift..drift);
                    let vz = rng.random_range(-drift..drift);
                    s.push(Scatterer { x, z, amplitude, vx, vz, gamma: 1.0 });
                }
                // weak flowing segment on the right, at the same depth
                for _ in 0..80 {
                    let x = rng.random_range(-0.5 * MM - v * duration..7.0 * MM);
                    let z = 20.0 * MM + rng.random_range(-0.3 * MM..0.3 * MM);
                    s.push(Scatterer { x, z, amplitude: rng.random_range(0.5..1.0), vx: v, vz: 0.0, gamma: 1.0 });
                }
                let grid = ImageGrid::new(-8.0 * MM, 8.0 * MM, 12.0 * MM, 24.0 * MM, 129, 97)?;
                Ok(SceneSetup {
                    name: self.name().into(),
                    config: config.clone(),
                    scene: PhantomScene::new(s, 1.0, seed),
                    pulse,
                    mode: ContrastMode::Linear,
                    frames,
                    grid,
                    rois: vec![(Roi::rect("A", 2.75 * MM, 20.0 * MM, 2.25 * MM, 0.3 * MM), Roi::rect("B", 4.5 * MM, 13.0 * MM, 1.5 * MM, 0.8 * MM))],
                    clutter: ClutterFilter::None,
                    apodization: ApodizationSpec::default(),
                    sequence: SequenceOptions::default(),
                })
            }
        }
    }
}

/// A phantom ready to simulate, with everything needed to image and score it.
#[derive(Debug, Clone)]
pub struct SceneSetup {
    pub name: String,
    pub config: AcquisitionConfig,
    pub scene: PhantomScene,
    pub pulse: PulseSpec,
    pub mode: ContrastMode,
    pub frames: usize,
    pub grid: ImageGrid,
    /// `(signal, background)` ROI pairs.
    pub rois: Vec<(Roi, Roi)>,
    pub clutter: ClutterFilter,
    /// Receive apodization the scene is meant to be imaged with.
    pub apodization: ApodizationSpec,
    pub sequence: SequenceOptions,
}

impl SceneSetup {
    pub fn window(&self) -> RecordWindow {
        let margin = 2.0 / self.config.sampling_frequency;
        let echoes = RecordWindow::covering(&self.scene, &self.config, &self.pulse, self.frames, margin);
        let pixels = RecordWindow::spanning(&self.grid, &self.config, &self.pulse, margin);
        echoes.union(&pixels, self.config.sampling_frequency)
    }

    pub fn simulate<T: Real>(&self) -> Result<ChannelDataSet<T>> {
        synthesize_sequence(&self.scene, &self.config, &self.pulse, &self.window(), self.frames, self.mode, self.sequence)
    }
}
