use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::pulse::PulseSpec;
use super::scene::{displaced, PhantomScene, Scatterer};
use crate::acquisition::{tukey, AcquisitionConfig, ChannelDataSet, ImageGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sampled time window of every trace: `sample_count` samples from `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordWindow {
    pub t0: f64,
    pub sample_count: usize,
}

impl RecordWindow {
    pub fn new(t0: f64, sample_count: usize) -> Self {
        Self { t0, sample_count }
    }

    /// Smallest window (plus `margin` seconds on both sides) holding every
    /// echo of `scene` over `n_frames` frames of `config`.
    pub fn covering(
        scene: &PhantomScene,
        config: &AcquisitionConfig,
        pulse: &PulseSpec,
        n_frames: usize,
        margin: f64,
    ) -> Self {
        let fs = config.sampling_frequency;
        let ha = config.half_aperture();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in 0..n_frames.max(1) {
            for (a, &theta) in config.angles.iter().enumerate() {
                let t = transmit_time(config, f, a, true);
                for s in displaced(&scene.scatterers, t) {
                    let tx = (s.z * theta.cos() + s.x * theta.sin()) / config.sound_speed;
                    let near = s.x.clamp(-ha, ha);
                    let rmin = ((s.x - near).powi(2) + s.z * s.z).sqrt();
                    let rmax = ((s.x.abs() + ha).powi(2) + s.z * s.z).sqrt();
                    lo = lo.min(tx + rmin / config.sound_speed);
                    hi = hi.max(tx + rmax / config.sound_speed);
                }
            }
        }
        if !lo.is_finite() {
            return Self { t0: 0.0, sample_count: 1 };
        }
        let half = pulse.half_support() + margin;
        let first = ((lo - half) * fs).floor();
        let last = ((hi + half) * fs).ceil();
        Self { t0: first / fs, sample_count: (last - first) as usize + 1 }
    }

    /// Window holding every sample that delay-and-sum can read for pixels of
    /// `grid`, padded by the pulse half support plus `margin`.
    pub fn spanning(grid: &ImageGrid, config: &AcquisitionConfig, pulse: &PulseSpec, margin: f64) -> Self {
        let fs = config.sampling_frequency;
        let ha = config.half_aperture();
        let c = config.sound_speed;
        let corners = [(grid.x_min, grid.z_min), (grid.x_min, grid.z_max), (grid.x_max, grid.z_min), (grid.x_max, grid.z_max)];
        let mut tx_lo = f64::INFINITY;
        let mut tx_hi = f64::NEG_INFINITY;
        for &theta in &config.angles {
            for &(x, z) in &corners {
                let t = (z * theta.cos() + x * theta.sin()) / c;
                tx_lo = tx_lo.min(t);
                tx_hi = tx_hi.max(t);
            }
        }
        let gap = (grid.x_min - ha).max(-ha - grid.x_max).max(0.0);
        let rx_lo = (gap * gap + grid.z_min * grid.z_min).sqrt() / c;
        let far = (grid.x_max + ha).abs().max((grid.x_min - ha).abs());
        let rx_hi = (far * far + grid.z_max * grid.z_max).sqrt() / c;
        let half = pulse.half_support() + margin;
        let first = ((tx_lo + rx_lo - half) * fs).floor();
        let last = ((tx_hi + rx_hi + half) * fs).ceil();
        Self { t0: first / fs, sample_count: (last - first) as usize + 1 }
    }

    /// Smallest window containing both.
    pub fn union(&self, other: &RecordWindow, fs: f64) -> Self {
        let first = (self.t0 * fs).round().min((other.t0 * fs).round());
        let last = (self.t_last(fs) * fs).round().max((other.t_last(fs) * fs).round());
        Self { t0: first / fs, sample_count: (last - first) as usize + 1 }
    }

    fn t_last(&self, fs: f64) -> f64 {
        self.t0 + (self.sample_count.saturating_sub(1)) as f64 / fs
    }
}

/// Identifies one transmitted pulse; selects an independent noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmitId {
    pub frame: usize,
    pub angle: usize,
    /// 0..3 within an amplitude-modulation triplet; 0 for linear imaging.
    pub pulse: usize,
}

impl TransmitId {
    fn stream(&self) -> u64 {
        ((self.frame as u64) << 24) ^ ((self.angle as u64) << 4) ^ self.pulse as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastMode {
    /// One full-amplitude pulse per angle.
    Linear,
    /// Half-Full-Half amplitude modulation; the stored trace is
    /// `full − half − half`.
    AmplitudeModulation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceOptions {
    /// Advance the scene by `1/prf` between the angles of a frame.
    pub intra_frame_motion: bool,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        Self { intra_frame_motion: true }
    }
}

/// Time of transmit `(frame, angle)` since the start of the sequence.
pub fn transmit_time(config: &AcquisitionConfig, frame: usize, angle: usize, intra: bool) -> f64 {
    let t = frame as f64 / config.frame_rate;
    if intra { t + angle as f64 / config.prf } else { t }
}

/// Transmit apodization seen by a scatterer: the Tukey weight of the aperture
/// point whose plane-wave ray passes through it (zero outside the aperture).
fn transmit_weight(config: &AcquisitionConfig, s: &Scatterer, theta: f64) -> f64 {
    let ha = config.half_aperture();
    let source = s.x - s.z * theta.tan();
    tukey((source + ha) / (2.0 * ha), config.tukey_alpha)
}

fn echo_traces(
    scatterers: &[Scatterer],
    config: &AcquisitionConfig,
    pulse: &PulseSpec,
    window: &RecordWindow,
    theta: f64,
    tx_gain: &dyn Fn(f64) -> f64,
    out: &mut [f64],
) -> Result<()> {
    let fs = config.sampling_frequency;
    let c = config.sound_speed;
    let n_s = window.sample_count;
    let half = pulse.half_support();
    let t_last = window.t_last(fs);
    let (sin_t, cos_t) = theta.sin_cos();
    for (idx, s) in scatterers.iter().enumerate() {
        let w = transmit_weight(config, s, theta);
        if w == 0.0 || s.amplitude == 0.0 {
            continue;
        }
        let amp = s.amplitude * tx_gain(s.gamma) * w;
        if amp == 0.0 {
            continue;
        }
        let tx = (s.z * cos_t + s.x * sin_t) / c;
        for e in 0..config.num_elements {
            let dx = s.x - config.element_x(e);
            let tau = tx + (dx * dx + s.z * s.z).sqrt() / c;
            if tau - half < window.t0 || tau + half > t_last {
                return Err(Error::invalid(format!(
                    "echo of scatterer {idx} at ({:.3e}, {:.3e}) m arrives at {tau:.4e} s, outside the sampled window [{:.4e}, {t_last:.4e}] s",
                    s.x, s.z, window.t0
                )));
            }
            let first = ((tau - half - window.t0) * fs).ceil().max(0.0) as usize;
            let last = (((tau + half - window.t0) * fs).floor() as usize).min(n_s - 1);
            if first <= last {
                let trace = &mut out[e * n_s + first..e * n_s + last + 1];
                pulse.accumulate(trace, window.t0 + first as f64 / fs - tau, 1.0 / fs, amp);
            }
        }
    }
    Ok(())
}

fn add_noise(out: &mut [f64], sigma: f64, seed: u64, id: TransmitId) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id.stream());
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += sigma * z;
    }
}

fn transmit_f64(
    scatterers: &[Scatterer],
    scene: &PhantomScene,
    config: &AcquisitionConfig,
    pulse: &PulseSpec,
    window: &RecordWindow,
    theta: f64,
    tx_amplitude: f64,
    id: TransmitId,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; config.num_elements * window.sample_count];
    echo_traces(scatterers, config, pulse, window, theta, &|g| tx_amplitude.powf(g), &mut out)?;
    add_noise(&mut out, scene.noise_sigma, scene.rng_seed, id);
    Ok(out)
}

/// `full − half − half` computed in one pass: echoes scale by
/// `1 − 2·0.5^γ` and the three noise draws are combined with the same signs.
fn am_transmit_f64(
    scatterers: &[Scatterer],
    scene: &PhantomScene,
    config: &AcquisitionConfig,
    pulse: &PulseSpec,
    window: &RecordWindow,
    theta: f64,
    frame: usize,
    angle: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; config.num_elements * window.sample_count];
    echo_traces(scatterers, config, pulse, window, theta, &|g| 1.0 - 2.0 * 0.5f64.powf(g), &mut out)?;
    for (p, sign) in [(1, 1.0), (0, -1.0), (2, -1.0)] {
        add_noise(&mut out, sign * scene.noise_sigma, scene.rng_seed, TransmitId { frame, angle, pulse: p });
    }
    Ok(out)
}

fn check_inputs(scene: &PhantomScene, config: &AcquisitionConfig, pulse: &PulseSpec, window: &RecordWindow) -> Result<()> {
    config.validate()?;
    scene.validate()?;
    pulse.validate()?;
    if window.sample_count == 0 {
        return Err(Error::invalid("record window needs at least one sample"));
    }
    Ok(())
}

/// Element-major traces (`num_elements × sample_count`) for one plane-wave
/// transmit at `angle` radians, scene as given (no motion applied).
///
/// Each scatterer contributes `amplitude · tx_amplitude^γ · tukey` times the
/// pulse centered at the round-trip delay
/// `(z cos θ + x sin θ)/c + |p − e|/c`; white Gaussian noise of standard
/// deviation `noise_sigma` is then added from the stream selected by `id`.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_transmit<T: Real>(
    scene: &PhantomScene,
    config: &AcquisitionConfig,
    pulse: &PulseSpec,
    window: &RecordWindow,
    angle: f64,
    tx_amplitude: f64,
    id: TransmitId,
) -> Result<Vec<T>> {
    check_inputs(scene, config, pulse, window)?;
    let v = transmit_f64(&scene.scatterers, scene, config, pulse, window, angle, tx_amplitude, id)?;
    Ok(v.into_iter().map(T::of).collect())
}

/// Half, full and half amplitude transmits of the same scene with
/// independent noise draws.
pub fn synthesize_am_triplet<T: Real>(
    scene: &PhantomScene,
    config: &AcquisitionConfig,
    pulse: &PulseSpec,
    window: &RecordWindow,
    frame: usize,
    angle_index: usize,
) -> Result<[Vec<T>; 3]> {
    check_inputs(scene, config, pulse, window)?;
    let theta = *config
        .angles
        .get(angle_index)
        .ok_or_else(|| Error::invalid("angle index out of range"))?;
    let one = |pulse_idx: usize, amp: f64| -> Result<Vec<T>> {
        let id = TransmitId { frame, angle: angle_index, pulse: pulse_idx };
        let v = transmit_f64(&scene.scatterers, scene, config, pulse, window, theta, amp, id)?;
        Ok(v.into_iter().map(T::of).collect())
    };
    Ok([one(0, 0.5)?, one(1, 1.0)?, one(2, 0.5)?])
}

/// Full multi-frame, multi-angle acquisition. Scatterers move with their
/// velocities; transmit `(f, a)` sees the scene at `f/frame_rate + a/prf`
/// (or `f/frame_rate` without intra-frame motion). Transmits are computed in
/// parallel; each draws noise from its own stream so output does not depend
/// on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_sequence<T: Real>(
    scene: &PhantomScene,
    config: &AcquisitionConfig,
    pulse: &PulseSpec,
    window: &RecordWindow,
    n_frames: usize,
    mode: ContrastMode,
    options: SequenceOptions,
) -> Result<ChannelDataSet<T>> {
    check_inputs(scene, config, pulse, window)?;
    let mut data = ChannelDataSet::<T>::zeros(config.clone(), window.t0, n_frames, window.sample_count);
    let n_angles = config.num_angles();
    let len = data.transmit_len();
    data.samples_mut()
        .par_chunks_mut(len.max(1))
        .enumerate()
        .try_for_each(|(k, out)| -> Result<()> {
            let (frame, angle) = (k / n_angles, k % n_angles);
            let theta = config.angles[angle];
            let t = transmit_time(config, frame, angle, options.intra_frame_motion);
            let moved = displaced(&scene.scatterers, t);
            let traces = match mode {
                ContrastMode::Linear => {
                    let id = TransmitId { frame, angle, pulse: 0 };
                    transmit_f64(&moved, scene, config, pulse, window, theta, 1.0, id)?
                }
                ContrastMode::AmplitudeModulation => {
                    am_transmit_f64(&moved, scene, config, pulse, window, theta, frame, angle)?
                }
            };
            for (o, v) in out.iter_mut().zip(traces) {
                *o = T::of(v);
            }
            Ok(())
        })?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compounding::am_combine;
    use crate::simulator::advance_scene;

    fn cfg() -> AcquisitionConfig {
        AcquisitionConfig { num_elements: 16, angles: vec![-0.05, 0.0, 0.05], ..AcquisitionConfig::desk() }
    }

    fn one_point(gamma: f64) -> PhantomScene {
        PhantomScene::new(vec![Scatterer { gamma, ..Scatterer::fixed(0.0, 0.02, 1.0) }], 0.0, 1)
    }

    fn window() -> RecordWindow {
        RecordWindow::new(20e-6, 400)
    }

    fn peak(trace: &[f64]) -> (usize, f64) {
        trace
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc })
    }

    #[test]
    fn on_axis_round_trip_delay() {
        // element x = 0 exists only for odd counts
        let c = AcquisitionConfig { num_elements: 17, ..cfg() };
        let pulse = PulseSpec::three_cycle(5e6);
        let id = TransmitId { frame: 0, angle: 0, pulse: 0 };
        let t: Vec<f64> = synthesize_transmit(&one_point(1.0), &c, &pulse, &window(), 0.0, 1.0, id).unwrap();
        let e = 8;
        assert_eq!(c.element_x(e), 0.0);
        let tr = &t[e * 400..(e + 1) * 400];
        let (i, _) = peak(tr);
        let tau: f64 = 2.0 * 0.02 / 1540.0;
        assert!((tau - 25.974e-6).abs() < 1e-9);
        assert!((window().t0 + i as f64 / c.sampling_frequency - tau).abs() <= 0.5 / c.sampling_frequency);
    }

    #[test]
    fn amplitude_follows_gamma_model() {
        let pulse = PulseSpec::three_cycle(5e6);
        let id = TransmitId { frame: 0, angle: 0, pulse: 0 };
        for (gamma, expect) in [(1.0, 0.5), (2.0, 0.25)] {
            let s = one_point(gamma);
            let full: Vec<f64> = synthesize_transmit(&s, &cfg(), &pulse, &window(), 0.0, 1.0, id).unwrap();
            let half: Vec<f64> = synthesize_transmit(&s, &cfg(), &pulse, &window(), 0.0, 0.5, id).unwrap();
            // independent scalar evaluation of the power law
            let oracle = 0.5f64.powi(gamma as i32);
            assert_eq!(oracle, expect);
            for (h, f) in half.iter().zip(&full) {
                assert!((h - expect * f).abs() <= 1e-15 * f.abs().max(1.0));
            }
        }
    }

    #[test]
    fn echo_outside_window_names_scatterer() {
        let pulse = PulseSpec::three_cycle(5e6);
        let id = TransmitId { frame: 0, angle: 0, pulse: 0 };
        let short = RecordWindow::new(20e-6, 50);
        let err = synthesize_transmit::<f64>(&one_point(1.0), &cfg(), &pulse, &short, 0.0, 1.0, id).unwrap_err();
        assert!(err.to_string().contains("scatterer 0"), "{err}");
    }

    #[test]
    fn am_triplet_cancels_linear_and_keeps_half_of_quadratic() {
        let pulse = PulseSpec::three_cycle(5e6);
        let lin = synthesize_am_triplet::<f64>(&one_point(1.0), &cfg(), &pulse, &window(), 0, 1).unwrap();
        let res = am_combine(&lin[0], &lin[1], &lin[2]).unwrap();
        assert!(res.iter().all(|v| v.abs() < 1e-15));

        let quad = synthesize_am_triplet::<f64>(&one_point(2.0), &cfg(), &pulse, &window(), 0, 1).unwrap();
        let res = am_combine(&quad[0], &quad[1], &quad[2]).unwrap();
        let oracle = 1.0 - 0.5f64.powi(2) - 0.5f64.powi(2);
        for (r, f) in res.iter().zip(&quad[1]) {
            assert!((r - oracle * f).abs() < 1e-14);
        }
    }

    #[test]
    fn am_sequence_equals_combined_triplets() {
        let pulse = PulseSpec::three_cycle(5e6);
        let scene = PhantomScene::new(
            vec![Scatterer { gamma: 2.0, vx: 0.01, ..Scatterer::fixed(0.0, 0.02, 1.0) }, Scatterer::fixed(1e-3, 0.019, 3.0)],
            0.1,
            5,
        );
        let seq = synthesize_sequence::<f64>(&scene, &cfg(), &pulse, &window(), 2, ContrastMode::AmplitudeModulation, SequenceOptions::default()).unwrap();
        for f in 0..2 {
            for a in 0..3 {
                let moved = advance_scene(&scene, transmit_time(&cfg(), f, a, true)).unwrap();
                let moved = PhantomScene { rng_seed: scene.rng_seed, ..moved };
                let t = synthesize_am_triplet::<f64>(&moved, &cfg(), &pulse, &window(), f, a).unwrap();
                let combined = am_combine(&t[0], &t[1], &t[2]).unwrap();
                for (x, y) in seq.transmit(f, a).iter().zip(&combined) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn am_noise_residual_has_three_sigma_squared_variance() {
        let sigma = 0.2;
        let scene = PhantomScene::new(vec![], sigma, 99);
        let pulse = PulseSpec::three_cycle(5e6);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut n = 0.0;
        for frame in 0..4 {
            let t = synthesize_am_triplet::<f64>(&scene, &cfg(), &pulse, &window(), frame, 0).unwrap();
            for r in am_combine(&t[0], &t[1], &t[2]).unwrap() {
                sum += r;
                sum2 += r * r;
                n += 1.0;
            }
        }
        assert!(n >= 1e4);
        let mean = sum / n;
        let var = sum2 / n - mean * mean;
        assert!(mean.abs() < 0.05 * sigma, "mean {mean}");
        assert!((var / (3.0 * sigma * sigma) - 1.0).abs() < 0.05, "var ratio {}", var / (3.0 * sigma * sigma));
    }

    #[test]
    fn superposition_of_linear_scatterers() {
        let pulse = PulseSpec::three_cycle(5e6);
        let id = TransmitId { frame: 0, angle: 0, pulse: 0 };
        let a = Scatterer::fixed(-1e-3, 0.018, 0.7);
        let b = Scatterer::fixed(1.5e-3, 0.021, -0.4);
        let run = |sc: Vec<Scatterer>| -> Vec<f64> {
            synthesize_transmit(&PhantomScene::new(sc, 0.0, 0), &cfg(), &pulse, &window(), 0.05, 1.0, id).unwrap()
        };
        let ab = run(vec![a, b]);
        let (ra, rb) = (run(vec![a]), run(vec![b]));
        for i in 0..ab.len() {
            assert!((ab[i] - ra[i] - rb[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn energy_is_local_to_the_delay() {
        let c = cfg();
        let pulse = PulseSpec::three_cycle(5e6);
        let s = Scatterer::fixed(1e-3, 0.02, 1.0);
        let theta = 0.05;
        let id = TransmitId { frame: 0, angle: 0, pulse: 0 };
        let w = window();
        let t: Vec<f64> = synthesize_transmit(&PhantomScene::new(vec![s], 0.0, 0), &c, &pulse, &w, theta, 1.0, id).unwrap();
        for e in 0..c.num_elements {
            let tr = &t[e * w.sample_count..(e + 1) * w.sample_count];
            let tau = (s.z * theta.cos() + s.x * theta.sin()) / c.sound_speed
                + ((s.x - c.element_x(e)).powi(2) + s.z * s.z).sqrt() / c.sound_speed;
            let total: f64 = tr.iter().map(|v| v * v).sum();
            let near: f64 = tr
                .iter()
                .enumerate()
                .filter(|(n, _)| ((w.t0 + *n as f64 / c.sampling_frequency) - tau).abs() <= 3.0 * pulse.length())
                .map(|(_, v)| v * v)
                .sum();
            assert!(near >= 0.99 * total);
        }
    }

    #[test]
    fn sequence_is_deterministic_and_static_frames_repeat() {
        let c = cfg();
        let pulse = PulseSpec::three_cycle(5e6);
        let scene = one_point(1.0);
        let opts = SequenceOptions::default();
        let d: ChannelDataSet<f64> =
            synthesize_sequence(&scene, &c, &pulse, &window(), 2, ContrastMode::Linear, opts).unwrap();
        assert_eq!(d.transmit(0, 1), d.transmit(1, 1));
        let noisy = PhantomScene { noise_sigma: 0.1, ..scene };
        let a: ChannelDataSet<f32> =
            synthesize_sequence(&noisy, &c, &pulse, &window(), 2, ContrastMode::AmplitudeModulation, opts).unwrap();
        let b: ChannelDataSet<f32> =
            synthesize_sequence(&noisy, &c, &pulse, &window(), 2, ContrastMode::AmplitudeModulation, opts).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.transmit(0, 0), a.transmit(1, 0));
        let empty: ChannelDataSet<f32> =
            synthesize_sequence(&noisy, &c, &pulse, &window(), 0, ContrastMode::Linear, opts).unwrap();
        assert_eq!(empty.frames(), 0);
        assert!(empty.samples().is_empty());
    }

    #[test]
    fn covering_window_fits_moving_scene() {
        let c = cfg();
        let pulse = PulseSpec::three_cycle(5e6);
        let scene = PhantomScene::new(
            vec![Scatterer { vx: 5e-3, vz: 2e-3, ..Scatterer::fixed(-2e-3, 0.01, 1.0) }],
            0.0,
            0,
        );
        let w = RecordWindow::covering(&scene, &c, &pulse, 50, 0.0);
        synthesize_sequence::<f32>(&scene, &c, &pulse, &w, 50, ContrastMode::Linear, SequenceOptions::default())
            .unwrap();
    }
}
