//! Delay-and-sum on analytic channel traces.
//!
//! Each channel trace is converted to its analytic signal first; delays are
//! then applied to complex samples with linear interpolation. The pixel value
//! for steering angle `θ` is
//!
//! ```text
//! y(x, z) = Σ_e w_e · s_e(τ_e),   τ_e = (z cos θ + x sin θ)/c + √((x − x_e)² + z²)/c − t0
//! ```
//!
//! summed in ascending element order. The normalized form divides by the sum
//! of active weights of the pixel; delays outside the record contribute zero.

use num_traits::Zero;
use rayon::prelude::*;

use super::hilbert::HilbertPlan;
use super::mask::ApertureMask;
use super::stack::AnalyticImageStack;
use crate::acquisition::{tukey, AcquisitionConfig, ChannelDataSet, ImageGrid};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApodizationWindow {
    Rectangular,
    Hann,
    Tukey(f64),
}

/// Receive apodization. With `f_number > 0` element `e` contributes to pixel
/// `(x, z)` only when `|x − x_e| ≤ z / (2 f_number)`; `0` keeps the full
/// aperture at every depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApodizationSpec {
    pub window: ApodizationWindow,
    pub f_number: f64,
}

impl Default for ApodizationSpec {
    fn default() -> Self {
        Self { window: ApodizationWindow::Rectangular, f_number: 0.0 }
    }
}

impl ApodizationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_number >= 0.0) {
            return Err(Error::invalid("f_number ≥ 0"));
        }
        if let ApodizationWindow::Tukey(a) = self.window {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid("Tukey alpha in [0, 1]"));
            }
        }
        Ok(())
    }

    fn is_uniform(&self) -> bool {
        self.window == ApodizationWindow::Rectangular && self.f_number == 0.0
    }

    /// Weight of an element at normalized aperture coordinate `u ∈ [-1, 1]`.
    fn window_weight(&self, u: f64) -> f64 {
        let u01 = (u + 1.0) / 2.0;
        match self.window {
            ApodizationWindow::Rectangular => {
                if (0.0..=1.0).contains(&u01) { 1.0 } else { 0.0 }
            }
            ApodizationWindow::Hann => tukey(u01, 1.0),
            ApodizationWindow::Tukey(a) => tukey(u01, a),
        }
    }

    /// Weight of element at `xe` for pixel `(x, z)`.
    pub fn weight(&self, config: &AcquisitionConfig, xe: f64, x: f64, z: f64) -> f64 {
        if self.f_number > 0.0 {
            let half = z / (2.0 * self.f_number);
            if half <= 0.0 || (x - xe).abs() > half {
                return 0.0;
            }
            self.window_weight((xe - x) / half)
        } else {
            self.window_weight(xe / config.half_aperture())
        }
    }
}

const INVALID: u32 = u32::MAX;

/// Precomputed delays, interpolation weights and apodization for one
/// acquisition geometry and pixel grid. Reused across frames and masks.
pub struct DasBeamformer<T: Real> {
    config: AcquisitionConfig,
    grid: ImageGrid,
    sample_count: usize,
    /// per angle: `pixels × elements` sample index (or `INVALID`)
    index: Vec<Vec<u32>>,
    /// per angle: `pixels × elements` interpolation fraction
    frac: Vec<Vec<T>>,
    /// `pixels × elements`; `None` when every weight is one
    weights: Option<Vec<T>>,
    hilbert: HilbertPlan<T>,
}

impl<T: Real> DasBeamformer<T> {
    pub fn new(
        config: &AcquisitionConfig,
        t0: f64,
        sample_count: usize,
        grid: &ImageGrid,
        apod: &ApodizationSpec,
    ) -> Result<Self> {
        config.validate()?;
        grid.validate()?;
        apod.validate()?;
        let n_e = config.num_elements;
        let n_p = grid.len();
        let fs = config.sampling_frequency;
        let c = config.sound_speed;
        let xs: Vec<f64> = (0..n_e).map(|e| config.element_x(e)).collect();
        let last = sample_count as f64 - 1.0;
        let mut index = Vec::with_capacity(config.num_angles());
        let mut frac = Vec::with_capacity(config.num_angles());
        for &theta in &config.angles {
            let (sin_t, cos_t) = theta.sin_cos();
            let mut idx = vec![INVALID; n_p * n_e];
            let mut fr = vec![T::zero(); n_p * n_e];
            for p in 0..n_p {
                let (x, z) = grid.position(p);
                let tx = (z * cos_t + x * sin_t) / c;
                for (e, &xe) in xs.iter().enumerate() {
                    let tau = tx + ((x - xe).powi(2) + z * z).sqrt() / c - t0;
                    let s = tau * fs;
                    if s >= 0.0 && s <= last {
                        let i0 = s.floor();
                        idx[p * n_e + e] = i0 as u32;
                        fr[p * n_e + e] = T::of(s - i0);
                    }
                }
            }
            index.push(idx);
            frac.push(fr);
        }
        let weights = (!apod.is_uniform()).then(|| {
            (0..n_p * n_e)
                .map(|k| {
                    let (x, z) = grid.position(k / n_e);
                    T::of(apod.weight(config, xs[k % n_e], x, z))
                })
                .collect()
        });
        Ok(Self {
            config: config.clone(),
            grid: *grid,
            sample_count,
            index,
            frac,
            weights,
            hilbert: HilbertPlan::new(sample_count),
        })
    }

    pub fn for_dataset(data: &ChannelDataSet<T>, grid: &ImageGrid, apod: &ApodizationSpec) -> Result<Self> {
        Self::new(data.config(), data.t0(), data.sample_count(), grid, apod)
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    /// Analytic traces of one transmit (`elements × samples`, element-major),
    /// padded with one zero sample per element for interpolation.
    pub fn analytic_transmit(&self, traces: &[T]) -> Vec<Cplx<T>> {
        let s = self.sample_count;
        let mut out = vec![Cplx::zero(); self.config.num_elements * (s + 1)];
        for (trace, dst) in traces.chunks_exact(s).zip(out.chunks_exact_mut(s + 1)) {
            self.hilbert.analytic_into(trace, &mut dst[..s]);
        }
        out
    }

    /// Per-pixel sum of active weights under `mask`.
    pub fn weight_sums(&self, mask: &ApertureMask) -> Vec<T> {
        let n_e = self.config.num_elements;
        (0..self.grid.len())
            .map(|p| {
                (0..n_e)
                    .filter(|&e| mask.is_active(e))
                    .map(|e| self.weights.as_ref().map_or(T::one(), |w| w[p * n_e + e]))
                    .sum()
            })
            .collect()
    }

    /// Beamforms one transmit's analytic traces for every mask in a single
    /// pass over pixels and elements. Returns one image per mask.
    pub fn beamform_analytic(
        &self,
        analytic: &[Cplx<T>],
        angle: usize,
        masks: &[&ApertureMask],
        norms: Option<&[Vec<T>]>,
    ) -> Vec<Vec<Cplx<T>>> {
        let n_e = self.config.num_elements;
        let stride = self.sample_count + 1;
        let n_p = self.grid.len();
        let idx = &self.index[angle];
        let frac = &self.frac[angle];
        let mut out: Vec<Vec<Cplx<T>>> = vec![vec![Cplx::zero(); n_p]; masks.len()];
        // element → bit set of masks containing it
        let membership: Vec<u64> = (0..n_e)
            .map(|e| masks.iter().enumerate().fold(0u64, |b, (m, mask)| if mask.is_active(e) { b | 1 << m } else { b }))
            .collect();
        let mut acc = vec![Cplx::<T>::zero(); masks.len()];
        for p in 0..n_p {
            acc.iter_mut().for_each(|a| *a = Cplx::zero());
            let row = p * n_e;
            for e in 0..n_e {
                let bits = membership[e];
                if bits == 0 {
                    continue;
                }
                let i0 = idx[row + e];
                if i0 == INVALID {
                    continue;
                }
                let f = frac[row + e];
                let base = e * stride + i0 as usize;
                let a0 = analytic[base];
                let a1 = analytic[base + 1];
                let mut v = a0 + (a1 - a0) * f;
                if let Some(w) = &self.weights {
                    v *= w[row + e];
                }
                for (m, a) in acc.iter_mut().enumerate() {
                    if bits >> m & 1 == 1 {
                        *a += v;
                    }
                }
            }
            for (m, a) in acc.iter().enumerate() {
                out[m][p] = match norms {
                    Some(n) if n[m][p] > T::zero() => *a / n[m][p],
                    Some(_) => Cplx::zero(),
                    None => *a,
                };
            }
        }
        out
    }
}

fn resolve_masks(n_e: usize, masks: &[Option<&ApertureMask>]) -> Result<Vec<ApertureMask>> {
    if masks.len() > 64 {
        return Err(Error::invalid("at most 64 masks per beamforming pass"));
    }
    masks
        .iter()
        .map(|m| match m {
            Some(m) => m.check(n_e).map(|_| (*m).clone()),
            None => Ok(ApertureMask::full(n_e)),
        })
        .collect()
}

fn check_index(data_frames: usize, n_angles: usize, frame: usize, angle: usize) -> Result<()> {
    if frame >= data_frames || angle >= n_angles {
        return Err(Error::invalid(format!("transmit ({frame}, {angle}) outside dataset")));
    }
    Ok(())
}

fn single<T: Real>(
    data: &ChannelDataSet<T>,
    grid: &ImageGrid,
    apod: &ApodizationSpec,
    frame: usize,
    angle: usize,
    mask: Option<&ApertureMask>,
    normalize: bool,
) -> Result<Vec<Cplx<T>>> {
    check_index(data.frames(), data.config().num_angles(), frame, angle)?;
    let masks = resolve_masks(data.config().num_elements, &[mask])?;
    let bf = DasBeamformer::for_dataset(data, grid, apod)?;
    let norms = normalize.then(|| vec![bf.weight_sums(&masks[0])]);
    let analytic = bf.analytic_transmit(data.transmit(frame, angle));
    let mut imgs = bf.beamform_analytic(&analytic, angle, &[&masks[0]], norms.as_deref());
    Ok(imgs.pop().expect("one mask"))
}

/// Normalized DAS image of transmit `(frame, angle)`; `mask = None` uses all elements.
pub fn das_beamform<T: Real>(
    data: &ChannelDataSet<T>,
    grid: &ImageGrid,
    apod: &ApodizationSpec,
    frame: usize,
    angle: usize,
    mask: Option<&ApertureMask>,
) -> Result<Vec<Cplx<T>>> {
    single(data, grid, apod, frame, angle, mask, true)
}

/// DAS without the per-pixel weight normalization. Sub-aperture images
/// from complementary masks sum exactly to the full-aperture image here.
pub fn das_beamform_unnormalized<T: Real>(
    data: &ChannelDataSet<T>,
    grid: &ImageGrid,
    apod: &ApodizationSpec,
    frame: usize,
    angle: usize,
    mask: Option<&ApertureMask>,
) -> Result<Vec<Cplx<T>>> {
    single(data, grid, apod, frame, angle, mask, false)
}

/// Normalized DAS over every `(frame, angle)` for each mask, computing the
/// analytic traces of each transmit once. Returns one stack per mask.
pub fn beamform_stacks<T: Real>(
    data: &ChannelDataSet<T>,
    grid: &ImageGrid,
    apod: &ApodizationSpec,
    masks: &[Option<&ApertureMask>],
) -> Result<Vec<AnalyticImageStack<T>>> {
    let bf = DasBeamformer::for_dataset(data, grid, apod)?;
    beamform_stacks_with(&bf, data, masks, true)
}

/// As [`beamform_stacks`] with a prebuilt beamformer.
pub fn beamform_stacks_with<T: Real>(
    bf: &DasBeamformer<T>,
    data: &ChannelDataSet<T>,
    masks: &[Option<&ApertureMask>],
    normalize: bool,
) -> Result<Vec<AnalyticImageStack<T>>> {
    let cfg = data.config();
    let resolved = resolve_masks(cfg.num_elements, masks)?;
    let mask_refs: Vec<&ApertureMask> = resolved.iter().collect();
    let norms: Option<Vec<Vec<T>>> = normalize.then(|| resolved.iter().map(|m| bf.weight_sums(m)).collect());
    let n_a = cfg.num_angles();
    let jobs = data.frames() * n_a;
    let images: Vec<Vec<Vec<Cplx<T>>>> = (0..jobs)
        .into_par_iter()
        .map(|k| {
            let (f, a) = (k / n_a, k % n_a);
            let analytic = bf.analytic_transmit(data.transmit(f, a));
            bf.beamform_analytic(&analytic, a, &mask_refs, norms.as_deref())
        })
        .collect();
    let n_p = bf.grid().len();
    (0..resolved.len())
        .map(|m| {
            let mut values = Vec::with_capacity(jobs * n_p);
            for img in &images {
                values.extend_from_slice(&img[m]);
            }
            AnalyticImageStack::new(*bf.grid(), cfg.angles.clone(), data.frames(), values)
        })
        .collect()
}

/// Normalized DAS over every `(frame, angle)` of `data`.
pub fn beamform_stack<T: Real>(
    data: &ChannelDataSet<T>,
    grid: &ImageGrid,
    apod: &ApodizationSpec,
    mask: Option<&ApertureMask>,
) -> Result<AnalyticImageStack<T>> {
    Ok(beamform_stacks(data, grid, apod, &[mask])?.pop().expect("one mask"))
}
