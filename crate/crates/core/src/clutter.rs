//! Clutter rejection and noise equalisation: SVD truncation of the
//! space × time (Casorati) ensemble, rolling-mean subtraction, and
//! row-wise gain from lateral noise bands.
//!
//! Ensembles are stored frame-major: `frames` consecutive blocks of equal
//! length, each block holding every spatial sample of one frame. Channel
//! data (`frame, angle, element, sample`) and image stacks
//! (`frame, angle, pixel`) already have this layout.

use std::ops::{Add, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Zero;
use rayon::prelude::*;

use crate::acquisition::ChannelDataSet;
use crate::beamformer::{AnalyticImageStack, FrameSeries};
use crate::compounding::PowerImage;
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Real or complex ensemble sample.
pub trait EnsembleSample<T: Real>: Copy + Send + Sync + Zero + Add<Output = Self> + Sub<Output = Self> {
    const COMPLEX: bool;
    fn scale(self, k: T) -> Self;
    fn to_c64(self) -> Cplx<f64>;
    /// Real samples keep the real part.
    fn from_c64(v: Cplx<f64>) -> Self;
}

impl<T: Real> EnsembleSample<T> for T {
    const COMPLEX: bool = false;

    #[inline]
    fn scale(self, k: T) -> Self {
        self * k
    }

    #[inline]
    fn to_c64(self) -> Cplx<f64> {
        Cplx::new(self.as_f64(), 0.0)
    }

    #[inline]
    fn from_c64(v: Cplx<f64>) -> Self {
        T::of(v.re)
    }
}

impl<T: Real> EnsembleSample<T> for Cplx<T> {
    const COMPLEX: bool = true;

    #[inline]
    fn scale(self, k: T) -> Self {
        self * k
    }

    #[inline]
    fn to_c64(self) -> Cplx<f64> {
        Cplx::new(self.re.as_f64(), self.im.as_f64())
    }

    #[inline]
    fn from_c64(v: Cplx<f64>) -> Self {
        Cplx::new(T::of(v.re), T::of(v.im))
    }
}

fn frame_stride(len: usize, frames: usize) -> Result<usize> {
    if frames == 0 || !len.is_multiple_of(frames) {
        return Err(Error::shape(format!("{len} samples do not split into {frames} frames")));
    }
    Ok(len / frames)
}

/// Singular components kept by the SVD filter: indices in
/// `low_cut..high_cut` (descending singular-value order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SvdThresholds {
    pub low_cut: usize,
    pub high_cut: Option<usize>,
}

impl SvdThresholds {
    pub fn new(low_cut: usize, high_cut: Option<usize>) -> Self {
        Self { low_cut, high_cut }
    }

    pub fn validate(&self, frames: usize) -> Result<()> {
        if self.low_cut > frames {
            return Err(Error::invalid(format!("low_cut {} exceeds ensemble length {frames}", self.low_cut)));
        }
        if let Some(h) = self.high_cut {
            if h <= self.low_cut {
                return Err(Error::invalid(format!("high_cut {h} must exceed low_cut {}", self.low_cut)));
            }
            if h > frames {
                return Err(Error::invalid(format!("high_cut {h} exceeds ensemble length {frames}")));
            }
        }
        Ok(())
    }

    fn keeps(&self, i: usize) -> bool {
        i >= self.low_cut && self.high_cut.is_none_or(|h| i < h)
    }
}

/// Temporal singular basis of an ensemble.
#[derive(Debug, Clone)]
pub struct SvdBasis {
    frames: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `vectors[i]` is the i-th right singular vector (length `frames`).
    vectors: Vec<Vec<Cplx<f64>>>,
}

/// Thin SVD of the Casorati matrix through the eigendecomposition of its
/// `frames × frames` Gram matrix.
pub fn svd_basis<T: Real, V: EnsembleSample<T>>(data: &[V], frames: usize) -> Result<SvdBasis> {
    let stride = frame_stride(data.len(), frames)?;
    if frames < 2 {
        return Err(Error::invalid("SVD filtering needs at least 2 frames"));
    }
    let cols: Vec<&[V]> = data.chunks_exact(stride).collect();
    let pairs: Vec<(usize, usize)> = (0..frames).flat_map(|a| (a..frames).map(move |b| (a, b))).collect();
    let entries: Vec<Cplx<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut acc = Cplx::new(0.0, 0.0);
            for (&x, &y) in cols[a].iter().zip(cols[b]) {
                acc += x.to_c64().conj() * y.to_c64();
            }
            acc
        })
        .collect();
    if entries.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::numerical("non-finite Gram matrix"));
    }
    let mut pairs_vals: Vec<(f64, Vec<Cplx<f64>>)> = if V::COMPLEX {
        let mut g = DMatrix::<Cplx<f64>>::zeros(frames, frames);
        for (&(a, b), &v) in pairs.iter().zip(&entries) {
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
        let eig = SymmetricEigen::new(g);
        (0..frames).map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect())).collect()
    } else {
        let mut g = DMatrix::<f64>::zeros(frames, frames);
        for (&(a, b), &v) in pairs.iter().zip(&entries) {
            g[(a, b)] = v.re;
            g[(b, a)] = v.re;
        }
        let eig = SymmetricEigen::new(g);
        (0..frames)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().map(|&x| Cplx::new(x, 0.0)).collect()))
            .collect()
    };
    pairs_vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(SvdBasis {
        frames,
        singular_values: pairs_vals.iter().map(|(l, _)| l.max(0.0).sqrt()).collect(),
        vectors: pairs_vals.into_iter().map(|(_, v)| v).collect(),
    })
}

impl SvdBasis {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn projector(&self, thresholds: SvdThresholds) -> Result<TemporalFilter> {
        thresholds.validate(self.frames)?;
        let kept: Vec<usize> = (0..self.frames).filter(|&i| thresholds.keeps(i)).collect();
        let removed: Vec<usize> = (0..self.frames).filter(|&i| !thresholds.keeps(i)).collect();
        let (subtract, chosen) = if removed.len() <= kept.len() { (true, removed) } else { (false, kept) };
        Ok(TemporalFilter {
            frames: self.frames,
            subtract,
            vectors: chosen.into_iter().map(|i| self.vectors[i].clone()).collect(),
        })
    }
}

/// Linear time-domain filter `y ↦ y · K` with `K` a projector built from
/// singular vectors, applicable to any ensemble with the same frame count.
#[derive(Debug, Clone)]
pub struct TemporalFilter {
    frames: usize,
    /// `true`: `K = I − V Vᴴ`; `false`: `K = V Vᴴ`.
    subtract: bool,
    vectors: Vec<Vec<Cplx<f64>>>,
}

const SPACE_CHUNK: usize = 4096;

impl TemporalFilter {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn apply<T: Real, V: EnsembleSample<T>>(&self, data: &[V]) -> Result<Vec<V>> {
        let stride = frame_stride(data.len(), self.frames)?;
        let r = self.vectors.len();
        let mut out: Vec<V> = if self.subtract { data.to_vec() } else { vec![V::zero(); data.len()] };
        if r == 0 {
            return Ok(out);
        }
        let mut w = vec![Cplx::new(0.0, 0.0); r * SPACE_CHUNK];
        let mut s0 = 0;
        while s0 < stride {
            let len = SPACE_CHUNK.min(stride - s0);
            w[..r * len].fill(Cplx::new(0.0, 0.0));
            for t in 0..self.frames {
                let col = &data[t * stride + s0..t * stride + s0 + len];
                for (i, v) in self.vectors.iter().enumerate() {
                    let c = v[t];
                    for (acc, &y) in w[i * len..(i + 1) * len].iter_mut().zip(col) {
                        *acc += y.to_c64() * c;
                    }
                }
            }
            for t in 0..self.frames {
                let col = &mut out[t * stride + s0..t * stride + s0 + len];
                for (s, o) in col.iter_mut().enumerate() {
                    let mut proj = Cplx::new(0.0, 0.0);
                    for (i, v) in self.vectors.iter().enumerate() {
                        proj += w[i * len + s] * v[t].conj();
                    }
                    let p = V::from_c64(proj);
                    *o = if self.subtract { *o - p } else { p };
                }
            }
            s0 += len;
        }
        Ok(out)
    }
}

/// Removes singular components outside `low_cut..high_cut`.
pub fn svd_filter<T: Real, V: EnsembleSample<T>>(data: &[V], frames: usize, thresholds: SvdThresholds) -> Result<Vec<V>> {
    thresholds.validate(frames)?;
    svd_basis(data, frames)?.projector(thresholds)?.apply(data)
}

/// Index of maximum discrete curvature of `log(σ)`, i.e. the argmax over
/// `1 ≤ i ≤ n−2` of `l[i−1] − 2 l[i] + l[i+1]`; ties (within rounding) go
/// to the lowest index.
/// Values below `σ₀·1e−15` are floored there before taking logs.
pub fn svd_knee_heuristic(singular_values: &[f64]) -> Result<usize> {
    if singular_values.len() < 3 {
        return Err(Error::invalid("knee selection needs at least 3 singular values"));
    }
    let top = singular_values[0];
    if !(top > 0.0) || singular_values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("singular values must be finite, positive and descending"));
    }
    if singular_values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("singular values must be descending"));
    }
    let floor = top * 1e-15;
    let l: Vec<f64> = singular_values.iter().map(|v| v.max(floor).ln()).collect();
    let tol = 1e-9 * l.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut best = 1;
    let mut best_val = f64::NEG_INFINITY;
    for i in 1..l.len() - 1 {
        let d2 = l[i - 1] - 2.0 * l[i] + l[i + 1];
        if d2 > best_val + tol {
            best_val = d2;
            best = i;
        }
    }
    Ok(best)
}

/// Number of frames averaged by rolling-mean subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RollingWindow {
    length: usize,
}

impl RollingWindow {
    pub fn new(length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("rolling window length must be ≥ 1"));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// `|1 − (1/W) Σ_{k<W} e^{−iωk}|` at `freq` for frame rate `fps`.
    pub fn magnitude_response(&self, freq: f64, fps: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / fps;
        let mean: Cplx<f64> = (0..self.length).map(|k| Cplx::from_polar(1.0, -w * k as f64)).sum::<Cplx<f64>>() / self.length as f64;
        (Cplx::new(1.0, 0.0) - mean).norm()
    }

    /// Lowest frequency on a 1 mHz grid where the power response reaches
    /// one half; `None` when it never does below Nyquist.
    pub fn cutoff_frequency(&self, fps: f64) -> Option<f64> {
        let steps = (fps * 500.0).round() as usize;
        (0..=steps).map(|i| i as f64 * 1e-3).find(|&f| self.magnitude_response(f, fps).powi(2) >= 0.5)
    }

    /// Window whose −3 dB point lies nearest `cutoff` Hz; ties go to the
    /// shorter window.
    pub fn for_cutoff(cutoff: f64, fps: f64, max_length: usize) -> Result<Self> {
        if !(cutoff > 0.0 && fps > 0.0 && cutoff < fps / 2.0) {
            return Err(Error::invalid(format!("cutoff {cutoff} Hz is not inside (0, {}) Hz", fps / 2.0)));
        }
        let mut best: Option<(f64, usize)> = None;
        for w in 2..=max_length.max(2) {
            if let Some(f) = (RollingWindow { length: w }).cutoff_frequency(fps) {
                let d = (f - cutoff).abs();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, w));
                }
            }
        }
        let (_, w) = best.ok_or_else(|| Error::invalid("no rolling window reaches the requested cutoff"))?;
        Self::new(w)
    }
}

/// `y'(t) = (1/k) Σ_{j=t−k+1..t} (y(t) − y(j))` with `k = min(W, t+1)`,
/// which is `y(t)` minus the mean of the available history.
pub fn rolling_subtraction<T: Real, V: EnsembleSample<T>>(data: &[V], frames: usize, window: RollingWindow) -> Result<Vec<V>> {
    let stride = frame_stride(data.len(), frames)?;
    let mut out = vec![V::zero(); data.len()];
    out.par_chunks_mut(stride.max(1)).enumerate().for_each(|(t, dst)| {
        let k = window.length.min(t + 1);
        let cur = &data[t * stride..(t + 1) * stride];
        for j in t + 1 - k..t {
            let past = &data[j * stride..(j + 1) * stride];
            for ((o, &y), &p) in dst.iter_mut().zip(cur).zip(past) {
                *o = *o + (y - p);
            }
        }
        let inv = T::one() / T::of_usize(k);
        for o in dst.iter_mut() {
            *o = o.scale(inv);
        }
    });
    Ok(out)
}

/// Axial velocity whose Doppler shift equals `f_cut`: `c·f_cut / (2 f0)`.
pub fn cutoff_velocity(f_cut: f64, f0: f64, c: f64) -> Result<f64> {
    if !(f_cut > 0.0 && f0 > 0.0 && c > 0.0) || !(f_cut.is_finite() && f0.is_finite() && c.is_finite()) {
        return Err(Error::invalid("cutoff velocity inputs must be positive"));
    }
    Ok(c * f_cut / (2.0 * f0))
}

/// How the SVD rank cut is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdRank {
    Fixed(SvdThresholds),
    /// `low_cut` from [`svd_knee_heuristic`].
    Knee { high_cut: Option<usize> },
}

impl SvdRank {
    pub fn resolve(&self, basis: &SvdBasis) -> Result<SvdThresholds> {
        match *self {
            SvdRank::Fixed(t) => Ok(t),
            SvdRank::Knee { high_cut } => {
                let low_cut = svd_knee_heuristic(&basis.singular_values)?;
                Ok(SvdThresholds { low_cut, high_cut: high_cut.filter(|&h| h > low_cut) })
            }
        }
    }
}

/// Clutter filter applied to channel data ahead of beamforming.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ClutterFilter {
    #[default]
    None,
    Svd(SvdRank),
    Rolling(RollingWindow),
}

/// Filtered dataset plus the SVD cut actually used.
pub fn filter_dataset<T: Real>(data: &ChannelDataSet<T>, filter: &ClutterFilter) -> Result<(ChannelDataSet<T>, Option<SvdThresholds>)> {
    match filter {
        ClutterFilter::None => Ok((data.clone(), None)),
        ClutterFilter::Rolling(w) => Ok((data.with_samples(rolling_subtraction(data.samples(), data.frames(), *w)?)?, None)),
        ClutterFilter::Svd(rank) => {
            let basis = svd_basis(data.samples(), data.frames())?;
            let t = rank.resolve(&basis)?;
            let out = basis.projector(t)?.apply(data.samples())?;
            Ok((data.with_samples(out)?, Some(t)))
        }
    }
}

/// Applies a temporal filter to every angle and pixel of an image stack.
pub fn filter_stack<T: Real>(stack: &AnalyticImageStack<T>, filter: &TemporalFilter) -> Result<AnalyticImageStack<T>> {
    let out = filter.apply(stack.values())?;
    AnalyticImageStack::new(stack.grid, stack.angles().to_vec(), stack.frames(), out)
}

/// Per-image SVD filter (space = pixels) on a frame series.
pub fn svd_filter_series<T: Real, V: EnsembleSample<T>>(series: &FrameSeries<V>, rank: SvdRank) -> Result<(FrameSeries<V>, SvdThresholds)> {
    let basis = svd_basis(series.values(), series.frames())?;
    let t = rank.resolve(&basis)?;
    let out = basis.projector(t)?.apply(series.values())?;
    Ok((FrameSeries::new(series.grid, series.frames(), out)?, t))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) }
}

/// Row gains from the lateral noise bands (`band` columns at each edge) and
/// the equalised frames.
pub fn tgc_equalize<T: Real>(frames: &[PowerImage<T>], band: usize) -> Result<(Vec<T>, Vec<PowerImage<T>>)> {
    let first = frames.first().ok_or_else(|| Error::invalid("no frames to equalise"))?;
    let grid = first.grid;
    if frames.iter().any(|f| f.grid != grid) {
        return Err(Error::shape("frames are on different grids"));
    }
    if band == 0 || 2 * band > grid.nx {
        return Err(Error::invalid(format!("noise band of {band} columns does not fit {} columns", grid.nx)));
    }
    let cols: Vec<usize> = (0..band).chain(grid.nx - band..grid.nx).collect();
    let mut all = Vec::with_capacity(grid.nz * cols.len() * frames.len());
    let mut row_noise = Vec::with_capacity(grid.nz);
    for iz in 0..grid.nz {
        let mut row: Vec<f64> = frames
            .iter()
            .flat_map(|f| cols.iter().map(move |&ix| f.values[grid.index(ix, iz)].as_f64()))
            .collect();
        all.extend_from_slice(&row);
        row_noise.push(median(&mut row));
    }
    if all.iter().all(|v| *v == 0.0) {
        return Err(Error::numerical("noise band is identically zero"));
    }
    let global = median(&mut all);
    let gains: Vec<T> = row_noise
        .iter()
        .map(|&r| T::of(if r > 0.0 { (global / r).clamp(0.1, 10.0) } else { 10.0 }))
        .collect();
    let equalized = frames
        .iter()
        .map(|f| {
            let mut v = f.values.clone();
            for (iz, &g) in gains.iter().enumerate() {
                for x in &mut v[iz * grid.nx..(iz + 1) * grid.nx] {
                    *x *= g;
                }
            }
            PowerImage { grid, values: v, ensemble_length: f.ensemble_length }
        })
        .collect();
    Ok((gains, equalized))
}
