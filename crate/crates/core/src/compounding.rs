//! Angle combination (coherent sum and frame multiply and sum), amplitude
//! modulation combination, and power Doppler from frame ensembles.

use std::ops::Range;

use num_traits::Zero;

use crate::acquisition::ImageGrid;
use crate::beamformer::{AnalyticImageStack, FrameSeries};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// How each pair of per-angle values is combined in FMAS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FmasVariant {
    /// `sign(y_a y_b) · |y_a y_b|`, i.e. the plain product.
    AsPrinted,
    /// `sign(y_a y_b) · √|y_a y_b|`; keeps the output in signal units.
    #[default]
    SignedSqrt,
}

impl FmasVariant {
    pub fn name(&self) -> &'static str {
        match self {
            FmasVariant::AsPrinted => "as_printed",
            FmasVariant::SignedSqrt => "signed_sqrt",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "as_printed" => Ok(Self::AsPrinted),
            "signed_sqrt" => Ok(Self::SignedSqrt),
            _ => Err(Error::invalid(format!("unknown FMAS variant `{s}`"))),
        }
    }

    #[inline]
    fn pair<T: Real>(&self, a: T, b: T) -> T {
        let p = a * b;
        match self {
            FmasVariant::AsPrinted => p,
            FmasVariant::SignedSqrt => {
                let r = p.abs().sqrt();
                if p < T::zero() { -r } else { r }
            }
        }
    }
}

/// FMAS of one pixel's per-angle real values: sum over pairs `a < b` in
/// ascending pair order.
pub fn fmas_pixel<T: Real>(values: &[T], variant: FmasVariant) -> T {
    let mut acc = T::zero();
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            acc += variant.pair(values[a], values[b]);
        }
    }
    acc
}

/// Pixel-wise sum over angles, per frame.
pub fn coherent_compound<T: Real>(stack: &AnalyticImageStack<T>) -> Result<FrameSeries<Cplx<T>>> {
    let (frames, angles, pixels) = stack.shape();
    if angles == 0 {
        return Err(Error::invalid("coherent compounding needs at least one angle"));
    }
    let mut values = vec![Cplx::zero(); frames * pixels];
    for f in 0..frames {
        let out = &mut values[f * pixels..(f + 1) * pixels];
        for a in 0..angles {
            for (o, v) in out.iter_mut().zip(stack.image(f, a)) {
                *o += *v;
            }
        }
    }
    FrameSeries::new(stack.grid, frames, values)
}

/// FMAS over the real (RF) part of each per-angle image, per frame.
pub fn fmas_compound<T: Real>(stack: &AnalyticImageStack<T>, variant: FmasVariant) -> Result<FrameSeries<T>> {
    let (frames, angles, pixels) = stack.shape();
    if angles < 2 {
        return Err(Error::invalid("FMAS requires ≥2 angles"));
    }
    let mut values = vec![T::zero(); frames * pixels];
    let mut column = vec![T::zero(); angles];
    for f in 0..frames {
        let frame = stack.frame(f);
        let out = &mut values[f * pixels..(f + 1) * pixels];
        for (p, o) in out.iter_mut().enumerate() {
            for (a, c) in column.iter_mut().enumerate() {
                *c = frame[a * pixels + p].re;
            }
            *o = fmas_pixel(&column, variant);
        }
    }
    FrameSeries::new(stack.grid, frames, values)
}

/// Amplitude-modulation combination `full − half1 − half2`.
pub fn am_combine<T: Real>(half1: &[T], full: &[T], half2: &[T]) -> Result<Vec<T>> {
    if half1.len() != full.len() || half2.len() != full.len() {
        return Err(Error::shape(format!(
            "AM traces differ in length: {} / {} / {}",
            half1.len(),
            full.len(),
            half2.len()
        )));
    }
    Ok(full.iter().zip(half1).zip(half2).map(|((&f, &h1), &h2)| f - h1 - h2).collect())
}

/// Per-pixel sample types whose power and cross products are defined.
pub trait PixelValue<T: Real>: Copy + Send + Sync {
    fn power(self) -> T;
    /// `self · conj(other)`.
    fn mul_conj(self, other: Self) -> Cplx<T>;
}

impl<T: Real> PixelValue<T> for T {
    #[inline]
    fn power(self) -> T {
        self * self
    }

    #[inline]
    fn mul_conj(self, other: Self) -> Cplx<T> {
        Cplx::new(self * other, T::zero())
    }
}

impl<T: Real> PixelValue<T> for Cplx<T> {
    #[inline]
    fn power(self) -> T {
        self.norm_sqr()
    }

    #[inline]
    fn mul_conj(self, other: Self) -> Cplx<T> {
        self * other.conj()
    }
}

/// Non-negative per-pixel power map.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerImage<T> {
    pub grid: ImageGrid,
    pub values: Vec<T>,
    pub ensemble_length: usize,
}

impl<T: Real> PowerImage<T> {
    pub fn new(grid: ImageGrid, values: Vec<T>, ensemble_length: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape(format!("{} values for {} pixels", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::invalid("power image values must be finite and ≥ 0"));
        }
        Ok(Self { grid, values, ensemble_length })
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::of_usize(self.values.len().max(1))
    }

    pub fn at(&self, x: f64, z: f64) -> T {
        self.values[self.grid.nearest(x, z)]
    }

    pub fn cast<U: Real>(&self) -> PowerImage<U> {
        PowerImage { grid: self.grid, values: self.values.iter().map(|v| U::of(v.as_f64())).collect(), ensemble_length: self.ensemble_length }
    }
}

pub(crate) fn check_ensemble(frames: usize, ensemble: &Range<usize>) -> Result<()> {
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    if ensemble.end > frames {
        return Err(Error::invalid(format!("ensemble {ensemble:?} exceeds {frames} frames")));
    }
    Ok(())
}

/// Pixel-wise mean of `|value|²` over the frames in `ensemble`.
pub fn power_doppler<T: Real, V: PixelValue<T>>(frames: &FrameSeries<V>, ensemble: Range<usize>) -> Result<PowerImage<T>> {
    check_ensemble(frames.frames(), &ensemble)?;
    let n = ensemble.len();
    let mut acc = vec![T::zero(); frames.grid.len()];
    for f in ensemble {
        for (a, v) in acc.iter_mut().zip(frames.frame(f)) {
            *a += v.power();
        }
    }
    let inv = T::one() / T::of_usize(n);
    PowerImage::new(frames.grid, acc.into_iter().map(|a| a * inv).collect(), n)
}
