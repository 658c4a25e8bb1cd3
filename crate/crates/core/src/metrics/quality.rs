use crate::acquisition::{ImageGrid, Roi};
use crate::compounding::PowerImage;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum number of pixels a metric ROI must cover.
pub const MIN_ROI_PIXELS: usize = 16;

/// Pixel indices of two ROIs, checked to be inside the grid, disjoint and
/// large enough.
pub fn roi_pair_pixels(grid: &ImageGrid, a: &Roi, b: &Roi) -> Result<(Vec<usize>, Vec<usize>)> {
    let pa = a.pixels(grid)?;
    let pb = b.pixels(grid)?;
    for (roi, px) in [(a, &pa), (b, &pb)] {
        if px.len() < MIN_ROI_PIXELS {
            return Err(Error::invalid(format!(
                "ROI `{}` covers {} pixels, fewer than {MIN_ROI_PIXELS}",
                roi.label,
                px.len()
            )));
        }
    }
    let mut sorted = pb.clone();
    sorted.sort_unstable();
    if pa.iter().any(|p| sorted.binary_search(p).is_ok()) {
        return Err(Error::invalid(format!("ROIs `{}` and `{}` overlap", a.label, b.label)));
    }
    Ok((pa, pb))
}

fn mean_sd<T: Real>(image: &PowerImage<T>, px: &[usize]) -> (f64, f64) {
    let n = px.len() as f64;
    let mean = px.iter().map(|&p| image.values[p].as_f64()).sum::<f64>() / n;
    let var = px.iter().map(|&p| (image.values[p].as_f64() - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Region statistics shared by SNR and CNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiStats {
    pub mean_signal: f64,
    pub mean_background: f64,
    pub sd_background: f64,
}

pub fn roi_stats<T: Real>(image: &PowerImage<T>, signal: &Roi, background: &Roi) -> Result<RoiStats> {
    let (pa, pb) = roi_pair_pixels(&image.grid, signal, background)?;
    let (ma, _) = mean_sd(image, &pa);
    let (mb, sb) = mean_sd(image, &pb);
    Ok(RoiStats { mean_signal: ma, mean_background: mb, sd_background: sb })
}

impl RoiStats {
    /// `10·log10(μA / μB)`.
    pub fn snr_db(&self) -> Result<f64> {
        if !(self.mean_background > 0.0) {
            return Err(Error::numerical("empty noise region"));
        }
        if !(self.mean_signal > 0.0) {
            return Err(Error::numerical("empty signal region"));
        }
        Ok(10.0 * (self.mean_signal / self.mean_background).log10())
    }

    /// `10·log10(|μA − μB| / σB)` (population standard deviation).
    pub fn cnr_db(&self) -> Result<f64> {
        if !(self.sd_background > 0.0) {
            return Err(Error::numerical("background standard deviation is zero"));
        }
        let contrast = (self.mean_signal - self.mean_background).abs();
        if contrast == 0.0 {
            return Err(Error::numerical("zero contrast"));
        }
        Ok(10.0 * (contrast / self.sd_background).log10())
    }
}

pub fn compute_snr<T: Real>(image: &PowerImage<T>, signal: &Roi, noise: &Roi) -> Result<f64> {
    roi_stats(image, signal, noise)?.snr_db()
}

pub fn compute_cnr<T: Real>(image: &PowerImage<T>, signal: &Roi, background: &Roi) -> Result<f64> {
    roi_stats(image, signal, background)?.cnr_db()
}

/// Bilinear sample of `image` at `(x, z)`; the point must lie inside the grid.
pub fn bilinear<T: Real>(image: &PowerImage<T>, x: f64, z: f64) -> Result<f64> {
    let g = &image.grid;
    if !g.contains(x, z) {
        return Err(Error::invalid(format!("point ({x}, {z}) is outside the image grid")));
    }
    let axis = |v: f64, lo: f64, d: f64, n: usize| -> (usize, f64) {
        if n < 2 || d == 0.0 {
            return (0, 0.0);
        }
        let u = ((v - lo) / d).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        (i, u - i as f64)
    };
    let (ix, fx) = axis(x, g.x_min, g.dx(), g.nx);
    let (iz, fz) = axis(z, g.z_min, g.dz(), g.nz);
    let at = |i: usize, j: usize| image.values[g.index(i.min(g.nx - 1), j.min(g.nz - 1))].as_f64();
    let top = at(ix, iz) * (1.0 - fx) + at(ix + 1, iz) * fx;
    let bottom = at(ix, iz + 1) * (1.0 - fx) + at(ix + 1, iz + 1) * fx;
    Ok(top * (1.0 - fz) + bottom * fz)
}

/// `n` equally spaced bilinear samples from `p0` to `p1`, in dB relative to
/// the image maximum.
pub fn line_profile<T: Real>(image: &PowerImage<T>, p0: (f64, f64), p1: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("a line profile needs at least 2 samples"));
    }
    for p in [p0, p1] {
        if !image.grid.contains(p.0, p.1) {
            return Err(Error::invalid(format!("profile endpoint {p:?} is outside the image grid")));
        }
    }
    let max = image.max().as_f64();
    if !(max > 0.0) {
        return Err(Error::numerical("image is identically zero"));
    }
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let v = bilinear(image, p0.0 + s * (p1.0 - p0.0), p0.1 + s * (p1.1 - p0.1))?;
            Ok(10.0 * (v / max).log10())
        })
        .collect()
}
