use crate::acquisition::ImageGrid;
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Per-frame images sharing one grid, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries<V> {
    pub grid: ImageGrid,
    frames: usize,
    values: Vec<V>,
}

impl<V: Copy> FrameSeries<V> {
    pub fn new(grid: ImageGrid, frames: usize, values: Vec<V>) -> Result<Self> {
        if values.len() != frames * grid.len() {
            return Err(Error::shape(format!(
                "{} values for {frames} frames of {} pixels",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, frames, values })
    }

    pub fn from_frames(grid: ImageGrid, frames: Vec<Vec<V>>) -> Result<Self> {
        let n = frames.len();
        Self::new(grid, n, frames.into_iter().flatten().collect())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn frame(&self, i: usize) -> &[V] {
        let p = self.grid.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn frame_mut(&mut self, i: usize) -> &mut [V] {
        let p = self.grid.len();
        &mut self.values[i * p..(i + 1) * p]
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    pub fn map<U: Copy>(&self, f: impl Fn(V) -> U) -> FrameSeries<U> {
        FrameSeries { grid: self.grid, frames: self.frames, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// Complex beamformed images indexed `(frame, angle, pixel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticImageStack<T> {
    pub grid: ImageGrid,
    angles: Vec<f64>,
    frames: usize,
    values: Vec<Cplx<T>>,
}

impl<T: Real> AnalyticImageStack<T> {
    pub fn new(grid: ImageGrid, angles: Vec<f64>, frames: usize, values: Vec<Cplx<T>>) -> Result<Self> {
        if values.len() != frames * angles.len() * grid.len() {
            return Err(Error::shape(format!(
                "{} values for {frames} frames × {} angles × {} pixels",
                values.len(),
                angles.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("image stack contains non-finite values"));
        }
        Ok(Self { grid, angles, frames, values })
    }

    /// Builds a stack from real per-angle values (`values[f][a][p]`), zero imaginary part.
    pub fn from_real(grid: ImageGrid, angles: Vec<f64>, values: &[Vec<Vec<T>>]) -> Result<Self> {
        let flat = values
            .iter()
            .flatten()
            .flatten()
            .map(|&v| Cplx::new(v, T::zero()))
            .collect();
        Self::new(grid, angles, values.len(), flat)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn num_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn pixels(&self) -> usize {
        self.grid.len()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.frames, self.angles.len(), self.grid.len())
    }

    pub fn image(&self, frame: usize, angle: usize) -> &[Cplx<T>] {
        let p = self.grid.len();
        let start = (frame * self.angles.len() + angle) * p;
        &self.values[start..start + p]
    }

    /// All angles of one frame, angle-major.
    pub fn frame(&self, frame: usize) -> &[Cplx<T>] {
        let len = self.angles.len() * self.grid.len();
        &self.values[frame * len..(frame + 1) * len]
    }

    pub fn values(&self) -> &[Cplx<T>] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(Cplx<T>) -> Cplx<T>) -> Self {
        Self { grid: self.grid, angles: self.angles.clone(), frames: self.frames, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.grid == other.grid && self.angles == other.angles && self.frames == other.frames
    }
}
