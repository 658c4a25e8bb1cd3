use super::config::AcquisitionConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Raw per-element RF traces indexed `(frame, angle, element, sample)`,
/// stored row-major in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDataSet<T> {
    config: AcquisitionConfig,
    /// Time of the first sample relative to the transmit (s).
    t0: f64,
    frames: usize,
    sample_count: usize,
    samples: Vec<T>,
}

impl<T: Real> ChannelDataSet<T> {
    pub fn new(
        config: AcquisitionConfig,
        t0: f64,
        frames: usize,
        sample_count: usize,
        samples: Vec<T>,
    ) -> Result<Self> {
        let expected = frames * config.num_angles() * config.num_elements * sample_count;
        if samples.len() != expected {
            return Err(Error::shape(format!(
                "dataset holds {} samples, dimensions require {expected}",
                samples.len()
            )));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("t0 must be finite"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite samples"));
        }
        Ok(Self { config, t0, frames, sample_count, samples })
    }

    pub fn zeros(config: AcquisitionConfig, t0: f64, frames: usize, sample_count: usize) -> Self {
        let n = frames * config.num_angles() * config.num_elements * sample_count;
        Self { config, t0, frames, sample_count, samples: vec![T::zero(); n] }
    }

    pub fn config(&self) -> &AcquisitionConfig {
        &self.config
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// Samples of one `(frame, angle)` transmit: `elements × sample_count`.
    pub fn transmit_len(&self) -> usize {
        self.config.num_elements * self.sample_count
    }

    /// Samples of one frame: all angles.
    pub fn frame_len(&self) -> usize {
        self.config.num_angles() * self.transmit_len()
    }

    pub fn transmit(&self, frame: usize, angle: usize) -> &[T] {
        let len = self.transmit_len();
        let start = (frame * self.config.num_angles() + angle) * len;
        &self.samples[start..start + len]
    }

    pub fn transmit_mut(&mut self, frame: usize, angle: usize) -> &mut [T] {
        let len = self.transmit_len();
        let start = (frame * self.config.num_angles() + angle) * len;
        &mut self.samples[start..start + len]
    }

    pub fn trace(&self, frame: usize, angle: usize, element: usize) -> &[T] {
        let s = self.sample_count;
        &self.transmit(frame, angle)[element * s..(element + 1) * s]
    }

    /// Time of sample `n`.
    pub fn sample_time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.config.sampling_frequency
    }

    /// Same acquisition with the sample tensor replaced (shape must agree).
    pub fn with_samples(&self, samples: Vec<T>) -> Result<Self> {
        Self::new(self.config.clone(), self.t0, self.frames, self.sample_count, samples)
    }

    /// Frames `range` as a new dataset.
    pub fn slice_frames(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.frames || range.start > range.end {
            return Err(Error::invalid("frame range outside dataset"));
        }
        let fl = self.frame_len();
        Ok(Self {
            config: self.config.clone(),
            t0: self.t0,
            frames: range.len(),
            sample_count: self.sample_count,
            samples: self.samples[range.start * fl..range.end * fl].to_vec(),
        })
    }

    /// Converts the sample type.
    pub fn cast<U: Real>(&self) -> ChannelDataSet<U> {
        ChannelDataSet {
            config: self.config.clone(),
            t0: self.t0,
            frames: self.frames,
            sample_count: self.sample_count,
            samples: self.samples.iter().map(|s| U::of(s.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let cfg = AcquisitionConfig { angles: vec![-0.1, 0.0, 0.1], ..AcquisitionConfig::desk() };
        let (f, a, e, s) = (2, 3, cfg.num_elements, 4);
        let samples: Vec<f64> = (0..f * a * e * s).map(|i| i as f64).collect();
        let d = ChannelDataSet::new(cfg, 1e-6, f, s, samples).unwrap();
        let t = d.trace(1, 2, 5);
        assert_eq!(t[0], (((a + 2) * e + 5) * s) as f64);
        assert_eq!(t.len(), s);
        assert_eq!(d.slice_frames(1..2).unwrap().trace(0, 2, 5), t);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        let cfg = AcquisitionConfig::desk();
        assert!(matches!(
            ChannelDataSet::<f32>::new(cfg.clone(), 0.0, 1, 3, vec![0.0; 7]),
            Err(Error::Shape(_))
        ));
        let n = cfg.num_angles() * cfg.num_elements;
        let mut v = vec![0.0f32; n];
        v[3] = f32::NAN;
        assert!(ChannelDataSet::new(cfg, 0.0, 1, 1, v).is_err());
    }
}
