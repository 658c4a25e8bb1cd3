use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};

/// Probe, transmit sequence and sampling parameters shared by every stage.
///
/// Element `i` sits at `x_i = (i - (N-1)/2) * pitch`, `z = 0`; `x` runs
/// laterally along the array and `z` is depth.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionConfig {
    pub num_elements: usize,
    /// Element pitch in meters.
    pub pitch: f64,
    /// Probe center frequency (Hz).
    pub center_frequency: f64,
    /// Transmitted pulse frequency (Hz).
    pub transmit_frequency: f64,
    pub sampling_frequency: f64,
    /// Speed of sound (m/s).
    pub sound_speed: f64,
    /// Plane-wave steering angles in radians, strictly increasing.
    pub angles: Vec<f64>,
    /// Pulse repetition frequency (Hz): one transmit per angle.
    pub prf: f64,
    pub frame_rate: f64,
    /// Tukey taper of the transmit apodization.
    pub tukey_alpha: f64,
}

impl AcquisitionConfig {
    /// Desk-scale default: 64 elements at 0.2 mm, 5 MHz, 20 MHz sampling,
    /// five angles spanning 10 degrees, 100 frames/s.
    pub fn desk() -> Self {
        Self {
            num_elements: 64,
            pitch: 0.2e-3,
            center_frequency: 5.0e6,
            transmit_frequency: 5.0e6,
            sampling_frequency: 20.0e6,
            sound_speed: 1540.0,
            angles: spread_degrees(5, 10.0),
            prf: 5000.0,
            frame_rate: 100.0,
            tukey_alpha: 0.25,
        }
    }

    /// 128 central elements of the L3-12-D probe with ten angles over 20 degrees.
    pub fn full_scale() -> Self {
        Self {
            num_elements: 128,
            pitch: 0.2e-3,
            center_frequency: 6.5e6,
            transmit_frequency: 5.0e6,
            sampling_frequency: 26.0e6,
            sound_speed: 1540.0,
            angles: spread_degrees(10, 20.0),
            prf: 7000.0,
            frame_rate: 100.0,
            tukey_alpha: 0.25,
        }
    }

    pub fn num_angles(&self) -> usize {
        self.angles.len()
    }

    /// Lateral position of element `i` in meters.
    #[inline]
    pub fn element_x(&self, i: usize) -> f64 {
        (i as f64 - (self.num_elements as f64 - 1.0) / 2.0) * self.pitch
    }

    /// Half the distance between the outer element centers.
    pub fn half_aperture(&self) -> f64 {
        (self.num_elements as f64 - 1.0) * self.pitch / 2.0
    }

    /// Wavelength at the transmit frequency.
    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.transmit_frequency
    }

    /// Checks every invariant, reporting the first one violated.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.num_elements < 2 {
            return Err(Error::config("num_elements ≥ 2"));
        }
        if !positive(self.pitch) {
            return Err(Error::config("pitch > 0"));
        }
        if !positive(self.center_frequency) {
            return Err(Error::config("center_frequency > 0"));
        }
        if !positive(self.transmit_frequency) {
            return Err(Error::config("transmit_frequency > 0"));
        }
        if !positive(self.sound_speed) {
            return Err(Error::config("sound_speed > 0"));
        }
        if !(self.sampling_frequency.is_finite()
            && self.sampling_frequency > 2.0 * self.center_frequency)
        {
            return Err(Error::config("sampling_frequency > 2 × center_frequency"));
        }
        if self.angles.is_empty() {
            return Err(Error::config("angles non-empty"));
        }
        if self.angles.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("angles not increasing"));
        }
        if self
            .angles
            .iter()
            .any(|a| !(a.is_finite() && a.abs() < FRAC_PI_4))
        {
            return Err(Error::config("angles within (−π/4, π/4)"));
        }
        if !positive(self.prf) || !positive(self.frame_rate) {
            return Err(Error::config("prf and frame_rate > 0"));
        }
        if self.prf < self.frame_rate * self.angles.len() as f64 {
            return Err(Error::config("prf ≥ frame_rate × |angles|"));
        }
        if !(0.0..=1.0).contains(&self.tukey_alpha) {
            return Err(Error::config("tukey_alpha in [0, 1]"));
        }
        Ok(())
    }
}

/// Returns `config` unchanged when every invariant holds.
pub fn validate_config(config: AcquisitionConfig) -> Result<AcquisitionConfig> {
    config.validate()?;
    Ok(config)
}

/// `n` angles evenly spread over `span_deg` degrees, centered on zero.
pub fn spread_degrees(n: usize, span_deg: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| (-span_deg / 2.0 + span_deg * i as f64 / (n as f64 - 1.0)).to_radians())
        .collect()
}

/// Tukey window on `u ∈ [0, 1]`; zero outside.
pub fn tukey(u: f64, alpha: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    if alpha <= 0.0 {
        return 1.0;
    }
    let half = alpha / 2.0;
    if u < half {
        0.5 * (1.0 + (std::f64::consts::PI * (u / half - 1.0)).cos())
    } else if u > 1.0 - half {
        0.5 * (1.0 + (std::f64::consts::PI * ((u - 1.0) / half + 1.0)).cos())
    } else {
        1.0
    }
}
