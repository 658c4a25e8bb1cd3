use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Gaussian,
    Hann,
}

/// Transmitted pulse shape: a cosine carrier under a Hann or Gaussian envelope
/// lasting `cycles` periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub center_frequency: f64,
    pub cycles: f64,
    pub envelope: Envelope,
}

impl PulseSpec {
    /// Three-cycle Hann pulse at `f`.
    pub fn three_cycle(f: f64) -> Self {
        Self { center_frequency: f, cycles: 3.0, envelope: Envelope::Hann }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cycles > 0.0) || !(self.center_frequency > 0.0) {
            return Err(Error::invalid("pulse needs cycles > 0 and a positive frequency"));
        }
        Ok(())
    }

    /// Nominal pulse length `cycles / f` in seconds.
    pub fn length(&self) -> f64 {
        self.cycles / self.center_frequency
    }

    /// Half-width of the support outside which the waveform is zero.
    pub fn half_support(&self) -> f64 {
        match self.envelope {
            Envelope::Hann => self.length() / 2.0,
            // ±4 standard deviations with sigma = length / 6
            Envelope::Gaussian => self.length() * 2.0 / 3.0,
        }
    }

    /// Waveform value at `t` seconds from the pulse center.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let half = self.half_support();
        if t.abs() > half {
            return 0.0;
        }
        let env = match self.envelope {
            Envelope::Hann => 0.5 * (1.0 + (PI * t / half).cos()),
            Envelope::Gaussian => {
                let sigma = self.length() / 6.0;
                (-0.5 * (t / sigma).powi(2)).exp()
            }
        };
        env * (2.0 * PI * self.center_frequency * t).cos()
    }

    /// Adds `amp · value(t0 + n·dt)` to `out[n]` for every `n`.
    pub fn accumulate(&self, out: &mut [f64], t0: f64, dt: f64, amp: f64) {
        match self.envelope {
            Envelope::Gaussian => {
                for (n, v) in out.iter_mut().enumerate() {
                    *v += amp * self.value(t0 + n as f64 * dt);
                }
            }
            Envelope::Hann => {
                // both cosines advance by a fixed phase per sample
                let half = self.half_support();
                let we = PI / half;
                let wc = 2.0 * PI * self.center_frequency;
                let (mut es, mut ec) = (we * t0).sin_cos();
                let (mut cs, mut cc) = (wc * t0).sin_cos();
                let (des, dec) = (we * dt).sin_cos();
                let (dcs, dcc) = (wc * dt).sin_cos();
                for (n, v) in out.iter_mut().enumerate() {
                    let t = t0 + n as f64 * dt;
                    if t.abs() <= half {
                        *v += amp * 0.5 * (1.0 + ec) * cc;
                    }
                    (ec, es) = (ec * dec - es * des, es * dec + ec * des);
                    (cc, cs) = (cc * dcc - cs * dcs, cs * dcc + cc * dcs);
                }
            }
        }
    }
}
