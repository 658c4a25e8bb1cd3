//! Binary dataset container.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "SBF1"
//! u32 frames, u32 angles, u32 elements, u32 samples
//! f64 pitch, fc, fs, c, t0, prf, frame_rate
//! u32 angle_count, f64 × angle_count (radians)
//! f32 × frames·angles·elements·samples   (frame, angle, element, sample) row-major
//! ```
//!
//! Writers append an optional 20-byte trailer `"SBFX" f64 transmit_frequency
//! f64 tukey_alpha` carrying the two config fields the header has no slot
//! for. Readers accept files with or without it; when absent the transmit
//! frequency defaults to `fc` and the Tukey taper to 0.25.

use std::io::{Read, Write};
use std::path::Path;

use super::config::AcquisitionConfig;
use super::dataset::ChannelDataSet;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"SBF1";
const TRAILER: &[u8; 4] = b"SBFX";
const TRAILER_LEN: usize = 4 + 16;
const DEFAULT_TUKEY: f64 = 0.25;

/// Serializes `data` into the container byte layout.
pub fn encode_dataset<T: Real>(data: &ChannelDataSet<T>) -> Result<Vec<u8>> {
    let c = data.config();
    let dim = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::invalid(format!("{what} exceeds u32")))
    };
    let mut out = Vec::with_capacity(64 + 8 * c.angles.len() + 4 * data.samples().len());
    out.extend_from_slice(MAGIC);
    for (v, what) in [
        (data.frames(), "frames"),
        (c.num_angles(), "angles"),
        (c.num_elements, "elements"),
        (data.sample_count(), "samples"),
    ] {
        out.extend_from_slice(&dim(v, what)?.to_le_bytes());
    }
    for v in [
        c.pitch,
        c.center_frequency,
        c.sampling_frequency,
        c.sound_speed,
        data.t0(),
        c.prf,
        c.frame_rate,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&dim(c.angles.len(), "angle count")?.to_le_bytes());
    for a in &c.angles {
        out.extend_from_slice(&a.to_le_bytes());
    }
    for s in data.samples() {
        let v = s.to_f32().ok_or_else(|| Error::invalid("sample not representable as f32"))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(TRAILER);
    out.extend_from_slice(&c.transmit_frequency.to_le_bytes());
    out.extend_from_slice(&c.tukey_alpha.to_le_bytes());
    Ok(out)
}

/// Writes `data` to `path` atomically.
pub fn write_dataset<T: Real>(data: &ChannelDataSet<T>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_dataset(data)?)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format("truncated header"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses container bytes.
pub fn decode_dataset<T: Real>(bytes: &[u8]) -> Result<ChannelDataSet<T>> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::format("bad magic, expected SBF1"));
    }
    let frames = cur.u32()?;
    let angles = cur.u32()?;
    let elements = cur.u32()?;
    let samples = cur.u32()?;
    let pitch = cur.f64()?;
    let fc = cur.f64()?;
    let fs = cur.f64()?;
    let c = cur.f64()?;
    let t0 = cur.f64()?;
    let prf = cur.f64()?;
    let frame_rate = cur.f64()?;
    let angle_count = cur.u32()?;
    if angle_count != angles {
        return Err(Error::shape(format!(
            "header declares {angles} angles but lists {angle_count}"
        )));
    }
    let angle_list = (0..angle_count).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;

    let count = frames
        .checked_mul(angles)
        .and_then(|v| v.checked_mul(elements))
        .and_then(|v| v.checked_mul(samples))
        .ok_or_else(|| Error::shape("tensor dimensions overflow"))?;
    let body = &bytes[cur.pos..];
    let tensor_bytes = count * 4;
    let (transmit_frequency, tukey_alpha) = match body.len().checked_sub(tensor_bytes) {
        Some(0) => (fc, DEFAULT_TUKEY),
        Some(TRAILER_LEN) if &body[tensor_bytes..tensor_bytes + 4] == TRAILER => {
            let t = &body[tensor_bytes + 4..];
            (
                f64::from_le_bytes(t[..8].try_into().unwrap()),
                f64::from_le_bytes(t[8..16].try_into().unwrap()),
            )
        }
        _ => {
            return Err(Error::shape(format!(
                "header dimensions {frames}×{angles}×{elements}×{samples} need {tensor_bytes} tensor bytes, file has {}",
                body.len()
            )))
        }
    };
    let data: Vec<T> = body[..tensor_bytes]
        .chunks_exact(4)
        .map(|b| T::of(f32::from_le_bytes(b.try_into().unwrap()) as f64))
        .collect();
    let config = AcquisitionConfig {
        num_elements: elements,
        pitch,
        center_frequency: fc,
        transmit_frequency,
        sampling_frequency: fs,
        sound_speed: c,
        angles: angle_list,
        prf,
        frame_rate,
        tukey_alpha,
    };
    ChannelDataSet::new(config, t0, frames, samples, data)
}

pub fn read_dataset<T: Real>(path: &Path) -> Result<ChannelDataSet<T>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_dataset(&bytes)
}

/// Streams `data` to an arbitrary writer (non-atomic).
pub fn write_dataset_to<T: Real, W: Write>(data: &ChannelDataSet<T>, mut w: W) -> Result<()> {
    w.write_all(&encode_dataset(data)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(frames: usize, samples: usize, seed: u32) -> ChannelDataSet<f32> {
        let cfg = AcquisitionConfig {
            num_elements: 3,
            angles: vec![-0.05, 0.0, 0.05],
            transmit_frequency: 4.0e6,
            tukey_alpha: 0.5,
            ..AcquisitionConfig::desk()
        };
        let n = frames * 3 * 3 * samples;
        let v = (0..n)
            .map(|i| ((i as u32).wrapping_mul(2654435761).wrapping_add(seed) as f32) * 1e-9 - 2.0)
            .collect();
        ChannelDataSet::new(cfg, 3.5e-6, frames, samples, v).unwrap()
    }

    #[test]
    fn header_layout_is_fixed() {
        let d = small(1, 2, 0);
        let b = encode_dataset(&d).unwrap();
        assert_eq!(&b[..4], b"SBF1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(b[20..28].try_into().unwrap()), 0.2e-3);
        assert_eq!(f64::from_le_bytes(b[52..60].try_into().unwrap()), 3.5e-6);
        assert_eq!(u32::from_le_bytes(b[76..80].try_into().unwrap()), 3);
        let tensor_start = 80 + 3 * 8;
        assert_eq!(b.len(), tensor_start + 18 * 4 + 20);
        assert_eq!(
            f32::from_le_bytes(b[tensor_start..tensor_start + 4].try_into().unwrap()),
            d.samples()[0]
        );
    }

    #[test]
    fn empty_dataset_round_trips() {
        let d = small(0, 5, 1);
        let back: ChannelDataSet<f32> = decode_dataset(&encode_dataset(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.frames(), 0);
    }

    #[test]
    fn truncated_tensor_is_shape_error() {
        let d = small(2, 4, 2);
        let mut b = encode_dataset(&d).unwrap();
        b.truncate(b.len() - 20 - 4 * 4);
        assert!(matches!(decode_dataset::<f32>(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn header_element_count_mismatch_is_shape_error() {
        let d = small(2, 4, 2);
        let mut b = encode_dataset(&d).unwrap();
        b[12..16].copy_from_slice(&4u32.to_le_bytes());
        assert!(matches!(decode_dataset::<f32>(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn missing_trailer_uses_defaults() {
        let d = small(1, 2, 3);
        let mut b = encode_dataset(&d).unwrap();
        b.truncate(b.len() - 20);
        let back: ChannelDataSet<f32> = decode_dataset(&b).unwrap();
        assert_eq!(back.samples(), d.samples());
        assert_eq!(back.config().transmit_frequency, back.config().center_frequency);
        assert_eq!(back.config().tukey_alpha, 0.25);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.sbf");
        let d = small(2, 7, 9);
        write_dataset(&d, &p).unwrap();
        let back: ChannelDataSet<f32> = read_dataset(&p).unwrap();
        assert_eq!(back, d);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(frames in 0usize..3, samples in 1usize..6,
                                   bits in proptest::collection::vec(any::<u32>(), 0..200)) {
            let cfg = AcquisitionConfig { num_elements: 2, angles: vec![0.0], ..AcquisitionConfig::desk() };
            let n = frames * 2 * samples;
            let v: Vec<f32> = (0..n)
                .map(|i| {
                    let f = f32::from_bits(bits.get(i).copied().unwrap_or(i as u32));
                    if f.is_finite() { f } else { 0.0 }
                })
                .collect();
            let d = ChannelDataSet::new(cfg, 1.25e-6, frames, samples, v).unwrap();
            let back: ChannelDataSet<f32> = decode_dataset(&encode_dataset(&d).unwrap()).unwrap();
            prop_assert_eq!(back.config(), d.config());
            prop_assert_eq!(back.t0(), d.t0());
            for (a, b) in back.samples().iter().zip(d.samples()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
