//! Log-compressed 8-bit exports (binary PGM) and a raw power-image file.

use std::path::Path;

use crate::acquisition::ImageGrid;
use crate::compounding::PowerImage;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::scalar::Real;
use crate::subaperture::SuppressorMask;

/// Gray level of a dB value: `[−dr, 0]` maps linearly onto `0..=255`,
/// rounding half up.
pub fn gray_level(db: f64, dynamic_range_db: f64) -> u8 {
    let d = db.clamp(-dynamic_range_db, 0.0);
    let v = (d + dynamic_range_db) / dynamic_range_db * 255.0;
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Gray levels of a power image log-compressed against its maximum.
pub fn log_compress<T: Real>(image: &PowerImage<T>, dynamic_range_db: f64) -> Result<Vec<u8>> {
    if !(dynamic_range_db > 0.0 && dynamic_range_db.is_finite()) {
        return Err(Error::invalid("dynamic range must be positive"));
    }
    let max = image.max().as_f64();
    if !(max > 0.0) {
        return Err(Error::numerical("cannot log-compress an all-zero image"));
    }
    Ok(image
        .values
        .iter()
        .map(|v| {
            let p = v.as_f64();
            if p <= 0.0 { 0 } else { gray_level(10.0 * (p / max).log10(), dynamic_range_db) }
        })
        .collect())
}

/// Binary PGM (`P5`, maxval 255), rows along depth.
pub fn encode_pgm(grid: &ImageGrid, gray: &[u8]) -> Result<Vec<u8>> {
    if gray.len() != grid.len() {
        return Err(Error::shape(format!("{} gray levels for {} pixels", gray.len(), grid.len())));
    }
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.nz).into_bytes();
    out.extend_from_slice(gray);
    Ok(out)
}

/// Width, height and pixels of a binary PGM.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::format("not an 8-bit binary PGM"));
    }
    let w: usize = fields[1].parse().map_err(|_| Error::format("bad PGM width"))?;
    let h: usize = fields[2].parse().map_err(|_| Error::format("bad PGM height"))?;
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != w * h {
        return Err(Error::format(format!("PGM holds {} bytes for {w}×{h}", data.len())));
    }
    Ok((w, h, data.to_vec()))
}

pub fn export_image<T: Real>(image: &PowerImage<T>, dynamic_range_db: f64, path: &Path) -> Result<()> {
    let gray = log_compress(image, dynamic_range_db)?;
    write_atomic(path, &encode_pgm(&image.grid, &gray)?)
}

/// Suppressor weights scaled to `0..=255` (binary masks give 0 and 255).
pub fn export_mask<T: Real>(mask: &SuppressorMask<T>, path: &Path) -> Result<()> {
    let gray: Vec<u8> = mask.weights.iter().map(|w| (w.as_f64().clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8).collect();
    write_atomic(path, &encode_pgm(&mask.grid, &gray)?)
}

const PIM_MAGIC: &[u8; 4] = b"PIM1";

/// Raw power image: `PIM1`, u32 nx, u32 nz, u32 ensemble, f64 x_min, x_max,
/// z_min, z_max, then `nx·nz` f64 values, all little-endian.
pub fn encode_power_image<T: Real>(image: &PowerImage<T>) -> Vec<u8> {
    let g = &image.grid;
    let mut out = Vec::with_capacity(48 + 8 * g.len());
    out.extend_from_slice(PIM_MAGIC);
    for v in [g.nx, g.nz, image.ensemble_length] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in [g.x_min, g.x_max, g.z_min, g.z_max] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &image.values {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out
}

pub fn decode_power_image(bytes: &[u8]) -> Result<PowerImage<f64>> {
    if bytes.len() < 48 || &bytes[..4] != PIM_MAGIC {
        return Err(Error::format("not a PIM1 power image"));
    }
    let u = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, nz, ens) = (u(4), u(8), u(12));
    let grid = ImageGrid::new(f(16), f(24), f(32), f(40), nx, nz)?;
    if bytes.len() != 48 + 8 * grid.len() {
        return Err(Error::format(format!("PIM1 body has {} bytes for {} pixels", bytes.len() - 48, grid.len())));
    }
    let values = bytes[48..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    PowerImage::new(grid, values, ens)
}

pub fn write_power_image<T: Real>(image: &PowerImage<T>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_power_image(image))
}

pub fn read_power_image(path: &Path) -> Result<PowerImage<f64>> {
    decode_power_image(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gray_examples() {
        assert_eq!(gray_level(0.0, 50.0), 255);
        assert_eq!(gray_level(-50.0, 50.0), 0);
        assert_eq!(gray_level(-25.0, 50.0), 128);
        assert_eq!(gray_level(-80.0, 50.0), 0);
    }

    #[test]
    fn pgm_round_trip_and_zero_image() {
        let grid = ImageGrid::new(0.0, 1.0, 0.0, 1.0, 3, 2).unwrap();
        let img = PowerImage::new(grid, vec![1.0, 1e-5, 10f64.powf(-2.5), 0.0, 0.5, 1e-9], 1).unwrap();
        let gray = log_compress(&img, 50.0).unwrap();
        assert_eq!(gray[0], 255);
        assert_eq!(gray[1], 0);
        assert_eq!(gray[2], 128);
        assert_eq!(gray[3], 0);
        let (w, h, px) = decode_pgm(&encode_pgm(&grid, &gray).unwrap()).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(px, gray);
        let zero = PowerImage::new(grid, vec![0.0; 6], 1).unwrap();
        assert!(matches!(log_compress(&zero, 50.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn power_image_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = ImageGrid::new(-1.0, 1.0, 0.5, 2.0, 4, 3).unwrap();
        let img = PowerImage::new(grid, (0..12).map(|i| i as f64 * 0.37).collect(), 25).unwrap();
        let path = dir.path().join("x.pim");
        write_power_image(&img, &path).unwrap();
        assert_eq!(read_power_image(&path).unwrap(), img);
        assert!(decode_power_image(&encode_power_image(&img)[..50]).is_err());
    }

    proptest! {
        #[test]
        fn compression_is_monotone(a in 1e-12f64..1.0, b in 1e-12f64..1.0, dr in 1.0f64..120.0) {
            let grid = ImageGrid::new(0.0, 1.0, 0.0, 1.0, 3, 1).unwrap();
            let img = PowerImage::new(grid, vec![a, b, 1.0], 1).unwrap();
            let g = log_compress(&img, dr).unwrap();
            if a >= b { prop_assert!(g[0] >= g[1]); }
        }
    }
}
