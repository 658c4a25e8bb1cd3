use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Point reflector. Echo amplitude scales as `tx_amplitude^gamma`: `gamma = 1`
/// is linear tissue, `gamma > 1` mimics a microbubble's nonlinear response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub x: f64,
    pub z: f64,
    pub amplitude: f64,
    pub vx: f64,
    pub vz: f64,
    pub gamma: f64,
}

impl Scatterer {
    pub fn fixed(x: f64, z: f64, amplitude: f64) -> Self {
        Self { x, z, amplitude, vx: 0.0, vz: 0.0, gamma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z > 0.0) || !self.x.is_finite() || !self.z.is_finite() {
            return Err(Error::invalid(format!("scatterer at ({}, {}) needs finite x and z > 0", self.x, self.z)));
        }
        if !self.amplitude.is_finite() || !self.vx.is_finite() || !self.vz.is_finite() {
            return Err(Error::invalid("scatterer amplitude and velocity must be finite"));
        }
        if !(self.gamma >= 1.0) {
            return Err(Error::invalid("scatterer nonlinearity gamma ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomScene {
    pub scatterers: Vec<Scatterer>,
    /// Standard deviation of the white Gaussian noise added to every channel sample.
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl PhantomScene {
    pub fn new(scatterers: Vec<Scatterer>, noise_sigma: f64, rng_seed: u64) -> Self {
        Self { scatterers, noise_sigma, rng_seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::invalid("noise_sigma ≥ 0"));
        }
        self.scatterers.iter().try_for_each(Scatterer::validate)
    }
}

/// splitmix64 step; used to advance scene seeds.
pub(crate) fn mix_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Moves every scatterer by `velocity × dt`; the seed advances by one
/// splitmix64 step.
pub fn advance_scene(scene: &PhantomScene, dt: f64) -> Result<PhantomScene> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("advance_scene needs dt ≥ 0"));
    }
    Ok(PhantomScene {
        scatterers: displaced(&scene.scatterers, dt),
        noise_sigma: scene.noise_sigma,
        rng_seed: mix_seed(scene.rng_seed),
    })
}

pub(crate) fn displaced(scatterers: &[Scatterer], dt: f64) -> Vec<Scatterer> {
    scatterers
        .iter()
        .map(|s| Scatterer { x: s.x + s.vx * dt, z: s.z + s.vz * dt, ..*s })
        .collect()
}

/// Scene text: `noise_sigma = ...` and `rng_seed = ...` header lines, then one
/// scatterer per line as `x z amplitude vx vz gamma` (SI units).
pub fn parse_scene(text: &str) -> Result<PhantomScene> {
    let mut scene = PhantomScene::new(Vec::new(), 0.0, 0);
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format(format!("scene line {}: {what}", n + 1));
        if let Some((k, v)) = line.split_once('=') {
            let v = v.trim();
            match k.trim() {
                "noise_sigma" => scene.noise_sigma = v.parse().map_err(|_| bad("bad noise_sigma"))?,
                "rng_seed" => scene.rng_seed = v.parse().map_err(|_| bad("bad rng_seed"))?,
                other => return Err(bad(&format!("unknown header `{other}`"))),
            }
            continue;
        }
        let f = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("non-numeric field"))?;
        if f.len() != 6 {
            return Err(bad("expected `x z amplitude vx vz gamma`"));
        }
        scene.scatterers.push(Scatterer { x: f[0], z: f[1], amplitude: f[2], vx: f[3], vz: f[4], gamma: f[5] });
    }
    scene.validate()?;
    Ok(scene)
}

pub fn format_scene(scene: &PhantomScene) -> String {
    let mut out = format!("noise_sigma = {:?}\nrng_seed = {}\n", scene.noise_sigma, scene.rng_seed);
    for s in &scene.scatterers {
        let _ = writeln!(out, "{:?} {:?} {:?} {:?} {:?} {:?}", s.x, s.z, s.amplitude, s.vx, s.vz, s.gamma);
    }
    out
}

pub fn read_scene(path: &Path) -> Result<PhantomScene> {
    parse_scene(&std::fs::read_to_string(path)?)
}
