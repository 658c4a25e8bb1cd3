use std::path::Path;

use crate::error::{Error, Result};

/// Pixel lattice for beamformed images. Pixel `(ix, iz)` has flat index
/// `iz * nx + ix` (rows are depths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub nx: usize,
    pub nz: usize,
}

impl ImageGrid {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64, nx: usize, nz: usize) -> Result<Self> {
        let g = Self { x_min, x_max, z_min, z_max, nx, nz };
        g.validate()?;
        Ok(g)
    }

    /// Grid whose pixel spacing is `dx` by `dz`, starting at `(x_min, z_min)`.
    pub fn with_spacing(x_min: f64, z_min: f64, dx: f64, dz: f64, nx: usize, nz: usize) -> Result<Self> {
        Self::new(
            x_min,
            x_min + dx * (nx.max(2) - 1) as f64,
            z_min,
            z_min + dz * (nz.max(2) - 1) as f64,
            nx,
            nz,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 1 || self.nz < 1 {
            return Err(Error::invalid("grid needs nx, nz ≥ 1"));
        }
        if !(self.x_max > self.x_min) || !(self.z_max > self.z_min) {
            return Err(Error::invalid("grid extents must be increasing"));
        }
        if !(self.z_min >= 0.0) {
            return Err(Error::invalid("grid z_min ≥ 0"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        if self.nx > 1 { (self.x_max - self.x_min) / (self.nx - 1) as f64 } else { 0.0 }
    }

    pub fn dz(&self) -> f64 {
        if self.nz > 1 { (self.z_max - self.z_min) / (self.nz - 1) as f64 } else { 0.0 }
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    #[inline]
    pub fn z(&self, iz: usize) -> f64 {
        self.z_min + iz as f64 * self.dz()
    }

    #[inline]
    pub fn index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    /// `(x, z)` of flat pixel `p`.
    #[inline]
    pub fn position(&self, p: usize) -> (f64, f64) {
        (self.x(p % self.nx), self.z(p / self.nx))
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x <= self.x_max && z >= self.z_min && z <= self.z_max
    }

    /// Flat index of the pixel nearest to `(x, z)`, clamped to the grid.
    pub fn nearest(&self, x: f64, z: f64) -> usize {
        let fx = if self.nx > 1 { ((x - self.x_min) / self.dx()).round() } else { 0.0 };
        let fz = if self.nz > 1 { ((z - self.z_min) / self.dz()).round() } else { 0.0 };
        let ix = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let iz = fz.clamp(0.0, (self.nz - 1) as f64) as usize;
        self.index(ix, iz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoiShape {
    Rectangle,
    Ellipse,
}

/// Labelled region of interest used by the image-quality metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    pub shape: RoiShape,
    pub center: (f64, f64),
    pub half_extents: (f64, f64),
    pub label: String,
}

impl Roi {
    pub fn rect(label: &str, cx: f64, cz: f64, dx: f64, dz: f64) -> Self {
        Self { shape: RoiShape::Rectangle, center: (cx, cz), half_extents: (dx, dz), label: label.into() }
    }

    pub fn ellipse(label: &str, cx: f64, cz: f64, dx: f64, dz: f64) -> Self {
        Self { shape: RoiShape::Ellipse, center: (cx, cz), half_extents: (dx, dz), label: label.into() }
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let u = (x - self.center.0) / self.half_extents.0;
        let v = (z - self.center.1) / self.half_extents.1;
        match self.shape {
            RoiShape::Rectangle => u.abs() <= 1.0 && v.abs() <= 1.0,
            RoiShape::Ellipse => u * u + v * v <= 1.0,
        }
    }

    /// Flat indices of the pixels of `grid` inside the ROI. Errors when the
    /// ROI is degenerate or extends past the grid.
    pub fn pixels(&self, grid: &ImageGrid) -> Result<Vec<usize>> {
        let (dx, dz) = self.half_extents;
        if !(dx > 0.0 && dz > 0.0) {
            return Err(Error::invalid(format!("ROI `{}` needs positive half extents", self.label)));
        }
        let (cx, cz) = self.center;
        let eps = 1e-12;
        if cx - dx < grid.x_min - eps
            || cx + dx > grid.x_max + eps
            || cz - dz < grid.z_min - eps
            || cz + dz > grid.z_max + eps
        {
            return Err(Error::invalid(format!("ROI `{}` extends outside the image grid", self.label)));
        }
        Ok((0..grid.len())
            .filter(|&p| {
                let (x, z) = grid.position(p);
                self.contains(x, z)
            })
            .collect())
    }

    fn shape_name(&self) -> &'static str {
        match self.shape {
            RoiShape::Rectangle => "rect",
            RoiShape::Ellipse => "ellipse",
        }
    }
}

/// Parses ROI text: one ROI per line, `label shape cx cz dx dz` (meters),
/// shape `rect` or `ellipse`; `#` starts a comment.
pub fn parse_rois(text: &str) -> Result<Vec<Roi>> {
    let mut rois = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::format(format!("ROI line {}: expected `label shape cx cz dx dz`", n + 1));
        if f.len() != 6 {
            return Err(bad());
        }
        let shape = match f[1] {
            "rect" | "rectangle" => RoiShape::Rectangle,
            "ellipse" => RoiShape::Ellipse,
            _ => return Err(bad()),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        rois.push(Roi {
            shape,
            center: (num(f[2])?, num(f[3])?),
            half_extents: (num(f[4])?, num(f[5])?),
            label: f[0].to_string(),
        });
    }
    Ok(rois)
}

pub fn format_rois(rois: &[Roi]) -> String {
    rois.iter()
        .map(|r| {
            format!(
                "{} {} {:?} {:?} {:?} {:?}\n",
                r.label, r.shape_name(), r.center.0, r.center.1, r.half_extents.0, r.half_extents.1
            )
        })
        .collect()
}

pub fn read_rois(path: &Path) -> Result<Vec<Roi>> {
    parse_rois(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = ImageGrid::new(-1.0, 1.0, 0.0, 4.0, 5, 3).unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g.position(g.index(4, 2)), (1.0, 4.0));
        assert_eq!(g.nearest(0.1, 2.1), g.index(2, 1));
        assert_eq!(g.nearest(9.0, -3.0), g.index(4, 0));
        assert!(ImageGrid::new(0.0, 0.0, 0.0, 1.0, 2, 2).is_err());
        assert!(ImageGrid::new(0.0, 1.0, -1.0, 1.0, 2, 2).is_err());
        assert!(ImageGrid::new(0.0, 1.0, 0.0, 1.0, 0, 2).is_err());
    }

    #[test]
    fn roi_pixels_and_bounds() {
        let g = ImageGrid::new(0.0, 10.0, 0.0, 10.0, 11, 11).unwrap();
        let r = Roi::rect("A", 5.0, 5.0, 1.0, 1.0);
        assert_eq!(r.pixels(&g).unwrap().len(), 9);
        let e = Roi::ellipse("B", 5.0, 5.0, 2.0, 2.0);
        assert_eq!(e.pixels(&g).unwrap().len(), 13);
        assert!(Roi::rect("C", 9.5, 5.0, 1.0, 1.0).pixels(&g).is_err());
        assert!(Roi::rect("D", 5.0, 5.0, 0.0, 1.0).pixels(&g).is_err());
    }

    #[test]
    fn roi_text_round_trip() {
        let rois = vec![Roi::rect("A", 1e-3, 0.02, 5e-4, 1e-3), Roi::ellipse("B'", -2e-3, 0.015, 1e-3, 1e-3)];
        assert_eq!(parse_rois(&format_rois(&rois)).unwrap(), rois);
        assert!(parse_rois("A square 0 0 1 1").is_err());
    }
}
