//! The dense disk-cost volume `C(x, r)`.
//!
//! A disk proposal's cost measures how far it is from being a maximal
//! homogeneous disk: a data term over all strictly enclosed sub-disks plus
//! the scale penalty `w_s / r`. Disks not fully enclosed in the image carry
//! the INVALID sentinel (`+inf`) rather than an error.

mod color;
mod disk;
mod hist;

pub use disk::{DiskGeometry, DiskTable};
pub use hist::{bhattacharyya, bin_of, disk_histogram, hist_distance, DiskHistogram};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{build_tile_grid, to_lab, LabImage, RgbImage, TileGrid};

/// Which data term backs the disk cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Color,
    Hist,
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostKind::Color => write!(f, "color"),
            CostKind::Hist => write!(f, "hist"),
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "color" => Ok(CostKind::Color),
            "hist" => Ok(CostKind::Hist),
            other => Err(Error::InvalidParameter(format!(
                "unknown cost kind '{other}' (expected color|hist)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostConfig {
    pub kind: CostKind,
    pub w_s: f64,
    pub r_min: u32,
    pub r_max: u32,
    pub bins: usize,
    pub tile_size: usize,
}

impl CostConfig {
    pub fn color() -> Self {
        CostConfig {
            kind: CostKind::Color,
            w_s: 1e-4,
            r_min: 2,
            r_max: 41,
            bins: 10,
            tile_size: 6,
        }
    }

    pub fn hist() -> Self {
        CostConfig {
            kind: CostKind::Hist,
            w_s: 2e-8,
            ..CostConfig::color()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_min < 2 {
            return Err(Error::InvalidParameter("r_min must be >= 2".into()));
        }
        if self.r_max < self.r_min {
            return Err(Error::InvalidParameter("r_max must be >= r_min".into()));
        }
        if !(self.w_s > 0.0) {
            return Err(Error::InvalidParameter("w_s must be > 0".into()));
        }
        if self.bins == 0 || self.bins > hist::MAX_BINS {
            return Err(Error::InvalidParameter("bins out of range".into()));
        }
        if self.tile_size == 0 {
            return Err(Error::InvalidParameter("tile_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Cost sentinel for proposals whose disk is not fully inside the image.
pub const INVALID: f64 = f64::INFINITY;

/// Dense cost map over positions and scales.
pub struct CostVolume {
    pub width: usize,
    pub height: usize,
    pub r_min: u32,
    pub r_max: u32,
    pub kind: CostKind,
    /// Requested upper scale before any truncation to the image size.
    pub requested_r_max: u32,
    /// Total valid cost evaluations performed during construction.
    pub evaluations: u64,
    slices: Vec<Vec<f64>>,
}

impl CostVolume {
    /// Cost of the proposal at `(x, y)` with scale `r`; INVALID when the
    /// disk leaves the image or `r` is outside the volume's scale range.
    #[inline]
    pub fn cost(&self, x: usize, y: usize, r: u32) -> f64 {
        if r < self.r_min || r > self.r_max || x >= self.width || y >= self.height {
            return INVALID;
        }
        self.slices[(r - self.r_min) as usize][y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize, r: u32) -> bool {
        self.cost(x, y, r).is_finite()
    }

    /// Whether the disk at `(x, y, r)` lies fully inside the image.
    #[inline]
    pub fn center_in_bounds(&self, x: usize, y: usize, r: u32) -> bool {
        let r = r as usize;
        x >= r && y >= r && x + r < self.width && y + r < self.height
    }

    pub fn scales(&self) -> std::ops::RangeInclusive<u32> {
        self.r_min..=self.r_max
    }

    pub fn truncated(&self) -> bool {
        self.requested_r_max != self.r_max
    }

    /// Exhaustive proposal count `H * W * R` for speedup reporting.
    pub fn exhaustive_slots(&self) -> u64 {
        (self.width * self.height) as u64 * (self.r_max - self.r_min + 1) as u64
    }

    /// Binary dump: width, height, r_min, r_max (u32 LE), cost kind (u8),
    /// then scale-major row-major f32 entries with INVALID as +inf.
    pub fn write_binary(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        w.write_all(&(self.width as u32).to_le_bytes())?;
        w.write_all(&(self.height as u32).to_le_bytes())?;
        w.write_all(&self.r_min.to_le_bytes())?;
        w.write_all(&self.r_max.to_le_bytes())?;
        w.write_all(&[match self.kind {
            CostKind::Color => 0u8,
            CostKind::Hist => 1u8,
        }])?;
        for slice in &self.slices {
            for &v in slice {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl std::io::Read) -> Result<CostVolume> {
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut dyn std::io::Read| -> Result<u32> {
            r.read_exact(&mut u32buf)
                .map_err(|e| Error::VolumeFormat(e.to_string()))?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let width = read_u32(&mut r)? as usize;
        let height = read_u32(&mut r)? as usize;
        let r_min = read_u32(&mut r)?;
        let r_max = read_u32(&mut r)?;
        let mut kind_byte = [0u8; 1];
        r.read_exact(&mut kind_byte)
            .map_err(|e| Error::VolumeFormat(e.to_string()))?;
        let kind = match kind_byte[0] {
            0 => CostKind::Color,
            1 => CostKind::Hist,
            b => return Err(Error::VolumeFormat(format!("bad cost kind byte {b}"))),
        };
        if width == 0 || height == 0 || r_max < r_min {
            return Err(Error::VolumeFormat("inconsistent header".into()));
        }
        let mut slices = Vec::new();
        let mut evaluations = 0u64;
        let mut f32buf = [0u8; 4];
        for _ in r_min..=r_max {
            let mut slice = vec![INVALID; width * height];
            for v in slice.iter_mut() {
                r.read_exact(&mut f32buf)
                    .map_err(|e| Error::VolumeFormat(e.to_string()))?;
                *v = f32::from_le_bytes(f32buf) as f64;
                if v.is_finite() {
                    evaluations += 1;
                }
            }
            slices.push(slice);
        }
        Ok(CostVolume {
            width,
            height,
            r_min,
            r_max,
            kind,
            requested_r_max: r_max,
            evaluations,
            slices,
        })
    }
}

/// Color-homogeneity cost of a single proposal, computed directly.
///
/// Reference path for spot queries and tests; [`build_cost_volume`] is the
/// amortized path for dense evaluation.
pub fn color_cost(lab: &LabImage, x: usize, y: usize, r: u32, cfg: &CostConfig) -> f64 {
    let (w, h) = (lab.width, lab.height);
    let ri = r as usize;
    if r < cfg.r_min || r > cfg.r_max || x < ri || y < ri || x + ri >= w || y + ri >= h {
        return INVALID;
    }
    let disks = DiskTable::new(r);
    let mean_of = |cx: usize, cy: usize, rr: u32| -> [f64; 3] {
        let geo = disks.get(rr);
        let mut sum = [0.0f64; 3];
        for (dx, dy) in geo.offsets() {
            let p = lab.pixel((cx as i32 + dx) as usize, (cy as i32 + dy) as usize);
            for c in 0..3 {
                sum[c] += p[c];
            }
        }
        let inv = 1.0 / geo.area as f64;
        [sum[0] * inv, sum[1] * inv, sum[2] * inv]
    };
    let center = mean_of(x, y, r);
    let mut c = 0.0f64;
    for l in 1..r {
        let rho = disks.get(r - l);
        for (dx, dy) in rho.offsets() {
            let m = mean_of((x as i32 + dx) as usize, (y as i32 + dy) as usize, l);
            let d0 = center[0] - m[0];
            let d1 = center[1] - m[1];
            let d2 = center[2] - m[2];
            c += d0 * d0 + d1 * d1 + d2 * d2;
        }
    }
    c / disks.get(r).area as f64 + cfg.w_s / r as f64
}

/// Intensity-histogram cost of a single proposal, computed directly.
pub fn hist_cost(
    grid: &TileGrid,
    img: &RgbImage,
    x: usize,
    y: usize,
    r: u32,
    cfg: &CostConfig,
) -> f64 {
    let (w, h) = (img.width, img.height);
    let ri = r as usize;
    if r < cfg.r_min || r > cfg.r_max || x < ri || y < ri || x + ri >= w || y + ri >= h {
        return INVALID;
    }
    let disks = DiskTable::new(r);
    let center = disk_histogram(grid, img, &disks, x, y, r, cfg.bins);
    let mut c = 0.0f64;
    for l in 1..r {
        let rho = disks.get(r - l);
        for (dx, dy) in rho.offsets() {
            let sub = disk_histogram(
                grid,
                img,
                &disks,
                (x as i32 + dx) as usize,
                (y as i32 + dy) as usize,
                l,
                cfg.bins,
            );
            c += hist_distance(&center, &sub, cfg.bins);
        }
    }
    c / r as f64 + cfg.w_s / r as f64
}

/// Compute `C(x, r)` densely for all positions and scales.
///
/// Scales that do not fit in the image are truncated (the volume records the
/// requested maximum). The evaluation counter equals the number of valid
/// entries.
pub fn build_cost_volume(img: &RgbImage, cfg: &CostConfig) -> Result<CostVolume> {
    cfg.validate()?;
    let (w, h) = (img.width, img.height);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let fit = ((w.min(h) as u32).saturating_sub(1)) / 2;
    if fit < cfg.r_min {
        return Err(Error::InvalidParameter(format!(
            "image {w}x{h} too small for r_min {}",
            cfg.r_min
        )));
    }
    let r_max = cfg.r_max.min(fit);
    let disks = DiskTable::new(r_max);

    let slices: Vec<Vec<f64>> = match cfg.kind {
        CostKind::Color => {
            let lab = to_lab(img);
            let means = color::mean_slices(&lab, 1, r_max, &disks);
            (cfg.r_min..=r_max)
                .into_par_iter()
                .map(|r| {
                    let ri = r as usize;
                    let mut slice = vec![INVALID; w * h];
                    let inv_area = 1.0 / disks.get(r).area as f64;
                    let penalty = cfg.w_s / r as f64;
                    for y in ri..h - ri {
                        for x in ri..w - ri {
                            let c = color::homogeneity_at(&means, &disks, x, y, r);
                            slice[y * w + x] = c * inv_area + penalty;
                        }
                    }
                    slice
                })
                .collect()
        }
        CostKind::Hist => {
            let grid = build_tile_grid(img, cfg.tile_size)?;
            let hists = hist::HistSlices::build(&grid, img, &disks, 1, r_max, cfg.bins);
            (cfg.r_min..=r_max)
                .into_par_iter()
                .map(|r| {
                    let ri = r as usize;
                    let mut slice = vec![INVALID; w * h];
                    let penalty = cfg.w_s / r as f64;
                    let inv_r = 1.0 / r as f64;
                    for y in ri..h - ri {
                        for x in ri..w - ri {
                            let center = hists.get(x, y, r);
                            let mut c = 0.0f64;
                            for l in 1..r {
                                let rho = disks.get(r - l);
                                for &(dy, hw) in &rho.spans {
                                    let row = (y as i32 + dy) as usize;
                                    for dx in -hw..=hw {
                                        let sub =
                                            hists.get((x as i32 + dx) as usize, row, l);
                                        c += hist_distance(center, sub, cfg.bins);
                                    }
                                }
                            }
                            slice[y * w + x] = c * inv_r + penalty;
                        }
                    }
                    slice
                })
                .collect()
        }
    };

    let evaluations = slices
        .iter()
        .map(|s| s.iter().filter(|v| v.is_finite()).count() as u64)
        .sum();

    Ok(CostVolume {
        width: w,
        height: h,
        r_min: cfg.r_min,
        r_max,
        kind: cfg.kind,
        requested_r_max: cfg.r_max,
        evaluations,
        slices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_image(w: usize, h: usize, v: [f64; 3]) -> RgbImage {
        RgbImage::new(w, h, v)
    }

    #[test]
    fn constant_color_cost_is_exactly_scale_penalty() {
        let img = constant_image(20, 20, [0.3, 0.55, 0.7]);
        let lab = to_lab(&img);
        let cfg = CostConfig {
            r_max: 8,
            ..CostConfig::color()
        };
        let c = color_cost(&lab, 10, 10, 5, &cfg);
        assert_eq!(c, cfg.w_s / 5.0);
        assert_eq!(c, 2e-5);
    }

    #[test]
    fn constant_volume_is_exactly_scale_penalty_both_kinds() {
        let img = constant_image(24, 24, [0.42, 0.42, 0.42]);
        for cfg in [
            CostConfig {
                r_max: 8,
                ..CostConfig::color()
            },
            CostConfig {
                r_max: 8,
                ..CostConfig::hist()
            },
        ] {
            let vol = build_cost_volume(&img, &cfg).unwrap();
            for r in vol.scales() {
                let expect = cfg.w_s / r as f64;
                for y in r as usize..24 - r as usize {
                    for x in r as usize..24 - r as usize {
                        assert_eq!(vol.cost(x, y, r), expect, "kind {:?} r {r}", cfg.kind);
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_penalty_on_constant_image() {
        let img = constant_image(30, 30, [0.6, 0.2, 0.8]);
        let cfg = CostConfig {
            r_max: 10,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        for r in cfg.r_min..cfg.r_max {
            assert!(vol.cost(14, 14, r) > vol.cost(14, 14, r + 1));
        }
    }

    #[test]
    fn straddling_disk_costs_more_than_interior_disk() {
        // Two-tone vertical split; same radius inside one region vs on the
        // edge.
        let mut img = constant_image(40, 24, [0.1, 0.2, 0.9]);
        for y in 0..24 {
            for x in 20..40 {
                img.set_pixel(x, y, [0.9, 0.8, 0.1]);
            }
        }
        let lab = to_lab(&img);
        let cfg = CostConfig {
            r_max: 8,
            ..CostConfig::color()
        };
        let interior = color_cost(&lab, 10, 12, 5, &cfg);
        let straddle = color_cost(&lab, 20, 12, 5, &cfg);
        assert!(straddle > interior, "{straddle} <= {interior}");
    }

    #[test]
    fn invalid_band_and_slot_counts() {
        let img = constant_image(10, 10, [0.5; 3]);
        let cfg = CostConfig {
            r_min: 2,
            r_max: 3,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        // Valid centers form (10 - 2r)^2 interiors: 36 and 16 entries.
        let count_valid = |r: u32| {
            let mut n = 0;
            for y in 0..10 {
                for x in 0..10 {
                    if vol.is_valid(x, y, r) {
                        n += 1;
                    }
                }
            }
            n
        };
        assert_eq!(count_valid(2), 36);
        assert_eq!(count_valid(3), 16);
        assert_eq!(vol.evaluations, 52);
        assert_eq!(vol.cost(1, 5, 2), INVALID);
        assert_eq!(vol.cost(5, 5, 9), INVALID);
    }

    #[test]
    fn oversized_r_max_truncates_with_warning_flag() {
        let img = constant_image(12, 12, [0.5; 3]);
        let cfg = CostConfig {
            r_min: 2,
            r_max: 40,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        assert!(vol.truncated());
        assert_eq!(vol.r_max, 5);
        assert_eq!(vol.requested_r_max, 40);
    }

    #[test]
    fn too_small_image_is_an_error() {
        let img = constant_image(4, 3, [0.5; 3]);
        assert!(build_cost_volume(&img, &CostConfig::color()).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let mut img = constant_image(14, 12, [0.2; 3]);
        img.set_pixel(7, 6, [0.9, 0.1, 0.3]);
        let cfg = CostConfig {
            r_max: 4,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        let mut buf = Vec::new();
        vol.write_binary(&mut buf).unwrap();
        let back = CostVolume::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.width, vol.width);
        assert_eq!(back.height, vol.height);
        assert_eq!(back.r_min, vol.r_min);
        assert_eq!(back.r_max, vol.r_max);
        for r in vol.scales() {
            for y in 0..12 {
                for x in 0..14 {
                    let a = vol.cost(x, y, r);
                    let b = back.cost(x, y, r);
                    if a.is_finite() {
                        assert!((a - b).abs() <= a.abs() * 1e-6 + 1e-12);
                    } else {
                        assert!(!b.is_finite());
                    }
                }
            }
        }
    }

    #[test]
    fn hist_small_disk_uses_pixel_fallback() {
        let img = constant_image(20, 20, [0.5; 3]);
        let grid = build_tile_grid(&img, 6).unwrap();
        let disks = DiskTable::new(3);
        // r=2 cannot enclose a tile center at reach 2 - 3*sqrt(2) < 0.
        let h = disk_histogram(&grid, &img, &disks, 10, 10, 2, 10);
        assert_eq!(h.total, 13); // area of the radius-2 digital disk
        assert_eq!(h.channel(0, 10)[5], 13);
    }
}
