//! Image loading, color conversion, edge-preserving smoothing, and the tile
//! grid that backs the intensity-histogram cost.

mod l0;

pub use l0::{smooth_l0, smooth_l0_with_stats, SmoothStats};

use std::path::Path;

use crate::error::{Error, Result};

/// RGB raster with channels normalized to `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, fill: [f64; 3]) -> Self {
        RgbImage {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, v: [f64; 3]) {
        self.data[y * self.width + x] = v;
    }
}

/// CIELAB raster, same layout as its source [`RgbImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl LabImage {
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

/// Per-tile, per-channel mean intensities over a square tiling.
///
/// Boundary tiles average only the covered pixels; no padding is invented.
#[derive(Debug, Clone)]
pub struct TileGrid {
    pub tile_size: usize,
    pub rows: usize,
    pub cols: usize,
    pub width: usize,
    pub height: usize,
    means: Vec<[f64; 3]>,
}

impl TileGrid {
    #[inline]
    pub fn mean(&self, row: usize, col: usize) -> [f64; 3] {
        self.means[row * self.cols + col]
    }

    /// Center of the covered pixel block of a tile, in pixel coordinates.
    pub fn tile_center(&self, row: usize, col: usize) -> (f64, f64) {
        let x0 = col * self.tile_size;
        let y0 = row * self.tile_size;
        let cw = self.tile_size.min(self.width - x0);
        let ch = self.tile_size.min(self.height - y0);
        (
            x0 as f64 + (cw as f64 - 1.0) / 2.0,
            y0 as f64 + (ch as f64 - 1.0) / 2.0,
        )
    }
}

/// Decode a raster file (PNG or binary PPM) into a normalized [`RgbImage`].
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let decoded = image::load_from_memory(&bytes).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let data = rgb
        .pixels()
        .map(|p| {
            [
                p.0[0] as f64 / 255.0,
                p.0[1] as f64 / 255.0,
                p.0[2] as f64 / 255.0,
            ]
        })
        .collect();
    Ok(RgbImage {
        width: w,
        height: h,
        data,
    })
}

// sRGB <-> CIELAB under D65. The matrix rows sum exactly to the D65 white
// point used below, so white maps to L=100, a=b=0.
const D65: [f64; 3] = [0.95047, 1.0, 1.08883];
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];
const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

#[inline]
fn srgb_linearize(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn srgb_delinearize(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const EPS: f64 = 216.0 / 24389.0;
    const KAPPA: f64 = 24389.0 / 27.0;
    if t > EPS {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

#[inline]
fn lab_f_inv(t: f64) -> f64 {
    const EPS: f64 = 216.0 / 24389.0;
    const KAPPA: f64 = 24389.0 / 27.0;
    let t3 = t * t * t;
    if t3 > EPS {
        t3
    } else {
        (116.0 * t - 16.0) / KAPPA
    }
}

/// Convert a single sRGB triple in `[0,1]` to CIELAB.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = [
        srgb_linearize(rgb[0]),
        srgb_linearize(rgb[1]),
        srgb_linearize(rgb[2]),
    ];
    let mut xyz = [0.0f64; 3];
    for (i, row) in SRGB_TO_XYZ.iter().enumerate() {
        xyz[i] = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / D65[0]);
    let fy = lab_f(xyz[1] / D65[1]);
    let fz = lab_f(xyz[2] / D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Inverse of [`srgb_to_lab`]; output clamped to the sRGB gamut.
pub fn lab_to_srgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        lab_f_inv(fx) * D65[0],
        lab_f_inv(fy) * D65[1],
        lab_f_inv(fz) * D65[2],
    ];
    let mut out = [0.0f64; 3];
    for (i, row) in XYZ_TO_SRGB.iter().enumerate() {
        let lin = row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2];
        out[i] = srgb_delinearize(lin.clamp(0.0, 1.0)).clamp(0.0, 1.0);
    }
    out
}

/// Per-pixel sRGB -> CIELAB conversion (D65 white point).
pub fn to_lab(img: &RgbImage) -> LabImage {
    LabImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&p| srgb_to_lab(p)).collect(),
    }
}

/// Build the square tiling with per-tile per-channel mean intensities.
pub fn build_tile_grid(img: &RgbImage, tile_size: usize) -> Result<TileGrid> {
    if tile_size == 0 {
        return Err(Error::InvalidParameter("tile_size must be >= 1".into()));
    }
    let rows = img.height.div_ceil(tile_size);
    let cols = img.width.div_ceil(tile_size);
    let mut means = vec![[0.0f64; 3]; rows * cols];
    for tr in 0..rows {
        for tc in 0..cols {
            let x0 = tc * tile_size;
            let y0 = tr * tile_size;
            let x1 = (x0 + tile_size).min(img.width);
            let y1 = (y0 + tile_size).min(img.height);
            let mut sum = [0.0f64; 3];
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = img.pixel(x, y);
                    sum[0] += p[0];
                    sum[1] += p[1];
                    sum[2] += p[2];
                }
            }
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            means[tr * cols + tc] = [sum[0] / n, sum[1] / n, sum[2] / n];
        }
    }
    Ok(TileGrid {
        tile_size,
        rows,
        cols,
        width: img.width,
        height: img.height,
        means,
    })
}
