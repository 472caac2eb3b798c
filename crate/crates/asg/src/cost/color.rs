//! Per-scale CIELAB disk means and the color-homogeneity cost accumulation.
//!
//! Means are computed from row prefix sums of *centered* Lab values (the
//! first pixel's triple is subtracted before accumulation and added back to
//! the means). Centering keeps the means of flat regions bitwise identical
//! across positions and scales, so the homogeneity term vanishes exactly on
//! constant images.

use rayon::prelude::*;

use crate::imgproc::LabImage;

use super::disk::DiskTable;

pub struct MeanSlices {
    pub r_lo: u32,
    /// `slices[r - r_lo][y * width + x]`, defined only for valid centers.
    pub slices: Vec<Vec<[f64; 3]>>,
    pub width: usize,
}

impl MeanSlices {
    #[inline]
    pub fn mean(&self, x: usize, y: usize, r: u32) -> [f64; 3] {
        self.slices[(r - self.r_lo) as usize][y * self.width + x]
    }
}

/// Disk-mean images for every scale in `r_lo..=r_max`.
pub fn mean_slices(lab: &LabImage, r_lo: u32, r_max: u32, disks: &DiskTable) -> MeanSlices {
    let (w, h) = (lab.width, lab.height);
    let base = lab.data[0];

    // Row prefix sums of centered values: pref[y][x] = sum of cols < x.
    let mut pref = vec![[0.0f64; 3]; (w + 1) * h];
    for y in 0..h {
        let mut acc = [0.0f64; 3];
        for x in 0..w {
            let p = lab.pixel(x, y);
            for c in 0..3 {
                acc[c] += p[c] - base[c];
            }
            pref[y * (w + 1) + x + 1] = acc;
        }
    }

    let slices: Vec<Vec<[f64; 3]>> = (r_lo..=r_max)
        .into_par_iter()
        .map(|r| {
            let geo = disks.get(r);
            let inv_area = 1.0 / geo.area as f64;
            let mut slice = vec![[0.0f64; 3]; w * h];
            let ri = r as usize;
            for y in ri..h - ri {
                for x in ri..w - ri {
                    let mut sum = [0.0f64; 3];
                    for &(dy, hw) in &geo.spans {
                        let row = (y as i32 + dy) as usize * (w + 1);
                        let lo = &pref[row + x - hw as usize];
                        let hi = &pref[row + x + hw as usize + 1];
                        for c in 0..3 {
                            sum[c] += hi[c] - lo[c];
                        }
                    }
                    let mut m = [0.0f64; 3];
                    for c in 0..3 {
                        m[c] = base[c] + sum[c] * inv_area;
                    }
                    slice[y * w + x] = m;
                }
            }
            slice
        })
        .collect();

    MeanSlices {
        r_lo,
        slices,
        width: w,
    }
}

/// Homogeneity sum of enclosed-disk differences for one center.
///
/// Sums squared L2 distances between the center disk's mean feature and the
/// mean features of all strictly enclosed sub-disks (`r_l in [1, r-1]`,
/// centers within Euclidean distance `r - r_l`).
pub fn homogeneity_at(means: &MeanSlices, disks: &DiskTable, x: usize, y: usize, r: u32) -> f64 {
    let w = means.width;
    let center = means.mean(x, y, r);
    let mut c = 0.0f64;
    for l in 1..r {
        let slice = &means.slices[(l - means.r_lo) as usize];
        let rho = disks.get(r - l);
        for &(dy, hw) in &rho.spans {
            let row = (y as i32 + dy) as usize * w;
            for dx in -hw..=hw {
                let m = &slice[row + (x as i32 + dx) as usize];
                let d0 = center[0] - m[0];
                let d1 = center[1] - m[1];
                let d2 = center[2] - m[2];
                c += d0 * d0 + d1 * d1 + d2 * d2;
            }
        }
    }
    c
}
