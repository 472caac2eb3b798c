//! Local intensity histograms over enclosed tiles and their Bhattacharyya
//! comparison.

use rayon::prelude::*;

use crate::imgproc::{RgbImage, TileGrid};

use super::disk::DiskTable;

pub const MAX_BINS: usize = 32;

/// Bhattacharyya distance between two unnormalized single-channel histograms.
///
/// Counts are integers, so the Bhattacharyya coefficient is evaluated from
/// exact integer products; identical histograms give exactly 0 and disjoint
/// supports give exactly 1.
pub fn bhattacharyya(h1: &[u32], h2: &[u32]) -> f64 {
    debug_assert_eq!(h1.len(), h2.len());
    if h1 == h2 {
        return 0.0;
    }
    let (mut num, mut t1, mut t2) = (0.0f64, 0u64, 0u64);
    for (&a, &b) in h1.iter().zip(h2.iter()) {
        t1 += a as u64;
        t2 += b as u64;
        if a != 0 && b != 0 {
            num += ((a as u64 * b as u64) as f64).sqrt();
        }
    }
    if t1 == 0 || t2 == 0 {
        return 1.0;
    }
    let bc = num / ((t1 * t2) as f64).sqrt();
    (1.0 - bc).max(0.0).sqrt()
}

/// Per-channel histogram of one disk: `bins` counts per channel plus the
/// shared per-channel total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiskHistogram {
    pub counts: Vec<u32>, // 3 * bins, channel-major
    pub total: u32,
    /// When every channel concentrates in a single bin, those bin indices.
    pub concentrated: Option<[u8; 3]>,
}

impl DiskHistogram {
    pub fn channel(&self, c: usize, bins: usize) -> &[u32] {
        &self.counts[c * bins..(c + 1) * bins]
    }

    fn finish(counts: Vec<u32>, total: u32, bins: usize) -> Self {
        let mut conc = [0u8; 3];
        let mut all_single = total > 0;
        'chan: for c in 0..3 {
            let mut single = None;
            for (b, &v) in counts[c * bins..(c + 1) * bins].iter().enumerate() {
                if v != 0 {
                    if single.is_some() {
                        all_single = false;
                        break 'chan;
                    }
                    single = Some(b as u8);
                }
            }
            match single {
                Some(b) => conc[c] = b,
                None => {
                    all_single = false;
                    break;
                }
            }
        }
        DiskHistogram {
            counts,
            total,
            concentrated: all_single.then_some(conc),
        }
    }
}

#[inline]
pub fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

/// Distance between two disk histograms: per-channel Bhattacharyya distance
/// averaged over the three channels.
pub fn hist_distance(a: &DiskHistogram, b: &DiskHistogram, bins: usize) -> f64 {
    // Histograms concentrated in single bins compare to exactly 0 or 1 per
    // channel, matching the full formula.
    if let (Some(ca), Some(cb)) = (a.concentrated, b.concentrated) {
        let mut d = 0.0;
        for c in 0..3 {
            if ca[c] != cb[c] {
                d += 1.0;
            }
        }
        return d / 3.0;
    }
    let mut d = 0.0;
    for c in 0..3 {
        d += bhattacharyya(a.channel(c, bins), b.channel(c, bins));
    }
    d / 3.0
}

/// Build the histogram of the disk at `(x, y)` with radius `r`.
///
/// A tile is enclosed when its center lies within `r - tile_size * sqrt(2)/2`
/// of the disk center. Disks that enclose no tile fall back to binning the
/// covered pixels directly.
pub fn disk_histogram(
    grid: &TileGrid,
    img: &RgbImage,
    disks: &DiskTable,
    x: usize,
    y: usize,
    r: u32,
    bins: usize,
) -> DiskHistogram {
    let mut counts = vec![0u32; 3 * bins];
    let mut total = 0u32;
    let reach = r as f64 - grid.tile_size as f64 * std::f64::consts::SQRT_2 / 2.0;
    if reach >= 0.0 {
        let ts = grid.tile_size as f64;
        let tr_lo = (((y as f64 - reach) / ts).floor() as i64 - 1).max(0) as usize;
        let tr_hi = ((((y as f64 + reach) / ts).ceil() as i64) + 1).min(grid.rows as i64 - 1) as usize;
        let tc_lo = (((x as f64 - reach) / ts).floor() as i64 - 1).max(0) as usize;
        let tc_hi = ((((x as f64 + reach) / ts).ceil() as i64) + 1).min(grid.cols as i64 - 1) as usize;
        for tr in tr_lo..=tr_hi {
            for tc in tc_lo..=tc_hi {
                let (cx, cy) = grid.tile_center(tr, tc);
                let (dx, dy) = (cx - x as f64, cy - y as f64);
                if dx * dx + dy * dy <= reach * reach {
                    let m = grid.mean(tr, tc);
                    for c in 0..3 {
                        counts[c * bins + bin_of(m[c], bins)] += 1;
                    }
                    total += 1;
                }
            }
        }
    }
    if total == 0 {
        // Degenerate small disk: bin the covered pixels per channel.
        let geo = disks.get(r);
        for (dx, dy) in geo.offsets() {
            let px = (x as i32 + dx) as usize;
            let py = (y as i32 + dy) as usize;
            let p = img.pixel(px, py);
            for c in 0..3 {
                counts[c * bins + bin_of(p[c], bins)] += 1;
            }
            total += 1;
        }
    }
    DiskHistogram::finish(counts, total, bins)
}

/// Disk histograms of every valid center for every scale in `r_lo..=r_max`.
pub struct HistSlices {
    pub r_lo: u32,
    slices: Vec<Vec<DiskHistogram>>,
    width: usize,
}

impl HistSlices {
    pub fn build(
        grid: &TileGrid,
        img: &RgbImage,
        disks: &DiskTable,
        r_lo: u32,
        r_max: u32,
        bins: usize,
    ) -> Self {
        let (w, h) = (img.width, img.height);
        let empty = DiskHistogram {
            counts: Vec::new(),
            total: 0,
            concentrated: None,
        };
        let slices: Vec<Vec<DiskHistogram>> = (r_lo..=r_max)
            .into_par_iter()
            .map(|r| {
                let ri = r as usize;
                let mut slice = vec![empty.clone(); w * h];
                if 2 * ri < w && 2 * ri < h {
                    for y in ri..h - ri {
                        for x in ri..w - ri {
                            slice[y * w + x] = disk_histogram(grid, img, disks, x, y, r, bins);
                        }
                    }
                }
                slice
            })
            .collect();
        HistSlices {
            r_lo,
            slices,
            width: w,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, r: u32) -> &DiskHistogram {
        &self.slices[(r - self.r_lo) as usize][y * self.width + x]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bhattacharyya_identities() {
        let h = [3u32, 5, 2, 0, 0, 0, 0, 0, 0, 0];
        assert_eq!(bhattacharyya(&h, &h), 0.0);
        let a = [1u32, 0, 0, 0];
        let b = [0u32, 1, 0, 0];
        assert_eq!(bhattacharyya(&a, &b), 1.0);
        let scaled: Vec<u32> = h.iter().map(|&v| v * 7).collect();
        // Scaling a histogram leaves the normalized distance at zero,
        // up to floating-point rounding of the coefficient.
        assert!(bhattacharyya(&h, &scaled) < 1e-7);
    }

    #[test]
    fn bhattacharyya_is_symmetric_and_bounded() {
        let a = [4u32, 1, 0, 7, 2];
        let b = [0u32, 3, 3, 1, 0];
        let d1 = bhattacharyya(&a, &b);
        let d2 = bhattacharyya(&b, &a);
        assert_eq!(d1, d2);
        assert!(d1 > 0.0 && d1 < 1.0);
    }

    #[test]
    fn binning_clamps_to_last_bin() {
        assert_eq!(bin_of(0.0, 10), 0);
        assert_eq!(bin_of(0.999, 10), 9);
        assert_eq!(bin_of(1.0, 10), 9);
        assert_eq!(bin_of(0.35, 10), 3);
    }
}
