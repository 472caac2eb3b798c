//! Shock typing and seed extraction.
//!
//! Medial points are colored by the local behavior of the radius function:
//! blobs (local scale maxima), ribbons (equal-scale runs), necks (local
//! scale minima that disconnect their neighborhood), and protrusions
//! (everything else). Branch growth may only be born from type-3/4 shocks
//! that are also local cost minima, which is what the seed extractor
//! returns.

use serde::{Deserialize, Serialize};

use crate::cost::CostVolume;

/// Shock classes of a medial point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShockType {
    /// Protrusion: monotone scale run (residual class).
    Type1,
    /// Neck: local scale minimum whose removal disconnects the axis locally.
    Type2,
    /// Ribbon: at least one neighbor, all neighbors at the same scale.
    Type3,
    /// Blob: strictly larger scale than every neighbor.
    Type4,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShockConfig {
    /// Maximality margin in cost units.
    pub delta_r: f64,
    /// Scale step used by the maximality test.
    pub epsilon_r: u32,
}

impl Default for ShockConfig {
    fn default() -> Self {
        ShockConfig {
            delta_r: 0.0,
            epsilon_r: 1,
        }
    }
}

/// A type-3/4 shock queued for growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub x: usize,
    pub y: usize,
    pub radius: u32,
    pub cost: f64,
    pub shock_type: ShockType,
}

/// Scale maximality: enlarging the disk by `epsilon_r` must raise the cost
/// by more than `delta_r`. Costs above the top scale (or invalid ones) count
/// as infinitely expensive, so top-scale proposals are maximal by default.
pub fn is_scale_maximal(
    vol: &CostVolume,
    x: usize,
    y: usize,
    r: u32,
    cfg: &ShockConfig,
) -> bool {
    let here = vol.cost(x, y, r);
    if !here.is_finite() {
        return false;
    }
    let above = vol.cost(x, y, r + cfg.epsilon_r);
    here + cfg.delta_r < above
}

/// Classify a medial point from the scales of its 8-neighbors on the axis.
///
/// `axis_radius` reports the radius of the axis point at a pixel, or None
/// where the axis has no point. Neck classification additionally requires
/// that the neighbors stop being mutually 8-connected once the center is
/// removed.
pub fn classify_shock(
    axis_radius: impl Fn(i64, i64) -> Option<u32>,
    x: usize,
    y: usize,
    r: u32,
) -> ShockType {
    let mut neighbors = Vec::with_capacity(8);
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            if let Some(nr) = axis_radius(x as i64 + dx, y as i64 + dy) {
                neighbors.push((dx, dy, nr));
            }
        }
    }
    if neighbors.iter().all(|&(_, _, nr)| nr < r) {
        // Vacuously true for isolated points.
        return ShockType::Type4;
    }
    if !neighbors.is_empty() && neighbors.iter().all(|&(_, _, nr)| nr == r) {
        return ShockType::Type3;
    }
    if neighbors.iter().all(|&(_, _, nr)| nr > r) && !ring_connected(&neighbors) {
        return ShockType::Type2;
    }
    ShockType::Type1
}

/// Whether the neighbor cells form one 8-connected component inside the
/// 3x3 ring around the (removed) center.
fn ring_connected(neighbors: &[(i64, i64, u32)]) -> bool {
    if neighbors.len() <= 1 {
        return true;
    }
    let mut seen = vec![false; neighbors.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        let (ix, iy, _) = neighbors[i];
        for (j, &(jx, jy, _)) in neighbors.iter().enumerate() {
            if !seen[j] && (ix - jx).abs() <= 1 && (iy - jy).abs() <= 1 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// The scale a free (non-axis) pixel carries during seeding: among its
/// scale-maximal scales, the one of minimal cost (smallest radius on ties).
pub fn best_candidate(
    vol: &CostVolume,
    x: usize,
    y: usize,
    cfg: &ShockConfig,
) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for r in vol.scales() {
        if !is_scale_maximal(vol, x, y, r, cfg) {
            continue;
        }
        let c = vol.cost(x, y, r);
        if best.map_or(true, |(_, bc)| c < bc) {
            best = Some((r, c));
        }
    }
    best
}

/// Seed queue ordered by radius descending, then cost ascending, then
/// row-major position. Pruned seeds never reappear.
#[derive(Debug, Clone)]
pub struct SeedQueue {
    seeds: Vec<Seed>,
    removed: Vec<bool>,
    cursor: usize,
}

impl SeedQueue {
    pub fn from_seeds(mut seeds: Vec<Seed>) -> Self {
        seeds.sort_by(|a, b| {
            b.radius
                .cmp(&a.radius)
                .then(a.cost.total_cmp(&b.cost))
                .then((a.y, a.x).cmp(&(b.y, b.x)))
        });
        let removed = vec![false; seeds.len()];
        SeedQueue {
            seeds,
            removed,
            cursor: 0,
        }
    }

    pub fn pop(&mut self) -> Option<Seed> {
        while self.cursor < self.seeds.len() {
            let i = self.cursor;
            self.cursor += 1;
            if !self.removed[i] {
                return Some(self.seeds[i]);
            }
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        (self.cursor..self.seeds.len()).all(|i| self.removed[i])
    }

    pub fn len(&self) -> usize {
        (self.cursor..self.seeds.len())
            .filter(|&i| !self.removed[i])
            .count()
    }

    pub fn total(&self) -> usize {
        self.seeds.len()
    }

    /// Remaining (not yet popped, not pruned) seeds.
    pub fn remaining(&self) -> impl Iterator<Item = &Seed> {
        self.seeds[self.cursor..]
            .iter()
            .zip(self.removed[self.cursor..].iter())
            .filter(|(_, &rm)| !rm)
            .map(|(s, _)| s)
    }

    /// Prune remaining seeds matching the predicate.
    pub fn remove_where(&mut self, mut pred: impl FnMut(&Seed) -> bool) -> usize {
        let mut n = 0;
        for i in self.cursor..self.seeds.len() {
            if !self.removed[i] && pred(&self.seeds[i]) {
                self.removed[i] = true;
                n += 1;
            }
        }
        n
    }
}

/// Extract every type-3/4 shock that is a local cost minimum.
///
/// A pixel seeds when its best scale-maximal candidate (a) strictly exceeds
/// all 8-neighbor candidate scales (type 4) or ties at least one of them
/// (type 3), and (b) its cost is no larger than any neighbor candidate's
/// cost.
pub fn extract_seeds(vol: &CostVolume, cfg: &ShockConfig) -> SeedQueue {
    use rayon::prelude::*;

    let (w, h) = (vol.width, vol.height);
    // Per-pixel best candidates, computed in parallel over rows.
    let candidates: Vec<Option<(u32, f64)>> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| best_candidate(vol, x, y, cfg))
        .collect();

    let cand = |x: i64, y: i64| -> Option<(u32, f64)> {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            None
        } else {
            candidates[y as usize * w + x as usize]
        }
    };

    let mut seeds = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let Some((r, c)) = candidates[y * w + x] else {
                continue;
            };
            let mut has_equal = false;
            let mut all_smaller = true;
            let mut is_cost_min = true;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    if let Some((nr, nc)) = cand(x as i64 + dx, y as i64 + dy) {
                        if nr == r {
                            has_equal = true;
                        }
                        if nr >= r {
                            all_smaller = false;
                        }
                        if nc < c {
                            is_cost_min = false;
                        }
                    }
                }
            }
            if !is_cost_min {
                continue;
            }
            let shock_type = if all_smaller {
                ShockType::Type4
            } else if has_equal {
                ShockType::Type3
            } else {
                continue;
            };
            seeds.push(Seed {
                x,
                y,
                radius: r,
                cost: c,
                shock_type,
            });
        }
    }
    SeedQueue::from_seeds(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{build_cost_volume, CostConfig};
    use crate::imgproc::RgbImage;

    fn disk_image(w: usize, h: usize, cx: usize, cy: usize, r: f64) -> RgbImage {
        let mut img = RgbImage::new(w, h, [0.15, 0.25, 0.8]);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 - cx as f64, y as f64 - cy as f64);
                if dx * dx + dy * dy <= r * r {
                    img.set_pixel(x, y, [0.9, 0.75, 0.1]);
                }
            }
        }
        img
    }

    #[test]
    fn constant_image_maximal_only_at_top_scale() {
        let img = RgbImage::new(26, 26, [0.5; 3]);
        let cfg = CostConfig {
            r_max: 9,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        let scfg = ShockConfig::default();
        for r in 2..9 {
            assert!(!is_scale_maximal(&vol, 13, 13, r, &scfg), "r={r}");
        }
        assert!(is_scale_maximal(&vol, 13, 13, 9, &scfg));
    }

    #[test]
    fn disk_center_is_maximal_at_disk_radius() {
        let img = disk_image(40, 40, 20, 20, 8.0);
        let cfg = CostConfig {
            r_max: 14,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        let scfg = ShockConfig::default();
        // The cost curve at the center rises sharply past the disk radius.
        assert!(is_scale_maximal(&vol, 20, 20, 8, &scfg));
        for r in 3..8 {
            assert!(!is_scale_maximal(&vol, 20, 20, r, &scfg), "r={r}");
        }
    }

    #[test]
    fn disk_produces_type4_seed_near_center() {
        let img = disk_image(44, 44, 22, 22, 10.0);
        let cfg = CostConfig {
            r_max: 16,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        let queue = extract_seeds(&vol, &ShockConfig::default());
        let found = queue.remaining().any(|s| {
            s.shock_type == ShockType::Type4
                && (s.x as i64 - 22).abs() <= 1
                && (s.y as i64 - 22).abs() <= 1
                && (9..=11).contains(&s.radius)
        });
        assert!(found, "no blob seed near the disk center");
    }

    #[test]
    fn seeds_satisfy_maximality_and_cost_minimum_post_hoc() {
        let img = disk_image(40, 40, 19, 21, 7.0);
        let cfg = CostConfig {
            r_max: 12,
            ..CostConfig::color()
        };
        let vol = build_cost_volume(&img, &cfg).unwrap();
        let scfg = ShockConfig::default();
        let queue = extract_seeds(&vol, &scfg);
        assert!(queue.len() > 0);
        for s in queue.remaining() {
            assert!(is_scale_maximal(&vol, s.x, s.y, s.radius, &scfg));
            assert_eq!(s.cost, vol.cost(s.x, s.y, s.radius));
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (s.x as i64 + dx, s.y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= 40 || ny >= 40 {
                        continue;
                    }
                    if let Some((_, nc)) =
                        best_candidate(&vol, nx as usize, ny as usize, &scfg)
                    {
                        assert!(s.cost <= nc);
                    }
                }
            }
        }
    }

    #[test]
    fn classify_isolated_point_is_blob() {
        let t = classify_shock(|_, _| None, 5, 5, 4);
        assert_eq!(t, ShockType::Type4);
    }

    #[test]
    fn classify_equal_scale_run_interior_is_ribbon() {
        // Horizontal run of equal radii at y=3, x in 2..=6.
        let axis = |x: i64, y: i64| -> Option<u32> {
            if y == 3 && (2..=6).contains(&x) {
                Some(5)
            } else {
                None
            }
        };
        assert_eq!(classify_shock(axis, 4, 3, 5), ShockType::Type3);
    }

    #[test]
    fn classify_neck_between_larger_neighbors() {
        // Middle of a bar whose two sides carry strictly larger radii.
        let axis = |x: i64, y: i64| -> Option<u32> {
            if y != 3 {
                return None;
            }
            match x {
                3 | 5 => Some(4),
                4 => Some(3),
                _ => None,
            }
        };
        assert_eq!(classify_shock(axis, 4, 3, 3), ShockType::Type2);
    }

    #[test]
    fn classify_monotone_run_is_protrusion() {
        let axis = |x: i64, y: i64| -> Option<u32> {
            if y == 3 && (2..=6).contains(&x) {
                Some(2 + x as u32)
            } else {
                None
            }
        };
        // Interior point with one smaller and one larger neighbor.
        assert_eq!(classify_shock(axis, 4, 3, 6), ShockType::Type1);
    }

    #[test]
    fn queue_orders_radius_desc_cost_asc() {
        let mk = |x, radius, cost| Seed {
            x,
            y: 0,
            radius,
            cost,
            shock_type: ShockType::Type4,
        };
        let mut q = SeedQueue::from_seeds(vec![
            mk(0, 3, 0.5),
            mk(1, 7, 0.9),
            mk(2, 7, 0.2),
            mk(3, 5, 0.1),
        ]);
        let order: Vec<usize> = std::iter::from_fn(|| q.pop()).map(|s| s.x).collect();
        assert_eq!(order, vec![2, 1, 3, 0]);
    }

    #[test]
    fn pruned_seeds_never_reappear() {
        let mk = |x, radius| Seed {
            x,
            y: 0,
            radius,
            cost: 0.1,
            shock_type: ShockType::Type3,
        };
        let mut q = SeedQueue::from_seeds(vec![mk(1, 4), mk(2, 3), mk(3, 2)]);
        assert_eq!(q.remove_where(|s| s.x == 2), 1);
        let order: Vec<usize> = std::iter::from_fn(|| q.pop()).map(|s| s.x).collect();
        assert_eq!(order, vec![1, 3]);
    }
}
