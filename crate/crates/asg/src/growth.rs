//! Grammar-constrained greedy branch growth.
//!
//! Each seed is grown by repeatedly attaching the cheapest valid *fragment*:
//! a short digital straight segment of medial points whose radii vary by at
//! most `scale_step` per point. A fragment is valid when none of its points
//! exceeds the seed's cost ceiling, none lands on or runs alongside the
//! existing axis (except to terminate on another branch, forming a
//! junction), and its disks are not already subsumed by the covered region.
//! After the seed queue is exhausted, branch end points are regrown once
//! with a relaxed ceiling to recover fine structure.

use serde::Serialize;

use crate::config::RunConfig;
use crate::cost::{build_cost_volume, CostVolume, DiskTable};
use crate::error::Result;
use crate::imgproc::{smooth_l0, RgbImage};
use crate::mask::Mask;
use crate::shock::{extract_seeds, Seed, SeedQueue, ShockConfig};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthConfig {
    /// Slack over the seed cost in the ceiling `C_tol = C_seed * (1 + alpha_c)`.
    pub alpha_c: f64,
    /// Maximum fragment length in points.
    pub l_max: usize,
    /// Length weight at `l_max`; the weight falls linearly from 1 at length 1.
    pub alpha_end: f64,
    /// Number of quantized growth directions.
    pub directions: usize,
    /// Ceiling multiplier for the end-point growth pass.
    pub relax_factor: f64,
    /// Maximum per-point radius change inside a fragment.
    pub scale_step: u32,
    /// Covered fraction at which a disk counts as subsumed (1.0 = fully).
    pub subsume_frac: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            alpha_c: 0.75,
            l_max: 10,
            alpha_end: 0.85,
            directions: 16,
            relax_factor: 2.0,
            scale_step: 1,
            subsume_frac: 0.95,
        }
    }
}

/// Length weight: linear from 1 at `l = 1` down to `alpha_end` at `l_max`,
/// so fragments of equal mean cost rank longer-first.
pub fn alpha_weight(l: usize, cfg: &GrowthConfig) -> f64 {
    if cfg.l_max <= 1 {
        return 1.0;
    }
    1.0 - (1.0 - cfg.alpha_end) * (l as f64 - 1.0) / (cfg.l_max as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PointFlags {
    pub seed_origin: bool,
    pub junction: bool,
    pub end_point: bool,
    pub relaxed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MedialPoint {
    pub x: usize,
    pub y: usize,
    pub radius: u32,
    pub cost: f64,
    pub branch: u32,
    pub flags: PointFlags,
    #[serde(skip)]
    pub prev: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct GrowthCounters {
    /// Scale-space proposals (cost volume reads) examined during growth.
    pub proposals_examined: u64,
    pub fragments_attached: u64,
    pub seeds_total: u64,
    pub seeds_grown: u64,
    pub seeds_pruned: u64,
}

#[derive(Debug, Clone)]
struct Branch {
    points: Vec<u32>,
    ctol: f64,
}

/// The growing medial axis: at most one point per pixel, branch chains, and
/// the coverage map of the union of accepted disks.
pub struct MedialAxis {
    pub width: usize,
    pub height: usize,
    points: Vec<MedialPoint>,
    grid: Vec<Option<u32>>,
    branches: Vec<Branch>,
    coverage: Mask,
    disks: DiskTable,
    pub counters: GrowthCounters,
}

impl MedialAxis {
    pub fn new(width: usize, height: usize, r_max: u32) -> Self {
        MedialAxis {
            width,
            height,
            points: Vec::new(),
            grid: vec![None; width * height],
            branches: Vec::new(),
            coverage: Mask::new(width, height),
            disks: DiskTable::new(r_max),
            counters: GrowthCounters::default(),
        }
    }

    pub fn points(&self) -> &[MedialPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Ordered point indices of one branch.
    pub fn branch(&self, b: usize) -> &[u32] {
        &self.branches[b].points
    }

    pub fn branch_ctol(&self, b: usize) -> f64 {
        self.branches[b].ctol
    }

    pub fn coverage(&self) -> &Mask {
        &self.coverage
    }

    #[inline]
    pub fn point_at(&self, x: i64, y: i64) -> Option<&MedialPoint> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        self.grid[y as usize * self.width + x as usize].map(|i| &self.points[i as usize])
    }

    /// Radius lookup in the shape expected by `shock::classify_shock`.
    pub fn radius_at(&self, x: i64, y: i64) -> Option<u32> {
        self.point_at(x, y).map(|p| p.radius)
    }

    /// Number of axis points among the 8 neighbors.
    pub fn degree(&self, x: usize, y: usize) -> usize {
        let mut d = 0;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx != 0 || dy != 0) && self.point_at(x as i64 + dx, y as i64 + dy).is_some() {
                    d += 1;
                }
            }
        }
        d
    }

    /// Whether at least `frac` of the disk at `(x, y, r)` is already covered.
    pub fn disk_covered(&self, x: usize, y: usize, r: u32, frac: f64) -> bool {
        let geo = self.disks.get(r);
        if frac >= 1.0 {
            for &(dy, hw) in &geo.spans {
                let py = y as i64 + dy as i64;
                for dx in -hw..=hw {
                    if !self.coverage.get_checked(x as i64 + dx as i64, py) {
                        return false;
                    }
                }
            }
            return true;
        }
        let mut covered = 0usize;
        for &(dy, hw) in &geo.spans {
            let py = y as i64 + dy as i64;
            for dx in -hw..=hw {
                if self.coverage.get_checked(x as i64 + dx as i64, py) {
                    covered += 1;
                }
            }
        }
        covered as f64 >= frac * geo.area as f64
    }

    fn new_branch(&mut self, ctol: f64) -> u32 {
        self.branches.push(Branch {
            points: Vec::new(),
            ctol,
        });
        (self.branches.len() - 1) as u32
    }

    fn add_point(
        &mut self,
        x: usize,
        y: usize,
        radius: u32,
        cost: f64,
        branch: u32,
        prev: Option<u32>,
        flags: PointFlags,
    ) -> u32 {
        debug_assert!(self.grid[y * self.width + x].is_none());
        let idx = self.points.len() as u32;
        self.points.push(MedialPoint {
            x,
            y,
            radius,
            cost,
            branch,
            flags,
            prev,
        });
        self.grid[y * self.width + x] = Some(idx);
        self.branches[branch as usize].points.push(idx);
        let geo = self.disks.get(radius);
        for &(dy, hw) in &geo.spans {
            let py = y as i64 + dy as i64;
            for dx in -hw..=hw {
                let px = x as i64 + dx as i64;
                if self.coverage.contains(px, py) {
                    self.coverage.set(px as usize, py as usize, true);
                }
            }
        }
        idx
    }

    /// Binary skeleton mask of the axis.
    pub fn skeleton_mask(&self) -> Mask {
        let mut m = Mask::new(self.width, self.height);
        for p in &self.points {
            m.set(p.x, p.y, true);
        }
        m
    }

    /// Per-pixel radius map (0 off the axis).
    pub fn radius_map(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.width * self.height];
        for p in &self.points {
            out[p.y * self.width + p.x] = p.radius;
        }
        out
    }

    /// Set end-point and junction flags from the final topology.
    pub fn finalize_flags(&mut self) {
        let degrees: Vec<usize> = self.points.iter().map(|p| self.degree(p.x, p.y)).collect();
        for (p, d) in self.points.iter_mut().zip(degrees) {
            p.flags.end_point = d <= 1;
            p.flags.junction = d >= 3;
        }
    }
}

/// A candidate run of medial points, attached as a unit.
#[derive(Debug, Clone)]
pub struct Fragment {
    /// `(x, y, radius, cost)` per point, ordered outward from the origin.
    pub points: Vec<(usize, usize, u32, f64)>,
    /// Quantized direction index.
    pub direction: usize,
    /// Length-weighted mean cost.
    pub cost: f64,
    /// The last point touches a foreign axis point (branch union).
    pub merges: bool,
    /// Axis point the fragment grows from.
    pub origin: u32,
}

impl Fragment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

enum PointSite {
    Free,
    /// Adjacent to an axis point outside the allowed attachment set.
    Foreign,
    Occupied,
}

/// Adjacency state of a prospective fragment point. The attachment set is
/// the origin itself plus, for the first point, the origin's current
/// neighbors (which is what lets branches fan out of blobs and junctions).
fn site_state(axis: &MedialAxis, origin: &MedialPoint, j: usize, x: usize, y: usize) -> PointSite {
    if axis.point_at(x as i64, y as i64).is_some() {
        return PointSite::Occupied;
    }
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if axis.point_at(nx, ny).is_none() {
                continue;
            }
            if nx == origin.x as i64 && ny == origin.y as i64 {
                continue;
            }
            let near_origin = (nx - origin.x as i64).abs() <= 1 && (ny - origin.y as i64).abs() <= 1;
            if j == 1 && near_origin {
                continue;
            }
            return PointSite::Foreign;
        }
    }
    PointSite::Free
}

/// Enumerate candidate fragments growing out of `origin`.
///
/// For every direction that does not fold back onto the branch (angle to the
/// incoming direction must be at most 90 degrees) a digital straight segment
/// is rasterized; each point takes the radius minimizing the cost within
/// `scale_step` of its predecessor. Points that exceed `ctol`, leave the
/// valid region, or hit the axis truncate the segment; every prefix whose
/// disks are not fully subsumed by the coverage map is a candidate.
pub fn candidate_fragments(
    axis: &mut MedialAxis,
    vol: &CostVolume,
    origin_idx: u32,
    ctol: f64,
    cfg: &GrowthConfig,
) -> Vec<Fragment> {
    let origin = axis.points[origin_idx as usize].clone();
    let incoming: Option<(f64, f64)> = origin.prev.map(|q| {
        let q = &axis.points[q as usize];
        let (vx, vy) = (
            origin.x as f64 - q.x as f64,
            origin.y as f64 - q.y as f64,
        );
        let n = (vx * vx + vy * vy).sqrt();
        (vx / n, vy / n)
    });

    let mut out = Vec::new();
    let mut proposals = 0u64;
    for k in 0..cfg.directions {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / cfg.directions as f64;
        let (ux, uy) = (theta.cos(), theta.sin());
        if let Some((ix, iy)) = incoming {
            if ux * ix + uy * iy < -1e-12 {
                continue; // back-fold onto the branch
            }
        }
        let m = ux.abs().max(uy.abs());

        // points and their subsumption state along this direction
        let mut pts: Vec<(usize, usize, u32, f64)> = Vec::with_capacity(cfg.l_max);
        let mut covered: Vec<bool> = Vec::with_capacity(cfg.l_max);
        let mut merged_at: Option<usize> = None;
        let mut prev_r = origin.radius;
        for j in 1..=cfg.l_max {
            let fx = origin.x as f64 + (j as f64) * ux / m;
            let fy = origin.y as f64 + (j as f64) * uy / m;
            let (px, py) = (fx.round() as i64, fy.round() as i64);
            if px < 0 || py < 0 || px >= vol.width as i64 || py >= vol.height as i64 {
                break;
            }
            let (px, py) = (px as usize, py as usize);
            let mut foreign = false;
            match site_state(axis, &origin, j, px, py) {
                PointSite::Occupied => break,
                PointSite::Foreign => foreign = true,
                PointSite::Free => {}
            }
            let lo = prev_r.saturating_sub(cfg.scale_step).max(vol.r_min);
            let hi = (prev_r + cfg.scale_step).min(vol.r_max);
            let mut best: Option<(u32, f64)> = None;
            for r in lo..=hi {
                proposals += 1;
                let c = vol.cost(px, py, r);
                if c.is_finite() && best.map_or(true, |(_, bc)| c < bc) {
                    best = Some((r, c));
                }
            }
            let Some((r, c)) = best else { break };
            if c > ctol {
                break;
            }
            pts.push((px, py, r, c));
            covered.push(axis.disk_covered(px, py, r, cfg.subsume_frac));
            prev_r = r;
            if foreign {
                merged_at = Some(j);
                break;
            }
        }

        let mut all_covered = true;
        let mut cost_sum = 0.0;
        for l in 1..=pts.len() {
            all_covered &= covered[l - 1];
            cost_sum += pts[l - 1].3;
            if all_covered {
                continue; // subsumed prefix offers nothing new
            }
            let cbar = alpha_weight(l, cfg) / l as f64 * cost_sum;
            out.push(Fragment {
                points: pts[..l].to_vec(),
                direction: k,
                cost: cbar,
                merges: merged_at == Some(l),
                origin: origin_idx,
            });
        }
    }
    axis.counters.proposals_examined += proposals;
    out
}

/// Re-check a previously generated fragment against the current axis state.
/// Validity only shrinks over time, so a fragment that passes is still the
/// best of its origin.
fn fragment_still_valid(axis: &MedialAxis, frag: &Fragment, cfg: &GrowthConfig) -> bool {
    let origin = &axis.points[frag.origin as usize];
    let mut all_covered = true;
    for (j, &(x, y, r, _)) in frag.points.iter().enumerate() {
        match site_state(axis, origin, j + 1, x, y) {
            PointSite::Occupied => return false,
            PointSite::Foreign => {
                if j + 1 != frag.points.len() || !frag.merges {
                    return false;
                }
            }
            PointSite::Free => {
                if j + 1 == frag.points.len() && frag.merges {
                    return false; // merge target disappeared? regenerate
                }
            }
        }
        all_covered &= axis.disk_covered(x, y, r, cfg.subsume_frac);
    }
    !all_covered
}

/// Lower-is-better ordering key: cost, then direction, then longer length,
/// used for deterministic argmin selection.
fn better(a: &Fragment, b: &Fragment) -> bool {
    (a.cost, a.direction, std::cmp::Reverse(a.len())) < (b.cost, b.direction, std::cmp::Reverse(b.len()))
}

fn best_fragment(
    axis: &mut MedialAxis,
    vol: &CostVolume,
    origin: u32,
    ctol: f64,
    cfg: &GrowthConfig,
) -> Option<Fragment> {
    candidate_fragments(axis, vol, origin, ctol, cfg)
        .into_iter()
        .fold(None, |acc: Option<Fragment>, f| match acc {
            Some(best) if better(&best, &f) => Some(best),
            _ => Some(f),
        })
}

/// Attach a fragment; returns the new growth tip unless the fragment merged
/// into another branch.
fn attach_fragment(axis: &mut MedialAxis, frag: &Fragment, relaxed: bool) -> Option<u32> {
    let origin = frag.origin;
    let origin_branch = axis.points[origin as usize].branch;
    let extends = *axis.branches[origin_branch as usize]
        .points
        .last()
        .expect("branch cannot be empty")
        == origin;
    let branch = if extends {
        origin_branch
    } else {
        let ctol = axis.branches[origin_branch as usize].ctol;
        axis.new_branch(ctol)
    };
    let mut prev = origin;
    for &(x, y, r, c) in &frag.points {
        let flags = PointFlags {
            relaxed,
            ..PointFlags::default()
        };
        prev = axis.add_point(x, y, r, c, branch, Some(prev), flags);
    }
    axis.counters.fragments_attached += 1;
    if frag.merges {
        None
    } else {
        Some(prev)
    }
}

struct Tip {
    point: u32,
    ctol: f64,
    best: Option<Fragment>,
    exhausted: bool,
}

/// Greedy growth loop over a set of tips: attach the globally cheapest valid
/// fragment, keep the origin live (it may sprout further branches), continue
/// until every tip is exhausted.
fn grow_tips(
    axis: &mut MedialAxis,
    vol: &CostVolume,
    cfg: &GrowthConfig,
    seeds: Vec<(u32, f64)>,
    relaxed: bool,
) {
    let mut tips: Vec<Tip> = seeds
        .into_iter()
        .map(|(point, ctol)| Tip {
            point,
            ctol,
            best: None,
            exhausted: false,
        })
        .collect();
    loop {
        for i in 0..tips.len() {
            if !tips[i].exhausted && tips[i].best.is_none() {
                match best_fragment(axis, vol, tips[i].point, tips[i].ctol, cfg) {
                    Some(f) => tips[i].best = Some(f),
                    None => tips[i].exhausted = true,
                }
            }
        }
        let Some(chosen) = tips
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.best.as_ref().map(|f| (i, f)))
            .fold(None::<(usize, &Fragment)>, |acc, (i, f)| match acc {
                Some((bi, bf)) if better(bf, f) => Some((bi, bf)),
                _ => Some((i, f)),
            })
            .map(|(i, _)| i)
        else {
            return;
        };
        let frag = tips[chosen].best.take().expect("chosen tip has a fragment");
        if !fragment_still_valid(axis, &frag, cfg) {
            continue; // stale cache: recompute this tip on the next pass
        }
        let ctol = tips[chosen].ctol;
        if let Some(new_tip) = attach_fragment(axis, &frag, relaxed) {
            tips.push(Tip {
                point: new_tip,
                ctol,
                best: None,
                exhausted: false,
            });
        }
    }
}

/// Grow one seed into medial branches under its cost ceiling
/// `C_tol = C(seed) * (1 + alpha_c)`.
pub fn grow_seed(seed: &Seed, vol: &CostVolume, axis: &mut MedialAxis, cfg: &GrowthConfig) {
    if axis.point_at(seed.x as i64, seed.y as i64).is_some() {
        return;
    }
    let ctol = seed.cost * (1.0 + cfg.alpha_c);
    let branch = axis.new_branch(ctol);
    let flags = PointFlags {
        seed_origin: true,
        ..PointFlags::default()
    };
    let idx = axis.add_point(seed.x, seed.y, seed.radius, seed.cost, branch, None, flags);
    axis.counters.seeds_grown += 1;
    grow_tips(axis, vol, cfg, vec![(idx, ctol)], false);
}

/// Whether at least two additional fragments in clearly distinct directions
/// (pairwise separation above 45 degrees) can attach at this point.
pub fn detect_junction(
    point: u32,
    axis: &mut MedialAxis,
    vol: &CostVolume,
    cfg: &GrowthConfig,
) -> bool {
    let branch = axis.points[point as usize].branch;
    let ctol = axis.branch_ctol(branch as usize);
    let frags = candidate_fragments(axis, vol, point, ctol, cfg);
    let step = 360.0 / cfg.directions as f64;
    let mut dirs: Vec<f64> = frags.iter().map(|f| f.direction as f64 * step).collect();
    dirs.sort_by(f64::total_cmp);
    dirs.dedup();
    let mut chosen: Vec<f64> = Vec::new();
    for d in dirs {
        let ok = chosen.iter().all(|&c| {
            let diff = (d - c).abs();
            diff.min(360.0 - diff) > 45.0
        });
        if ok {
            chosen.push(d);
        }
    }
    chosen.len() >= 2
}

/// Remove queued seeds that the axis has made redundant: a nearby axis point
/// at a similar radius, or a disk fully subsumed by the coverage map.
pub fn prune_seeds(queue: &mut SeedQueue, axis: &mut MedialAxis) {
    let mut pruned = 0u64;
    let points = |x: i64, y: i64| -> Option<u32> { axis.radius_at(x, y) };
    let coverage_check: Vec<Seed> = queue
        .remaining()
        .filter(|s| {
            let mut near = false;
            'scan: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if let Some(r) = points(s.x as i64 + dx, s.y as i64 + dy) {
                        if (r as i64 - s.radius as i64).abs() <= 1 {
                            near = true;
                            break 'scan;
                        }
                    }
                }
            }
            near || axis.disk_covered(s.x, s.y, s.radius, 1.0)
        })
        .copied()
        .collect();
    let dead: std::collections::HashSet<(usize, usize, u32)> = coverage_check
        .iter()
        .map(|s| (s.x, s.y, s.radius))
        .collect();
    pruned += queue.remove_where(|s| dead.contains(&(s.x, s.y, s.radius))) as u64;
    axis.counters.seeds_pruned += pruned;
}

/// Final refinement: regrow every branch end point with the relaxed ceiling
/// `C_tol * relax_factor`; points added here carry the relaxed flag.
pub fn grow_end_points(vol: &CostVolume, axis: &mut MedialAxis, cfg: &GrowthConfig) {
    let mut tips = Vec::new();
    for (i, p) in axis.points.iter().enumerate() {
        if axis.degree(p.x, p.y) <= 1 {
            let ctol = axis.branches[p.branch as usize].ctol * cfg.relax_factor;
            tips.push((i as u32, ctol));
        }
    }
    grow_tips(axis, vol, cfg, tips, true);
}

/// Wall-clock breakdown of one extraction, in seconds.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub proposal_generation: f64,
    pub seed_growth: f64,
    pub end_point_growth: f64,
    pub other: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.proposal_generation + self.seed_growth + self.end_point_growth + self.other
    }
}

/// Everything produced by one run of the pipeline.
pub struct Extraction {
    pub axis: MedialAxis,
    pub volume: CostVolume,
    /// All extracted seeds, before any pruning.
    pub seeds: Vec<Seed>,
    pub timings: StageTimings,
}

/// Run the full pipeline: smoothing, cost volume, seed extraction, greedy
/// seed growth with pruning, and end-point growth. Deterministic for a
/// fixed configuration.
pub fn extract(img: &RgbImage, cfg: &RunConfig) -> Result<Extraction> {
    let mut timings = StageTimings::default();
    let t0 = std::time::Instant::now();

    let smoothed = if cfg.smooth {
        smooth_l0(img, cfg.lambda, cfg.kappa, cfg.beta_max)?
    } else {
        img.clone()
    };
    let vol = build_cost_volume(&smoothed, &cfg.cost_config())?;
    timings.proposal_generation = t0.elapsed().as_secs_f64();

    let t1 = std::time::Instant::now();
    let shock_cfg = ShockConfig {
        delta_r: cfg.delta_r,
        epsilon_r: cfg.epsilon_r,
    };
    let mut queue = extract_seeds(&vol, &shock_cfg);
    let seeds: Vec<Seed> = queue.remaining().copied().collect();
    let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
    axis.counters.seeds_total = queue.total() as u64;
    timings.other += t1.elapsed().as_secs_f64();

    let growth_cfg = cfg.growth_config();
    while let Some(seed) = queue.pop() {
        let tg = std::time::Instant::now();
        grow_seed(&seed, &vol, &mut axis, &growth_cfg);
        timings.seed_growth += tg.elapsed().as_secs_f64();

        let tp = std::time::Instant::now();
        prune_seeds(&mut queue, &mut axis);
        timings.other += tp.elapsed().as_secs_f64();
    }

    let te = std::time::Instant::now();
    grow_end_points(&vol, &mut axis, &growth_cfg);
    timings.end_point_growth = te.elapsed().as_secs_f64();

    let tf = std::time::Instant::now();
    axis.finalize_flags();
    timings.other += tf.elapsed().as_secs_f64();

    Ok(Extraction {
        axis,
        volume: vol,
        seeds,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostKind;
    use crate::synth::{fixtures, render_shapes, Primitive, ShapeSpec};

    fn test_config(kind: CostKind, r_max: u32) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.cost = kind;
        cfg.r_max = r_max;
        cfg.smooth = false;
        cfg
    }

    fn grow_fixture(spec: &ShapeSpec, cfg: &RunConfig) -> Extraction {
        let (img, _) = render_shapes(spec).unwrap();
        extract(&img, cfg).unwrap()
    }

    #[test]
    fn alpha_weight_prefers_longer_at_equal_mean_cost() {
        let cfg = GrowthConfig::default();
        assert_eq!(alpha_weight(1, &cfg), 1.0);
        assert_eq!(alpha_weight(10, &cfg), 0.85);
        // Two fragments with equal mean cost m: lengths 4 and 10.
        let m = 0.3;
        let c4 = alpha_weight(4, &cfg) / 4.0 * (4.0 * m);
        let c10 = alpha_weight(10, &cfg) / 10.0 * (10.0 * m);
        assert!(c10 < c4, "{c10} >= {c4}");
    }

    #[test]
    fn blob_growth_terminates_with_few_points() {
        let res = grow_fixture(&fixtures::disk(), &test_config(CostKind::Color, 14));
        let blob: Vec<_> = res
            .axis
            .points()
            .iter()
            .filter(|p| {
                let (dx, dy) = (p.x as f64 - 100.0, p.y as f64 - 75.0)
;                dx * dx + dy * dy <= 64.0
            })
            .collect();
        assert!(
            !blob.is_empty() && blob.len() <= 3,
            "blob core has {} axis points",
            blob.len()
        );
    }

    #[test]
    fn rectangle_branch_tracks_the_midline() {
        let res = grow_fixture(&fixtures::rectangle(), &test_config(CostKind::Color, 14));
        // Analytic midline: y = 74.5, x in [77, 123] (half-height inset).
        let on_midline: Vec<_> = res
            .axis
            .points()
            .iter()
            .filter(|p| (p.y as f64 - 74.5).abs() <= 2.0 && (70..130).contains(&p.x))
            .collect();
        let min_x = on_midline.iter().map(|p| p.x).min().unwrap();
        let max_x = on_midline.iter().map(|p| p.x).max().unwrap();
        let span = (max_x - min_x) as f64;
        assert!(span >= 0.8 * 46.0, "midline span {span}");
        // Away from the corner-diagonal junctions, every interior axis point
        // sits within 2 px of the analytic midline.
        for p in res.axis.points() {
            if (82..=118).contains(&p.x) && (70..=79).contains(&p.y) {
                assert!((p.y as f64 - 74.5).abs() <= 2.0, "point off midline: {p:?}");
            }
        }
    }

    #[test]
    fn vacuous_growth_keeps_only_the_seed() {
        // A small disk region: the seed's disk already covers it, and every
        // outward fragment is either subsumed or beyond the ceiling.
        let spec = ShapeSpec::new(60, 60, [0.16, 0.27, 0.83]).with(
            Primitive::Disk {
                cx: 30.0,
                cy: 30.0,
                r: 4.0,
            },
            [0.93, 0.72, 0.14],
        );
        let (img, masks) = render_shapes(&spec).unwrap();
        let cfg = test_config(CostKind::Color, 10);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let queue = extract_seeds(&vol, &cfg.shock_config());
        let seed = queue
            .remaining()
            .find(|s| masks[0].get(s.x, s.y))
            .copied()
            .expect("a seed inside the small disk");
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        grow_seed(&seed, &vol, &mut axis, &cfg.growth_config());
        assert_eq!(axis.len(), 1, "axis should gain exactly the seed point");
        assert!(axis.points()[0].flags.seed_origin);
    }

    #[test]
    fn candidate_fragments_prefer_the_midline_direction() {
        let (img, _) = render_shapes(&fixtures::rectangle()).unwrap();
        let cfg = test_config(CostKind::Color, 14);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let gcfg = cfg.growth_config();
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        let branch = axis.new_branch(1.0);
        let cost = vol.cost(100, 74, 6);
        let idx = axis.add_point(100, 74, 6, cost, branch, None, PointFlags::default());
        let frags = candidate_fragments(&mut axis, &vol, idx, cost * 1.75, &gcfg);
        assert!(!frags.is_empty());
        let best = frags
            .iter()
            .min_by(|a, b| {
                a.cost
                    .total_cmp(&b.cost)
                    .then(a.direction.cmp(&b.direction))
            })
            .unwrap();
        // Direction 0 is east, direction 8 is west for 16 directions.
        assert!(
            best.direction == 0 || best.direction == 8,
            "best direction {} is not along the midline",
            best.direction
        );
    }

    #[test]
    fn cost_gate_truncates_fragments_at_expensive_regions() {
        let (img, _) = render_shapes(&fixtures::rectangle()).unwrap();
        let cfg = test_config(CostKind::Color, 14);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let gcfg = cfg.growth_config();
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        let branch = axis.new_branch(1.0);
        // Endpoint 2 px from the rectangle's left edge, growing west hits
        // the contrast boundary immediately.
        let cost = vol.cost(73, 74, 2);
        let idx = axis.add_point(73, 74, 2, cost, branch, None, PointFlags::default());
        let ctol = vol.cost(100, 74, 6) * 1.75; // a coarse seed's ceiling
        let frags = candidate_fragments(&mut axis, &vol, idx, ctol, &gcfg);
        for f in &frags {
            if f.direction == 8 {
                assert!(f.len() <= 1, "westward fragment of length {}", f.len());
            }
        }
    }

    #[test]
    fn detect_junction_at_plus_center_not_on_ribbon() {
        // Stage a partially grown axis: only the horizontal bar of the plus
        // carries medial points. The vertical arms are untouched, so the
        // center accepts fragments both north and south; an off-center bar
        // point does not.
        let (img, _) = render_shapes(&fixtures::plus()).unwrap();
        let cfg = test_config(CostKind::Color, 14);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let gcfg = cfg.growth_config();
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        let ctol = vol.cost(100, 75, 3) * (1.0 + gcfg.alpha_c);
        let branch = axis.new_branch(ctol);
        let mut center_idx = 0;
        let mut arm_idx = 0;
        let mut prev = None;
        for x in 85..=115usize {
            let r = 3;
            let idx = axis.add_point(x, 75, r, vol.cost(x, 75, r), branch, prev, PointFlags::default());
            prev = Some(idx);
            if x == 100 {
                center_idx = idx;
            }
            if x == 110 {
                arm_idx = idx;
            }
        }
        assert!(detect_junction(center_idx, &mut axis, &vol, &gcfg));
        assert!(!detect_junction(arm_idx, &mut axis, &vol, &gcfg));
    }

    #[test]
    fn border_band_tip_has_no_proposals() {
        let img = crate::imgproc::RgbImage::new(40, 40, [0.5; 3]);
        let cfg = test_config(CostKind::Color, 8);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let gcfg = cfg.growth_config();
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        let branch = axis.new_branch(1.0);
        // A tip inside the INVALID border band: every proposal around it at
        // reachable scales is invalid.
        let idx = axis.add_point(1, 20, 8, 0.1, branch, None, PointFlags::default());
        let frags = candidate_fragments(&mut axis, &vol, idx, 1.0, &gcfg);
        assert!(frags.is_empty());
        assert!(!detect_junction(idx, &mut axis, &vol, &gcfg));
    }

    #[test]
    fn prune_seeds_cases() {
        let (img, masks) = render_shapes(&fixtures::rectangle()).unwrap();
        let cfg = test_config(CostKind::Color, 14);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let gcfg = cfg.growth_config();
        let mut queue = extract_seeds(&vol, &cfg.shock_config());
        let rect_seed = queue
            .remaining()
            .find(|s| masks[0].get(s.x, s.y) && s.radius >= 5)
            .copied()
            .expect("rectangle seed");

        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        grow_seed(&rect_seed, &vol, &mut axis, &gcfg);
        assert!(axis.len() > 10);

        let before = queue.len();
        prune_seeds(&mut queue, &mut axis);
        // Every remaining rectangle seed with a covered disk is gone.
        for s in queue.remaining() {
            if masks[0].get(s.x, s.y) {
                assert!(
                    !axis.disk_covered(s.x, s.y, s.radius, 1.0),
                    "covered seed survived at ({},{})",
                    s.x,
                    s.y
                );
            }
        }
        // Seeds far away from the axis are retained.
        assert!(queue.remaining().any(|s| !masks[0].get(s.x, s.y)));
        assert!(queue.len() < before);
    }

    #[test]
    fn seed_on_axis_point_is_pruned() {
        let img = crate::imgproc::RgbImage::new(30, 30, [0.4; 3]);
        let cfg = test_config(CostKind::Color, 8);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        let b = axis.new_branch(1.0);
        axis.add_point(15, 15, 5, 0.1, b, None, PointFlags::default());

        let near = Seed {
            x: 15,
            y: 15,
            radius: 5,
            cost: 0.1,
            shock_type: crate::shock::ShockType::Type4,
        };
        let far = Seed {
            x: 4,
            y: 25,
            radius: 4,
            cost: 0.1,
            shock_type: crate::shock::ShockType::Type4,
        };
        let mut queue = crate::shock::SeedQueue::from_seeds(vec![near, far]);
        prune_seeds(&mut queue, &mut axis);
        let left: Vec<_> = queue.remaining().collect();
        assert_eq!(left.len(), 1);
        assert_eq!((left[0].x, left[0].y), (4, 25));
    }

    #[test]
    fn end_point_growth_extends_a_wedge_tip() {
        // Wedge tapering from half-width 10 to 1: the base seed's ceiling
        // cuts growth around half-width ~6; the relaxed pass must push the
        // branch further toward the tip.
        let spec = ShapeSpec::new(200, 80, [0.16, 0.27, 0.83]).with(
            Primitive::Wedge {
                x0: 20.0,
                y: 40.0,
                x1: 180.0,
                half_w0: 10.0,
                half_w1: 1.0,
            },
            [0.93, 0.72, 0.14],
        );
        let (img, masks) = render_shapes(&spec).unwrap();
        let cfg = test_config(CostKind::Color, 14);
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let gcfg = cfg.growth_config();
        let mut queue = extract_seeds(&vol, &cfg.shock_config());
        let wedge = &masks[0];
        // Grow only the coarsest wedge seed, so a single ceiling governs the
        // whole branch and demonstrably cuts it short of the tip.
        let seed = std::iter::from_fn(|| queue.pop())
            .find(|s| wedge.get(s.x, s.y))
            .expect("wedge seed");
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        grow_seed(&seed, &vol, &mut axis, &gcfg);
        let wedge_reach = |axis: &MedialAxis| {
            axis.points()
                .iter()
                .filter(|p| wedge.get(p.x, p.y) && (p.y as i64 - 40).abs() <= 2)
                .map(|p| p.x)
                .max()
                .unwrap_or(0)
        };
        let before = wedge_reach(&axis);
        grow_end_points(&vol, &mut axis, &gcfg);
        let after = wedge_reach(&axis);
        assert!(after > before, "relaxed pass did not extend: {before} -> {after}");
        assert!(axis.points().iter().any(|p| p.flags.relaxed));
    }

    #[test]
    fn relax_factor_one_is_identity() {
        let (img, _) = render_shapes(&fixtures::rectangle()).unwrap();
        let mut cfg = test_config(CostKind::Color, 14);
        cfg.relax_factor = 1.0;
        let vol = build_cost_volume(&img, &cfg.cost_config()).unwrap();
        let gcfg = cfg.growth_config();
        let mut queue = extract_seeds(&vol, &cfg.shock_config());
        let mut axis = MedialAxis::new(vol.width, vol.height, vol.r_max);
        while let Some(seed) = queue.pop() {
            grow_seed(&seed, &vol, &mut axis, &gcfg);
            prune_seeds(&mut queue, &mut axis);
        }
        let before = axis.len();
        grow_end_points(&vol, &mut axis, &gcfg);
        assert_eq!(axis.len(), before);
        // And a second relaxed pass after a real one is a fixed point.
        let mut gcfg2 = gcfg;
        gcfg2.relax_factor = 2.0;
        grow_end_points(&vol, &mut axis, &gcfg2);
        let after_first = axis.len();
        grow_end_points(&vol, &mut axis, &gcfg2);
        assert_eq!(axis.len(), after_first);
    }

    #[test]
    fn extract_two_rectangles_yields_branches_in_each() {
        let spec = ShapeSpec::new(180, 120, [0.16, 0.27, 0.83])
            .with(
                Primitive::Rect {
                    x: 20.0,
                    y: 20.0,
                    w: 50.0,
                    h: 12.0,
                },
                [0.93, 0.72, 0.14],
            )
            .with(
                Primitive::Rect {
                    x: 100.0,
                    y: 80.0,
                    w: 50.0,
                    h: 12.0,
                },
                [0.55, 0.88, 0.33],
            );
        let (img, masks) = render_shapes(&spec).unwrap();
        let res = extract(&img, &test_config(CostKind::Color, 12)).unwrap();
        for (i, m) in masks.iter().enumerate() {
            let n = res
                .axis
                .points()
                .iter()
                .filter(|p| m.get(p.x, p.y))
                .count();
            assert!(n >= 20, "rectangle {i} has only {n} axis points");
        }
        assert!(res.axis.branch_count() >= 2);
        assert!(res.axis.counters.proposals_examined < res.volume.exhaustive_slots());
    }

    #[test]
    fn constant_image_produces_coarse_sparse_axis() {
        // Top scale comparable to the canvas: the only seeds are top-scale
        // boundary-convention maxima and the axis degenerates to at most a
        // single coarse branch.
        let img = crate::imgproc::RgbImage::new(90, 90, [0.42; 3]);
        let res = extract(&img, &test_config(CostKind::Color, 44)).unwrap();
        assert!(res.axis.branch_count() <= 1, "{} branches", res.axis.branch_count());
        // The ceiling w_s/44 * 1.75 admits nothing finer than r = 26.
        for p in res.axis.points() {
            assert!(p.radius >= 26, "fine-scale point on a constant image: {p:?}");
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let spec = fixtures::dumbbell();
        let (img, _) = render_shapes(&spec).unwrap();
        let cfg = test_config(CostKind::Color, 12);
        let a = extract(&img, &cfg).unwrap();
        let b = extract(&img, &cfg).unwrap();
        assert_eq!(a.axis.len(), b.axis.len());
        for (pa, pb) in a.axis.points().iter().zip(b.axis.points()) {
            assert_eq!((pa.x, pa.y, pa.radius, pa.branch), (pb.x, pb.y, pb.radius, pb.branch));
            assert_eq!(pa.cost, pb.cost);
        }
    }

    #[test]
    fn axis_structure_invariants_hold() {
        let res = grow_fixture(&fixtures::plus(), &test_config(CostKind::Color, 14));
        let axis = &res.axis;
        // Branch chains are 8-connected with smooth radii.
        for b in 0..axis.branch_count() {
            let pts = axis.branch(b);
            for w in pts.windows(2) {
                let (p, q) = (&axis.points()[w[0] as usize], &axis.points()[w[1] as usize]);
                assert!(p.x.abs_diff(q.x) <= 1 && p.y.abs_diff(q.y) <= 1);
                assert!(p.radius.abs_diff(q.radius) <= 1);
            }
        }
        // Coverage equals the exact union of accepted disks.
        let mut expect = Mask::new(axis.width, axis.height);
        let disks = DiskTable::new(res.volume.r_max);
        for p in axis.points() {
            for (dx, dy) in disks.get(p.radius).offsets() {
                let (nx, ny) = (p.x as i64 + dx as i64, p.y as i64 + dy as i64);
                if expect.contains(nx, ny) {
                    expect.set(nx as usize, ny as usize, true);
                }
            }
        }
        assert_eq!(expect, *axis.coverage());
        // Cost bound on non-relaxed points; flags match topology.
        for p in axis.points() {
            if !p.flags.relaxed {
                let ctol = axis.branch_ctol(p.branch as usize);
                assert!(p.cost <= ctol + 1e-15, "cost {} over ceiling {ctol}", p.cost);
            }
            assert_eq!(p.cost, res.volume.cost(p.x, p.y, p.radius));
        }
    }
}
