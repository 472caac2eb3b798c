//! Synthetic fixtures with analytically known geometry, and a brute-force
//! medial-axis oracle for binary masks.
//!
//! The oracle keeps digital-geometry artifacts (corner spurs and the like);
//! comparisons against extracted axes are expected to use tolerant matching.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgproc::RgbImage;
use crate::mask::Mask;

/// A single drawable region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Rect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
    },
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
    /// Horizontal wedge from `(x0, y)` to `(x1, y)` with linearly varying
    /// half-width.
    Wedge {
        x0: f64,
        y: f64,
        x1: f64,
        half_w0: f64,
        half_w1: f64,
    },
    Plus {
        cx: f64,
        cy: f64,
        arm: f64,
        thickness: f64,
    },
    /// Two disks joined by a bar around the center segment.
    Dumbbell {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        r: f64,
        bar_half: f64,
    },
}

impl Primitive {
    /// Pixel-center membership test.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        match *self {
            Primitive::Rect { x, y, w, h } => px >= x && px < x + w && py >= y && py < y + h,
            Primitive::Disk { cx, cy, r } => {
                let (dx, dy) = (px - cx, py - cy);
                dx * dx + dy * dy <= r * r
            }
            Primitive::Wedge {
                x0,
                y,
                x1,
                half_w0,
                half_w1,
            } => {
                if px < x0 || px > x1 {
                    return false;
                }
                let t = if x1 > x0 { (px - x0) / (x1 - x0) } else { 0.0 };
                (py - y).abs() <= half_w0 + t * (half_w1 - half_w0)
            }
            Primitive::Plus {
                cx,
                cy,
                arm,
                thickness,
            } => {
                let (ax, ay) = ((px - cx).abs(), (py - cy).abs());
                let ht = thickness / 2.0;
                (ax <= ht && ay <= arm) || (ay <= ht && ax <= arm)
            }
            Primitive::Dumbbell {
                x0,
                y0,
                x1,
                y1,
                r,
                bar_half,
            } => {
                let in_disk = |cx: f64, cy: f64| {
                    let (dx, dy) = (px - cx, py - cy);
                    dx * dx + dy * dy <= r * r
                };
                if in_disk(x0, y0) || in_disk(x1, y1) {
                    return true;
                }
                // Distance from (px, py) to the center segment.
                let (sx, sy) = (x1 - x0, y1 - y0);
                let len2 = sx * sx + sy * sy;
                let t = if len2 > 0.0 {
                    (((px - x0) * sx + (py - y0) * sy) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let (qx, qy) = (x0 + t * sx, y0 + t * sy);
                let (dx, dy) = (px - qx, py - qy);
                dx * dx + dy * dy <= bar_half * bar_half
            }
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Primitive::Rect { x, y, w, h } => (x, y, x + w - 1.0, y + h - 1.0),
            Primitive::Disk { cx, cy, r } => (cx - r, cy - r, cx + r, cy + r),
            Primitive::Wedge {
                x0,
                y,
                x1,
                half_w0,
                half_w1,
            } => {
                let hw = half_w0.max(half_w1);
                (x0, y - hw, x1, y + hw)
            }
            Primitive::Plus {
                cx,
                cy,
                arm,
                thickness,
            } => {
                let e = arm.max(thickness / 2.0);
                (cx - e, cy - e, cx + e, cy + e)
            }
            Primitive::Dumbbell {
                x0,
                y0,
                x1,
                y1,
                r,
                bar_half,
            } => {
                let e = r.max(bar_half);
                (
                    x0.min(x1) - e,
                    y0.min(y1) - e,
                    x0.max(x1) + e,
                    y0.max(y1) + e,
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShapeSpec {
    pub width: usize,
    pub height: usize,
    pub background: [f64; 3],
    pub primitives: Vec<(Primitive, [f64; 3])>,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl ShapeSpec {
    pub fn new(width: usize, height: usize, background: [f64; 3]) -> Self {
        ShapeSpec {
            width,
            height,
            background,
            primitives: Vec::new(),
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    pub fn with(mut self, p: Primitive, color: [f64; 3]) -> Self {
        self.primitives.push((p, color));
        self
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.noise_seed = seed;
        self
    }
}

/// Parse the one-primitive-per-line fixture format.
///
/// ```text
/// canvas 200 150
/// background 0.15 0.25 0.8
/// rect 70 68 60 14 0.9 0.75 0.1
/// disk 100 75 10 0.9 0.1 0.1
/// wedge 40 75 160 12 2 0.2 0.8 0.3
/// plus 100 75 24 7 0.8 0.2 0.7
/// dumbbell 60 75 140 75 9 2.5 0.9 0.8 0.2
/// noise 0.02 1234
/// ```
pub fn parse_spec(text: &str) -> Result<ShapeSpec> {
    let mut spec: Option<ShapeSpec> = None;
    let mut pending: Vec<(usize, Primitive, [f64; 3])> = Vec::new();
    let mut noise = (0.0f64, 0u64);
    let mut background = [0.5f64; 3];

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap();
        let nums: Vec<f64> = parts
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::SpecParse {
                    line: lineno,
                    msg: format!("bad number '{t}'"),
                })
            })
            .collect::<Result<_>>()?;
        let need = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::SpecParse {
                    line: lineno,
                    msg: format!("'{word}' expects {n} numbers, got {}", nums.len()),
                })
            }
        };
        match word {
            "canvas" => {
                need(2)?;
                if nums[0] < 1.0 || nums[1] < 1.0 {
                    return Err(Error::SpecParse {
                        line: lineno,
                        msg: "canvas must be at least 1x1".into(),
                    });
                }
                spec = Some(ShapeSpec::new(nums[0] as usize, nums[1] as usize, background));
            }
            "background" => {
                need(3)?;
                background = [nums[0], nums[1], nums[2]];
                if let Some(s) = spec.as_mut() {
                    s.background = background;
                }
            }
            "rect" => {
                need(7)?;
                pending.push((
                    lineno,
                    Primitive::Rect {
                        x: nums[0],
                        y: nums[1],
                        w: nums[2],
                        h: nums[3],
                    },
                    [nums[4], nums[5], nums[6]],
                ));
            }
            "disk" => {
                need(6)?;
                pending.push((
                    lineno,
                    Primitive::Disk {
                        cx: nums[0],
                        cy: nums[1],
                        r: nums[2],
                    },
                    [nums[3], nums[4], nums[5]],
                ));
            }
            "wedge" => {
                need(8)?;
                pending.push((
                    lineno,
                    Primitive::Wedge {
                        x0: nums[0],
                        y: nums[1],
                        x1: nums[2],
                        half_w0: nums[3],
                        half_w1: nums[4],
                    },
                    [nums[5], nums[6], nums[7]],
                ));
            }
            "plus" => {
                need(7)?;
                pending.push((
                    lineno,
                    Primitive::Plus {
                        cx: nums[0],
                        cy: nums[1],
                        arm: nums[2],
                        thickness: nums[3],
                    },
                    [nums[4], nums[5], nums[6]],
                ));
            }
            "dumbbell" => {
                need(9)?;
                pending.push((
                    lineno,
                    Primitive::Dumbbell {
                        x0: nums[0],
                        y0: nums[1],
                        x1: nums[2],
                        y1: nums[3],
                        r: nums[4],
                        bar_half: nums[5],
                    },
                    [nums[6], nums[7], nums[8]],
                ));
            }
            "noise" => {
                need(2)?;
                noise = (nums[0], nums[1] as u64);
            }
            other => {
                return Err(Error::SpecParse {
                    line: lineno,
                    msg: format!("unknown primitive '{other}'"),
                });
            }
        }
    }

    let mut spec = spec.ok_or(Error::SpecParse {
        line: 0,
        msg: "missing 'canvas W H' line".into(),
    })?;
    for (lineno, prim, color) in pending {
        let (x0, y0, x1, y1) = prim.bounds();
        if x0 < 0.0 || y0 < 0.0 || x1 > spec.width as f64 - 1.0 || y1 > spec.height as f64 - 1.0 {
            return Err(Error::SpecParse {
                line: lineno,
                msg: "primitive out of canvas".into(),
            });
        }
        spec.primitives.push((prim, color));
    }
    spec.noise_sigma = noise.0;
    spec.noise_seed = noise.1;
    Ok(spec)
}

/// Rasterize a spec deterministically. Returns the image and one binary mask
/// per primitive (masks exclude noise).
pub fn render_shapes(spec: &ShapeSpec) -> Result<(RgbImage, Vec<Mask>)> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    for (prim, _) in &spec.primitives {
        let (x0, y0, x1, y1) = prim.bounds();
        if x0 < 0.0 || y0 < 0.0 || x1 > w as f64 - 1.0 || y1 > h as f64 - 1.0 {
            return Err(Error::InvalidParameter("primitive out of canvas".into()));
        }
    }
    let mut img = RgbImage::new(w, h, spec.background);
    let mut masks = Vec::with_capacity(spec.primitives.len());
    for (prim, color) in &spec.primitives {
        let mask = Mask::from_fn(w, h, |x, y| prim.contains(x as f64, y as f64));
        for (x, y) in mask.pixels() {
            img.set_pixel(x, y, *color);
        }
        masks.push(mask);
    }
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
        let clip = 5.0 * spec.noise_sigma;
        for p in img.data.iter_mut() {
            for c in p.iter_mut() {
                // Box-Muller; deviations clipped at five sigma.
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                let d = (n * spec.noise_sigma).clamp(-clip, clip);
                *c = (*c + d).clamp(0.0, 1.0);
            }
        }
    }
    Ok((img, masks))
}

/// Oracle medial axis of a binary mask: maximal-disk centers thinned to
/// 8-connected unit width, with the inscribed radius at each skeleton pixel.
#[derive(Debug, Clone)]
pub struct OracleSkeleton {
    pub skeleton: Mask,
    /// Inscribed radius per pixel; 0 off the skeleton.
    pub radius: Vec<u32>,
}

impl OracleSkeleton {
    pub fn radius_at(&self, x: usize, y: usize) -> u32 {
        self.radius[y * self.skeleton.width + x]
    }

    /// Union of the skeleton's disks as a mask.
    pub fn reconstruction(&self) -> Mask {
        let (w, h) = (self.skeleton.width, self.skeleton.height);
        let mut out = Mask::new(w, h);
        for (x, y) in self.skeleton.pixels() {
            let r = self.radius_at(x, y) as i64;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy <= r * r {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if out.contains(nx, ny) {
                            out.set(nx as usize, ny as usize, true);
                        }
                    }
                }
            }
        }
        out
    }
}

fn isqrt(v: i64) -> i64 {
    if v <= 0 {
        return 0;
    }
    let mut x = (v as f64).sqrt() as i64;
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    while x * x > v {
        x -= 1;
    }
    x
}

/// Exact squared Euclidean distance to the nearest background (or
/// out-of-image) pixel, via the two-pass parabola scan.
fn squared_edt(mask: &Mask) -> Vec<i64> {
    let (w, h) = (mask.width, mask.height);
    const INF: f64 = 1e18;

    fn dt1d(f: &[f64], out: &mut Vec<f64>) {
        let n = f.len();
        out.clear();
        out.resize(n, 0.0);
        let mut v = vec![0usize; n];
        let mut z = vec![0.0f64; n + 1];
        let mut k = 0usize;
        v[0] = 0;
        z[0] = -INF;
        z[1] = INF;
        for q in 1..n {
            loop {
                let p = v[k];
                let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                    / (2.0 * q as f64 - 2.0 * p as f64);
                if s <= z[k] {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                } else {
                    k += 1;
                    v[k] = q;
                    z[k] = s;
                    z[k + 1] = INF;
                    break;
                }
            }
        }
        k = 0;
        for q in 0..n {
            while z[k + 1] < q as f64 {
                k += 1;
            }
            let p = v[k] as f64;
            out[q] = (q as f64 - p) * (q as f64 - p) + f[p as usize];
        }
    }

    // Column pass over the 0/INF indicator, then row pass.
    let mut tmp = vec![0.0f64; w * h];
    let mut col = vec![0.0f64; h];
    let mut colout = Vec::with_capacity(h);
    for x in 0..w {
        for y in 0..h {
            col[y] = if mask.get(x, y) { INF } else { 0.0 };
        }
        dt1d(&col, &mut colout);
        for y in 0..h {
            tmp[y * w + x] = colout[y];
        }
    }
    let mut out = vec![0i64; w * h];
    let mut rowout = Vec::with_capacity(w);
    for y in 0..h {
        dt1d(&tmp[y * w..(y + 1) * w], &mut rowout);
        for x in 0..w {
            // Clamp by the axis-aligned distance to the image border.
            let bx = (x + 1).min(w - x) as i64;
            let by = (y + 1).min(h - y) as i64;
            let border = (bx * bx).min(by * by);
            out[y * w + x] = (rowout[x].round() as i64).min(border);
        }
    }
    out
}

/// Medial radius per mask pixel: the distance-transform value rounded up
/// (`ceil` of the Euclidean distance to the nearest background pixel).
/// Disks of this radius reconstruct the mask fully and reach at most one
/// pixel beyond its boundary.
pub fn inscribed_radii(mask: &Mask) -> Vec<u32> {
    let d2 = squared_edt(mask);
    d2.iter()
        .zip(mask.as_slice())
        .map(|(&d, &m)| if m { (isqrt(d - 1) + 1) as u32 } else { 0 })
        .collect()
}

/// Brute-force medial axis of a binary mask.
///
/// Strictly maximal pixels (those whose inscribed digital disk is contained
/// in no other pixel's inscribed disk) anchor the skeleton; the mask is then
/// eroded around them by deleting simple points in increasing
/// distance-transform order, so the result stays 8-connected and one pixel
/// wide while every deletion keeps the mask fully reconstructible from the
/// remaining disks.
pub fn oracle_mat(mask: &Mask) -> Result<OracleSkeleton> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (w, h) = (mask.width, mask.height);
    let d2 = squared_edt(mask);
    // Conservative inscribed radii for the maximality test; reconstruction
    // radii (ceil of the distance) for coverage and output.
    let radii_in: Vec<i64> = d2
        .iter()
        .zip(mask.as_slice())
        .map(|(&d, &m)| if m { isqrt(d - 1) } else { -1 })
        .collect();
    let radii_out = inscribed_radii(mask);

    let maximal = maximal_pixels(mask, &radii_in);
    // Protect maximal pixels, except where two adjacent ones tie in depth
    // (even-width ribbons yield twin rows; thinning picks one).
    let mut protected = Mask::new(w, h);
    for (x, y) in maximal.pixels() {
        let tie = (-1i64..=1).any(|dy| {
            (-1i64..=1).any(|dx| {
                (dx != 0 || dy != 0)
                    && maximal.get_checked(x as i64 + dx, y as i64 + dy)
                    && mask.contains(x as i64 + dx, y as i64 + dy)
                    && d2[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize]
                        == d2[y * w + x]
            })
        });
        if !tie {
            protected.set(x, y, true);
        }
    }

    let thin = thin_to_skeleton(mask, &protected, &radii_out, &d2);
    let radius = radii_out
        .iter()
        .zip(thin.as_slice())
        .map(|(&r, &s)| if s { r } else { 0 })
        .collect();
    Ok(OracleSkeleton {
        skeleton: thin,
        radius,
    })
}

/// Pixels whose inscribed digital disk is a subset of no other pixel's
/// inscribed disk.
fn maximal_pixels(mask: &Mask, radii_in: &[i64]) -> Mask {
    let (w, h) = (mask.width, mask.height);
    let r_max = *radii_in.iter().max().unwrap();
    let mut out = Mask::new(w, h);
    for y in 0..h {
        'pixel: for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let rp = radii_in[y * w + x];
            // Only disks with strictly larger radius can strictly contain.
            let reach = 2 * r_max;
            let y0 = (y as i64 - reach).max(0);
            let y1 = (y as i64 + reach).min(h as i64 - 1);
            let x0 = (x as i64 - reach).max(0);
            let x1 = (x as i64 + reach).min(w as i64 - 1);
            for qy in y0..=y1 {
                for qx in x0..=x1 {
                    if qx == x as i64 && qy == y as i64 {
                        continue;
                    }
                    let rq = radii_in[qy as usize * w + qx as usize];
                    if rq <= rp {
                        continue;
                    }
                    let (ddx, ddy) = (qx - x as i64, qy - y as i64);
                    let dist2 = ddx * ddx + ddy * ddy;
                    if dist2 > (rq + rp) * (rq + rp) {
                        continue;
                    }
                    if disk_subset(mask, x as i64, y as i64, rp, qx, qy, rq) {
                        continue 'pixel;
                    }
                }
            }
            out.set(x, y, true);
        }
    }
    out
}

/// Whether the mask part of the digital disk at `(px, py, rp)` is a subset
/// of the disk at `(qx, qy, rq)`.
fn disk_subset(mask: &Mask, px: i64, py: i64, rp: i64, qx: i64, qy: i64, rq: i64) -> bool {
    // Continuous containment is sufficient.
    let (dx, dy) = (qx - px, qy - py);
    let d2 = dx * dx + dy * dy;
    if d2 == 0 {
        return rp <= rq;
    }
    let d = (d2 as f64).sqrt();
    if d + rp as f64 <= rq as f64 {
        return true;
    }
    for ody in -rp..=rp {
        for odx in -rp..=rp {
            if odx * odx + ody * ody > rp * rp {
                continue;
            }
            if !mask.get_checked(px + odx, py + ody) {
                continue;
            }
            let (ex, ey) = (px + odx - qx, py + ody - qy);
            if ex * ex + ey * ey > rq * rq {
                return false;
            }
        }
    }
    true
}

/// Erode the mask to a skeleton: delete simple points (crossing number 1)
/// in increasing distance order, never deleting protected pixels and never
/// leaving any mask pixel uncovered by the remaining reconstruction disks.
fn thin_to_skeleton(mask: &Mask, protected: &Mask, radii: &[u32], d2: &[i64]) -> Mask {
    let (w, h) = (mask.width, mask.height);
    let mut cur = mask.clone();

    let disk_cells = |x: usize, y: usize| -> Vec<usize> {
        let r = radii[y * w + x] as i64;
        let mut cells = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy > r * r {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if mask.get_checked(nx, ny) {
                    cells.push(ny as usize * w + nx as usize);
                }
            }
        }
        cells
    };
    // How many remaining skeleton disks cover each mask pixel.
    let mut cover = vec![0u32; w * h];
    for (x, y) in cur.pixels() {
        for c in disk_cells(x, y) {
            cover[c] += 1;
        }
    }

    let mut order: Vec<(i64, usize, usize)> =
        cur.pixels().into_iter().map(|(x, y)| (d2[y * w + x], y, x)).collect();
    order.sort_unstable();

    // Exact 8-simple test: the foreground ring cells form one 8-connected
    // component and some 4-neighbor is background.
    let simple8 = |m: &Mask, x: i64, y: i64| -> bool {
        let mut cells: Vec<(i64, i64)> = Vec::with_capacity(8);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx != 0 || dy != 0) && m.get_checked(x + dx, y + dy) {
                    cells.push((dx, dy));
                }
            }
        }
        if cells.is_empty() {
            return false;
        }
        if [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)]
            .iter()
            .all(|&(dx, dy)| m.get_checked(x + dx, y + dy))
        {
            return false;
        }
        let mut seen = vec![false; cells.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..cells.len() {
                if !seen[j]
                    && (cells[i].0 - cells[j].0).abs() <= 1
                    && (cells[i].1 - cells[j].1).abs() <= 1
                {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    };

    loop {
        let mut changed = false;
        for &(_, y, x) in &order {
            if !cur.get(x, y) || protected.get(x, y) {
                continue;
            }
            if !simple8(&cur, x as i64, y as i64) {
                continue;
            }
            let cells = disk_cells(x, y);
            if cells.iter().any(|&c| cover[c] < 2) {
                continue; // sole provider of some mask pixel
            }
            for c in cells {
                cover[c] -= 1;
            }
            cur.set(x, y, false);
            changed = true;
        }
        if !changed {
            return cur;
        }
    }
}

/// Canonical fixtures used throughout the test suites.
pub mod fixtures {
    use super::*;

    pub const CANVAS_W: usize = 200;
    pub const CANVAS_H: usize = 150;
    // Channel values stay clear of histogram bin edges (multiples of 0.1).
    const BG: [f64; 3] = [0.16, 0.27, 0.83];
    const FG: [f64; 3] = [0.93, 0.72, 0.14];

    /// 60x14 rectangle centered on the canvas.
    pub fn rectangle() -> ShapeSpec {
        ShapeSpec::new(CANVAS_W, CANVAS_H, BG).with(
            Primitive::Rect {
                x: 70.0,
                y: 68.0,
                w: 60.0,
                h: 14.0,
            },
            FG,
        )
    }

    /// Disk of radius 10 centered on the canvas.
    pub fn disk() -> ShapeSpec {
        ShapeSpec::new(CANVAS_W, CANVAS_H, BG).with(
            Primitive::Disk {
                cx: 100.0,
                cy: 75.0,
                r: 10.0,
            },
            FG,
        )
    }

    /// Plus sign with arm length 30 and thickness 7.
    pub fn plus() -> ShapeSpec {
        ShapeSpec::new(CANVAS_W, CANVAS_H, BG).with(
            Primitive::Plus {
                cx: 100.0,
                cy: 75.0,
                arm: 30.0,
                thickness: 7.0,
            },
            FG,
        )
    }

    /// Two radius-8 disks joined by a long bar.
    pub fn dumbbell() -> ShapeSpec {
        ShapeSpec::new(CANVAS_W, CANVAS_H, BG).with(
            Primitive::Dumbbell {
                x0: 55.0,
                y0: 75.0,
                x1: 145.0,
                y1: 75.0,
                r: 8.0,
                bar_half: 3.5,
            },
            FG,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_mask_area() {
        let spec = fixtures::rectangle();
        let (_, masks) = render_shapes(&spec).unwrap();
        assert_eq!(masks[0].count(), 60 * 14);
    }

    #[test]
    fn dumbbell_is_connected() {
        let (_, masks) = render_shapes(&fixtures::dumbbell()).unwrap();
        assert_eq!(masks[0].connected_components(), 1);
    }

    #[test]
    fn noise_is_clipped() {
        let clean = fixtures::rectangle();
        let noisy = fixtures::rectangle().with_noise(0.02, 99);
        let (a, _) = render_shapes(&clean).unwrap();
        let (b, _) = render_shapes(&noisy).unwrap();
        let bound = 5.0 * 0.02 + 1e-12;
        for (pa, pb) in a.data.iter().zip(b.data.iter()) {
            for c in 0..3 {
                assert!((pa[c] - pb[c]).abs() <= bound);
            }
        }
    }

    #[test]
    fn out_of_canvas_primitive_rejected() {
        let spec = ShapeSpec::new(30, 30, [0.0; 3]).with(
            Primitive::Disk {
                cx: 28.0,
                cy: 15.0,
                r: 5.0,
            },
            [1.0; 3],
        );
        assert!(render_shapes(&spec).is_err());
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let text = "\
# fixture
canvas 40 30
background 0.1 0.2 0.3
rect 5 5 10 8 0.9 0.9 0.9
noise 0.01 7
";
        let spec = parse_spec(text).unwrap();
        assert_eq!((spec.width, spec.height), (40, 30));
        assert_eq!(spec.primitives.len(), 1);
        assert_eq!(spec.noise_sigma, 0.01);

        let bad = parse_spec("canvas 40 30\nrect 5 5 10\n");
        match bad {
            Err(Error::SpecParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let oob = parse_spec("canvas 20 20\ndisk 19 10 5 1 1 1\n");
        assert!(matches!(oob, Err(Error::SpecParse { line: 2, .. })));
    }

    #[test]
    fn oracle_disk_is_a_tight_cluster() {
        let mask = Mask::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as f64 - 20.0, y as f64 - 20.0);
            dx * dx + dy * dy <= 100.0
        });
        let sk = oracle_mat(&mask).unwrap();
        let px = sk.skeleton.pixels();
        assert!(!px.is_empty() && px.len() <= 5, "{} pixels", px.len());
        for (x, y) in px {
            let d = ((x as f64 - 20.0).powi(2) + (y as f64 - 20.0).powi(2)).sqrt();
            assert!(d <= 1.5, "skeleton pixel {x},{y} far from center");
        }
    }

    #[test]
    fn oracle_rectangle_has_midline_and_corner_spurs() {
        let mask = Mask::from_fn(80, 34, |x, y| (10..70).contains(&x) && (10..24).contains(&y));
        let sk = oracle_mat(&mask).unwrap();
        // Midline rows are 16/17; count skeleton pixels there.
        let mid: Vec<(usize, usize)> = sk
            .skeleton
            .pixels()
            .into_iter()
            .filter(|&(_, y)| y == 16 || y == 17)
            .collect();
        assert!(mid.len() >= 40, "midline too short: {}", mid.len());
        // Corner diagonals reach toward all four corners.
        let px = sk.skeleton.pixels();
        for (cx, cy) in [(10, 10), (69, 10), (10, 23), (69, 23)] {
            let near = px.iter().any(|&(x, y)| {
                (x as i64 - cx as i64).abs() <= 4 && (y as i64 - cy as i64).abs() <= 4
            });
            assert!(near, "no spur near corner {cx},{cy}");
        }
    }

    #[test]
    fn oracle_plus_has_a_junction_and_four_arms() {
        let mask = Mask::from_fn(70, 70, |x, y| {
            Primitive::Plus {
                cx: 35.0,
                cy: 35.0,
                arm: 22.0,
                thickness: 7.0,
            }
            .contains(x as f64, y as f64)
        });
        let sk = oracle_mat(&mask).unwrap();
        assert_eq!(sk.skeleton.connected_components(), 1);
        let px = sk.skeleton.pixels();
        let degree = |x: usize, y: usize| {
            let mut d = 0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx != 0 || dy != 0)
                        && sk.skeleton.get_checked(x as i64 + dx, y as i64 + dy)
                    {
                        d += 1;
                    }
                }
            }
            d
        };
        // A junction near the center, and branches reaching into all four
        // arms (flat arm ends keep their small corner spurs).
        let junction_near_center = px
            .iter()
            .any(|&(x, y)| degree(x, y) >= 3 && x.abs_diff(35) <= 2 && y.abs_diff(35) <= 2);
        assert!(junction_near_center, "no junction near the center");
        for (tx, ty) in [(13, 35), (57, 35), (35, 13), (35, 57)] {
            let reached = px
                .iter()
                .any(|&(x, y)| x.abs_diff(tx) <= 4 && y.abs_diff(ty) <= 4);
            assert!(reached, "no branch reaches arm tip {tx},{ty}");
        }
    }

    #[test]
    fn oracle_reconstruction_covers_mask() {
        for spec in [
            fixtures::rectangle(),
            fixtures::disk(),
            fixtures::plus(),
            fixtures::dumbbell(),
        ] {
            let (_, masks) = render_shapes(&spec).unwrap();
            let sk = oracle_mat(&masks[0]).unwrap();
            let rec = sk.reconstruction();
            let total = masks[0].count();
            let covered = masks[0]
                .pixels()
                .into_iter()
                .filter(|&(x, y)| rec.get(x, y))
                .count();
            assert!(
                covered as f64 >= 0.95 * total as f64,
                "coverage {covered}/{total}"
            );
            // Reconstruction never escapes past the one-pixel boundary band.
            for (x, y) in rec.pixels() {
                if masks[0].get(x, y) {
                    continue;
                }
                let near_mask = (-1i64..=1).any(|dy| {
                    (-1i64..=1).any(|dx| masks[0].get_checked(x as i64 + dx, y as i64 + dy))
                });
                assert!(near_mask, "disk escaped past the band at {x},{y}");
            }
        }
    }

    #[test]
    fn oracle_invariant_under_translation_and_rotation() {
        let base = Mask::from_fn(50, 40, |x, y| (8..30).contains(&x) && (12..22).contains(&y));
        let sk = oracle_mat(&base).unwrap();

        let shifted = Mask::from_fn(50, 40, |x, y| {
            x >= 5 && y >= 9 && base.get_checked(x as i64 - 5, y as i64 - 9)
        });
        let sk_shift = oracle_mat(&shifted).unwrap();
        let expect: std::collections::HashSet<_> = sk
            .skeleton
            .pixels()
            .into_iter()
            .map(|(x, y)| (x + 5, y + 9))
            .collect();
        let got: std::collections::HashSet<_> = sk_shift.skeleton.pixels().into_iter().collect();
        assert_eq!(expect, got);

        // 90-degree rotation: (x, y) -> (h - 1 - y, x) into a 40x50 canvas.
        // The maximal-disk set rotates exactly; thinning may wobble by one
        // pixel because its raster order is not rotation-symmetric.
        let rotated = Mask::from_fn(40, 50, |x, y| base.get_checked(y as i64, (40 - 1 - x) as i64));
        let sk_rot = oracle_mat(&rotated).unwrap();
        let expect_rot: Vec<(i64, i64)> = sk
            .skeleton
            .pixels()
            .into_iter()
            .map(|(x, y)| (40 - 1 - y as i64, x as i64))
            .collect();
        let got_rot: Vec<(i64, i64)> = sk_rot
            .skeleton
            .pixels()
            .into_iter()
            .map(|(x, y)| (x as i64, y as i64))
            .collect();
        let within_one = |set: &[(i64, i64)], (px, py): (i64, i64)| {
            set.iter()
                .any(|&(qx, qy)| (px - qx).abs() <= 1 && (py - qy).abs() <= 1)
        };
        for &p in &expect_rot {
            assert!(within_one(&got_rot, p), "missing rotated pixel {p:?}");
        }
        for &p in &got_rot {
            assert!(within_one(&expect_rot, p), "extra rotated pixel {p:?}");
        }
    }
}
