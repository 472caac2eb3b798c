//! Skeleton benchmark scoring.
//!
//! Predictions are matched one-to-one to ground-truth pixels within a
//! Euclidean tolerance (maximum-cardinality bipartite matching, with a
//! greedy nearest-first fallback above a configurable edge cap). On top of
//! the matcher sit the standard multi-annotation protocol, the
//! best-single-annotation protocol, and ligature-weighted recall.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::Mask;

/// One ground-truth annotation: a skeleton mask and, optionally, the radius
/// map that enables ligature weighting.
#[derive(Debug, Clone)]
pub struct Annotation {
    pub mask: Mask,
    pub radius: Option<Vec<u32>>,
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub tol: f64,
    pub pred_pixels: Vec<(usize, usize)>,
    pub gt_pixels: Vec<(usize, usize)>,
    /// Per pred pixel, the matched gt pixel index.
    pub pred_match: Vec<Option<usize>>,
    /// Per gt pixel, the matched pred pixel index.
    pub gt_match: Vec<Option<usize>>,
    pub used_greedy_fallback: bool,
}

impl MatchResult {
    pub fn matched_pairs(&self) -> usize {
        self.pred_match.iter().filter(|m| m.is_some()).count()
    }

    pub fn precision(&self) -> f64 {
        ratio(self.matched_pairs(), self.pred_pixels.len())
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched_pairs(), self.gt_pixels.len())
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Candidate pairs within tolerance, via grid buckets over the gt pixels.
fn build_edges(
    pred: &[(usize, usize)],
    gt: &[(usize, usize)],
    tol: f64,
) -> Vec<Vec<(usize, i64)>> {
    let cell = (tol.ceil() as usize).max(1);
    let mut buckets: std::collections::HashMap<(usize, usize), Vec<usize>> =
        std::collections::HashMap::new();
    for (j, &(x, y)) in gt.iter().enumerate() {
        buckets.entry((x / cell, y / cell)).or_default().push(j);
    }
    let tol2 = (tol * tol * (1.0 + 1e-12)).floor() as i64;
    let tol2 = if tol.fract() == 0.0 {
        (tol as i64) * (tol as i64)
    } else {
        tol2
    };
    pred.iter()
        .map(|&(px, py)| {
            let (cx, cy) = (px / cell, py / cell);
            let mut adj = Vec::new();
            for by in cy.saturating_sub(1)..=cy + 1 {
                for bx in cx.saturating_sub(1)..=cx + 1 {
                    if let Some(list) = buckets.get(&(bx, by)) {
                        for &j in list {
                            let (gx, gy) = gt[j];
                            let d2 = (px as i64 - gx as i64).pow(2) + (py as i64 - gy as i64).pow(2);
                            if d2 <= tol2 {
                                adj.push((j, d2));
                            }
                        }
                    }
                }
            }
            adj.sort_unstable();
            adj
        })
        .collect()
}

/// Hopcroft–Karp maximum-cardinality matching.
fn hopcroft_karp(adj: &[Vec<(usize, i64)>], n_right: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let n_left = adj.len();
    const NIL: usize = usize::MAX;
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0u32; n_left];

    loop {
        // BFS layering from free left vertices.
        let mut queue = std::collections::VecDeque::new();
        const INF: u32 = u32::MAX;
        let mut found_augmenting = false;
        for u in 0..n_left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = INF;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found_augmenting = true;
                } else if dist[w] == INF {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found_augmenting {
            break;
        }
        // DFS augmenting along the layering.
        fn try_augment(
            u: usize,
            adj: &[Vec<(usize, i64)>],
            match_l: &mut [usize],
            match_r: &mut [usize],
            dist: &mut [u32],
        ) -> bool {
            for i in 0..adj[u].len() {
                let v = adj[u][i].0;
                let w = match_r[v];
                let ok = if w == usize::MAX {
                    true
                } else if dist[w] == dist[u] + 1 {
                    try_augment(w, adj, match_l, match_r, dist)
                } else {
                    false
                };
                if ok {
                    match_l[u] = v;
                    match_r[v] = u;
                    return true;
                }
            }
            dist[u] = u32::MAX;
            false
        }
        for u in 0..n_left {
            if match_l[u] == NIL {
                try_augment(u, adj, &mut match_l, &mut match_r, &mut dist);
            }
        }
    }
    (
        match_l
            .into_iter()
            .map(|v| if v == NIL { None } else { Some(v) })
            .collect(),
        match_r
            .into_iter()
            .map(|v| if v == NIL { None } else { Some(v) })
            .collect(),
    )
}

/// One-to-one matching of skeleton pixels within `tol` pixels.
///
/// Uses exact maximum-cardinality matching; above `edge_cap` candidate
/// pairs it falls back to greedy nearest-first matching and flags the
/// result.
pub fn match_skeletons_capped(
    pred: &Mask,
    gt: &Mask,
    tol: f64,
    edge_cap: u64,
) -> Result<MatchResult> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::DimensionMismatch(
            pred.width,
            pred.height,
            gt.width,
            gt.height,
        ));
    }
    if tol < 0.0 {
        return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
    }
    let pred_pixels = pred.pixels();
    let gt_pixels = gt.pixels();
    let adj = build_edges(&pred_pixels, &gt_pixels, tol);
    let edges: u64 = adj.iter().map(|a| a.len() as u64).sum();

    let (pred_match, gt_match, fallback) = if edges > edge_cap {
        // Greedy nearest-first: stable order by (distance, pred, gt).
        let mut all: Vec<(i64, usize, usize)> = Vec::with_capacity(edges as usize);
        for (i, a) in adj.iter().enumerate() {
            for &(j, d2) in a {
                all.push((d2, i, j));
            }
        }
        all.sort_unstable();
        let mut pm = vec![None; pred_pixels.len()];
        let mut gm = vec![None; gt_pixels.len()];
        for (_, i, j) in all {
            if pm[i].is_none() && gm[j].is_none() {
                pm[i] = Some(j);
                gm[j] = Some(i);
            }
        }
        (pm, gm, true)
    } else {
        let (pm, gm) = hopcroft_karp(&adj, gt_pixels.len());
        (pm, gm, false)
    };

    Ok(MatchResult {
        tol,
        pred_pixels,
        gt_pixels,
        pred_match,
        gt_match,
        used_greedy_fallback: fallback,
    })
}

pub fn match_skeletons(pred: &Mask, gt: &Mask, tol: f64) -> Result<MatchResult> {
    match_skeletons_capped(pred, gt, tol, 20_000_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Standard,
    Single,
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Protocol::Standard),
            "single" => Ok(Protocol::Single),
            other => Err(Error::InvalidParameter(format!(
                "unknown protocol '{other}' (expected standard|single)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnotationScore {
    pub index: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub pred_total: usize,
    pub gt_total: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalResult {
    pub protocol: Protocol,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Pooled counts backing the ratios, for cross-image aggregation.
    pub pred_matched: usize,
    pub pred_total: usize,
    pub gt_matched: usize,
    pub gt_total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_f1: Option<f64>,
    /// Weighted-recall numerator and denominator for aggregation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_gt_matched: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_gt_total: Option<f64>,
    /// Annotation picked by the single-annotation protocol.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_annotation: Option<usize>,
    pub per_annotation: Vec<AnnotationScore>,
}

fn annotation_scores(pred: &Mask, matches: &[MatchResult]) -> Vec<AnnotationScore> {
    matches
        .iter()
        .enumerate()
        .map(|(i, m)| AnnotationScore {
            index: i,
            precision: m.precision(),
            recall: m.recall(),
            f1: m.f1(),
            matched: m.matched_pairs(),
            pred_total: pred.count(),
            gt_total: m.gt_pixels.len(),
        })
        .collect()
}

fn run_matches(
    pred: &Mask,
    annotations: &[Annotation],
    tol: f64,
    edge_cap: u64,
) -> Result<Vec<MatchResult>> {
    annotations
        .iter()
        .map(|a| match_skeletons_capped(pred, &a.mask, tol, edge_cap))
        .collect()
}

/// Standard multi-annotation protocol: a prediction pixel is correct when it
/// matches any annotation; recall pools matched ground truth over all
/// annotations.
pub fn score_standard(pred: &Mask, annotations: &[Annotation], tol: f64) -> Result<EvalResult> {
    score_standard_capped(pred, annotations, tol, 20_000_000)
}

pub fn score_standard_capped(
    pred: &Mask,
    annotations: &[Annotation],
    tol: f64,
    edge_cap: u64,
) -> Result<EvalResult> {
    require_annotations(annotations)?;
    let matches = run_matches(pred, annotations, tol, edge_cap)?;
    Ok(standard_from_matches(pred, &matches))
}

fn require_annotations(annotations: &[Annotation]) -> Result<()> {
    if annotations.is_empty() {
        Err(Error::InvalidParameter(
            "at least one annotation required".into(),
        ))
    } else {
        Ok(())
    }
}

fn standard_from_matches(pred: &Mask, matches: &[MatchResult]) -> EvalResult {
    let pred_total = pred.count();
    let mut pred_matched_any = vec![false; pred_total];
    let mut gt_matched = 0usize;
    let mut gt_total = 0usize;
    for m in matches {
        for (i, pm) in m.pred_match.iter().enumerate() {
            if pm.is_some() {
                pred_matched_any[i] = true;
            }
        }
        gt_matched += m.matched_pairs();
        gt_total += m.gt_pixels.len();
    }
    let pred_matched = pred_matched_any.iter().filter(|&&b| b).count();
    let precision = ratio(pred_matched, pred_total);
    let recall = ratio(gt_matched, gt_total);
    EvalResult {
        protocol: Protocol::Standard,
        precision,
        recall,
        f1: f1(precision, recall),
        pred_matched,
        pred_total,
        gt_matched,
        gt_total,
        weighted_precision: None,
        weighted_recall: None,
        weighted_f1: None,
        weighted_gt_matched: None,
        weighted_gt_total: None,
        chosen_annotation: None,
        per_annotation: annotation_scores(pred, matches),
    }
}

/// Best-single-annotation protocol: evaluate against each annotation
/// independently and report the one with the maximum F-score.
pub fn score_single_annotation(
    pred: &Mask,
    annotations: &[Annotation],
    tol: f64,
) -> Result<EvalResult> {
    score_single_annotation_capped(pred, annotations, tol, 20_000_000)
}

pub fn score_single_annotation_capped(
    pred: &Mask,
    annotations: &[Annotation],
    tol: f64,
    edge_cap: u64,
) -> Result<EvalResult> {
    require_annotations(annotations)?;
    let matches = run_matches(pred, annotations, tol, edge_cap)?;
    let scores = annotation_scores(pred, &matches);
    let best = scores
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.f1.total_cmp(&b.f1).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("non-empty annotations");
    Ok(EvalResult {
        protocol: Protocol::Single,
        precision: scores[best].precision,
        recall: scores[best].recall,
        f1: scores[best].f1,
        pred_matched: scores[best].matched,
        pred_total: scores[best].pred_total,
        gt_matched: scores[best].matched,
        gt_total: scores[best].gt_total,
        weighted_precision: None,
        weighted_recall: None,
        weighted_f1: None,
        weighted_gt_matched: None,
        weighted_gt_total: None,
        chosen_annotation: Some(best),
        per_annotation: scores,
    })
}

/// Ligature weights for one annotation: the fraction of each skeleton
/// pixel's disk area not covered by the disks of its skeleton neighbors
/// within graph distance `horizon`.
pub fn ligature_weights(skeleton: &Mask, radius: &[u32], horizon: u32) -> Vec<f64> {
    let (w, h) = (skeleton.width, skeleton.height);
    debug_assert_eq!(radius.len(), w * h);
    let mut weights = vec![0.0f64; w * h];
    for (x, y) in skeleton.pixels() {
        let rp = radius[y * w + x] as i64;
        // Skeleton neighbors within graph distance `horizon` (8-adjacency).
        let mut seen = std::collections::HashMap::new();
        seen.insert((x as i64, y as i64), 0u32);
        let mut frontier = vec![(x as i64, y as i64)];
        let mut neighbors: Vec<(i64, i64, i64)> = Vec::new();
        for depth in 1..=horizon {
            let mut next = Vec::new();
            for &(cx, cy) in &frontier {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (cx + dx, cy + dy);
                        if !skeleton.get_checked(nx, ny)
                            || seen.contains_key(&(nx, ny))
                        {
                            continue;
                        }
                        seen.insert((nx, ny), depth);
                        let rn = radius[ny as usize * w + nx as usize] as i64;
                        neighbors.push((nx, ny, rn));
                        next.push((nx, ny));
                    }
                }
            }
            frontier = next;
        }
        if rp == 0 {
            weights[y * w + x] = 0.0;
            continue;
        }
        let mut area = 0usize;
        let mut unique = 0usize;
        for dy in -rp..=rp {
            for dx in -rp..=rp {
                if dx * dx + dy * dy > rp * rp {
                    continue;
                }
                area += 1;
                let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                let covered = neighbors.iter().any(|&(nx, ny, rn)| {
                    let (ex, ey) = (qx - nx, qy - ny);
                    ex * ex + ey * ey <= rn * rn
                });
                if !covered {
                    unique += 1;
                }
            }
        }
        weights[y * w + x] = (unique as f64 / area as f64).clamp(0.0, 1.0);
    }
    weights
}

/// Ligature-weighted scoring: recall weighs each ground-truth pixel by its
/// weight; precision stays unweighted unless `weighted_precision` is set.
pub fn score_weighted(
    pred: &Mask,
    annotations: &[Annotation],
    weights: &[Vec<f64>],
    tol: f64,
    protocol: Protocol,
    weighted_precision: bool,
) -> Result<EvalResult> {
    score_weighted_capped(
        pred,
        annotations,
        weights,
        tol,
        protocol,
        weighted_precision,
        20_000_000,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn score_weighted_capped(
    pred: &Mask,
    annotations: &[Annotation],
    weights: &[Vec<f64>],
    tol: f64,
    protocol: Protocol,
    weighted_precision: bool,
    edge_cap: u64,
) -> Result<EvalResult> {
    require_annotations(annotations)?;
    if weights.len() != annotations.len() {
        return Err(Error::InvalidParameter(
            "weights must align with annotations".into(),
        ));
    }
    let matches = run_matches(pred, annotations, tol, edge_cap)?;
    let w = pred.width;

    // Per-annotation weighted recall terms.
    let mut wr_matched = vec![0.0f64; annotations.len()];
    let mut wr_total = vec![0.0f64; annotations.len()];
    for (i, m) in matches.iter().enumerate() {
        for (j, &(gx, gy)) in m.gt_pixels.iter().enumerate() {
            let wt = weights[i][gy * w + gx];
            wr_total[i] += wt;
            if m.gt_match[j].is_some() {
                wr_matched[i] += wt;
            }
        }
    }
    let wratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };

    // Optional weighted precision: each matched pred pixel contributes the
    // weight of its best matched gt pixel across annotations.
    let wprec = if weighted_precision {
        let pred_total = pred.count();
        let mut per_pred = vec![0.0f64; pred_total];
        for (i, m) in matches.iter().enumerate() {
            for (pi, pm) in m.pred_match.iter().enumerate() {
                if let Some(j) = pm {
                    let (gx, gy) = m.gt_pixels[*j];
                    per_pred[pi] = per_pred[pi].max(weights[i][gy * w + gx]);
                }
            }
        }
        Some(wratio(per_pred.iter().sum(), pred_total as f64))
    } else {
        None
    };

    match protocol {
        Protocol::Standard => {
            let mut base = standard_from_matches(pred, &matches);
            let (num, den) = (wr_matched.iter().sum(), wr_total.iter().sum());
            let wr = wratio(num, den);
            let p = wprec.unwrap_or(base.precision);
            base.weighted_recall = Some(wr);
            base.weighted_precision = wprec;
            base.weighted_f1 = Some(f1(p, wr));
            base.weighted_gt_matched = Some(num);
            base.weighted_gt_total = Some(den);
            Ok(base)
        }
        Protocol::Single => {
            let mut base = score_single_annotation_capped(pred, annotations, tol, edge_cap)?;
            let chosen = base.chosen_annotation.expect("single protocol chooses");
            let wr = wratio(wr_matched[chosen], wr_total[chosen]);
            let p = wprec.unwrap_or(base.precision);
            base.weighted_recall = Some(wr);
            base.weighted_precision = wprec;
            base.weighted_f1 = Some(f1(p, wr));
            base.weighted_gt_matched = Some(wr_matched[chosen]);
            base.weighted_gt_total = Some(wr_total[chosen]);
            Ok(base)
        }
    }
}

/// Load annotations from the per-image ground-truth layout:
/// `annotation_<k>.png` plus optional `annotation_<k>_radius.png`.
pub fn load_ground_truth(dir: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let dir = dir.as_ref();
    let mut indexed: Vec<(usize, std::path::PathBuf)> = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name
            .strip_prefix("annotation_")
            .and_then(|s| s.strip_suffix(".png"))
        {
            if !stem.ends_with("_radius") {
                if let Ok(k) = stem.parse::<usize>() {
                    indexed.push((k, entry.path()));
                }
            }
        }
    }
    indexed.sort();
    let mut out = Vec::new();
    for (k, path) in indexed {
        let mask = load_mask(&path)?;
        let radius_path = dir.join(format!("annotation_{k}_radius.png"));
        let radius = if radius_path.exists() {
            Some(load_radius_map(&radius_path, mask.width, mask.height)?)
        } else {
            None
        };
        out.push(Annotation { mask, radius });
    }
    Ok(out)
}

/// Read an 8-bit mask PNG (any nonzero pixel is foreground).
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let gray = img.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    Ok(Mask::from_fn(w, h, |x, y| {
        gray.get_pixel(x as u32, y as u32).0[0] != 0
    }))
}

/// Read a 16-bit radius map PNG.
pub fn load_radius_map(path: impl AsRef<Path>, width: usize, height: usize) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let gray = img.to_luma16();
    if gray.width() as usize != width || gray.height() as usize != height {
        return Err(Error::DimensionMismatch(
            gray.width() as usize,
            gray.height() as usize,
            width,
            height,
        ));
    }
    Ok(gray.pixels().map(|p| p.0[0] as u32).collect())
}
