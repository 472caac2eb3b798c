//! Artifact writers: PNG masks and maps, overlays, JSON, atomic file writes.

use std::io::Write;
use std::path::Path;

use asg::config::RunConfig;
use asg::cost::CostVolume;
use asg::growth::Extraction;
use asg::imgproc::RgbImage;
use asg::mask::Mask;
use asg::shock::{Seed, ShockType};

/// Write via a temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().unwrap_or_default().to_string_lossy()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn encode_png(width: usize, height: usize, data: Vec<u8>, color: image::ColorType) -> Vec<u8> {
    let mut out = Vec::new();
    let enc = image::codecs::png::PngEncoder::new(&mut out);
    image::ImageEncoder::write_image(enc, &data, width as u32, height as u32, color.into())
        .expect("in-memory png encode");
    out
}

pub fn save_mask_png(path: &Path, mask: &Mask) -> std::io::Result<()> {
    let data: Vec<u8> = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 }).collect();
    atomic_write(path, &encode_png(mask.width, mask.height, data, image::ColorType::L8))
}

pub fn save_radius_png(path: &Path, radius: &[u32], width: usize, height: usize) -> std::io::Result<()> {
    let mut data = Vec::with_capacity(radius.len() * 2);
    for &r in radius {
        let v = r.min(u16::MAX as u32) as u16;
        data.extend_from_slice(&v.to_be_bytes());
    }
    atomic_write(path, &encode_png(width, height, data, image::ColorType::L16))
}

pub fn save_rgb_png(path: &Path, img: &RgbImage) -> std::io::Result<()> {
    let mut data = Vec::with_capacity(img.data.len() * 3);
    for p in &img.data {
        for c in 0..3 {
            data.push((p[c].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    atomic_write(path, &encode_png(img.width, img.height, data, image::ColorType::Rgb8))
}

pub fn write_volume(path: &Path, vol: &CostVolume) -> std::io::Result<()> {
    let mut buf = Vec::new();
    vol.write_binary(&mut buf)?;
    atomic_write(path, &buf)
}

pub fn write_seeds(path: &Path, seeds: &[Seed]) -> std::io::Result<()> {
    let mut buf = Vec::new();
    for s in seeds {
        let t = match s.shock_type {
            ShockType::Type3 => 3,
            ShockType::Type4 => 4,
            ShockType::Type2 => 2,
            ShockType::Type1 => 1,
        };
        writeln!(buf, "{} {} {} {} {}", s.x, s.y, s.radius, s.cost, t)?;
    }
    atomic_write(path, &buf)
}

/// Axis in red over the input; seeds and junctions in yellow; optionally the
/// coverage contour in blue.
pub fn render_overlay(img: &RgbImage, result: &Extraction, contour: bool) -> RgbImage {
    let mut out = img.clone();
    if contour {
        let cov = result.axis.coverage();
        for y in 0..img.height {
            for x in 0..img.width {
                if !cov.get(x, y) {
                    continue;
                }
                let mut boundary = false;
                'scan: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if !cov.get_checked(x as i64 + dx, y as i64 + dy) {
                            boundary = true;
                            break 'scan;
                        }
                    }
                }
                if boundary {
                    out.set_pixel(x, y, [0.0, 0.0, 1.0]);
                }
            }
        }
    }
    for p in result.axis.points() {
        out.set_pixel(p.x, p.y, [1.0, 0.0, 0.0]);
    }
    for p in result.axis.points() {
        if p.flags.seed_origin || p.flags.junction {
            out.set_pixel(p.x, p.y, [1.0, 1.0, 0.0]);
        }
    }
    out
}

pub fn write_extraction(
    out_dir: &Path,
    img: &RgbImage,
    result: &Extraction,
    cfg: &RunConfig,
    contour: bool,
) -> std::io::Result<()> {
    let axis = &result.axis;
    save_mask_png(&out_dir.join("skeleton.png"), &axis.skeleton_mask())?;
    save_radius_png(
        &out_dir.join("radius.png"),
        &axis.radius_map(),
        axis.width,
        axis.height,
    )?;
    save_rgb_png(&out_dir.join("overlay.png"), &render_overlay(img, result, contour))?;

    let branches: Vec<Vec<&asg::growth::MedialPoint>> = (0..axis.branch_count())
        .map(|b| {
            axis.branch(b)
                .iter()
                .map(|&i| &axis.points()[i as usize])
                .collect()
        })
        .collect();
    let branches_json = serde_json::json!({
        "width": axis.width,
        "height": axis.height,
        "config": config_echo(cfg),
        "branches": branches,
    });
    atomic_write(
        &out_dir.join("branches.json"),
        serde_json::to_string_pretty(&branches_json)?.as_bytes(),
    )?;

    let counters_json = serde_json::json!({
        "width": axis.width,
        "height": axis.height,
        "scales": [result.volume.r_min, result.volume.r_max],
        "requested_r_max": result.volume.requested_r_max,
        "cost_evaluations": result.volume.evaluations,
        "exhaustive_slots": result.volume.exhaustive_slots(),
        "counters": axis.counters,
        "points": axis.len(),
        "branches": axis.branch_count(),
        "timings_s": {
            "proposal_generation": result.timings.proposal_generation,
            "seed_growth": result.timings.seed_growth,
            "end_point_growth": result.timings.end_point_growth,
            "other": result.timings.other,
            "total": result.timings.total(),
        },
        "config": config_echo(cfg),
    });
    atomic_write(
        &out_dir.join("counters.json"),
        serde_json::to_string_pretty(&counters_json)?.as_bytes(),
    )?;
    Ok(())
}

/// The resolved configuration as a flat string map (exactly the config-file
/// keys and values).
fn config_echo(cfg: &RunConfig) -> serde_json::Map<String, serde_json::Value> {
    let mut map = serde_json::Map::new();
    for line in cfg.to_text().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            map.insert(k.to_string(), serde_json::Value::String(v.to_string()));
        }
    }
    map
}
