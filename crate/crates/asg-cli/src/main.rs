//! Command-line surface: `extract`, `eval`, `synth`, and `bench`.
//!
//! Exit codes: 0 on success, 1 when extraction or scoring fails, 2 on
//! usage or IO errors.

mod artifacts;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asg::config::{Resolution, RunConfig};
use asg::cost::CostKind;
use asg::eval::{self, Protocol};
use asg::growth;
use asg::imgproc;
use asg::mask::Mask;
use asg::synth;

#[derive(Parser)]
#[command(name = "asg", version, about = "Appearance-based medial axis extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the medial axis of an image and write all artifacts.
    Extract(ExtractArgs),
    /// Score predicted skeletons against ground-truth annotations.
    Eval(EvalArgs),
    /// Render a fixture spec into an image, masks, and oracle ground truth.
    Synth(SynthArgs),
    /// Per-stage runtime and proposal-count report over a directory.
    Bench(BenchArgs),
}

/// Configuration flags mirroring the RunConfig keys; unset flags fall back
/// to the config file (`--config` or `$ASG_CONFIG`) and then the defaults.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Path to a key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long)]
    cost: Option<CostKind>,
    /// Scale-range preset: half (r in [2,41]) or full (r in [2,82]).
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    w_s_color: Option<f64>,
    #[arg(long)]
    w_s_hist: Option<f64>,
    #[arg(long)]
    r_min: Option<u32>,
    #[arg(long)]
    r_max: Option<u32>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    tile_size: Option<usize>,
    #[arg(long)]
    smooth: Option<bool>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    delta_r: Option<f64>,
    #[arg(long)]
    epsilon_r: Option<u32>,
    #[arg(long)]
    alpha_c: Option<f64>,
    #[arg(long)]
    l_max: Option<usize>,
    #[arg(long)]
    alpha_end: Option<f64>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    relax_factor: Option<f64>,
    #[arg(long)]
    scale_step: Option<u32>,
    #[arg(long)]
    subsume_frac: Option<f64>,
    #[arg(long)]
    eval_tol_frac: Option<f64>,
    #[arg(long)]
    match_cap: Option<u64>,
    #[arg(long)]
    ligature_horizon: Option<u32>,
    #[arg(long)]
    weighted_precision: Option<bool>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let path = self
            .config
            .clone()
            .or_else(|| std::env::var_os("ASG_CONFIG").map(PathBuf::from));
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", p.display())))?;
                RunConfig::from_text(&text).map_err(CliError::from_usage)?
            }
            None => RunConfig::default(),
        };
        if let Some(res) = &self.resolution {
            let res: Resolution = res.parse().map_err(CliError::from_usage)?;
            cfg = cfg.with_resolution(res);
        }
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        apply!(
            cost, w_s_color, w_s_hist, r_min, r_max, bins, tile_size, smooth, lambda, kappa,
            beta_max, delta_r, epsilon_r, alpha_c, l_max, alpha_end, directions, relax_factor,
            scale_step, subsume_frac, eval_tol_frac, match_cap, ligature_horizon,
            weighted_precision
        );
        cfg.validate().map_err(CliError::from_usage)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Input image (PNG or binary PPM).
    input: PathBuf,
    /// Output directory for the artifacts.
    #[arg(short, long, default_value = "asg-out")]
    out: PathBuf,
    /// Also dump the cost volume (volume.bin).
    #[arg(long)]
    dump_volume: bool,
    /// Also dump the seed list (seeds.txt).
    #[arg(long)]
    dump_seeds: bool,
    /// Trace the coverage contour in blue on the overlay.
    #[arg(long)]
    contour: bool,
    #[command(flatten)]
    config_args: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of predicted skeleton masks (<name>.png).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth root: one subdirectory per image with annotation_<k>.png.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = "standard")]
    protocol: String,
    /// Ligature-weighted recall (needs radius maps next to the annotations).
    #[arg(long)]
    weighted: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    config_args: ConfigArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Fixture spec file (one primitive per line).
    spec: PathBuf,
    #[arg(short, long, default_value = "asg-fixture")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of input images.
    input: PathBuf,
    #[command(flatten)]
    config_args: ConfigArgs,
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: 2,
            msg: msg.into(),
        }
    }

    fn failure(msg: impl Into<String>) -> Self {
        CliError {
            code: 1,
            msg: msg.into(),
        }
    }

    fn from_usage(e: asg::Error) -> Self {
        CliError::usage(e.to_string())
    }

    fn from_asg(e: asg::Error) -> Self {
        use asg::Error::*;
        match e {
            Io { .. } | Decode { .. } | SpecParse { .. } | InvalidParameter(_) | EmptyImage => {
                CliError::usage(e.to_string())
            }
            _ => CliError::failure(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    let cfg = args.config_args.resolve()?;
    let img = imgproc::load_image(&args.input).map_err(CliError::from_asg)?;
    let result = growth::extract(&img, &cfg).map_err(|e| CliError::failure(e.to_string()))?;
    if result.volume.truncated() {
        eprintln!(
            "warning: r_max {} does not fit in {}x{}; scales truncated to [{}, {}]",
            result.volume.requested_r_max,
            img.width,
            img.height,
            result.volume.r_min,
            result.volume.r_max
        );
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", args.out.display())))?;

    artifacts::write_extraction(&args.out, &img, &result, &cfg, args.contour)
        .map_err(|e| CliError::failure(e.to_string()))?;
    if args.dump_volume {
        artifacts::write_volume(&args.out.join("volume.bin"), &result.volume)
            .map_err(|e| CliError::failure(e.to_string()))?;
    }
    if args.dump_seeds {
        artifacts::write_seeds(&args.out.join("seeds.txt"), &result.seeds)
            .map_err(|e| CliError::failure(e.to_string()))?;
    }
    println!(
        "extracted {} medial points in {} branches ({} seeds grown, {} pruned) -> {}",
        result.axis.len(),
        result.axis.branch_count(),
        result.axis.counters.seeds_grown,
        result.axis.counters.seeds_pruned,
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let cfg = args.config_args.resolve()?;
    let protocol: Protocol = args.protocol.parse().map_err(CliError::from_usage)?;

    let mut names: Vec<String> = Vec::new();
    let entries = std::fs::read_dir(&args.gt)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.gt.display())))?;
    for entry in entries.flatten() {
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(CliError::usage(format!(
            "no ground-truth subdirectories in {}",
            args.gt.display()
        )));
    }

    let mut per_image: Vec<(String, eval::EvalResult)> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for name in &names {
        match eval_one(&args, &cfg, protocol, name) {
            Ok(res) => per_image.push((name.clone(), res)),
            Err(msg) => {
                eprintln!("{name}: {msg}");
                failures.push(name.clone());
            }
        }
    }

    // Pooled aggregate over images.
    let agg = aggregate(&per_image);
    println!("per-image results ({} protocol):", args.protocol);
    for (name, r) in &per_image {
        let w = match (r.weighted_recall, r.weighted_f1) {
            (Some(wr), Some(wf)) => format!("  *R {wr:.3}  *F1 {wf:.3}"),
            _ => String::new(),
        };
        println!(
            "  {name}: P {:.3}  R {:.3}  F1 {:.3}{w}",
            r.precision, r.recall, r.f1
        );
    }
    println!();
    print_metric_table(&agg);

    if let Some(path) = &args.json {
        let report = serde_json::json!({
            "protocol": args.protocol,
            "aggregate": {
                "precision": agg.precision,
                "recall": agg.recall,
                "f1": agg.f1,
                "weighted_recall": agg.weighted_recall,
                "weighted_f1": agg.weighted_f1,
            },
            "images": per_image
                .iter()
                .map(|(n, r)| serde_json::json!({"name": n, "result": r}))
                .collect::<Vec<_>>(),
            "failures": failures,
        });
        artifacts::atomic_write(path, serde_json::to_string_pretty(&report).unwrap().as_bytes())
            .map_err(|e| CliError::failure(e.to_string()))?;
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::failure(format!(
            "{} image(s) unscorable: {}",
            failures.len(),
            failures.join(", ")
        )))
    }
}

struct Aggregate {
    precision: f64,
    recall: f64,
    f1: f64,
    weighted_recall: Option<f64>,
    weighted_f1: Option<f64>,
}

fn aggregate(per_image: &[(String, eval::EvalResult)]) -> Aggregate {
    let (mut pm, mut pt, mut gm, mut gt) = (0usize, 0usize, 0usize, 0usize);
    let (mut wgm, mut wgt) = (0.0f64, 0.0f64);
    let mut any_weighted = false;
    for (_, r) in per_image {
        pm += r.pred_matched;
        pt += r.pred_total;
        gm += r.gt_matched;
        gt += r.gt_total;
        if let (Some(a), Some(b)) = (r.weighted_gt_matched, r.weighted_gt_total) {
            wgm += a;
            wgt += b;
            any_weighted = true;
        }
    }
    let p = if pt == 0 { 0.0 } else { pm as f64 / pt as f64 };
    let r = if gt == 0 { 0.0 } else { gm as f64 / gt as f64 };
    let wr = if any_weighted && wgt > 0.0 {
        Some(wgm / wgt)
    } else {
        None
    };
    Aggregate {
        precision: p,
        recall: r,
        f1: eval::f1(p, r),
        weighted_recall: wr,
        weighted_f1: wr.map(|wr| eval::f1(p, wr)),
    }
}

fn print_metric_table(agg: &Aggregate) {
    println!("{:<8}{:>10}", "Metric", "Aggregate");
    println!("{:<8}{:>10.3}", "P", agg.precision);
    println!("{:<8}{:>10.3}", "R", agg.recall);
    println!("{:<8}{:>10.3}", "F1", agg.f1);
    if let Some(wr) = agg.weighted_recall {
        println!("{:<8}{:>10.3}", "*R", wr);
    }
    if let Some(wf) = agg.weighted_f1 {
        println!("{:<8}{:>10.3}", "*F1", wf);
    }
}

fn eval_one(
    args: &EvalArgs,
    cfg: &RunConfig,
    protocol: Protocol,
    name: &str,
) -> Result<eval::EvalResult, String> {
    let pred_path = args.pred.join(format!("{name}.png"));
    if !pred_path.exists() {
        return Err(format!("missing prediction {}", pred_path.display()));
    }
    let pred = eval::load_mask(&pred_path).map_err(|e| e.to_string())?;
    let annotations =
        eval::load_ground_truth(args.gt.join(name)).map_err(|e| e.to_string())?;
    if annotations.is_empty() {
        return Err("no annotations".into());
    }
    let tol = cfg.eval_tolerance(pred.width, pred.height);

    if args.weighted {
        let with_radius = annotations.iter().all(|a| a.radius.is_some());
        if with_radius {
            let weights: Vec<Vec<f64>> = annotations
                .iter()
                .map(|a| {
                    eval::ligature_weights(
                        &a.mask,
                        a.radius.as_ref().unwrap(),
                        cfg.ligature_horizon,
                    )
                })
                .collect();
            return eval::score_weighted_capped(
                &pred,
                &annotations,
                &weights,
                tol,
                protocol,
                cfg.weighted_precision,
                cfg.match_cap,
            )
            .map_err(|e| e.to_string());
        }
        eprintln!("{name}: no radius maps; falling back to unweighted scoring");
    }
    match protocol {
        Protocol::Standard => {
            eval::score_standard_capped(&pred, &annotations, tol, cfg.match_cap)
                .map_err(|e| e.to_string())
        }
        Protocol::Single => {
            eval::score_single_annotation_capped(&pred, &annotations, tol, cfg.match_cap)
                .map_err(|e| e.to_string())
        }
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec = synth::parse_spec(&text).map_err(CliError::from_asg)?;
    let (img, masks) = synth::render_shapes(&spec).map_err(CliError::from_asg)?;

    let out = &args.out;
    std::fs::create_dir_all(out.join("gt"))
        .and_then(|_| std::fs::create_dir_all(out.join("masks")))
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", out.display())))?;

    artifacts::save_rgb_png(&out.join("image.png"), &img)
        .map_err(|e| CliError::failure(e.to_string()))?;

    // One annotation: the union of the per-region oracle skeletons.
    let mut union = Mask::new(img.width, img.height);
    let mut radius = vec![0u32; img.width * img.height];
    for (i, mask) in masks.iter().enumerate() {
        artifacts::save_mask_png(&out.join(format!("masks/region_{}.png", i + 1)), mask)
            .map_err(|e| CliError::failure(e.to_string()))?;
        let oracle = synth::oracle_mat(mask).map_err(|e| CliError::failure(e.to_string()))?;
        for (x, y) in oracle.skeleton.pixels() {
            union.set(x, y, true);
            radius[y * img.width + x] = oracle.radius_at(x, y).max(radius[y * img.width + x]);
        }
    }
    artifacts::save_mask_png(&out.join("gt/annotation_1.png"), &union)
        .map_err(|e| CliError::failure(e.to_string()))?;
    artifacts::save_radius_png(
        &out.join("gt/annotation_1_radius.png"),
        &radius,
        img.width,
        img.height,
    )
    .map_err(|e| CliError::failure(e.to_string()))?;
    println!(
        "rendered {}x{} fixture with {} region(s) -> {}",
        img.width,
        img.height,
        masks.len(),
        out.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let cfg = args.config_args.resolve()?;
    let mut files: Vec<PathBuf> = Vec::new();
    let entries = std::fs::read_dir(&args.input)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.input.display())))?;
    for entry in entries.flatten() {
        let p = entry.path();
        let ext = p
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if matches!(ext.as_str(), "png" | "ppm") {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        println!("no images in {}; nothing to do", args.input.display());
        return Ok(());
    }

    let mut total = growth::StageTimings::default();
    let mut evaluations = 0u64;
    let mut exhaustive = 0u64;
    let mut proposals = 0u64;
    let mut points = 0u64;
    for path in &files {
        let img = imgproc::load_image(path).map_err(CliError::from_asg)?;
        let res = growth::extract(&img, &cfg).map_err(|e| CliError::failure(e.to_string()))?;
        total.proposal_generation += res.timings.proposal_generation;
        total.seed_growth += res.timings.seed_growth;
        total.end_point_growth += res.timings.end_point_growth;
        total.other += res.timings.other;
        evaluations += res.volume.evaluations;
        exhaustive += res.volume.exhaustive_slots();
        proposals += res.axis.counters.proposals_examined;
        points += res.axis.len() as u64;
        println!(
            "{}: {} points, {:.2}s",
            path.file_name().unwrap_or_default().to_string_lossy(),
            res.axis.len(),
            res.timings.total()
        );
    }

    let sum = total.total();
    let pct = |v: f64| if sum > 0.0 { 100.0 * v / sum } else { 0.0 };
    println!();
    println!("{:<22}{:>10}{:>8}", "Stage", "time(s)", "%");
    println!(
        "{:<22}{:>10.2}{:>8.1}",
        "Proposal Generation",
        total.proposal_generation,
        pct(total.proposal_generation)
    );
    println!(
        "{:<22}{:>10.2}{:>8.1}",
        "Seed Growth",
        total.seed_growth,
        pct(total.seed_growth)
    );
    println!(
        "{:<22}{:>10.2}{:>8.1}",
        "End Point Growth",
        total.end_point_growth,
        pct(total.end_point_growth)
    );
    println!("{:<22}{:>10.2}{:>8.1}", "Other", total.other, pct(total.other));
    println!("{:<22}{:>10.2}{:>8.1}", "Total", sum, 100.0);
    println!();
    println!(
        "cost evaluations: {evaluations} (exhaustive H*W*R: {exhaustive}), growth proposals: {proposals}, medial points: {points}"
    );
    Ok(())
}
