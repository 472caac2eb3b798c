use asg::config::RunConfig;
use asg::cost::CostKind;
use asg::eval::{match_skeletons, f1};
use asg::mask::Mask;
use asg::synth::{fixtures, oracle_mat, render_shapes, ShapeSpec};

fn erode8(m: &Mask) -> Mask {
    Mask::from_fn(m.width, m.height, |x, y| {
        (-1i64..=1).all(|dy| (-1i64..=1).all(|dx| m.get_checked(x as i64 + dx, y as i64 + dy)))
    })
}

fn run(name: &str, spec: &ShapeSpec, kind: CostKind, r_max: u32) {
    let t0 = std::time::Instant::now();
    let (img, masks) = render_shapes(spec).unwrap();
    let mut cfg = RunConfig::default();
    cfg.cost = kind;
    cfg.r_max = r_max;
    cfg.smooth = false;
    let res = asg::growth::extract(&img, &cfg).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let mut gt = Mask::new(img.width, img.height);
    for m in &masks {
        let sk = oracle_mat(m).unwrap();
        for (x, y) in sk.skeleton.pixels() { gt.set(x, y, true); }
    }
    let eroded: Vec<Mask> = masks.iter().map(erode8).collect();
    let inside = |x: usize, y: usize| eroded.iter().any(|m| m.get(x, y));
    let sk = res.axis.skeleton_mask();
    let pred = Mask::from_fn(img.width, img.height, |x, y| sk.get(x, y) && inside(x, y));
    let tol = cfg.eval_tolerance(img.width, img.height);
    let m = match_skeletons(&pred, &gt, tol).unwrap();
    let (p, r) = (m.precision(), m.recall());
    println!("{name:10} {kind:?}: F1 {:.3} (P {:.3} R {:.3})  pred {} gt {}  {:.2}s",
        f1(p, r), p, r, pred.count(), gt.count(), elapsed);
}

fn main() {
    for (name, spec) in [("rectangle", fixtures::rectangle()), ("disk", fixtures::disk()),
                         ("plus", fixtures::plus()), ("dumbbell", fixtures::dumbbell())] {
        for kind in [CostKind::Color, CostKind::Hist] {
            run(name, &spec, kind, 14);
        }
    }
}
