//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fce_core::annotations::{curved_subset_select, curved_subset_select_with, write_jsonl, EndpointRule, TextInstance};
use fce_core::decode::{decode_all, ideal_predictions, poly_nms, CellOrigin, DecodeParams, Detection};
use fce_core::eval::{evaluate, EvalCounts, ScoredPolygon};
use fce_core::fidelity::{fidelity_samples, summarize, FidelityParams};
use fce_core::fourier::{
    embed, fourier_coefficients, full_spectrum, reconstruct, signal_energy, truncation_l2_error, FourierSignature,
};
use fce_core::geometry::{resample_equidistant, Contour, Point2};
use fce_core::losses::{ohem_select, regression_loss, regression_loss_grad};
use fce_core::synth::{curved_ribbon_corpus, pipeline_corpus, rectangle, rectangle_corpus, ribbon_corpus};
use fce_core::targets::{assign_levels, default_level_specs, generate_targets, TargetParams};
use fce_core::tensor::{quantize_predictions, quantize_targets};
use fce_core::Level;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

/// Random star-shaped simple polygon.
fn random_polygon(rng: &mut ChaCha8Rng) -> Contour {
    let n = rng.gen_range(3..30);
    let steps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = steps.iter().sum();
    let center = Point2::new(rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0));
    let mut angle = rng.gen_range(0.0..TAU);
    let pts = steps
        .iter()
        .map(|s| {
            angle += TAU * s / total;
            let r = rng.gen_range(5.0..120.0);
            center + Point2::new(angle.cos(), angle.sin()) * r
        })
        .collect();
    Contour::new(pts).unwrap()
}

fn polygons(count: usize, seed: u64) -> Vec<Contour> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_polygon(&mut rng)).collect()
}

fn max_dist(a: &[Point2], b: &[Point2]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.distance(*q)).fold(0.0, f64::max)
}

fn dft_round_trip() -> Outcome {
    let polys = polygons(200, 1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for c in &polys {
        let pts = resample_equidistant(c, 401).map_err(|e| e.to_string())?;
        let sig = fourier_coefficients(&pts, 200).map_err(|e| e.to_string())?;
        worst = worst.max(max_dist(pts.points(), &reconstruct(&sig, 401)));
    }
    within(start.elapsed(), 5.0)?;
    ensure(worst < 1e-9, || format!("max error {worst:e}"))?;
    Ok(format!(
        "max error {worst:.2e} px in {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn parseval() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in polygons(200, 2) {
        let pts = resample_equidistant(&c, 400).map_err(|e| e.to_string())?;
        let energy: f64 = full_spectrum(&pts).iter().map(|z| z.norm_sqr()).sum();
        let direct = signal_energy(&pts);
        worst = worst.max((energy - direct).abs() / direct);
        let errors: Vec<f64> = (1..=20).map(|k| truncation_l2_error(&pts, k).unwrap()).collect();
        ensure(errors.windows(2).all(|w| w[1] <= w[0]), || {
            "truncation error increased with K".into()
        })?;
    }
    ensure(worst <= 1e-9, || format!("relative energy gap {worst:e}"))?;
    Ok(format!(
        "max relative gap {worst:.2e}, truncation error non-increasing for K = 1..20"
    ))
}

fn circle() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for &(cx, cy, r) in &[(320.0, 240.0, 100.0), (123.25, 77.5, 40.0), (0.0, 0.0, 1.0)] {
        let pts = (0..400)
            .map(|i| {
                let a = TAU * i as f64 / 400.0;
                Point2::new(cx + r * a.cos(), cy + r * a.sin())
            })
            .collect();
        let sig = embed(&Contour::new(pts).unwrap(), 5, 400).map_err(|e| e.to_string())?;
        let c0 = sig.get(0);
        worst.0 = worst.0.max((c0.re - cx).abs().max((c0.im - cy).abs()));
        worst.1 = worst.1.max((sig.get(1).re - r).abs().max(sig.get(1).im.abs()));
        worst.2 = sig
            .iter()
            .filter(|(k, _)| *k != 0 && *k != 1)
            .map(|(_, z)| z.norm())
            .fold(worst.2, f64::max);
    }
    ensure(worst.0 <= 1e-12, || format!("c_0 off by {:e}", worst.0))?;
    ensure(worst.1 <= 1e-9, || format!("c_1 off by {:e}", worst.1))?;
    ensure(worst.2 < 1e-9, || format!("stray |c_k| {:e}", worst.2))?;
    Ok(format!(
        "|c_0 - centre| {:.1e}, |c_1 - r| {:.1e}, other |c_k| {:.1e}",
        worst.0, worst.1, worst.2
    ))
}

fn compactness() -> Outcome {
    let start = Instant::now();
    let contours: Vec<Contour> = ribbon_corpus(50, 7)
        .into_iter()
        .flat_map(|i| i.instances)
        .map(|i| i.polygon)
        .collect();
    let degrees = [3, 5, 10];
    let params = FidelityParams {
        supersample: 8,
        ..FidelityParams::default()
    };
    let rows = summarize(
        &fidelity_samples(&contours, &degrees, &params).map_err(|e| e.to_string())?,
        &degrees,
    );
    within(start.elapsed(), 30.0)?;
    let (k3, k5, k10) = (rows[0].mean_iou, rows[1].mean_iou, rows[2].mean_iou);
    ensure(contours.len() == 50, || {
        format!("corpus has {} polygons", contours.len())
    })?;
    ensure(k5 >= 0.90, || format!("mean IoU at K=5 is {k5:.4}"))?;
    ensure(k10 > k3, || format!("K=10 {k10:.4} not above K=3 {k3:.4}"))?;
    Ok(format!("mean IoU K=3 {k3:.4}, K=5 {k5:.4}, K=10 {k10:.4}"))
}

fn pipeline() -> Outcome {
    let start = Instant::now();
    let images = pipeline_corpus(20, 3);
    let specs = default_level_specs();
    let specs = &specs;
    let multi_level = images
        .iter()
        .flat_map(|img| {
            img.instances
                .iter()
                .map(move |i| assign_levels(i, img.width, img.height, specs).len())
        })
        .filter(|&n| n > 1)
        .count();
    ensure(multi_level > 0, || "no instance falls in two levels".into())?;
    let mut total = EvalCounts::default();
    for img in &images {
        let targets =
            quantize_targets(&generate_targets(img, specs, &TargetParams::default()).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let preds = quantize_predictions(&ideal_predictions(&targets)).map_err(|e| e.to_string())?;
        let dets = decode_all(&preds, &DecodeParams::default()).map_err(|e| e.to_string())?;
        let scored: Vec<ScoredPolygon> = dets
            .into_iter()
            .enumerate()
            .map(|(id, d)| ScoredPolygon {
                id,
                contour: d.contour,
                score: d.score,
            })
            .collect();
        total += evaluate(&scored, &img.instances, 0.5, 4).counts;
    }
    within(start.elapsed(), 60.0)?;
    ensure(total.fp == 0 && total.hmean() == 1.0, || format!("{total:?}"))?;
    Ok(format!(
        "{} images, {multi_level} two-level instances, tp {} fp {} fn {}, hmean {}",
        images.len(),
        total.tp,
        total.fp,
        total.fn_,
        total.hmean()
    ))
}

/// Loss straight from the definitions, with explicit trigonometric sums.
fn brute_force_loss(gt: &[FourierSignature], pred: &[FourierSignature], tcr: &[bool], points: usize) -> f64 {
    let eval = |s: &FourierSignature, n: usize| {
        let t = n as f64 / points as f64;
        s.iter().fold((0.0, 0.0), |(x, y), (k, c)| {
            let (sin, cos) = (TAU * k as f64 * t).sin_cos();
            (x + c.re * cos - c.im * sin, y + c.re * sin + c.im * cos)
        })
    };
    let sl1 = |d: f64| if d.abs() < 1.0 { 0.5 * d * d } else { d.abs() - 0.5 };
    let mut total = 0.0;
    for i in 0..gt.len() {
        let w = if tcr[i] { 1.0 } else { 0.5 };
        for n in 0..points {
            let (gx, gy) = eval(&gt[i], n);
            let (px, py) = eval(&pred[i], n);
            total += w * (sl1(gx - px) + sl1(gy - py));
        }
    }
    total / points as f64
}

fn random_signature(rng: &mut ChaCha8Rng, degree: usize, spread: f64) -> FourierSignature {
    let flat: Vec<f64> = (0..2 * (2 * degree + 1))
        .map(|_| rng.gen_range(-spread..spread))
        .collect();
    FourierSignature::from_flat(&flat).unwrap()
}

fn loss_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_value, mut worst_grad) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let degree = rng.gen_range(0..4);
        let pixels = rng.gen_range(1..5);
        let points = rng.gen_range(3..20);
        let gt: Vec<_> = (0..pixels).map(|_| random_signature(&mut rng, degree, 3.0)).collect();
        let pred: Vec<_> = (0..pixels).map(|_| random_signature(&mut rng, degree, 3.0)).collect();
        let tcr: Vec<bool> = (0..pixels).map(|_| rng.gen()).collect();
        let got = regression_loss(&gt, &pred, &tcr, points).map_err(|e| e.to_string())?;
        worst_value = worst_value.max((got - brute_force_loss(&gt, &pred, &tcr, points)).abs());

        let grads = regression_loss_grad(&gt, &pred, &tcr, points).map_err(|e| e.to_string())?;
        for (i, g) in grads.iter().enumerate() {
            let base = pred[i].to_flat();
            for (j, &analytic) in g.iter().enumerate() {
                let h = 1e-6;
                let at = |d: f64| {
                    let mut v = base.clone();
                    v[j] += d;
                    let mut p = pred.clone();
                    p[i] = FourierSignature::from_flat(&v).unwrap();
                    brute_force_loss(&gt, &p, &tcr, points)
                };
                let fd = (at(h) - at(-h)) / (2.0 * h);
                worst_grad = worst_grad.max((fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1e-3));
            }
        }
    }
    ensure(worst_value <= 1e-12, || format!("loss gap {worst_value:e}"))?;
    ensure(worst_grad <= 1e-4, || format!("gradient relative gap {worst_grad:e}"))?;
    Ok(format!(
        "loss gap {worst_value:.1e}, gradient relative gap {worst_grad:.1e}"
    ))
}

fn uniqueness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst_order, mut worst_c0, mut worst_rest) = (0.0f64, 0.0f64, 0.0f64);
    for c in polygons(200, 7) {
        let base = embed(&c, 5, 400).map_err(|e| e.to_string())?;
        let shift = rng.gen_range(1..c.len());
        for variant in [c.rotated_start(shift), c.reversed(), c.reversed().rotated_start(shift)] {
            let s = embed(&variant, 5, 400).map_err(|e| e.to_string())?;
            for ((_, a), (_, b)) in base.iter().zip(s.iter()) {
                worst_order = worst_order.max((a - b).norm());
            }
        }
        let t = Point2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
        let moved = embed(&c.translated(t), 5, 400).map_err(|e| e.to_string())?;
        for ((k, a), (_, b)) in base.iter().zip(moved.iter()) {
            let d = b - a;
            if k == 0 {
                worst_c0 = worst_c0.max((d.re - t.x).abs().max((d.im - t.y).abs()));
            } else {
                worst_rest = worst_rest.max(d.norm());
            }
        }
    }
    ensure(worst_order <= 1e-9, || {
        format!("vertex order changes signature by {worst_order:e}")
    })?;
    ensure(worst_c0 <= 1e-9, || format!("c_0 shift off by {worst_c0:e}"))?;
    ensure(worst_rest <= 1e-9, || {
        format!("translation moved c_k, k != 0, by {worst_rest:e}")
    })?;
    Ok(format!(
        "rotation/reversal {worst_order:.1e}, c_0 shift error {worst_c0:.1e}, other c_k {worst_rest:.1e}"
    ))
}

/// Largest relative area change from removing one vertex other than the
/// first and last, with a fresh shoelace implementation.
fn shoelace_max_delta(poly: &Contour, ends: &[usize]) -> f64 {
    let area = |pts: &[Point2]| -> f64 {
        let n = pts.len();
        0.5 * (0..n)
            .map(|i| pts[i].x * pts[(i + 1) % n].y - pts[(i + 1) % n].x * pts[i].y)
            .sum::<f64>()
            .abs()
    };
    let v = poly.vertices();
    let before = area(v);
    (0..v.len())
        .filter(|i| !ends.contains(i))
        .map(|i| {
            let rest: Vec<Point2> = v.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &p)| p).collect();
            (before - area(&rest)).abs() / before
        })
        .fold(0.0, f64::max)
}

fn instance(id: String, polygon: Contour) -> TextInstance {
    TextInstance {
        id,
        polygon,
        ignore: false,
    }
}

fn subset() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut corpus: Vec<TextInstance> = (0..10)
        .map(|i| {
            let (w, h) = (rng.gen_range(150.0..400.0), rng.gen_range(30.0..90.0));
            instance(
                format!("rect{i}"),
                rectangle(rng.gen_range(10.0..200.0), rng.gen_range(10.0..500.0), w, h, 10),
            )
        })
        .collect();
    corpus.extend(
        curved_ribbon_corpus(10, 4)
            .into_iter()
            .enumerate()
            .map(|(i, img)| instance(format!("ribbon{i}"), img.instances[0].polygon.clone())),
    );
    let deltas: Vec<f64> = corpus
        .iter()
        .map(|t| shoelace_max_delta(&t.polygon, &[0, t.polygon.len() - 1]))
        .collect();
    let (rect_max, ribbon_min) = (
        deltas[..10].iter().cloned().fold(0.0, f64::max),
        deltas[10..].iter().cloned().fold(f64::INFINITY, f64::min),
    );
    ensure(ribbon_min >= 0.2, || format!("weakest ribbon delta {ribbon_min:.4}"))?;
    ensure(rect_max < 0.07, || format!("largest rectangle delta {rect_max:.4}"))?;
    let picked: Vec<String> = curved_subset_select(&corpus, 0.07).into_iter().map(|t| t.id).collect();
    let ribbons: Vec<String> = corpus[10..].iter().map(|t| t.id.clone()).collect();
    ensure(picked == ribbons, || format!("selected {picked:?}"))?;

    // Two-sided 14-point rectangles, with both ends of each side held fixed.
    let rects: Vec<TextInstance> = rectangle_corpus(10, 5)
        .into_iter()
        .map(|img| img.instances[0].clone())
        .collect();
    let side_max = rects
        .iter()
        .map(|t| shoelace_max_delta(&t.polygon, &[0, 6, 7, 13]))
        .fold(0.0, f64::max);
    ensure(side_max < 1e-12, || format!("side-ends rectangle delta {side_max:e}"))?;
    ensure(
        curved_subset_select_with(&rects, 0.07, EndpointRule::SideEnds).is_empty(),
        || "side-ends rule selected a rectangle".into(),
    )?;

    let overall = deltas.iter().cloned().fold(0.0, f64::max);
    if overall < 1.1 {
        ensure(curved_subset_select(&corpus, 1.1).is_empty(), || {
            "threshold 1.1 selected something".into()
        })?;
    }
    Ok(format!(
        "rectangles max delta {rect_max:.4}, ribbons min delta {ribbon_min:.4}, selected the 10 ribbons"
    ))
}

/// Exact IoU of axis-aligned integer boxes `(x, y, w, h)`.
fn box_iou(a: (i32, i32, i32, i32), b: (i32, i32, i32, i32)) -> f64 {
    let w = ((a.0 + a.2).min(b.0 + b.2) - a.0.max(b.0)).max(0);
    let h = ((a.1 + a.3).min(b.1 + b.3) - a.1.max(b.1)).max(0);
    let inter = (w * h) as f64;
    inter / ((a.2 * a.3 + b.2 * b.3) as f64 - inter)
}

fn ohem_and_nms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ohem_cases = 0usize;
    for n in 1..=12usize {
        let vectors = if n <= 8 { 6 } else { 1 };
        for _ in 0..vectors {
            let losses: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 * 0.5).collect();
            for labels in 0u32..(1 << n) {
                let positive: Vec<bool> = (0..n).map(|i| labels >> i & 1 == 1).collect();
                let got = ohem_select(&losses, &positive, 3).map_err(|e| e.to_string())?;
                let negatives: Vec<usize> = (0..n).filter(|&i| !positive[i]).collect();
                let n_pos = n - negatives.len();
                let quota = if n_pos == 0 { 100 } else { 3 * n_pos }.min(negatives.len());
                // Best subset of negatives of size `quota`: largest loss sum,
                // then the lexicographically smallest index list.
                let mut best: Option<(f64, Vec<usize>)> = None;
                for mask in 0u32..(1 << negatives.len()) {
                    if mask.count_ones() as usize != quota {
                        continue;
                    }
                    let set: Vec<usize> = (0..negatives.len())
                        .filter(|&j| mask >> j & 1 == 1)
                        .map(|j| negatives[j])
                        .collect();
                    let sum: f64 = set.iter().map(|&i| losses[i]).sum();
                    let better = match &best {
                        None => true,
                        Some((s, v)) => sum > *s || (sum == *s && set < *v),
                    };
                    if better {
                        best = Some((sum, set));
                    }
                }
                let chosen = best.map(|b| b.1).unwrap_or_default();
                let expected: Vec<bool> = (0..n).map(|i| positive[i] || chosen.contains(&i)).collect();
                ensure(got == expected, || {
                    format!("OHEM mismatch: losses {losses:?} labels {positive:?}")
                })?;
                ohem_cases += 1;
            }
        }
    }

    let levels = [Level::P3, Level::P4, Level::P5];
    let mut nms_cases = 0usize;
    for _ in 0..400 {
        let m = rng.gen_range(1..=6);
        let boxes: Vec<(i32, i32, i32, i32)> = (0..m)
            .map(|_| {
                (
                    rng.gen_range(0..20),
                    rng.gen_range(0..20),
                    rng.gen_range(3..12),
                    rng.gen_range(3..12),
                )
            })
            .collect();
        let dets: Vec<Detection> = boxes
            .iter()
            .map(|&(x, y, w, h)| {
                let (x, y, w, h) = (x as f64, y as f64, w as f64, h as f64);
                let level = levels[rng.gen_range(0..3)];
                Detection {
                    contour: Contour::from_flat(&[x, y, x + w, y, x + w, y + h, x, y + h]).unwrap(),
                    score: rng.gen_range(3..6) as f64 / 10.0,
                    level,
                    origin: CellOrigin {
                        level,
                        row: rng.gen_range(0..3),
                        col: rng.gen_range(0..3),
                    },
                }
            })
            .collect();
        let thresh = [0.1, 0.3, 0.5][rng.gen_range(0..3)];
        let got: Vec<usize> = poly_nms(dets.clone(), thresh, 4)
            .iter()
            .map(|k| dets.iter().position(|d| d == k).unwrap())
            .collect();
        // Priority: higher score first, then the smaller cell origin; an
        // input index settles fully identical candidates.
        let key = |i: usize| (dets[i].score, std::cmp::Reverse(dets[i].origin), std::cmp::Reverse(i));
        let before = |a: usize, b: usize| key(a) > key(b);
        // The kept set is the unique subset in which a candidate is present
        // exactly when no present candidate of higher priority overlaps it
        // at or above the threshold.
        let mut fixed_points = Vec::new();
        for mask in 0u32..(1 << m) {
            let inside = |i: usize| mask >> i & 1 == 1;
            let consistent = (0..m).all(|i| {
                let blocked =
                    (0..m).any(|j| j != i && inside(j) && before(j, i) && box_iou(boxes[j], boxes[i]) >= thresh);
                inside(i) == !blocked
            });
            if consistent {
                fixed_points.push(mask);
            }
        }
        ensure(fixed_points.len() == 1, || {
            format!("{} consistent subsets", fixed_points.len())
        })?;
        let mut want: Vec<usize> = (0..m).filter(|&i| fixed_points[0] >> i & 1 == 1).collect();
        want.sort_by(|&a, &b| {
            if before(a, b) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        ensure(got == want, || {
            format!("NMS kept {got:?}, expected {want:?} for {boxes:?}")
        })?;
        nms_cases += 1;
    }
    Ok(format!("{ohem_cases} OHEM labelings and {nms_cases} NMS cases match"))
}

fn write_corpus(dir: &Path) {
    let mut images = pipeline_corpus(12, 3);
    images.extend(ribbon_corpus(6, 7));
    images.extend(curved_ribbon_corpus(4, 4));
    images.extend(rectangle_corpus(4, 5));
    let mut buf = Vec::new();
    write_jsonl(&images, &mut buf).unwrap();
    fs::write(dir.join("ann.jsonl"), buf).unwrap();
    fs::write(
        dir.join("img_a.txt"),
        "10,10,90,10,90,40,10,40,hello\n200,50,260,50,260,80,200,80,###\n",
    )
    .unwrap();
    fs::write(dir.join("img_b.txt"), "5,5,50,5,55,30,5,30\n").unwrap();
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

const COMMANDS: &[&[&str]] = &[
    &["embed", "{in}/ann.jsonl", "-o", "{out}/sig.jsonl"],
    &["reconstruct", "{out}/sig.jsonl", "-o", "{out}/rec.jsonl"],
    &[
        "fidelity",
        "{in}/ann.jsonl",
        "--degrees",
        "3,5,10",
        "-o",
        "{out}/fid.csv",
        "--svg-dir",
        "{out}/fid_svg",
    ],
    &[
        "targets",
        "{in}/ann.jsonl",
        "--out-dir",
        "{out}/t",
        "--predictions-dir",
        "{out}/p",
    ],
    &["decode", "{out}/p", "-o", "{out}/det.jsonl"],
    &["loss", "{out}/t", "{out}/p", "-o", "{out}/loss.json"],
    &[
        "eval",
        "{out}/det.jsonl",
        "{in}/ann.jsonl",
        "-o",
        "{out}/eval.json",
        "--csv",
        "{out}/eval.csv",
    ],
    &["subset", "{in}/ann.jsonl", "-o", "{out}/subset.jsonl"],
    &[
        "plot",
        "{in}/ann.jsonl",
        "--detections",
        "{out}/det.jsonl",
        "--out-dir",
        "{out}/plot",
    ],
    &[
        "import",
        "{in}/img_a.txt",
        "{in}/img_b.txt",
        "--width",
        "300",
        "--height",
        "100",
        "-o",
        "{out}/import.jsonl",
    ],
    &[
        "synth",
        "ribbons",
        "--count",
        "5",
        "--seed",
        "2",
        "-o",
        "{out}/synth.jsonl",
    ],
];

fn run_all(input: &Path, out: &Path, threads: usize) -> Result<Vec<Vec<u8>>, String> {
    fs::create_dir_all(out).unwrap();
    let mut stdouts = Vec::new();
    for args in COMMANDS {
        let args: Vec<String> = args
            .iter()
            .map(|a| {
                a.replace("{in}", input.to_str().unwrap())
                    .replace("{out}", out.to_str().unwrap())
            })
            .collect();
        let result = Command::new(env!("CARGO_BIN_EXE_fce"))
            .arg("--threads")
            .arg(threads.to_string())
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        if !result.status.success() {
            return Err(format!(
                "`fce {}` failed: {}",
                args[0],
                String::from_utf8_lossy(&result.stderr)
            ));
        }
        stdouts.push(result.stdout);
        stdouts.push(result.stderr);
    }
    Ok(stdouts)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = tmp.path().join("in");
    fs::create_dir_all(&input).unwrap();
    write_corpus(&input);
    let runs = [("one_a", 1), ("one_b", 1), ("many", 4)];
    let mut results = Vec::new();
    for (name, threads) in runs {
        let out = tmp.path().join(name);
        let streams = run_all(&input, &out, threads)?;
        results.push((streams, snapshot(&out)));
    }
    let files = results[0].1.len();
    ensure(files > 50, || format!("only {files} output files"))?;
    for (i, (name, _)) in runs.iter().enumerate().skip(1) {
        ensure(results[i].0 == results[0].0, || {
            format!("console output of run {name} differs")
        })?;
        for (path, bytes) in &results[0].1 {
            ensure(results[i].1.get(path) == Some(bytes), || {
                format!("{path} differs in run {name}")
            })?;
        }
        ensure(results[i].1.len() == files, || {
            format!("run {name} wrote a different file set")
        })?;
    }
    Ok(format!(
        "{} commands, {files} files identical over 2 single-thread runs and a 4-thread run",
        COMMANDS.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("DFT round trip (N=401, K=200)", dft_round_trip),
        ("Parseval identity and truncation monotonicity", parseval),
        ("circle analytic case", circle),
        ("compactness on ribbon corpus", compactness),
        ("pipeline round trip", pipeline),
        ("regression loss oracle and gradients", loss_oracle),
        ("start point, orientation and translation", uniqueness),
        ("curved subset selector", subset),
        ("OHEM and NMS enumeration", ohem_and_nms),
        ("CLI determinism across runs and threads", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS  {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {:>2} FAIL  {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
