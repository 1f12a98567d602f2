use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use fce_core::annotations::{
    curved_subset_select_with, parse_delimited, write_jsonl, AnnotatedImage, DelimitedOptions, EndpointRule,
    TextInstance,
};
use fce_core::decode::{decode_all, ideal_predictions, LevelPrediction, PredictionMaps};
use fce_core::eval::{evaluate, EvalCounts, ScoredPolygon};
use fce_core::fidelity::{fidelity_samples, summarize};
use fce_core::fourier::{embed, reconstruct, FourierSignature};
use fce_core::losses::image_loss;
use fce_core::numfmt::{fmt_num, json_num, json_nums};
use fce_core::targets::{generate_targets, LevelTargets, TargetMaps};
use fce_core::tensor::{
    level_prediction_from_tensor, level_prediction_to_tensor, level_targets_from_tensor, level_targets_to_tensor,
    Tensor, TARGET_HEADER_CHANNELS,
};
use fce_core::{Contour, Level, Point2};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{
    check_file_stem, ensure_dir, list_tensor_dir, output, read_annotations, read_json_lines, read_tensor,
    tensor_file_name, write_file, write_lines,
};
use crate::svg::{self, Layer, GT_COLOR, PRED_COLOR};

fn json_line(v: &Value) -> String {
    serde_json::to_string(v).expect("JSON values always serialize")
}

fn field<'a>(path: &Path, line: usize, v: &'a Value, key: &str) -> CliResult<&'a Value> {
    v.get(key)
        .ok_or_else(|| CliError::Input(format!("{}: line {line}: missing field {key:?}", path.display())))
}

fn number_array(path: &Path, line: usize, v: &Value, key: &str) -> CliResult<Vec<f64>> {
    let bad = || {
        CliError::Input(format!(
            "{}: line {line}: {key:?} must be an array of numbers",
            path.display()
        ))
    };
    field(path, line, v, key)?
        .as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|x| x.as_f64().ok_or_else(bad))
        .collect()
}

fn string_field(path: &Path, line: usize, v: &Value, key: &str) -> CliResult<String> {
    match field(path, line, v, key)? {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(CliError::Input(format!(
            "{}: line {line}: {key:?} must be a string",
            path.display()
        ))),
    }
}

fn stride_of(cfg: &Config, level: Level) -> CliResult<u32> {
    cfg.levels
        .iter()
        .find(|s| s.level == level)
        .map(|s| s.stride)
        .ok_or_else(|| CliError::Config(format!("no spec for level {level}")))
}

pub fn embed_cmd(cfg: &Config, input: &Path, out: Option<&Path>) -> CliResult<()> {
    let images = read_annotations(input)?;
    let per_image: Vec<Vec<String>> = images
        .par_iter()
        .map(|img| {
            img.instances
                .iter()
                .map(|inst| {
                    let sig = embed(&inst.polygon, cfg.degree, cfg.samples)
                        .map_err(|e| CliError::Input(format!("{} / {}: {e}", img.image_id, inst.id)))?;
                    Ok(json_line(&json!({
                        "image_id": img.image_id,
                        "instance_id": inst.id,
                        "ignore": inst.ignore,
                        "signature": json_nums(&sig.to_flat()),
                    })))
                })
                .collect()
        })
        .collect::<CliResult<_>>()?;
    write_lines(out, &per_image.concat())
}

pub fn reconstruct_cmd(cfg: &Config, input: &Path, out: Option<&Path>) -> CliResult<()> {
    let records = read_json_lines(input)?;
    let lines: Vec<String> = records
        .par_iter()
        .map(|(line, v)| {
            let flat = number_array(input, *line, v, "signature")?;
            let sig = FourierSignature::from_flat(&flat)
                .map_err(|e| CliError::Input(format!("{}: line {line}: {e}", input.display())))?;
            let pts: Vec<f64> = reconstruct(&sig, cfg.points).iter().flat_map(|p| [p.x, p.y]).collect();
            Ok(json_line(&json!({
                "image_id": string_field(input, *line, v, "image_id")?,
                "instance_id": string_field(input, *line, v, "instance_id")?,
                "points": json_nums(&pts),
            })))
        })
        .collect::<CliResult<_>>()?;
    write_lines(out, &lines)
}

pub fn fidelity_cmd(
    cfg: &Config,
    input: &Path,
    degrees: &[usize],
    out: Option<&Path>,
    svg_dir: Option<&Path>,
) -> CliResult<()> {
    if degrees.is_empty() || degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Input("--degrees must be a non-empty ascending list".into()));
    }
    let images = read_annotations(input)?;
    let items: Vec<(&AnnotatedImage, &TextInstance)> = images
        .iter()
        .flat_map(|img| img.instances.iter().filter(|i| !i.ignore).map(move |i| (img, i)))
        .collect();
    let contours: Vec<Contour> = items.iter().map(|(_, i)| i.polygon.clone()).collect();
    let samples = fidelity_samples(&contours, degrees, &cfg.fidelity_params())?;

    if let Some(dir) = svg_dir {
        ensure_dir(dir)?;
        items
            .par_iter()
            .zip(&samples)
            .try_for_each(|((img, inst), sample)| -> CliResult<()> {
                check_file_stem(&img.image_id)?;
                check_file_stem(&inst.id)?;
                for (k, recon) in degrees.iter().zip(&sample.reconstructions) {
                    let mut layers = vec![Layer {
                        color: GT_COLOR,
                        dashed: false,
                        outlines: vec![inst.polygon.vertices()],
                    }];
                    if let Some(r) = recon {
                        layers.push(Layer {
                            color: PRED_COLOR,
                            dashed: false,
                            outlines: vec![r.vertices()],
                        });
                    }
                    let name = format!("{}_{}_k{k}.svg", img.image_id, inst.id);
                    write_file(&dir.join(name), svg::render(img.width, img.height, &layers).as_bytes())?;
                }
                Ok(())
            })?;
    }

    let mut lines = vec![
        cfg.header_line(),
        "degree,mean_iou,median_iou,mean_l2,count".to_string(),
    ];
    if !samples.is_empty() {
        for row in summarize(&samples, degrees) {
            lines.push(format!(
                "{},{},{},{},{}",
                row.degree,
                fmt_num(row.mean_iou),
                fmt_num(row.median_iou),
                fmt_num(row.mean_l2),
                row.count
            ));
        }
    }
    write_lines(out, &lines)
}

pub fn targets_cmd(cfg: &Config, input: &Path, out_dir: &Path, predictions_dir: Option<&Path>) -> CliResult<()> {
    let images = read_annotations(input)?;
    for img in &images {
        check_file_stem(&img.image_id)?;
    }
    ensure_dir(out_dir)?;
    if let Some(dir) = predictions_dir {
        ensure_dir(dir)?;
    }
    let params = cfg.target_params();
    let skipped: Vec<Vec<(String, String)>> = images
        .par_iter()
        .map(|img| {
            let maps = generate_targets(img, &cfg.levels, &params)
                .map_err(|e| CliError::Input(format!("{}: {e}", img.image_id)))?;
            for level in &maps.levels {
                let name = tensor_file_name(&img.image_id, level.level);
                write_file(&out_dir.join(&name), &level_targets_to_tensor(level).to_bytes())?;
            }
            if let Some(dir) = predictions_dir {
                for level in &ideal_predictions(&maps).levels {
                    let name = tensor_file_name(&img.image_id, level.level);
                    write_file(&dir.join(&name), &level_prediction_to_tensor(level).to_bytes())?;
                }
            }
            Ok(maps
                .skipped
                .iter()
                .map(|(id, why)| (img.image_id.clone(), format!("{id}: {why}")))
                .collect())
        })
        .collect::<CliResult<_>>()?;
    for (image, msg) in skipped.concat() {
        eprintln!("warning: {image}: skipped instance {msg}");
    }
    Ok(())
}

fn load_targets(cfg: &Config, image_id: &str, files: &[(Level, PathBuf)]) -> CliResult<TargetMaps> {
    let levels = files
        .iter()
        .map(|(level, path)| {
            level_targets_from_tensor(&read_tensor(path)?, *level, stride_of(cfg, *level)?)
                .map_err(|e| CliError::at(path, e))
        })
        .collect::<CliResult<Vec<LevelTargets>>>()?;
    Ok(TargetMaps {
        image_id: image_id.to_string(),
        levels,
        skipped: Vec::new(),
    })
}

/// Reads prediction maps. Target tensors are accepted too and read as
/// perfect predictions; the two layouts differ in channel count modulo 4.
fn load_predictions(cfg: &Config, image_id: &str, files: &[(Level, PathBuf)]) -> CliResult<PredictionMaps> {
    let levels = files
        .iter()
        .map(|(level, path)| -> CliResult<LevelPrediction> {
            let tensor: Tensor = read_tensor(path)?;
            let stride = stride_of(cfg, *level)?;
            let channels = tensor.dims().first().copied().unwrap_or(0);
            let result = if tensor.dims().len() == 3
                && channels >= TARGET_HEADER_CHANNELS + 2
                && (channels - TARGET_HEADER_CHANNELS) % 4 == 2
            {
                level_targets_from_tensor(&tensor, *level, stride).map(|t| {
                    let maps = TargetMaps {
                        image_id: image_id.to_string(),
                        levels: vec![t],
                        skipped: Vec::new(),
                    };
                    ideal_predictions(&maps).levels.remove(0)
                })
            } else {
                level_prediction_from_tensor(&tensor, *level, stride)
            };
            result.map_err(|e| CliError::at(path, e))
        })
        .collect::<CliResult<_>>()?;
    Ok(PredictionMaps {
        image_id: image_id.to_string(),
        levels,
    })
}

pub fn decode_cmd(cfg: &Config, dir: &Path, out: Option<&Path>) -> CliResult<()> {
    let files = list_tensor_dir(dir)?;
    let params = cfg.decode_params();
    let per_image: Vec<Vec<String>> = files
        .par_iter()
        .map(|(image_id, levels)| {
            let maps = load_predictions(cfg, image_id, levels)?;
            let dets = decode_all(&maps, &params).map_err(|e| CliError::Input(format!("{image_id}: {e}")))?;
            Ok(dets
                .iter()
                .map(|d| {
                    json_line(&json!({
                        "image_id": image_id,
                        "score": json_num(d.score),
                        "level": d.level.name(),
                        "points": json_nums(&d.contour.to_flat()),
                    }))
                })
                .collect())
        })
        .collect::<CliResult<_>>()?;
    write_lines(out, &per_image.concat())
}

pub fn loss_cmd(cfg: &Config, targets_dir: &Path, preds_dir: &Path, out: Option<&Path>) -> CliResult<()> {
    let targets = list_tensor_dir(targets_dir)?;
    let preds = list_tensor_dir(preds_dir)?;
    let t_ids: Vec<&String> = targets.keys().collect();
    let p_ids: Vec<&String> = preds.keys().collect();
    if t_ids != p_ids {
        return Err(CliError::Input(format!(
            "{} and {} hold different image ids",
            targets_dir.display(),
            preds_dir.display()
        )));
    }
    let params = cfg.loss_params();
    let rows = targets
        .par_iter()
        .map(|(image_id, t_files)| {
            let t = load_targets(cfg, image_id, t_files)?;
            let p = load_predictions(cfg, image_id, &preds[image_id])?;
            image_loss(&t, &p, &params)
                .map(|b| (image_id.clone(), b))
                .map_err(|e| CliError::Input(format!("{image_id}: {e}")))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&fce_core::LossBreakdown) -> f64| rows.iter().map(|(_, b)| f(b)).sum::<f64>() / n;
    let images: Vec<Value> = rows
        .iter()
        .map(|(id, b)| {
            json!({
                "image_id": id,
                "l_tr": json_num(b.l_tr),
                "l_tcr": json_num(b.l_tcr),
                "l_reg": json_num(b.l_reg),
                "lambda": json_num(b.lambda),
                "total": json_num(b.total),
            })
        })
        .collect();
    let report = json!({
        "config": cfg.to_json(),
        "images": images,
        "mean": {
            "l_tr": json_num(mean(&|b| b.l_tr)),
            "l_tcr": json_num(mean(&|b| b.l_tcr)),
            "l_reg": json_num(mean(&|b| b.l_reg)),
            "total": json_num(mean(&|b| b.total)),
        },
    });
    write_lines(
        out,
        &[serde_json::to_string_pretty(&report).expect("JSON values always serialize")],
    )
}

fn read_detections(path: &Path) -> CliResult<BTreeMap<String, Vec<ScoredPolygon>>> {
    let mut out: BTreeMap<String, Vec<ScoredPolygon>> = BTreeMap::new();
    for (line, v) in read_json_lines(path)? {
        let image_id = string_field(path, line, &v, "image_id")?;
        let score = field(path, line, &v, "score")?
            .as_f64()
            .ok_or_else(|| CliError::Input(format!("{}: line {line}: score must be a number", path.display())))?;
        let contour = Contour::from_flat(&number_array(path, line, &v, "points")?)
            .map_err(|e| CliError::Input(format!("{}: line {line}: {e}", path.display())))?;
        let dets = out.entry(image_id).or_default();
        dets.push(ScoredPolygon {
            id: dets.len(),
            contour,
            score,
        });
    }
    Ok(out)
}

fn counts_json(c: &EvalCounts) -> serde_json::Map<String, Value> {
    let v = json!({
        "tp": c.tp,
        "fp": c.fp,
        "fn": c.fn_,
        "discarded": c.discarded,
        "precision": json_num(c.precision()),
        "recall": json_num(c.recall()),
        "hmean": json_num(c.hmean()),
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

pub fn eval_cmd(
    cfg: &Config,
    detections: &Path,
    annotations: &Path,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> CliResult<()> {
    let images = read_annotations(annotations)?;
    let mut dets = read_detections(detections)?;
    let known: HashSet<&str> = images.iter().map(|i| i.image_id.as_str()).collect();
    if let Some(unknown) = dets.keys().find(|id| !known.contains(id.as_str())) {
        return Err(CliError::Input(format!(
            "{}: detections for image {unknown:?}, which has no annotations",
            detections.display()
        )));
    }
    let jobs: Vec<(&AnnotatedImage, Vec<ScoredPolygon>)> = images
        .iter()
        .map(|img| (img, dets.remove(&img.image_id).unwrap_or_default()))
        .collect();
    let per_image: Vec<EvalCounts> = jobs
        .par_iter()
        .map(|(img, d)| evaluate(d, &img.instances, cfg.eval_iou, cfg.iou_supersample).counts)
        .collect();

    let mut total = EvalCounts::default();
    let mut rows = Vec::new();
    for ((img, _), c) in jobs.iter().zip(&per_image) {
        total += *c;
        let mut row = serde_json::Map::new();
        row.insert("image_id".into(), Value::String(img.image_id.clone()));
        row.extend(counts_json(c));
        rows.push(Value::Object(row));
    }
    let mut report = serde_json::Map::new();
    report.insert("config".into(), cfg.to_json());
    report.extend(counts_json(&total));
    report.insert("images".into(), Value::Array(rows));
    write_lines(
        out,
        &[serde_json::to_string_pretty(&Value::Object(report)).expect("JSON values always serialize")],
    )?;

    if let Some(path) = csv {
        write_lines(
            Some(path),
            &[
                cfg.header_line(),
                "precision,recall,hmean,tp,fp,fn,discarded".into(),
                format!(
                    "{},{},{},{},{},{},{}",
                    fmt_num(total.precision()),
                    fmt_num(total.recall()),
                    fmt_num(total.hmean()),
                    total.tp,
                    total.fp,
                    total.fn_,
                    total.discarded
                ),
            ],
        )?;
    }
    Ok(())
}

pub fn subset_cmd(cfg: &Config, input: &Path, out: Option<&Path>, whole_images: bool) -> CliResult<()> {
    let images = read_annotations(input)?;
    let rule: EndpointRule = cfg.subset_ends;
    let (mut kept_instances, mut candidates) = (0usize, 0usize);
    let mut selected = Vec::new();
    for img in &images {
        let cands: Vec<TextInstance> = img.instances.iter().filter(|i| !i.ignore).cloned().collect();
        candidates += cands.len();
        let picked = curved_subset_select_with(&cands, cfg.subset_threshold, rule);
        if picked.is_empty() {
            continue;
        }
        kept_instances += picked.len();
        selected.push(AnnotatedImage {
            instances: if whole_images { img.instances.clone() } else { picked },
            ..img.clone()
        });
    }
    eprintln!(
        "selected {kept_instances} of {candidates} instances in {} of {} images",
        selected.len(),
        images.len()
    );
    let mut w = output(out)?;
    write_jsonl(&selected, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn plot_cmd(input: &Path, detections: Option<&Path>, out_dir: &Path) -> CliResult<()> {
    let images = read_annotations(input)?;
    let mut dets = match detections {
        Some(p) => read_detections(p)?,
        None => BTreeMap::new(),
    };
    ensure_dir(out_dir)?;
    let jobs: Vec<(&AnnotatedImage, Vec<ScoredPolygon>)> = images
        .iter()
        .map(|img| (img, dets.remove(&img.image_id).unwrap_or_default()))
        .collect();
    jobs.par_iter().try_for_each(|(img, d)| -> CliResult<()> {
        check_file_stem(&img.image_id)?;
        let care: Vec<&[Point2]> = img
            .instances
            .iter()
            .filter(|i| !i.ignore)
            .map(|i| i.polygon.vertices())
            .collect();
        let dont: Vec<&[Point2]> = img
            .instances
            .iter()
            .filter(|i| i.ignore)
            .map(|i| i.polygon.vertices())
            .collect();
        let layers = [
            Layer {
                color: GT_COLOR,
                dashed: false,
                outlines: care,
            },
            Layer {
                color: GT_COLOR,
                dashed: true,
                outlines: dont,
            },
            Layer {
                color: PRED_COLOR,
                dashed: false,
                outlines: d.iter().map(|p| p.contour.vertices()).collect(),
            },
        ];
        write_file(
            &out_dir.join(format!("{}.svg", img.image_id)),
            svg::render(img.width, img.height, &layers).as_bytes(),
        )
    })
}

pub fn import_cmd(
    files: &[PathBuf],
    width: u32,
    height: u32,
    opts: &DelimitedOptions,
    out: Option<&Path>,
) -> CliResult<()> {
    let mut seen: HashMap<String, &Path> = HashMap::new();
    let mut images = Vec::new();
    for path in files {
        let image_id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Input(format!("{}: no usable file stem", path.display())))?
            .to_string();
        if let Some(prev) = seen.insert(image_id.clone(), path) {
            return Err(CliError::Input(format!(
                "{} and {} map to the same image id {image_id:?}",
                prev.display(),
                path.display()
            )));
        }
        let file = File::open(path).map_err(|e| CliError::at(path, e))?;
        let instances = parse_delimited(BufReader::new(file), opts).map_err(|e| CliError::at(path, e))?;
        images.push(AnnotatedImage {
            image_id,
            width,
            height,
            instances,
        });
    }
    let mut w = output(out)?;
    write_jsonl(&images, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn synth_cmd(
    corpus: fn(usize, u64) -> Vec<AnnotatedImage>,
    count: usize,
    seed: u64,
    out: Option<&Path>,
) -> CliResult<()> {
    let images = corpus(count, seed);
    let mut w = output(out)?;
    write_jsonl(&images, &mut w)?;
    w.flush()?;
    Ok(())
}
