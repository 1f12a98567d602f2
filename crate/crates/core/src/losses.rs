//! Reference loss functions: smooth-L1 on reconstructed contours,
//! cross-entropy with online hard example mining, and the combined objective.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::decode::{LevelPrediction, PredictionMaps};
use crate::error::{Error, Result};
use crate::fourier::{reconstruct, FourierSignature};
use crate::geometry::Point2;
use crate::targets::{LevelTargets, TargetMaps};

pub const SMOOTH_L1_BETA: f64 = 1.0;
pub const CE_EPSILON: f64 = 1e-7;
pub const OHEM_RATIO: usize = 3;
/// Negatives kept by OHEM when an image has no positive pixel.
pub const OHEM_EMPTY_FLOOR: usize = 100;
pub const TCR_WEIGHT: f64 = 1.0;
pub const TR_ONLY_WEIGHT: f64 = 0.5;

pub fn smooth_l1(x: f64, beta: f64) -> f64 {
    let a = x.abs();
    if a < beta {
        0.5 * x * x / beta
    } else {
        a - 0.5 * beta
    }
}

pub fn smooth_l1_grad(x: f64, beta: f64) -> f64 {
    if x.abs() < beta {
        x / beta
    } else {
        x.signum()
    }
}

/// Per-point regression term: smooth-L1 summed over the two axes.
pub fn point_loss(gt: Point2, pred: Point2) -> f64 {
    smooth_l1(gt.x - pred.x, SMOOTH_L1_BETA) + smooth_l1(gt.y - pred.y, SMOOTH_L1_BETA)
}

/// Sum with a fixed binary-tree reduction order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn check_alignment(gt: &[FourierSignature], pred: &[FourierSignature], in_tcr: &[bool], points: usize) -> Result<()> {
    if gt.len() != pred.len() || gt.len() != in_tcr.len() {
        return Err(Error::AlignmentMismatch(format!(
            "{} ground-truth, {} predicted signatures, {} membership flags",
            gt.len(),
            pred.len(),
            in_tcr.len()
        )));
    }
    if let Some(i) = (0..gt.len()).find(|&i| gt[i].degree() != pred[i].degree()) {
        return Err(Error::AlignmentMismatch(format!(
            "pixel {i}: degree {} vs {}",
            gt[i].degree(),
            pred[i].degree()
        )));
    }
    if points == 0 {
        return Err(Error::InvalidArgument("need at least one sample point".into()));
    }
    Ok(())
}

fn pixel_weight(in_tcr: bool) -> f64 {
    if in_tcr {
        TCR_WEIGHT
    } else {
        TR_ONLY_WEIGHT
    }
}

/// Regression loss over the text-region pixels.
///
/// Both signatures of each pixel are reconstructed at the same `points`
/// sample times; point pairs contribute [`point_loss`] weighted by 1 inside
/// the center region and 0.5 elsewhere. The total is divided by `points`
/// only, not by the pixel count.
pub fn regression_loss(
    gt: &[FourierSignature],
    pred: &[FourierSignature],
    in_tcr: &[bool],
    points: usize,
) -> Result<f64> {
    check_alignment(gt, pred, in_tcr, points)?;
    let per_pixel: Vec<f64> = (0..gt.len())
        .into_par_iter()
        .map(|i| {
            let g = reconstruct(&gt[i], points);
            let p = reconstruct(&pred[i], points);
            let terms: Vec<f64> = g.iter().zip(&p).map(|(&a, &b)| point_loss(a, b)).collect();
            pixel_weight(in_tcr[i]) * pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&per_pixel) / points as f64)
}

/// Analytic gradient of [`regression_loss`] with respect to every predicted
/// coefficient, in the flat `[u_{-K}, v_{-K}, ..., u_K, v_K]` layout.
pub fn regression_loss_grad(
    gt: &[FourierSignature],
    pred: &[FourierSignature],
    in_tcr: &[bool],
    points: usize,
) -> Result<Vec<Vec<f64>>> {
    check_alignment(gt, pred, in_tcr, points)?;
    let grads = (0..gt.len())
        .into_par_iter()
        .map(|i| {
            let g = reconstruct(&gt[i], points);
            let p = reconstruct(&pred[i], points);
            let scale = pixel_weight(in_tcr[i]) / points as f64;
            let mut grad = vec![0.0; pred[i].flat_len()];
            for (n, (a, b)) in g.iter().zip(&p).enumerate() {
                // d loss / d pred point, through the residual gt - pred.
                let dx = -smooth_l1_grad(a.x - b.x, SMOOTH_L1_BETA) * scale;
                let dy = -smooth_l1_grad(a.y - b.y, SMOOTH_L1_BETA) * scale;
                for (j, (k, _)) in pred[i].iter().enumerate() {
                    let (s, c) = (TAU * k as f64 * n as f64 / points as f64).sin_cos();
                    // x = u cos - v sin, y = u sin + v cos
                    grad[2 * j] += dx * c + dy * s;
                    grad[2 * j + 1] += -dx * s + dy * c;
                }
            }
            grad
        })
        .collect();
    Ok(grads)
}

/// Binary cross-entropy with the probability clamped to `[eps, 1 - eps]`.
pub fn cross_entropy(prob: f64, label: bool) -> f64 {
    let p = prob.clamp(CE_EPSILON, 1.0 - CE_EPSILON);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Online hard example mining.
///
/// Every positive is kept, plus the `ratio * #positives` negatives with the
/// largest loss (ties go to the lower index). Without positives the
/// [`OHEM_EMPTY_FLOOR`] hardest negatives are kept.
pub fn ohem_select(losses: &[f64], positive: &[bool], ratio: usize) -> Result<Vec<bool>> {
    if losses.len() != positive.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} losses vs {} labels",
            losses.len(),
            positive.len()
        )));
    }
    if ratio < 1 {
        return Err(Error::InvalidArgument("OHEM ratio must be at least 1".into()));
    }
    let mut selected = positive.to_vec();
    let n_pos = positive.iter().filter(|&&p| p).count();
    let mut negatives: Vec<usize> = (0..losses.len()).filter(|&i| !positive[i]).collect();
    let quota = if n_pos == 0 {
        OHEM_EMPTY_FLOOR
    } else {
        ratio.saturating_mul(n_pos)
    }
    .min(negatives.len());
    negatives.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    for &i in &negatives[..quota] {
        selected[i] = true;
    }
    Ok(selected)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l_tr: f64,
    pub l_tcr: f64,
    pub l_reg: f64,
    pub lambda: f64,
    pub total: f64,
}

/// `l_tr + l_tcr + lambda * l_reg`.
pub fn total_loss(l_tr: f64, l_tcr: f64, l_reg: f64, lambda: f64) -> Result<LossBreakdown> {
    for (name, v) in [("l_tr", l_tr), ("l_tcr", l_tcr), ("l_reg", l_reg), ("lambda", lambda)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
        if v < 0.0 {
            return Err(Error::InvalidArgument(format!("{name} = {v} is negative")));
        }
    }
    Ok(LossBreakdown {
        l_tr,
        l_tcr,
        l_reg,
        lambda,
        total: l_tr + l_tcr + lambda * l_reg,
    })
}

fn check_level(t: &LevelTargets, p: &LevelPrediction) -> Result<()> {
    if t.level != p.level || t.height != p.height || t.width != p.width {
        return Err(Error::ShapeMismatch(format!(
            "targets {} {}x{} vs predictions {} {}x{}",
            t.level, t.height, t.width, p.level, p.height, p.width
        )));
    }
    if p.channels() != t.channels() {
        return Err(Error::ChannelCountMismatch {
            expected: t.channels(),
            found: p.channels(),
        });
    }
    Ok(())
}

/// Mean text-region cross-entropy over OHEM-selected, non-ignored cells, and
/// mean center-region cross-entropy over text-region cells.
pub fn classification_loss(t: &LevelTargets, p: &LevelPrediction, ohem_ratio: usize) -> Result<(f64, f64)> {
    check_level(t, p)?;
    let eligible: Vec<usize> = (0..t.cells()).filter(|&c| t.ignore_mask[c] == 0).collect();
    let labels: Vec<bool> = eligible.iter().map(|&c| t.tr_mask[c] == 1).collect();
    let ce: Vec<f64> = eligible
        .iter()
        .zip(&labels)
        .map(|(&c, &l)| cross_entropy(p.tr_prob[c], l))
        .collect();
    let chosen = ohem_select(&ce, &labels, ohem_ratio)?;
    let picked: Vec<f64> = ce.iter().zip(&chosen).filter(|(_, &s)| s).map(|(&v, _)| v).collect();
    let l_tr = if picked.is_empty() {
        0.0
    } else {
        pairwise_sum(&picked) / picked.len() as f64
    };

    let tcr: Vec<f64> = (0..t.cells())
        .filter(|&c| t.tr_mask[c] == 1)
        .map(|c| cross_entropy(p.tcr_prob[c], t.tcr_mask[c] == 1))
        .collect();
    let l_tcr = if tcr.is_empty() {
        0.0
    } else {
        pairwise_sum(&tcr) / tcr.len() as f64
    };
    Ok((l_tr, l_tcr))
}

/// [`regression_loss`] over the text-region cells of one level.
pub fn level_regression_loss(t: &LevelTargets, p: &LevelPrediction, points: usize) -> Result<f64> {
    check_level(t, p)?;
    let cells: Vec<usize> = (0..t.cells()).filter(|&c| t.tr_mask[c] == 1).collect();
    let gt: Vec<FourierSignature> = cells.iter().map(|&c| t.cell_signature(c)).collect();
    let pred: Vec<FourierSignature> = cells.iter().map(|&c| p.cell_signature(c)).collect::<Result<_>>()?;
    let in_tcr: Vec<bool> = cells.iter().map(|&c| t.tcr_mask[c] == 1).collect();
    regression_loss(&gt, &pred, &in_tcr, points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub lambda: f64,
    pub ohem_ratio: usize,
    pub points: usize,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            ohem_ratio: OHEM_RATIO,
            points: 50,
        }
    }
}

/// Full objective for one image, summed over levels.
pub fn image_loss(targets: &TargetMaps, preds: &PredictionMaps, params: &LossParams) -> Result<LossBreakdown> {
    if targets.levels.len() != preds.levels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} target levels vs {} prediction levels",
            targets.levels.len(),
            preds.levels.len()
        )));
    }
    let (mut l_tr, mut l_tcr, mut l_reg) = (0.0, 0.0, 0.0);
    for (t, p) in targets.levels.iter().zip(&preds.levels) {
        let (tr, tcr) = classification_loss(t, p, params.ohem_ratio)?;
        l_tr += tr;
        l_tcr += tcr;
        l_reg += level_regression_loss(t, p, params.points)?;
    }
    total_loss(l_tr, l_tcr, l_reg, params.lambda)
}
