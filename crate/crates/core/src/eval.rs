//! IoU-based detection evaluation: precision, recall and h-mean.

use crate::annotations::TextInstance;
use crate::geometry::{polygon_iou, Contour};

pub const DEFAULT_EVAL_IOU: f64 = 0.5;

/// A scored polygon to evaluate; `id` is reported back in matches.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPolygon {
    pub id: usize,
    pub contour: Contour,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub detection: usize,
    pub gt_id: String,
    pub iou: f64,
}

/// Matching counts; adding counts from several images is exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Detections dropped for covering a do-not-care region.
    pub discarded: usize,
}

impl std::ops::AddAssign for EvalCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
        self.discarded += rhs.discarded;
    }
}

impl EvalCounts {
    /// Precision and recall default to 1 when their denominator is empty.
    pub fn precision(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio_or_one(self.tp, self.tp + self.fn_)
    }

    pub fn hmean(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p == 0.0 || r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub counts: EvalCounts,
    pub precision: f64,
    pub recall: f64,
    pub hmean: f64,
    pub matches: Vec<Match>,
}

impl EvalReport {
    pub fn from_counts(counts: EvalCounts, matches: Vec<Match>) -> Self {
        Self {
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            hmean: counts.hmean(),
            matches,
        }
    }
}

/// Greedy one-to-one matching in descending score order.
///
/// Each detection takes the unmatched non-ignored ground truth with the
/// highest IoU at or above `iou_thresh` (lower index on ties). A detection
/// with no such partner whose IoU with an ignored region reaches the
/// threshold is discarded rather than counted as a false positive.
pub fn evaluate(dets: &[ScoredPolygon], gts: &[TextInstance], iou_thresh: f64, supersample: usize) -> EvalReport {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));

    let mut taken = vec![false; gts.len()];
    let mut counts = EvalCounts::default();
    let mut matches = Vec::new();
    for &d in &order {
        let mut best: Option<(usize, f64)> = None;
        let mut ignored_hit = false;
        for (g, gt) in gts.iter().enumerate() {
            let iou = polygon_iou(&dets[d].contour, &gt.polygon, supersample);
            if iou < iou_thresh {
                continue;
            }
            if gt.ignore {
                ignored_hit = true;
            } else if !taken[g] && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        match best {
            Some((g, iou)) => {
                taken[g] = true;
                counts.tp += 1;
                matches.push(Match {
                    detection: dets[d].id,
                    gt_id: gts[g].id.clone(),
                    iou,
                });
            }
            None if ignored_hit => counts.discarded += 1,
            None => counts.fp += 1,
        }
    }
    counts.fn_ = gts.iter().zip(&taken).filter(|(gt, &t)| !gt.ignore && !t).count();
    EvalReport::from_counts(counts, matches)
}
