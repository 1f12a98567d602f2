//! Detection decoding: fused score map, per-cell inverse transform and
//! polygon non-maximum suppression.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{recenter, reconstruct_contour, FourierSignature};
use crate::geometry::{polygon_iou, Contour, Point2};
use crate::targets::{cell_center, Level, TargetMaps};

/// Network outputs for one level. Probability maps are `height * width`
/// row-major; `regression` is channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPrediction {
    pub level: Level,
    pub stride: u32,
    pub height: usize,
    pub width: usize,
    pub tr_prob: Vec<f64>,
    pub tcr_prob: Vec<f64>,
    pub regression: Vec<f64>,
}

impl LevelPrediction {
    /// Validates map sizes, the `[0, 1]` probability range and a
    /// `2(2K+1)` channel count.
    pub fn new(
        level: Level,
        stride: u32,
        height: usize,
        width: usize,
        tr_prob: Vec<f64>,
        tcr_prob: Vec<f64>,
        regression: Vec<f64>,
    ) -> Result<Self> {
        let cells = height * width;
        if tr_prob.len() != cells || tcr_prob.len() != cells {
            return Err(Error::ShapeMismatch(format!(
                "{level}: probability maps must have {cells} cells"
            )));
        }
        for (name, map) in [("tr", &tr_prob), ("tcr", &tcr_prob)] {
            if let Some(v) = map.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidArgument(format!(
                    "{level}: {name} probability {v} outside [0, 1]"
                )));
            }
        }
        let pred = Self {
            level,
            stride,
            height,
            width,
            tr_prob,
            tcr_prob,
            regression,
        };
        pred.degree()?;
        Ok(pred)
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn channels(&self) -> usize {
        if self.cells() == 0 {
            0
        } else {
            self.regression.len() / self.cells()
        }
    }

    /// Fourier degree implied by the regression channel count.
    pub fn degree(&self) -> Result<usize> {
        let cells = self.cells();
        if cells == 0 {
            return Ok(0);
        }
        let ch = self.regression.len() / cells;
        if !self.regression.len().is_multiple_of(cells) || ch < 2 || ch % 4 != 2 {
            return Err(Error::ChannelCountMismatch {
                expected: 2 * (2 * (ch / 4) + 1),
                found: ch,
            });
        }
        Ok((ch / 2 - 1) / 2)
    }

    pub fn cell_vector(&self, cell: usize) -> Vec<f64> {
        let cells = self.cells();
        (0..self.channels())
            .map(|ch| self.regression[ch * cells + cell])
            .collect()
    }

    pub fn cell_signature(&self, cell: usize) -> Result<FourierSignature> {
        FourierSignature::from_flat(&self.cell_vector(cell))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMaps {
    pub image_id: String,
    pub levels: Vec<LevelPrediction>,
}

/// Perfect predictions: probabilities equal to the masks, regression copied.
pub fn ideal_predictions(targets: &TargetMaps) -> PredictionMaps {
    PredictionMaps {
        image_id: targets.image_id.clone(),
        levels: targets
            .levels
            .iter()
            .map(|t| LevelPrediction {
                level: t.level,
                stride: t.stride,
                height: t.height,
                width: t.width,
                tr_prob: t.tr_mask.iter().map(|&v| v as f64).collect(),
                tcr_prob: t.tcr_mask.iter().map(|&v| v as f64).collect(),
                regression: t.regression.clone(),
            })
            .collect(),
    }
}

/// Cell a detection was decoded from; orders candidates with equal scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellOrigin {
    pub level: Level,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub contour: Contour,
    pub score: f64,
    pub level: Level,
    pub origin: CellOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeParams {
    pub score_thresh: f64,
    pub nms_iou: f64,
    /// Reconstruction points per contour.
    pub points: usize,
    pub iou_supersample: usize,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            score_thresh: 0.3,
            nms_iou: 0.1,
            points: 50,
            iou_supersample: 4,
        }
    }
}

/// Pixel-wise product of the TR and TCR maps.
pub fn score_map(tr_prob: &[f64], tcr_prob: &[f64]) -> Result<Vec<f64>> {
    if tr_prob.len() != tcr_prob.len() {
        return Err(Error::ShapeMismatch(format!(
            "tr map has {} cells, tcr map {}",
            tr_prob.len(),
            tcr_prob.len()
        )));
    }
    Ok(tr_prob.iter().zip(tcr_prob).map(|(a, b)| a * b).collect())
}

/// One detection per cell whose fused score reaches `score_thresh`, scanned
/// row-major. Cells whose signature reconstructs to a degenerate polygon are
/// dropped.
pub fn decode_level(pred: &LevelPrediction, params: &DecodeParams) -> Result<Vec<Detection>> {
    pred.degree()?;
    let scores = score_map(&pred.tr_prob, &pred.tcr_prob)?;
    let mut out = Vec::new();
    for (cell, &score) in scores.iter().enumerate() {
        if score < params.score_thresh {
            continue;
        }
        let (row, col) = (cell / pred.width, cell % pred.width);
        let c = cell_center(row, col, pred.stride);
        let sig = recenter(&pred.cell_signature(cell)?, Point2::new(-c.x, -c.y));
        let Ok(contour) = reconstruct_contour(&sig, params.points) else {
            continue;
        };
        out.push(Detection {
            contour,
            score: score.clamp(0.0, 1.0),
            level: pred.level,
            origin: CellOrigin {
                level: pred.level,
                row,
                col,
            },
        });
    }
    Ok(out)
}

fn by_score_then_origin(a: &Detection, b: &Detection) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.origin.cmp(&b.origin))
}

/// Greedy suppression: highest score first, keep a candidate only if its IoU
/// with every kept detection stays below `iou_thresh`.
pub fn poly_nms(mut dets: Vec<Detection>, iou_thresh: f64, supersample: usize) -> Vec<Detection> {
    dets.sort_by(by_score_then_origin);
    let mut kept: Vec<Detection> = Vec::new();
    for d in dets {
        if kept
            .iter()
            .all(|k| polygon_iou(&k.contour, &d.contour, supersample) < iou_thresh)
        {
            kept.push(d);
        }
    }
    kept
}

/// Decodes every level, then runs one NMS pass across levels.
pub fn decode_all(maps: &PredictionMaps, params: &DecodeParams) -> Result<Vec<Detection>> {
    let per_level: Vec<Vec<Detection>> = maps
        .levels
        .par_iter()
        .map(|l| decode_level(l, params))
        .collect::<Result<_>>()?;
    let candidates = per_level.into_iter().flatten().collect();
    Ok(poly_nms(candidates, params.nms_iou, params.iou_supersample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{AnnotatedImage, TextInstance};
    use crate::targets::{default_level_specs, generate_targets, LevelSpec, TargetParams};

    fn square(x0: f64, y0: f64, side: f64) -> Contour {
        Contour::from_flat(&[x0, y0, x0 + side, y0, x0 + side, y0 + side, x0, y0 + side]).unwrap()
    }

    fn det(contour: Contour, score: f64, row: usize) -> Detection {
        Detection {
            contour,
            score,
            level: Level::P3,
            origin: CellOrigin {
                level: Level::P3,
                row,
                col: 0,
            },
        }
    }

    fn circle_image() -> (AnnotatedImage, Contour) {
        let poly = Contour::new(
            (0..60)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / 60.0;
                    Point2::new(100.0 + 45.0 * a.cos(), 90.0 + 45.0 * a.sin())
                })
                .collect(),
        )
        .unwrap();
        let img = AnnotatedImage {
            image_id: "c".into(),
            width: 200,
            height: 200,
            instances: vec![TextInstance {
                id: "0".into(),
                polygon: poly.clone(),
                ignore: false,
            }],
        };
        (img, poly)
    }

    #[test]
    fn score_map_examples() {
        assert_eq!(
            score_map(&[1.0, 0.7, 0.8], &[1.0, 0.0, 0.5]).unwrap(),
            vec![1.0, 0.0, 0.8 * 0.5]
        );
        assert!((0.8f64 * 0.5 - 0.4).abs() < 1e-15);
        assert!(matches!(score_map(&[1.0], &[1.0, 1.0]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn prediction_validation() {
        assert!(LevelPrediction::new(Level::P3, 8, 1, 2, vec![0.5, 1.5], vec![0.0, 0.0], vec![0.0; 12]).is_err());
        assert!(matches!(
            LevelPrediction::new(Level::P3, 8, 1, 2, vec![0.5, 0.5], vec![0.0, 0.0], vec![0.0; 8]),
            Err(Error::ChannelCountMismatch { .. })
        ));
        assert!(LevelPrediction::new(Level::P3, 8, 1, 2, vec![0.5, 0.5], vec![0.0, 0.0], vec![0.0; 12]).is_ok());
    }

    #[test]
    fn every_center_cell_recovers_the_instance() {
        let (img, poly) = circle_image();
        let specs = vec![LevelSpec::new(Level::P3, 8, 0.0, 1.0).unwrap()];
        let targets = generate_targets(&img, &specs, &TargetParams::default()).unwrap();
        let preds = ideal_predictions(&targets);
        let dets = decode_level(&preds.levels[0], &DecodeParams::default()).unwrap();
        let tcr_cells = targets.levels[0].tcr_mask.iter().filter(|&&v| v == 1).count();
        assert_eq!(dets.len(), tcr_cells);
        for d in &dets {
            assert!(polygon_iou(&d.contour, &poly, 8) >= 0.99);
            assert_eq!(d.contour.len(), 50);
            assert_eq!(d.score, 1.0);
        }
    }

    #[test]
    fn thresholding() {
        let (img, _) = circle_image();
        let specs = vec![LevelSpec::new(Level::P3, 8, 0.0, 1.0).unwrap()];
        let targets = generate_targets(&img, &specs, &TargetParams::default()).unwrap();
        let mut preds = ideal_predictions(&targets);
        let level = &mut preds.levels[0];
        level.tr_prob.iter_mut().for_each(|v| *v *= 0.2);
        assert!(decode_level(level, &DecodeParams::default()).unwrap().is_empty());

        let center = 11 * level.width + 12;
        level.tr_prob[center] = 0.9;
        let dets = decode_level(level, &DecodeParams::default()).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(
            dets[0].origin,
            CellOrigin {
                level: Level::P3,
                row: 11,
                col: 12
            }
        );
        assert!((dets[0].score - 0.9).abs() < 1e-15);
    }

    #[test]
    fn nms_examples() {
        let a = square(0.0, 0.0, 10.0);
        assert_eq!(poly_nms(vec![det(a.clone(), 0.5, 0)], 0.1, 4).len(), 1);

        let kept = poly_nms(vec![det(a.clone(), 0.8, 0), det(a.clone(), 0.9, 1)], 0.1, 4);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);

        let b = square(50.0, 50.0, 10.0);
        assert_eq!(poly_nms(vec![det(a, 0.8, 0), det(b, 0.9, 1)], 0.1, 4).len(), 2);
        assert!(poly_nms(vec![], 0.1, 4).is_empty());
    }

    #[test]
    fn nms_ties_prefer_earlier_cells() {
        let a = square(0.0, 0.0, 10.0);
        let kept = poly_nms(vec![det(a.clone(), 0.7, 5), det(a, 0.7, 2)], 0.1, 4);
        assert_eq!(kept[0].origin.row, 2);
    }

    #[test]
    fn decode_all_merges_levels() {
        let (img, poly) = circle_image();
        // Two overlapping levels both see the instance.
        let specs = vec![
            LevelSpec::new(Level::P3, 8, 0.0, 1.0).unwrap(),
            LevelSpec::new(Level::P4, 16, 0.0, 1.0).unwrap(),
        ];
        let targets = generate_targets(&img, &specs, &TargetParams::default()).unwrap();
        let preds = ideal_predictions(&targets);
        let params = DecodeParams::default();
        assert!(!decode_level(&preds.levels[0], &params).unwrap().is_empty());
        assert!(!decode_level(&preds.levels[1], &params).unwrap().is_empty());
        let dets = decode_all(&preds, &params).unwrap();
        assert_eq!(dets.len(), 1);
        assert!(polygon_iou(&dets[0].contour, &poly, 8) >= 0.99);

        let single = generate_targets(&img, &default_level_specs(), &TargetParams::default()).unwrap();
        assert_eq!(decode_all(&ideal_predictions(&single), &params).unwrap().len(), 1);

        let empty = AnnotatedImage {
            instances: vec![],
            ..img
        };
        let targets = generate_targets(&empty, &default_level_specs(), &TargetParams::default()).unwrap();
        assert!(decode_all(&ideal_predictions(&targets), &params).unwrap().is_empty());
    }
}
