//! How well degree-K signatures reproduce annotated contours.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{fourier_coefficients, full_spectrum, reconstruct_contour, tail_energy};
use crate::geometry::{polygon_iou, resample_equidistant, Contour};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityParams {
    pub samples: usize,
    pub points: usize,
    pub supersample: usize,
}

impl Default for FidelityParams {
    fn default() -> Self {
        Self {
            samples: 400,
            points: 50,
            supersample: 4,
        }
    }
}

/// Per-contour results, one entry per requested degree.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFidelity {
    pub ious: Vec<f64>,
    pub l2_errors: Vec<f64>,
    pub reconstructions: Vec<Option<Contour>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityRow {
    pub degree: usize,
    pub mean_iou: f64,
    pub median_iou: f64,
    pub mean_l2: f64,
    pub count: usize,
}

/// Embeds every contour at each degree and compares the reconstruction with
/// the original polygon. A reconstruction that collapses counts as IoU 0.
pub fn fidelity_samples(
    contours: &[Contour],
    degrees: &[usize],
    params: &FidelityParams,
) -> Result<Vec<SampleFidelity>> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("no degrees requested".into()));
    }
    if let Some(&k) = degrees.iter().find(|&&k| 2 * k + 1 > params.samples) {
        return Err(Error::DegreeTooLarge {
            degree: k,
            samples: params.samples,
        });
    }
    contours
        .par_iter()
        .map(|c| {
            let pts = resample_equidistant(c, params.samples)?;
            let spectrum = full_spectrum(&pts);
            let mut out = SampleFidelity {
                ious: Vec::with_capacity(degrees.len()),
                l2_errors: Vec::with_capacity(degrees.len()),
                reconstructions: Vec::with_capacity(degrees.len()),
            };
            for &k in degrees {
                let sig = fourier_coefficients(&pts, k)?;
                let recon = reconstruct_contour(&sig, params.points).ok();
                out.ious
                    .push(recon.as_ref().map_or(0.0, |r| polygon_iou(c, r, params.supersample)));
                out.l2_errors.push(tail_energy(&spectrum, k));
                out.reconstructions.push(recon);
            }
            Ok(out)
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    }
}

pub fn summarize(samples: &[SampleFidelity], degrees: &[usize]) -> Vec<FidelityRow> {
    let n = samples.len();
    degrees
        .iter()
        .enumerate()
        .map(|(j, &degree)| {
            let mut ious: Vec<f64> = samples.iter().map(|s| s.ious[j]).collect();
            let mean_iou = ious.iter().sum::<f64>() / n as f64;
            let mean_l2 = samples.iter().map(|s| s.l2_errors[j]).sum::<f64>() / n as f64;
            FidelityRow {
                degree,
                mean_iou,
                median_iou: median(&mut ious),
                mean_l2,
                count: n,
            }
        })
        .collect()
}
