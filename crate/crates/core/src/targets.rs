//! Per-level training targets.
//!
//! Every map is laid out on a grid whose cell `(row, col)` sits at image
//! pixel `((col + 0.5) * stride, (row + 0.5) * stride)`. Regression channels
//! hold the instance signature recentred on that pixel, in image-pixel units.

use std::fmt;
use std::str::FromStr;

use crate::annotations::{AnnotatedImage, TextInstance};
use crate::error::{Error, Result};
use crate::fourier::{embed, recenter, FourierSignature};
use crate::geometry::{point_in_polygon, shrink_polygon, signed_area, Contour, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    P3,
    P4,
    P5,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::P3, Level::P4, Level::P5];

    pub fn name(self) -> &'static str {
        match self {
            Level::P3 => "P3",
            Level::P4 => "P4",
            Level::P5 => "P5",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P3" | "p3" => Ok(Level::P3),
            "P4" | "p4" => Ok(Level::P4),
            "P5" | "p5" => Ok(Level::P5),
            _ => Err(Error::InvalidArgument(format!("unknown pyramid level {s:?}"))),
        }
    }
}

/// Stride and text-scale range handled by one pyramid level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSpec {
    pub level: Level,
    pub stride: u32,
    /// Inclusive range of `longest instance side / longest image side`.
    pub lo: f64,
    pub hi: f64,
}

impl LevelSpec {
    pub fn new(level: Level, stride: u32, lo: f64, hi: f64) -> Result<Self> {
        if stride == 0 || !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "level {level}: need stride > 0 and 0 <= lo < hi <= 1, got stride {stride}, [{lo}, {hi}]"
            )));
        }
        Ok(Self { level, stride, lo, hi })
    }

    pub fn contains(&self, scale: f64) -> bool {
        self.lo <= scale && scale <= self.hi
    }
}

/// P3/P4/P5 at strides 8/16/32 with overlapping ranges [0, 0.4], [0.3, 0.7], [0.6, 1].
pub fn default_level_specs() -> Vec<LevelSpec> {
    vec![
        LevelSpec {
            level: Level::P3,
            stride: 8,
            lo: 0.0,
            hi: 0.4,
        },
        LevelSpec {
            level: Level::P4,
            stride: 16,
            lo: 0.3,
            hi: 0.7,
        },
        LevelSpec {
            level: Level::P5,
            stride: 32,
            lo: 0.6,
            hi: 1.0,
        },
    ]
}

/// Checks each spec's range and that strides grow with the level.
pub fn validate_level_specs(specs: &[LevelSpec]) -> Result<()> {
    for s in specs {
        LevelSpec::new(s.level, s.stride, s.lo, s.hi)?;
    }
    for w in specs.windows(2) {
        if w[1].level <= w[0].level || w[1].stride <= w[0].stride {
            return Err(Error::InvalidArgument(
                "level specs must be ordered with ascending strides".into(),
            ));
        }
    }
    Ok(())
}

pub fn instance_scale(polygon: &Contour, width: u32, height: u32) -> f64 {
    let (lo, hi) = polygon.bounding_box();
    (hi.x - lo.x).max(hi.y - lo.y) / width.max(height) as f64
}

/// Levels whose scale range contains the instance scale.
pub fn assign_levels(inst: &TextInstance, width: u32, height: u32, specs: &[LevelSpec]) -> Vec<Level> {
    let scale = instance_scale(&inst.polygon, width, height);
    specs.iter().filter(|s| s.contains(scale)).map(|s| s.level).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetParams {
    pub degree: usize,
    pub samples: usize,
    pub shrink_factor: f64,
}

impl Default for TargetParams {
    fn default() -> Self {
        Self {
            degree: 5,
            samples: 400,
            shrink_factor: 0.3,
        }
    }
}

pub fn grid_size(width: u32, height: u32, stride: u32) -> (usize, usize) {
    (height.div_ceil(stride) as usize, width.div_ceil(stride) as usize)
}

pub fn cell_center(row: usize, col: usize, stride: u32) -> Point2 {
    Point2::new((col as f64 + 0.5) * stride as f64, (row as f64 + 0.5) * stride as f64)
}

/// Targets for one pyramid level. Masks are `height * width` row-major;
/// `regression` is channel-major, `channels * height * width`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTargets {
    pub level: Level,
    pub stride: u32,
    pub height: usize,
    pub width: usize,
    pub degree: usize,
    pub tr_mask: Vec<u8>,
    pub tcr_mask: Vec<u8>,
    /// Cells covered by do-not-care instances.
    pub ignore_mask: Vec<u8>,
    pub weight: Vec<f64>,
    pub regression: Vec<f64>,
}

impl LevelTargets {
    pub fn empty(level: Level, stride: u32, height: usize, width: usize, degree: usize) -> Self {
        let cells = height * width;
        Self {
            level,
            stride,
            height,
            width,
            degree,
            tr_mask: vec![0; cells],
            tcr_mask: vec![0; cells],
            ignore_mask: vec![0; cells],
            weight: vec![0.0; cells],
            regression: vec![0.0; 2 * (2 * degree + 1) * cells],
        }
    }

    pub fn channels(&self) -> usize {
        2 * (2 * self.degree + 1)
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    /// Regression vector stored at a cell (flat signature layout).
    pub fn cell_vector(&self, cell: usize) -> Vec<f64> {
        let cells = self.cells();
        (0..self.channels())
            .map(|ch| self.regression[ch * cells + cell])
            .collect()
    }

    pub fn cell_signature(&self, cell: usize) -> FourierSignature {
        FourierSignature::from_flat(&self.cell_vector(cell)).expect("channel count is 2(2K+1)")
    }

    fn set_cell_vector(&mut self, cell: usize, values: &[f64]) {
        let cells = self.cells();
        for (ch, &v) in values.iter().enumerate() {
            self.regression[ch * cells + cell] = v;
        }
    }

    /// Inclusive cell range whose centres may fall inside `polygon`.
    fn cell_window(&self, polygon: &Contour) -> Option<(usize, usize, usize, usize)> {
        let (lo, hi) = polygon.bounding_box();
        let s = self.stride as f64;
        let r0 = ((lo.y / s - 0.5).ceil().max(0.0)) as usize;
        let c0 = ((lo.x / s - 0.5).ceil().max(0.0)) as usize;
        let r1 = (hi.y / s - 0.5).floor();
        let c1 = (hi.x / s - 0.5).floor();
        if r1 < 0.0 || c1 < 0.0 {
            return None;
        }
        let r1 = (r1 as usize).min(self.height.checked_sub(1)?);
        let c1 = (c1 as usize).min(self.width.checked_sub(1)?);
        (r0 <= r1 && c0 <= c1).then_some((r0, r1, c0, c1))
    }
}

/// Targets for every level of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMaps {
    pub image_id: String,
    pub levels: Vec<LevelTargets>,
    /// Instances left out because their geometry could not be embedded.
    pub skipped: Vec<(String, String)>,
}

struct Prepared<'a> {
    inst: &'a TextInstance,
    levels: Vec<Level>,
    signature: FourierSignature,
    center_region: Contour,
    area: f64,
}

fn prepare<'a>(
    inst: &'a TextInstance,
    img: &AnnotatedImage,
    specs: &[LevelSpec],
    params: &TargetParams,
) -> Result<Prepared<'a>> {
    Ok(Prepared {
        inst,
        levels: assign_levels(inst, img.width, img.height, specs),
        signature: embed(&inst.polygon, params.degree, params.samples)?,
        center_region: shrink_polygon(&inst.polygon, params.shrink_factor)?,
        area: signed_area(&inst.polygon).abs(),
    })
}

/// Builds TR/TCR masks, weights and recentred regression targets.
///
/// Where instances overlap, the smaller one owns the cell. Cells inside
/// ignored instances are cleared and flagged in `ignore_mask`. Instances that
/// fail to embed are recorded in `skipped` instead of aborting the image.
pub fn generate_targets(img: &AnnotatedImage, specs: &[LevelSpec], params: &TargetParams) -> Result<TargetMaps> {
    validate_level_specs(specs)?;
    if 2 * params.degree + 1 > params.samples {
        return Err(Error::DegreeTooLarge {
            degree: params.degree,
            samples: params.samples,
        });
    }

    let mut skipped = Vec::new();
    let mut text = Vec::new();
    for inst in img.instances.iter().filter(|i| !i.ignore) {
        match prepare(inst, img, specs, params) {
            Ok(p) => text.push(p),
            Err(e) => skipped.push((inst.id.clone(), e.to_string())),
        }
    }
    // Larger first so smaller instances overwrite them.
    text.sort_by(|a, b| b.area.total_cmp(&a.area));

    let mut levels = Vec::with_capacity(specs.len());
    for spec in specs {
        let (h, w) = grid_size(img.width, img.height, spec.stride);
        let mut maps = LevelTargets::empty(spec.level, spec.stride, h, w, params.degree);

        for p in text.iter().filter(|p| p.levels.contains(&spec.level)) {
            let Some((r0, r1, c0, c1)) = maps.cell_window(&p.inst.polygon) else {
                continue;
            };
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let center = cell_center(row, col, spec.stride);
                    if !point_in_polygon(center, &p.inst.polygon) {
                        continue;
                    }
                    let cell = row * w + col;
                    let in_center = point_in_polygon(center, &p.center_region);
                    maps.tr_mask[cell] = 1;
                    maps.tcr_mask[cell] = in_center as u8;
                    maps.weight[cell] = if in_center { 1.0 } else { 0.5 };
                    maps.set_cell_vector(cell, &recenter(&p.signature, center).to_flat());
                }
            }
        }

        let zeros = vec![0.0; maps.channels()];
        for inst in img.instances.iter().filter(|i| i.ignore) {
            if !assign_levels(inst, img.width, img.height, specs).contains(&spec.level) {
                continue;
            }
            let Some((r0, r1, c0, c1)) = maps.cell_window(&inst.polygon) else {
                continue;
            };
            for row in r0..=r1 {
                for col in c0..=c1 {
                    if point_in_polygon(cell_center(row, col, spec.stride), &inst.polygon) {
                        let cell = row * w + col;
                        maps.tr_mask[cell] = 0;
                        maps.tcr_mask[cell] = 0;
                        maps.ignore_mask[cell] = 1;
                        maps.weight[cell] = 0.0;
                        maps.set_cell_vector(cell, &zeros);
                    }
                }
            }
        }
        levels.push(maps);
    }

    Ok(TargetMaps {
        image_id: img.image_id.clone(),
        levels,
        skipped,
    })
}
