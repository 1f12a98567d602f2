//! Seeded synthetic annotation corpora for benchmarks and round-trip checks.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotations::{AnnotatedImage, TextInstance};
use crate::geometry::{Contour, Point2};

/// A band of constant thickness around a sinusoidal baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ribbon {
    /// Baseline start.
    pub origin: Point2,
    pub length: f64,
    pub thickness: f64,
    pub amplitude: f64,
    /// Baseline periods over the full length.
    pub periods: f64,
    pub phase: f64,
    /// Baseline direction in radians.
    pub angle: f64,
    /// Annotation points on each long side.
    pub points_per_side: usize,
}

impl Ribbon {
    fn baseline(&self, s: f64) -> (Point2, Point2) {
        let w = TAU * self.periods / self.length;
        let y = self.amplitude * (w * s + self.phase).sin();
        let dy = self.amplitude * w * (w * s + self.phase).cos();
        let norm = dy.hypot(1.0);
        let (sin, cos) = self.angle.sin_cos();
        let rot = |p: Point2| Point2::new(p.x * cos - p.y * sin, p.x * sin + p.y * cos);
        (
            self.origin + rot(Point2::new(s, y)),
            rot(Point2::new(-dy / norm, 1.0 / norm)),
        )
    }

    /// Upper side left to right, then lower side right to left, the way
    /// curved-text datasets order their points.
    pub fn polygon(&self) -> Contour {
        let m = self.points_per_side.max(2);
        let half = 0.5 * self.thickness;
        let samples: Vec<(Point2, Point2)> = (0..m)
            .map(|i| self.baseline(self.length * i as f64 / (m - 1) as f64))
            .collect();
        let mut pts: Vec<Point2> = samples.iter().map(|&(p, n)| p - n * half).collect();
        pts.extend(samples.iter().rev().map(|&(p, n)| p + n * half));
        Contour::new(pts).expect("ribbon polygons are non-degenerate")
    }
}

pub fn regular_polygon(center: Point2, radius: f64, sides: usize, rotation: f64) -> Contour {
    Contour::new(
        (0..sides)
            .map(|i| {
                let a = rotation + TAU * i as f64 / sides as f64;
                center + Point2::new(a.cos(), a.sin()) * radius
            })
            .collect(),
    )
    .expect("radius is positive")
}

/// Axis-aligned rectangle with `per_side` evenly spaced points on each long
/// edge (all of them collinear).
pub fn rectangle(x0: f64, y0: f64, w: f64, h: f64, per_side: usize) -> Contour {
    let m = per_side.max(2);
    let mut pts: Vec<Point2> = (0..m)
        .map(|i| Point2::new(x0 + w * i as f64 / (m - 1) as f64, y0))
        .collect();
    pts.extend(
        (0..m)
            .rev()
            .map(|i| Point2::new(x0 + w * i as f64 / (m - 1) as f64, y0 + h)),
    );
    Contour::new(pts).expect("rectangle is non-degenerate")
}

fn single(image_id: String, width: u32, height: u32, polygon: Contour) -> AnnotatedImage {
    AnnotatedImage {
        image_id,
        width,
        height,
        instances: vec![TextInstance {
            id: "0".into(),
            polygon,
            ignore: false,
        }],
    }
}

/// Curved-text-like ribbons, one per 640x640 image, annotated with 7 points
/// per side.
pub fn ribbon_corpus(count: usize, seed: u64) -> Vec<AnnotatedImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let length = rng.gen_range(260.0..420.0);
            let ribbon = Ribbon {
                origin: Point2::new(320.0 - 0.5 * length, 320.0),
                length,
                thickness: rng.gen_range(50.0..80.0),
                amplitude: rng.gen_range(10.0..45.0),
                periods: rng.gen_range(0.4..0.9),
                phase: rng.gen_range(0.0..TAU),
                angle: rng.gen_range(-0.3..0.3),
                points_per_side: 7,
            };
            single(format!("ribbon_{i:03}"), 640, 640, ribbon.polygon())
        })
        .collect()
}

/// Circles sampled as 120-gons.
pub fn circle_corpus(count: usize, seed: u64) -> Vec<AnnotatedImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let r = rng.gen_range(40.0..150.0);
            let c = Point2::new(rng.gen_range(160.0..480.0), rng.gen_range(160.0..480.0));
            single(format!("circle_{i:03}"), 640, 640, regular_polygon(c, r, 120, 0.0))
        })
        .collect()
}

/// Axis-aligned squares with 4 vertices.
pub fn square_corpus(count: usize, seed: u64) -> Vec<AnnotatedImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let side = rng.gen_range(80.0..300.0);
            let x0 = rng.gen_range(10.0..(630.0 - side));
            let y0 = rng.gen_range(10.0..(630.0 - side));
            single(format!("square_{i:03}"), 640, 640, rectangle(x0, y0, side, side, 2))
        })
        .collect()
}

/// 14-point rectangles (7 collinear points per long side).
pub fn rectangle_corpus(count: usize, seed: u64) -> Vec<AnnotatedImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let w = rng.gen_range(150.0..400.0);
            let h = rng.gen_range(30.0..90.0);
            single(
                format!("rect_{i:03}"),
                640,
                640,
                rectangle(
                    rng.gen_range(20.0..(620.0 - w)),
                    rng.gen_range(20.0..(620.0 - h)),
                    w,
                    h,
                    7,
                ),
            )
        })
        .collect()
}

/// Strongly bent thin bands with 4 annotation points per side; deleting one
/// of the middle points changes their area by far more than 7%.
pub fn curved_ribbon_corpus(count: usize, seed: u64) -> Vec<AnnotatedImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let ribbon = Ribbon {
                origin: Point2::new(100.0, 320.0),
                length: rng.gen_range(300.0..420.0),
                thickness: rng.gen_range(18.0..30.0),
                amplitude: rng.gen_range(90.0..130.0),
                periods: rng.gen_range(0.9..1.1),
                phase: rng.gen_range(-0.2..0.2),
                angle: 0.0,
                points_per_side: 4,
            };
            single(format!("curved_{i:03}"), 640, 640, ribbon.polygon())
        })
        .collect()
}

/// Images for the decode/evaluate round trip: several well-separated
/// instances per image at scales that hit every level, including the
/// P3/P4 and P4/P5 overlap bands, plus occasional do-not-care regions.
pub fn pipeline_corpus(count: usize, seed: u64) -> Vec<AnnotatedImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 512.0;
    (0..count)
        .map(|i| {
            let mut instances = Vec::new();
            let mut push = |poly: Contour, ignore: bool| {
                let id = instances.len().to_string();
                instances.push(TextInstance {
                    id,
                    polygon: poly,
                    ignore,
                });
            };
            match i % 4 {
                // One large instance spanning the P4/P5 overlap.
                0 => {
                    let length = rng.gen_range(0.62..0.68) * size;
                    let ribbon = Ribbon {
                        origin: Point2::new(0.5 * (size - length), 0.5 * size),
                        length,
                        thickness: rng.gen_range(90.0..120.0),
                        amplitude: rng.gen_range(10.0..30.0),
                        periods: 0.5,
                        phase: rng.gen_range(0.0..PI),
                        angle: 0.0,
                        points_per_side: 7,
                    };
                    push(ribbon.polygon(), false);
                }
                // Two instances in the P3/P4 overlap, stacked vertically.
                1 => {
                    for row in 0..2 {
                        let w = rng.gen_range(0.32..0.38) * size;
                        let h = rng.gen_range(60.0..80.0);
                        let y0 = 60.0 + row as f64 * 220.0;
                        push(rectangle(rng.gen_range(20.0..(size - w - 20.0)), y0, w, h, 7), false);
                    }
                    push(regular_polygon(Point2::new(420.0, 450.0), 30.0, 24, 0.0), true);
                }
                // Small circles on P3 only.
                2 => {
                    for (cx, cy) in [(110.0, 110.0), (390.0, 130.0), (250.0, 380.0)] {
                        let r = rng.gen_range(35.0..50.0);
                        push(regular_polygon(Point2::new(cx, cy), r, 40, 0.0), false);
                    }
                }
                // A mid-size ribbon on P4 plus a small square on P3.
                _ => {
                    let length = rng.gen_range(0.45..0.55) * size;
                    let ribbon = Ribbon {
                        origin: Point2::new(40.0, 150.0),
                        length,
                        thickness: rng.gen_range(60.0..80.0),
                        amplitude: rng.gen_range(15.0..35.0),
                        periods: rng.gen_range(0.5..0.8),
                        phase: rng.gen_range(0.0..PI),
                        angle: 0.0,
                        points_per_side: 7,
                    };
                    push(ribbon.polygon(), false);
                    push(rectangle(320.0, 360.0, 110.0, 70.0, 2), false);
                }
            }
            AnnotatedImage {
                image_id: format!("pipe_{i:03}"),
                width: size as u32,
                height: size as u32,
                instances,
            }
        })
        .collect()
}
