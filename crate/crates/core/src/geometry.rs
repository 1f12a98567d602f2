//! Polygon primitives for text contours.
//!
//! All coordinates live in the image frame: `x` grows to the right and `y`
//! grows downward. "Clockwise" always means visually clockwise in that frame,
//! which is the same thing as a positive shoelace sum on raw coordinates.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Closed polygon; the edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    vertices: Vec<Point2>,
}

impl Contour {
    /// Validates vertex count, finiteness and a non-zero perimeter.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteVertex(i));
        }
        let contour = Self { vertices };
        if contour.perimeter() <= 0.0 {
            return Err(Error::ZeroPerimeter);
        }
        Ok(contour)
    }

    /// Builds a contour from a flat `[x0, y0, x1, y1, ...]` list.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("odd coordinate count {}", coords.len())));
        }
        Self::new(coords.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Iterates `(start, end)` pairs over the closed edge cycle.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn reversed(&self) -> Contour {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Contour { vertices }
    }

    /// Cyclic rotation of the vertex list so that vertex `k` comes first.
    pub fn rotated_start(&self, k: usize) -> Contour {
        let mut vertices = self.vertices.clone();
        vertices.rotate_left(k % self.vertices.len());
        Contour { vertices }
    }

    pub fn translated(&self, delta: Point2) -> Contour {
        self.map_points(|p| p + delta)
    }

    pub fn scaled_about(&self, origin: Point2, factor: f64) -> Contour {
        self.map_points(|p| origin + (p - origin) * factor)
    }

    pub fn rotated_about(&self, origin: Point2, angle: f64) -> Contour {
        let (s, c) = angle.sin_cos();
        self.map_points(|p| {
            let d = p - origin;
            origin + Point2::new(d.x * c - d.y * s, d.x * s + d.y * c)
        })
    }

    /// `(min, max)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Contour {
        Contour {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
        }
    }
}

/// Exactly `N` points, equally spaced in arc length along a source contour.
///
/// Element `j` is the contour function evaluated at `t = j / N`, so the first
/// element is the canonical start point and the sequence runs clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledContour {
    points: Vec<Point2>,
}

impl ResampledContour {
    /// Wraps an arbitrary periodic sample sequence without checking spacing.
    ///
    /// Useful for feeding raw samples straight into the transform.
    pub fn from_points(points: Vec<Point2>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    pub fn mean(&self) -> Point2 {
        let n = self.points.len() as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point2::new(sx / n, sy / n)
    }
}

/// Shoelace sum; positive iff the contour is visually clockwise (y-down frame).
pub fn signed_area(c: &Contour) -> f64 {
    signed_area_of(c.vertices())
}

pub(crate) fn signed_area_of(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Arc-length weighted centroid of the contour outline.
///
/// This is the continuum limit of the mean of uniformly resampled points and
/// does not depend on where the vertex list starts.
pub fn contour_center(c: &Contour) -> Result<Point2> {
    let mut len_sum = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (a, b) in c.edges() {
        let len = a.distance(b);
        len_sum += len;
        sx += 0.5 * (a.x + b.x) * len;
        sy += 0.5 * (a.y + b.y) * len;
    }
    if len_sum <= 0.0 {
        return Err(Error::ZeroPerimeter);
    }
    Ok(Point2::new(sx / len_sum, sy / len_sum))
}

/// Location of the canonical starting point on a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPoint {
    /// Index of the edge running from vertex `edge` to vertex `edge + 1`.
    pub edge: usize,
    /// Interpolation parameter in `[0, 1]` along that edge.
    pub t: f64,
    pub point: Point2,
}

/// Right-most crossing between the contour and the horizontal line through
/// its center.
///
/// An edge crosses the line when exactly one endpoint lies strictly below it
/// (half-open in `y`), so a vertex sitting on the line is not counted twice by
/// its two edges in the transversal case.
pub fn canonical_start(c: &Contour) -> Result<StartPoint> {
    let center = contour_center(c)?;
    let line_y = center.y;
    let mut best: Option<StartPoint> = None;
    for (i, (a, b)) in c.edges().enumerate() {
        if (a.y > line_y) == (b.y > line_y) {
            continue;
        }
        let t = ((line_y - a.y) / (b.y - a.y)).clamp(0.0, 1.0);
        let point = Point2::new(a.x + (b.x - a.x) * t, line_y);
        if best.is_none_or(|s| point.x > s.point.x) {
            best = Some(StartPoint { edge: i, t, point });
        }
    }
    best.ok_or(Error::DegenerateContour(
        "horizontal line through the center does not cross the contour",
    ))
}

/// Resamples `n` points at equal arc-length spacing.
///
/// The traversal is forced clockwise and begins at [`canonical_start`], so
/// the result does not depend on the starting vertex or the orientation of the
/// input vertex list.
pub fn resample_equidistant(c: &Contour, n: usize) -> Result<ResampledContour> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "resample count must be at least 3, got {n}"
        )));
    }
    let oriented = if signed_area(c) < 0.0 { c.reversed() } else { c.clone() };
    let start = canonical_start(&oriented)?;
    let verts = oriented.vertices();
    let m = verts.len();

    let mut path = Vec::with_capacity(m + 2);
    path.push(start.point);
    for j in 1..=m {
        path.push(verts[(start.edge + j) % m]);
    }
    path.push(start.point);

    let mut cumulative = Vec::with_capacity(path.len());
    cumulative.push(0.0);
    for w in path.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + w[0].distance(w[1]));
    }
    let total = *cumulative.last().unwrap();
    if total <= 0.0 {
        return Err(Error::ZeroPerimeter);
    }

    let step = total / n as f64;
    let mut points = Vec::with_capacity(n);
    let mut seg = 0;
    for j in 0..n {
        let target = j as f64 * step;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] <= target {
            seg += 1;
        }
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let p = if seg_len > 0.0 {
            let t = ((target - cumulative[seg]) / seg_len).clamp(0.0, 1.0);
            path[seg].lerp(path[seg + 1], t)
        } else {
            path[seg]
        };
        points.push(p);
    }
    Ok(ResampledContour { points })
}

/// Even-odd containment test.
///
/// Crossings are counted on a ray towards `+x`, with the same half-open rule
/// in `y` as [`canonical_start`]; a point exactly on a crossing counts as
/// inside when the crossing is to its right.
pub fn point_in_polygon(p: Point2, c: &Contour) -> bool {
    let mut inside = false;
    for (a, b) in c.edges() {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Inward offset by `factor * |area| / perimeter`.
///
/// Each edge is moved inward along its normal and vertices are rebuilt from
/// the intersections of neighbouring offset lines. When that produces a
/// self-intersecting, flipped or non-shrinking polygon, the vertices are
/// instead scaled towards [`contour_center`] by `1 - factor`.
pub fn shrink_polygon(c: &Contour, factor: f64) -> Result<Contour> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "shrink factor must lie in (0, 1), got {factor}"
        )));
    }
    let area = signed_area(c);
    if area == 0.0 {
        return Err(Error::DegenerateContour("zero area"));
    }
    let distance = factor * area.abs() / c.perimeter();

    if let Some(offset) = offset_inward(c.vertices(), distance, area > 0.0) {
        let new_area = signed_area_of(&offset);
        if new_area.signum() == area.signum() && new_area.abs() < area.abs() && !is_self_intersecting(&offset) {
            if let Ok(contour) = Contour::new(offset) {
                return Ok(contour);
            }
        }
    }

    let center = contour_center(c)?;
    Ok(c.scaled_about(center, 1.0 - factor))
}

fn offset_inward(vertices: &[Point2], distance: f64, positive: bool) -> Option<Vec<Point2>> {
    let mut verts: Vec<Point2> = Vec::with_capacity(vertices.len());
    for &p in vertices {
        if verts.last().is_none_or(|&q: &Point2| q.distance(p) > 0.0) {
            verts.push(p);
        }
    }
    while verts.len() > 1 && verts[0].distance(*verts.last().unwrap()) == 0.0 {
        verts.pop();
    }
    let n = verts.len();
    if n < 3 {
        return None;
    }

    // Interior lies to the left of each edge for a positive shoelace sum.
    let side = if positive { 1.0 } else { -1.0 };
    let normals: Vec<Point2> = (0..n)
        .map(|i| {
            let d = verts[(i + 1) % n] - verts[i];
            let len = d.x.hypot(d.y);
            Point2::new(-d.y / len * side, d.x / len * side)
        })
        .collect();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let p0 = verts[prev] + normals[prev] * distance;
        let d0 = verts[i] - verts[prev];
        let p1 = verts[i] + normals[i] * distance;
        let d1 = verts[(i + 1) % n] - verts[i];
        let denom = d0.x * d1.y - d0.y * d1.x;
        let scale = d0.x.hypot(d0.y) * d1.x.hypot(d1.y);
        if denom.abs() <= 1e-12 * scale {
            // Parallel neighbours: the shifted vertex is on both offset lines.
            if d0.x * d1.x + d0.y * d1.y < 0.0 {
                return None;
            }
            out.push(p1);
        } else {
            let w = p1 - p0;
            let s = (w.x * d1.y - w.y * d1.x) / denom;
            out.push(p0 + d0 * s);
        }
    }
    Some(out)
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    fn orient(p: Point2, q: Point2, r: Point2) -> f64 {
        (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    }
    fn on_segment(p: Point2, q: Point2, r: Point2) -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    }
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// True if any two non-adjacent edges of the closed polygon touch.
pub fn is_self_intersecting(vertices: &[Point2]) -> bool {
    let n = vertices.len();
    if n < 4 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Sorted, disjoint half-open column ranges covered by `c` on one raster row.
fn row_spans(c: &Contour, y: f64, x0: f64, cells_per_px: f64, xs: &mut Vec<f64>, out: &mut Vec<(i64, i64)>) {
    xs.clear();
    out.clear();
    for (a, b) in c.edges() {
        if (a.y > y) != (b.y > y) {
            xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
    }
    xs.sort_by(f64::total_cmp);
    for pair in xs.chunks_exact(2) {
        // Cell centres x0 + (col + 0.5) / s inside [pair[0], pair[1]).
        let lo = ((pair[0] - x0) * cells_per_px - 0.5).ceil() as i64;
        let hi = ((pair[1] - x0) * cells_per_px - 0.5).ceil() as i64;
        if hi > lo {
            out.push((lo, hi));
        }
    }
}

fn span_overlap(a: &[(i64, i64)], b: &[(i64, i64)]) -> i64 {
    let (mut i, mut j, mut total) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            total += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Intersection-over-union by even-odd rasterization.
///
/// Both contours are sampled at the centres of a grid with `supersample`
/// cells per pixel covering the integer-aligned joint bounding box. Cell
/// counting makes the result symmetric in its arguments and deterministic.
pub fn polygon_iou(a: &Contour, b: &Contour, supersample: usize) -> f64 {
    let s = supersample.max(1) as f64;
    let (alo, ahi) = a.bounding_box();
    let (blo, bhi) = b.bounding_box();
    if ahi.x < blo.x || bhi.x < alo.x || ahi.y < blo.y || bhi.y < alo.y {
        return 0.0;
    }
    let x0 = alo.x.min(blo.x).floor();
    let y0 = alo.y.min(blo.y).floor();
    let y1 = ahi.y.max(bhi.y).ceil();
    let rows = ((y1 - y0) * s).round() as i64;

    let (mut xs, mut spans_a, mut spans_b) = (Vec::new(), Vec::new(), Vec::new());
    let (mut area_a, mut area_b, mut inter) = (0i64, 0i64, 0i64);
    for r in 0..rows {
        let y = y0 + (r as f64 + 0.5) / s;
        row_spans(a, y, x0, s, &mut xs, &mut spans_a);
        row_spans(b, y, x0, s, &mut xs, &mut spans_b);
        area_a += spans_a.iter().map(|(lo, hi)| hi - lo).sum::<i64>();
        area_b += spans_b.iter().map(|(lo, hi)| hi - lo).sum::<i64>();
        inter += span_overlap(&spans_a, &spans_b);
    }
    let union = area_a + area_b - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Relative area change `|A_bef - A_aft| / A_bef` from deleting vertex `i`.
pub fn vertex_removal_delta(c: &Contour, i: usize) -> Result<f64> {
    let n = c.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "vertex removal needs at least 4 vertices, got {n}"
        )));
    }
    if i >= n {
        return Err(Error::InvalidArgument(format!(
            "vertex index {i} out of range for {n} vertices"
        )));
    }
    let before = signed_area(c).abs();
    if before == 0.0 {
        return Err(Error::DegenerateContour("zero area"));
    }
    let remaining: Vec<Point2> = c
        .vertices()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &p)| p)
        .collect();
    let after = signed_area_of(&remaining).abs();
    Ok((before - after).abs() / before)
}
