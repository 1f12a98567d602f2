//! Text annotations: JSON-lines interchange format, a comma-separated importer
//! and the highly-curved subset selector.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{vertex_removal_delta, Contour};
use crate::numfmt::json_nums;

pub const DEFAULT_SUBSET_THRESHOLD: f64 = 0.07;

#[derive(Debug, Clone, PartialEq)]
pub struct TextInstance {
    pub id: String,
    pub polygon: Contour,
    /// Do-not-care region.
    pub ignore: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub instances: Vec<TextInstance>,
}

/// Result of [`parse_jsonl`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedAnnotations {
    pub images: Vec<AnnotatedImage>,
    /// Number of coordinates moved onto the image border.
    pub clamped_coords: usize,
}

#[derive(Deserialize)]
struct RawImage {
    image_id: String,
    width: u32,
    height: u32,
    #[serde(default)]
    instances: Vec<RawInstance>,
}

#[derive(Deserialize)]
struct RawInstance {
    points: Vec<f64>,
    #[serde(default)]
    ignore: bool,
    #[serde(default)]
    id: Option<String>,
}

/// Reads one JSON object per line:
/// `{"image_id", "width", "height", "instances": [{"points": [x, y, ...], "ignore", "id"?}]}`.
///
/// Blank lines are skipped. Instance ids default to the instance position.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<ParsedAnnotations> {
    let mut out = ParsedAnnotations::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim_start_matches('\u{feff}').trim();
        if text.is_empty() {
            continue;
        }
        let raw: RawImage = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if raw.width == 0 || raw.height == 0 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("image size {}x{} must be positive", raw.width, raw.height),
            });
        }
        let mut seen = HashSet::new();
        let mut instances = Vec::with_capacity(raw.instances.len());
        for (i, inst) in raw.instances.into_iter().enumerate() {
            let id = inst.id.unwrap_or_else(|| i.to_string());
            if !seen.insert(id.clone()) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate instance id {id:?}"),
                });
            }
            let invalid = |msg: String| Error::InvalidPolygon { line: line_no, msg };
            if inst.points.len() % 2 != 0 {
                return Err(invalid(format!(
                    "instance {id:?} has an odd coordinate count {}",
                    inst.points.len()
                )));
            }
            if inst.points.len() < 6 {
                return Err(invalid(format!(
                    "instance {id:?} has {} points, need at least 3",
                    inst.points.len() / 2
                )));
            }
            let mut coords = inst.points;
            for (j, v) in coords.iter_mut().enumerate() {
                let limit = if j % 2 == 0 { raw.width } else { raw.height } as f64;
                if v.is_finite() && (*v < 0.0 || *v > limit) {
                    *v = v.clamp(0.0, limit);
                    out.clamped_coords += 1;
                }
            }
            let polygon = Contour::from_flat(&coords).map_err(|e| invalid(format!("instance {id:?}: {e}")))?;
            instances.push(TextInstance {
                id,
                polygon,
                ignore: inst.ignore,
            });
        }
        out.images.push(AnnotatedImage {
            image_id: raw.image_id,
            width: raw.width,
            height: raw.height,
            instances,
        });
    }
    Ok(out)
}

pub fn image_to_json(image: &AnnotatedImage) -> serde_json::Value {
    let instances: Vec<_> = image
        .instances
        .iter()
        .map(|inst| {
            json!({
                "id": inst.id,
                "points": json_nums(&inst.polygon.to_flat()),
                "ignore": inst.ignore,
            })
        })
        .collect();
    json!({
        "image_id": image.image_id,
        "width": image.width,
        "height": image.height,
        "instances": instances,
    })
}

/// Writes images in the [`parse_jsonl`] schema, coordinates at 9 significant digits.
pub fn write_jsonl<W: Write>(images: &[AnnotatedImage], mut writer: W) -> Result<()> {
    for image in images {
        serde_json::to_writer(&mut writer, &image_to_json(image)).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Options for [`parse_delimited`].
#[derive(Debug, Clone)]
pub struct DelimitedOptions {
    /// Treat everything from the first non-numeric field onward as a
    /// transcription and drop it. When false such a field is a parse error.
    pub drop_transcription: bool,
    /// Transcription that marks a do-not-care region.
    pub ignore_marker: String,
}

impl Default for DelimitedOptions {
    fn default() -> Self {
        Self {
            drop_transcription: true,
            ignore_marker: "###".to_string(),
        }
    }
}

/// Reads `x1,y1,x2,y2,...[,transcription]` lines, one instance per line.
///
/// Instance ids are the 1-based line numbers.
pub fn parse_delimited<R: BufRead>(reader: R, opts: &DelimitedOptions) -> Result<Vec<TextInstance>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim_start_matches('\u{feff}').trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: line_no, msg };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let numeric_len = fields
            .iter()
            .position(|f| f.parse::<f64>().is_err())
            .unwrap_or(fields.len());
        let transcription = fields[numeric_len..].join(",");
        if !transcription.is_empty() && !opts.drop_transcription {
            return Err(parse_err(format!("non-numeric field {:?}", fields[numeric_len])));
        }
        let coords: Vec<f64> = fields[..numeric_len].iter().map(|f| f.parse().unwrap()).collect();
        if !coords.len().is_multiple_of(2) {
            return Err(parse_err(format!("odd coordinate count {}", coords.len())));
        }
        if coords.len() < 6 {
            return Err(parse_err(format!("{} points, need at least 3", coords.len() / 2)));
        }
        let polygon = Contour::from_flat(&coords).map_err(|e| parse_err(e.to_string()))?;
        out.push(TextInstance {
            id: line_no.to_string(),
            polygon,
            ignore: transcription == opts.ignore_marker,
        });
    }
    Ok(out)
}

/// Which annotation vertices count as the text's head and tail, and so are
/// never removed by the curvature test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EndpointRule {
    /// The first and the last vertex of the annotation order.
    #[default]
    FirstLast,
    /// For two-sided annotations (upper side, then lower side reversed):
    /// both end vertices of each side, i.e. `0`, `n/2 - 1`, `n/2` and `n - 1`.
    /// Odd vertex counts fall back to [`EndpointRule::FirstLast`].
    SideEnds,
}

impl EndpointRule {
    pub fn is_endpoint(self, i: usize, n: usize) -> bool {
        match self {
            EndpointRule::SideEnds if n.is_multiple_of(2) => i == 0 || i == n - 1 || i == n / 2 - 1 || i == n / 2,
            _ => i == 0 || i == n - 1,
        }
    }
}

/// Largest relative area change from deleting one non-endpoint vertex;
/// `None` for polygons with fewer than 4 vertices or nothing removable.
pub fn max_removal_delta(polygon: &Contour, rule: EndpointRule) -> Option<f64> {
    let n = polygon.len();
    if n < 4 {
        return None;
    }
    (0..n)
        .filter(|&i| !rule.is_endpoint(i, n))
        .filter_map(|i| vertex_removal_delta(polygon, i).ok())
        .fold(None, |best: Option<f64>, d| Some(best.map_or(d, |b| b.max(d))))
}

/// Keeps instances whose [`max_removal_delta`] under
/// [`EndpointRule::FirstLast`] reaches `threshold`.
pub fn curved_subset_select(instances: &[TextInstance], threshold: f64) -> Vec<TextInstance> {
    curved_subset_select_with(instances, threshold, EndpointRule::FirstLast)
}

pub fn curved_subset_select_with(instances: &[TextInstance], threshold: f64, rule: EndpointRule) -> Vec<TextInstance> {
    instances
        .iter()
        .filter(|inst| max_removal_delta(&inst.polygon, rule).is_some_and(|d| d >= threshold))
        .cloned()
        .collect()
}
