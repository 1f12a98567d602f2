//! Flat `key = value` configuration with command-line overrides.

use std::fs;
use std::path::Path;

use fce_core::annotations::{EndpointRule, DEFAULT_SUBSET_THRESHOLD};
use fce_core::decode::DecodeParams;
use fce_core::eval::DEFAULT_EVAL_IOU;
use fce_core::fidelity::FidelityParams;
use fce_core::losses::{LossParams, OHEM_RATIO};
use fce_core::numfmt::fmt_num;
use fce_core::targets::{default_level_specs, validate_level_specs, LevelSpec, TargetParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub degree: usize,
    pub samples: usize,
    pub points: usize,
    pub lambda: f64,
    pub shrink_factor: f64,
    pub levels: Vec<LevelSpec>,
    pub score_thresh: f64,
    pub nms_iou: f64,
    pub eval_iou: f64,
    pub subset_threshold: f64,
    pub subset_ends: EndpointRule,
    pub iou_supersample: usize,
    pub ohem_ratio: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            degree: 5,
            samples: 400,
            points: 50,
            lambda: 1.0,
            shrink_factor: 0.3,
            levels: default_level_specs(),
            score_thresh: 0.3,
            nms_iou: 0.1,
            eval_iou: DEFAULT_EVAL_IOU,
            subset_threshold: DEFAULT_SUBSET_THRESHOLD,
            subset_ends: EndpointRule::FirstLast,
            iou_supersample: 4,
            ohem_ratio: OHEM_RATIO,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn ends_name(rule: EndpointRule) -> &'static str {
    match rule {
        EndpointRule::FirstLast => "first-last",
        EndpointRule::SideEnds => "sides",
    }
}

pub fn parse_ends(value: &str) -> CliResult<EndpointRule> {
    match value {
        "first-last" => Ok(EndpointRule::FirstLast),
        "sides" => Ok(EndpointRule::SideEnds),
        _ => Err(CliError::Config(format!(
            "subset_ends: expected first-last or sides, got {value:?}"
        ))),
    }
}

impl Config {
    /// Reads a config file on top of the defaults.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.apply(line)
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn apply(&mut self, assignment: &str) -> CliResult<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key = value, got {assignment:?}")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if let Some((prefix, field)) = key.split_once('_') {
            if let Some(idx) = self
                .levels
                .iter()
                .position(|s| s.level.name().eq_ignore_ascii_case(prefix))
            {
                let spec = &mut self.levels[idx];
                match field {
                    "stride" => spec.stride = parse(key, value)?,
                    "min_scale" => spec.lo = parse(key, value)?,
                    "max_scale" => spec.hi = parse(key, value)?,
                    _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
                }
                return Ok(());
            }
        }
        match key {
            "degree" => self.degree = parse(key, value)?,
            "samples" => self.samples = parse(key, value)?,
            "points" => self.points = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "shrink_factor" => self.shrink_factor = parse(key, value)?,
            "score_thresh" => self.score_thresh = parse(key, value)?,
            "nms_iou" => self.nms_iou = parse(key, value)?,
            "eval_iou" => self.eval_iou = parse(key, value)?,
            "subset_threshold" => self.subset_threshold = parse(key, value)?,
            "subset_ends" => self.subset_ends = parse_ends(value)?,
            "iou_supersample" => self.iou_supersample = parse(key, value)?,
            "ohem_ratio" => self.ohem_ratio = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.samples < 3 || 2 * self.degree + 1 > self.samples {
            return bad(format!(
                "need samples >= 3 and 2 * degree + 1 <= samples, got degree {} samples {}",
                self.degree, self.samples
            ));
        }
        if self.points < 3 {
            return bad(format!("points must be at least 3, got {}", self.points));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return bad(format!("shrink_factor must lie in (0, 1), got {}", self.shrink_factor));
        }
        for (name, v) in [
            ("score_thresh", self.score_thresh),
            ("nms_iou", self.nms_iou),
            ("eval_iou", self.eval_iou),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.subset_threshold.is_finite() && self.subset_threshold >= 0.0) {
            return bad(format!("subset_threshold must be >= 0, got {}", self.subset_threshold));
        }
        if self.iou_supersample == 0 || self.iou_supersample > 64 {
            return bad(format!(
                "iou_supersample must lie in 1..=64, got {}",
                self.iou_supersample
            ));
        }
        if self.ohem_ratio == 0 {
            return bad("ohem_ratio must be at least 1".into());
        }
        validate_level_specs(&self.levels).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Every setting in a fixed order, as written in report headers.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("degree".to_string(), self.degree.to_string()),
            ("samples".into(), self.samples.to_string()),
            ("points".into(), self.points.to_string()),
            ("lambda".into(), fmt_num(self.lambda)),
            ("shrink_factor".into(), fmt_num(self.shrink_factor)),
        ];
        for s in &self.levels {
            let p = s.level.name().to_ascii_lowercase();
            out.push((format!("{p}_stride"), s.stride.to_string()));
            out.push((format!("{p}_min_scale"), fmt_num(s.lo)));
            out.push((format!("{p}_max_scale"), fmt_num(s.hi)));
        }
        out.extend([
            ("score_thresh".to_string(), fmt_num(self.score_thresh)),
            ("nms_iou".into(), fmt_num(self.nms_iou)),
            ("eval_iou".into(), fmt_num(self.eval_iou)),
            ("subset_threshold".into(), fmt_num(self.subset_threshold)),
            ("subset_ends".into(), ends_name(self.subset_ends).to_string()),
            ("iou_supersample".into(), self.iou_supersample.to_string()),
            ("ohem_ratio".into(), self.ohem_ratio.to_string()),
        ]);
        out
    }

    /// `# config key=value ...` line for CSV reports.
    pub fn header_line(&self) -> String {
        let pairs: Vec<String> = self.entries().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# config {}", pairs.join(" "))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries()
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect(),
        )
    }

    pub fn target_params(&self) -> TargetParams {
        TargetParams {
            degree: self.degree,
            samples: self.samples,
            shrink_factor: self.shrink_factor,
        }
    }

    pub fn decode_params(&self) -> DecodeParams {
        DecodeParams {
            score_thresh: self.score_thresh,
            nms_iou: self.nms_iou,
            points: self.points,
            iou_supersample: self.iou_supersample,
        }
    }

    pub fn loss_params(&self) -> LossParams {
        LossParams {
            lambda: self.lambda,
            ohem_ratio: self.ohem_ratio,
            points: self.points,
        }
    }

    pub fn fidelity_params(&self) -> FidelityParams {
        FidelityParams {
            samples: self.samples,
            points: self.points,
            supersample: self.iou_supersample,
        }
    }
}
