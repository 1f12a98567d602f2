//! `FCT1` tensor files.
//!
//! Layout: the magic bytes `FCT1`, a little-endian `u32` rank in `1..=4`,
//! `rank` little-endian `u32` dimensions, then `f32` little-endian values in
//! row-major order (last dimension fastest). Nothing follows the payload.

use std::io::{Read, Write};

use crate::decode::{LevelPrediction, PredictionMaps};
use crate::error::{Error, Result};
use crate::targets::{Level, LevelTargets, TargetMaps};

pub const MAGIC: &[u8; 4] = b"FCT1";
pub const MAX_RANK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(Error::Tensor(format!("rank {} outside 1..=4", dims.len())));
        }
        if dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::Tensor("dimension does not fit in u32".into()));
        }
        let expected = dims.iter().product::<usize>();
        if data.len() != expected {
            return Err(Error::Tensor(format!(
                "dims {dims:?} need {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let word = |at: usize| -> Result<u32> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .ok_or_else(|| Error::Tensor("truncated header".into()))
        };
        if bytes.get(..4) != Some(MAGIC.as_slice()) {
            return Err(Error::Tensor("bad magic, expected FCT1".into()));
        }
        let rank = word(4)? as usize;
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::Tensor(format!("rank {rank} outside 1..=4")));
        }
        let dims: Vec<usize> = (0..rank)
            .map(|i| word(8 + 4 * i).map(|d| d as usize))
            .collect::<Result<_>>()?;
        let header = 8 + 4 * rank;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Tensor("dimension product overflows".into()))?;
        let payload = &bytes[header..];
        if payload.len() != count * 4 {
            return Err(Error::Tensor(format!(
                "payload has {} bytes, dims {dims:?} need {}",
                payload.len(),
                count * 4
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Ok(Self { dims, data })
    }
}

/// Number of leading non-regression channels in a target tensor.
pub const TARGET_HEADER_CHANNELS: usize = 4;
/// Number of leading non-regression channels in a prediction tensor.
pub const PREDICTION_HEADER_CHANNELS: usize = 2;

fn narrow(values: impl Iterator<Item = f64>) -> impl Iterator<Item = f32> {
    values.map(|v| v as f32)
}

/// `[4 + 2(2K+1), H, W]`: TR mask, TCR mask, ignore mask, weight, then the
/// regression channels.
pub fn level_targets_to_tensor(t: &LevelTargets) -> Tensor {
    let mut data = Vec::with_capacity((TARGET_HEADER_CHANNELS + t.channels()) * t.cells());
    data.extend(narrow(t.tr_mask.iter().map(|&v| v as f64)));
    data.extend(narrow(t.tcr_mask.iter().map(|&v| v as f64)));
    data.extend(narrow(t.ignore_mask.iter().map(|&v| v as f64)));
    data.extend(narrow(t.weight.iter().copied()));
    data.extend(narrow(t.regression.iter().copied()));
    Tensor::new(vec![TARGET_HEADER_CHANNELS + t.channels(), t.height, t.width], data)
        .expect("target maps have consistent sizes")
}

fn split_level_tensor(tensor: &Tensor, header: usize) -> Result<(usize, usize, usize, usize)> {
    let dims = tensor.dims();
    if dims.len() != 3 {
        return Err(Error::Tensor(format!(
            "level maps must have rank 3, got {}",
            dims.len()
        )));
    }
    let (c, h, w) = (dims[0], dims[1], dims[2]);
    let reg = c
        .checked_sub(header)
        .filter(|&r| r >= 2 && r % 4 == 2)
        .ok_or(Error::ChannelCountMismatch {
            expected: header + 2 * (2 * (c.saturating_sub(header) / 4) + 1),
            found: c,
        })?;
    Ok((h, w, h * w, (reg / 2 - 1) / 2))
}

pub fn level_targets_from_tensor(tensor: &Tensor, level: Level, stride: u32) -> Result<LevelTargets> {
    let (height, width, cells, degree) = split_level_tensor(tensor, TARGET_HEADER_CHANNELS)?;
    let d = tensor.data();
    let mask = |ch: usize| -> Vec<u8> {
        d[ch * cells..(ch + 1) * cells]
            .iter()
            .map(|&v| (v != 0.0) as u8)
            .collect()
    };
    Ok(LevelTargets {
        level,
        stride,
        height,
        width,
        degree,
        tr_mask: mask(0),
        tcr_mask: mask(1),
        ignore_mask: mask(2),
        weight: d[3 * cells..4 * cells].iter().map(|&v| v as f64).collect(),
        regression: d[4 * cells..].iter().map(|&v| v as f64).collect(),
    })
}

/// `[2 + 2(2K+1), H, W]`: TR probability, TCR probability, then regression.
pub fn level_prediction_to_tensor(p: &LevelPrediction) -> Tensor {
    let mut data = Vec::with_capacity((PREDICTION_HEADER_CHANNELS + p.channels()) * p.cells());
    data.extend(narrow(p.tr_prob.iter().copied()));
    data.extend(narrow(p.tcr_prob.iter().copied()));
    data.extend(narrow(p.regression.iter().copied()));
    Tensor::new(vec![PREDICTION_HEADER_CHANNELS + p.channels(), p.height, p.width], data)
        .expect("prediction maps have consistent sizes")
}

pub fn level_prediction_from_tensor(tensor: &Tensor, level: Level, stride: u32) -> Result<LevelPrediction> {
    let (height, width, cells, _) = split_level_tensor(tensor, PREDICTION_HEADER_CHANNELS)?;
    let d = tensor.data();
    let channel = |range: std::ops::Range<usize>| -> Vec<f64> { d[range].iter().map(|&v| v as f64).collect() };
    LevelPrediction::new(
        level,
        stride,
        height,
        width,
        channel(0..cells),
        channel(cells..2 * cells),
        channel(2 * cells..d.len()),
    )
}

/// Round-trips targets through `f32`, as a file write and read would.
pub fn quantize_targets(t: &TargetMaps) -> Result<TargetMaps> {
    Ok(TargetMaps {
        image_id: t.image_id.clone(),
        levels: t
            .levels
            .iter()
            .map(|l| level_targets_from_tensor(&level_targets_to_tensor(l), l.level, l.stride))
            .collect::<Result<_>>()?,
        skipped: t.skipped.clone(),
    })
}

pub fn quantize_predictions(p: &PredictionMaps) -> Result<PredictionMaps> {
    Ok(PredictionMaps {
        image_id: p.image_id.clone(),
        levels: p
            .levels
            .iter()
            .map(|l| level_prediction_from_tensor(&level_prediction_to_tensor(l), l.level, l.stride))
            .collect::<Result<_>>()?,
    })
}
