//! Masked uniform perturbation of body parameters.
//!
//! `β̃ʲ = βʲ + μʲ·xʲ` with `xʲ ~ U[-α, α]`. Each entry draws its offset from
//! its own ChaCha stream (`stream = j`), so the offset an entry receives
//! depends only on the seed and its index, never on the mask.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyParams {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl BodyParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let p = Self { values, labels: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        let p = Self {
            values,
            labels: Some(labels),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidArgument("body parameters are empty".into()));
        }
        if let Some(j) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {j} is not finite")));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.values.len() {
                return Err(Error::LengthMismatch {
                    expected: self.values.len(),
                    got: labels.len(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointMask {
    pub bits: Vec<u8>,
}

impl JointMask {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        let m = Self { bits };
        m.validate()?;
        Ok(m)
    }

    pub fn zeros(d: usize) -> Self {
        Self { bits: vec![0; d] }
    }

    pub fn ones(d: usize) -> Self {
        Self { bits: vec![1; d] }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bits.iter().position(|&b| b > 1) {
            Some(j) => Err(Error::InvalidArgument(format!(
                "mask bit {j} is {}, expected 0 or 1",
                self.bits[j]
            ))),
            None => Ok(()),
        }
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Perturbation bound in radians.
    pub alpha: f64,
    pub seed: u64,
}

impl AugmentConfig {
    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self { alpha, seed })
    }
}

/// Offset entry `j` receives under `seed` and bound `alpha`.
pub fn entry_offset(seed: u64, j: usize, alpha: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    let u: f64 = rng.gen();
    alpha * (2.0 * u - 1.0)
}

pub fn perturb(params: &BodyParams, mask: &JointMask, cfg: &AugmentConfig) -> Result<BodyParams> {
    params.validate()?;
    mask.validate()?;
    if mask.bits.len() != params.len() {
        return Err(Error::LengthMismatch {
            expected: params.len(),
            got: mask.bits.len(),
        });
    }
    if !(cfg.alpha >= 0.0 && cfg.alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {}", cfg.alpha)));
    }
    let mut out = params.clone();
    if cfg.alpha == 0.0 {
        return Ok(out);
    }
    for (j, (v, &bit)) in out.values.iter_mut().zip(&mask.bits).enumerate() {
        if bit == 1 {
            *v += entry_offset(cfg.seed, j, cfg.alpha);
        }
    }
    Ok(out)
}

/// Labels selected for perturbation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DepthLabelSet {
    labels: BTreeSet<String>,
}

#[derive(Deserialize)]
struct DepthLabelFile {
    labels: Vec<String>,
}

impl DepthLabelSet {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Self {
        Self {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// The shipped set (see `data/depth_labels.json`).
    pub fn shipped() -> Self {
        Self::from_json(include_str!("../data/depth_labels.json")).expect("shipped label set parses")
    }

    /// Parses `{"labels": [...]}`; other keys are ignored.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DepthLabelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("depth label set: {e}")))?;
        Ok(Self::new(file.labels))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Mask with 1 exactly where the label is in `set`. A mask with no match is
/// returned all-zero with a warning.
pub fn default_depth_mask(labels: &[String], set: &DepthLabelSet) -> JointMask {
    let bits: Vec<u8> = labels.iter().map(|l| set.contains(l) as u8).collect();
    let mask = JointMask { bits };
    if mask.popcount() == 0 {
        log::warn!("no parameter label matches the depth-related set; mask is all zero");
    }
    mask
}

pub const SMPLX_JOINTS: [&str; 55] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "jaw",
    "left_eye_smplhf",
    "right_eye_smplhf",
    "left_index1",
    "left_index2",
    "left_index3",
    "left_middle1",
    "left_middle2",
    "left_middle3",
    "left_pinky1",
    "left_pinky2",
    "left_pinky3",
    "left_ring1",
    "left_ring2",
    "left_ring3",
    "left_thumb1",
    "left_thumb2",
    "left_thumb3",
    "right_index1",
    "right_index2",
    "right_index3",
    "right_middle1",
    "right_middle2",
    "right_middle3",
    "right_pinky1",
    "right_pinky2",
    "right_pinky3",
    "right_ring1",
    "right_ring2",
    "right_ring3",
    "right_thumb1",
    "right_thumb2",
    "right_thumb3",
];

/// `<joint>_<x|y|z>` labels for the 55-joint axis-angle pose vector.
pub fn smplx_pose_labels() -> Vec<String> {
    SMPLX_JOINTS
        .iter()
        .flat_map(|j| ["x", "y", "z"].map(|a| format!("{j}_{a}")))
        .collect()
}
