use std::path::{Path, PathBuf};

use multigo_core::{jla, metrics, sle, wlr};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_IMAGE_SIZE: usize = 512;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_EXPORT_RESOLUTION: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemeshSettings {
    pub learning_rate: f64,
    pub laplacian_weight: f64,
    pub steps: usize,
}

impl Default for RemeshSettings {
    fn default() -> Self {
        Self {
            learning_rate: wlr::DEFAULT_LEARNING_RATE,
            laplacian_weight: wlr::DEFAULT_LAPLACIAN_WEIGHT,
            steps: wlr::DEFAULT_STEPS,
        }
    }
}

/// Named camera presets per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViewSettings {
    pub sle: String,
    pub remesh: String,
    pub render: String,
}

impl Default for ViewSettings {
    fn default() -> Self {
        Self {
            sle: "sle3".into(),
            remesh: "ring8tb".into(),
            render: "ring8".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSettings {
    pub n_samples: usize,
    pub tau: f64,
    pub sampler: String,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        Self {
            n_samples: metrics::DEFAULT_SAMPLES,
            tau: metrics::DEFAULT_TAU,
            sampler: "surface".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// Every tunable of the pipeline. Loaded from one JSON document; command
/// line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub q: usize,
    pub m: usize,
    pub alpha: f64,
    pub image_size: [usize; 2],
    /// World extent of every view in cm; `None` fits the input mesh.
    pub ortho_scale: Option<f64>,
    pub remesh: RemeshSettings,
    pub views: ViewSettings,
    pub metrics: MetricsSettings,
    pub refiner: String,
    pub seed: u64,
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            q: sle::DEFAULT_ORDER,
            m: sle::DEFAULT_POINT_COUNT,
            alpha: jla::DEFAULT_ALPHA,
            image_size: [DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE],
            ortho_scale: None,
            remesh: RemeshSettings::default(),
            views: ViewSettings::default(),
            metrics: MetricsSettings::default(),
            refiner: "identity".into(),
            seed: DEFAULT_SEED,
            paths: Paths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_json(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.image_size.contains(&0) {
            return bad(format!("image_size must be positive, got {:?}", self.image_size));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if let Some(s) = self.ortho_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("ortho_scale must be positive, got {s}"));
            }
        }
        let r = &self.remesh;
        if r.steps == 0 {
            return bad("remesh.steps must be >= 1".into());
        }
        if !(r.learning_rate >= 0.0 && r.learning_rate.is_finite()) {
            return bad(format!("remesh.learning_rate must be >= 0, got {}", r.learning_rate));
        }
        if !(r.laplacian_weight >= 0.0 && r.laplacian_weight.is_finite()) {
            return bad(format!(
                "remesh.laplacian_weight must be >= 0, got {}",
                r.laplacian_weight
            ));
        }
        if self.metrics.n_samples == 0 {
            return bad("metrics.n_samples must be >= 1".into());
        }
        if !(self.metrics.tau > 0.0 && self.metrics.tau.is_finite()) {
            return bad(format!("metrics.tau must be positive, got {}", self.metrics.tau));
        }
        Ok(())
    }

    /// Writes the effective configuration as `config.json` in `dir`.
    pub fn write_effective(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        crate::write_file(&dir.join("config.json"), format!("{text}\n").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_json(r#"{"q": 3}"#).is_ok());
        assert!(matches!(
            PipelineConfig::from_json(r#"{"qq": 3}"#),
            Err(CliError::Usage(_))
        ));
        assert!(PipelineConfig::from_json(r#"{"remesh": {"lr": 0.1}}"#).is_err());
    }

    #[test]
    fn round_trip_and_partial() {
        let cfg = PipelineConfig::from_json(r#"{"remesh": {"steps": 5}}"#).unwrap();
        assert_eq!(cfg.remesh.steps, 5);
        assert_eq!(cfg.remesh.learning_rate, 0.3);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(PipelineConfig::default().q, 8);
        assert_eq!(PipelineConfig::default().m, 100_000);
    }

    #[test]
    fn validation() {
        let mut cfg = PipelineConfig::default();
        cfg.remesh.steps = 0;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            image_size: [0, 4],
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
        PipelineConfig::default().validate().unwrap();
    }
}
