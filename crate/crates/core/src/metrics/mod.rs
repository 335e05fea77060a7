//! Surface and image quality metrics.

mod image;
mod samplers;

pub use image::{image_metrics, psnr, ssim, ImageMetricsReport, Psnr, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use samplers::{surface_samplers, SampledSurface, SurfaceSampler};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{NeighborGrid, TriangleMesh, Vec3};

pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_SAMPLES: usize = 100_000;

fn nearest_all(queries: &[Vec3], target: &[Vec3]) -> Result<Vec<(usize, f64)>> {
    if queries.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let grid = NeighborGrid::new(target)?;
    Ok(queries.par_iter().map(|q| grid.nearest(q)).collect())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Mean nearest-neighbor distance pred→gt and gt→pred.
pub fn chamfer_points(pred: &[Vec3], gt: &[Vec3]) -> Result<(f64, f64)> {
    let p2s = nearest_all(pred, gt)?;
    let s2p = nearest_all(gt, pred)?;
    Ok((mean(p2s.iter().map(|x| x.1)), mean(s2p.iter().map(|x| x.1))))
}

/// Mean cosine between each sample's normal and its nearest neighbor's,
/// averaged over both directions.
pub fn normal_consistency_points(pred: &SampledSurface, gt: &SampledSurface) -> Result<f64> {
    let p2s = nearest_all(&pred.points, &gt.points)?;
    let s2p = nearest_all(&gt.points, &pred.points)?;
    let forward = mean(
        p2s.iter()
            .enumerate()
            .map(|(i, (j, _))| pred.normals[i].dot(&gt.normals[*j])),
    );
    let backward = mean(
        s2p.iter()
            .enumerate()
            .map(|(i, (j, _))| gt.normals[i].dot(&pred.normals[*j])),
    );
    Ok(0.5 * (forward + backward))
}

/// Harmonic mean of precision and recall at threshold `tau` (distances
/// `<= tau` count), in percent.
pub fn fscore_points(pred: &[Vec3], gt: &[Vec3], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let p2s = nearest_all(pred, gt)?;
    let s2p = nearest_all(gt, pred)?;
    let precision = p2s.iter().filter(|x| x.1 <= tau).count() as f64 / pred.len() as f64;
    let recall = s2p.iter().filter(|x| x.1 <= tau).count() as f64 / gt.len() as f64;
    Ok(if precision + recall == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * precision * recall / (precision + recall)
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub n_samples: usize,
    pub tau: f64,
    pub seed: u64,
    pub sampler: String,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
            tau: DEFAULT_TAU,
            seed: 0,
            sampler: "surface".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshMetricsReport {
    pub cd_p_to_s: f64,
    pub cd_s_to_p: f64,
    pub nc: f64,
    pub fscore: f64,
    pub tau: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Samples both meshes with the same sampler and seed.
fn sample_pair(
    pred: &TriangleMesh,
    gt: &TriangleMesh,
    cfg: &MetricsConfig,
) -> Result<(SampledSurface, SampledSurface)> {
    if cfg.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let samplers = surface_samplers();
    let sampler = samplers.get(&cfg.sampler)?;
    Ok((
        sampler.sample(pred, cfg.n_samples, cfg.seed)?,
        sampler.sample(gt, cfg.n_samples, cfg.seed)?,
    ))
}

pub fn chamfer(pred: &TriangleMesh, gt: &TriangleMesh, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    let cfg = MetricsConfig {
        n_samples,
        seed,
        ..Default::default()
    };
    let (p, g) = sample_pair(pred, gt, &cfg)?;
    chamfer_points(&p.points, &g.points)
}

pub fn normal_consistency(pred: &TriangleMesh, gt: &TriangleMesh, n_samples: usize, seed: u64) -> Result<f64> {
    let cfg = MetricsConfig {
        n_samples,
        seed,
        ..Default::default()
    };
    let (p, g) = sample_pair(pred, gt, &cfg)?;
    normal_consistency_points(&p, &g)
}

pub fn fscore(pred: &TriangleMesh, gt: &TriangleMesh, n_samples: usize, tau: f64, seed: u64) -> Result<f64> {
    let cfg = MetricsConfig {
        n_samples,
        seed,
        tau,
        ..Default::default()
    };
    let (p, g) = sample_pair(pred, gt, &cfg)?;
    fscore_points(&p.points, &g.points, tau)
}

/// All surface metrics from one pair of sample sets.
pub fn mesh_metrics(pred: &TriangleMesh, gt: &TriangleMesh, cfg: &MetricsConfig) -> Result<MeshMetricsReport> {
    check_tau(cfg.tau)?;
    let (p, g) = sample_pair(pred, gt, cfg)?;
    let (cd_p_to_s, cd_s_to_p) = chamfer_points(&p.points, &g.points)?;
    Ok(MeshMetricsReport {
        cd_p_to_s,
        cd_s_to_p,
        nc: normal_consistency_points(&p, &g)?,
        fscore: fscore_points(&p.points, &g.points, cfg.tau)?,
        tau: cfg.tau,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
    })
}
