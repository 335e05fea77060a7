//! Vertex refinement of a coarse mesh against multi-view normal maps.

mod codec;
mod raster;
mod refiner;

pub use codec::{decode_normal_png, encode_normal_png, load_normal_map, save_normal_map};
pub use raster::{rasterize, render_normals, FaceBuffer};
pub use refiner::{normal_refiners, refine_checked, IdentityRefiner, NormalRefiner};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_laplacian, CameraPose, LaplacianOperator, TriangleMesh, Vec3};
use raster::{camera_face_normals, shade, NO_FACE};

/// Covered pixels must be unit length within this tolerance.
pub const NORMAL_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_LEARNING_RATE: f64 = 0.3;
pub const DEFAULT_LAPLACIAN_WEIGHT: f64 = 0.01;
pub const DEFAULT_STEPS: usize = 100;

/// Camera-space unit normals with a coverage mask; uncovered pixels are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    height: usize,
    width: usize,
    normals: Vec<Vec3>,
    mask: Vec<bool>,
}

impl NormalMap {
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            normals: vec![Vec3::zeros(); height * width],
            mask: vec![false; height * width],
        }
    }

    /// Validated construction from row-major pixels.
    pub fn from_parts(height: usize, width: usize, normals: Vec<Vec3>, mask: Vec<bool>) -> Result<Self> {
        if normals.len() != height * width || mask.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} normals and {} mask entries for {height}x{width}",
                normals.len(),
                mask.len()
            )));
        }
        let map = Self {
            height,
            width,
            normals,
            mask,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (n, &m)) in self.normals.iter().zip(&self.mask).enumerate() {
            let ok = if m {
                (n.norm() - 1.0).abs() <= NORMAL_TOLERANCE
            } else {
                *n == Vec3::zeros()
            };
            if !ok {
                return Err(Error::InvalidNormals(format!(
                    "pixel ({}, {}) holds {n:?} with coverage {m}",
                    i / self.width.max(1),
                    i % self.width.max(1)
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, at: usize, n: Vec3) {
        self.normals[at] = n;
        self.mask[at] = true;
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn normal(&self, row: usize, col: usize) -> Vec3 {
        self.normals[row * self.width + col]
    }

    pub fn is_covered(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn covered_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Loss of one view, already divided by its pixel count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewLoss {
    pub loss: f64,
    pub covered_pixels: usize,
}

fn check_pairs(pred_len: usize, target_len: usize) -> Result<()> {
    if pred_len != target_len {
        return Err(Error::ShapeMismatch(format!(
            "{pred_len} predicted maps vs {target_len} targets"
        )));
    }
    Ok(())
}

fn check_size(a: (usize, usize), b: (usize, usize), view: usize) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!(
            "view {view}: {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Sum over views of the mean per-pixel squared difference. Pixels covered
/// in only one map contribute the squared norm of the covered normal.
pub fn normal_loss(pred: &[NormalMap], target: &[NormalMap]) -> Result<(f64, Vec<ViewLoss>)> {
    check_pairs(pred.len(), target.len())?;
    let mut views = Vec::with_capacity(pred.len());
    for (v, (p, t)) in pred.iter().zip(target).enumerate() {
        check_size((p.height, p.width), (t.height, t.width), v)?;
        let mut sum = 0.0;
        let mut covered = 0;
        for i in 0..p.normals.len() {
            if p.mask[i] || t.mask[i] {
                covered += 1;
                sum += (p.normals[i] - t.normals[i]).norm_squared();
            }
        }
        let pixels = (p.height * p.width).max(1);
        views.push(ViewLoss {
            loss: sum / pixels as f64,
            covered_pixels: covered,
        });
    }
    Ok((views.iter().map(|v| v.loss).sum(), views))
}

struct ViewGradient {
    grad: Vec<Vec3>,
    hits: Vec<u32>,
    map: NormalMap,
}

/// Frozen-visibility gradient of one view's pixel sum, scaled by `scale`.
fn view_gradient(
    mesh: &TriangleMesh,
    cam: &CameraPose,
    buffer: &FaceBuffer,
    target: &NormalMap,
    scale: f64,
) -> ViewGradient {
    let rot = cam.rotation();
    let normals = camera_face_normals(mesh, &rot);
    let mut face_g = vec![Vec3::zeros(); mesh.face_count()];
    let mut face_hits = vec![0u32; mesh.face_count()];
    for (at, &f) in buffer.raw().iter().enumerate() {
        if f == NO_FACE {
            continue;
        }
        face_hits[f as usize] += 1;
        if target.mask[at] {
            face_g[f as usize] += (normals[f as usize] - target.normals[at]) * (2.0 * scale);
        }
    }
    let mut grad = vec![Vec3::zeros(); mesh.vertex_count()];
    let mut hits = vec![0u32; mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        for &v in face {
            hits[v] += face_hits[f];
        }
        if face_g[f] == Vec3::zeros() {
            continue;
        }
        let c = mesh.face_cross(f);
        let len = c.norm();
        if len == 0.0 {
            continue;
        }
        let n = c / len;
        let gw = rot.transpose() * face_g[f];
        let gc = (gw - n * n.dot(&gw)) / len;
        let [p0, p1, p2] = mesh.face_positions(f);
        let (e1, e2) = (p1 - p0, p2 - p0);
        let d1 = e2.cross(&gc);
        let d2 = gc.cross(&e1);
        grad[face[0]] -= d1 + d2;
        grad[face[1]] += d1;
        grad[face[2]] += d2;
    }
    ViewGradient {
        grad,
        hits,
        map: shade(mesh, cam, buffer),
    }
}

struct DataTerm {
    loss: f64,
    grad: Vec<Vec3>,
    hits: Vec<u32>,
}

/// Rasterizes every view, then reduces per-view partials in view order.
fn data_term(
    mesh: &TriangleMesh,
    targets: &[NormalMap],
    views: &[CameraPose],
    per_pixel_mean: bool,
) -> Result<DataTerm> {
    check_pairs(views.len(), targets.len())?;
    for (v, (cam, t)) in views.iter().zip(targets).enumerate() {
        check_size((cam.height, cam.width), (t.height, t.width), v)?;
    }
    let partials: Vec<ViewGradient> = views
        .par_iter()
        .zip(targets)
        .map(|(cam, t)| {
            let buffer = rasterize(mesh, cam);
            let scale = if per_pixel_mean {
                1.0 / cam.pixel_count() as f64
            } else {
                1.0
            };
            view_gradient(mesh, cam, &buffer, t, scale)
        })
        .collect();
    let mut grad = vec![Vec3::zeros(); mesh.vertex_count()];
    let mut hits = vec![0u32; mesh.vertex_count()];
    let mut maps = Vec::with_capacity(partials.len());
    for p in partials {
        for i in 0..grad.len() {
            grad[i] += p.grad[i];
            hits[i] += p.hits[i];
        }
        maps.push(p.map);
    }
    let (loss, _) = normal_loss(&maps, targets)?;
    Ok(DataTerm { loss, grad, hits })
}

/// Gradient of [`normal_loss`] of the mesh's renders with respect to vertex
/// positions, holding the pixel-to-face assignment fixed.
pub fn vertex_gradients(mesh: &TriangleMesh, targets: &[NormalMap], views: &[CameraPose]) -> Result<Vec<Vec3>> {
    Ok(data_term(mesh, targets, views, true)?.grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemeshConfig {
    pub learning_rate: f64,
    pub laplacian_weight: f64,
    pub steps: usize,
    pub views: Vec<CameraPose>,
}

impl RemeshConfig {
    pub fn new(views: Vec<CameraPose>) -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            laplacian_weight: DEFAULT_LAPLACIAN_WEIGHT,
            steps: DEFAULT_STEPS,
            views,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.laplacian_weight >= 0.0 && self.laplacian_weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "laplacian weight must be >= 0, got {}",
                self.laplacian_weight
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if self.views.is_empty() {
            return Err(Error::InvalidArgument("at least one view is required".into()));
        }
        Ok(())
    }
}

/// Eight equatorial views 45° apart plus top and bottom.
pub fn default_views(height: usize, width: usize, ortho_scale: f64) -> Result<Vec<CameraPose>> {
    let mut views: Vec<CameraPose> = (0..8)
        .map(|k| CameraPose::new(45.0 * k as f64, 0.0, height, width, ortho_scale))
        .collect::<Result<_>>()?;
    views.push(CameraPose::new(0.0, 90.0, height, width, ortho_scale)?);
    views.push(CameraPose::new(0.0, -90.0, height, width, ortho_scale)?);
    Ok(views)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub total: f64,
    pub data: f64,
    pub laplacian: f64,
}

#[derive(Debug, Clone)]
pub struct RemeshOutcome {
    pub mesh: TriangleMesh,
    /// One record per step, measured before its update, plus the final state.
    pub history: Vec<LossRecord>,
}

fn laplacian_term(lap: &LaplacianOperator, vertices: &[Vec3], weight: f64) -> (f64, Vec<Vec3>) {
    let lv = lap.apply(vertices);
    let loss = 0.5 * weight * lv.iter().map(|v| v.norm_squared()).sum::<f64>();
    let grad = lap.apply_transpose(&lv).into_iter().map(|g| g * weight).collect();
    (loss, grad)
}

/// Gradient descent on vertex positions. Each step re-rasterizes every
/// view, takes the frozen-visibility gradient of the per-pixel squared
/// normal error plus `w·LᵀLV`, and divides each vertex's step by its hit
/// count plus one.
pub fn remesh(coarse: &TriangleMesh, targets: &[NormalMap], cfg: &RemeshConfig) -> Result<RemeshOutcome> {
    cfg.validate()?;
    if targets.len() != cfg.views.len() {
        return Err(Error::WrongViewCount {
            expected: cfg.views.len(),
            got: targets.len(),
        });
    }
    for t in targets {
        t.validate()?;
    }
    let lap = build_laplacian(coarse);
    let mut mesh = coarse.clone();
    let mut history = Vec::with_capacity(cfg.steps + 1);
    for step in 0..=cfg.steps {
        let data = data_term(&mesh, targets, &cfg.views, false)?;
        let (lap_loss, lap_grad) = laplacian_term(&lap, mesh.vertices(), cfg.laplacian_weight);
        history.push(LossRecord {
            step,
            total: data.loss + lap_loss,
            data: data.loss,
            laplacian: lap_loss,
        });
        if step == cfg.steps {
            break;
        }
        if cfg.learning_rate == 0.0 {
            continue;
        }
        let mut next = mesh.vertices().to_vec();
        for (i, v) in next.iter_mut().enumerate() {
            let g = data.grad[i] + lap_grad[i];
            if g != Vec3::zeros() {
                *v -= g * (cfg.learning_rate / (data.hits[i] as f64 + 1.0));
            }
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFiniteUpdate(step));
            }
        }
        mesh = mesh.with_positions(next)?;
        log::debug!("remesh step {step}: data {:.6e} laplacian {:.6e}", data.loss, lap_loss);
    }
    Ok(RemeshOutcome { mesh, history })
}

#[cfg(test)]
mod tests;
