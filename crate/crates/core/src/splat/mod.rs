//! Anisotropic 3D Gaussians: construction from feature maps, orthographic
//! rendering, density evaluation and isosurface export.

mod density;
mod io;
mod render;

pub use density::{default_iso, density_grid, export_mesh, GridBounds, ScalarField};
pub use io::{load_splats, read_splats, save_splats, write_splats, SPLAT_PROPERTIES};
pub use render::{render, RenderedImage, TRUNCATION_SIGMA};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};

use crate::error::{Error, Result};
use crate::mesh::{Vec3, UNIT_TOLERANCE};
use crate::sle::FeatureStack;

/// Parameters per Gaussian.
pub const SPLAT_PARAMS: usize = 14;
pub const MIN_SCALE: f64 = 1e-4;
pub const MAX_SCALE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSplat {
    center: Vec3,
    scale: Vec3,
    /// `[w, x, y, z]`
    rotation: [f64; 4],
    opacity: f64,
    color: [f64; 3],
}

impl GaussianSplat {
    /// Validates scale and rotation; opacity and color are clamped to `[0, 1]`.
    pub fn new(center: Vec3, scale: Vec3, rotation: [f64; 4], opacity: f64, color: [f64; 3]) -> Result<Self> {
        if !center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("splat center is not finite".into()));
        }
        if !scale.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "splat scales must be positive, got {scale:?}"
            )));
        }
        let norm = rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(Error::InvalidArgument(format!("rotation quaternion has norm {norm}")));
        }
        if !opacity.is_finite() || !color.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("splat opacity or color is not finite".into()));
        }
        Ok(Self {
            center,
            scale,
            rotation,
            opacity: opacity.clamp(0.0, 1.0),
            color: color.map(|c| c.clamp(0.0, 1.0)),
        })
    }

    pub fn isotropic(center: Vec3, sigma: f64, opacity: f64, color: [f64; 3]) -> Result<Self> {
        Self::new(center, Vec3::repeat(sigma), [1.0, 0.0, 0.0, 0.0], opacity, color)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn scale(&self) -> Vec3 {
        self.scale
    }

    pub fn rotation(&self) -> [f64; 4] {
        self.rotation
    }

    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    pub fn color(&self) -> [f64; 3] {
        self.color
    }

    /// `[x, s, q, α, c]`
    pub fn params(&self) -> [f64; SPLAT_PARAMS] {
        let (x, s, q, c) = (self.center, self.scale, self.rotation, self.color);
        [
            x.x,
            x.y,
            x.z,
            s.x,
            s.y,
            s.z,
            q[0],
            q[1],
            q[2],
            q[3],
            self.opacity,
            c[0],
            c[1],
            c[2],
        ]
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
            .to_rotation_matrix()
            .into_inner()
    }

    /// `R·diag(s²)·Rᵀ`
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        r * Matrix3::from_diagonal(&self.scale.component_mul(&self.scale)) * r.transpose()
    }

    /// `R·diag(s⁻²)·Rᵀ`
    pub fn precision(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        let inv = self.scale.map(|s| 1.0 / (s * s));
        r * Matrix3::from_diagonal(&inv) * r.transpose()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianSplatSet {
    pub splats: Vec<GaussianSplat>,
}

impl GaussianSplatSet {
    pub fn new(splats: Vec<GaussianSplat>) -> Self {
        Self { splats }
    }

    pub fn len(&self) -> usize {
        self.splats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splats.is_empty()
    }

    /// Axis-aligned box enclosing every splat's `k·σ` extent.
    pub fn bounds(&self, k: f64) -> Option<GridBounds> {
        let mut it = self.splats.iter().map(|s| {
            let cov = s.covariance();
            let ext = Vec3::new(cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()) * k;
            (s.center - ext, s.center + ext)
        });
        let (mut lo, mut hi) = it.next()?;
        for (a, b) in it {
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        GridBounds::new(lo, hi).ok()
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One splat per pixel, row-major. Raw channel layout is
/// `[x(3), s(3), q(4), α(1), c(3)]`; scale goes through `exp` (clamped),
/// opacity and color through the logistic, and the quaternion is normalized.
/// A zero quaternion becomes the identity rotation.
pub fn splats_from_feature_map(map: &FeatureStack) -> Result<GaussianSplatSet> {
    if map.channels() != SPLAT_PARAMS {
        return Err(Error::WrongChannelCount {
            expected: SPLAT_PARAMS,
            got: map.channels(),
        });
    }
    let mut splats = Vec::with_capacity(map.height() * map.width());
    let mut null_quats = 0usize;
    for r in 0..map.height() {
        for c in 0..map.width() {
            let p = map.pixel(r, c);
            let center = Vec3::new(p[0], p[1], p[2]);
            let scale = Vec3::new(p[3], p[4], p[5]).map(|v| v.exp().clamp(MIN_SCALE, MAX_SCALE));
            let q = [p[6], p[7], p[8], p[9]];
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rotation = if norm > 0.0 && norm.is_finite() {
                q.map(|v| v / norm)
            } else {
                null_quats += 1;
                [1.0, 0.0, 0.0, 0.0]
            };
            let color = [logistic(p[11]), logistic(p[12]), logistic(p[13])];
            splats.push(GaussianSplat::new(center, scale, rotation, logistic(p[10]), color)?);
        }
    }
    if null_quats > 0 {
        log::warn!("{null_quats} pixel(s) had a null quaternion; used the identity rotation");
    }
    Ok(GaussianSplatSet::new(splats))
}
