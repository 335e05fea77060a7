//! Fourier feature construction and multi-view projection of body points.
//!
//! A body mesh is densified by area-weighted barycentric sampling, each point
//! is expanded into `[p, cos(2¹p), sin(2¹p), …, cos(2^q p), sin(2^q p)]`
//! (coordinatewise, `3(2q+1)` values), and the expanded cloud is z-buffered
//! into one image-aligned [`FeatureStack`] per view.

mod stack;

pub use stack::{project_features, FeatureStack};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{bounding_box, sample_surface, CameraPose, PointCloud, TriangleMesh, Vec3};

/// Default densification target.
pub const DEFAULT_POINT_COUNT: usize = 100_000;
/// Default expansion order.
pub const DEFAULT_ORDER: usize = 8;
/// Default view azimuths (degrees) at elevation 0.
pub const DEFAULT_VIEW_AZIMUTHS: [f64; 3] = [0.0, 120.0, 240.0];

/// Feature length for expansion order `q`.
pub const fn feature_len(q: usize) -> usize {
    3 * (2 * q + 1)
}

/// Affine map applied to coordinates before the periodic bands are taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: Vec3,
    pub scale: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Self {
            center: Vec3::zeros(),
            scale: 1.0,
        }
    }

    /// Centers the bounding box at the origin and scales its longest side
    /// to 2.
    pub fn fit(points: &[Vec3]) -> Self {
        if points.is_empty() {
            return Self::identity();
        }
        let (lo, hi) = bounding_box(points);
        let longest = (hi - lo).max();
        Self {
            center: (lo + hi) / 2.0,
            scale: if longest > 0.0 { 2.0 / longest } else { 1.0 },
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p - self.center) * self.scale
    }
}

/// Points with their Fourier feature vectors, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPointCloud {
    points: Vec<Vec3>,
    features: Vec<f64>,
    order_q: usize,
}

impl FourierPointCloud {
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.order_q
    }

    pub fn feature_len(&self) -> usize {
        feature_len(self.order_q)
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        let d = self.feature_len();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Expands raw coordinates.
pub fn fourier_expand(cloud: &PointCloud, q: usize) -> FourierPointCloud {
    fourier_expand_normalized(cloud, q, &Normalization::identity())
}

/// Identity band holds the raw point; the periodic bands are taken of the
/// normalized coordinates.
pub fn fourier_expand_normalized(cloud: &PointCloud, q: usize, norm: &Normalization) -> FourierPointCloud {
    let d = feature_len(q);
    let mut features = Vec::with_capacity(cloud.len() * d);
    for p in cloud.points() {
        features.extend(p.iter());
        let n = norm.apply(p);
        let mut freq = 1.0;
        for _ in 0..q {
            freq *= 2.0;
            features.extend(n.iter().map(|x| (freq * x).cos()));
            features.extend(n.iter().map(|x| (freq * x).sin()));
        }
    }
    FourierPointCloud {
        points: cloud.points().to_vec(),
        features,
        order_q: q,
    }
}

/// All mesh vertices followed by `target_count - |V|` area-weighted surface
/// samples, drawn deterministically from `seed`.
pub fn densify(mesh: &TriangleMesh, target_count: usize, seed: u64) -> Result<PointCloud> {
    let n_vertices = mesh.vertex_count();
    if target_count < n_vertices {
        return Err(Error::TargetTooSmall {
            target: target_count,
            vertices: n_vertices,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = mesh.vertices().to_vec();
    points.extend(sample_surface(mesh, target_count - n_vertices, &mut rng).points);
    Ok(PointCloud::new(points))
}

/// Densifies, expands and projects the mesh into one stack per view.
///
/// The periodic bands are computed on coordinates normalized to the mesh
/// bounding box (see [`Normalization::fit`]); the identity band keeps world
/// coordinates.
pub fn build_sle_stacks(
    mesh: &TriangleMesh,
    q: usize,
    m: usize,
    views: &[CameraPose],
    seed: u64,
) -> Result<Vec<FeatureStack>> {
    if views.len() != 3 {
        return Err(Error::WrongViewCount {
            expected: 3,
            got: views.len(),
        });
    }
    let cloud = densify(mesh, m, seed)?;
    let expanded = fourier_expand_normalized(&cloud, q, &Normalization::fit(mesh.vertices()));
    Ok(views
        .par_iter()
        .map(|cam| project_features(&expanded, cam, stack::DEFAULT_FILL))
        .collect())
}
