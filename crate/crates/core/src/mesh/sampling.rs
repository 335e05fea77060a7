use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::{TriangleMesh, Vec3};
use crate::error::{Error, Result};

/// `w0·v0 + w1·v1 + w2·v2` on the given face.
pub fn sample_barycentric(mesh: &TriangleMesh, face: usize, weights: [f64; 3]) -> Result<Vec3> {
    if face >= mesh.face_count() {
        return Err(Error::FaceOutOfRange {
            face,
            vertex_count: mesh.vertex_count(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(weights));
    }
    let [p0, p1, p2] = mesh.face_positions(face);
    Ok(p0 * weights[0] + p1 * weights[1] + p2 * weights[2])
}

/// Barycentric weights uniformly distributed on the 2-simplex.
pub fn uniform_barycentric<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let r1: f64 = rng.gen();
    let r2: f64 = rng.gen();
    let s = r1.sqrt();
    let w1 = s * (1.0 - r2);
    let w2 = s * r2;
    [1.0 - w1 - w2, w1, w2]
}

/// Points drawn area-uniformly over a mesh surface.
#[derive(Debug, Clone)]
pub struct SurfaceSamples {
    pub points: Vec<Vec3>,
    pub face_ids: Vec<usize>,
}

/// Draws `n` points: face with probability proportional to its area, then
/// uniform barycentric weights. Weights go to the face's vertices in
/// ascending index order, so the samples do not depend on winding.
pub fn sample_surface<R: Rng + ?Sized>(mesh: &TriangleMesh, n: usize, rng: &mut R) -> SurfaceSamples {
    let areas = mesh.face_areas();
    // Construction only fails for empty or all-zero weights, which a valid
    // mesh cannot have.
    let faces = WeightedIndex::new(&areas).expect("mesh faces have positive area");
    let mut points = Vec::with_capacity(n);
    let mut face_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let f = faces.sample(rng);
        let [w0, w1, w2] = uniform_barycentric(rng);
        let mut idx = mesh.faces()[f];
        idx.sort_unstable();
        let [p0, p1, p2] = idx.map(|i| mesh.vertices()[i]);
        points.push(p0 * w0 + p1 * w1 + p2 * w2);
        face_ids.push(f);
    }
    SurfaceSamples { points, face_ids }
}
