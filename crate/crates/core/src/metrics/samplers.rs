use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mesh::{sample_surface, TriangleMesh, Vec3};
use crate::registry::Registry;

/// Points with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSurface {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
}

pub trait SurfaceSampler: Send + Sync {
    fn sample(&self, mesh: &TriangleMesh, n: usize, seed: u64) -> Result<SampledSurface>;
}

/// Area-uniform points carrying their face normal.
struct AreaUniform;

impl SurfaceSampler for AreaUniform {
    fn sample(&self, mesh: &TriangleMesh, n: usize, seed: u64) -> Result<SampledSurface> {
        let s = sample_surface(mesh, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let normals = s.face_ids.iter().map(|&f| mesh.face_normal(f)).collect();
        Ok(SampledSurface {
            points: s.points,
            normals,
        })
    }
}

/// The mesh vertices themselves, ignoring the count and seed.
struct Vertices;

impl SurfaceSampler for Vertices {
    fn sample(&self, mesh: &TriangleMesh, _n: usize, _seed: u64) -> Result<SampledSurface> {
        Ok(SampledSurface {
            points: mesh.vertices().to_vec(),
            normals: mesh.vertex_normals_or_computed(),
        })
    }
}

pub fn surface_samplers() -> Registry<dyn SurfaceSampler> {
    let mut reg: Registry<dyn SurfaceSampler> = Registry::new("surface sampler");
    reg.register("surface", Box::new(AreaUniform));
    reg.register("vertices", Box::new(Vertices));
    reg
}
