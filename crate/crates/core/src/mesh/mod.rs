//! Triangle meshes, point clouds and the geometric primitives shared by
//! every stage.

mod camera;
pub mod io;
mod laplacian;
pub mod ply;
pub mod primitives;
mod sampling;
mod spatial;

pub use camera::{project_point, CameraPose, Projection};
pub use io::{load_mesh, save_mesh, LoadedMesh, MeshCodec, MeshFormat};
pub use laplacian::{build_laplacian, LaplacianOperator};
pub use sampling::{sample_barycentric, sample_surface, uniform_barycentric, SurfaceSamples};
pub use spatial::{nearest_neighbor, NeighborGrid};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Faces whose area is at or below this (cm²) are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;
/// Allowed deviation from unit length for stored normals.
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    vertex_normals: Option<Vec<Vec3>>,
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices and degenerate faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (fi, f) in faces.iter().enumerate() {
            check_indices(fi, f, vertices.len())?;
            if is_degenerate(&vertices, f) {
                return Err(Error::DegenerateFace(fi));
            }
        }
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        Ok(Self {
            vertices,
            faces,
            vertex_normals: None,
        })
    }

    /// Builds a mesh, dropping degenerate faces. Returns the mesh and the
    /// number of dropped faces.
    pub fn new_lenient(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<(Self, usize)> {
        let mut kept = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            check_indices(fi, f, vertices.len())?;
            if !is_degenerate(&vertices, f) {
                kept.push(*f);
            }
        }
        let dropped = faces.len() - kept.len();
        if kept.is_empty() {
            return Err(Error::EmptyMesh);
        }
        Ok((
            Self {
                vertices,
                faces: kept,
                vertex_normals: None,
            },
            dropped,
        ))
    }

    /// Attaches per-vertex normals; each must be unit length within
    /// [`UNIT_TOLERANCE`].
    pub fn with_normals(mut self, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::InvalidNormals(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.vertices.len()
            )));
        }
        if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > UNIT_TOLERANCE) {
            return Err(Error::InvalidNormals(format!("normal {i} is not unit length")));
        }
        self.vertex_normals = Some(normals);
        Ok(self)
    }

    /// Same connectivity with new vertex positions. Normals are dropped.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Self> {
        if positions.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                expected: self.vertices.len(),
                got: positions.len(),
            });
        }
        Self::new(positions, self.faces.clone())
    }

    /// Applies `f` to every vertex position.
    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        self.with_positions(self.vertices.iter().map(f).collect())
    }

    /// The same surface with every face winding reversed.
    pub fn flipped(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            vertex_normals: self.vertex_normals.as_ref().map(|ns| ns.iter().map(|n| -n).collect()),
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_normals(&self) -> Option<&[Vec3]> {
        self.vertex_normals.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_positions(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal, (v1 - v0) x (v2 - v0).
    pub fn face_cross(&self, face: usize) -> Vec3 {
        let [p0, p1, p2] = self.face_positions(face);
        (p1 - p0).cross(&(p2 - p0))
    }

    pub fn face_normal(&self, face: usize) -> Vec3 {
        self.face_cross(face).normalize()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn surface_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Stored vertex normals, or area-weighted face normals when absent.
    pub fn vertex_normals_or_computed(&self) -> Vec<Vec3> {
        if let Some(ns) = &self.vertex_normals {
            return ns.clone();
        }
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            let c = self.face_cross(fi);
            for &v in f {
                acc[v] += c;
            }
        }
        acc.into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vec3::zeros()
                }
            })
            .collect()
    }

    /// Axis-aligned bounds as (min, max).
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        bounding_box(&self.vertices)
    }
}

fn check_indices(fi: usize, f: &[usize; 3], n: usize) -> Result<()> {
    if f.iter().any(|&i| i >= n) {
        return Err(Error::FaceOutOfRange {
            face: fi,
            vertex_count: n,
        });
    }
    Ok(())
}

fn is_degenerate(vertices: &[Vec3], f: &[usize; 3]) -> bool {
    let [a, b, c] = *f;
    if a == b || b == c || a == c {
        return true;
    }
    let area = 0.5 * (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a])).norm();
    !(area > DEGENERATE_AREA)
}

pub(crate) fn bounding_box(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Vec3>,
    normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, normals: None }
    }

    pub fn with_normals(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: normals.len(),
            });
        }
        if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > UNIT_TOLERANCE) {
            return Err(Error::InvalidNormals(format!("normal {i} is not unit length")));
        }
        Ok(Self {
            points,
            normals: Some(normals),
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
