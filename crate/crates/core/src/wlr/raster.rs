use nalgebra::Matrix3;

use super::NormalMap;
use crate::mesh::{CameraPose, TriangleMesh, Vec3};

pub(crate) const NO_FACE: u32 = u32::MAX;

/// Per-pixel winning face of a z-buffered rasterization.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceBuffer {
    pub height: usize,
    pub width: usize,
    faces: Vec<u32>,
}

impl FaceBuffer {
    pub fn face(&self, row: usize, col: usize) -> Option<usize> {
        match self.faces[row * self.width + col] {
            NO_FACE => None,
            f => Some(f as usize),
        }
    }

    pub(crate) fn raw(&self) -> &[u32] {
        &self.faces
    }

    pub fn covered(&self) -> usize {
        self.faces.iter().filter(|&&f| f != NO_FACE).count()
    }
}

fn cross2(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Rasterizes front-facing triangles at pixel centers. Edges are inclusive;
/// the nearest triangle wins and equal depths go to the lowest face index.
pub fn rasterize(mesh: &TriangleMesh, cam: &CameraPose) -> FaceBuffer {
    let (h, w) = (cam.height, cam.width);
    let rot = cam.rotation();
    let pc: Vec<Vec3> = mesh.vertices().iter().map(|v| rot * v).collect();
    let mut depth = vec![f64::INFINITY; h * w];
    let mut faces = vec![NO_FACE; h * w];
    for (fi, f) in mesh.faces().iter().enumerate() {
        let [a, b, c] = f.map(|i| pc[i]);
        let area2 = cross2((b.x - a.x, b.y - a.y), (c.x - a.x, c.y - a.y));
        if !(area2 > 0.0) {
            continue;
        }
        let proj = [a, b, c].map(|p| cam.project_camera(&p));
        let rmin = proj.iter().map(|p| p.row).fold(f64::INFINITY, f64::min);
        let rmax = proj.iter().map(|p| p.row).fold(f64::NEG_INFINITY, f64::max);
        let cmin = proj.iter().map(|p| p.col).fold(f64::INFINITY, f64::min);
        let cmax = proj.iter().map(|p| p.col).fold(f64::NEG_INFINITY, f64::max);
        let r0 = (rmin - 0.5).ceil().max(0.0);
        let r1 = (rmax - 0.5).floor().min(h as f64 - 1.0);
        let c0 = (cmin - 0.5).ceil().max(0.0);
        let c1 = (cmax - 0.5).floor().min(w as f64 - 1.0);
        if r0 > r1 || c0 > c1 {
            continue;
        }
        for r in r0 as usize..=r1 as usize {
            for col in c0 as usize..=c1 as usize {
                let (x, y) = cam.pixel_center(r, col);
                let w0 = cross2((c.x - b.x, c.y - b.y), (x - b.x, y - b.y));
                let w1 = cross2((a.x - c.x, a.y - c.y), (x - c.x, y - c.y));
                let w2 = cross2((b.x - a.x, b.y - a.y), (x - a.x, y - a.y));
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let d = -(w0 * a.z + w1 * b.z + w2 * c.z) / area2;
                let at = r * w + col;
                if d < depth[at] {
                    depth[at] = d;
                    faces[at] = fi as u32;
                }
            }
        }
    }
    FaceBuffer {
        height: h,
        width: w,
        faces,
    }
}

/// Unit face normals rotated into camera space.
pub(crate) fn camera_face_normals(mesh: &TriangleMesh, rot: &Matrix3<f64>) -> Vec<Vec3> {
    (0..mesh.face_count())
        .map(|f| {
            let c = rot * mesh.face_cross(f);
            let norm = c.norm();
            if norm > 0.0 {
                c / norm
            } else {
                Vec3::zeros()
            }
        })
        .collect()
}

pub(crate) fn shade(mesh: &TriangleMesh, cam: &CameraPose, buffer: &FaceBuffer) -> NormalMap {
    let normals = camera_face_normals(mesh, &cam.rotation());
    let mut map = NormalMap::empty(cam.height, cam.width);
    for (at, &f) in buffer.raw().iter().enumerate() {
        if f != NO_FACE {
            map.set(at, normals[f as usize]);
        }
    }
    map
}

/// Flat-shaded camera-space normal map of the visible front faces.
pub fn render_normals(mesh: &TriangleMesh, cam: &CameraPose) -> NormalMap {
    shade(mesh, cam, &rasterize(mesh, cam))
}
