//! Procedural test and benchmark meshes.

use std::collections::HashMap;

use super::{TriangleMesh, Vec3};

/// Axis-aligned cube of side `side` centered at the origin, 8 vertices and
/// 12 outward-facing triangles.
pub fn cube(side: f64) -> TriangleMesh {
    let h = side / 2.0;
    let vertices = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { -h } else { h },
                if i & 2 == 0 { -h } else { h },
                if i & 4 == 0 { -h } else { h },
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriangleMesh::new(vertices, faces).expect("cube is valid")
}

/// Regular hexagon in the z = 0 plane: center vertex 0 plus six rim
/// vertices, six triangles facing +z.
pub fn hexagon_fan(radius: f64) -> TriangleMesh {
    let mut vertices = vec![Vec3::zeros()];
    for k in 0..6 {
        let a = std::f64::consts::PI / 3.0 * k as f64;
        vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), 0.0));
    }
    let faces = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    TriangleMesh::new(vertices, faces).expect("hexagon is valid")
}

/// Icosphere of the given radius; `subdivisions` rounds of 4-to-1 splits of
/// an icosahedron. Faces wind counter-clockwise seen from outside.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::from(*p).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) / 2.0).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Displaces every vertex along its direction from the origin by a Gaussian
/// bump `amplitude · exp(-θ² / (2σ²))`, θ being the angle to `direction`.
pub fn radial_bump(mesh: &TriangleMesh, direction: Vec3, amplitude: f64, angular_sigma: f64) -> TriangleMesh {
    let dir = direction.normalize();
    mesh.map_positions(|v| {
        let r = v.norm();
        if r == 0.0 {
            return *v;
        }
        let u = v / r;
        let theta = u.dot(&dir).clamp(-1.0, 1.0).acos();
        let bump = amplitude * (-(theta * theta) / (2.0 * angular_sigma * angular_sigma)).exp();
        u * (r + bump)
    })
    .expect("radial displacement keeps faces valid")
}
