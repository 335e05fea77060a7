use std::collections::HashMap;

use rayon::prelude::*;

use super::GaussianSplatSet;
use crate::error::{Error, Result};
use crate::mesh::{TriangleMesh, Vec3};

/// Mahalanobis² beyond which a splat's contribution (< e⁻³⁰) is skipped.
const DENSITY_CUTOFF: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl GridBounds {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).all(|a| min[a] < max[a] && min[a].is_finite() && max[a].is_finite()) {
            Ok(Self { min, max })
        } else {
            Err(Error::InvalidArgument(format!("empty grid bounds {min:?}..{max:?}")))
        }
    }

    pub fn cube(half: f64) -> Result<Self> {
        Self::new(Vec3::repeat(-half), Vec3::repeat(half))
    }

    pub fn voxel_size(&self, n: usize) -> Vec3 {
        (self.max - self.min) / n as f64
    }
}

/// Samples at the `N³` voxel centers, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    bounds: GridBounds,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn(n: usize, bounds: GridBounds, f: impl Fn(&Vec3) -> f64 + Sync) -> Result<Self> {
        check_resolution(n)?;
        let mut values = vec![0.0; n * n * n];
        values.par_chunks_mut(n * n).enumerate().for_each(|(k, slab)| {
            for j in 0..n {
                for i in 0..n {
                    slab[j * n + i] = f(&voxel_center(&bounds, n, i, j, k));
                }
            }
        });
        Ok(Self { n, bounds, values })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn bounds(&self) -> GridBounds {
        self.bounds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(k * self.n + j) * self.n + i]
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        voxel_center(&self.bounds, self.n, i, j, k)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution must be >= 2, got {n}")));
    }
    Ok(())
}

fn voxel_center(b: &GridBounds, n: usize, i: usize, j: usize, k: usize) -> Vec3 {
    let step = b.voxel_size(n);
    b.min
        + Vec3::new(
            (i as f64 + 0.5) * step.x,
            (j as f64 + 0.5) * step.y,
            (k as f64 + 0.5) * step.z,
        )
}

/// `Σ αᵢ·exp(-½ (v-xᵢ)ᵀ Σᵢ⁻¹ (v-xᵢ))` at every voxel center.
pub fn density_grid(set: &GaussianSplatSet, n: usize, bounds: GridBounds) -> Result<ScalarField> {
    check_resolution(n)?;
    let step = bounds.voxel_size(n);
    let prepared: Vec<_> = set
        .splats
        .iter()
        .map(|s| {
            let cov = s.covariance();
            let reach = Vec3::new(cov[(0, 0)], cov[(1, 1)], cov[(2, 2)]).map(|v| (DENSITY_CUTOFF * v).sqrt());
            let index_range = |a: usize| {
                let lo = ((s.center()[a] - reach[a] - bounds.min[a]) / step[a] - 0.5)
                    .ceil()
                    .max(0.0);
                let hi = ((s.center()[a] + reach[a] - bounds.min[a]) / step[a] - 0.5)
                    .floor()
                    .min(n as f64 - 1.0);
                (lo, hi)
            };
            let ranges = [index_range(0), index_range(1), index_range(2)];
            (s.center(), s.precision(), s.opacity(), ranges)
        })
        .collect();

    let mut values = vec![0.0; n * n * n];
    values.par_chunks_mut(n * n).enumerate().for_each(|(k, slab)| {
        for (center, prec, opacity, ranges) in &prepared {
            let kf = k as f64;
            if kf < ranges[2].0 || kf > ranges[2].1 || ranges[0].0 > ranges[0].1 || ranges[1].0 > ranges[1].1 {
                continue;
            }
            for j in ranges[1].0 as usize..=ranges[1].1 as usize {
                for i in ranges[0].0 as usize..=ranges[0].1 as usize {
                    let d = voxel_center(&bounds, n, i, j, k) - center;
                    let m = d.dot(&(prec * d));
                    if m <= DENSITY_CUTOFF {
                        slab[j * n + i] += opacity * (-0.5 * m).exp();
                    }
                }
            }
        }
    });
    Ok(ScalarField { n, bounds, values })
}

/// `0.3·max(field)`
pub fn default_iso(field: &ScalarField) -> f64 {
    0.3 * field.max_value()
}

/// Kuhn decomposition of the unit cube into six tetrahedra sharing the
/// `000-111` diagonal. Corner `c` has offset `(c & 1, c >> 1 & 1, c >> 2 & 1)`.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

struct Extractor<'a> {
    field: &'a ScalarField,
    iso: f64,
    vertices: Vec<Vec3>,
    edge_vertex: HashMap<(usize, usize), usize>,
    faces: Vec<[usize; 3]>,
}

impl Extractor<'_> {
    fn node(&self, id: usize) -> (Vec3, f64) {
        let n = self.field.n;
        let (i, j, k) = (id % n, id / n % n, id / (n * n));
        (self.field.position(i, j, k), self.field.values[id])
    }

    fn crossing(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.edge_vertex.get(&key) {
            return v;
        }
        let ((pa, fa), (pb, fb)) = (self.node(key.0), self.node(key.1));
        let t = (self.iso - fa) / (fb - fa);
        self.vertices.push(pa + (pb - pa) * t);
        self.edge_vertex.insert(key, self.vertices.len() - 1);
        self.vertices.len() - 1
    }

    /// Emits a triangle facing from `inside` toward `outside`.
    fn emit(&mut self, tri: [usize; 3], inside: Vec3, outside: Vec3) {
        let [a, b, c] = tri.map(|v| self.vertices[v]);
        let normal = (b - a).cross(&(c - a));
        if normal.dot(&(outside - inside)) < 0.0 {
            self.faces.push([tri[0], tri[2], tri[1]]);
        } else {
            self.faces.push(tri);
        }
    }

    fn tet(&mut self, ids: [usize; 4]) {
        let inside: Vec<usize> = ids
            .iter()
            .copied()
            .filter(|&v| self.field.values[v] > self.iso)
            .collect();
        let outside: Vec<usize> = ids
            .iter()
            .copied()
            .filter(|&v| self.field.values[v] <= self.iso)
            .collect();
        if inside.is_empty() || outside.is_empty() {
            return;
        }
        let centroid = |s: &Self, set: &[usize]| set.iter().map(|&v| s.node(v).0).sum::<Vec3>() / set.len() as f64;
        let (ci, co) = (centroid(self, &inside), centroid(self, &outside));
        match (inside.len(), outside.len()) {
            (1, 3) => {
                let tri = [0, 1, 2].map(|k| self.crossing(inside[0], outside[k]));
                self.emit(tri, ci, co);
            }
            (3, 1) => {
                let tri = [0, 1, 2].map(|k| self.crossing(inside[k], outside[0]));
                self.emit(tri, ci, co);
            }
            _ => {
                let (a, b, c, d) = (inside[0], inside[1], outside[0], outside[1]);
                let ac = self.crossing(a, c);
                let ad = self.crossing(a, d);
                let bd = self.crossing(b, d);
                let bc = self.crossing(b, c);
                self.emit([ac, ad, bd], ci, co);
                self.emit([ac, bd, bc], ci, co);
            }
        }
    }
}

/// Isosurface of `field` at `iso` by marching tetrahedra over the voxel
/// centers, with linear interpolation along grid edges. Values above `iso`
/// are inside; faces wind counter-clockwise seen from outside, so normals
/// point toward decreasing field.
pub fn export_mesh(field: &ScalarField, iso: f64) -> Result<TriangleMesh> {
    if !iso.is_finite() {
        return Err(Error::InvalidArgument(format!("iso level must be finite, got {iso}")));
    }
    let n = field.n;
    let mut ex = Extractor {
        field,
        iso,
        vertices: Vec::new(),
        edge_vertex: HashMap::new(),
        faces: Vec::new(),
    };
    for k in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let corner = |c: usize| ((k + (c >> 2 & 1)) * n + j + (c >> 1 & 1)) * n + i + (c & 1);
                for tet in TETS {
                    ex.tet(tet.map(corner));
                }
            }
        }
    }
    if ex.faces.is_empty() {
        return Err(Error::EmptySurface);
    }
    let (mesh, dropped) = TriangleMesh::new_lenient(ex.vertices, ex.faces)?;
    if dropped > 0 {
        log::debug!("isosurface: dropped {dropped} zero-area triangles");
    }
    Ok(mesh)
}
