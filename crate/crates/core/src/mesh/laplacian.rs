use super::{TriangleMesh, Vec3};

/// Uniform (umbrella) Laplacian: `L[i][i] = -1` and `L[i][j] = 1/deg(i)`
/// for every 1-ring neighbor `j`. Isolated vertices get an all-zero row.
#[derive(Debug, Clone)]
pub struct LaplacianOperator {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    isolated: Vec<usize>,
}

pub fn build_laplacian(mesh: &TriangleMesh) -> LaplacianOperator {
    let n = mesh.vertex_count();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &[a, b, c] in mesh.faces() {
        for (u, v) in [(a, b), (b, c), (c, a)] {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::new();
    let mut weights = Vec::new();
    let mut isolated = Vec::new();
    offsets.push(0);
    for (i, ring) in adjacency.iter_mut().enumerate() {
        ring.sort_unstable();
        ring.dedup();
        if ring.is_empty() {
            isolated.push(i);
        }
        let w = 1.0 / ring.len() as f64;
        for &j in ring.iter() {
            neighbors.push(j);
            weights.push(w);
        }
        offsets.push(neighbors.len());
    }
    if !isolated.is_empty() {
        log::warn!("{} isolated vertices get all-zero Laplacian rows", isolated.len());
    }
    LaplacianOperator {
        offsets,
        neighbors,
        weights,
        isolated,
    }
}

impl LaplacianOperator {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Off-diagonal entries of row `i` as `(column, weight)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        if self.offsets[i] == self.offsets[i + 1] {
            0.0
        } else {
            -1.0
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.diagonal(i) + self.row(i).map(|(_, w)| w).sum::<f64>()
    }

    /// Vertices with no neighbors.
    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    /// `L · x` for a per-vertex vector field.
    pub fn apply(&self, x: &[Vec3]) -> Vec<Vec3> {
        (0..self.len())
            .map(|i| {
                let mut acc = x[i] * self.diagonal(i);
                for (j, w) in self.row(i) {
                    acc += x[j] * w;
                }
                acc
            })
            .collect()
    }

    /// `Lᵀ · y`.
    pub fn apply_transpose(&self, y: &[Vec3]) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = (0..self.len()).map(|i| y[i] * self.diagonal(i)).collect();
        for i in 0..self.len() {
            for (j, w) in self.row(i) {
                out[j] += y[i] * w;
            }
        }
        out
    }
}
