use super::{bounding_box, PointCloud, Vec3};
use crate::error::{Error, Result};

/// Closest cloud point to `query` by exhaustive scan; ties go to the lowest
/// index.
pub fn nearest_neighbor(query: &Vec3, cloud: &PointCloud) -> Result<(usize, f64)> {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in cloud.points().iter().enumerate() {
        let d2 = (p - query).norm_squared();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    if best.0 == usize::MAX {
        return Err(Error::EmptyCloud);
    }
    Ok((best.0, best.1.sqrt()))
}

/// Uniform hash grid for exact nearest-neighbor queries.
///
/// Cell size is the median nearest-neighbor spacing of a strided sample of
/// the points, grown if needed so the grid stays within a few cells per
/// point. Points are stored cell by cell in ascending index order.
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    points: Vec<Vec3>,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    cell_start: Vec<usize>,
    entries: Vec<usize>,
}

const SPACING_SAMPLES: usize = 64;
const MAX_CELLS_PER_POINT: usize = 4;

impl NeighborGrid {
    pub fn new(points: &[Vec3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let (lo, hi) = bounding_box(points);
        let extent = hi - lo;
        let mut cell = median_spacing(points);
        let max_extent = extent.max();
        if !(cell > 0.0) {
            cell = if max_extent > 0.0 { max_extent } else { 1.0 };
        }
        let dims_for = |cell: f64| -> [usize; 3] { [0, 1, 2].map(|a| (extent[a] / cell).floor() as usize + 1) };
        let budget = (MAX_CELLS_PER_POINT * points.len()).max(8) as f64;
        let mut dims = dims_for(cell);
        while dims.iter().map(|&d| d as f64).product::<f64>() > budget {
            cell *= 1.5;
            dims = dims_for(cell);
        }

        let n_cells = dims[0] * dims[1] * dims[2];
        let cell_of: Vec<usize> = points
            .iter()
            .map(|p| {
                let c = cell_coords(p, &lo, cell, &dims);
                (c[2] * dims[1] + c[1]) * dims[0] + c[0]
            })
            .collect();
        let mut counts = vec![0usize; n_cells + 1];
        for &c in &cell_of {
            counts[c + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let cell_start = counts.clone();
        let mut fill = counts;
        let mut entries = vec![0usize; points.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            entries[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(Self {
            points: points.to_vec(),
            origin: lo,
            cell,
            dims,
            cell_start,
            entries,
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Index and distance of the closest point; ties go to the lowest index.
    pub fn nearest(&self, query: &Vec3) -> (usize, f64) {
        let (idx, d2) = self.nearest_squared(query);
        (idx, d2.sqrt())
    }

    fn nearest_squared(&self, query: &Vec3) -> (usize, f64) {
        // Query cell in unclamped integer coordinates.
        let q: [i64; 3] = [0, 1, 2].map(|a| ((query[a] - self.origin[a]) / self.cell).floor() as i64);
        let hi: [i64; 3] = self.dims.map(|d| d as i64 - 1);
        // First ring that touches the grid box.
        let start = (0..3).map(|a| (-q[a]).max(q[a] - hi[a]).max(0)).max().unwrap_or(0);
        // Ring beyond which every cell of the grid has been visited.
        let last = (0..3).map(|a| q[a].abs().max((hi[a] - q[a]).abs())).max().unwrap_or(0);

        let mut best = (usize::MAX, f64::INFINITY);
        let mut ring = start;
        loop {
            self.scan_ring(&q, ring, &hi, query, &mut best);
            // Unvisited points lie at least `ring * cell` away.
            let bound = ring as f64 * self.cell;
            if best.0 != usize::MAX && best.1.sqrt() < bound {
                break;
            }
            if ring >= last {
                break;
            }
            ring += 1;
        }
        best
    }

    fn scan_ring(&self, q: &[i64; 3], ring: i64, hi: &[i64; 3], query: &Vec3, best: &mut (usize, f64)) {
        let range = |a: usize| (q[a] - ring).max(0)..=(q[a] + ring).min(hi[a]);
        for z in range(2) {
            let dz = (z - q[2]).abs();
            for y in range(1) {
                let dy = (y - q[1]).abs();
                for x in range(0) {
                    if dz.max(dy).max((x - q[0]).abs()) != ring {
                        continue;
                    }
                    let c = ((z as usize) * self.dims[1] + y as usize) * self.dims[0] + x as usize;
                    for &i in &self.entries[self.cell_start[c]..self.cell_start[c + 1]] {
                        let d2 = (self.points[i] - query).norm_squared();
                        if d2 < best.1 || (d2 == best.1 && i < best.0) {
                            *best = (i, d2);
                        }
                    }
                }
            }
        }
    }
}

fn cell_coords(p: &Vec3, lo: &Vec3, cell: f64, dims: &[usize; 3]) -> [usize; 3] {
    [0, 1, 2].map(|a| (((p[a] - lo[a]) / cell).floor().max(0.0) as usize).min(dims[a] - 1))
}

fn median_spacing(points: &[Vec3]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let stride = (points.len() / SPACING_SAMPLES).max(1);
    let mut spacings: Vec<f64> = points
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (q - p).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    spacings.sort_by(f64::total_cmp);
    spacings[spacings.len() / 2]
}
