use std::cmp::Ordering;

use rayon::prelude::*;

use super::GaussianSplatSet;
use crate::error::Result;
use crate::mesh::CameraPose;
use crate::pngio;

/// Footprint truncation radius in standard deviations.
pub const TRUNCATION_SIGMA: f64 = 3.0;
const TILE: usize = 16;

/// Planar `3×H×W` color plus `H×W` coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub height: usize,
    pub width: usize,
    pub rgb: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl RenderedImage {
    pub fn rgb_at(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.rgb[(channel * self.height + row) * self.width + col]
    }

    pub fn alpha_at(&self, row: usize, col: usize) -> f64 {
        self.alpha[row * self.width + col]
    }

    pub fn rgb_png(&self) -> Result<Vec<u8>> {
        let plane = self.height * self.width;
        let mut bytes = Vec::with_capacity(3 * plane);
        for i in 0..plane {
            for c in 0..3 {
                bytes.push(pngio::quantize(self.rgb[c * plane + i]));
            }
        }
        pngio::encode_rgb8(self.width, self.height, &bytes)
    }

    pub fn alpha_png(&self) -> Result<Vec<u8>> {
        let bytes: Vec<u8> = self.alpha.iter().map(|&a| pngio::quantize(a)).collect();
        pngio::encode_gray8(self.width, self.height, &bytes)
    }

    /// Decodes an 8-bit PNG (gray, gray+alpha, RGB or RGBA) into `[0, 1]`
    /// color. Alpha is taken from the file when present, else 1.
    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let png = pngio::decode(bytes)?;
        let plane = png.width * png.height;
        let mut rgb = vec![0.0; 3 * plane];
        let mut alpha = vec![1.0; plane];
        for (i, px) in png.data.chunks_exact(png.channels).enumerate() {
            let color = match png.channels {
                1 | 2 => [px[0]; 3],
                _ => [px[0], px[1], px[2]],
            };
            for c in 0..3 {
                rgb[c * plane + i] = color[c] as f64 / 255.0;
            }
            if png.channels == 2 || png.channels == 4 {
                alpha[i] = px[png.channels - 1] as f64 / 255.0;
            }
        }
        Ok(Self {
            height: png.height,
            width: png.width,
            rgb,
            alpha,
        })
    }
}

/// Screen-space footprint of one splat.
struct Footprint {
    mean: (f64, f64),
    /// Inverse of the 2D covariance, `[a, b, c]` for `[[a, b], [b, c]]`.
    conic: [f64; 3],
    opacity: f64,
    color: [f64; 3],
    rows: (usize, usize),
    cols: (usize, usize),
}

impl Footprint {
    fn weight(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.mean.0, y - self.mean.1);
        let [a, b, c] = self.conic;
        let m = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
        if m > TRUNCATION_SIGMA * TRUNCATION_SIGMA {
            0.0
        } else {
            (-0.5 * m).exp()
        }
    }
}

fn canonical_order(set: &GaussianSplatSet, depth: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&i, &j| {
        depth[i]
            .total_cmp(&depth[j])
            .then_with(|| {
                let (a, b) = (set.splats[i].params(), set.splats[j].params());
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
            .then(i.cmp(&j))
    });
    order
}

fn footprint(splat: &super::GaussianSplat, cam: &CameraPose) -> Option<Footprint> {
    let rot = cam.rotation();
    let pc = rot * splat.center();
    let cov = rot * splat.covariance() * rot.transpose();
    let (sxx, sxy, syy) = (cov[(0, 0)], cov[(0, 1)], cov[(1, 1)]);
    let det = sxx * syy - sxy * sxy;
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let conic = [syy / det, -sxy / det, sxx / det];
    let (rx, ry) = (TRUNCATION_SIGMA * sxx.sqrt(), TRUNCATION_SIGMA * syy.sqrt());
    let (h, w) = (cam.height as f64, cam.width as f64);
    let os = cam.ortho_scale;
    let col_lo = ((pc.x - rx) / os + 0.5) * w;
    let col_hi = ((pc.x + rx) / os + 0.5) * w;
    let row_lo = (0.5 - (pc.y + ry) / os) * h;
    let row_hi = (0.5 - (pc.y - ry) / os) * h;
    // Pixel centers at integer + 0.5 inside [lo, hi].
    let first = |lo: f64| (lo - 0.5).ceil().max(0.0);
    let last = |hi: f64, n: f64| (hi - 0.5).floor().min(n - 1.0);
    let (r0, r1) = (first(row_lo), last(row_hi, h));
    let (c0, c1) = (first(col_lo), last(col_hi, w));
    if r0 > r1 || c0 > c1 {
        return None;
    }
    Some(Footprint {
        mean: (pc.x, pc.y),
        conic,
        opacity: splat.opacity(),
        color: splat.color(),
        rows: (r0 as usize, r1 as usize),
        cols: (c0 as usize, c1 as usize),
    })
}

/// Front-to-back alpha compositing of the splats seen by an orthographic
/// camera. Weights beyond [`TRUNCATION_SIGMA`] are zero.
pub fn render(set: &GaussianSplatSet, cam: &CameraPose, background: [f64; 3]) -> RenderedImage {
    let (h, w) = (cam.height, cam.width);
    let rot = cam.rotation();
    let depth: Vec<f64> = set.splats.iter().map(|s| -(rot * s.center()).z).collect();
    let order = canonical_order(set, &depth);
    let prints: Vec<Footprint> = order.iter().filter_map(|&i| footprint(&set.splats[i], cam)).collect();

    let (tiles_y, tiles_x) = (h.div_ceil(TILE), w.div_ceil(TILE));
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_y * tiles_x];
    for (k, f) in prints.iter().enumerate() {
        for ty in f.rows.0 / TILE..=f.rows.1 / TILE {
            for tx in f.cols.0 / TILE..=f.cols.1 / TILE {
                bins[ty * tiles_x + tx].push(k as u32);
            }
        }
    }

    let tiles: Vec<Vec<(usize, [f64; 3], f64)>> = bins
        .par_iter()
        .enumerate()
        .map(|(t, bin)| {
            let (ty, tx) = (t / tiles_x, t % tiles_x);
            let mut out = Vec::with_capacity(TILE * TILE);
            for r in ty * TILE..((ty + 1) * TILE).min(h) {
                for c in tx * TILE..((tx + 1) * TILE).min(w) {
                    let (x, y) = cam.pixel_center(r, c);
                    let mut rgb = [0.0; 3];
                    let mut t = 1.0;
                    for &k in bin {
                        let f = &prints[k as usize];
                        if r < f.rows.0 || r > f.rows.1 || c < f.cols.0 || c > f.cols.1 {
                            continue;
                        }
                        let a = f.opacity * f.weight(x, y);
                        if a <= 0.0 {
                            continue;
                        }
                        for ch in 0..3 {
                            rgb[ch] += t * a * f.color[ch];
                        }
                        t *= 1.0 - a;
                    }
                    for ch in 0..3 {
                        rgb[ch] += t * background[ch];
                    }
                    out.push((r * w + c, rgb, 1.0 - t));
                }
            }
            out
        })
        .collect();

    let plane = h * w;
    let mut image = RenderedImage {
        height: h,
        width: w,
        rgb: vec![0.0; 3 * plane],
        alpha: vec![0.0; plane],
    };
    for (at, rgb, a) in tiles.into_iter().flatten() {
        for ch in 0..3 {
            image.rgb[ch * plane + at] = rgb[ch];
        }
        image.alpha[at] = a;
    }
    image
}
