use std::path::Path;

use super::FourierPointCloud;
use crate::error::{Error, Result};
use crate::mesh::{project_point, CameraPose};
use crate::pngio;

pub(crate) const DEFAULT_FILL: f64 = 0.0;
const FST_MAGIC: &[u8; 4] = b"FST1";

/// `C×H×W` channel-major tensor with a per-pixel fill mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
    fill_mask: Vec<bool>,
    fill: f64,
}

impl FeatureStack {
    /// A stack with every pixel unfilled.
    pub fn filled(channels: usize, height: usize, width: usize, fill: f64) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![fill; channels * height * width],
            fill_mask: vec![false; height * width],
            fill,
        }
    }

    /// Wraps raw data; the mask is taken as given.
    pub fn from_parts(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
        fill_mask: Vec<bool>,
        fill: f64,
    ) -> Result<Self> {
        if data.len() != channels * height * width || fill_mask.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values and {} mask entries for {channels}x{height}x{width}",
                data.len(),
                fill_mask.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
            fill_mask,
            fill,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn fill_mask(&self) -> &[bool] {
        &self.fill_mask
    }

    pub fn fill_value(&self) -> f64 {
        self.fill
    }

    pub fn is_filled(&self, row: usize, col: usize) -> bool {
        self.fill_mask[row * self.width + col]
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[(channel * self.height + row) * self.width + col]
    }

    /// Channel column of one pixel.
    pub fn pixel(&self, row: usize, col: usize) -> Vec<f64> {
        (0..self.channels).map(|c| self.get(c, row, col)).collect()
    }

    /// Writes a channel column and marks the pixel filled.
    pub fn set_pixel(&mut self, row: usize, col: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.channels);
        let plane = self.height * self.width;
        let at = row * self.width + col;
        for (c, v) in values.iter().enumerate() {
            self.data[c * plane + at] = *v;
        }
        self.fill_mask[at] = true;
    }

    /// Serializes as FST1: magic, `u32` dim count (3), `u32` C, H, W, then
    /// little-endian `f32` payload and `H·W` mask bytes.
    pub fn to_fst_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.data.len() * 4 + self.fill_mask.len());
        out.extend_from_slice(FST_MAGIC);
        out.extend(3u32.to_le_bytes());
        for d in [self.channels, self.height, self.width] {
            out.extend((d as u32).to_le_bytes());
        }
        for &v in &self.data {
            out.extend((v as f32).to_le_bytes());
        }
        out.extend(self.fill_mask.iter().map(|&m| m as u8));
        out
    }

    /// Parses FST1. The fill value is read from the first unfilled pixel,
    /// or 0 when every pixel is filled.
    pub fn from_fst_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |m: &str| Error::Parse(format!("FST1: {m}"));
        if bytes.len() < 8 || &bytes[..4] != FST_MAGIC {
            return Err(err("bad magic"));
        }
        let u32_at = |at: usize| -> Result<usize> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
                .ok_or_else(|| err("truncated header"))
        };
        let ndims = u32_at(4)?;
        if ndims != 3 {
            return Err(err(&format!("expected 3 dims, got {ndims}")));
        }
        let (c, h, w) = (u32_at(8)?, u32_at(12)?, u32_at(16)?);
        let n = c
            .checked_mul(h)
            .and_then(|x| x.checked_mul(w))
            .ok_or_else(|| err("dims overflow"))?;
        let payload_end = 20 + n * 4;
        if bytes.len() != payload_end + h * w {
            return Err(err(&format!(
                "expected {} bytes for {c}x{h}x{w}, got {}",
                payload_end + h * w,
                bytes.len()
            )));
        }
        let data: Vec<f64> = bytes[20..payload_end]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        let fill_mask = bytes[payload_end..]
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(err("mask byte is not 0/1")),
            })
            .collect::<Result<Vec<_>>>()?;
        let fill = match fill_mask.iter().position(|m| !m) {
            Some(at) if c > 0 => data[at],
            _ => DEFAULT_FILL,
        };
        Self::from_parts(c, h, w, data, fill_mask, fill)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_fst_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_fst_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// PNG of channels 0..3 min-max scaled over the filled pixels; unfilled
    /// pixels are black.
    pub fn identity_preview_png(&self) -> Result<Vec<u8>> {
        let bands = self.channels.min(3);
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for r in 0..self.height {
            for col in 0..self.width {
                if self.is_filled(r, col) {
                    for c in 0..bands {
                        lo[c] = lo[c].min(self.get(c, r, col));
                        hi[c] = hi[c].max(self.get(c, r, col));
                    }
                }
            }
        }
        let mut rgb = vec![0u8; self.height * self.width * 3];
        for r in 0..self.height {
            for col in 0..self.width {
                if !self.is_filled(r, col) {
                    continue;
                }
                for c in 0..bands {
                    let span = hi[c] - lo[c];
                    let t = if span > 0.0 {
                        (self.get(c, r, col) - lo[c]) / span
                    } else {
                        0.5
                    };
                    rgb[(r * self.width + col) * 3 + c] = pngio::quantize(t);
                }
            }
        }
        pngio::encode_rgb8(self.width, self.height, &rgb)
    }
}

/// Z-buffered projection: each point lands in the pixel containing its
/// projection; the smallest depth wins, ties going to the lower point index.
pub fn project_features(cloud: &FourierPointCloud, cam: &CameraPose, fill: f64) -> FeatureStack {
    let (h, w) = (cam.height, cam.width);
    let mut winner: Vec<Option<(f64, usize)>> = vec![None; h * w];
    for (i, p) in cloud.points().iter().enumerate() {
        let proj = project_point(p, cam);
        if !proj.depth.is_finite() {
            continue;
        }
        let Some((r, c)) = proj.pixel(h, w) else { continue };
        let slot = &mut winner[r * w + c];
        match slot {
            Some((d, _)) if *d <= proj.depth => {}
            _ => *slot = Some((proj.depth, i)),
        }
    }
    let mut stack = FeatureStack::filled(cloud.feature_len(), h, w, fill);
    for (at, slot) in winner.iter().enumerate() {
        if let Some((_, i)) = slot {
            stack.set_pixel(at / w, at % w, cloud.feature(*i));
        }
    }
    stack
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{PointCloud, Vec3};
    use crate::sle::fourier_expand;

    #[test]
    fn single_point_fills_center() {
        let cloud = fourier_expand(&PointCloud::new(vec![Vec3::zeros()]), 2);
        let cam = CameraPose::new(0.0, 0.0, 5, 5, 2.0).unwrap();
        let s = project_features(&cloud, &cam, -7.0);
        for r in 0..5 {
            for c in 0..5 {
                assert_eq!(s.is_filled(r, c), (r, c) == (2, 2));
                if (r, c) != (2, 2) {
                    assert!(s.pixel(r, c).iter().all(|&v| v == -7.0));
                }
            }
        }
        assert_eq!(s.pixel(2, 2), cloud.feature(0));
    }

    #[test]
    fn nearer_point_wins() {
        // Front camera: depth = -z.
        let far = Vec3::new(0.0, 0.0, -2.0);
        let near = Vec3::new(0.0, 0.0, -1.0);
        let cloud = fourier_expand(&PointCloud::new(vec![far, near]), 0);
        let cam = CameraPose::new(0.0, 0.0, 3, 3, 2.0).unwrap();
        let s = project_features(&cloud, &cam, 0.0);
        assert_eq!(s.pixel(1, 1), near.as_slice());
        // Equal depth: lowest index.
        let cloud = fourier_expand(&PointCloud::new(vec![Vec3::new(0.1, 0.0, 0.0), Vec3::zeros()]), 0);
        assert_eq!(project_features(&cloud, &cam, 0.0).pixel(1, 1)[0], 0.1);
    }

    #[test]
    fn fst_round_trip_and_errors() {
        let cloud = fourier_expand(&PointCloud::new(vec![Vec3::new(0.25, 0.5, 0.0)]), 1);
        let cam = CameraPose::new(0.0, 0.0, 4, 6, 3.0).unwrap();
        let s = project_features(&cloud, &cam, 0.0);
        let bytes = s.to_fst_bytes();
        assert_eq!(&bytes[..4], b"FST1");
        assert_eq!(bytes.len(), 20 + 9 * 24 * 4 + 24);
        let back = FeatureStack::from_fst_bytes(&bytes).unwrap();
        assert_eq!(back.fill_mask(), s.fill_mask());
        assert!(back.data().iter().zip(s.data()).all(|(a, b)| (a - b).abs() < 1e-7));
        assert!(FeatureStack::from_fst_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(FeatureStack::from_fst_bytes(&bad).is_err());
        let mut bad = bytes;
        let last = bad.len() - 1;
        bad[last] = 2;
        assert!(FeatureStack::from_fst_bytes(&bad).is_err());
    }
}
