//! Normal map files. PNG stores `round((n + 1) / 2 · 255)` per channel with
//! pure black marking uncovered pixels; decoding inverts the affine map and
//! renormalizes. FST1 (3 channels) keeps full precision.

use std::path::Path;

use super::NormalMap;
use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::pngio;
use crate::sle::FeatureStack;

pub fn encode_normal_png(map: &NormalMap) -> Result<Vec<u8>> {
    let mut bytes = Vec::with_capacity(3 * map.normals.len());
    for (n, &m) in map.normals.iter().zip(&map.mask) {
        if m {
            bytes.extend(n.iter().map(|c| pngio::quantize((c + 1.0) / 2.0)));
        } else {
            bytes.extend([0, 0, 0]);
        }
    }
    pngio::encode_rgb8(map.width, map.height, &bytes)
}

pub fn decode_normal_png(bytes: &[u8]) -> Result<NormalMap> {
    let png = pngio::decode(bytes)?;
    if png.channels != 3 {
        return Err(Error::Parse(format!(
            "normal PNG must be RGB, got {} channels",
            png.channels
        )));
    }
    let mut map = NormalMap::empty(png.height, png.width);
    for (at, px) in png.data.chunks_exact(3).enumerate() {
        if px == [0, 0, 0] {
            continue;
        }
        let n = Vec3::new(px[0] as f64, px[1] as f64, px[2] as f64) / 255.0 * 2.0 - Vec3::repeat(1.0);
        let len = n.norm();
        if len == 0.0 {
            return Err(Error::Parse(format!("normal PNG pixel {at} decodes to a zero vector")));
        }
        map.set(at, n / len);
    }
    Ok(map)
}

fn to_stack(map: &NormalMap) -> FeatureStack {
    let plane = map.normals.len();
    let mut data = vec![0.0; 3 * plane];
    for (i, n) in map.normals.iter().enumerate() {
        for c in 0..3 {
            data[c * plane + i] = n[c];
        }
    }
    FeatureStack::from_parts(3, map.height, map.width, data, map.mask.clone(), 0.0).expect("shape matches")
}

fn from_stack(stack: &FeatureStack) -> Result<NormalMap> {
    if stack.channels() != 3 {
        return Err(Error::WrongChannelCount {
            expected: 3,
            got: stack.channels(),
        });
    }
    let (h, w) = (stack.height(), stack.width());
    let mut normals = Vec::with_capacity(h * w);
    let mut mask = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let covered = stack.is_filled(r, c);
            mask.push(covered);
            normals.push(if covered {
                Vec3::new(stack.get(0, r, c), stack.get(1, r, c), stack.get(2, r, c))
            } else {
                Vec3::zeros()
            });
        }
    }
    NormalMap::from_parts(h, w, normals, mask)
}

fn is_png(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Writes PNG for a `.png` extension and FST1 otherwise.
pub fn save_normal_map(path: &Path, map: &NormalMap) -> Result<()> {
    if is_png(path) {
        pngio::write_file(path, &encode_normal_png(map)?)
    } else {
        to_stack(map).save(path)
    }
}

pub fn load_normal_map(path: &Path) -> Result<NormalMap> {
    if is_png(path) {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_normal_png(&bytes)
    } else {
        from_stack(&FeatureStack::load(path)?)
    }
}
