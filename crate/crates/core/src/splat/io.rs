use std::path::Path;

use super::{GaussianSplat, GaussianSplatSet, SPLAT_PARAMS};
use crate::error::{Error, Result};
use crate::mesh::ply::{self, Column, Element, PlyData, PlyFormat, PropertyDef, PropertyKind, ScalarType};
use crate::mesh::Vec3;

/// Per-vertex property names, in parameter order.
pub const SPLAT_PROPERTIES: [&str; SPLAT_PARAMS] = [
    "x", "y", "z", "sx", "sy", "sz", "qw", "qx", "qy", "qz", "opacity", "r", "g", "b",
];

/// Binary little-endian PLY with one float32 vertex per splat.
pub fn write_splats(set: &GaussianSplatSet) -> Vec<u8> {
    let params: Vec<[f64; SPLAT_PARAMS]> = set.splats.iter().map(|s| s.params()).collect();
    let data = PlyData {
        format: PlyFormat::BinaryLittleEndian,
        elements: vec![Element {
            name: "vertex".into(),
            count: set.len(),
            properties: SPLAT_PROPERTIES
                .iter()
                .map(|p| PropertyDef::scalar(p, ScalarType::F32))
                .collect(),
            columns: (0..SPLAT_PARAMS)
                .map(|k| Column::Scalar(params.iter().map(|p| p[k]).collect()))
                .collect(),
        }],
    };
    let mut out = Vec::new();
    ply::write(&data, &mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn read_splats(bytes: &[u8]) -> Result<GaussianSplatSet> {
    let data = ply::read(bytes)?;
    let vertex = data
        .element("vertex")
        .ok_or_else(|| Error::Parse("splat PLY has no vertex element".into()))?;
    if vertex.properties.len() != SPLAT_PARAMS {
        return Err(Error::Parse(format!(
            "splat PLY needs {SPLAT_PARAMS} vertex properties, found {}",
            vertex.properties.len()
        )));
    }
    let mut columns = Vec::with_capacity(SPLAT_PARAMS);
    for name in SPLAT_PROPERTIES {
        let idx = vertex
            .property_index(name)
            .ok_or_else(|| Error::Parse(format!("splat PLY is missing property `{name}`")))?;
        if !matches!(vertex.properties[idx].kind, PropertyKind::Scalar(_)) {
            return Err(Error::Parse(format!("splat property `{name}` is a list")));
        }
        columns.push(vertex.scalar(name).expect("scalar column"));
    }
    let splats = (0..vertex.count)
        .map(|i| {
            let p: Vec<f64> = columns.iter().map(|c| c[i]).collect();
            GaussianSplat::new(
                Vec3::new(p[0], p[1], p[2]),
                Vec3::new(p[3], p[4], p[5]),
                [p[6], p[7], p[8], p[9]],
                p[10],
                [p[11], p[12], p[13]],
            )
            .map_err(|e| Error::Parse(format!("splat {i}: {e}")))
        })
        .collect::<Result<_>>()?;
    Ok(GaussianSplatSet::new(splats))
}

pub fn save_splats(path: &Path, set: &GaussianSplatSet) -> Result<()> {
    std::fs::write(path, write_splats(set)).map_err(|e| Error::io(path, e))
}

pub fn load_splats(path: &Path) -> Result<GaussianSplatSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_splats(&bytes)
}
