//! OBJ and PLY mesh codecs, registered by name.
//!
//! | name        | reads                 | writes                         |
//! |-------------|-----------------------|--------------------------------|
//! | `obj`       | `v`, `vn`, `f`        | `v`, `vn` (if present), `f`    |
//! | `ply`       | ascii or binary LE    | binary_little_endian, float32  |
//! | `ply-ascii` | ascii or binary LE    | ascii, float32                 |

use std::fmt::Write as _;
use std::path::Path;

use super::ply::{self, Column, Element, PlyData, PlyFormat, PropertyDef, ScalarType};
use super::{TriangleMesh, Vec3};
use crate::error::{Error, Result};
use crate::registry::Registry;

/// A decoded mesh plus the number of degenerate faces dropped on load.
#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: TriangleMesh,
    pub dropped_faces: usize,
}

pub trait MeshCodec: Send + Sync {
    fn decode(&self, bytes: &[u8]) -> Result<LoadedMesh>;
    fn encode(&self, mesh: &TriangleMesh) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("obj") => Ok(Self::Obj),
            Some("ply") => Ok(Self::Ply),
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer mesh format from `{}` (expected .obj or .ply)",
                path.display()
            ))),
        }
    }

    fn codec_name(self) -> &'static str {
        match self {
            Self::Obj => "obj",
            Self::Ply => "ply",
        }
    }
}

pub fn mesh_codecs() -> Registry<dyn MeshCodec> {
    let mut reg: Registry<dyn MeshCodec> = Registry::new("mesh codec");
    reg.register("obj", Box::new(ObjCodec));
    reg.register("ply", Box::new(PlyCodec(PlyFormat::BinaryLittleEndian)));
    reg.register("ply-ascii", Box::new(PlyCodec(PlyFormat::Ascii)));
    reg
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<LoadedMesh> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let loaded = mesh_codecs().get(format.codec_name())?.decode(&bytes)?;
    if loaded.dropped_faces > 0 {
        log::warn!("{}: dropped {} degenerate faces", path.display(), loaded.dropped_faces);
    }
    Ok(loaded)
}

/// Writes `mesh` with the named codec (`obj`, `ply`, `ply-ascii`).
pub fn save_mesh(path: &Path, mesh: &TriangleMesh, codec: &str) -> Result<()> {
    let bytes = mesh_codecs().get(codec)?.encode(mesh)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn assemble(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, normals: Option<Vec<Vec3>>) -> Result<LoadedMesh> {
    let (mesh, dropped_faces) = TriangleMesh::new_lenient(vertices, faces).map_err(|e| match e {
        Error::FaceOutOfRange { face, vertex_count } => Error::Parse(format!(
            "face {face} references a vertex beyond the {vertex_count} declared"
        )),
        other => other,
    })?;
    let mesh = match normals {
        Some(ns) => {
            let unit = ns
                .into_iter()
                .enumerate()
                .map(|(i, n)| {
                    let len = n.norm();
                    if len > 0.0 && len.is_finite() {
                        Ok(n / len)
                    } else {
                        Err(Error::Parse(format!("vertex normal {i} has zero length")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            mesh.with_normals(unit)?
        }
        None => mesh,
    };
    Ok(LoadedMesh { mesh, dropped_faces })
}

struct ObjCodec;

impl MeshCodec for ObjCodec {
    fn decode(&self, bytes: &[u8]) -> Result<LoadedMesh> {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::Parse("OBJ file is not UTF-8".into()))?;
        let mut vertices = Vec::new();
        let mut normals = Vec::new();
        let mut faces = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut tok = line.split_whitespace();
            let Some(key) = tok.next() else { continue };
            let err = |msg: &str| Error::Parse(format!("OBJ line {}: {msg}: `{raw}`", lineno + 1));
            match key {
                "v" | "vn" => {
                    let xyz: Vec<f64> = tok
                        .take(3)
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err("bad coordinate"))?;
                    if xyz.len() != 3 || xyz.iter().any(|x| !x.is_finite()) {
                        return Err(err("expected three finite coordinates"));
                    }
                    let p = Vec3::new(xyz[0], xyz[1], xyz[2]);
                    if key == "v" {
                        vertices.push(p);
                    } else {
                        normals.push(p);
                    }
                }
                "f" => {
                    let idx = tok
                        .map(|t| {
                            let first = t.split('/').next().unwrap_or("");
                            let i: i64 = first.parse().map_err(|_| err("bad face index"))?;
                            let n = vertices.len() as i64;
                            let resolved = if i > 0 { i - 1 } else { n + i };
                            if i == 0 || resolved < 0 || resolved >= n {
                                return Err(err("face index out of range"));
                            }
                            Ok(resolved as usize)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if idx.len() < 3 {
                        return Err(err("face needs at least three vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        let normals = if !normals.is_empty() && normals.len() == vertices.len() {
            Some(normals)
        } else {
            if !normals.is_empty() {
                log::debug!(
                    "ignoring {} vn entries not matching {} vertices",
                    normals.len(),
                    vertices.len()
                );
            }
            None
        };
        assemble(vertices, faces, normals)
    }

    fn encode(&self, mesh: &TriangleMesh) -> Result<Vec<u8>> {
        let mut s = String::new();
        for v in mesh.vertices() {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        let normals = mesh.vertex_normals();
        if let Some(ns) = normals {
            for n in ns {
                let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
            }
        }
        for &[a, b, c] in mesh.faces() {
            let _ = if normals.is_some() {
                writeln!(s, "f {0}//{0} {1}//{1} {2}//{2}", a + 1, b + 1, c + 1)
            } else {
                writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1)
            };
        }
        Ok(s.into_bytes())
    }
}

struct PlyCodec(PlyFormat);

impl MeshCodec for PlyCodec {
    fn decode(&self, bytes: &[u8]) -> Result<LoadedMesh> {
        let data = ply::read(bytes)?;
        let vertex = data
            .element("vertex")
            .ok_or_else(|| Error::Parse("PLY has no vertex element".into()))?;
        let coord = |name: &str| {
            vertex
                .scalar(name)
                .ok_or_else(|| Error::Parse(format!("PLY vertex element lacks scalar `{name}`")))
        };
        let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
        let vertices: Vec<Vec3> = (0..vertex.count).map(|i| Vec3::new(x[i], y[i], z[i])).collect();
        let normals = match (vertex.scalar("nx"), vertex.scalar("ny"), vertex.scalar("nz")) {
            (Some(nx), Some(ny), Some(nz)) => Some((0..vertex.count).map(|i| Vec3::new(nx[i], ny[i], nz[i])).collect()),
            _ => None,
        };
        let mut faces = Vec::new();
        if let Some(face) = data.element("face") {
            let lists = face
                .list("vertex_indices")
                .or_else(|| face.list("vertex_index"))
                .ok_or_else(|| Error::Parse("PLY face element lacks vertex_indices".into()))?;
            for (fi, l) in lists.iter().enumerate() {
                if l.len() < 3 {
                    return Err(Error::Parse(format!("PLY face {fi} has fewer than 3 indices")));
                }
                if l.iter().any(|&i| i < 0.0 || i >= vertices.len() as f64) {
                    return Err(Error::Parse(format!("PLY face {fi} index out of range")));
                }
                for k in 1..l.len() - 1 {
                    faces.push([l[0] as usize, l[k] as usize, l[k + 1] as usize]);
                }
            }
        }
        assemble(vertices, faces, normals)
    }

    fn encode(&self, mesh: &TriangleMesh) -> Result<Vec<u8>> {
        let n = mesh.vertex_count();
        let mut properties = Vec::new();
        let mut columns = Vec::new();
        let mut push = |name: &str, values: Vec<f64>| {
            properties.push(PropertyDef::scalar(name, ScalarType::F32));
            columns.push(Column::Scalar(values));
        };
        for (a, name) in ["x", "y", "z"].iter().enumerate() {
            push(name, mesh.vertices().iter().map(|v| v[a]).collect());
        }
        if let Some(ns) = mesh.vertex_normals() {
            for (a, name) in ["nx", "ny", "nz"].iter().enumerate() {
                push(name, ns.iter().map(|v| v[a]).collect());
            }
        }
        let data = PlyData {
            format: self.0,
            elements: vec![
                Element {
                    name: "vertex".into(),
                    count: n,
                    properties,
                    columns,
                },
                Element {
                    name: "face".into(),
                    count: mesh.face_count(),
                    properties: vec![PropertyDef::list("vertex_indices", ScalarType::U8, ScalarType::U32)],
                    columns: vec![Column::List(
                        mesh.faces()
                            .iter()
                            .map(|f| f.iter().map(|&i| i as f64).collect())
                            .collect(),
                    )],
                },
            ],
        };
        let mut out = Vec::new();
        ply::write(&data, &mut out).expect("writing to memory");
        Ok(out)
    }
}
