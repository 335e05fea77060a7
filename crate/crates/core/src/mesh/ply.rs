//! Minimal PLY reader/writer (ascii and binary_little_endian 1.0).
//!
//! Values are held as `f64`, which represents every PLY scalar type up to
//! 32-bit integers and `double` exactly.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            other => return Err(Error::Parse(format!("unknown PLY type `{other}`"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::I8 => "char",
            Self::U8 => "uchar",
            Self::I16 => "short",
            Self::U16 => "ushort",
            Self::I32 => "int",
            Self::U32 => "uint",
            Self::F32 => "float",
            Self::F64 => "double",
        }
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }

    fn write_le(self, v: f64, out: &mut Vec<u8>) {
        match self {
            Self::I8 => out.push(v as i8 as u8),
            Self::U8 => out.push(v as u8),
            Self::I16 => out.extend((v as i16).to_le_bytes()),
            Self::U16 => out.extend((v as u16).to_le_bytes()),
            Self::I32 => out.extend((v as i32).to_le_bytes()),
            Self::U32 => out.extend((v as u32).to_le_bytes()),
            Self::F32 => out.extend((v as f32).to_le_bytes()),
            Self::F64 => out.extend(v.to_le_bytes()),
        }
    }

    fn write_ascii(self, v: f64, out: &mut String) {
        use std::fmt::Write as _;
        let _ = match self {
            Self::F32 => write!(out, "{}", v as f32),
            Self::F64 => write!(out, "{v}"),
            _ => write!(out, "{}", v as i64),
        };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyDef {
    pub name: String,
    pub kind: PropertyKind,
}

impl PropertyDef {
    pub fn scalar(name: &str, ty: ScalarType) -> Self {
        Self {
            name: name.into(),
            kind: PropertyKind::Scalar(ty),
        }
    }

    pub fn list(name: &str, count: ScalarType, item: ScalarType) -> Self {
        Self {
            name: name.into(),
            kind: PropertyKind::List { count, item },
        }
    }
}

/// One property column of an element.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Scalar(Vec<f64>),
    List(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub count: usize,
    pub properties: Vec<PropertyDef>,
    pub columns: Vec<Column>,
}

impl Element {
    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|p| p.name == name)
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        match &self.columns[self.property_index(name)?] {
            Column::Scalar(v) => Some(v),
            Column::List(_) => None,
        }
    }

    pub fn list(&self, name: &str) -> Option<&[Vec<f64>]> {
        match &self.columns[self.property_index(name)?] {
            Column::List(v) => Some(v),
            Column::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyData {
    pub format: PlyFormat,
    pub elements: Vec<Element>,
}

impl PlyData {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn read(bytes: &[u8]) -> Result<PlyData> {
    let marker = b"end_header";
    let pos = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| parse_err("PLY header has no end_header"))?;
    let mut body_start = pos + marker.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..pos]).map_err(|_| parse_err("PLY header is not UTF-8"))?;

    let mut lines = header.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some("ply") {
        return Err(parse_err("missing `ply` magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "format" => {
                if tok.len() != 3 || tok[2] != "1.0" {
                    return Err(parse_err(format!("unsupported format line `{line}`")));
                }
                format = Some(match tok[1] {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => return Err(parse_err(format!("unsupported PLY format `{other}`"))),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                if tok.len() != 3 {
                    return Err(parse_err(format!("bad element line `{line}`")));
                }
                let count = tok[2]
                    .parse()
                    .map_err(|_| parse_err(format!("bad element count `{}`", tok[2])))?;
                elements.push(Element {
                    name: tok[1].into(),
                    count,
                    properties: Vec::new(),
                    columns: Vec::new(),
                });
            }
            "property" => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err("property before any element"))?;
                let def = match tok.as_slice() {
                    ["property", "list", c, i, name] => {
                        PropertyDef::list(name, ScalarType::parse(c)?, ScalarType::parse(i)?)
                    }
                    ["property", ty, name] => PropertyDef::scalar(name, ScalarType::parse(ty)?),
                    _ => return Err(parse_err(format!("bad property line `{line}`"))),
                };
                if el.properties.iter().any(|p| p.name == def.name) {
                    return Err(parse_err(format!("duplicate property `{}`", def.name)));
                }
                el.properties.push(def);
            }
            other => return Err(parse_err(format!("unexpected header keyword `{other}`"))),
        }
    }
    let format = format.ok_or_else(|| parse_err("PLY header has no format line"))?;
    for el in &mut elements {
        el.columns = el
            .properties
            .iter()
            .map(|p| match p.kind {
                PropertyKind::Scalar(_) => Column::Scalar(Vec::with_capacity(el.count)),
                PropertyKind::List { .. } => Column::List(Vec::with_capacity(el.count)),
            })
            .collect();
    }

    let body = &bytes[body_start..];
    match format {
        PlyFormat::Ascii => read_ascii_body(body, &mut elements)?,
        PlyFormat::BinaryLittleEndian => read_binary_body(body, &mut elements)?,
    }
    Ok(PlyData { format, elements })
}

fn read_ascii_body(body: &[u8], elements: &mut [Element]) -> Result<()> {
    let text = std::str::from_utf8(body).map_err(|_| parse_err("ascii PLY body is not UTF-8"))?;
    let mut tokens = text.split_ascii_whitespace();
    let mut next = |ty: ScalarType, what: &str| -> Result<f64> {
        let t = tokens
            .next()
            .ok_or_else(|| parse_err(format!("unexpected end of ascii PLY reading {what}")))?;
        let bad = || parse_err(format!("bad number `{t}` in {what}"));
        match ty {
            ScalarType::F32 => t.parse::<f32>().map(f64::from).map_err(|_| bad()),
            ScalarType::F64 => t.parse::<f64>().map_err(|_| bad()),
            _ => t.parse::<i64>().map(|v| v as f64).map_err(|_| bad()),
        }
    };
    for el in elements.iter_mut() {
        for _ in 0..el.count {
            for (p, col) in el.properties.iter().zip(el.columns.iter_mut()) {
                match (&p.kind, col) {
                    (PropertyKind::Scalar(t), Column::Scalar(v)) => v.push(next(*t, &p.name)?),
                    (PropertyKind::List { count, item }, Column::List(v)) => {
                        let n = next(*count, &p.name)?;
                        if n < 0.0 {
                            return Err(parse_err(format!("bad list length {n}")));
                        }
                        let items = (0..n as usize)
                            .map(|_| next(*item, &p.name))
                            .collect::<Result<Vec<_>>>()?;
                        v.push(items);
                    }
                    _ => unreachable!("columns mirror properties"),
                }
            }
        }
    }
    Ok(())
}

fn read_binary_body(body: &[u8], elements: &mut [Element]) -> Result<()> {
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = body
            .get(at..at + n)
            .ok_or_else(|| parse_err("binary PLY body is truncated"))?;
        at += n;
        Ok(s)
    };
    for el in elements.iter_mut() {
        for _ in 0..el.count {
            for (p, col) in el.properties.iter().zip(el.columns.iter_mut()) {
                match (&p.kind, col) {
                    (PropertyKind::Scalar(t), Column::Scalar(v)) => v.push(t.read_le(take(t.size())?)),
                    (PropertyKind::List { count, item }, Column::List(v)) => {
                        let n = count.read_le(take(count.size())?);
                        if n < 0.0 {
                            return Err(parse_err(format!("bad list length {n}")));
                        }
                        let items = (0..n as usize)
                            .map(|_| Ok(item.read_le(take(item.size())?)))
                            .collect::<Result<Vec<_>>>()?;
                        v.push(items);
                    }
                    _ => unreachable!("columns mirror properties"),
                }
            }
        }
    }
    Ok(())
}

pub fn write(data: &PlyData, out: &mut impl Write) -> std::io::Result<()> {
    let mut header = String::from("ply\n");
    header.push_str(match data.format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    for el in &data.elements {
        header.push_str(&format!("element {} {}\n", el.name, el.count));
        for p in &el.properties {
            match p.kind {
                PropertyKind::Scalar(t) => header.push_str(&format!("property {} {}\n", t.name(), p.name)),
                PropertyKind::List { count, item } => {
                    header.push_str(&format!("property list {} {} {}\n", count.name(), item.name(), p.name))
                }
            }
        }
    }
    header.push_str("end_header\n");
    out.write_all(header.as_bytes())?;

    match data.format {
        PlyFormat::BinaryLittleEndian => {
            let mut buf = Vec::new();
            for el in &data.elements {
                for row in 0..el.count {
                    for (p, col) in el.properties.iter().zip(&el.columns) {
                        match (&p.kind, col) {
                            (PropertyKind::Scalar(t), Column::Scalar(v)) => t.write_le(v[row], &mut buf),
                            (PropertyKind::List { count, item }, Column::List(v)) => {
                                count.write_le(v[row].len() as f64, &mut buf);
                                for &x in &v[row] {
                                    item.write_le(x, &mut buf);
                                }
                            }
                            _ => panic!("column kind does not match property `{}`", p.name),
                        }
                    }
                }
            }
            out.write_all(&buf)
        }
        PlyFormat::Ascii => {
            let mut text = String::new();
            for el in &data.elements {
                for row in 0..el.count {
                    let mut first = true;
                    for (p, col) in el.properties.iter().zip(&el.columns) {
                        let mut push = |t: ScalarType, x: f64, text: &mut String| {
                            if !first {
                                text.push(' ');
                            }
                            first = false;
                            t.write_ascii(x, text);
                        };
                        match (&p.kind, col) {
                            (PropertyKind::Scalar(t), Column::Scalar(v)) => push(*t, v[row], &mut text),
                            (PropertyKind::List { count, item }, Column::List(v)) => {
                                push(*count, v[row].len() as f64, &mut text);
                                for &x in &v[row] {
                                    push(*item, x, &mut text);
                                }
                            }
                            _ => panic!("column kind does not match property `{}`", p.name),
                        }
                    }
                    text.push('\n');
                }
            }
            out.write_all(text.as_bytes())
        }
    }
}
