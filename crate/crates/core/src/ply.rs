//! PLY 1.0 reading and writing (ASCII and binary little-endian).
//!
//! Only the `vertex` element is interpreted. Other elements (faces, edges)
//! that precede it are skipped; anything after it is never touched.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cloud::{ColorSpace, PointCloud};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlyErrorKind {
    MalformedHeader(String),
    TruncatedBody,
    Unsupported(String),
    BadValue(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("ply error at byte {offset}: {kind:?}")]
pub struct PlyError {
    pub kind: PlyErrorKind,
    pub offset: usize,
}

impl PlyError {
    fn new(kind: PlyErrorKind, offset: usize) -> Self {
        Self { kind, offset }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    color_space: ColorSpace,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, PlyError> {
    let malformed = |msg: &str, off: usize| PlyError::new(PlyErrorKind::MalformedHeader(msg.into()), off);
    let mut pos = 0usize;
    let mut next_line = || -> Option<(usize, &[u8])> {
        if pos >= bytes.len() {
            return None;
        }
        let start = pos;
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .unwrap_or(bytes.len());
        pos = (end + 1).min(bytes.len());
        let mut line = &bytes[start..end];
        if line.last() == Some(&b'\r') {
            line = &line[..line.len() - 1];
        }
        Some((start, line))
    };

    match next_line() {
        Some((_, l)) if l == b"ply" => {}
        _ => return Err(malformed("missing 'ply' magic", 0)),
    }

    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut color_space = ColorSpace::Rgb;
    loop {
        let Some((off, raw)) = next_line() else {
            return Err(malformed("missing end_header", bytes.len()));
        };
        let line = std::str::from_utf8(raw).map_err(|_| malformed("non-ASCII header line", off))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            None => continue,
            Some("end_header") => break,
            Some("comment") => {
                if toks.get(1) == Some(&"color_space") && toks.get(2) == Some(&"yuv") {
                    color_space = ColorSpace::Yuv;
                }
            }
            Some("obj_info") => {}
            Some("format") => {
                if toks.len() != 3 {
                    return Err(malformed("bad format line", off));
                }
                format = Some(match toks[1] {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(PlyError::new(
                            PlyErrorKind::Unsupported("binary_big_endian".into()),
                            off,
                        ))
                    }
                    other => return Err(malformed(&format!("unknown format '{other}'"), off)),
                });
            }
            Some("element") => {
                if toks.len() != 3 {
                    return Err(malformed("bad element line", off));
                }
                let count = toks[2]
                    .parse::<usize>()
                    .map_err(|_| malformed("bad element count", off))?;
                elements.push(Element {
                    name: toks[1].to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before element", off))?;
                let prop = if toks.get(1) == Some(&"list") {
                    if toks.len() != 5 {
                        return Err(malformed("bad list property", off));
                    }
                    let count = Scalar::parse(toks[2]).ok_or_else(|| malformed("bad list count type", off))?;
                    let item = Scalar::parse(toks[3]).ok_or_else(|| malformed("bad list item type", off))?;
                    Property {
                        name: toks[4].to_string(),
                        kind: PropKind::List { count, item },
                    }
                } else {
                    if toks.len() != 3 {
                        return Err(malformed("bad property line", off));
                    }
                    let ty = Scalar::parse(toks[1]).ok_or_else(|| malformed("unknown property type", off))?;
                    Property {
                        name: toks[2].to_string(),
                        kind: PropKind::Scalar(ty),
                    }
                };
                el.props.push(prop);
            }
            Some(other) => return Err(malformed(&format!("unknown keyword '{other}'"), off)),
        }
    }
    let format = format.ok_or_else(|| malformed("missing format line", 0))?;
    Ok(Header {
        format,
        elements,
        color_space,
        body_offset: pos,
    })
}

/// Column indices of the vertex properties we care about.
struct VertexLayout {
    pos: [usize; 3],
    color: Option<[usize; 3]>,
    normal: Option<[usize; 3]>,
}

impl VertexLayout {
    fn from_element(el: &Element, offset: usize) -> Result<Self, PlyError> {
        let find = |names: &[&str]| {
            el.props
                .iter()
                .position(|p| names.contains(&p.name.as_str()) && matches!(p.kind, PropKind::Scalar(_)))
        };
        let axis = |n: &str| {
            find(&[n]).ok_or_else(|| {
                PlyError::new(PlyErrorKind::MalformedHeader(format!("vertex lacks '{n}'")), offset)
            })
        };
        let pos = [axis("x")?, axis("y")?, axis("z")?];
        let color = match (find(&["red", "r"]), find(&["green", "g"]), find(&["blue", "b"])) {
            (Some(r), Some(g), Some(b)) => Some([r, g, b]),
            _ => None,
        };
        let normal = match (find(&["nx"]), find(&["ny"]), find(&["nz"])) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        };
        Ok(Self { pos, color, normal })
    }
}

fn color_channel(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Parses a PLY byte buffer into a [`PointCloud`].
pub fn read_ply(bytes: &[u8]) -> Result<PointCloud, PlyError> {
    let header = parse_header(bytes)?;
    let vidx = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| {
            PlyError::new(PlyErrorKind::MalformedHeader("no vertex element".into()), header.body_offset)
        })?;
    let vel = &header.elements[vidx];
    let layout = VertexLayout::from_element(vel, header.body_offset)?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(vel.count);
    match header.format {
        PlyFormat::Ascii => {
            let mut toks = AsciiTokens::new(bytes, header.body_offset);
            for el in &header.elements[..vidx] {
                for _ in 0..el.count {
                    read_ascii_row(&mut toks, el)?;
                }
            }
            for _ in 0..vel.count {
                rows.push(read_ascii_row(&mut toks, vel)?);
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let mut pos = header.body_offset;
            for el in &header.elements[..vidx] {
                for _ in 0..el.count {
                    read_binary_row(bytes, &mut pos, el)?;
                }
            }
            for _ in 0..vel.count {
                rows.push(read_binary_row(bytes, &mut pos, vel)?);
            }
        }
    }

    let positions = rows
        .iter()
        .map(|r| [r[layout.pos[0]], r[layout.pos[1]], r[layout.pos[2]]])
        .collect();
    let colors = layout.color.map(|c| {
        rows.iter()
            .map(|r| [color_channel(r[c[0]]), color_channel(r[c[1]]), color_channel(r[c[2]])])
            .collect()
    });
    let normals = layout
        .normal
        .map(|n| rows.iter().map(|r| [r[n[0]], r[n[1]], r[n[2]]]).collect());
    Ok(PointCloud {
        positions,
        colors,
        color_space: header.color_space,
        normals,
    })
}

struct AsciiTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> AsciiTokens<'a> {
    fn new(bytes: &'a [u8], pos: usize) -> Self {
        Self { bytes, pos }
    }

    fn next(&mut self) -> Result<(usize, &'a str), PlyError> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return Err(PlyError::new(PlyErrorKind::TruncatedBody, self.pos));
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| PlyError::new(PlyErrorKind::BadValue("non-ASCII token".into()), start))?;
        Ok((start, s))
    }

    fn number(&mut self) -> Result<f64, PlyError> {
        let (off, s) = self.next()?;
        s.parse::<f64>()
            .map_err(|_| PlyError::new(PlyErrorKind::BadValue(format!("'{s}' is not a number")), off))
    }
}

fn read_ascii_row(toks: &mut AsciiTokens<'_>, el: &Element) -> Result<Vec<f64>, PlyError> {
    let mut row = Vec::with_capacity(el.props.len());
    for p in &el.props {
        match p.kind {
            PropKind::Scalar(_) => row.push(toks.number()?),
            PropKind::List { .. } => {
                let n = toks.number()?;
                for _ in 0..n.max(0.0) as usize {
                    toks.number()?;
                }
                row.push(0.0);
            }
        }
    }
    Ok(row)
}

fn read_binary_row(bytes: &[u8], pos: &mut usize, el: &Element) -> Result<Vec<f64>, PlyError> {
    let mut take = |n: usize| -> Result<&[u8], PlyError> {
        if *pos + n > bytes.len() {
            return Err(PlyError::new(PlyErrorKind::TruncatedBody, *pos));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let mut row = Vec::with_capacity(el.props.len());
    for p in &el.props {
        match p.kind {
            PropKind::Scalar(ty) => row.push(ty.read_le(take(ty.size())?)),
            PropKind::List { count, item } => {
                let n = count.read_le(take(count.size())?);
                take(item.size() * n.max(0.0) as usize)?;
                row.push(0.0);
            }
        }
    }
    Ok(row)
}

/// Serializes a cloud. Positions and normals are written as `double` so that
/// integer voxels and real coordinates both survive a round trip unchanged.
pub fn write_ply(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut header = String::from("ply\n");
    header.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    if cloud.colors.is_some() && cloud.color_space == ColorSpace::Yuv {
        header.push_str("comment color_space yuv\n");
    }
    let _ = writeln!(header, "element vertex {}", cloud.len());
    for a in ["x", "y", "z"] {
        let _ = writeln!(header, "property double {a}");
    }
    if cloud.normals.is_some() {
        for a in ["nx", "ny", "nz"] {
            let _ = writeln!(header, "property double {a}");
        }
    }
    if cloud.colors.is_some() {
        for a in ["red", "green", "blue"] {
            let _ = writeln!(header, "property uchar {a}");
        }
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    match format {
        PlyFormat::Ascii => {
            let mut line = String::new();
            for i in 0..cloud.len() {
                line.clear();
                let p = cloud.positions[i];
                let _ = write!(line, "{} {} {}", p[0], p[1], p[2]);
                if let Some(n) = &cloud.normals {
                    let _ = write!(line, " {} {} {}", n[i][0], n[i][1], n[i][2]);
                }
                if let Some(c) = &cloud.colors {
                    let _ = write!(line, " {} {} {}", c[i][0], c[i][1], c[i][2]);
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
        }
        PlyFormat::BinaryLittleEndian => {
            for i in 0..cloud.len() {
                for v in cloud.positions[i] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                if let Some(n) = &cloud.normals {
                    for v in n[i] {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
                if let Some(c) = &cloud.colors {
                    out.extend_from_slice(&c[i]);
                }
            }
        }
    }
    out
}
