//! OBJ and STL (ASCII and binary) mesh loading and writing.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Point3;

use super::mesh::TriangleMesh;
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(Self::Obj),
            "stl" => Some(Self::Stl),
            _ => None,
        }
    }
}

/// Loads an OBJ or STL mesh, multiplying every coordinate by `scale`
/// (use `1e-3` for assets authored in millimeters).
///
/// Normals are always recomputed from the triangle winding. Zero-area
/// triangles are dropped, and open or non-manifold meshes only produce a
/// warning here; SDF construction is where watertightness is enforced.
pub fn load_mesh(path: impl AsRef<Path>, scale: f64) -> Result<TriangleMesh, GeometryError> {
    let path = path.as_ref();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GeometryError::InvalidParameter(format!(
            "mesh scale must be positive, got {scale}"
        )));
    }
    let format =
        MeshFormat::from_path(path).ok_or_else(|| GeometryError::UnsupportedFormat(path.into()))?;
    let bytes = fs::read(path)?;
    let (vertices, triangles) = match format {
        MeshFormat::Obj => parse_obj(path, &String::from_utf8_lossy(&bytes))?,
        MeshFormat::Stl if is_binary_stl(&bytes) => parse_stl_binary(path, &bytes)?,
        MeshFormat::Stl => parse_stl_ascii(path, &String::from_utf8_lossy(&bytes))?,
    };
    let vertices: Vec<Point3<f64>> = vertices.into_iter().map(|p| p * scale).collect();
    let triangles = drop_degenerate(path, &vertices, triangles);
    let mesh = TriangleMesh::new(vertices, triangles)?;
    let open_edges = mesh.boundary_edge_count();
    if open_edges > 0 {
        log::warn!(
            "{}: {open_edges} edges are not shared by exactly two triangles (mesh is not watertight)",
            path.display()
        );
    }
    Ok(mesh)
}

fn drop_degenerate(
    path: &Path,
    vertices: &[Point3<f64>],
    triangles: Vec<[u32; 3]>,
) -> Vec<[u32; 3]> {
    let before = triangles.len();
    let kept: Vec<[u32; 3]> = triangles
        .into_iter()
        .filter(|tri| {
            // Out-of-range indices pass through; construction reports them.
            if tri.iter().any(|&i| i as usize >= vertices.len()) {
                return true;
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            (b - a).cross(&(c - a)).norm() > 0.0
        })
        .collect();
    if kept.len() < before {
        log::warn!(
            "{}: dropped {} zero-area triangles",
            path.display(),
            before - kept.len()
        );
    }
    kept
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

type RawMesh = (Vec<Point3<f64>>, Vec<[u32; 3]>);

fn parse_obj(path: &Path, text: &str) -> Result<RawMesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_error(path, line_no, format!("bad vertex: {e}")))?;
                if coords.len() != 3 {
                    return Err(parse_error(path, line_no, "vertex needs 3 coordinates"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut face = Vec::new();
                for tok in tokens {
                    let idx_str = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str
                        .parse()
                        .map_err(|e| parse_error(path, line_no, format!("bad face index: {e}")))?;
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => vertices.len() as i64 + i,
                        _ => return Err(parse_error(path, line_no, "face index 0 is invalid")),
                    };
                    if resolved < 0 {
                        return Err(parse_error(path, line_no, "index out of range"));
                    }
                    face.push(resolved as u32);
                }
                if face.len() < 3 {
                    return Err(parse_error(path, line_no, "face needs at least 3 vertices"));
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    bytes.len() == 84 + 50 * count
}

/// Merges bit-identical vertices; STL stores every triangle corner separately.
#[derive(Default)]
struct VertexDedup {
    index: HashMap<[u64; 3], u32>,
    vertices: Vec<Point3<f64>>,
}

impl VertexDedup {
    fn insert(&mut self, p: Point3<f64>) -> u32 {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            (self.vertices.len() - 1) as u32
        })
    }
}

fn parse_stl_binary(path: &Path, bytes: &[u8]) -> Result<RawMesh, GeometryError> {
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let mut dedup = VertexDedup::default();
    let mut triangles = Vec::with_capacity(count);
    for t in 0..count {
        let rec = &bytes[84 + 50 * t..84 + 50 * (t + 1)];
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
        let mut tri = [0u32; 3];
        for (c, slot) in tri.iter_mut().enumerate() {
            // Skip the 3-float stored normal.
            let base = 3 + 3 * c;
            let p = Point3::new(f(base), f(base + 1), f(base + 2));
            if !p.iter().all(|v| v.is_finite()) {
                return Err(parse_error(path, t + 1, "non-finite vertex"));
            }
            *slot = dedup.insert(p);
        }
        triangles.push(tri);
    }
    Ok((dedup.vertices, triangles))
}

fn parse_stl_ascii(path: &Path, text: &str) -> Result<RawMesh, GeometryError> {
    let mut dedup = VertexDedup::default();
    let mut triangles = Vec::new();
    let mut corners: Vec<u32> = Vec::with_capacity(3);
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|s| s.parse::<f32>().map(f64::from))
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_error(path, lineno + 1, format!("bad vertex: {e}")))?;
                if coords.len() != 3 {
                    return Err(parse_error(path, lineno + 1, "vertex needs 3 coordinates"));
                }
                corners.push(dedup.insert(Point3::new(coords[0], coords[1], coords[2])));
            }
            Some("endfacet") => {
                if corners.len() != 3 {
                    return Err(parse_error(path, lineno + 1, "facet must have 3 vertices"));
                }
                triangles.push([corners[0], corners[1], corners[2]]);
                corners.clear();
            }
            _ => {}
        }
    }
    Ok((dedup.vertices, triangles))
}

pub fn write_obj(mesh: &TriangleMesh, mut out: impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for [a, b, c] in mesh.triangles() {
        writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
    }
    Ok(())
}

/// Binary STL. Coordinates are narrowed to `f32` as the format requires.
pub fn write_stl_binary(mesh: &TriangleMesh, mut out: impl Write) -> std::io::Result<()> {
    let mut header = [0u8; 80];
    header[..8].copy_from_slice(b"taxelsim");
    out.write_all(&header)?;
    out.write_all(&(mesh.triangle_count() as u32).to_le_bytes())?;
    for t in 0..mesh.triangle_count() {
        let n = mesh.normals()[t];
        for c in n.iter() {
            out.write_all(&(*c as f32).to_le_bytes())?;
        }
        for p in mesh.triangle(t) {
            for c in p.iter() {
                out.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
        out.write_all(&[0, 0])?;
    }
    Ok(())
}

pub fn write_stl_ascii(mesh: &TriangleMesh, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "solid taxelsim")?;
    for t in 0..mesh.triangle_count() {
        let n = mesh.normals()[t];
        writeln!(out, "  facet normal {} {} {}", n.x, n.y, n.z)?;
        writeln!(out, "    outer loop")?;
        for p in mesh.triangle(t) {
            writeln!(
                out,
                "      vertex {} {} {}",
                p.x as f32, p.y as f32, p.z as f32
            )?;
        }
        writeln!(out, "    endloop")?;
        writeln!(out, "  endfacet")?;
    }
    writeln!(out, "endsolid taxelsim")
}
