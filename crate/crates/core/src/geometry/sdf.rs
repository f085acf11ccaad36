//! Uniform-grid signed distance fields built from watertight meshes.
//!
//! Node values hold the exact distance to the nearest triangle, signed by a
//! ray-parity vote along the three grid axes. Queries interpolate trilinearly
//! and take normals from central differences one cell wide. Points outside the
//! grid are extrapolated as the boundary value plus the distance to the grid box.
//!
//! Node values are stored as `f32`. A grid read back from disk is bit-identical
//! to the freshly built one.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use super::mesh::{Aabb, TriangleMesh};
use super::GeometryError;
use crate::io_util;

pub const DEFAULT_NODE_BUDGET: u64 = 64 * 1024 * 1024;

const MAGIC: &[u8; 4] = b"TSDF";
const VERSION: u32 = 1;

/// Signed distance (negative inside) and unit outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub distance: f64,
    pub normal: Vector3<f64>,
}

/// Anything that can answer signed distance queries in its own frame.
pub trait SignedDistanceField: Send + Sync {
    fn distance(&self, p: &Point3<f64>) -> f64;

    fn sample(&self, p: &Point3<f64>) -> SdfSample;

    /// Whether `p` lies where the field is backed by data rather than extrapolated.
    fn in_domain(&self, _p: &Point3<f64>) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SdfBuildOptions {
    pub node_budget: u64,
}

impl Default for SdfBuildOptions {
    fn default() -> Self {
        Self {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Regular grid of signed distances, x-fastest node order.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    origin: Point3<f64>,
    cell_size: f64,
    dims: [usize; 3],
    values: Vec<f32>,
}

/// 1/64 of the longest bounding-box edge.
pub fn default_cell_size(mesh: &TriangleMesh) -> f64 {
    mesh.bounds().longest_edge() / 64.0
}

pub fn build_sdf_grid(
    mesh: &TriangleMesh,
    cell_size: f64,
    padding_cells: usize,
) -> Result<SdfGrid, GeometryError> {
    SdfGrid::build(mesh, cell_size, padding_cells, &SdfBuildOptions::default())
}

pub fn sdf_query(sdf: &SdfGrid, point: &Point3<f64>) -> SdfSample {
    sdf.sample(point)
}

impl SdfGrid {
    pub fn build(
        mesh: &TriangleMesh,
        cell_size: f64,
        padding_cells: usize,
        opts: &SdfBuildOptions,
    ) -> Result<Self, GeometryError> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(GeometryError::InvalidParameter(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if padding_cells < 2 {
            return Err(GeometryError::InvalidParameter(format!(
                "sdf padding must be at least 2 cells, got {padding_cells}"
            )));
        }
        mesh.ensure_watertight()?;

        let bounds = mesh.bounds();
        let pad = padding_cells as f64 * cell_size;
        let origin = bounds.min - Vector3::repeat(pad);
        let mut dims = [0usize; 3];
        for (axis, dim) in dims.iter_mut().enumerate() {
            // The small slack keeps exact multiples from gaining a spurious node.
            let cells = (bounds.extents()[axis] / cell_size - 1e-6).ceil().max(0.0) as usize;
            *dim = cells + 1 + 2 * padding_cells;
        }
        let nodes = dims.iter().map(|&d| d as u64).product::<u64>();
        if nodes > opts.node_budget {
            return Err(GeometryError::GridTooLarge {
                nodes,
                budget: opts.node_budget,
            });
        }

        let inside_votes = parity_votes(mesh, &origin, cell_size, dims);
        let [nx, ny, _] = dims;
        let values: Vec<f32> = (0..nodes as usize)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx % nx, (idx / nx) % ny, idx / (nx * ny));
                let p = origin + Vector3::new(i as f64, j as f64, k as f64) * cell_size;
                let d = mesh.unsigned_distance(&p);
                let signed = if inside_votes[idx] >= 2 { -d } else { d };
                signed as f32
            })
            .collect();
        Ok(Self {
            origin,
            cell_size,
            dims,
            values,
        })
    }

    /// Grid sampled from an arbitrary function (used to wrap analytic fields).
    pub fn from_fn(
        origin: Point3<f64>,
        cell_size: f64,
        dims: [usize; 3],
        f: impl Fn(&Point3<f64>) -> f64 + Sync,
    ) -> Result<Self, GeometryError> {
        if dims.iter().any(|&d| d < 2) || !(cell_size > 0.0) {
            return Err(GeometryError::InvalidParameter(
                "sdf grid needs >= 2 nodes per axis and a positive cell size".into(),
            ));
        }
        let [nx, ny, nz] = dims;
        let values = (0..nx * ny * nz)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx % nx, (idx / nx) % ny, idx / (nx * ny));
                f(&(origin + Vector3::new(i as f64, j as f64, k as f64) * cell_size)) as f32
            })
            .collect();
        Ok(Self {
            origin,
            cell_size,
            dims,
            values,
        })
    }

    pub fn origin(&self) -> Point3<f64> {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.cell_size
    }

    pub fn node_value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)] as f64
    }

    /// Box spanned by the node positions.
    pub fn grid_box(&self) -> Aabb {
        let far = self.node_position(self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1);
        Aabb {
            min: self.origin,
            max: far,
        }
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    fn trilinear(&self, p: &Point3<f64>) -> f64 {
        let local = (p - self.origin) / self.cell_size;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let max_cell = self.dims[axis] - 2;
            let cell = local[axis].floor().clamp(0.0, max_cell as f64) as usize;
            base[axis] = cell;
            frac[axis] = local[axis] - cell as f64;
        }
        let [i, j, k] = base;
        let [tx, ty, tz] = frac;
        let v = |di: usize, dj: usize, dk: usize| self.node_value(i + di, j + dj, k + dk);
        let c00 = v(0, 0, 0) * (1.0 - tx) + v(1, 0, 0) * tx;
        let c10 = v(0, 1, 0) * (1.0 - tx) + v(1, 1, 0) * tx;
        let c01 = v(0, 0, 1) * (1.0 - tx) + v(1, 0, 1) * tx;
        let c11 = v(0, 1, 1) * (1.0 - tx) + v(1, 1, 1) * tx;
        let c0 = c00 * (1.0 - ty) + c10 * ty;
        let c1 = c01 * (1.0 - ty) + c11 * ty;
        c0 * (1.0 - tz) + c1 * tz
    }

    fn gradient_normal(&self, p: &Point3<f64>) -> Vector3<f64> {
        let h = self.cell_size;
        let g = Vector3::from_fn(|axis, _| {
            let mut step = Vector3::zeros();
            step[axis] = h;
            (self.distance(&(p + step)) - self.distance(&(p - step))) / (2.0 * h)
        });
        g.try_normalize(1e-12).unwrap_or_else(Vector3::z)
    }

    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        for d in self.dims {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        for c in self.origin.iter() {
            out.write_all(&c.to_le_bytes())?;
        }
        out.write_all(&self.cell_size.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)
    }

    pub fn read_from(mut input: impl Read) -> Result<Self, GeometryError> {
        let bad = |m: &str| GeometryError::BadSdfFile(m.to_string());
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("wrong magic"));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |input: &mut dyn Read| -> std::io::Result<u32> {
            input.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let version = read_u32(&mut input)?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            *d = read_u32(&mut input)? as usize;
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(bad("dims must be >= 2"));
        }
        let mut f64buf = [0u8; 8];
        let mut origin = Point3::origin();
        for c in origin.iter_mut() {
            input.read_exact(&mut f64buf)?;
            *c = f64::from_le_bytes(f64buf);
        }
        input.read_exact(&mut f64buf)?;
        let cell_size = f64::from_le_bytes(f64buf);
        if !(cell_size > 0.0) {
            return Err(bad("cell size must be positive"));
        }
        let count = dims.iter().product::<usize>();
        let mut raw = vec![0u8; count * 4];
        input.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            origin,
            cell_size,
            dims,
            values,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        io_util::write_atomic(path.as_ref(), |w| self.write_to(w))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

impl SignedDistanceField for SdfGrid {
    fn distance(&self, p: &Point3<f64>) -> f64 {
        let bounds = self.grid_box();
        if bounds.contains(p) {
            self.trilinear(p)
        } else {
            let q = bounds.clamp(p);
            self.trilinear(&q) + (p - q).norm()
        }
    }

    fn sample(&self, p: &Point3<f64>) -> SdfSample {
        SdfSample {
            distance: self.distance(p),
            normal: self.gradient_normal(p),
        }
    }

    fn in_domain(&self, p: &Point3<f64>) -> bool {
        self.grid_box().contains(p)
    }
}

/// Per-node count (0..=3) of axis directions whose ray parity says "inside".
///
/// One ray per grid line, offset by a tiny irrational fraction of a cell so
/// that rays never run exactly through edges or within faces of grid-aligned
/// meshes.
fn parity_votes(mesh: &TriangleMesh, origin: &Point3<f64>, h: f64, dims: [usize; 3]) -> Vec<u8> {
    const JITTER: [f64; 3] = [0.000_618_034, 0.000_414_214, 0.000_732_051];
    let total = dims.iter().product::<usize>();
    let mut votes = vec![0u8; total];
    let stride = [1, dims[0], dims[0] * dims[1]];
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        let lines: Vec<(usize, usize)> = (0..dims[a2])
            .flat_map(|b| (0..dims[a1]).map(move |a| (a, b)))
            .collect();
        let parities: Vec<Vec<bool>> = lines
            .par_iter()
            .map(|&(a, b)| {
                let mut start = *origin;
                start[axis] -= h;
                start[a1] += (a as f64 + JITTER[a1]) * h;
                start[a2] += (b as f64 + JITTER[a2]) * h;
                let mut dir = Vector3::zeros();
                dir[axis] = 1.0;
                let crossings = mesh.ray_crossings(&start, &dir);
                let mut seen = 0usize;
                (0..dims[axis])
                    .map(|n| {
                        let t_node = (n as f64 + 1.0) * h;
                        while seen < crossings.len() && crossings[seen] < t_node {
                            seen += 1;
                        }
                        seen % 2 == 1
                    })
                    .collect()
            })
            .collect();
        for (&(a, b), parity) in lines.iter().zip(&parities) {
            let base = a * stride[a1] + b * stride[a2];
            for (n, &inside) in parity.iter().enumerate() {
                votes[base + n * stride[axis]] += inside as u8;
            }
        }
    }
    votes
}
