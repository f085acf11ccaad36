//! Rigid geometry: triangle meshes and their signed distance fields.
//!
//! All lengths are in meters. Meshes and grids are immutable once built and can
//! be shared freely between worker threads.

pub(crate) mod analytic;
mod bvh;
mod io;
mod mesh;
mod sdf;
pub mod shapes;

pub use analytic::{analytic_sdf, AnalyticPrimitive};
pub use io::{load_mesh, write_obj, write_stl_ascii, write_stl_binary, MeshFormat};
pub use mesh::{mesh_bounds, ray_cast, Aabb, Hit, TriangleMesh};
pub use sdf::{
    build_sdf_grid, default_cell_size, sdf_query, SdfBuildOptions, SdfGrid, SdfSample,
    SignedDistanceField, DEFAULT_NODE_BUDGET,
};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("triangle {triangle}: vertex index out of range ({index} >= {count})")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        count: usize,
    },
    #[error("triangle {0} is degenerate (zero area)")]
    DegenerateTriangle(usize),
    #[error("mesh not watertight: {0} edges are not shared by exactly two triangles")]
    NotWatertight(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sdf grid of {nodes} nodes exceeds the node budget of {budget}")]
    GridTooLarge { nodes: u64, budget: u64 },
    #[error("unsupported mesh format for {0}")]
    UnsupportedFormat(PathBuf),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("malformed sdf file: {0}")]
    BadSdfFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
