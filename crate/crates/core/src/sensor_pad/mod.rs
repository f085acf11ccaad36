//! Taxel lattices on sensor-pad meshes and their rigid motion.

mod face;
mod io;
mod lattice;
mod state;

pub use face::{detect_contact_face, FaceFrame};
pub use io::{read_taxels, write_taxels};
pub use lattice::{
    sample_taxels, sample_taxels_with, taxel_orientation, taxel_world_state,
    taxel_world_state_into, SampleOptions, TaxelArray, TaxelWorldBatch, NOMINAL_PITCH,
};
pub use state::RigidState;

use crate::geometry::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum SensorPadError {
    #[error("pad not slab-like: thickness {thickness} exceeds half of the next extent {next}")]
    NotSlabLike { thickness: f64, next: f64 },
    #[error("taxel ray missed pad surface at lattice node ({row}, {col})")]
    RayMissed { row: usize, col: usize },
    #[error("invalid taxel lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid rigid state: {0}")]
    InvalidState(String),
    #[error("taxel file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
