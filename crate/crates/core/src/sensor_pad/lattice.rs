use nalgebra::{Point3, UnitQuaternion, Vector3};

use super::face::{detect_contact_face, FaceFrame};
use super::state::RigidState;
use super::SensorPadError;
use crate::geometry::TriangleMesh;

/// Nominal center-to-center spacing of the real sensor (2 mm).
pub const NOMINAL_PITCH: f64 = 0.002;

/// Fixed taxel orientation, `Euler(0, 0, −π)`.
pub fn taxel_orientation() -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(0.0, 0.0, -std::f64::consts::PI)
}

/// Rest positions of an R×C taxel lattice in the pad link frame.
///
/// Taxel `(i, j)` is stored at index `i * cols + j`; `i` runs along the face's
/// `u` axis and `j` along `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxelArray {
    rows: usize,
    cols: usize,
    positions_local: Vec<Point3<f64>>,
    orientation_local: UnitQuaternion<f64>,
    pitch_u: f64,
    pitch_v: f64,
    margin: f64,
}

impl TaxelArray {
    pub fn new(
        rows: usize,
        cols: usize,
        positions_local: Vec<Point3<f64>>,
        pitch_u: f64,
        pitch_v: f64,
        margin: f64,
    ) -> Result<Self, SensorPadError> {
        if rows == 0 || cols == 0 {
            return Err(SensorPadError::InvalidLattice(format!(
                "lattice must be non-empty, got {rows}x{cols}"
            )));
        }
        if positions_local.len() != rows * cols {
            return Err(SensorPadError::InvalidLattice(format!(
                "{rows}x{cols} lattice needs {} positions, got {}",
                rows * cols,
                positions_local.len()
            )));
        }
        if positions_local
            .iter()
            .any(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(SensorPadError::InvalidLattice(
                "non-finite taxel position".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            positions_local,
            orientation_local: taxel_orientation(),
            pitch_u,
            pitch_v,
            margin,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.positions_local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_local.is_empty()
    }

    pub fn positions_local(&self) -> &[Point3<f64>] {
        &self.positions_local
    }

    pub fn position(&self, row: usize, col: usize) -> Point3<f64> {
        self.positions_local[row * self.cols + col]
    }

    pub fn orientation_local(&self) -> UnitQuaternion<f64> {
        self.orientation_local
    }

    pub fn pitch_u(&self) -> f64 {
        self.pitch_u
    }

    pub fn pitch_v(&self) -> f64 {
        self.pitch_v
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Selects which slab face senses; defaults to the positive thickness axis.
    pub side_hint: Option<Vector3<f64>>,
    /// A warning is logged when the derived pitch is off by more than 10%.
    pub nominal_pitch: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            side_hint: None,
            nominal_pitch: NOMINAL_PITCH,
        }
    }
}

pub fn sample_taxels(
    pad_mesh: &TriangleMesh,
    rows: usize,
    cols: usize,
    margin: f64,
) -> Result<TaxelArray, SensorPadError> {
    sample_taxels_with(pad_mesh, rows, cols, margin, &SampleOptions::default())
}

/// Lays a uniform lattice over the pad's sensing face, inset by `margin`, and
/// projects every node onto the mesh by casting a ray along the inward normal.
pub fn sample_taxels_with(
    pad_mesh: &TriangleMesh,
    rows: usize,
    cols: usize,
    margin: f64,
    opts: &SampleOptions,
) -> Result<TaxelArray, SensorPadError> {
    if rows < 2 || cols < 2 {
        return Err(SensorPadError::InvalidLattice(format!(
            "lattice needs at least 2 rows and 2 cols, got {rows}x{cols}"
        )));
    }
    if !(margin >= 0.0) {
        return Err(SensorPadError::InvalidLattice(format!(
            "margin must be non-negative, got {margin}"
        )));
    }
    let face = detect_contact_face(pad_mesh, opts.side_hint)?;
    let span_u = face.extent_u - 2.0 * margin;
    let span_v = face.extent_v - 2.0 * margin;
    if !(span_u > 0.0 && span_v > 0.0) {
        return Err(SensorPadError::InvalidLattice(format!(
            "margin {margin} too large for a {}x{} face",
            face.extent_u, face.extent_v
        )));
    }
    let pitch_u = span_u / (rows - 1) as f64;
    let pitch_v = span_v / (cols - 1) as f64;
    warn_on_pitch_deviation(pitch_u, pitch_v, opts.nominal_pitch);

    let lift = face.normal * (2.0 * face.thickness);
    let down = -face.normal;
    let mut positions = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let node = lattice_node(&face, span_u, span_v, pitch_u, pitch_v, i, j);
            let hit = pad_mesh
                .ray_cast(&(node + lift), &down)
                .ok_or(SensorPadError::RayMissed { row: i, col: j })?;
            positions.push(hit.point);
        }
    }
    TaxelArray::new(rows, cols, positions, pitch_u, pitch_v, margin)
}

fn lattice_node(
    face: &FaceFrame,
    span_u: f64,
    span_v: f64,
    pitch_u: f64,
    pitch_v: f64,
    i: usize,
    j: usize,
) -> Point3<f64> {
    face.centroid
        + face.axis_u * (-span_u / 2.0 + i as f64 * pitch_u)
        + face.axis_v * (-span_v / 2.0 + j as f64 * pitch_v)
}

fn warn_on_pitch_deviation(pitch_u: f64, pitch_v: f64, nominal: f64) {
    if !(nominal > 0.0) {
        return;
    }
    for (axis, pitch) in [("u", pitch_u), ("v", pitch_v)] {
        let rel = (pitch - nominal).abs() / nominal;
        if rel > 0.10 {
            log::warn!(
                "derived {axis} pitch {pitch:.6} m deviates {:.1}% from nominal {nominal} m",
                rel * 100.0
            );
        }
    }
}

/// World-frame taxel positions and velocities for one pad state.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxelWorldBatch {
    pub rows: usize,
    pub cols: usize,
    pub positions: Vec<Point3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
}

impl TaxelWorldBatch {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `x_w = R x_l + p` and `ẋ_w = ω × (R x_l) + v` for every taxel.
pub fn taxel_world_state(taxels: &TaxelArray, pad_state: &RigidState) -> TaxelWorldBatch {
    let mut batch = TaxelWorldBatch {
        rows: taxels.rows,
        cols: taxels.cols,
        positions: Vec::with_capacity(taxels.len()),
        velocities: Vec::with_capacity(taxels.len()),
    };
    taxel_world_state_into(taxels, pad_state, &mut batch);
    batch
}

/// Allocation-free variant of [`taxel_world_state`] for hot loops.
pub fn taxel_world_state_into(
    taxels: &TaxelArray,
    pad_state: &RigidState,
    batch: &mut TaxelWorldBatch,
) {
    batch.rows = taxels.rows;
    batch.cols = taxels.cols;
    batch.positions.clear();
    batch.velocities.clear();
    let rot = pad_state.rotation.to_rotation_matrix();
    for local in &taxels.positions_local {
        let arm = rot * local.coords;
        batch
            .positions
            .push(Point3::from(arm + pad_state.translation));
        batch
            .velocities
            .push(pad_state.angular_velocity.cross(&arm) + pad_state.linear_velocity);
    }
}
