//! Kelvin–Voigt penalty contact between taxels and a rigid object.
//!
//! Penetration depth is `d = max(0, −sdf)`. The depth rate `ḋ` is the speed at
//! which the taxel moves into the object along the object's outward normal,
//! `ḋ = −n̂ · (ẋ_taxel − v_object)`, so an approaching contact pushes harder.
//! Force magnitude is `max(0, k_n d + k_d ḋ)` and vanishes without contact.

mod io;

pub use io::{read_frames, write_frames, write_heatmap_png, FrameChannel, FrameSequence};

use nalgebra::{Point3, Vector3};

use crate::geometry::SignedDistanceField;
use crate::sensor_pad::{RigidState, TaxelWorldBatch};

#[derive(Debug, thiserror::Error)]
pub enum ContactError {
    #[error("invalid contact parameter {field}: {message}")]
    InvalidParameter {
        field: &'static str,
        message: String,
    },
    #[error("malformed frame file: {0}")]
    BadFrameFile(String),
    #[error(transparent)]
    Png(#[from] png::EncodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactParams {
    /// Normal stiffness, N/m.
    pub k_n: f64,
    /// Damping, N·s/m.
    pub k_d: f64,
    /// Clip pulling (negative) forces during separation to zero.
    pub clamp_negative: bool,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            k_n: 1.0,
            k_d: 3e-3,
            clamp_negative: true,
        }
    }
}

impl ContactParams {
    pub fn new(k_n: f64, k_d: f64) -> Result<Self, ContactError> {
        let p = Self {
            k_n,
            k_d,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ContactError> {
        if !(self.k_n > 0.0) || !self.k_n.is_finite() {
            return Err(ContactError::InvalidParameter {
                field: "k_n",
                message: format!("must be positive, got {}", self.k_n),
            });
        }
        if !(self.k_d >= 0.0) || !self.k_d.is_finite() {
            return Err(ContactError::InvalidParameter {
                field: "k_d",
                message: format!("must be non-negative, got {}", self.k_d),
            });
        }
        Ok(())
    }
}

/// Normal force magnitude for a penetration depth `d ≥ 0` and depth rate.
pub fn contact_force(d: f64, d_rate: f64, params: &ContactParams) -> f64 {
    if !(d > 0.0) {
        return 0.0;
    }
    let f = params.k_n * d + params.k_d * d_rate;
    if params.clamp_negative {
        f.max(0.0)
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSample {
    pub depth: f64,
    pub depth_rate: f64,
    /// Outward object normal in world coordinates.
    pub normal: Vector3<f64>,
    pub force: f64,
    /// The query fell outside the field's data and still reported contact.
    pub saturated: bool,
}

impl ContactSample {
    const NONE: Self = Self {
        depth: 0.0,
        depth_rate: 0.0,
        normal: Vector3::new(0.0, 0.0, 0.0),
        force: 0.0,
        saturated: false,
    };
}

/// Evaluates one taxel against an object whose field is expressed in its rest frame.
pub fn contact_sample<F: SignedDistanceField + ?Sized>(
    taxel_position: &Point3<f64>,
    taxel_velocity: &Vector3<f64>,
    object_sdf: &F,
    object_state: &RigidState,
    params: &ContactParams,
) -> ContactSample {
    let local = object_state.inverse_transform_point(taxel_position);
    let distance = object_sdf.distance(&local);
    if !(distance < 0.0) {
        return ContactSample::NONE;
    }
    let sample = object_sdf.sample(&local);
    let normal = object_state.rotation * sample.normal;
    let relative = taxel_velocity - object_state.point_velocity(taxel_position);
    let depth = -sample.distance;
    let depth_rate = -normal.dot(&relative);
    ContactSample {
        depth,
        depth_rate,
        normal,
        force: contact_force(depth, depth_rate, params),
        saturated: !object_sdf.in_domain(&local),
    }
}

/// One R×C tactile image with depth (m) and force (N) channels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileFrame {
    pub rows: usize,
    pub cols: usize,
    pub depth: Vec<f64>,
    pub force: Vec<f64>,
    pub normalized: bool,
    pub step: usize,
    /// Per-taxel flag for queries outside the field's data region.
    pub saturated: Vec<bool>,
    /// Values clipped to [0, 1] during normalization.
    pub clamped: usize,
}

impl TactileFrame {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Self {
            rows,
            cols,
            depth: vec![0.0; n],
            force: vec![0.0; n],
            normalized: false,
            step: 0,
            saturated: vec![false; n],
            clamped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn contact_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }

    pub fn max_force(&self) -> f64 {
        self.force.iter().copied().fold(0.0, f64::max)
    }

    pub fn force_sum(&self) -> f64 {
        self.force.iter().sum()
    }

    pub fn saturated_count(&self) -> usize {
        self.saturated.iter().filter(|&&s| s).count()
    }

    /// Row-major `R×C×channels` tensor; channels beyond the two stored ones are zero.
    pub fn to_tensor(&self, channels: usize) -> Vec<f32> {
        let mut out = vec![0.0f32; self.len() * channels];
        for (i, px) in out.chunks_exact_mut(channels).enumerate() {
            if channels > 0 {
                px[0] = self.depth[i] as f32;
            }
            if channels > 1 {
                px[1] = self.force[i] as f32;
            }
        }
        out
    }
}

/// Evaluates every taxel of one pad against the object, in lattice order.
pub fn step_tactile<F: SignedDistanceField + ?Sized>(
    taxels: &TaxelWorldBatch,
    object_sdf: &F,
    object_state: &RigidState,
    params: &ContactParams,
) -> TactileFrame {
    let mut frame = TactileFrame::zeros(taxels.rows, taxels.cols);
    for (i, (x, v)) in taxels.positions.iter().zip(&taxels.velocities).enumerate() {
        let s = contact_sample(x, v, object_sdf, object_state, params);
        frame.depth[i] = s.depth;
        frame.force[i] = s.force;
        frame.saturated[i] = s.saturated;
    }
    frame
}

/// Per-channel full-scale values used by [`normalize_frame`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameScale {
    pub depth_max: f64,
    pub force_max: f64,
}

impl Default for FrameScale {
    /// 2 mm of penetration, and the force it produces at unit stiffness.
    fn default() -> Self {
        Self {
            depth_max: 0.002,
            force_max: 0.002,
        }
    }
}

/// Linear rescale of both channels to [0, 1], counting clipped values.
pub fn normalize_frame(frame: &TactileFrame, scale: &FrameScale) -> TactileFrame {
    assert!(
        scale.depth_max > 0.0 && scale.force_max > 0.0,
        "normalization maxima must be positive"
    );
    let mut clamped = 0;
    let mut rescale = |values: &[f64], max: f64| -> Vec<f64> {
        values
            .iter()
            .map(|&v| {
                let x = v / max;
                if !(0.0..=1.0).contains(&x) {
                    clamped += 1;
                }
                x.clamp(0.0, 1.0)
            })
            .collect()
    };
    let depth = rescale(&frame.depth, scale.depth_max);
    let force = rescale(&frame.force, scale.force_max);
    TactileFrame {
        depth,
        force,
        normalized: true,
        clamped,
        ..frame.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shapes, AnalyticPrimitive};
    use crate::sensor_pad::{sample_taxels, taxel_world_state};

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn force_examples() {
        let p = ContactParams::default();
        assert_eq!(contact_force(0.0, 5.0, &p), 0.0);
        assert!(rel_close(contact_force(0.002, 0.0, &p), 0.002, 1e-15));
        assert!(rel_close(contact_force(0.001, 0.1, &p), 0.0013, 1e-12));
        assert_eq!(contact_force(0.001, -10.0, &p), 0.0);
        let loose = ContactParams {
            clamp_negative: false,
            ..p
        };
        assert!(contact_force(0.001, -10.0, &loose) < 0.0);
    }

    #[test]
    fn params_are_validated() {
        assert!(ContactParams::new(-1.0, 0.0).is_err());
        assert!(ContactParams::new(1.0, -1e-3).is_err());
        let err = ContactParams::new(0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("k_n"));
    }

    fn pad_batch() -> TaxelWorldBatch {
        let pad = shapes::cuboid(
            Point3::new(0.0, 0.0, -0.002),
            Vector3::new(0.012, 0.032, 0.002),
        );
        let taxels = sample_taxels(&pad, 12, 32, 0.001).unwrap();
        taxel_world_state(&taxels, &RigidState::identity())
    }

    #[test]
    fn far_object_gives_zero_frame() {
        let sphere = AnalyticPrimitive::sphere(Point3::origin(), 0.01).unwrap();
        let state = RigidState::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let f = step_tactile(&pad_batch(), &sphere, &state, &ContactParams::default());
        assert!(f.depth.iter().chain(&f.force).all(|&v| v == 0.0));
    }

    #[test]
    fn sphere_press_depths_follow_cap() {
        let batch = pad_batch();
        let sphere = AnalyticPrimitive::sphere(Point3::origin(), 0.01).unwrap();
        // Taxel surface is z = 0; put the sphere center on a taxel column.
        let c = batch.positions[5 * 32 + 15];
        let state = RigidState::from_translation(Vector3::new(c.x, c.y, 0.009));
        let f = step_tactile(&batch, &sphere, &state, &ContactParams::default());
        let center = 5 * 32 + 15;
        assert!((f.depth[center] - 0.001).abs() < 1e-12);
        let radius = (0.01f64.powi(2) - 0.009f64.powi(2)).sqrt();
        for (i, x) in batch.positions.iter().enumerate() {
            let r = ((x.x - c.x).powi(2) + (x.y - c.y).powi(2)).sqrt();
            let expected = 0.01 - (r * r + 0.009f64.powi(2)).sqrt();
            assert!((f.depth[i] - expected.max(0.0)).abs() < 1e-12, "taxel {i}");
            assert_eq!(f.depth[i] > 0.0, r < radius);
        }
    }

    #[test]
    fn approaching_sphere_adds_damping_force() {
        let batch = pad_batch();
        let sphere = AnalyticPrimitive::sphere(Point3::origin(), 0.01).unwrap();
        let c = batch.positions[5 * 32 + 15];
        let still = RigidState::from_translation(Vector3::new(c.x, c.y, 0.009));
        let moving = still.with_twist(Vector3::zeros(), Vector3::new(0.0, 0.0, -0.01));
        let p = ContactParams::default();
        let a = step_tactile(&batch, &sphere, &still, &p);
        let b = step_tactile(&batch, &sphere, &moving, &p);
        let i = 5 * 32 + 15;
        assert!((b.force[i] - a.force[i] - 3e-5).abs() < 1e-15);
    }

    #[test]
    fn normalize_examples() {
        let mut f = TactileFrame::zeros(1, 2);
        let n = normalize_frame(&f, &FrameScale::default());
        assert!(n.normalized && n.depth == vec![0.0, 0.0] && n.clamped == 0);
        f.depth[0] = 0.001;
        f.force[1] = 5.0;
        let n = normalize_frame(
            &f,
            &FrameScale {
                depth_max: 0.002,
                force_max: 2.0,
            },
        );
        assert_eq!(n.depth[0], 0.5);
        assert_eq!(n.force[1], 1.0);
        assert_eq!(n.clamped, 1);
    }

    #[test]
    fn tensor_appends_zero_channels() {
        let mut f = TactileFrame::zeros(2, 2);
        f.depth[3] = 0.5;
        f.force[3] = 0.25;
        let t = f.to_tensor(4);
        assert_eq!(t.len(), 16);
        assert_eq!(&t[12..], &[0.5, 0.25, 0.0, 0.0]);
    }
}
