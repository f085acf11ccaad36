use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};

use super::SensorPadError;

/// Pose and twist of a rigid body. Angular velocity is expressed in the
/// world frame, so a body point `x` moves with `ω × (x − p) + v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidState {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub linear_velocity: Vector3<f64>,
}

impl Default for RigidState {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidState {
    pub fn identity() -> Self {
        Self::from_pose(UnitQuaternion::identity(), Vector3::zeros())
    }

    pub fn from_pose(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
            angular_velocity: Vector3::zeros(),
            linear_velocity: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::from_pose(UnitQuaternion::identity(), translation)
    }

    pub fn with_twist(mut self, angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        self.angular_velocity = angular;
        self.linear_velocity = linear;
        self
    }

    /// Builds the rotation from `(w, x, y, z)`. Components within 1e-3 of unit
    /// norm are renormalized (text files round them); anything else is an error.
    pub fn quaternion_from_wxyz(q: [f64; 4]) -> Result<UnitQuaternion<f64>, SensorPadError> {
        let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = raw.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-3 {
            return Err(SensorPadError::InvalidState(format!(
                "quaternion {q:?} is not unit length (|q| = {norm})"
            )));
        }
        Ok(UnitQuaternion::from_quaternion(raw))
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.translation), self.rotation)
    }

    pub fn transform_point(&self, local: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * local.coords + self.translation)
    }

    pub fn inverse_transform_point(&self, world: &Point3<f64>) -> Point3<f64> {
        Point3::from(
            self.rotation
                .inverse_transform_vector(&(world.coords - self.translation)),
        )
    }

    /// Velocity of the body-fixed point currently at `world`.
    pub fn point_velocity(&self, world: &Point3<f64>) -> Vector3<f64> {
        self.angular_velocity
            .cross(&(world.coords - self.translation))
            + self.linear_velocity
    }

    /// Pose after holding the current twist constant for `dt` seconds.
    pub fn advanced(&self, dt: f64) -> Self {
        let spin = UnitQuaternion::from_scaled_axis(self.angular_velocity * dt);
        Self {
            rotation: spin * self.rotation,
            translation: self.translation + self.linear_velocity * dt,
            ..*self
        }
    }
}
