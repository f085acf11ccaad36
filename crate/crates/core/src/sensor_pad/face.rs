use nalgebra::{Point3, Vector3};

use super::SensorPadError;
use crate::geometry::{mesh_bounds, TriangleMesh};

/// The flat sensing face of a slab-shaped pad, in the pad mesh frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    /// Center of the sensing face (on the bounding box).
    pub centroid: Point3<f64>,
    pub axis_u: Vector3<f64>,
    pub axis_v: Vector3<f64>,
    /// Outward normal of the sensing face; `axis_u × axis_v = normal`.
    pub normal: Vector3<f64>,
    pub extent_u: f64,
    pub extent_v: f64,
    pub thickness: f64,
}

/// Finds the sensing face of a pad mesh from its bounding box.
///
/// The shortest box axis is the thickness direction. The face normal is that
/// axis, signed to agree with `side_hint` (default: the positive axis). `axis_u`
/// is the lower-indexed in-plane axis and `axis_v` completes a right-handed frame.
pub fn detect_contact_face(
    pad_mesh: &TriangleMesh,
    side_hint: Option<Vector3<f64>>,
) -> Result<FaceFrame, SensorPadError> {
    let bounds = mesh_bounds(pad_mesh)?;
    let ext = bounds.extents();
    let mut axes = [0usize, 1, 2];
    axes.sort_by(|&a, &b| ext[a].total_cmp(&ext[b]).then(a.cmp(&b)));
    let (thick_axis, second) = (axes[0], axes[1]);
    if !(ext[thick_axis] <= 0.5 * ext[second]) {
        return Err(SensorPadError::NotSlabLike {
            thickness: ext[thick_axis],
            next: ext[second],
        });
    }
    let mut axis_t = Vector3::zeros();
    axis_t[thick_axis] = 1.0;
    let hint = side_hint.unwrap_or(axis_t);
    let side = hint.dot(&axis_t);
    if side == 0.0 || !side.is_finite() {
        return Err(SensorPadError::InvalidLattice(format!(
            "side hint {hint:?} is perpendicular to the pad thickness axis"
        )));
    }
    let normal = axis_t * side.signum();
    let u_axis = (0..3).find(|&a| a != thick_axis).unwrap();
    let v_axis = 3 - thick_axis - u_axis;
    let mut axis_u = Vector3::zeros();
    axis_u[u_axis] = 1.0;
    let axis_v = normal.cross(&axis_u);
    Ok(FaceFrame {
        centroid: bounds.center() + normal * (ext[thick_axis] / 2.0),
        axis_u,
        axis_v,
        normal,
        extent_u: ext[u_axis],
        extent_v: ext[v_axis],
        thickness: ext[thick_axis],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;
    use nalgebra::{Isometry3, UnitQuaternion};

    fn slab() -> TriangleMesh {
        shapes::cuboid(Point3::origin(), Vector3::new(0.012, 0.032, 0.002))
    }

    #[test]
    fn thin_slab_face() {
        let f = detect_contact_face(&slab(), None).unwrap();
        assert!((f.thickness - 0.004).abs() < 1e-15);
        assert!((f.extent_u - 0.024).abs() < 1e-15);
        assert!((f.extent_v - 0.064).abs() < 1e-15);
        assert_eq!(f.normal, Vector3::z());
        assert!((f.centroid - Point3::new(0.0, 0.0, 0.002)).norm() < 1e-15);
        assert!((f.axis_u.cross(&f.axis_v) - f.normal).norm() < 1e-15);
    }

    #[test]
    fn cube_is_not_slab_like() {
        let cube = shapes::cuboid(Point3::origin(), Vector3::repeat(0.01));
        let err = detect_contact_face(&cube, None).unwrap_err();
        assert!(err.to_string().contains("pad not slab-like"), "{err}");
    }

    #[test]
    fn rotated_slab_permutes_axes() {
        let rot = Isometry3::from_parts(
            Default::default(),
            UnitQuaternion::from_euler_angles(std::f64::consts::FRAC_PI_2, 0.0, 0.0),
        );
        let f = detect_contact_face(&slab().transformed(&rot), None).unwrap();
        assert!((f.thickness - 0.004).abs() < 1e-12);
        assert!((f.extent_u - 0.024).abs() < 1e-12);
        assert!((f.extent_v - 0.064).abs() < 1e-12);
        assert!((f.normal - Vector3::y()).norm() < 1e-12);
        assert!((f.axis_u.cross(&f.axis_v) - f.normal).norm() < 1e-12);
    }

    #[test]
    fn hint_selects_opposite_face() {
        let f = detect_contact_face(&slab(), Some(-Vector3::z())).unwrap();
        assert_eq!(f.normal, -Vector3::z());
        assert!((f.centroid.z + 0.002).abs() < 1e-15);
        assert!(detect_contact_face(&slab(), Some(Vector3::x())).is_err());
    }
}
