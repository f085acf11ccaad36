use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use super::{Domain, PerceptionError, PointCloud};
use crate::geometry::TriangleMesh;
use crate::sensor_pad::RigidState;

/// Pinhole intrinsics in pixels. Pixel `(u, v)` sits at image coordinates
/// `(u, v)`; `z` is depth along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.cx >= 0.0 && self.cy >= 0.0) {
            return Err(PerceptionError::InvalidParameter(format!(
                "camera intrinsics must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Row-major depth map in meters; 0 marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-world transform.
    pub pose: RigidState,
}

pub fn backproject_depth(img: &DepthImage, domain: Domain) -> PointCloud {
    let k = img.intrinsics;
    let points = img
        .depth
        .iter()
        .enumerate()
        .filter(|(_, &z)| z > 0.0 && z.is_finite())
        .map(|(idx, &z)| {
            let (u, v) = ((idx % img.width) as f64, (idx / img.width) as f64);
            let cam = Point3::new((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
            img.pose.transform_point(&cam)
        })
        .collect();
    PointCloud::visual(points, domain)
}

/// Image coordinates and depth of a world point, if it is in front of the camera.
pub fn project_point(
    intrinsics: &CameraIntrinsics,
    pose: &RigidState,
    world: &Point3<f64>,
) -> Option<(f64, f64, f64)> {
    let cam = pose.inverse_transform_point(world);
    if !(cam.z > 0.0) {
        return None;
    }
    Some((
        intrinsics.fx * cam.x / cam.z + intrinsics.cx,
        intrinsics.fy * cam.y / cam.z + intrinsics.cy,
        cam.z,
    ))
}

/// Synthetic depth map of a mesh by casting one ray per pixel.
pub fn render_depth(
    mesh: &TriangleMesh,
    intrinsics: &CameraIntrinsics,
    pose: &RigidState,
    width: usize,
    height: usize,
) -> DepthImage {
    let origin = Point3::from(pose.translation);
    let depth = (0..width * height)
        .into_par_iter()
        .map(|idx| {
            let (u, v) = ((idx % width) as f64, (idx / width) as f64);
            let ray_cam = Vector3::new(
                (u - intrinsics.cx) / intrinsics.fx,
                (v - intrinsics.cy) / intrinsics.fy,
                1.0,
            );
            let dir = (pose.rotation * ray_cam).normalize();
            match mesh.ray_cast(&origin, &dir) {
                Some(hit) => hit.t * dir.dot(&(pose.rotation * Vector3::z())),
                None => 0.0,
            }
        })
        .collect();
    DepthImage {
        width,
        height,
        depth,
        intrinsics: *intrinsics,
        pose: *pose,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;
    use nalgebra::UnitQuaternion;

    fn intrinsics() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 320.0,
        }
    }

    fn image(width: usize, height: usize, depth: Vec<f64>) -> DepthImage {
        DepthImage {
            width,
            height,
            depth,
            intrinsics: intrinsics(),
            pose: RigidState::identity(),
        }
    }

    #[test]
    fn backprojection_examples() {
        let mut img = image(821, 321, vec![0.0; 821 * 321]);
        assert!(backproject_depth(&img, Domain::Sim).is_empty());
        img.depth[320 * 821 + 320] = 1.0;
        img.depth[320 * 821 + 820] = 2.0;
        let c = backproject_depth(&img, Domain::Sim);
        assert_eq!(
            c.points,
            vec![Point3::new(0.0, 0.0, 1.0), Point3::new(2.0, 0.0, 2.0)]
        );
    }

    #[test]
    fn project_inverts_backproject() {
        let pose = RigidState::from_pose(
            UnitQuaternion::from_euler_angles(0.2, -0.1, 0.7),
            Vector3::new(0.3, -0.2, 1.0),
        );
        let mut img = image(16, 12, (0..192).map(|i| 0.5 + i as f64 * 1e-3).collect());
        img.intrinsics.cx = 8.0;
        img.intrinsics.cy = 6.0;
        img.pose = pose;
        let cloud = backproject_depth(&img, Domain::Sim);
        for (idx, p) in cloud.points.iter().enumerate() {
            let (u, v, z) = project_point(&img.intrinsics, &pose, p).unwrap();
            assert!((u - (idx % 16) as f64).abs() < 1e-6);
            assert!((v - (idx / 16) as f64).abs() < 1e-6);
            assert!((z - img.depth[idx]).abs() < 1e-9);
        }
    }

    #[test]
    fn rendered_plane_depth_is_constant() {
        let slab = shapes::cuboid(Point3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 1.0, 0.1));
        let mut k = intrinsics();
        k.cx = 4.0;
        k.cy = 4.0;
        let img = render_depth(&slab, &k, &RigidState::identity(), 8, 8);
        assert!(img.depth.iter().all(|&z| (z - 0.9).abs() < 1e-12));
    }
}
