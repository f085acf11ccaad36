//! Point-cloud observations. Depth images become cropped, downsampled clouds
//! that are merged with taxel readings into one visuo-tactile cloud.

mod camera;
mod io;
mod noise;
mod sampling;

pub use camera::{backproject_depth, project_point, render_depth, CameraIntrinsics, DepthImage};
pub use io::{read_tpcd, write_csv, write_tpcd, PointTable};
pub use noise::{inject_noise, NoiseConfig};
pub use sampling::{downsample_uniform, farthest_point_sample, linspace_indices};

use nalgebra::Point3;

use crate::contact::TactileFrame;
use crate::geometry::Aabb;
use crate::sensor_pad::TaxelWorldBatch;

#[derive(Debug, thiserror::Error)]
pub enum PerceptionError {
    #[error("cannot downsample an empty cloud")]
    EmptyCloud,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed point cloud file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a cloud came from. Noise injection only applies to simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Real,
    #[default]
    Sim,
}

/// World-frame points with one reading channel (zero for visual points).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub readings: Vec<f64>,
    pub domain: Domain,
}

impl PointCloud {
    /// Visual cloud: every reading is zero.
    pub fn visual(points: Vec<Point3<f64>>, domain: Domain) -> Self {
        let readings = vec![0.0; points.len()];
        Self {
            points,
            readings,
            domain,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            readings: indices.iter().map(|&i| self.readings[i]).collect(),
            domain: self.domain,
        }
    }

    pub fn to_rows(&self) -> Vec<[f64; 4]> {
        self.points
            .iter()
            .zip(&self.readings)
            .map(|(p, &r)| [p.x, p.y, p.z, r])
            .collect()
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
        self.readings.extend_from_slice(&other.readings);
    }
}

/// Keeps points inside the closed box, preserving order.
pub fn crop_workspace(cloud: &PointCloud, bounds: &Aabb) -> PointCloud {
    let keep: Vec<usize> = (0..cloud.len())
        .filter(|&i| bounds.contains(&cloud.points[i]))
        .collect();
    cloud.select(&keep)
}

/// One point per taxel carrying its normalized force reading, lattice order.
pub fn tactile_to_points(
    taxels: &TaxelWorldBatch,
    frame: &TactileFrame,
) -> Result<PointCloud, PerceptionError> {
    if taxels.len() != frame.len() || frame.force.len() != frame.len() {
        return Err(PerceptionError::ShapeMismatch(format!(
            "{} taxels but a {}x{} frame",
            taxels.len(),
            frame.rows,
            frame.cols
        )));
    }
    Ok(PointCloud {
        points: taxels.positions.clone(),
        readings: frame.force.clone(),
        domain: Domain::Sim,
    })
}

/// `(N_vis + N_tac) × 5` observation: x, y, z, reading, modality flag
/// (0 visual, 1 tactile). Visual rows come first.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedCloud {
    pub rows: Vec<[f64; 5]>,
    pub n_visual: usize,
    pub n_tactile: usize,
}

impl MergedCloud {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row-major f32 tensor of shape `(len, 5)`.
    pub fn to_tensor(&self) -> Vec<f32> {
        self.rows.iter().flatten().map(|&v| v as f32).collect()
    }
}

pub fn merge_visuo_tactile(visual: &PointCloud, tactile: &PointCloud) -> MergedCloud {
    let mut rows = Vec::with_capacity(visual.len() + tactile.len());
    rows.extend(visual.points.iter().map(|p| [p.x, p.y, p.z, 0.0, 0.0]));
    rows.extend(
        tactile
            .points
            .iter()
            .zip(&tactile.readings)
            .map(|(p, &r)| [p.x, p.y, p.z, r, 1.0]),
    );
    MergedCloud {
        rows,
        n_visual: visual.len(),
        n_tactile: tactile.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn line(n: usize) -> PointCloud {
        PointCloud::visual(
            (0..n).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect(),
            Domain::Sim,
        )
    }

    #[test]
    fn crop_is_closed_and_order_preserving() {
        let cloud = line(5);
        let b = Aabb::new(Point3::new(1.0, -1.0, -1.0), Point3::new(3.0, 1.0, 1.0)).unwrap();
        let c = crop_workspace(&cloud, &b);
        assert_eq!(c.points, cloud.points[1..4].to_vec());
        assert_eq!(crop_workspace(&c, &b), c);
        let all = b.expanded(10.0);
        assert_eq!(crop_workspace(&cloud, &all), cloud);
    }

    #[test]
    fn tactile_points_follow_lattice_order() {
        let batch = TaxelWorldBatch {
            rows: 2,
            cols: 3,
            positions: (0..6).map(|i| Point3::new(i as f64, 1.0, 0.0)).collect(),
            velocities: vec![Vector3::zeros(); 6],
        };
        let mut frame = TactileFrame::zeros(2, 3);
        let zero = tactile_to_points(&batch, &frame).unwrap();
        assert_eq!(zero.points, batch.positions);
        assert!(zero.readings.iter().all(|&r| r == 0.0));
        let hot_index = frame.index(1, 2);
        frame.force[hot_index] = 0.4;
        let cloud = tactile_to_points(&batch, &frame).unwrap();
        let hot: Vec<usize> = (0..6).filter(|&i| cloud.readings[i] != 0.0).collect();
        assert_eq!(hot, vec![5]);
        assert!(tactile_to_points(&batch, &TactileFrame::zeros(1, 3)).is_err());
    }

    #[test]
    fn merge_flags_and_orders_rows() {
        let visual = line(3);
        let tactile = PointCloud {
            points: vec![Point3::new(9.0, 9.0, 9.0); 2],
            readings: vec![0.5, 0.0],
            domain: Domain::Sim,
        };
        let m = merge_visuo_tactile(&visual, &tactile);
        assert_eq!(m.len(), 5);
        assert_eq!(m.rows[0], [0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.rows[3], [9.0, 9.0, 9.0, 0.5, 1.0]);
        assert_eq!(m.rows.iter().map(|r| r[4]).sum::<f64>(), 2.0);
        let empty = merge_visuo_tactile(&visual, &PointCloud::default());
        assert!(empty.rows.iter().all(|r| r[4] == 0.0));
        assert_eq!(m.to_tensor().len(), 25);
    }
}
