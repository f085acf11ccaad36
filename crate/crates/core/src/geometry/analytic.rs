use nalgebra::{Point3, Vector3};

use super::sdf::{SdfSample, SignedDistanceField};
use super::GeometryError;

/// Closed-form signed distance shapes, negative inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticPrimitive {
    Sphere {
        center: Point3<f64>,
        radius: f64,
    },
    Box {
        center: Point3<f64>,
        half_extents: Vector3<f64>,
    },
    /// Half-space below the plane; `normal` points to the outside.
    Plane {
        point: Point3<f64>,
        normal: Vector3<f64>,
    },
}

impl AnalyticPrimitive {
    pub fn sphere(center: Point3<f64>, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) {
            return Err(GeometryError::InvalidParameter(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Self::Sphere { center, radius })
    }

    pub fn cuboid(center: Point3<f64>, half_extents: Vector3<f64>) -> Result<Self, GeometryError> {
        if !half_extents.iter().all(|&h| h > 0.0) {
            return Err(GeometryError::InvalidParameter(format!(
                "box half extents must be positive, got {half_extents:?}"
            )));
        }
        Ok(Self::Box {
            center,
            half_extents,
        })
    }

    pub fn plane(point: Point3<f64>, normal: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = normal
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidParameter("plane normal is zero".into()))?;
        Ok(Self::Plane { point, normal: n })
    }
}

/// Exact distance and gradient of the primitive at `p`.
pub fn analytic_sdf(prim: &AnalyticPrimitive, p: &Point3<f64>) -> SdfSample {
    match *prim {
        AnalyticPrimitive::Sphere { center, radius } => {
            let r = p - center;
            let len = r.norm();
            let normal = r.try_normalize(0.0).unwrap_or_else(Vector3::z);
            SdfSample {
                distance: len - radius,
                normal,
            }
        }
        AnalyticPrimitive::Box {
            center,
            half_extents,
        } => {
            let rel = p - center;
            let q = rel.abs() - half_extents;
            let sign = rel.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
            let outside = q.sup(&Vector3::zeros());
            let outside_len = outside.norm();
            if outside_len > 0.0 {
                SdfSample {
                    distance: outside_len,
                    normal: (outside / outside_len).component_mul(&sign),
                }
            } else {
                let axis = q.imax();
                let mut normal = Vector3::zeros();
                normal[axis] = sign[axis];
                SdfSample {
                    distance: q.max(),
                    normal,
                }
            }
        }
        AnalyticPrimitive::Plane { point, normal } => SdfSample {
            distance: (p - point).dot(&normal),
            normal,
        },
    }
}

impl SignedDistanceField for AnalyticPrimitive {
    fn distance(&self, p: &Point3<f64>) -> f64 {
        analytic_sdf(self, p).distance
    }

    fn sample(&self, p: &Point3<f64>) -> SdfSample {
        analytic_sdf(self, p)
    }
}
