use std::collections::HashMap;

use nalgebra::{Isometry3, Point3, Vector3};
use sha2::{Digest, Sha256};

use super::bvh::Bvh;
use super::GeometryError;

/// Axis-aligned bounding box, closed on both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Result<Self, GeometryError> {
        if (0..3).any(|i| !(min[i] <= max[i])) {
            return Err(GeometryError::InvalidParameter(format!(
                "aabb min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Some(Self { min, max })
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn longest_edge(&self) -> f64 {
        self.extents().max()
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn expanded(&self, margin: f64) -> Self {
        let m = Vector3::repeat(margin);
        Self {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self {
            min: self.min + offset,
            max: self.max + offset,
        }
    }

    /// Closest point of the box to `p` (identity for interior points).
    pub fn clamp(&self, p: &Point3<f64>) -> Point3<f64> {
        p.sup(&self.min).inf(&self.max)
    }

    pub(crate) fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub(crate) fn distance_squared(&self, p: &Point3<f64>) -> f64 {
        (self.clamp(p) - p).norm_squared()
    }

    /// Slab test. Returns the parametric interval `[t0, t1]` clipped to `[0, t_max]`.
    pub(crate) fn ray_interval(
        &self,
        origin: &Point3<f64>,
        inv_dir: &Vector3<f64>,
        t_max: f64,
    ) -> Option<(f64, f64)> {
        // Slack so rays grazing a box face (e.g. along a mesh edge) still enter it.
        let eps = 1e-12 * (1.0 + self.max.coords.abs().max() + self.min.coords.abs().max());
        let mut t0 = 0.0_f64;
        let mut t1 = t_max;
        for i in 0..3 {
            if inv_dir[i].is_infinite() {
                if origin[i] < self.min[i] - eps || origin[i] > self.max[i] + eps {
                    return None;
                }
                continue;
            }
            let a = (self.min[i] - eps - origin[i]) * inv_dir[i];
            let b = (self.max[i] + eps - origin[i]) * inv_dir[i];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// A ray/mesh intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    pub t: f64,
    pub triangle: usize,
}

/// Indexed triangle mesh with per-triangle unit normals from the winding order.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vector3<f64>>,
    bvh: Bvh,
}

const BARY_EPS: f64 = 1e-9;

impl TriangleMesh {
    pub fn new(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self, GeometryError> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let count = vertices.len();
        let mut normals = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= count) {
                return Err(GeometryError::IndexOutOfRange {
                    triangle: t,
                    index,
                    count,
                });
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            let n = (b - a).cross(&(c - a));
            let norm = n.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(GeometryError::DegenerateTriangle(t));
            }
            normals.push(n / norm);
        }
        let bvh = Bvh::build(&vertices, &triangles);
        Ok(Self {
            vertices,
            triangles,
            normals,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, index: usize) -> [Point3<f64>; 3] {
        self.triangles[index].map(|i| self.vertices[i as usize])
    }

    /// Tight bounds over all vertices.
    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices).expect("mesh is non-empty by construction")
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Self {
        let vertices = self.vertices.iter().map(|p| iso * p).collect();
        Self::new(vertices, self.triangles.clone()).expect("rigid motion preserves validity")
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        let vertices = self.vertices.iter().map(|p| p + offset).collect();
        Self::new(vertices, self.triangles.clone()).expect("translation preserves validity")
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, GeometryError> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(GeometryError::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let vertices = self.vertices.iter().map(|p| p * factor).collect();
        Self::new(vertices, self.triangles.clone())
    }

    /// Reverses the winding of every triangle.
    pub fn flipped(&self) -> Self {
        let triangles = self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect();
        Self::new(self.vertices.clone(), triangles).expect("flip preserves validity")
    }

    /// Signed enclosed volume; positive when triangles wind outward.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum()
    }

    /// Number of undirected edges not shared by exactly two triangles.
    pub fn boundary_edge_count(&self) -> usize {
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        edges.values().filter(|&&n| n != 2).count()
    }

    pub fn is_watertight(&self) -> bool {
        self.boundary_edge_count() == 0
    }

    pub fn ensure_watertight(&self) -> Result<(), GeometryError> {
        match self.boundary_edge_count() {
            0 => Ok(()),
            n => Err(GeometryError::NotWatertight(n)),
        }
    }

    /// Nearest intersection with `t > 0` along a unit direction.
    pub fn ray_cast(&self, origin: &Point3<f64>, direction: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<(f64, usize)> = None;
        self.bvh
            .traverse_ray(origin, direction, f64::INFINITY, |t_idx, t_limit| {
                if let Some(t) = self.intersect_triangle(t_idx, origin, direction) {
                    if t < t_limit {
                        best = Some((t, t_idx));
                        return t;
                    }
                }
                t_limit
            });
        best.map(|(t, tri)| Hit {
            point: origin + direction * t,
            normal: self.normals[tri],
            t,
            triangle: tri,
        })
    }

    /// All crossing parameters `t > 0` along the ray, sorted ascending.
    /// Hits closer than `1e-12` (a ray through a shared edge) are merged.
    pub fn ray_crossings(&self, origin: &Point3<f64>, direction: &Vector3<f64>) -> Vec<f64> {
        let mut ts = Vec::new();
        self.bvh
            .traverse_ray(origin, direction, f64::INFINITY, |t_idx, t_limit| {
                if let Some(t) = self.intersect_triangle(t_idx, origin, direction) {
                    ts.push(t);
                }
                t_limit
            });
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        ts
    }

    /// Ray-parity inside test, majority vote over three skew directions.
    pub fn contains(&self, p: &Point3<f64>) -> bool {
        const DIRS: [[f64; 3]; 3] = [
            [0.573_462_7, 0.613_915_3, 0.542_431_9],
            [-0.671_104_2, 0.218_793_5, 0.708_384_1],
            [0.133_574_4, -0.791_622_8, 0.596_248_3],
        ];
        let votes = DIRS
            .iter()
            .filter(|d| {
                let dir = Vector3::from(**d).normalize();
                self.ray_crossings(p, &dir).len() % 2 == 1
            })
            .count();
        votes >= 2
    }

    /// Closest surface point and its unsigned distance.
    pub fn closest_point(&self, p: &Point3<f64>) -> (Point3<f64>, f64) {
        let mut best = (f64::INFINITY, *p);
        self.bvh.traverse_nearest(p, |t_idx, best_d2| {
            let [a, b, c] = self.triangle(t_idx);
            let q = closest_point_on_triangle(p, &a, &b, &c);
            let d2 = (q - p).norm_squared();
            if d2 < best_d2 {
                best = (d2, q);
                d2
            } else {
                best_d2
            }
        });
        (best.1, best.0.sqrt())
    }

    pub fn unsigned_distance(&self, p: &Point3<f64>) -> f64 {
        self.closest_point(p).1
    }

    /// SHA-256 over the canonical little-endian vertex and index data.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.vertices.len() as u64).to_le_bytes());
        for v in &self.vertices {
            for c in v.iter() {
                hasher.update(c.to_le_bytes());
            }
        }
        hasher.update((self.triangles.len() as u64).to_le_bytes());
        for tri in &self.triangles {
            for i in tri {
                hasher.update(i.to_le_bytes());
            }
        }
        hasher.finalize().into()
    }

    /// Double-sided Möller–Trumbore; returns `t > 0` on hit.
    fn intersect_triangle(
        &self,
        tri: usize,
        origin: &Point3<f64>,
        dir: &Vector3<f64>,
    ) -> Option<f64> {
        let [a, b, c] = self.triangle(tri);
        let e1 = b - a;
        let e2 = c - a;
        let pvec = dir.cross(&e2);
        let det = e1.dot(&pvec);
        if det.abs() < 1e-300 {
            return None;
        }
        let inv_det = 1.0 / det;
        let tvec = origin - a;
        let u = tvec.dot(&pvec) * inv_det;
        if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
            return None;
        }
        let qvec = tvec.cross(&e1);
        let v = dir.dot(&qvec) * inv_det;
        if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
            return None;
        }
        let t = e2.dot(&qvec) * inv_det;
        (t > 1e-12).then_some(t)
    }
}

/// Tight componentwise bounds of a mesh.
pub fn mesh_bounds(mesh: &TriangleMesh) -> Result<Aabb, GeometryError> {
    Aabb::from_points(mesh.vertices()).ok_or(GeometryError::EmptyMesh)
}

/// Nearest hit along a unit direction, `None` on a miss.
pub fn ray_cast(
    mesh: &TriangleMesh,
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
) -> Result<Option<Hit>, GeometryError> {
    if (direction.norm() - 1.0).abs() > 1e-6 {
        return Err(GeometryError::InvalidParameter(format!(
            "ray direction must be unit length, got |d| = {}",
            direction.norm()
        )));
    }
    Ok(mesh.ray_cast(origin, direction))
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub(crate) fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}
