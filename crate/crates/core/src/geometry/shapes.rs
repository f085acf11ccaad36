//! Procedural watertight meshes for pads and test objects.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::mesh::TriangleMesh;

/// Axis-aligned box with outward winding (8 vertices, 12 triangles).
pub fn cuboid(center: Point3<f64>, half_extents: Vector3<f64>) -> TriangleMesh {
    let vertices: Vec<Point3<f64>> = (0..8)
        .map(|i| {
            let s = Vector3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            center + half_extents.component_mul(&s)
        })
        .collect();
    let triangles = vec![
        [0, 2, 1],
        [1, 2, 3], // -z
        [4, 5, 6],
        [5, 7, 6], // +z
        [0, 1, 4],
        [1, 5, 4], // -y
        [2, 6, 3],
        [3, 6, 7], // +y
        [0, 4, 2],
        [2, 4, 6], // -x
        [1, 3, 5],
        [3, 7, 5], // +x
    ];
    orient_outward(TriangleMesh::new(vertices, triangles).expect("valid cuboid"))
}

/// Subdivided icosahedron with all vertices on the sphere.
pub fn icosphere(center: Point3<f64>, radius: f64, subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vector3<f64>>| -> u32 {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) / 2.0).normalize());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts.iter().map(|v| center + v * radius).collect();
    orient_outward(TriangleMesh::new(vertices, faces).expect("valid icosphere"))
}

/// Curved pad: a cylindrical shell section whose outer (top, +z) surface is an
/// arc of the given radius spanning `width` along x, extruded over `length`
/// along y, with the given radial thickness.
pub fn cylinder_shell_section(
    radius: f64,
    thickness: f64,
    width: f64,
    length: f64,
    segments: usize,
) -> TriangleMesh {
    assert!(segments >= 2 && thickness > 0.0 && thickness < radius && width < 2.0 * radius);
    let half_angle = (width / 2.0 / radius).asin();
    let arc = |r: f64, k: usize| -> (f64, f64) {
        let a = -half_angle + 2.0 * half_angle * k as f64 / segments as f64;
        // Center of curvature below the pad so the crown sits at z = 0.
        (r * a.sin(), r * a.cos() - radius)
    };
    let n = segments + 1;
    let mut vertices = Vec::with_capacity(4 * n);
    // Layout: [outer y-, outer y+, inner y-, inner y+], each n long.
    for (r, y) in [
        (radius, -length / 2.0),
        (radius, length / 2.0),
        (radius - thickness, -length / 2.0),
        (radius - thickness, length / 2.0),
    ] {
        for k in 0..n {
            let (x, z) = arc(r, k);
            vertices.push(Point3::new(x, y, z));
        }
    }
    let idx = |ring: usize, k: usize| (ring * n + k) as u32;
    let mut triangles = Vec::new();
    let mut quad = |a: u32, b: u32, c: u32, d: u32| {
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    };
    for k in 0..segments {
        quad(idx(0, k), idx(0, k + 1), idx(1, k + 1), idx(1, k)); // outer
        quad(idx(2, k), idx(3, k), idx(3, k + 1), idx(2, k + 1)); // inner
        quad(idx(0, k), idx(2, k), idx(2, k + 1), idx(0, k + 1)); // cap y-
        quad(idx(1, k), idx(1, k + 1), idx(3, k + 1), idx(3, k)); // cap y+
    }
    quad(idx(0, 0), idx(1, 0), idx(3, 0), idx(2, 0)); // side at -x
    let e = segments;
    quad(idx(0, e), idx(2, e), idx(3, e), idx(1, e)); // side at +x
    orient_outward(TriangleMesh::new(vertices, triangles).expect("valid shell"))
}

/// Flips the winding if the enclosed volume comes out negative.
pub fn orient_outward(mesh: TriangleMesh) -> TriangleMesh {
    if mesh.signed_volume() < 0.0 {
        mesh.flipped()
    } else {
        mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_meshes_are_closed_and_outward() {
        let meshes = [
            cuboid(Point3::new(1.0, 2.0, 3.0), Vector3::new(0.1, 0.2, 0.3)),
            icosphere(Point3::origin(), 0.1, 3),
            cylinder_shell_section(0.05, 0.002, 0.024, 0.064, 24),
        ];
        for m in &meshes {
            assert!(m.is_watertight());
            assert!(m.signed_volume() > 0.0);
        }
        let expected_box = 0.2 * 0.4 * 0.6;
        assert!((meshes[0].signed_volume() - expected_box).abs() < 1e-12);
    }

    #[test]
    fn icosphere_vertices_lie_on_sphere() {
        let s = icosphere(Point3::new(0.0, 0.0, 1.0), 0.25, 2);
        assert_eq!(s.triangle_count(), 20 * 16);
        for v in s.vertices() {
            assert!(((v - Point3::new(0.0, 0.0, 1.0)).norm() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn cuboid_normals_point_away_from_center() {
        let c = cuboid(Point3::origin(), Vector3::repeat(1.0));
        for t in 0..c.triangle_count() {
            let [a, b, d] = c.triangle(t);
            let centroid = (a.coords + b.coords + d.coords) / 3.0;
            assert!(c.normals()[t].dot(&centroid) > 0.0);
        }
    }
}
