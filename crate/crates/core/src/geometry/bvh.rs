//! Bounding volume hierarchy over mesh triangles.

use nalgebra::{Point3, Vector3};

use super::mesh::Aabb;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`. Interior nodes keep their left child
    /// immediately after themselves and store the right child in `right`.
    start: u32,
    /// Leaf: triangle count (> 0). Interior: 0.
    count: u32,
    right: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl Bvh {
    pub(crate) fn build(vertices: &[Point3<f64>], triangles: &[[u32; 3]]) -> Self {
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|tri| {
                let pts = tri.map(|i| vertices[i as usize]);
                Aabb::from_points(&pts).expect("three points")
            })
            .collect();
        let centroids: Vec<Point3<f64>> = boxes.iter().map(Aabb::center).collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        build_node(&mut nodes, &mut order, 0, &boxes, &centroids);
        Self { nodes, order }
    }

    /// Visits candidate triangles whose boxes the ray enters before the current
    /// limit. `visit(tri, limit)` returns the (possibly shrunk) new limit.
    pub(crate) fn traverse_ray(
        &self,
        origin: &Point3<f64>,
        dir: &Vector3<f64>,
        t_max: f64,
        mut visit: impl FnMut(usize, f64) -> f64,
    ) {
        let inv_dir = dir.map(|d| 1.0 / d);
        let mut limit = t_max;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if node.bounds.ray_interval(origin, &inv_dir, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.start as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    limit = visit(tri as usize, limit);
                }
            } else {
                stack.push(node.right as usize);
                stack.push(idx + 1);
            }
        }
    }

    /// Branch-and-bound nearest search. `visit(tri, best_d2)` returns the new best.
    pub(crate) fn traverse_nearest(
        &self,
        p: &Point3<f64>,
        mut visit: impl FnMut(usize, f64) -> f64,
    ) {
        let mut best = f64::INFINITY;
        let mut stack = Vec::with_capacity(64);
        stack.push((0usize, self.nodes[0].bounds.distance_squared(p)));
        while let Some((idx, d2)) = stack.pop() {
            if d2 >= best {
                continue;
            }
            let node = &self.nodes[idx];
            if node.count > 0 {
                let start = node.start as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    best = visit(tri as usize, best);
                }
            } else {
                let left = idx + 1;
                let right = node.right as usize;
                let dl = self.nodes[left].bounds.distance_squared(p);
                let dr = self.nodes[right].bounds.distance_squared(p);
                // Push the farther child first so the nearer one is explored first.
                if dl <= dr {
                    stack.push((right, dr));
                    stack.push((left, dl));
                } else {
                    stack.push((left, dl));
                    stack.push((right, dr));
                }
            }
        }
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    offset: usize,
    boxes: &[Aabb],
    centroids: &[Point3<f64>],
) -> usize {
    let bounds = order
        .iter()
        .map(|&t| boxes[t as usize])
        .reduce(|a, b| a.union(&b))
        .expect("non-empty node");
    let idx = nodes.len();
    nodes.push(Node {
        bounds,
        start: offset as u32,
        count: order.len() as u32,
        right: 0,
    });
    if order.len() <= LEAF_SIZE {
        return idx;
    }
    let cb = Aabb::from_points(order.iter().map(|&t| &centroids[t as usize])).expect("non-empty");
    let axis = cb.extents().imax();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
    });
    let (left, right) = order.split_at_mut(mid);
    build_node(nodes, left, offset, boxes, centroids);
    let right_idx = build_node(nodes, right, offset + mid, boxes, centroids);
    nodes[idx].count = 0;
    nodes[idx].right = right_idx as u32;
    idx
}
