use nalgebra::Point3;

use super::{PerceptionError, PointCloud};

/// `round_half_even(j (N − 1) / (n − 1))` for `j = 0..n`, in exact integer
/// arithmetic. For `N ≤ n` the indices run `0..N` and then repeat `N − 1`.
pub fn linspace_indices(total: usize, n: usize) -> Vec<usize> {
    assert!(total >= 1 && n >= 1);
    if total <= n {
        return (0..n).map(|j| j.min(total - 1)).collect();
    }
    if n == 1 {
        return vec![0];
    }
    let den = (n - 1) as u128;
    (0..n)
        .map(|j| {
            let num = j as u128 * (total - 1) as u128;
            let (q, r) = (num / den, num % den);
            let up = match (2 * r).cmp(&den) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Equal => q % 2 == 1,
                std::cmp::Ordering::Less => false,
            };
            (q + up as u128) as usize
        })
        .collect()
}

/// Exactly `n` points chosen by evenly spaced indices, order preserved.
pub fn downsample_uniform(cloud: &PointCloud, n: usize) -> Result<PointCloud, PerceptionError> {
    if cloud.is_empty() {
        return Err(PerceptionError::EmptyCloud);
    }
    if n == 0 {
        return Err(PerceptionError::InvalidParameter(
            "sample count must be >= 1".into(),
        ));
    }
    Ok(cloud.select(&linspace_indices(cloud.len(), n)))
}

/// Greedy farthest-point sampling from index 0, `O(N n)`. Used as a speed baseline.
pub fn farthest_point_sample(cloud: &PointCloud, n: usize) -> Result<PointCloud, PerceptionError> {
    if cloud.is_empty() {
        return Err(PerceptionError::EmptyCloud);
    }
    let pts: &[Point3<f64>] = &cloud.points;
    let n = n.min(pts.len());
    let mut nearest = vec![f64::INFINITY; pts.len()];
    let mut chosen = Vec::with_capacity(n);
    let mut current = 0;
    for _ in 0..n {
        chosen.push(current);
        let c = pts[current];
        let mut far = (0, -1.0);
        for (i, p) in pts.iter().enumerate() {
            let d = (p - c).norm_squared();
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > far.1 {
                far = (i, nearest[i]);
            }
        }
        current = far.0;
    }
    Ok(cloud.select(&chosen))
}
