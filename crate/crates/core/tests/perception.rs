use nalgebra::{Point3, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxelsim::geometry::Aabb;
use taxelsim::perception::{
    backproject_depth, crop_workspace, downsample_uniform, inject_noise, linspace_indices,
    merge_visuo_tactile, project_point, CameraIntrinsics, DepthImage, Domain, NoiseConfig,
    PointCloud,
};
use taxelsim::sensor_pad::RigidState;

/// `round_half_even(j (N-1) / (n-1))` in exact integer arithmetic.
fn oracle_index(j: usize, total: usize, n: usize) -> usize {
    let (num, den) = (j * (total - 1), n - 1);
    let (q, r) = (num / den, num % den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q % 2),
    }
}

fn cloud_strategy(max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0),
        1..max,
    )
    .prop_map(|rows| PointCloud {
        points: rows.iter().map(|r| Point3::new(r.0, r.1, r.2)).collect(),
        readings: rows.iter().map(|r| r.3).collect(),
        domain: Domain::Sim,
    })
}

fn uniform_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::visual(
        (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect(),
        Domain::Sim,
    )
}

proptest! {
    #[test]
    fn crop_is_idempotent(
        cloud in cloud_strategy(300),
        lo in (-1.0f64..0.0, -1.0f64..0.0, -1.0f64..0.0),
        size in (0.0f64..1.5, 0.0f64..1.5, 0.0f64..1.5),
    ) {
        let min = Point3::new(lo.0, lo.1, lo.2);
        let b = Aabb::new(min, min + Vector3::new(size.0, size.1, size.2)).unwrap();
        let once = crop_workspace(&cloud, &b);
        prop_assert_eq!(&crop_workspace(&once, &b), &once);
        prop_assert!(once.points.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn downsample_size_and_order(cloud in cloud_strategy(400), n in 1usize..600) {
        let out = downsample_uniform(&cloud, n).unwrap();
        prop_assert_eq!(out.len(), n);
        prop_assert_eq!(&downsample_uniform(&cloud, n).unwrap(), &out);
        let idx = linspace_indices(cloud.len(), n);
        prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(out, cloud.select(&idx));
    }

    #[test]
    fn linspace_matches_integer_oracle(total in 2usize..100_000, n in 2usize..2048) {
        prop_assume!(n < total);
        let expected: Vec<usize> = (0..n).map(|j| oracle_index(j, total, n)).collect();
        prop_assert_eq!(linspace_indices(total, n), expected);
    }

    #[test]
    fn merging_never_moves_points(visual in cloud_strategy(50), tactile in cloud_strategy(50)) {
        let merged = merge_visuo_tactile(&visual, &tactile);
        prop_assert_eq!(merged.len(), visual.len() + tactile.len());
        for (i, v) in visual.points.iter().enumerate() {
            for (j, t) in tactile.points.iter().enumerate() {
                let a = merged.rows[i];
                let b = merged.rows[visual.len() + j];
                let after = Vector3::new(a[0] - b[0], a[1] - b[1], a[2] - b[2]).norm();
                prop_assert_eq!(after, (v - t).norm());
            }
        }
        let flags: f64 = merged.rows.iter().map(|r| r[4]).sum();
        prop_assert_eq!(flags, tactile.len() as f64);
    }

    #[test]
    fn backproject_then_project_recovers_pixels(
        f in (100.0f64..900.0, 100.0f64..900.0),
        c in (10.0f64..400.0, 10.0f64..400.0),
        euler in (-3.0f64..3.0, -1.5f64..1.5, -3.0f64..3.0),
        t in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        pixel in (0usize..32, 0usize..24),
        z in 0.05f64..5.0,
    ) {
        let k = CameraIntrinsics { fx: f.0, fy: f.1, cx: c.0, cy: c.1 };
        let pose = RigidState::from_pose(
            UnitQuaternion::from_euler_angles(euler.0, euler.1, euler.2),
            Vector3::new(t.0, t.1, t.2),
        );
        let (w, h) = (32, 24);
        let mut depth = vec![0.0; w * h];
        depth[pixel.1 * w + pixel.0] = z;
        let img = DepthImage { width: w, height: h, depth, intrinsics: k, pose };
        let cloud = backproject_depth(&img, Domain::Real);
        prop_assert_eq!(cloud.len(), 1);
        let (u, v, depth) = project_point(&k, &pose, &cloud.points[0]).unwrap();
        prop_assert!((u - pixel.0 as f64).abs() < 1e-6);
        prop_assert!((v - pixel.1 as f64).abs() < 1e-6);
        prop_assert!((depth - z).abs() < 1e-9);
    }
}

#[test]
fn noise_is_unbiased_with_the_configured_spread() {
    let n = 100_000 / 3 + 1;
    let cloud = PointCloud::visual(vec![Point3::new(0.3, -0.7, 1.1); n], Domain::Sim);
    let noisy = inject_noise(
        &cloud,
        &NoiseConfig {
            sigma: 3.0,
            seed: 99,
        },
    );
    assert_eq!(
        noisy,
        inject_noise(
            &cloud,
            &NoiseConfig {
                sigma: 3.0,
                seed: 99
            }
        )
    );
    let base: [f64; 3] = [0.3, -0.7, 1.1];
    let mut factors = Vec::new();
    for axis in 0..3 {
        let values: Vec<f64> = noisy.points.iter().map(|p| p[axis]).collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = 0.03 * base[axis].abs() / (n as f64).sqrt();
        assert!(
            (mean - base[axis]).abs() <= 3.0 * std_err,
            "axis {axis}: {mean}"
        );
        factors.extend(values.iter().map(|v| v / base[axis] - 1.0));
    }
    let m = factors.iter().sum::<f64>() / factors.len() as f64;
    let std =
        (factors.iter().map(|g| (g - m).powi(2)).sum::<f64>() / (factors.len() - 1) as f64).sqrt();
    assert!((std - 0.03).abs() <= 0.001, "std {std}");
    assert_eq!(noisy.readings, cloud.readings);
}

#[test]
fn half_cube_crop_keeps_about_half() {
    let n = 20_000;
    let cloud = uniform_cloud(n, 3);
    let half = Aabb::new(Point3::origin(), Point3::new(0.5, 1.0, 1.0)).unwrap();
    let kept = crop_workspace(&cloud, &half).len() as f64;
    let sd = (n as f64 * 0.25).sqrt();
    assert!((kept - n as f64 / 2.0).abs() <= 4.0 * sd, "{kept}");
}
