use std::time::Instant;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxelsim::sensor_pad::RigidState;
use taxelsim::sim::{
    load_scene, randomize_initials, run_batch, run_episode, BatchOptions, Scene, SceneConfig,
    SceneOptions, Trajectory, CACHE_DIR_ENV,
};

const CAMERA: &str = "
[camera]
fx = 60.0
fy = 60.0
cx = 16.0
cy = 12.0
width = 32
height = 24
position = [0.0, 0.0, 0.2]
orientation = [0.0, 1.0, 0.0, 0.0]
crop_min = [-0.1, -0.1, -0.1]
crop_max = [0.1, 0.1, 0.1]
visual_points = 64

[noise]
sigma = 3.0
seed = 17
";

fn scene_in(cache: &std::path::Path, pads: usize, extra: &str) -> Scene {
    let doc = format!(
        "[pads]\ncount = {pads}\n[object]\nsphere_radius = 0.015\nsphere_subdivisions = 3\ncell_size = 0.001\n{extra}"
    );
    let cfg: SceneConfig = toml::from_str(&doc).unwrap();
    load_scene(
        &cfg,
        &SceneOptions {
            base_dir: None,
            cache_dir: Some(cache.to_owned()),
        },
    )
    .unwrap()
}

/// Pads facing the object center from ±x and ±y, squeezing inward over time.
fn grasp(steps: usize, pads: usize, object_offset: Vector3<f64>) -> Trajectory {
    let normals = [Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y()];
    let dt = 0.01;
    let pad_tracks = normals[..pads]
        .iter()
        .map(|n| {
            let rot = UnitQuaternion::rotation_between(&Vector3::z(), n).unwrap();
            (0..steps)
                .map(|k| {
                    let gap = 0.0155 - 0.0002 * k as f64;
                    RigidState::from_pose(rot, -n * gap)
                        .with_twist(Vector3::zeros(), n * (0.0002 / dt))
                })
                .collect()
        })
        .collect();
    let object = vec![RigidState::from_translation(object_offset); steps];
    Trajectory::new(dt, object, pad_tracks).unwrap()
}

#[test]
fn batch_outputs_do_not_depend_on_worker_count() {
    let cache = tempfile::tempdir().unwrap();
    let scene = scene_in(cache.path(), 4, CAMERA);
    let trajs = randomize_initials(&grasp(6, 4, Vector3::zeros()), 0.004, 12, 5, false);
    let reference = run_batch(&scene, &trajs, &BatchOptions::default()).unwrap();
    assert!(reference.episodes.iter().all(|e| e.is_ok()));
    let touched = reference.episodes[0]
        .as_ref()
        .unwrap()
        .stats
        .last()
        .unwrap()
        .contact_taxels;
    assert!(touched > 0);
    for workers in [2, 3, 8] {
        let out = run_batch(
            &scene,
            &trajs,
            &BatchOptions {
                workers,
                keep_frames: true,
            },
        )
        .unwrap();
        for (a, b) in reference.episodes.iter().zip(&out.episodes) {
            assert_eq!(
                a.as_ref().unwrap(),
                b.as_ref().unwrap(),
                "workers = {workers}"
            );
        }
    }
    let noisy_0 = &reference.episodes[0].as_ref().unwrap().clouds[0];
    let noisy_1 = &reference.episodes[1].as_ref().unwrap().clouds[0];
    assert_ne!(
        noisy_0.rows[..64],
        noisy_1.rows[..64],
        "episodes draw distinct noise"
    );
}

#[test]
fn every_stream_has_trajectory_length() {
    let cache = tempfile::tempdir().unwrap();
    let scene = scene_in(cache.path(), 2, CAMERA);
    for steps in [1, 2, 7] {
        let out = run_episode(&scene, &grasp(steps, 2, Vector3::zeros())).unwrap();
        assert_eq!(out.len(), steps);
        assert_eq!(out.frames.len(), steps);
        assert_eq!(out.clouds.len(), steps);
        for (k, frames) in out.frames.iter().enumerate() {
            assert_eq!(frames.len(), 2);
            assert!(frames
                .iter()
                .all(|f| f.step == k && f.len() == 384 && f.normalized));
        }
        for cloud in &out.clouds {
            assert_eq!(cloud.n_tactile, 2 * 384);
            assert!(cloud.rows.iter().all(|r| r[3] >= 0.0 && r[3] <= 1.0));
        }
    }
}

#[test]
fn cached_sdf_reproduces_fresh_frames() {
    let cache = tempfile::tempdir().unwrap();
    let fresh = scene_in(cache.path(), 4, "");
    assert!(!fresh.sdf_cache_hit);
    let cached = scene_in(cache.path(), 4, "");
    assert!(cached.sdf_cache_hit);
    assert_eq!(fresh.object_sdf, cached.object_sdf);
    let traj = grasp(5, 4, Vector3::new(0.001, -0.0005, 0.0));
    assert_eq!(
        run_episode(&fresh, &traj).unwrap(),
        run_episode(&cached, &traj).unwrap()
    );
}

#[test]
fn cache_location_follows_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::env::set_var(CACHE_DIR_ENV, dir.path());
    let cfg: SceneConfig = toml::from_str(
        "[object]\nsphere_radius = 0.011\nsphere_subdivisions = 2\ncell_size = 0.002\n",
    )
    .unwrap();
    let scene = load_scene(&cfg, &SceneOptions::default()).unwrap();
    std::env::remove_var(CACHE_DIR_ENV);
    assert!(!scene.sdf_cache_hit);
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
}

/// Kolmogorov–Smirnov distance of `samples` against U(0, 1).
fn ks_uniform(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn randomized_offsets_are_uniform_in_range() {
    let base = grasp(2, 1, Vector3::zeros());
    let range = 0.03;
    let out = randomize_initials(&base, range, 10_000, 12345, false);
    let (xs, ys): (Vec<f64>, Vec<f64>) = out
        .iter()
        .map(|t| {
            let o = t.object[0].translation;
            assert_eq!(t.object[1].translation, o);
            assert_eq!(o.z, 0.0);
            (o.x / range + 0.5, o.y / range + 0.5)
        })
        .unzip();
    let critical = 1.63 / (out.len() as f64).sqrt(); // alpha = 0.01
    assert!(ks_uniform(xs) < critical);
    assert!(ks_uniform(ys) < critical);
    assert_eq!(out[0].pads, base.pads);
}

#[test]
fn weak_scaling_on_multicore_hosts() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let workers = cores.min(4);
    if workers < 2 {
        eprintln!("weak scaling skipped: {cores} core(s) available");
        return;
    }
    let cache = tempfile::tempdir().unwrap();
    let scene = scene_in(cache.path(), 4, "");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let make = |n: usize, rng: &mut ChaCha8Rng| -> Vec<Trajectory> {
        (0..n)
            .map(|_| {
                grasp(
                    40,
                    4,
                    Vector3::new(rng.random_range(-0.002..0.002), 0.0, 0.0),
                )
            })
            .collect()
    };
    let single = make(8, &mut rng);
    let many = make(8 * workers, &mut rng);
    let opts = |w| BatchOptions {
        workers: w,
        keep_frames: false,
    };
    run_batch(&scene, &single, &opts(1)).unwrap();
    let t = Instant::now();
    run_batch(&scene, &single, &opts(1)).unwrap();
    let base = t.elapsed().as_secs_f64();
    let t = Instant::now();
    run_batch(&scene, &many, &opts(workers)).unwrap();
    let scaled = t.elapsed().as_secs_f64();
    assert!(
        scaled <= 2.5 * base,
        "{workers} workers: {scaled:.3}s vs {base:.3}s"
    );
}
