use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::scene::Scene;
use super::trajectory::Trajectory;
use super::SimError;
use crate::contact::{normalize_frame, step_tactile, TactileFrame};
use crate::perception::{
    backproject_depth, crop_workspace, downsample_uniform, inject_noise, merge_visuo_tactile,
    render_depth, tactile_to_points, MergedCloud, NoiseConfig, PointCloud,
};
use crate::sensor_pad::{taxel_world_state_into, RigidState, TaxelWorldBatch};
use crate::signal::normalize_counts;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub contact_taxels: usize,
    /// Largest raw force over all pads, N.
    pub max_force: f64,
    /// Sum of raw forces over all pads, N.
    pub total_force: f64,
    pub saturated_taxels: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutput {
    /// Normalized frames indexed `[step][pad]`; empty when frames are not kept.
    pub frames: Vec<Vec<TactileFrame>>,
    /// One merged cloud per step when the scene has a camera.
    pub clouds: Vec<MergedCloud>,
    pub stats: Vec<StepStats>,
    /// SHA-256 over all step outputs, in step order.
    pub digest: [u8; 32],
}

impl EpisodeOutput {
    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn digest_hex(&self) -> String {
        self.digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn run_episode(scene: &Scene, traj: &Trajectory) -> Result<EpisodeOutput, SimError> {
    run_episode_indexed(scene, traj, 0, true)
}

/// Replays one trajectory. `episode` keys the noise stream; with
/// `keep_frames = false` the frames are dropped after hashing.
pub fn run_episode_indexed(
    scene: &Scene,
    traj: &Trajectory,
    episode: u64,
    keep_frames: bool,
) -> Result<EpisodeOutput, SimError> {
    traj.validate()?;
    if traj.pads.len() != scene.pads.len() {
        return Err(SimError::Mismatch(format!(
            "trajectory has {} pad tracks, scene has {} pads",
            traj.pads.len(),
            scene.pads.len()
        )));
    }
    let mut hasher = Sha256::new();
    let mut out = EpisodeOutput {
        frames: Vec::new(),
        clouds: Vec::new(),
        stats: Vec::with_capacity(traj.len()),
        digest: [0; 32],
    };
    let mut batches: Vec<TaxelWorldBatch> = scene
        .pads
        .iter()
        .map(|p| TaxelWorldBatch {
            rows: p.taxels.rows(),
            cols: p.taxels.cols(),
            positions: Vec::with_capacity(p.taxels.len()),
            velocities: Vec::with_capacity(p.taxels.len()),
        })
        .collect();

    for step in 0..traj.len() {
        let object_state = &traj.object[step];
        let mut stats = StepStats {
            contact_taxels: 0,
            max_force: 0.0,
            total_force: 0.0,
            saturated_taxels: 0,
        };
        let mut frames = Vec::with_capacity(scene.pads.len());
        for (pad_index, pad) in scene.pads.iter().enumerate() {
            let batch = &mut batches[pad_index];
            taxel_world_state_into(&pad.taxels, &traj.pads[pad_index][step], batch);
            let raw = step_tactile(
                batch,
                scene.object_sdf.as_ref(),
                object_state,
                &scene.contact,
            );
            stats.contact_taxels += raw.contact_count();
            stats.max_force = stats.max_force.max(raw.max_force());
            stats.total_force += raw.force_sum();
            stats.saturated_taxels += raw.saturated_count();
            let mut frame = normalize_frame(&raw, &scene.frame_scale);
            frame.step = step;
            hash_frame(&mut hasher, &frame);
            frames.push(frame);
        }
        if stats.saturated_taxels > 0 {
            log::debug!(
                "step {step}: {} taxels outside the sdf grid",
                stats.saturated_taxels
            );
        }
        hasher.update(stats.max_force.to_le_bytes());
        hasher.update(stats.total_force.to_le_bytes());

        if scene.camera.is_some() {
            let cloud = observe(scene, traj, step, episode, &batches, &frames)?;
            for row in &cloud.rows {
                for v in row {
                    hasher.update(v.to_le_bytes());
                }
            }
            out.clouds.push(cloud);
        }
        out.stats.push(stats);
        if keep_frames {
            out.frames.push(frames);
        }
    }
    out.digest = hasher.finalize().into();
    Ok(out)
}

fn hash_frame(hasher: &mut Sha256, frame: &TactileFrame) {
    let mut bytes = Vec::with_capacity(frame.len() * 17);
    for v in frame.depth.iter().chain(&frame.force) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend(frame.saturated.iter().map(|&s| s as u8));
    hasher.update(&bytes);
}

/// SplitMix64 finalizer over `(seed, episode, step)`.
fn derive_seed(seed: u64, episode: u64, step: u64) -> u64 {
    let mut z = seed
        ^ episode.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ step.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Visual cloud from the recorded or rendered depth image, plus one tactile
/// point per taxel carrying its two-stage normalized reading.
fn observe(
    scene: &Scene,
    traj: &Trajectory,
    step: usize,
    episode: u64,
    batches: &[TaxelWorldBatch],
    frames: &[TactileFrame],
) -> Result<MergedCloud, SimError> {
    let cam = scene.camera.as_ref().expect("camera present");
    let image = match &traj.depth_images {
        Some(images) => images[step].clone(),
        None => {
            // Rendering in the object frame avoids re-transforming the mesh.
            let obj = &traj.object[step];
            let relative = RigidState::from_pose(
                obj.rotation.inverse() * cam.pose.rotation,
                obj.rotation
                    .inverse_transform_vector(&(cam.pose.translation - obj.translation)),
            );
            let mut img = render_depth(
                &scene.object_mesh,
                &cam.intrinsics,
                &relative,
                cam.width,
                cam.height,
            );
            img.pose = cam.pose;
            img
        }
    };
    let mut visual = backproject_depth(&image, scene.domain);
    if let Some(crop) = &cam.crop {
        visual = crop_workspace(&visual, crop);
    }
    if !visual.is_empty() {
        visual = downsample_uniform(&visual, cam.visual_points)?;
    }
    if let Some(noise) = &scene.noise {
        let cfg = NoiseConfig {
            sigma: noise.sigma,
            seed: derive_seed(noise.seed, episode, step as u64),
        };
        visual = inject_noise(&visual, &cfg);
    }

    let mut tactile = PointCloud {
        domain: scene.domain,
        ..PointCloud::default()
    };
    for (batch, frame) in batches.iter().zip(frames) {
        let mut pad = tactile_to_points(batch, frame)?;
        let counts: Vec<f64> = pad
            .readings
            .iter()
            .map(|r| r * scene.normalization.s_max_fixed)
            .collect();
        pad.readings = normalize_counts(&counts, &scene.normalization);
        tactile.extend(&pad);
    }
    Ok(merge_visuo_tactile(&visual, &tactile))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub workers: usize,
    pub keep_frames: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            keep_frames: true,
        }
    }
}

#[derive(Debug)]
pub struct BatchOutput {
    /// One result per input trajectory, in input order.
    pub episodes: Vec<Result<EpisodeOutput, SimError>>,
    pub taxel_steps: u64,
    pub elapsed: Duration,
}

impl BatchOutput {
    pub fn taxel_steps_per_second(&self) -> f64 {
        self.taxel_steps as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Replays every trajectory on its own worker-local buffers. Output order and
/// content do not depend on `workers`.
pub fn run_batch(
    scene: &Scene,
    trajectories: &[Trajectory],
    opts: &BatchOptions,
) -> Result<BatchOutput, SimError> {
    if opts.workers == 0 {
        return Err(SimError::InvalidField {
            field: "workers".into(),
            message: "must be at least 1".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| SimError::Io(std::io::Error::other(e)))?;
    let start = Instant::now();
    let episodes: Vec<Result<EpisodeOutput, SimError>> = pool.install(|| {
        trajectories
            .par_iter()
            .enumerate()
            .map(|(i, t)| run_episode_indexed(scene, t, i as u64, opts.keep_frames))
            .collect()
    });
    let elapsed = start.elapsed();
    let taxel_steps = trajectories
        .iter()
        .zip(&episodes)
        .filter(|(_, e)| e.is_ok())
        .map(|(t, _)| (t.len() * scene.taxel_count()) as u64)
        .sum();
    Ok(BatchOutput {
        episodes,
        taxel_steps,
        elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{load_scene, SceneConfig, SceneOptions};
    use nalgebra::Vector3;

    fn scene(extra: &str) -> (tempfile::TempDir, Scene) {
        let dir = tempfile::tempdir().unwrap();
        let doc = format!(
            "[object]\nsphere_radius = 0.01\nsphere_subdivisions = 3\ncell_size = 0.0005\n{extra}"
        );
        let cfg: SceneConfig = toml::from_str(&doc).unwrap();
        let opts = SceneOptions {
            base_dir: None,
            cache_dir: Some(dir.path().to_owned()),
        };
        let s = load_scene(&cfg, &opts).unwrap();
        (dir, s)
    }

    fn descent(steps: usize, z0: f64, dz: f64) -> Trajectory {
        let object = (0..steps)
            .map(|k| {
                RigidState::from_translation(Vector3::new(0.001, 0.001, z0 - dz * k as f64))
                    .with_twist(Vector3::zeros(), Vector3::new(0.0, 0.0, -dz / 0.01))
            })
            .collect();
        Trajectory::new(0.01, object, vec![vec![RigidState::identity(); steps]]).unwrap()
    }

    #[test]
    fn out_of_reach_gives_zero_frames() {
        let (_d, s) = scene("");
        let out = run_episode(&s, &descent(4, 0.5, 0.0)).unwrap();
        assert_eq!(out.len(), 4);
        for step in &out.frames {
            assert!(step[0].force.iter().all(|&f| f == 0.0));
        }
    }

    #[test]
    fn descent_force_is_monotone() {
        let (_d, s) = scene("");
        let out = run_episode(&s, &descent(12, 0.0105, 0.0002)).unwrap();
        let sums: Vec<f64> = out.stats.iter().map(|st| st.total_force).collect();
        assert!(sums[0] == 0.0 && *sums.last().unwrap() > 0.0);
        for w in sums.windows(2) {
            assert!(w[1] >= w[0], "{sums:?}");
        }
    }

    #[test]
    fn batch_matches_serial_and_keeps_order() {
        let (_d, s) = scene("[camera]\nfx = 60.0\nfy = 60.0\ncx = 8.0\ncy = 6.0\nwidth = 16\nheight = 12\nposition = [0.0, 0.0, 0.1]\norientation = [0.0, 1.0, 0.0, 0.0]\nvisual_points = 32\n[noise]\nsigma = 3.0\nseed = 5\n");
        let trajs: Vec<Trajectory> = (0..6)
            .map(|i| descent(5, 0.0105 - 0.0002 * i as f64, 0.0002))
            .collect();
        let one = run_batch(
            &s,
            &trajs,
            &BatchOptions {
                workers: 1,
                keep_frames: true,
            },
        )
        .unwrap();
        let three = run_batch(
            &s,
            &trajs,
            &BatchOptions {
                workers: 3,
                keep_frames: false,
            },
        )
        .unwrap();
        for (i, (a, b)) in one.episodes.iter().zip(&three.episodes).enumerate() {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert_eq!(a.digest, b.digest);
            assert_eq!(a.clouds, b.clouds);
            assert_eq!(a.clouds[0].len(), 32 + 384);
            let serial = run_episode_indexed(&s, &trajs[i], i as u64, true).unwrap();
            assert_eq!(&serial, a);
        }
        assert_eq!(one.taxel_steps, 6 * 5 * 384);
    }

    #[test]
    fn pad_count_mismatch_is_an_episode_error() {
        let (_d, s) = scene("");
        let mut t = descent(2, 0.5, 0.0);
        t.pads.push(t.pads[0].clone());
        let out = run_batch(&s, &[t, descent(2, 0.5, 0.0)], &BatchOptions::default()).unwrap();
        assert!(out.episodes[0].is_err());
        assert!(out.episodes[1].is_ok());
    }
}
