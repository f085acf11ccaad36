//! Pose/twist tracks for the object and each pad.
//!
//! CSV layout, one row per body per step, steps in time order:
//!
//! ```text
//! t,body_id,qw,qx,qy,qz,px,py,pz[,wx,wy,wz,vx,vy,vz]
//! ```
//!
//! Body ids are `object` and `pad0`..`pad3`. Without twist columns, twists are
//! reconstructed by central differences of the poses (one-sided at the ends).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::perception::DepthImage;
use crate::sensor_pad::RigidState;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub object: Vec<RigidState>,
    /// One track per pad, each as long as `object`.
    pub pads: Vec<Vec<RigidState>>,
    /// Recorded camera frames; when absent a scene camera renders the object.
    pub depth_images: Option<Vec<DepthImage>>,
}

impl Trajectory {
    pub fn new(
        dt: f64,
        object: Vec<RigidState>,
        pads: Vec<Vec<RigidState>>,
    ) -> Result<Self, SimError> {
        let t = Self {
            dt,
            object,
            pads,
            depth_images: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.object.len()
    }

    pub fn is_empty(&self) -> bool {
        self.object.is_empty()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Mismatch(format!(
                "trajectory dt must be positive, got {}",
                self.dt
            )));
        }
        if self.pads.is_empty() {
            return Err(SimError::Mismatch("trajectory has no pad tracks".into()));
        }
        for (i, p) in self.pads.iter().enumerate() {
            if p.len() != self.object.len() {
                return Err(SimError::Mismatch(format!(
                    "pad{i} track has {} steps, object track has {}",
                    p.len(),
                    self.object.len()
                )));
            }
        }
        if let Some(images) = &self.depth_images {
            if images.len() != self.object.len() {
                return Err(SimError::Mismatch(format!(
                    "{} depth images for {} steps",
                    images.len(),
                    self.object.len()
                )));
            }
        }
        Ok(())
    }

    /// Writes every row with explicit twist columns.
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "t,body_id,qw,qx,qy,qz,px,py,pz,wx,wy,wz,vx,vy,vz")?;
        for k in 0..self.len() {
            let t = k as f64 * self.dt;
            let bodies = std::iter::once(("object".to_owned(), &self.object[k])).chain(
                self.pads
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (format!("pad{i}"), &p[k])),
            );
            for (id, s) in bodies {
                let q = s.rotation.quaternion();
                let (p, w, v) = (s.translation, s.angular_velocity, s.linear_velocity);
                writeln!(
                    out,
                    "{t:?},{id},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                    q.w, q.i, q.j, q.k, p.x, p.y, p.z, w.x, w.y, w.z, v.x, v.y, v.z
                )?;
            }
        }
        Ok(())
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self, SimError> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l?,
            None => return Err(parse_error(1, "empty trajectory file")),
        };
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_owned()).collect();
        const BASE: [&str; 9] = ["t", "body_id", "qw", "qx", "qy", "qz", "px", "py", "pz"];
        const TWIST: [&str; 6] = ["wx", "wy", "wz", "vx", "vy", "vz"];
        let with_twist = if columns == BASE {
            false
        } else if columns.len() == 15 && columns[..9] == BASE && columns[9..] == TWIST {
            true
        } else {
            return Err(parse_error(1, format!("unexpected header `{header}`")));
        };

        let mut times: Vec<f64> = Vec::new();
        let mut tracks: BTreeMap<String, Vec<RigidState>> = BTreeMap::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != columns.len() {
                return Err(parse_error(
                    line_no,
                    format!("expected {} fields, got {}", columns.len(), fields.len()),
                ));
            }
            let num = |j: usize| -> Result<f64, SimError> {
                fields[j].parse::<f64>().map_err(|_| {
                    parse_error(line_no, format!("cannot parse `{}` as a number", fields[j]))
                })
            };
            let t = num(0)?;
            let id = fields[1];
            if id != "object" && !matches!(id, "pad0" | "pad1" | "pad2" | "pad3") {
                return Err(parse_error(line_no, format!("unknown body id `{id}`")));
            }
            match times.last() {
                Some(&last) if t == last => {}
                Some(&last) if t < last => {
                    return Err(parse_error(line_no, "time stamps must not decrease"))
                }
                _ => times.push(t),
            }
            let step = times.len() - 1;
            let track = tracks.entry(id.to_owned()).or_default();
            if track.len() != step {
                return Err(parse_error(
                    line_no,
                    format!("body `{id}` has no row or a duplicate row at t = {t}"),
                ));
            }
            let rotation = RigidState::quaternion_from_wxyz([num(2)?, num(3)?, num(4)?, num(5)?])
                .map_err(|e| parse_error(line_no, e.to_string()))?;
            let mut state =
                RigidState::from_pose(rotation, Vector3::new(num(6)?, num(7)?, num(8)?));
            if with_twist {
                state.angular_velocity = Vector3::new(num(9)?, num(10)?, num(11)?);
                state.linear_velocity = Vector3::new(num(12)?, num(13)?, num(14)?);
            }
            track.push(state);
        }

        if times.len() < 2 {
            return Err(parse_error(0, "need at least 2 time steps to infer dt"));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
                return Err(parse_error(0, "time stamps must be evenly spaced"));
            }
        }
        let steps = times.len();
        let object = tracks
            .remove("object")
            .ok_or_else(|| parse_error(0, "no `object` rows"))?;
        let mut pads = Vec::new();
        for i in 0..4 {
            match tracks.remove(&format!("pad{i}")) {
                Some(t) => pads.push(t),
                None => break,
            }
        }
        if !tracks.is_empty() {
            return Err(parse_error(0, "pad ids must be contiguous from pad0"));
        }
        for track in std::iter::once(&object).chain(&pads) {
            if track.len() != steps {
                return Err(parse_error(0, "every body needs one row per time step"));
            }
        }
        let mut traj = Trajectory::new(dt, object, pads)?;
        if !with_twist {
            traj.object = with_finite_difference_twists(&traj.object, dt);
            traj.pads = traj
                .pads
                .iter()
                .map(|p| with_finite_difference_twists(p, dt))
                .collect();
        }
        Ok(traj)
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> SimError {
    SimError::Trajectory {
        line,
        message: message.into(),
    }
}

/// World-frame twists from poses: `v = Δp / Δt`, `ω = log(q_b q_a⁻¹) / Δt`.
fn with_finite_difference_twists(track: &[RigidState], dt: f64) -> Vec<RigidState> {
    let n = track.len();
    (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            let span = (b - a) as f64 * dt;
            let mut s = track[k];
            if span > 0.0 {
                let delta: UnitQuaternion<f64> = track[b].rotation * track[a].rotation.inverse();
                s.angular_velocity = delta.scaled_axis() / span;
                s.linear_velocity = (track[b].translation - track[a].translation) / span;
            }
            s
        })
        .collect()
}

/// `count` copies of `base` with the object track (and optionally every pad
/// track) shifted by one horizontal offset drawn uniformly from
/// `[−range/2, range/2]²`. Trajectory `i` draws from ChaCha stream `i` of `seed`.
pub fn randomize_initials(
    base: &Trajectory,
    range: f64,
    count: usize,
    seed: u64,
    move_pads: bool,
) -> Vec<Trajectory> {
    assert!(range >= 0.0, "range must be non-negative");
    (0..count)
        .map(|i| {
            let mut t = base.clone();
            if range == 0.0 {
                return t;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let half = range / 2.0;
            let offset = Vector3::new(
                rng.random_range(-half..=half),
                rng.random_range(-half..=half),
                0.0,
            );
            let shift = |track: &mut Vec<RigidState>| {
                for s in track.iter_mut() {
                    s.translation += offset;
                }
            };
            shift(&mut t.object);
            if move_pads {
                t.pads.iter_mut().for_each(shift);
            }
            t
        })
        .collect()
}
