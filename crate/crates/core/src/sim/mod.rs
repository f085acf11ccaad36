//! Scene assembly and deterministic replay of pad/object trajectories,
//! one episode at a time or as a parallel batch.

mod episode;
mod scene;
mod trajectory;

pub use episode::{
    run_batch, run_episode, run_episode_indexed, BatchOptions, BatchOutput, EpisodeOutput,
    StepStats,
};
pub use scene::{
    load_scene, load_scene_file, CameraConfig, ContactConfig, NoiseSection, NormalizationSection,
    ObjectConfig, PadConfig, Scene, SceneConfig, SceneOptions, CACHE_DIR_ENV,
};
pub use trajectory::{randomize_initials, Trajectory};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid value for `{field}`: {message}")]
    InvalidField { field: String, message: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("scene config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("trajectory line {line}: {message}")]
    Trajectory { line: usize, message: String },
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    SensorPad(#[from] crate::sensor_pad::SensorPadError),
    #[error(transparent)]
    Perception(#[from] crate::perception::PerceptionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        Self::InvalidField {
            field: field.to_owned(),
            message: message.into(),
        }
    }
}
