//! Scene documents (TOML) and their validated, geometry-loaded form.
//!
//! ```toml
//! domain = "sim"
//!
//! [pads]
//! count = 4
//! rows = 12
//! cols = 32
//! margin = 0.001
//!
//! [object]
//! sphere_radius = 0.02        # or: mesh = "object.stl"
//!
//! [contact]
//! k_n = 1.0
//! k_d = 0.003
//!
//! [camera]
//! fx = 300.0
//! fy = 300.0
//! cx = 32.0
//! cy = 24.0
//! width = 64
//! height = 48
//! position = [0.0, 0.0, 0.5]
//! orientation = [0.0, 1.0, 0.0, 0.0]
//!
//! [noise]
//! sigma = 3.0
//! seed = 1
//! ```
//!
//! Relative mesh paths resolve against the directory of the scene file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{Point3, Vector3};
use serde::Deserialize;

use super::SimError;
use crate::contact::{ContactParams, FrameScale};
use crate::geometry::{self, shapes, Aabb, SdfGrid, TriangleMesh};
use crate::perception::{CameraIntrinsics, Domain, NoiseConfig};
use crate::sensor_pad::{sample_taxels_with, RigidState, SampleOptions, TaxelArray};
use crate::signal::NormalizationConfig;

/// Overrides the SDF cache directory.
pub const CACHE_DIR_ENV: &str = "TAXELSIM_CACHE_DIR";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub domain: Domain,
    pub pads: PadConfig,
    pub object: ObjectConfig,
    pub contact: ContactConfig,
    pub normalization: NormalizationSection,
    pub camera: Option<CameraConfig>,
    pub noise: Option<NoiseSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PadConfig {
    /// Number of fingers, each carrying one pad (1 to 4).
    pub count: usize,
    /// Pad mesh in the pad link frame; a 24×64×4 mm slab with its sensing
    /// face at z = 0 when absent.
    pub mesh: Option<PathBuf>,
    pub mesh_scale: f64,
    pub rows: usize,
    pub cols: usize,
    pub margin: f64,
    pub nominal_pitch: f64,
    pub side_hint: Option<[f64; 3]>,
}

impl Default for PadConfig {
    fn default() -> Self {
        Self {
            count: 1,
            mesh: None,
            mesh_scale: 1.0,
            rows: 12,
            cols: 32,
            margin: 0.001,
            nominal_pitch: 0.002,
            side_hint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectConfig {
    pub mesh: Option<PathBuf>,
    pub mesh_scale: f64,
    /// Icosphere object used when no mesh is given.
    pub sphere_radius: f64,
    pub sphere_subdivisions: u32,
    /// Defaults to 1/64 of the longest bounding-box edge.
    pub cell_size: Option<f64>,
    pub padding_cells: usize,
}

impl Default for ObjectConfig {
    fn default() -> Self {
        Self {
            mesh: None,
            mesh_scale: 1.0,
            sphere_radius: 0.02,
            sphere_subdivisions: 4,
            cell_size: None,
            padding_cells: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    pub k_n: f64,
    pub k_d: f64,
    pub clamp_negative: bool,
}

impl Default for ContactConfig {
    fn default() -> Self {
        let p = ContactParams::default();
        Self {
            k_n: p.k_n,
            k_d: p.k_d,
            clamp_negative: p.clamp_negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationSection {
    pub tau: f64,
    pub s_max_fixed: f64,
    pub epsilon: f64,
    /// Full scale of the depth channel, m.
    pub depth_max: f64,
    /// Full scale of the force channel, N.
    pub force_max: f64,
}

impl Default for NormalizationSection {
    fn default() -> Self {
        let n = NormalizationConfig::default();
        let f = FrameScale::default();
        Self {
            tau: n.tau,
            s_max_fixed: n.s_max_fixed,
            epsilon: n.epsilon,
            depth_max: f.depth_max,
            force_max: f.force_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Camera-to-world translation.
    pub position: [f64; 3],
    /// Camera-to-world rotation as `[w, x, y, z]`.
    pub orientation: [f64; 4],
    pub crop_min: Option<[f64; 3]>,
    pub crop_max: Option<[f64; 3]>,
    #[serde(default = "default_visual_points")]
    pub visual_points: usize,
}

fn default_visual_points() -> usize {
    1024
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma: f64,
    pub seed: u64,
}

/// Camera fixed in the world, with its workspace crop.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraSetup {
    pub intrinsics: CameraIntrinsics,
    pub pose: RigidState,
    pub width: usize,
    pub height: usize,
    pub crop: Option<Aabb>,
    pub visual_points: usize,
}

#[derive(Debug, Clone)]
pub struct PadSetup {
    pub mesh: Arc<TriangleMesh>,
    pub taxels: Arc<TaxelArray>,
}

/// Validated scene; cheap to clone, geometry is shared.
#[derive(Debug, Clone)]
pub struct Scene {
    pub pads: Vec<PadSetup>,
    pub object_mesh: Arc<TriangleMesh>,
    pub object_sdf: Arc<SdfGrid>,
    pub contact: ContactParams,
    pub normalization: NormalizationConfig,
    pub frame_scale: FrameScale,
    pub camera: Option<CameraSetup>,
    pub noise: Option<NoiseConfig>,
    pub domain: Domain,
    /// The object SDF came from the on-disk cache.
    pub sdf_cache_hit: bool,
}

impl Scene {
    pub fn taxel_count(&self) -> usize {
        self.pads.iter().map(|p| p.taxels.len()).sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SceneOptions {
    /// Directory for relative mesh paths.
    pub base_dir: Option<PathBuf>,
    /// SDF cache location; falls back to `TAXELSIM_CACHE_DIR`, then a
    /// directory under the system temp dir.
    pub cache_dir: Option<PathBuf>,
}

pub fn load_scene_file(path: &Path, opts: &SceneOptions) -> Result<Scene, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SimError::MissingFile(path.to_owned()),
        _ => e.into(),
    })?;
    let config: SceneConfig = toml::from_str(&text)?;
    let opts = SceneOptions {
        base_dir: opts
            .base_dir
            .clone()
            .or_else(|| path.parent().map(Path::to_owned)),
        ..opts.clone()
    };
    load_scene(&config, &opts)
}

pub fn load_scene(config: &SceneConfig, opts: &SceneOptions) -> Result<Scene, SimError> {
    let contact = ContactParams {
        k_n: config.contact.k_n,
        k_d: config.contact.k_d,
        clamp_negative: config.contact.clamp_negative,
    };
    contact.validate().map_err(|e| match e {
        crate::contact::ContactError::InvalidParameter { field, message } => {
            SimError::field(&format!("contact.{field}"), message)
        }
        other => SimError::field("contact", other.to_string()),
    })?;
    let n = &config.normalization;
    let normalization = NormalizationConfig {
        tau: n.tau,
        s_max_fixed: n.s_max_fixed,
        epsilon: n.epsilon,
    };
    normalization
        .validate()
        .map_err(|e| SimError::field("normalization", e.to_string()))?;
    for (field, v) in [
        ("normalization.depth_max", n.depth_max),
        ("normalization.force_max", n.force_max),
    ] {
        if !(v > 0.0) {
            return Err(SimError::field(field, format!("must be positive, got {v}")));
        }
    }
    let frame_scale = FrameScale {
        depth_max: n.depth_max,
        force_max: n.force_max,
    };

    let pads = load_pads(&config.pads, opts)?;
    let (object_mesh, object_sdf, sdf_cache_hit) = load_object(&config.object, opts)?;

    let camera = config.camera.as_ref().map(camera_setup).transpose()?;
    let noise = match &config.noise {
        Some(s) if !(s.sigma >= 0.0) => {
            return Err(SimError::field(
                "noise.sigma",
                format!("must be >= 0, got {}", s.sigma),
            ))
        }
        Some(s) => Some(NoiseConfig {
            sigma: s.sigma,
            seed: s.seed,
        }),
        None => None,
    };

    Ok(Scene {
        pads,
        object_mesh,
        object_sdf,
        contact,
        normalization,
        frame_scale,
        camera,
        noise,
        domain: config.domain,
        sdf_cache_hit,
    })
}

fn resolve(path: &Path, opts: &SceneOptions) -> Result<PathBuf, SimError> {
    let full = match &opts.base_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_owned(),
    };
    if !full.is_file() {
        return Err(SimError::MissingFile(full));
    }
    Ok(full)
}

fn positive(field: &str, v: f64) -> Result<(), SimError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SimError::field(field, format!("must be positive, got {v}")))
    }
}

fn load_pads(cfg: &PadConfig, opts: &SceneOptions) -> Result<Vec<PadSetup>, SimError> {
    if !(1..=4).contains(&cfg.count) {
        return Err(SimError::field(
            "pads.count",
            format!("must be 1 to 4, got {}", cfg.count),
        ));
    }
    positive("pads.mesh_scale", cfg.mesh_scale)?;
    if cfg.rows < 2 || cfg.cols < 2 {
        return Err(SimError::field(
            "pads.rows",
            format!("lattice needs at least 2x2, got {}x{}", cfg.rows, cfg.cols),
        ));
    }
    let mesh = match &cfg.mesh {
        Some(path) => geometry::load_mesh(&resolve(path, opts)?, cfg.mesh_scale)?,
        None => shapes::cuboid(
            Point3::new(0.0, 0.0, -0.002),
            Vector3::new(0.012, 0.032, 0.002),
        ),
    };
    let sample = SampleOptions {
        side_hint: cfg.side_hint.map(Vector3::from),
        nominal_pitch: cfg.nominal_pitch,
    };
    let taxels = sample_taxels_with(&mesh, cfg.rows, cfg.cols, cfg.margin, &sample)?;
    let setup = PadSetup {
        mesh: Arc::new(mesh),
        taxels: Arc::new(taxels),
    };
    Ok(vec![setup; cfg.count])
}

fn load_object(
    cfg: &ObjectConfig,
    opts: &SceneOptions,
) -> Result<(Arc<TriangleMesh>, Arc<SdfGrid>, bool), SimError> {
    positive("object.mesh_scale", cfg.mesh_scale)?;
    let mesh = match &cfg.mesh {
        Some(path) => geometry::load_mesh(&resolve(path, opts)?, cfg.mesh_scale)?,
        None => {
            positive("object.sphere_radius", cfg.sphere_radius)?;
            shapes::icosphere(Point3::origin(), cfg.sphere_radius, cfg.sphere_subdivisions)
        }
    };
    let cell = match cfg.cell_size {
        Some(c) => {
            positive("object.cell_size", c)?;
            c
        }
        None => geometry::default_cell_size(&mesh),
    };
    if cfg.padding_cells < 2 {
        return Err(SimError::field(
            "object.padding_cells",
            format!("must be at least 2, got {}", cfg.padding_cells),
        ));
    }
    let (sdf, hit) = cached_sdf(&mesh, cell, cfg.padding_cells, opts)?;
    Ok((Arc::new(mesh), Arc::new(sdf), hit))
}

fn cache_dir(opts: &SceneOptions) -> PathBuf {
    opts.cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| std::env::temp_dir().join("taxelsim-sdf-cache"))
}

/// Loads the grid for `(mesh hash, cell size, padding)` from the cache or builds
/// and stores it. Unreadable cache entries are rebuilt.
fn cached_sdf(
    mesh: &TriangleMesh,
    cell: f64,
    padding: usize,
    opts: &SceneOptions,
) -> Result<(SdfGrid, bool), SimError> {
    let hash: String = mesh
        .content_hash()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let name = format!("{hash}-{:016x}-{padding}.tsdf", cell.to_bits());
    let path = cache_dir(opts).join(name);
    if path.is_file() {
        match SdfGrid::load(&path) {
            Ok(grid) => {
                log::info!("sdf cache hit: {}", path.display());
                return Ok((grid, true));
            }
            Err(e) => log::warn!(
                "ignoring unreadable sdf cache entry {}: {e}",
                path.display()
            ),
        }
    }
    log::info!("building sdf grid (cell {cell} m) into {}", path.display());
    let grid = geometry::build_sdf_grid(mesh, cell, padding)?;
    if let Err(e) = grid.save(&path) {
        log::warn!("could not write sdf cache entry {}: {e}", path.display());
    }
    Ok((grid, false))
}

fn camera_setup(cfg: &CameraConfig) -> Result<CameraSetup, SimError> {
    let intrinsics = CameraIntrinsics {
        fx: cfg.fx,
        fy: cfg.fy,
        cx: cfg.cx,
        cy: cfg.cy,
    };
    intrinsics
        .validate()
        .map_err(|e| SimError::field("camera", e.to_string()))?;
    if cfg.width == 0 || cfg.height == 0 {
        return Err(SimError::field("camera.width", "image must be non-empty"));
    }
    if cfg.visual_points == 0 {
        return Err(SimError::field(
            "camera.visual_points",
            "must be at least 1",
        ));
    }
    let rotation = RigidState::quaternion_from_wxyz(cfg.orientation)
        .map_err(|e| SimError::field("camera.orientation", e.to_string()))?;
    let crop = match (cfg.crop_min, cfg.crop_max) {
        (Some(lo), Some(hi)) => Some(
            Aabb::new(Point3::from(lo), Point3::from(hi))
                .map_err(|e| SimError::field("camera.crop_min", e.to_string()))?,
        ),
        (None, None) => None,
        _ => {
            return Err(SimError::field(
                "camera.crop_max",
                "crop_min and crop_max must be given together",
            ))
        }
    };
    Ok(CameraSetup {
        intrinsics,
        pose: RigidState::from_pose(rotation, Vector3::from(cfg.position)),
        width: cfg.width,
        height: cfg.height,
        crop,
        visual_points: cfg.visual_points,
    })
}
