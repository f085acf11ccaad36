//! `taxelsim` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Point3, Vector3};

use taxelsim::contact::{write_frames, write_heatmap_png, ContactParams, FrameChannel, FrameScale};
use taxelsim::geometry::{load_mesh, Aabb};
use taxelsim::io_util::write_atomic;
use taxelsim::perception::{
    crop_workspace, downsample_uniform, inject_noise, merge_visuo_tactile, read_tpcd, write_csv,
    write_tpcd, Domain, NoiseConfig, PointCloud, PointTable,
};
use taxelsim::sensor_pad::{sample_taxels_with, write_taxels, SampleOptions};
use taxelsim::signal::{
    fit_contact_params_with, histogram_compare, read_samples, CurveSource, FitOptions,
    ForceResponseCurve, PressScene,
};
use taxelsim::sim::{
    load_scene_file, randomize_initials, run_batch, run_episode, BatchOptions, EpisodeOutput,
    Scene, SceneOptions, Trajectory,
};

type DataResult = Result<(), Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(
    name = "taxelsim",
    version,
    about = "Piezoresistive tactile pad simulator"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a taxel lattice on a pad mesh and write it as a taxel file.
    SampleTaxels(SampleTaxelsArgs),
    /// Replay one trajectory and write tactile frames (and clouds with a camera).
    Simulate(SimulateArgs),
    /// Replay every trajectory in a directory in parallel.
    Batch(BatchArgs),
    /// Fit k_n and k_d to a measured force-response curve.
    Calibrate(CalibrateArgs),
    /// Compare real and simulated reading histograms.
    CompareHist(CompareHistArgs),
    /// Crop, downsample, add noise to, or merge TPCD point clouds.
    Cloud(CloudArgs),
    /// Write randomized copies of a trajectory with shifted object start poses.
    Randomize(RandomizeArgs),
}

#[derive(Debug, Args)]
struct SampleTaxelsArgs {
    /// Pad mesh (OBJ or STL).
    #[arg(long)]
    mesh: PathBuf,
    /// Factor applied to mesh coordinates (e.g. 0.001 for millimeter assets).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Taxel rows along the face's first in-plane axis.
    #[arg(long, default_value_t = 12)]
    rows: usize,
    /// Taxel columns along the second in-plane axis.
    #[arg(long, default_value_t = 32)]
    cols: usize,
    /// Inset from the face edges, meters.
    #[arg(long, default_value_t = 0.001)]
    margin: f64,
    /// Direction selecting the sensing face, as `x,y,z`.
    #[arg(long, value_parser = parse_vec3)]
    side: Option<Vector3<f64>>,
    /// Output taxel file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Scene config (TOML).
    #[arg(long)]
    scene: PathBuf,
    /// SDF cache directory (overrides TAXELSIM_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Trajectory CSV.
    #[arg(long)]
    trajectory: PathBuf,
    /// Output directory: `pad<i>.tfrm`, `cloud_<step>.tpcd`, `summary.txt`.
    #[arg(long)]
    out: PathBuf,
    /// Channels per TFRM frame (4 appends two zero channels).
    #[arg(long, default_value_t = 2, value_parser = parse_channels)]
    channels: usize,
    /// Also write one force heatmap PNG per pad and step.
    #[arg(long)]
    heatmaps: bool,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Directory of trajectory CSV files, replayed in file-name order.
    #[arg(long)]
    trajectories: PathBuf,
    /// Output directory: per-episode TFRM files and `report.txt`.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Only write the report (digests and statistics), no frame files.
    #[arg(long)]
    no_frames: bool,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Measured curve CSV (`load_n,reading[,rate_mps]`, readings normalized).
    #[arg(long)]
    curve: PathBuf,
    /// Initial stiffness guess, N/m.
    #[arg(long, default_value_t = 0.5)]
    init_k_n: f64,
    /// Initial damping guess, N·s/m.
    #[arg(long, default_value_t = 1e-3)]
    init_k_d: f64,
    /// Maximum pattern-search iterations.
    #[arg(long, default_value_t = 200)]
    budget: usize,
    /// Depth at which the press rig's reading saturates, meters.
    #[arg(long, default_value_t = 0.002)]
    depth_max: f64,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareHistArgs {
    /// Real readings, one or more numbers per line.
    #[arg(long)]
    real: PathBuf,
    /// Simulated readings.
    #[arg(long)]
    sim: PathBuf,
    /// Equal-width bins over [0, 1].
    #[arg(long, default_value_t = 32)]
    bins: usize,
    /// Divergence below which the distributions count as matching, bits.
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainArg {
    Sim,
    Real,
}

#[derive(Debug, Args)]
struct CloudArgs {
    /// Input 4-channel TPCD cloud.
    #[arg(long)]
    input: PathBuf,
    /// Data source; noise is skipped for real clouds.
    #[arg(long, value_enum, default_value_t = DomainArg::Sim)]
    domain: DomainArg,
    /// Crop box minimum corner `x,y,z`.
    #[arg(long, value_parser = parse_vec3, requires = "crop_max")]
    crop_min: Option<Vector3<f64>>,
    /// Crop box maximum corner `x,y,z`.
    #[arg(long, value_parser = parse_vec3, requires = "crop_min")]
    crop_max: Option<Vector3<f64>>,
    /// Uniformly downsample (or pad) to this many points.
    #[arg(long)]
    downsample: Option<usize>,
    /// Multiplicative noise level; requires --seed.
    #[arg(long, requires = "seed")]
    noise_sigma: Option<f64>,
    /// Noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Tactile TPCD cloud to append, producing a 5-channel merged cloud.
    #[arg(long)]
    merge_tactile: Option<PathBuf>,
    /// Output TPCD cloud.
    #[arg(long)]
    out: PathBuf,
    /// Also write a CSV export.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RandomizeArgs {
    /// Base trajectory CSV.
    #[arg(long)]
    trajectory: PathBuf,
    /// Side of the square of start offsets, meters.
    #[arg(long, default_value_t = 0.03)]
    range: f64,
    /// Number of trajectories to write.
    #[arg(long)]
    count: usize,
    /// Seed for the offsets.
    #[arg(long)]
    seed: u64,
    /// Shift the pad tracks together with the object.
    #[arg(long)]
    move_pads: bool,
    /// Output directory for `traj_<i>.csv`.
    #[arg(long)]
    out: PathBuf,
}

fn parse_channels(s: &str) -> Result<usize, String> {
    match s {
        "2" => Ok(2),
        "4" => Ok(4),
        _ => Err(format!("channels must be 2 or 4, got `{s}`")),
    }
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected `x,y,z`, got `{s}`")),
    }
}

/// Parses `argv` (program name first), runs the subcommand, and returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();

    let result = match &cli.command {
        Command::SampleTaxels(a) => sample_taxels_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Batch(a) => batch_cmd(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::CompareHist(a) => compare_hist_cmd(a),
        Command::Cloud(a) => cloud_cmd(a),
        Command::Randomize(a) => randomize_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn require_file(path: &Path) -> DataResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(format!("input file not found: {}", path.display()).into())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Box<dyn std::error::Error>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write_text(path: Option<&Path>, text: &str) -> DataResult {
    match path {
        Some(p) => write_atomic(p, |w| w.write_all(text.as_bytes()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn sample_taxels_cmd(a: &SampleTaxelsArgs) -> DataResult {
    require_file(&a.mesh)?;
    let mesh = load_mesh(&a.mesh, a.scale)?;
    let opts = SampleOptions {
        side_hint: a.side,
        ..SampleOptions::default()
    };
    let taxels = sample_taxels_with(&mesh, a.rows, a.cols, a.margin, &opts)?;
    write_atomic(&a.out, |w| write_taxels(&taxels, w))?;
    log::info!("wrote {} taxels to {}", taxels.len(), a.out.display());
    Ok(())
}

fn load_scene_args(a: &SceneArgs) -> Result<Scene, Box<dyn std::error::Error>> {
    require_file(&a.scene)?;
    let opts = SceneOptions {
        base_dir: None,
        cache_dir: a.cache_dir.clone(),
    };
    Ok(load_scene_file(&a.scene, &opts)?)
}

fn read_trajectory(path: &Path) -> Result<Trajectory, Box<dyn std::error::Error>> {
    Trajectory::read_csv(open(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// TFRM per pad under `dir`, named `<prefix>pad<i>.tfrm`.
fn write_episode_frames(
    dir: &Path,
    prefix: &str,
    scene: &Scene,
    out: &EpisodeOutput,
    dt: f64,
    channels: usize,
) -> DataResult {
    for (pad_index, pad) in scene.pads.iter().enumerate() {
        let frames: Vec<_> = out
            .frames
            .iter()
            .map(|step| step[pad_index].clone())
            .collect();
        let path = dir.join(format!("{prefix}pad{pad_index}.tfrm"));
        let mut buf = Vec::new();
        write_frames(
            &mut buf,
            &frames,
            pad.taxels.rows(),
            pad.taxels.cols(),
            dt,
            channels,
        )?;
        write_atomic(&path, |w| w.write_all(&buf))?;
    }
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs) -> DataResult {
    require_file(&a.trajectory)?;
    let scene = load_scene_args(&a.scene)?;
    let traj = read_trajectory(&a.trajectory)?;
    let out = run_episode(&scene, &traj)?;
    std::fs::create_dir_all(&a.out)?;
    write_episode_frames(&a.out, "", &scene, &out, traj.dt, a.channels)?;
    for (step, cloud) in out.clouds.iter().enumerate() {
        let path = a.out.join(format!("cloud_{step:05}.tpcd"));
        write_atomic(&path, |w| write_tpcd(w, &PointTable::from(cloud)))?;
    }
    if a.heatmaps {
        for (step, frames) in out.frames.iter().enumerate() {
            for (pad, frame) in frames.iter().enumerate() {
                let path = a.out.join(format!("heatmap_pad{pad}_{step:05}.png"));
                write_heatmap_png(frame, FrameChannel::Force, 1.0, &path)?;
            }
        }
    }
    let mut summary = String::new();
    summary.push_str(&format!(
        "steps {}\ndt {:?}\npads {}\ndigest {}\n",
        out.len(),
        traj.dt,
        scene.pads.len(),
        out.digest_hex()
    ));
    summary.push_str("# step contact_taxels max_force total_force saturated\n");
    for (k, s) in out.stats.iter().enumerate() {
        summary.push_str(&format!(
            "{k} {} {:e} {:e} {}\n",
            s.contact_taxels, s.max_force, s.total_force, s.saturated_taxels
        ));
    }
    write_text(Some(&a.out.join("summary.txt")), &summary)
}

fn batch_cmd(a: &BatchArgs) -> DataResult {
    if !a.trajectories.is_dir() {
        return Err(format!("not a directory: {}", a.trajectories.display()).into());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.trajectories)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no .csv trajectories in {}", a.trajectories.display()).into());
    }
    let scene = load_scene_args(&a.scene)?;
    let trajs = files
        .iter()
        .map(|f| read_trajectory(f))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = BatchOptions {
        workers: a.workers,
        keep_frames: !a.no_frames,
    };
    let batch = run_batch(&scene, &trajs, &opts)?;
    std::fs::create_dir_all(&a.out)?;
    let mut report = String::new();
    let mut failures = 0;
    for ((file, traj), result) in files.iter().zip(&trajs).zip(&batch.episodes) {
        let stem = file.file_stem().unwrap_or_default().to_string_lossy();
        match result {
            Ok(out) => {
                if !a.no_frames {
                    write_episode_frames(&a.out, &format!("{stem}."), &scene, out, traj.dt, 2)?;
                }
                report.push_str(&format!(
                    "{stem} ok steps={} digest={}\n",
                    out.len(),
                    out.digest_hex()
                ));
            }
            Err(e) => {
                failures += 1;
                report.push_str(&format!("{stem} error {e}\n"));
            }
        }
    }
    report.push_str(&format!(
        "episodes {}\nfailed {failures}\nworkers {}\ntaxel_steps {}\nelapsed_s {:.6}\ntaxel_steps_per_s {:.6e}\n",
        trajs.len(),
        a.workers,
        batch.taxel_steps,
        batch.elapsed.as_secs_f64(),
        batch.taxel_steps_per_second()
    ));
    write_text(Some(&a.out.join("report.txt")), &report)?;
    eprintln!(
        "{} episodes, {:.3e} taxel-steps/s",
        trajs.len(),
        batch.taxel_steps_per_second()
    );
    Ok(())
}

fn calibrate_cmd(a: &CalibrateArgs) -> DataResult {
    require_file(&a.curve)?;
    let curve = ForceResponseCurve::read_csv(open(&a.curve)?, CurveSource::Measured)?;
    let init = ContactParams::new(a.init_k_n, a.init_k_d)?;
    let scene = PressScene {
        scale: FrameScale {
            depth_max: a.depth_max,
            ..FrameScale::default()
        },
        ..PressScene::default()
    };
    let opts = FitOptions {
        budget: a.budget,
        scene,
    };
    let result = fit_contact_params_with(&curve, &init, &opts)?;
    write_text(a.out.as_deref(), &result.to_report())
}

fn compare_hist_cmd(a: &CompareHistArgs) -> DataResult {
    require_file(&a.real)?;
    require_file(&a.sim)?;
    if a.bins < 2 {
        return Err("--bins must be at least 2".into());
    }
    let real = read_samples(open(&a.real)?)?;
    let sim = read_samples(open(&a.sim)?)?;
    if real.is_empty() || sim.is_empty() {
        return Err("both sample files must contain at least one reading".into());
    }
    let report = histogram_compare(&real, &sim, a.bins);
    let mut text = report.to_text();
    text.push_str(&format!(
        "threshold_bits {:e}\nwithin_threshold {}\n",
        a.threshold,
        report.divergence < a.threshold
    ));
    write_text(a.out.as_deref(), &text)
}

fn cloud_cmd(a: &CloudArgs) -> DataResult {
    require_file(&a.input)?;
    if let Some(t) = &a.merge_tactile {
        require_file(t)?;
    }
    let domain = match a.domain {
        DomainArg::Sim => Domain::Sim,
        DomainArg::Real => Domain::Real,
    };
    let mut cloud: PointCloud = read_tpcd(open(&a.input)?)?.to_cloud(domain)?;
    if let (Some(lo), Some(hi)) = (a.crop_min, a.crop_max) {
        let bounds = Aabb::new(Point3::from(lo), Point3::from(hi))?;
        cloud = crop_workspace(&cloud, &bounds);
    }
    if let Some(n) = a.downsample {
        cloud = downsample_uniform(&cloud, n)?;
    }
    if let Some(sigma) = a.noise_sigma {
        if sigma.is_nan() || sigma < 0.0 {
            return Err(format!("--noise-sigma must be >= 0, got {sigma}").into());
        }
        let seed = a.seed.expect("clap enforces --seed with --noise-sigma");
        cloud = inject_noise(&cloud, &NoiseConfig { sigma, seed });
    }
    let table = match &a.merge_tactile {
        Some(path) => {
            let tactile = read_tpcd(open(path)?)?.to_cloud(Domain::Sim)?;
            PointTable::from(&merge_visuo_tactile(&cloud, &tactile))
        }
        None => PointTable::from(&cloud),
    };
    write_atomic(&a.out, |w| write_tpcd(w, &table))?;
    if let Some(csv) = &a.csv {
        write_atomic(csv, |w| write_csv(w, &table))?;
    }
    Ok(())
}

fn randomize_cmd(a: &RandomizeArgs) -> DataResult {
    require_file(&a.trajectory)?;
    if a.range.is_nan() || a.range < 0.0 {
        return Err(format!("--range must be >= 0, got {}", a.range).into());
    }
    let base = read_trajectory(&a.trajectory)?;
    let trajs = randomize_initials(&base, a.range, a.count, a.seed, a.move_pads);
    std::fs::create_dir_all(&a.out)?;
    for (i, t) in trajs.iter().enumerate() {
        let path = a.out.join(format!("traj_{i:05}.csv"));
        write_atomic(&path, |w| t.write_csv(w))?;
    }
    Ok(())
}
