use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nftrack::camera::CameraIntrinsics;
use nftrack::features::pattern::PATTERN;
use nftrack::harness::{
    default_target_image, evaluate_with_elevations, poses_from_csv, poses_to_csv, render_sequence,
    sweep_min_angle_with, Background, Orbit, SweepParams, Trajectory, TrajectorySpec,
};
use nftrack::io::{load_gray, write_pgm};
use nftrack::pipeline::TrackerConfig;
use nftrack::target::{TargetTemplate, DIN_A4};

/// Planar natural-feature tracker: benchmarks and synthetic sequences.
#[derive(Parser)]
#[command(name = "nftrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tracker over a synthetic sequence and write per-frame metrics.
    Benchmark {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 300)]
        frames: usize,
        /// `orbit` or a poses.csv file.
        #[arg(long, default_value = "orbit")]
        trajectory: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        noise: f64,
        /// Frames rendered black, e.g. `150..155`.
        #[arg(long)]
        blackout: Option<String>,
        #[arg(long, default_value = "metrics.csv")]
        out: PathBuf,
    },
    /// Find the lowest camera elevation at which detection still succeeds.
    SweepAngle {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "angle.txt")]
        out: PathBuf,
    },
    /// Render a synthetic sequence as PGM frames plus poses.csv.
    Render {
        #[command(flatten)]
        setup: Setup,
        /// `orbit` or a poses.csv file.
        #[arg(long, default_value = "orbit")]
        trajectory: String,
        #[arg(long, default_value_t = 300)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        noise: f64,
        #[arg(long)]
        blackout: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write the default synthetic target as PGM.
    Target {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the descriptor sampling pattern as CSV.
    DumpPattern,
}

#[derive(Args)]
struct Setup {
    /// Template image (PGM or PNG); the built-in synthetic target if omitted.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Tracker config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Physical target width in meters.
    #[arg(long, default_value_t = DIN_A4.0)]
    width_m: f64,
    /// Physical target height in meters.
    #[arg(long, default_value_t = DIN_A4.1)]
    height_m: f64,
    /// Intrinsics as `fx,fy,cx,cy`; defaults suit 320x240 frames.
    #[arg(long, default_value = "280,280,160,120")]
    intrinsics: String,
}

impl Setup {
    fn load(&self) -> Result<(TrackerConfig, TargetTemplate, CameraIntrinsics)> {
        let config = match &self.config {
            Some(p) => TrackerConfig::from_text(&read(p)?).with_context(|| format!("config {}", p.display()))?,
            None => TrackerConfig::default(),
        };
        let image = match &self.template {
            Some(p) => load_gray(p).with_context(|| format!("template {}", p.display()))?,
            None => default_target_image(),
        };
        let template = TargetTemplate::new(image, self.width_m, self.height_m, &config.features)?;
        let v: Vec<f64> = self
            .intrinsics
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .context("intrinsics must be four numbers")?;
        let [fx, fy, cx, cy] = v[..] else {
            bail!("intrinsics must be four numbers fx,fy,cx,cy");
        };
        Ok((config, template, CameraIntrinsics::new(fx, fy, cx, cy)?))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_range(s: &str) -> Result<std::ops::Range<usize>> {
    let (a, b) = s.split_once("..").context("blackout must look like 150..155")?;
    Ok(a.trim().parse()?..b.trim().parse()?)
}

fn build_spec(
    trajectory: &str,
    frames: usize,
    seed: u64,
    noise: f64,
    blackout: Option<&str>,
) -> Result<(TrajectorySpec, Option<Vec<f64>>)> {
    let mut spec = if trajectory == "orbit" {
        TrajectorySpec::orbit(Orbit::standard(frames), noise, seed)
    } else {
        let poses = poses_from_csv(&read(Path::new(trajectory))?)?;
        let poses: Option<Vec<_>> = poses.into_iter().collect();
        let Some(poses) = poses else {
            bail!("{trajectory}: every frame needs a pose row");
        };
        TrajectorySpec {
            trajectory: Trajectory::Poses(poses),
            noise_sigma: noise,
            blackout: None,
            background: Background::Texture(seed ^ 0x5eed),
            seed,
        }
    };
    spec.blackout = blackout.map(parse_range).transpose()?;
    let elevations = match &spec.trajectory {
        Trajectory::Orbit(o) => Some((0..o.frames).map(|i| o.angles(i).0).collect()),
        Trajectory::Poses(_) => None,
    };
    Ok((spec, elevations))
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.digits$}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Benchmark { setup, frames, trajectory, seed, noise, blackout, out } => {
            let (config, template, k) = setup.load()?;
            let (spec, elevations) = build_spec(&trajectory, frames, seed, noise, blackout.as_deref())?;
            let seq = render_sequence(&template, &spec, &k, (320, 240))?;
            let m = evaluate_with_elevations(&config, &template, &k, &seq, elevations.as_deref())?;
            fs::write(&out, m.to_csv()).with_context(|| format!("writing {}", out.display()))?;
            println!("frames               {}", m.rows.len());
            println!("first acquisition    {}", m.first_acquisition.map_or("never".into(), |f| f.to_string()));
            println!("pose found rate      {:.3}", m.pose_found_rate);
            println!("mean corner error px {}", fmt_opt(m.mean_corner_err_px, 3));
            println!("mean rotation err    {} deg", fmt_opt(m.mean_rot_err_deg, 3));
            println!("mean translation err {} m", fmt_opt(m.mean_trans_err_m, 4));
            println!("re-acquisition       {:?}", m.reacquisition_latency);
            println!("min elevation        {}", fmt_opt(m.min_elevation_deg, 1));
            for (name, s) in [("detecting", &m.detecting), ("tracking", &m.tracking)] {
                println!("{name:<10} frames {:>4}  mean stage us {:>9.1}  p95 {:>9.1}", s.frames, s.mean[6], s.p95[6]);
            }
            println!("metrics written to {}", out.display());
        }
        Command::SweepAngle { setup, out } => {
            let (config, template, k) = setup.load()?;
            let outcome = sweep_min_angle_with(&config, &template, &k, &SweepParams::default())?;
            let text = outcome.min_angle_deg.map_or_else(|| "none".to_string(), |a| format!("{a}"));
            fs::write(&out, format!("{text}\n")).with_context(|| format!("writing {}", out.display()))?;
            println!("minimum elevation: {text}");
        }
        Command::Render { setup, trajectory, frames, seed, noise, blackout, out_dir } => {
            let (_, template, k) = setup.load()?;
            let (spec, _) = build_spec(&trajectory, frames, seed, noise, blackout.as_deref())?;
            let seq = render_sequence(&template, &spec, &k, (320, 240))?;
            fs::create_dir_all(&out_dir)?;
            for (i, f) in seq.frames.iter().enumerate() {
                write_pgm(out_dir.join(format!("frame_{i:04}.pgm")), f)?;
            }
            fs::write(out_dir.join("poses.csv"), poses_to_csv(&seq.poses))?;
            println!("wrote {} frames to {}", seq.len(), out_dir.display());
        }
        Command::Target { out } => write_pgm(&out, &default_target_image())?,
        Command::DumpPattern => {
            let mut csv = String::from("index,x1,y1,x2,y2\n");
            for (i, p) in PATTERN.iter().enumerate() {
                csv.push_str(&format!("{i},{},{},{},{}\n", p[0], p[1], p[2], p[3]));
            }
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = std::io::stdout().lock().write_all(csv.as_bytes());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
