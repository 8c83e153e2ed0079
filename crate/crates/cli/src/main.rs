use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use triodlab::diagnostics::{default_tau0, default_window, diagnose, DiagnoseOptions};
use triodlab::excess::{
    decay_profile, default_min_gap, holder_exponent, track_junctions, HolderFit, JunctionTrack,
    TrackConfig, Window,
};
use triodlab::flowsim::{run, FlowTrajectory, ScenarioConfig};
use triodlab::io::{load_trajectory, save_trajectory, write_classification_csv, TrajectoryFiles};
use triodlab::monotone::{
    default_taus, density_limit, representatives, stratify, ClassifyConfig, SpacetimeGrid,
};
use triodlab::varifold::Ball;

/// Network curvature flow and Brakke-flow diagnostics.
#[derive(Parser)]
#[command(name = "triodlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario file into a trajectory.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Window diagnostics as CSV.
    Diagnose {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        #[arg(long)]
        tau0: Option<f64>,
    },
    /// Tangent-flow labels over a space-time grid, as CSV with one row per
    /// cluster of adjacent grid points.
    ///
    /// The grid covers the square of half-width R about the window center
    /// and the times [s - R^2, s], clipped to start tau0 after the
    /// trajectory does.
    Classify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.01)]
        tau0: f64,
        /// Grid size "nx,ny,nt".
        #[arg(long, default_value = "16,16,5")]
        grid: String,
    },
    /// Excess decay profile as JSON.
    Decay {
        #[command(flatten)]
        input: Input,
        /// Scales "s1,s2,..."; defaults to R, R/2, R/4 of the window.
        #[arg(long)]
        scales: Option<String>,
    },
    /// Junction track and density profile as JSON.
    Export {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        tau0: Option<f64>,
    },
}

#[derive(Args)]
struct Input {
    /// Trajectory file (`<stem>.jsonl`).
    #[arg(long)]
    traj: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Window "cx,cy,s,R"; defaults to one fitted to the trajectory.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
}

struct Loaded {
    traj: FlowTrajectory,
    window: Window,
    id: String,
}

impl Input {
    fn load(&self, command: &str, extra: &str) -> Result<Loaded> {
        let traj = load_trajectory(&self.traj)
            .with_context(|| format!("cannot load trajectory {}", self.traj.display()))?;
        let window = match &self.window {
            Some(text) => text.parse::<Window>()?,
            None => default_window(&traj).context("cannot choose a default window")?,
        };
        let id = run_id(
            &self.traj,
            &format!("{command};{};{extra}", self.window.as_deref().unwrap_or("")),
        )?;
        Ok(Loaded { traj, window, id })
    }
}

/// `<stem>-<digest>`, where the digest covers the input file and the
/// options, so repeated invocations reuse names and distinct ones do not
/// collide.
fn run_id(input: &Path, options: &str) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut bytes = Vec::new();
    File::open(input)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .with_context(|| format!("cannot read {}", input.display()))?;
    hasher.update(&bytes);
    hasher.update(options.as_bytes());
    let digest = hasher.finalize();
    let name = input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.split('.').next().unwrap_or("run");
    let hex: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("{stem}-{hex}"))
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad {what} '{text}'"))
        })
        .collect()
}

fn create(out: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let path = out.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

fn write_json(out: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    let (path, mut w) = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

fn cmd_run(scenario: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = ScenarioConfig::load(scenario)?;
    let sc = cfg
        .build()
        .with_context(|| format!("scenario {}", scenario.display()))?;
    let traj = run(&sc).with_context(|| format!("integrating {}", scenario.display()))?;
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let files = TrajectoryFiles::new(out, &run_id(scenario, "run")?);
    save_trajectory(&traj, &files)?;
    for p in [&files.snapshots, &files.events, &files.meta] {
        println!("{}", p.display());
    }
    if let Some(ev) = traj.events.first() {
        let p = ev.event.location();
        eprintln!(
            "halted at t = {}: {} at ({}, {})",
            ev.t,
            ev.event.kind(),
            p.x,
            p.y
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagnose(input: &Input, kappa: f64, tau0: Option<f64>) -> Result<()> {
    let l = input.load("diagnose", &format!("{kappa};{tau0:?}"))?;
    let opts = DiagnoseOptions {
        kappa,
        tau0,
        ..Default::default()
    };
    let report = diagnose(&l.traj, &l.window, &opts)?;
    let (path, w) = create(&input.out, &format!("{}.diagnostics.csv", l.id))?;
    report.write_csv(w)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_classify(input: &Input, tau0: f64, grid: &str) -> Result<()> {
    let n: Vec<usize> = grid
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad grid '{grid}'"))
        })
        .collect::<Result<_>>()?;
    let [nx, ny, nt] = n[..] else {
        bail!("grid '{grid}' must be 'nx,ny,nt'");
    };
    let l = input.load("classify", &format!("{tau0};{grid}"))?;
    let w = &l.window;
    let t0 = (w.s - w.r * w.r).max(l.traj.t_start() + tau0);
    let g = SpacetimeGrid::around(w.center, w.r, (t0.min(w.s), w.s), (nx, ny, nt));
    let points = stratify(&l.traj, &g, &ClassifyConfig::with_tau0(tau0))
        .with_context(|| format!("classifying window {w}"))?;
    let points = representatives(&points, &g);
    let (path, out) = create(&input.out, &format!("{}.classification.csv", l.id))?;
    write_classification_csv(out, &points)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_decay(input: &Input, scales: Option<&str>) -> Result<()> {
    let l = input.load("decay", scales.unwrap_or(""))?;
    let w = &l.window;
    let scales = match scales {
        Some(text) => parse_list(text, "scales")?,
        None => vec![w.r, 0.5 * w.r, 0.25 * w.r],
    };
    let profile = decay_profile(&l.traj, w.center, w.s, &scales)
        .with_context(|| format!("decay profile at window {w}"))?;
    let path = write_json(&input.out, &format!("{}.decay.json", l.id), &profile)?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct TrackExport {
    window: Window,
    track: JunctionTrack,
    holder: Option<HolderFit>,
}

fn cmd_export(input: &Input, tau0: Option<f64>) -> Result<()> {
    let l = input.load("export", &format!("{tau0:?}"))?;
    let w = l.window;
    let track = track_junctions(&l.traj, &Ball::new(w.center, w.r), &TrackConfig::default())?;
    let holder = holder_exponent(&track, default_min_gap(&track)).ok();
    let path = write_json(
        &input.out,
        &format!("{}.track.json", l.id),
        &TrackExport {
            window: w,
            track,
            holder,
        },
    )?;
    println!("{}", path.display());
    let tau0 = tau0.unwrap_or_else(|| default_tau0(&l.traj, &w));
    let density = density_limit(&l.traj, w.center, w.s, &default_taus(tau0))
        .with_context(|| format!("density at window {w}"))?;
    let path = write_json(&input.out, &format!("{}.density.json", l.id), &density)?;
    println!("{}", path.display());
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TRIODLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("TRIODLAB_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("TRIODLAB_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match &cli.command {
        Command::Run { scenario, out } => return cmd_run(scenario, out),
        Command::Diagnose { input, kappa, tau0 } => cmd_diagnose(input, *kappa, *tau0)?,
        Command::Classify { input, tau0, grid } => cmd_classify(input, *tau0, grid)?,
        Command::Decay { input, scales } => cmd_decay(input, scales.as_deref())?,
        Command::Export { input, tau0 } => cmd_export(input, *tau0)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
