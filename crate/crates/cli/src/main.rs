//! `hair`: build HAIRs from detection files, run resampling sweeps and
//! produce density reports and overlays.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hair_core::density::evaluate_density;
use hair_core::io;
use hair_core::render::{render_svg, RenderOptions};
use hair_core::resampling::{run_sweep, select_parameters, NRule, SelectionThresholds};
use hair_core::synth::generate_camera;
use hair_core::{hair_error, identify_hair, CameraDataset, EmptyRegionPolicy, RapConfig, ZeroRecallMode};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hair", version, about = "High-accuracy identification regions for fixed traffic cameras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic camera dataset from a spec file
    Synth(SynthArgs),
    /// Identify the HAIR of a camera
    Identify(IdentifyArgs),
    /// Resampling sweep over image counts and maximal depths
    Sweep(SweepArgs),
    /// Pick the final depth and image count from a sweep grid
    Select(SelectArgs),
    /// HAIR error on held-out images
    Error(ErrorArgs),
    /// Density report over the full extent and the HAIR
    Density(DensityArgs),
    /// SVG overlay of one image
    Render(RenderArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Number of images to generate
    #[arg(long)]
    images: usize,
    /// Overrides the seed stored in the spec
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `all`, a count of leading images, or comma-separated image ids
    #[arg(long, default_value = "all")]
    images: String,
    #[arg(long, default_value_t = 0.75)]
    a0: f64,
    #[arg(long)]
    max_depth: usize,
    #[arg(long, value_enum, default_value_t = Convention::Counted)]
    convention: Convention,
    #[arg(long, value_enum, default_value_t = EmptyPolicy::Exclude)]
    empty_policy: EmptyPolicy,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed stored in the config
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    delta_depth: f64,
    #[arg(long, default_value_t = 0.001)]
    delta_n: f64,
    #[arg(long, value_enum, default_value_t = NRuleArg::CandidateOnly)]
    n_rule: NRuleArg,
}

#[derive(Args)]
struct ErrorArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    hair: PathBuf,
    /// Held-out images: `all`, a count, or comma-separated ids
    #[arg(long)]
    images: String,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    roads: PathBuf,
    #[arg(long)]
    hair: Option<PathBuf>,
    #[arg(long)]
    images: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    hair: Option<PathBuf>,
    #[arg(long)]
    roads: Option<PathBuf>,
    #[arg(long)]
    image: String,
    /// Link to the camera frame, drawn under the overlay
    #[arg(long)]
    background: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Counted,
    Zeroed,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmptyPolicy {
    Include,
    Exclude,
}

#[derive(Clone, Copy, ValueEnum)]
enum NRuleArg {
    CandidateOnly,
    AllLarger,
}

enum Failure {
    Usage(String),
    Core(hair_core::Error),
}

impl From<hair_core::Error> for Failure {
    fn from(e: hair_core::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn snapshot(command: &str, config: serde_json::Value) {
    eprintln!("hair {command}: {}", json!({ "command": command, "config": config }));
}

/// `all`, a positive count of leading images, or a comma-separated id list.
/// A bare number that is also an image id is read as the id.
fn resolve_images(d: &CameraDataset, sel: &str) -> Result<Vec<String>, Failure> {
    let all = d.image_ids();
    if sel == "all" {
        return Ok(all);
    }
    if let Ok(n) = sel.parse::<usize>() {
        if d.image(sel).is_none() {
            if n == 0 || n > all.len() {
                return Err(hair_core::Error::Config(format!(
                    "requested {n} images but the dataset has {}",
                    all.len()
                ))
                .into());
            }
            return Ok(all[..n].to_vec());
        }
    }
    let ids: Vec<String> = sel.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if ids.is_empty() {
        return Err(Failure::Usage("--images is empty".into()));
    }
    d.select(&ids)?;
    Ok(ids)
}

fn synth(a: SynthArgs) -> Outcome {
    let mut spec = io::load_synth_spec(&a.spec)?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    snapshot("synth", json!({ "spec": spec, "images": a.images, "out": a.out }));
    let d = generate_camera(&spec, a.images)?;
    io::save_dataset(&d, &a.out)?;
    println!("wrote {} images to {}", d.images.len(), a.out.display());
    Ok(())
}

fn identify(a: IdentifyArgs) -> Outcome {
    let d = io::load_dataset(&a.dataset)?;
    let ids = resolve_images(&d, &a.images)?;
    let cfg = RapConfig::default()
        .with_a0(a.a0)
        .with_mode(match a.convention {
            Convention::Counted => ZeroRecallMode::Counted,
            Convention::Zeroed => ZeroRecallMode::Zeroed,
        })
        .with_policy(match a.empty_policy {
            EmptyPolicy::Include => EmptyRegionPolicy::Include,
            EmptyPolicy::Exclude => EmptyRegionPolicy::Exclude,
        });
    snapshot(
        "identify",
        json!({ "dataset": a.dataset, "images": ids.len(), "max_depth": a.max_depth, "rap": cfg, "out": a.out }),
    );
    let h = identify_hair(&d, &ids, &cfg, a.max_depth)?;
    io::save_hair(&h, &a.out)?;
    let frac = h.covered_area() / d.extent().area();
    println!("leaves: {}", h.leaf_paths().iter().map(|p| if p.is_empty() { "root" } else { p }).collect::<Vec<_>>().join(" "));
    println!("coverage: {frac:.4}");
    Ok(())
}

fn sweep(a: SweepArgs) -> Outcome {
    let d = io::load_dataset(&a.dataset)?;
    let mut cfg = io::load_sweep_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    snapshot("sweep", json!({ "dataset": a.dataset, "sweep": cfg, "threads": rayon::current_num_threads(), "out": a.out }));
    let g = run_sweep(&d, &cfg)?;
    io::save_sweep(&g, &a.out)?;
    print!("{}", g.to_tsv());
    Ok(())
}

fn select(a: SelectArgs) -> Outcome {
    let g = io::load_sweep(&a.grid)?;
    let t = SelectionThresholds {
        delta_depth: a.delta_depth,
        delta_n: a.delta_n,
        n_rule: match a.n_rule {
            NRuleArg::CandidateOnly => NRule::CandidateOnly,
            NRuleArg::AllLarger => NRule::AllLarger,
        },
    };
    snapshot("select", json!({ "grid": a.grid, "thresholds": t }));
    let c = select_parameters(&g, &t)?;
    println!("d0* = {}", c.d0_star);
    println!("N* = {}", c.n_star);
    Ok(())
}

fn error(a: ErrorArgs) -> Outcome {
    let d = io::load_dataset(&a.dataset)?;
    let h = io::load_hair(&a.hair)?;
    let ids = resolve_images(&d, &a.images)?;
    snapshot("error", json!({ "dataset": a.dataset, "hair": a.hair, "images": ids, "rap": h.convention }));
    let e = hair_error(&h, &d.select(&ids)?, &h.convention)?;
    println!("acc1 = {}", e.acc1);
    println!("acc2 = {}", e.acc2);
    println!("e = {}", e.e);
    Ok(())
}

fn density(a: DensityArgs) -> Outcome {
    let d = io::load_dataset(&a.dataset)?;
    let roads = io::load_roads(&a.roads)?;
    let h = a.hair.as_ref().map(io::load_hair).transpose()?;
    let ids = resolve_images(&d, &a.images)?;
    snapshot("density", json!({ "dataset": a.dataset, "roads": a.roads, "hair": a.hair, "images": ids.len(), "out": a.out }));
    let report = evaluate_density(&d, &ids, h.as_ref(), &roads)?;
    io::save_report(&report, &a.out)?;
    for s in &report.summaries {
        println!("{}: road length {} {}, RMSE {}", s.scope, s.road_length, report.unit, s.rmse);
    }
    Ok(())
}

fn render(a: RenderArgs) -> Outcome {
    let d = io::load_dataset(&a.dataset)?;
    let h = a.hair.as_ref().map(io::load_hair).transpose()?;
    let roads = a.roads.as_ref().map(io::load_roads).transpose()?;
    snapshot("render", json!({ "dataset": a.dataset, "hair": a.hair, "roads": a.roads, "image": a.image, "out": a.out }));
    let cfg = h.as_ref().map(|h| h.convention.clone()).unwrap_or_default();
    let opts = RenderOptions { hair: h.as_ref(), roads: roads.as_ref(), background_href: a.background.as_deref() };
    let svg = render_svg(&d, &a.image, &cfg, &opts)?;
    fs::write(&a.out, svg).map_err(hair_core::Error::from)?;
    Ok(())
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("HAIR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("HAIR_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Synth(a) => synth(a),
        Command::Identify(a) => identify(a),
        Command::Sweep(a) => sweep(a),
        Command::Select(a) => select(a),
        Command::Error(a) => error(a),
        Command::Density(a) => density(a),
        Command::Render(a) => render(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 3 } else { 4 })
        }
    }
}
