//! `inner`: pipeline stages and the experiment harness.
//!
//! Exit status is 0 on success, 1 when a checked threshold fails, and 2 on
//! any error.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use inner_series::estimate::{accumulate_moments, build_grid, default_min_count, estimate_velocity, DiffScheme};
use inner_series::experiment::{
    default_monotone_transform, run_experiment, Comparison, Experiment, ExperimentConfig, ExperimentReport, AUDIO_DT,
    SINE_DT,
};
use inner_series::frames::{build_frame_field, FrameOptions};
use inner_series::ingest::{
    apply_transform, distort_lift, gen_broadband, gen_lifted_latent, gen_sine, gen_sources, mix_two_sources, pca_embed,
    TransformSpec, LIFT_DIM,
};
use inner_series::model::{apply_signed_permutation, BinGrid, FrameField, Trajectory, VelocitySeries, WeightSeries};
use inner_series::plot::{plot_svg, PlotSeries};
use inner_series::reconstruct::integrate_weights;
use inner_series::serial::{read_json, write_json, FrameFieldFile, GridFile, MomentsFile};
use inner_series::weights::{align_weight_series, compute_weights, separability_report, SeparabilityThresholds};
use serde_json::json;

use crate::io::{
    read_trajectory, read_velocity, read_weights, time_source, write_json_value, write_trajectory, write_velocity,
    write_weights, Format,
};

#[derive(Parser)]
#[command(
    name = "inner",
    version,
    about = "Sensor-independent weight series from multichannel trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trajectory.
    Synth(SynthArgs),
    /// Finite-difference velocities of a trajectory.
    Velocity(VelocityArgs),
    /// Equal-width state-space grid with per-bin counts.
    Grid(GridArgs),
    /// Per-bin second- and fourth-order velocity moments.
    Moments(MomentsArgs),
    /// Local frames from moments, aligned across the grid.
    Frames(FramesArgs),
    /// Weight series of a trajectory in a frame field.
    Weights(WeightsArgs),
    /// Best signed permutation matching one weight series to another.
    Align(AlignArgs),
    /// Match mixture weights against per-source weights.
    Separability(SeparabilityArgs),
    /// Integrate weights back into a trajectory.
    Reconstruct(ReconstructArgs),
    /// Run one experiment, or all of them, and write reports.
    Experiment(ExperimentArgs),
    /// Render series as stacked SVG line plots.
    Plot(PlotArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Trajectory file (.csv, .wav or .json).
    #[arg(long, short)]
    input: PathBuf,
    /// CSV column holding uniformly spaced timestamps.
    #[arg(long, default_value = "t")]
    time_column: String,
    /// Fixed sample interval; every CSV column is then a channel.
    #[arg(long)]
    dt: Option<f64>,
}

impl InputArgs {
    fn load(&self) -> Result<Trajectory> {
        read_trajectory(&self.input, &time_source(&self.time_column, self.dt))
            .with_context(|| format!("reading {}", self.input.display()))
    }
}

#[derive(Args)]
struct SchemeArg {
    #[arg(long, value_enum, default_value_t = Scheme::Central)]
    scheme: Scheme,
}

#[derive(Args)]
struct VelocitySource {
    #[command(flatten)]
    scheme: SchemeArg,
    /// Precomputed velocity file; `--scheme` is ignored when given.
    #[arg(long)]
    velocity: Option<PathBuf>,
}

impl VelocitySource {
    fn velocities(&self, traj: &Trajectory) -> Result<VelocitySeries> {
        match &self.velocity {
            None => Ok(estimate_velocity(traj, self.scheme.scheme.into())?),
            Some(path) => {
                let vel = read_velocity(path).with_context(|| format!("reading velocity {}", path.display()))?;
                if vel.len() != traj.len() || vel.dim() != traj.dim() {
                    bail!(
                        "velocity {} is {}×{}, trajectory is {}×{}",
                        path.display(),
                        vel.len(),
                        vel.dim(),
                        traj.len(),
                        traj.dim()
                    );
                }
                Ok(vel)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scheme {
    Forward,
    Central,
}

impl From<Scheme> for DiffScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Forward => DiffScheme::Forward,
            Scheme::Central => DiffScheme::Central,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, short)]
    out: PathBuf,
    /// Output format; defaults to the extension of `--out`, else CSV.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        Format::resolve(self.format, &self.out)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    /// `a·sin(t)` sampled every `dt`.
    Sine,
    /// Single-channel sum of sinusoids at 16 kHz.
    Broadband,
    /// Broadband signal through the default monotone sensor.
    BroadbandTransformed,
    /// Two-channel latent walk.
    Latent,
    /// Top two principal components of the six-dimensional lift.
    Lifted,
    /// Top two principal components of the distorted lift.
    LiftedDistorted,
    /// Two independent non-Gaussian sources at 16 kHz.
    Sources,
    /// The two sources through the nonlinear mixture.
    Mixture,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sine amplitude.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// JSON transform spec applied to the generated series.
    #[arg(long)]
    transform: Option<PathBuf>,
    /// Keep all six lifted channels instead of the principal components.
    #[arg(long)]
    no_pca: bool,
    /// Scale WAV output to 90% of full scale instead of rounding raw values.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VelocityArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    scheme: SchemeArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    velocity: VelocitySource,
    /// Bins per axis, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    bins: Vec<usize>,
    /// Samples needed for a bin to count as occupied.
    #[arg(long)]
    min_count: Option<usize>,
    /// Grid JSON.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    velocity: VelocitySource,
    #[arg(long)]
    grid: PathBuf,
    /// Moments JSON.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct FramesArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    velocity: VelocitySource,
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    moments: PathBuf,
    /// Relative eigenvalue gap below which a frame is flagged degenerate.
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Smallest-to-largest eigenvalue ratio below which a bin is skipped.
    #[arg(long)]
    cond_tol: Option<f64>,
    /// Frame field JSON.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct WeightsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    velocity: VelocitySource,
    #[arg(long)]
    frames: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AlignArgs {
    /// Weight series to match against.
    #[arg(long)]
    reference: PathBuf,
    /// Weight series to permute.
    #[arg(long)]
    other: PathBuf,
    /// Fail (exit 1) if any aligned correlation falls below this.
    #[arg(long)]
    min_correlation: Option<f64>,
    /// Write the aligned second series here.
    #[arg(long)]
    aligned_out: Option<PathBuf>,
    /// Alignment JSON; printed to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SeparabilityArgs {
    /// Mixture weight series.
    #[arg(long)]
    mixture: PathBuf,
    /// Per-source weight series, stacked in the order given.
    #[arg(long = "source", required = true)]
    sources: Vec<PathBuf>,
    #[arg(long, default_value_t = SeparabilityThresholds::default().min_match)]
    min_match: f64,
    #[arg(long, default_value_t = SeparabilityThresholds::default().max_cross)]
    max_cross: f64,
    /// Report JSON; printed to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    frames: PathBuf,
    /// Starting state, comma-separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    x0: Vec<f64>,
    /// Weight sample at which `x0` applies; defaults to the first valid one.
    #[arg(long)]
    start: Option<usize>,
    /// Euler steps; defaults to every remaining weight sample.
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment name, or `all`.
    name: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    samples: Option<usize>,
    /// Bins per axis, comma-separated.
    #[arg(long, value_delimiter = ',')]
    bins: Option<Vec<usize>>,
    #[arg(long)]
    min_count: Option<usize>,
    #[command(flatten)]
    scheme: SchemeArg,
    /// JSON transform spec for the second sensor of `monotone-1d`.
    #[arg(long)]
    transform: Option<PathBuf>,
    /// Reports and intermediates go to `<out-dir>/<experiment>/`.
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Series files, one panel each (.csv, .wav or .json).
    #[arg(long = "input", short, required = true)]
    inputs: Vec<PathBuf>,
    /// First sample of the window.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Window length in samples.
    #[arg(long, default_value_t = 1000)]
    len: usize,
    /// SVG output.
    #[arg(long, short)]
    out: PathBuf,
}

/// Whether every checked threshold held.
type Verdict = bool;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Verdict> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Velocity(a) => velocity(a),
        Command::Grid(a) => grid(a),
        Command::Moments(a) => moments(a),
        Command::Frames(a) => frames(a),
        Command::Weights(a) => weights(a),
        Command::Align(a) => align(a),
        Command::Separability(a) => separability(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Experiment(a) => experiment(a),
        Command::Plot(a) => plot(a),
    }
}

fn read_transform(path: &Path) -> Result<TransformSpec> {
    read_json(path).with_context(|| format!("reading transform {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<Verdict> {
    let samples = |default: usize| a.samples.unwrap_or(default);
    let lifted = |distort: bool| -> Result<Trajectory> {
        let data = gen_lifted_latent(samples(Experiment::Lifted2d.default_samples()), a.seed)?;
        let lift = if distort {
            data.lifted
                .map_samples(LIFT_DIM, data.lifted.channel_names().to_vec(), |_, y, out| {
                    out.copy_from_slice(&distort_lift(y));
                    Ok(())
                })?
        } else {
            data.lifted
        };
        Ok(if a.no_pca {
            lift
        } else {
            pca_embed(&lift, 2)?.trajectory
        })
    };
    let mut traj = match a.kind {
        SynthKind::Sine => gen_sine(a.amplitude, SINE_DT, samples(Experiment::Sine.default_samples()))?,
        SynthKind::Broadband => gen_broadband(samples(Experiment::Monotone1d.default_samples()), AUDIO_DT, a.seed)?,
        SynthKind::BroadbandTransformed => apply_transform(
            &gen_broadband(samples(Experiment::Monotone1d.default_samples()), AUDIO_DT, a.seed)?,
            &default_monotone_transform(),
        )?,
        SynthKind::Latent => gen_lifted_latent(samples(Experiment::Lifted2d.default_samples()), a.seed)?.latent,
        SynthKind::Lifted => lifted(false)?,
        SynthKind::LiftedDistorted => lifted(true)?,
        SynthKind::Sources => gen_sources(samples(Experiment::Mixture2d.default_samples()), a.seed)?,
        SynthKind::Mixture => mix_two_sources(&gen_sources(samples(Experiment::Mixture2d.default_samples()), a.seed)?)?,
    };
    if let Some(path) = &a.transform {
        traj = apply_transform(&traj, &read_transform(path)?)?;
    }
    write_trajectory(&traj, &a.output.out, a.output.format(), a.normalize)?;
    eprintln!(
        "wrote {} samples × {} channels to {}",
        traj.len(),
        traj.dim(),
        a.output.out.display()
    );
    Ok(true)
}

fn velocity(a: VelocityArgs) -> Result<Verdict> {
    let traj = a.input.load()?;
    let vel = estimate_velocity(&traj, a.scheme.scheme.into())?;
    write_velocity(&vel, &a.output.out, a.output.format())?;
    Ok(true)
}

fn grid(a: GridArgs) -> Result<Verdict> {
    let traj = a.input.load()?;
    let vel = a.velocity.velocities(&traj)?;
    let min_count = a.min_count.unwrap_or(default_min_count(traj.dim()));
    let grid = build_grid(&traj, Some(vel.valid_mask()), &a.bins, min_count)?;
    write_json(&GridFile::from_grid(&grid), &a.out)?;
    eprintln!(
        "{} of {} bins occupied (min count {min_count})",
        grid.occupied_bins().count(),
        grid.bin_count()
    );
    Ok(true)
}

fn load_grid(
    input: &InputArgs,
    velocity: &VelocitySource,
    path: &Path,
) -> Result<(Trajectory, VelocitySeries, BinGrid)> {
    let traj = input.load()?;
    let vel = velocity.velocities(&traj)?;
    let file: GridFile = read_json(path).with_context(|| format!("reading grid {}", path.display()))?;
    let grid = file
        .apply(&traj, Some(vel.valid_mask()))
        .with_context(|| format!("applying grid {}", path.display()))?;
    Ok((traj, vel, grid))
}

fn moments(a: MomentsArgs) -> Result<Verdict> {
    let (traj, vel, grid) = load_grid(&a.input, &a.velocity, &a.grid)?;
    let moments = accumulate_moments(&traj, &vel, &grid)?;
    write_json(&MomentsFile::from_moments(traj.dim(), &moments), &a.out)?;
    Ok(true)
}

fn frames(a: FramesArgs) -> Result<Verdict> {
    let (_, _, grid) = load_grid(&a.input, &a.velocity, &a.grid)?;
    let file: MomentsFile =
        read_json(&a.moments).with_context(|| format!("reading moments {}", a.moments.display()))?;
    let moments = file.to_moments()?;
    if let Some((bin, m)) = moments.iter().find(|(b, m)| grid.count(**b) != m.count) {
        bail!(
            "moments for bin {bin} cover {} samples, grid has {}",
            m.count,
            grid.count(*bin)
        );
    }
    let defaults = FrameOptions::default();
    let opts = FrameOptions {
        gap_tol: a.gap_tol.unwrap_or(defaults.gap_tol),
        cond_tol: a.cond_tol.unwrap_or(defaults.cond_tol),
    };
    let (field, skipped) = build_frame_field(&grid, &moments, &opts)?;
    for (bin, err) in &skipped {
        eprintln!("bin {bin} skipped: {err}");
    }
    write_json(&FrameFieldFile::from_field(&field), &a.out)?;
    eprintln!(
        "{} frames, {} degenerate, {} component(s)",
        field.frames.len(),
        field.frames.values().filter(|f| f.degenerate).count(),
        field.components
    );
    Ok(true)
}

fn load_field(path: &Path) -> Result<FrameField> {
    let file: FrameFieldFile = read_json(path).with_context(|| format!("reading frames {}", path.display()))?;
    Ok(file.to_field()?)
}

fn weights(a: WeightsArgs) -> Result<Verdict> {
    let traj = a.input.load()?;
    let vel = a.velocity.velocities(&traj)?;
    let field = load_field(&a.frames)?;
    let w = compute_weights(&traj, &vel, &field)?;
    write_weights(&w, &a.output.out, a.output.format())?;
    let fallback = w.fallback_mask().iter().filter(|f| **f).count();
    eprintln!(
        "{} of {} samples valid, {fallback} from the nearest framed bin",
        w.valid_count(),
        w.len()
    );
    Ok(true)
}

fn align(a: AlignArgs) -> Result<Verdict> {
    let w = read_weights(&a.reference)?;
    let wprime = read_weights(&a.other)?;
    let alignment = align_weight_series(&w, &wprime)?;
    if let Some(path) = &a.aligned_out {
        let aligned = apply_signed_permutation(&alignment.permutation, &wprime)?;
        write_weights(&aligned, path, Format::resolve(None, path))?;
    }
    let pass = a
        .min_correlation
        .is_none_or(|t| alignment.correlations.iter().all(|c| *c >= t));
    let mut value = serde_json::to_value(&alignment)?;
    if let Some(t) = a.min_correlation {
        value["min_correlation"] = json!(t);
        value["pass"] = json!(pass);
    }
    write_json_value(&value, a.out.as_deref())?;
    Ok(pass)
}

fn separability(a: SeparabilityArgs) -> Result<Verdict> {
    let mixture = read_weights(&a.mixture)?;
    let sources = a
        .sources
        .iter()
        .map(|p| read_weights(p))
        .collect::<Result<Vec<WeightSeries>>>()?;
    let refs: Vec<&WeightSeries> = sources.iter().collect();
    let thresholds = SeparabilityThresholds {
        min_match: a.min_match,
        max_cross: a.max_cross,
    };
    let report = separability_report(&mixture, &refs, thresholds)?;
    write_json_value(&serde_json::to_value(&report)?, a.out.as_deref())?;
    Ok(report.pass)
}

fn reconstruct(a: ReconstructArgs) -> Result<Verdict> {
    let w = read_weights(&a.weights)?;
    let field = load_field(&a.frames)?;
    let start = match a.start {
        Some(k) => k,
        None => (0..w.len())
            .find(|&k| w.is_valid(k))
            .context("no valid weight samples")?,
    };
    if start >= w.len() {
        bail!("start {start} is past the {} weight samples", w.len());
    }
    let w = w.slice(start, w.len())?;
    let steps = a.steps.unwrap_or(w.len());
    let recon = integrate_weights(&w, &field, &a.x0, steps)?;
    if recon.truncated {
        eprintln!("stopped after {} of {steps} steps", recon.trajectory.len() - 1);
    }
    write_trajectory(&recon.trajectory, &a.output.out, a.output.format(), false)?;
    Ok(true)
}

fn format_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        format!("{v:.6}")
    }
}

fn print_report(report: &ExperimentReport) {
    for c in &report.criteria {
        let relation = match c.comparison {
            Comparison::AtLeast => ">=",
            Comparison::Below => "<",
        };
        println!(
            "{} {} [{}] {} ({relation} {})",
            report.experiment,
            c.id,
            if c.pass { "PASS" } else { "FAIL" },
            format_value(c.value),
            if c.threshold.abs() < 1e-3 {
                format!("{:e}", c.threshold)
            } else {
                c.threshold.to_string()
            }
        );
    }
}

fn experiment(a: ExperimentArgs) -> Result<Verdict> {
    let selected: Vec<Experiment> = if a.name == "all" {
        Experiment::ALL.to_vec()
    } else {
        vec![a.name.parse()?]
    };
    let config = ExperimentConfig {
        seed: a.seed,
        samples: a.samples,
        bins: a.bins.clone(),
        min_count: a.min_count,
        scheme: a.scheme.scheme.into(),
        transform: a.transform.as_deref().map(read_transform).transpose()?,
        frame: FrameOptions::default(),
        out_dir: Some(a.out_dir.clone()),
    };
    let mut pass = true;
    for e in selected {
        let report = run_experiment(e, &config).with_context(|| format!("experiment {e}"))?;
        print_report(&report);
        eprintln!("report: {}", a.out_dir.join(e.name()).join("report.json").display());
        pass &= report.pass;
    }
    Ok(pass)
}

fn plot(a: PlotArgs) -> Result<Verdict> {
    let series = a
        .inputs
        .iter()
        .map(|p| {
            let label = p
                .file_stem()
                .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok(PlotSeries::from_weights(label, &read_weights(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    plot_svg(&series, a.start..a.start + a.len, &a.out)?;
    Ok(true)
}
