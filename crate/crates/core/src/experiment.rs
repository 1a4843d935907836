//! End-to-end runs comparing the weights seen through two different sensors,
//! with a JSON report of metrics and pass/fail per acceptance threshold.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::estimate::{accumulate_moments, build_grid, default_min_count, estimate_velocity, DiffScheme};
use crate::frames::{build_frame_field, frame_residuals, FrameOptions};
use crate::ingest::{
    apply_transform, distort_lift, gen_broadband, gen_lifted_latent, gen_sine, gen_sources, mix_two_sources, pca_embed,
    write_csv_trajectory, write_csv_velocity, write_csv_weights, TransformSpec, LIFT_DIM,
};
use crate::model::{
    apply_signed_permutation, default_names, BinGrid, FrameField, LocalMoments, SignedPermutation, Trajectory,
    VelocitySeries, WeightSeries,
};
use crate::plot::{plot_svg, PlotSeries};
use crate::reconstruct::integrate_weights;
use crate::serial::{write_json, FrameFieldFile, GridFile, MomentsFile};
use crate::weights::{align_weight_series, compute_weights, separability_report, SeparabilityThresholds};

pub const REPORT_SCHEMA: &str = "inner-series/report/1";

/// Frame-condition tolerances checked on every framed bin.
pub const WHITENING_TOL: f64 = 1e-10;
pub const CONTRACTION_TOL: f64 = 1e-8;

/// Sample interval of the sine experiment.
pub const SINE_DT: f64 = 0.01;
/// Sample interval of the broadband and source signals (16 kHz).
pub const AUDIO_DT: f64 = 1.0 / 16000.0;
const SINE_MATCH_LIMIT: f64 = 0.95;
const RECONSTRUCTION_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "sine")]
    Sine,
    #[serde(rename = "monotone-1d")]
    Monotone1d,
    #[serde(rename = "lifted-2d")]
    Lifted2d,
    #[serde(rename = "mixture-2d")]
    Mixture2d,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Sine,
        Experiment::Monotone1d,
        Experiment::Lifted2d,
        Experiment::Mixture2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sine => "sine",
            Experiment::Monotone1d => "monotone-1d",
            Experiment::Lifted2d => "lifted-2d",
            Experiment::Mixture2d => "mixture-2d",
        }
    }

    pub fn default_samples(self) -> usize {
        match self {
            Experiment::Sine => 100_000,
            Experiment::Monotone1d => 500_000,
            Experiment::Lifted2d => 200_000,
            Experiment::Mixture2d => 500_000,
        }
    }

    fn min_samples(self) -> usize {
        match self {
            Experiment::Sine => 2 * RECONSTRUCTION_STEPS,
            _ => 10_000,
        }
    }

    /// Bins per axis of the measured arm; the mixture's sources take one entry each.
    pub fn default_bins(self) -> Vec<usize> {
        match self {
            Experiment::Sine | Experiment::Monotone1d => vec![128],
            Experiment::Lifted2d => vec![4, 4],
            Experiment::Mixture2d => vec![16, 16],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment '{s}'")))
    }
}

/// The nonlinear sensor used by `monotone-1d` unless overridden.
pub fn default_monotone_transform() -> TransformSpec {
    // derivative 1 + 0.6x + 1.2x² stays above 0.92 on [-1, 1]
    TransformSpec::MonotonePolynomial {
        coeffs: vec![0.0, 1.0, 0.3, 0.4],
        domain: (-1.0, 1.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub samples: Option<usize>,
    pub bins: Option<Vec<usize>>,
    pub min_count: Option<usize>,
    pub scheme: DiffScheme,
    /// Second sensor for `monotone-1d`.
    pub transform: Option<TransformSpec>,
    pub frame: FrameOptions,
    /// Where the report and intermediates go; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            samples: None,
            bins: None,
            min_count: None,
            scheme: DiffScheme::default(),
            transform: None,
            frame: FrameOptions::default(),
            out_dir: None,
        }
    }
}

/// The configuration actually used, with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub samples: usize,
    pub dt: f64,
    pub scheme: DiffScheme,
    /// Bins per axis for each arm.
    pub bins: BTreeMap<String, Vec<usize>>,
    pub min_count: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformSpec>,
    pub frame: FrameOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    AtLeast,
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl Criterion {
    fn new(id: &str, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let pass = match comparison {
            Comparison::AtLeast => value >= threshold,
            Comparison::Below => value < threshold,
        };
        Self {
            id: id.into(),
            value,
            comparison,
            threshold,
            pass,
        }
    }
}

/// Per-arm pipeline diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub name: String,
    pub dim: usize,
    pub occupied_bins: usize,
    pub framed_bins: usize,
    pub skipped_bins: usize,
    pub degenerate_bins: usize,
    pub components: usize,
    pub valid_weights: usize,
    pub fallback_weights: usize,
    /// Largest `‖M c2 Mᵀ − I‖∞` over framed bins.
    pub max_whitening_residual: f64,
    /// Largest off-diagonal of the transformed contraction relative to `max|d|`.
    pub max_contraction_residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_match_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c11_max_abs_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<SignedPermutation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aligned_correlations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_correlation: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub explained_variance: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction_relative_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction_truncated: Option<bool>,
    pub arms: Vec<ArmSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub experiment: Experiment,
    pub config: ConfigEcho,
    pub metrics: Metrics,
    pub criteria: Vec<Criterion>,
    /// Artifact role → file name inside the experiment directory.
    pub artifacts: BTreeMap<String, String>,
    pub pass: bool,
}

/// `sgn(a · cos t)` for each time, with exact zeros of the cosine (to
/// round-off in `t`) emitted as 0.
pub fn analytic_sine_weights(a: f64, times: &[f64]) -> Result<WeightSeries> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("amplitude must be non-zero, got {a}")));
    }
    let values: Vec<f64> = times
        .iter()
        .map(|&t| {
            let c = t.cos();
            if c.abs() <= 2.0 * f64::EPSILON * t.abs().max(1.0) {
                0.0
            } else {
                (a * c).signum()
            }
        })
        .collect();
    let dt = match times {
        [t0, t1, ..] if t1 > t0 => t1 - t0,
        _ => 1.0,
    };
    let len = values.len();
    WeightSeries::new(values, 1, dt, vec![true; len])
}

struct Arm {
    name: &'static str,
    traj: Trajectory,
    vel: VelocitySeries,
    grid: BinGrid,
    moments: BTreeMap<usize, LocalMoments>,
    field: FrameField,
    skipped: usize,
    weights: WeightSeries,
}

impl Arm {
    fn run(
        name: &'static str,
        traj: Trajectory,
        bins: &[usize],
        min_count: usize,
        cfg: &ExperimentConfig,
    ) -> Result<Arm> {
        let vel = estimate_velocity(&traj, cfg.scheme).stage("velocity")?;
        let grid = build_grid(&traj, Some(vel.valid_mask()), bins, min_count).stage("grid")?;
        let moments = accumulate_moments(&traj, &vel, &grid).stage("moments")?;
        let (field, skipped) = build_frame_field(&grid, &moments, &cfg.frame).stage("frames")?;
        let weights = compute_weights(&traj, &vel, &field).stage("weights")?;
        Ok(Arm {
            name,
            traj,
            vel,
            grid,
            moments,
            field,
            skipped: skipped.len(),
            weights,
        })
    }

    fn summary(&self) -> ArmSummary {
        let (mut whitening, mut contraction) = (0.0f64, 0.0f64);
        for (bin, frame) in &self.field.frames {
            let (w, c) = frame_residuals(frame, &self.moments[bin]);
            whitening = whitening.max(w);
            contraction = contraction.max(c);
        }
        ArmSummary {
            name: self.name.into(),
            dim: self.traj.dim(),
            occupied_bins: self.grid.occupied_bins().count(),
            framed_bins: self.field.frames.len(),
            skipped_bins: self.skipped,
            degenerate_bins: self.field.frames.values().filter(|f| f.degenerate).count(),
            components: self.field.components,
            valid_weights: self.weights.valid_count(),
            fallback_weights: self.weights.fallback_mask().iter().filter(|f| **f).count(),
            max_whitening_residual: whitening,
            max_contraction_residual: contraction,
        }
    }

    fn write(&self, dir: &Path, artifacts: &mut BTreeMap<String, String>) -> Result<()> {
        let mut put = |role: String, file: String| {
            artifacts.insert(role, file);
        };
        let name = self.name;
        write_csv_trajectory(&self.traj, dir.join(format!("{name}.csv")))?;
        put(format!("{name}/trajectory"), format!("{name}.csv"));
        write_csv_velocity(&self.vel, dir.join(format!("{name}-velocity.csv")))?;
        put(format!("{name}/velocity"), format!("{name}-velocity.csv"));
        write_json(&GridFile::from_grid(&self.grid), &dir.join(format!("{name}-grid.json")))?;
        put(format!("{name}/grid"), format!("{name}-grid.json"));
        write_json(
            &MomentsFile::from_moments(self.traj.dim(), &self.moments),
            &dir.join(format!("{name}-moments.json")),
        )?;
        put(format!("{name}/moments"), format!("{name}-moments.json"));
        write_json(
            &FrameFieldFile::from_field(&self.field),
            &dir.join(format!("{name}-frames.json")),
        )?;
        put(format!("{name}/frames"), format!("{name}-frames.json"));
        write_csv_weights(&self.weights, dir.join(format!("{name}-weights.csv")))?;
        put(format!("{name}/weights"), format!("{name}-weights.csv"));
        Ok(())
    }
}

fn frame_criteria(arms: &[ArmSummary]) -> [Criterion; 2] {
    let whitening = arms.iter().map(|a| a.max_whitening_residual).fold(0.0, f64::max);
    let contraction = arms.iter().map(|a| a.max_contraction_residual).fold(0.0, f64::max);
    [
        Criterion::new("frame-whitening-residual", whitening, Comparison::Below, WHITENING_TOL),
        Criterion::new(
            "frame-contraction-residual",
            contraction,
            Comparison::Below,
            CONTRACTION_TOL,
        ),
    ]
}

/// Plot window of `len` samples around the middle of a series of length `n`.
fn middle_window(n: usize, len: usize) -> std::ops::Range<usize> {
    let len = len.min(n);
    let start = (n - len) / 2;
    start..start + len
}

fn weight_panels(w: &WeightSeries, wprime: &WeightSeries, p: &SignedPermutation) -> Result<Vec<PlotSeries>> {
    let aligned = apply_signed_permutation(p, wprime)?;
    let valid: Vec<bool> = w
        .valid_mask()
        .iter()
        .zip(aligned.valid_mask())
        .map(|(a, b)| *a && *b)
        .collect();
    Ok((0..w.dim())
        .map(|i| PlotSeries {
            label: format!("w{} (thin) and aligned w'{} (thick)", i + 1, i + 1),
            dt: w.dt(),
            channels: vec![w.channel(i), aligned.channel(i)],
            valid: Some(valid.clone()),
        })
        .collect())
}

struct Outcome {
    config: ConfigEcho,
    metrics: Metrics,
    criteria: Vec<Criterion>,
    artifacts: BTreeMap<String, String>,
}

/// Runs one experiment end to end. When `config.out_dir` is set, the report
/// and every intermediate go to `<out_dir>/<experiment>/`.
pub fn run_experiment(experiment: Experiment, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let samples = config.samples.unwrap_or(experiment.default_samples());
    if samples < experiment.min_samples() {
        return Err(Error::TooFewSamples {
            needed: experiment.min_samples(),
            got: samples,
        });
    }
    let bins = config.bins.clone().unwrap_or_else(|| experiment.default_bins());
    let dir = match &config.out_dir {
        Some(root) => {
            let dir = root.join(experiment.name());
            std::fs::create_dir_all(&dir).map_err(|source| Error::File {
                path: dir.clone(),
                source,
            })?;
            Some(dir)
        }
        None => None,
    };
    let outcome = match experiment {
        Experiment::Sine => run_sine(config, samples, &bins, dir.as_deref()),
        Experiment::Monotone1d => run_monotone(config, samples, &bins, dir.as_deref()),
        Experiment::Lifted2d => run_lifted(config, samples, &bins, dir.as_deref()),
        Experiment::Mixture2d => run_mixture(config, samples, &bins, dir.as_deref()),
    }?;
    let mut report = ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        experiment,
        config: outcome.config,
        pass: outcome.criteria.iter().all(|c| c.pass),
        metrics: outcome.metrics,
        criteria: outcome.criteria,
        artifacts: outcome.artifacts,
    };
    if let Some(dir) = dir {
        report.artifacts.insert("report".into(), "report.json".into());
        write_json(&report, &dir.join("report.json")).stage("report")?;
    }
    Ok(report)
}

fn expect_dim(bins: &[usize], dim: usize) -> Result<()> {
    if bins.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bins.len(),
        });
    }
    Ok(())
}

fn echo(config: &ExperimentConfig, samples: usize, dt: f64, arms: &[(&str, &[usize], usize)]) -> ConfigEcho {
    ConfigEcho {
        seed: config.seed,
        samples,
        dt,
        scheme: config.scheme,
        bins: arms.iter().map(|(n, b, _)| (n.to_string(), b.to_vec())).collect(),
        min_count: arms.iter().map(|(n, _, m)| (n.to_string(), *m)).collect(),
        transform: None,
        frame: config.frame,
    }
}

fn run_sine(config: &ExperimentConfig, samples: usize, bins: &[usize], dir: Option<&Path>) -> Result<Outcome> {
    expect_dim(bins, 1)?;
    let a = 1.0;
    let min_count = config.min_count.unwrap_or(default_min_count(1));
    let traj = gen_sine(a, SINE_DT, samples).stage("synth")?;
    let arm = Arm::run("x", traj, bins, min_count, config)?;
    let times: Vec<f64> = (0..samples).map(|k| k as f64 * SINE_DT).collect();
    let analytic = analytic_sine_weights(a, &times)?;
    let alignment = align_weight_series(&analytic, &arm.weights).stage("align")?;
    let reflection = f64::from(alignment.permutation.signs()[0]);

    let (mut hits, mut scored) = (0usize, 0usize);
    for k in 0..samples {
        let Some(w) = arm.weights.get(k) else { continue };
        let truth = analytic.value(k)[0];
        if truth == 0.0 || arm.traj.sample(k)[0].abs() >= SINE_MATCH_LIMIT * a {
            continue;
        }
        scored += 1;
        hits += usize::from((reflection * w[0]).signum() == truth);
    }
    let match_fraction = hits as f64 / scored.max(1) as f64;

    let c11_error = arm
        .moments
        .iter()
        .map(|(bin, m)| {
            let x = arm.grid.bin_center(*bin)[0];
            (m.c2[(0, 0)] - (a * a - x * x)).abs()
        })
        .fold(0.0, f64::max);

    let steps = RECONSTRUCTION_STEPS.min(samples - 2);
    let window = arm.weights.slice(1, 1 + steps)?;
    let recon = integrate_weights(&window, &arm.field, arm.traj.sample(1), steps).stage("reconstruct")?;
    let rebuilt = recon.trajectory.channel(0);
    let truth: Vec<f64> = (1..1 + rebuilt.len()).map(|k| arm.traj.sample(k)[0]).collect();
    let mse = rebuilt.iter().zip(&truth).map(|(r, t)| (r - t).powi(2)).sum::<f64>() / truth.len() as f64;
    let power = truth.iter().map(|t| t * t).sum::<f64>() / truth.len() as f64;
    let rel_rmse = (mse / power).sqrt();

    let summary = arm.summary();
    let mut criteria = vec![
        Criterion::new("sine-sign-match", match_fraction, Comparison::AtLeast, 0.95),
        Criterion::new("sine-c11-error", c11_error, Comparison::Below, 0.05),
        Criterion::new("reconstruction-relative-rmse", rel_rmse, Comparison::Below, 0.05),
        Criterion::new(
            "reconstruction-steps",
            (rebuilt.len() - 1) as f64,
            Comparison::AtLeast,
            steps as f64,
        ),
    ];
    criteria.extend(frame_criteria(std::slice::from_ref(&summary)));

    let mut artifacts = BTreeMap::new();
    if let Some(dir) = dir {
        arm.write(dir, &mut artifacts)?;
        write_csv_weights(&analytic, dir.join("analytic-weights.csv"))?;
        artifacts.insert("analytic/weights".into(), "analytic-weights.csv".into());
        write_csv_trajectory(&recon.trajectory, dir.join("reconstruction.csv"))?;
        artifacts.insert("reconstruction".into(), "reconstruction.csv".into());
        let mut panels = vec![PlotSeries::from_trajectory("x", &arm.traj)];
        panels.extend(weight_panels(&analytic, &arm.weights, &alignment.permutation)?);
        panels[1].label = "analytic sgn(a cos t) (thin) and aligned w (thick)".into();
        plot_svg(&panels, 0..samples.min(1000), dir.join("plot.svg"))?;
        artifacts.insert("plot".into(), "plot.svg".into());
    }
    Ok(Outcome {
        config: echo(config, samples, SINE_DT, &[("x", bins, min_count)]),
        metrics: Metrics {
            sign_match_fraction: Some(match_fraction),
            c11_max_abs_error: Some(c11_error),
            permutation: Some(alignment.permutation),
            aligned_correlations: Some(alignment.correlations),
            reconstruction_relative_rmse: Some(rel_rmse),
            reconstruction_steps: Some(rebuilt.len() - 1),
            reconstruction_truncated: Some(recon.truncated),
            arms: vec![summary],
            ..Metrics::default()
        },
        criteria,
        artifacts,
    })
}

fn run_monotone(config: &ExperimentConfig, samples: usize, bins: &[usize], dir: Option<&Path>) -> Result<Outcome> {
    expect_dim(bins, 1)?;
    let min_count = config.min_count.unwrap_or(default_min_count(1));
    let transform = config.transform.clone().unwrap_or_else(default_monotone_transform);
    let x = gen_broadband(samples, AUDIO_DT, config.seed).stage("synth")?;
    let xprime = apply_transform(&x, &transform).stage("transform")?;
    let arm = Arm::run("x", x, bins, min_count, config)?;
    let arm_prime = Arm::run("xprime", xprime, bins, min_count, config)?;
    let alignment = align_weight_series(&arm.weights, &arm_prime.weights).stage("align")?;
    let min_corr = alignment.correlations.iter().copied().fold(f64::INFINITY, f64::min);

    let summaries = vec![arm.summary(), arm_prime.summary()];
    let mut criteria = vec![Criterion::new(
        "aligned-correlation",
        min_corr,
        Comparison::AtLeast,
        0.95,
    )];
    if transform == TransformSpec::Identity {
        criteria.push(Criterion::new(
            "identity-correlation-deviation",
            (1.0 - min_corr).abs(),
            Comparison::Below,
            1e-9,
        ));
    }
    criteria.extend(frame_criteria(&summaries));

    let mut artifacts = BTreeMap::new();
    if let Some(dir) = dir {
        arm.write(dir, &mut artifacts)?;
        arm_prime.write(dir, &mut artifacts)?;
        let mut panels = vec![
            PlotSeries::from_trajectory("x", &arm.traj),
            PlotSeries::from_trajectory("x'", &arm_prime.traj),
        ];
        panels.extend(weight_panels(&arm.weights, &arm_prime.weights, &alignment.permutation)?);
        plot_svg(&panels, middle_window(samples, 500), dir.join("plot.svg"))?;
        artifacts.insert("plot".into(), "plot.svg".into());
    }
    let mut config_echo = echo(
        config,
        samples,
        AUDIO_DT,
        &[("x", bins, min_count), ("xprime", bins, min_count)],
    );
    config_echo.transform = Some(transform);
    Ok(Outcome {
        config: config_echo,
        metrics: Metrics {
            permutation: Some(alignment.permutation),
            aligned_correlations: Some(alignment.correlations),
            arms: summaries,
            ..Metrics::default()
        },
        criteria,
        artifacts,
    })
}

fn run_lifted(config: &ExperimentConfig, samples: usize, bins: &[usize], dir: Option<&Path>) -> Result<Outcome> {
    expect_dim(bins, 2)?;
    let min_count = config.min_count.unwrap_or(default_min_count(2));
    let data = gen_lifted_latent(samples, config.seed).stage("synth")?;
    let distorted = data
        .lifted
        .map_samples(LIFT_DIM, default_names("y", LIFT_DIM), |_, y, out| {
            out.copy_from_slice(&distort_lift(y));
            Ok(())
        })
        .stage("transform")?;
    let raw_pca = pca_embed(&data.lifted, 2).stage("pca")?;
    let distorted_pca = pca_embed(&distorted, 2).stage("pca")?;
    let (raw_explained, distorted_explained) = (raw_pca.explained_top(), distorted_pca.explained_top());
    let arm = Arm::run("raw", raw_pca.trajectory, bins, min_count, config)?;
    let arm_prime = Arm::run("distorted", distorted_pca.trajectory, bins, min_count, config)?;
    let alignment = align_weight_series(&arm.weights, &arm_prime.weights).stage("align")?;
    let min_corr = alignment.correlations.iter().copied().fold(f64::INFINITY, f64::min);

    let summaries = vec![arm.summary(), arm_prime.summary()];
    let mut criteria = vec![
        Criterion::new("raw-explained-variance", raw_explained, Comparison::AtLeast, 0.99),
        Criterion::new(
            "distorted-explained-variance",
            distorted_explained,
            Comparison::AtLeast,
            0.99,
        ),
        Criterion::new("aligned-correlation", min_corr, Comparison::AtLeast, 0.9),
    ];
    criteria.extend(frame_criteria(&summaries));

    let mut artifacts = BTreeMap::new();
    if let Some(dir) = dir {
        write_csv_trajectory(&data.latent, dir.join("latent.csv"))?;
        artifacts.insert("latent".into(), "latent.csv".into());
        write_csv_trajectory(&data.lifted, dir.join("lifted.csv"))?;
        artifacts.insert("lifted".into(), "lifted.csv".into());
        write_csv_trajectory(&distorted, dir.join("lifted-distorted.csv"))?;
        artifacts.insert("lifted-distorted".into(), "lifted-distorted.csv".into());
        arm.write(dir, &mut artifacts)?;
        arm_prime.write(dir, &mut artifacts)?;
        let mut panels = vec![
            PlotSeries::from_trajectory("x (raw lift, principal components)", &arm.traj),
            PlotSeries::from_trajectory("x' (distorted lift, principal components)", &arm_prime.traj),
        ];
        panels.extend(weight_panels(&arm.weights, &arm_prime.weights, &alignment.permutation)?);
        plot_svg(&panels, middle_window(samples, 600), dir.join("plot.svg"))?;
        artifacts.insert("plot".into(), "plot.svg".into());
    }
    Ok(Outcome {
        config: echo(
            config,
            samples,
            data.latent.dt(),
            &[("raw", bins, min_count), ("distorted", bins, min_count)],
        ),
        metrics: Metrics {
            permutation: Some(alignment.permutation),
            aligned_correlations: Some(alignment.correlations),
            explained_variance: BTreeMap::from([
                ("raw".to_string(), raw_explained),
                ("distorted".to_string(), distorted_explained),
            ]),
            arms: summaries,
            ..Metrics::default()
        },
        criteria,
        artifacts,
    })
}

fn run_mixture(config: &ExperimentConfig, samples: usize, bins: &[usize], dir: Option<&Path>) -> Result<Outcome> {
    expect_dim(bins, 2)?;
    let source_min = config.min_count.unwrap_or(default_min_count(1));
    let mixture_min = config.min_count.unwrap_or(default_min_count(2));
    let sources = gen_sources(samples, config.seed).stage("synth")?;
    let mixed = mix_two_sources(&sources).stage("transform")?;
    let mixed_pca = pca_embed(&mixed, 2).stage("pca")?;
    let dt = sources.dt();
    let single =
        |i: usize| Trajectory::from_channels(&[sources.channel(i)], dt, vec![sources.channel_names()[i].clone()]);
    let source1 = Arm::run("source1", single(0)?, &bins[..1], source_min, config)?;
    let source2 = Arm::run("source2", single(1)?, &bins[1..], source_min, config)?;
    let mixture = Arm::run("mixture", mixed_pca.trajectory, bins, mixture_min, config)?;
    let report = separability_report(
        &mixture.weights,
        &[&source1.weights, &source2.weights],
        SeparabilityThresholds::default(),
    )
    .stage("separability")?;

    let summaries = vec![source1.summary(), source2.summary(), mixture.summary()];
    let max_cross = report.max_cross;
    let mut criteria = vec![
        Criterion::new(
            "matched-correlation",
            report.min_match,
            Comparison::AtLeast,
            report.thresholds.min_match,
        ),
        Criterion::new(
            "mixture-cross-correlation",
            max_cross,
            Comparison::Below,
            report.thresholds.max_cross,
        ),
    ];
    criteria.extend(frame_criteria(&summaries));

    let mut artifacts = BTreeMap::new();
    if let Some(dir) = dir {
        write_csv_trajectory(&sources, dir.join("sources.csv"))?;
        artifacts.insert("sources".into(), "sources.csv".into());
        write_csv_trajectory(&mixed, dir.join("mixed.csv"))?;
        artifacts.insert("mixed".into(), "mixed.csv".into());
        for arm in [&source1, &source2, &mixture] {
            arm.write(dir, &mut artifacts)?;
        }
        let stacked = WeightSeries::concat(&[&source1.weights, &source2.weights])?;
        let mut panels = vec![
            PlotSeries::from_trajectory("sources", &sources),
            PlotSeries::from_trajectory("mixture (principal components)", &mixture.traj),
        ];
        // the mixture channels take the thin stroke, matched source channels the thick one
        panels.extend(weight_panels(&mixture.weights, &stacked, &report.permutation)?);
        plot_svg(&panels, middle_window(samples, 500), dir.join("plot.svg"))?;
        artifacts.insert("plot".into(), "plot.svg".into());
    }
    let mut config_echo = echo(
        config,
        samples,
        dt,
        &[
            ("source1", &bins[..1], source_min),
            ("source2", &bins[1..], source_min),
            ("mixture", bins, mixture_min),
        ],
    );
    config_echo.transform = Some(TransformSpec::TwoSourceMixing);
    Ok(Outcome {
        config: config_echo,
        metrics: Metrics {
            permutation: Some(report.permutation),
            aligned_correlations: Some(report.correlations),
            cross_correlation: Some(report.cross_correlation),
            arms: summaries,
            ..Metrics::default()
        },
        criteria,
        artifacts,
    })
}
