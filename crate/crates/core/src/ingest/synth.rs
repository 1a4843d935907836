//! Deterministic synthetic generators.
//!
//! Every generator that draws random numbers takes a 64-bit seed and uses
//! ChaCha8, so output is identical across platforms and runs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{default_names, Trajectory};

/// Dimension of the lifted embedding used for the two-degree-of-freedom experiment.
pub const LIFT_DIM: usize = 6;

/// Half-width of the box the mixture sources wander in. The mixing map's
/// Jacobian determinant changes sign near `x1 ≈ 2.2e4` inside ±2^15; on this
/// box it stays above 6e-3, so the mixture is invertible there.
pub const SOURCE_BOX: f64 = 20000.0;

/// `x[k] = a · sin(k · dt)`.
pub fn gen_sine(a: f64, dt: f64, n: usize) -> Result<Trajectory> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("amplitude must be non-zero, got {a}")));
    }
    let data = (0..n).map(|k| a * (k as f64 * dt).sin()).collect();
    Trajectory::from_flat(data, 1, dt, vec!["x".into()])
}

/// A single-channel broadband signal: a sum of sinusoids with log-uniform
/// frequencies between 0.002/dt and 0.05/dt (at least 20 samples per period),
/// random phases and amplitudes falling as 1/√f, scaled to unit peak.
pub fn gen_broadband(n: usize, dt: f64, seed: u64) -> Result<Trajectory> {
    const TONES: usize = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (f_lo, f_hi) = (0.002 / dt, 0.05 / dt);
    let tones: Vec<(f64, f64, f64)> = (0..TONES)
        .map(|_| {
            let f = f_lo * (f_hi / f_lo).powf(rng.gen::<f64>());
            let amp = (0.5 + rng.gen::<f64>()) / f.sqrt();
            let phase = rng.gen::<f64>() * std::f64::consts::TAU;
            (std::f64::consts::TAU * f, amp, phase)
        })
        .collect();
    let mut data: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            tones.iter().map(|(w, a, p)| a * (w * t + p).sin()).sum()
        })
        .collect();
    let peak = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        data.iter_mut().for_each(|v| *v /= peak);
    }
    Trajectory::from_flat(data, 1, dt, vec!["x".into()])
}

/// Marginal shape of a walk's velocity component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityShape {
    Gaussian,
    /// `z·|z|`: peaked with heavy tails (kurtosis ≈ 11.7).
    SuperGaussian,
    /// `tanh(2z)`: flat-topped, bimodal (kurtosis ≈ 1.5).
    SubGaussian,
}

impl VelocityShape {
    fn shape(self, z: f64) -> f64 {
        match self {
            VelocityShape::Gaussian => z,
            VelocityShape::SuperGaussian => z * z.abs() / 3f64.sqrt(),
            VelocityShape::SubGaussian => (2.0 * z).tanh(),
        }
    }
}

/// A bounded random walk whose velocity is a shaped first-order low-pass
/// Gaussian process, reflected at the walls of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Velocity scale per channel (units per second).
    pub speed: Vec<f64>,
    /// Correlation time of the driving process (seconds).
    pub correlation_time: f64,
    pub shapes: Vec<VelocityShape>,
    /// Relative speed modulation by the next channel's normalized position,
    /// making local velocity statistics position dependent.
    pub speed_gradient: f64,
}

impl WalkConfig {
    fn validate(&self) -> Result<usize> {
        let n = self.lo.len();
        if n == 0 || self.hi.len() != n || self.speed.len() != n || self.shapes.len() != n {
            return Err(Error::InvalidArgument(
                "walk configuration vectors differ in length".into(),
            ));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidArgument(
                "walk box must have lo < hi on every axis".into(),
            ));
        }
        if !(self.correlation_time > 0.0) || self.speed.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument(
                "speed and correlation time must be positive".into(),
            ));
        }
        if !(self.speed_gradient.abs() < 1.0) {
            return Err(Error::InvalidArgument("speed gradient must lie in (-1, 1)".into()));
        }
        Ok(n)
    }
}

fn reflect(x: &mut f64, lo: f64, hi: f64) -> bool {
    let mut flipped = false;
    while *x < lo || *x > hi {
        *x = if *x < lo { 2.0 * lo - *x } else { 2.0 * hi - *x };
        flipped = !flipped;
    }
    flipped
}

pub fn gen_walk(cfg: &WalkConfig, n: usize, dt: f64, seed: u64) -> Result<Trajectory> {
    let dim = cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = (-dt / cfg.correlation_time).exp();
    let kick = (1.0 - rho * rho).sqrt();
    let mut z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut sign = vec![1.0; dim];
    let mut x: Vec<f64> = cfg.lo.iter().zip(&cfg.hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        data.extend_from_slice(&x);
        let norm: Vec<f64> = (0..dim)
            .map(|i| 2.0 * (x[i] - cfg.lo[i]) / (cfg.hi[i] - cfg.lo[i]) - 1.0)
            .collect();
        for i in 0..dim {
            let modulation = 1.0 + cfg.speed_gradient * norm[(i + 1) % dim];
            let v = sign[i] * cfg.speed[i] * modulation * cfg.shapes[i].shape(z[i]);
            x[i] += dt * v;
            if reflect(&mut x[i], cfg.lo[i], cfg.hi[i]) {
                sign[i] = -sign[i];
            }
            let noise: f64 = rng.sample(StandardNormal);
            z[i] = rho * z[i] + kick * noise;
        }
    }
    Trajectory::from_flat(data, dim, dt, default_names("u", dim))
}

/// Output of [`gen_lifted_latent`].
#[derive(Debug, Clone)]
pub struct LiftedLatent {
    pub latent: Trajectory,
    pub lifted: Trajectory,
}

const LIFT_LINEAR: [[f64; 2]; LIFT_DIM] = [
    [1.0, 0.3],
    [0.2, 1.1],
    [0.7, -0.5],
    [-0.4, 0.8],
    [0.9, 0.6],
    [-0.3, -0.9],
];
const LIFT_CURVATURE: f64 = 0.03;

/// Fixed smooth injective map from the latent square `[-1, 1]²` into six
/// dimensions: a full-rank linear part plus small trigonometric and polynomial
/// terms. The linear part's smallest singular value exceeds the Lipschitz
/// constant of the curved part, so the map cannot fold over.
pub fn lift_latent(u: [f64; 2]) -> [f64; LIFT_DIM] {
    let [a, b] = u;
    let curved = [
        (2.0 * a).sin(),
        (1.5 * b).cos(),
        a * b,
        (a + b).sin(),
        a * a - b * b,
        (2.0 * a - b).cos(),
    ];
    let mut y = [0.0; LIFT_DIM];
    for j in 0..LIFT_DIM {
        y[j] = LIFT_LINEAR[j][0] * a + LIFT_LINEAR[j][1] * b + LIFT_CURVATURE * curved[j];
    }
    y
}

fn lift_basis() -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_fn(LIFT_DIM, 2, |i, j| LIFT_LINEAR[i][j]);
    let pinv = (a.transpose() * &a).try_inverse().expect("lift basis has full rank") * a.transpose();
    (a, pinv)
}

/// A fixed invertible distortion of the six-dimensional measurement space,
/// standing in for a camera looking through inverting, distorting lenses.
///
/// The in-plane coordinates `z = A⁺y` are flipped and warped by the triangular
/// map `z ↦ (-(z₁ + 0.25 z₁³), -(z₂ + 0.25 z₂³ + 0.15 z₁²))`, the residual off the
/// lift plane is kept, and the result is mixed by a fixed invertible matrix.
pub fn distort_lift(y: &[f64]) -> [f64; LIFT_DIM] {
    const MIX: [[f64; LIFT_DIM]; LIFT_DIM] = [
        [1.2, 0.1, 0.0, 0.0, 0.2, 0.0],
        [0.0, 0.9, 0.3, 0.0, 0.0, 0.1],
        [0.1, 0.0, 1.1, 0.2, 0.0, 0.0],
        [0.0, 0.2, 0.0, 0.8, 0.1, 0.0],
        [0.0, 0.0, 0.1, 0.0, 1.0, 0.3],
        [0.2, 0.0, 0.0, 0.1, 0.0, 0.9],
    ];
    let (a, pinv) = lift_basis();
    let y = DVector::from_column_slice(y);
    let z = &pinv * &y;
    let warped = DVector::from_vec(vec![
        -(z[0] + 0.25 * z[0].powi(3)),
        -(z[1] + 0.25 * z[1].powi(3) + 0.15 * z[0] * z[0]),
    ]);
    let moved = &y + &a * (warped - z);
    let mut out = [0.0; LIFT_DIM];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..LIFT_DIM).map(|j| MIX[i][j] * moved[j]).sum();
    }
    out
}

/// A two-channel latent walk on `[-1, 1]²` at 30 samples per second, plus
/// its six-dimensional lift.
pub fn gen_lifted_latent(n: usize, seed: u64) -> Result<LiftedLatent> {
    if n < 10_000 {
        return Err(Error::TooFewSamples { needed: 10_000, got: n });
    }
    let dt = 1.0 / 30.0;
    let cfg = WalkConfig {
        lo: vec![-1.0, -1.0],
        hi: vec![1.0, 1.0],
        speed: vec![2.0 / (1000.0 * dt); 2],
        correlation_time: 5.0 * dt,
        shapes: vec![VelocityShape::SuperGaussian, VelocityShape::SubGaussian],
        speed_gradient: 0.2,
    };
    let latent = gen_walk(&cfg, n, dt, seed)?;
    let lifted = latent.map_samples(LIFT_DIM, default_names("y", LIFT_DIM), |_, u, out| {
        out.copy_from_slice(&lift_latent([u[0], u[1]]));
        Ok(())
    })?;
    Ok(LiftedLatent { latent, lifted })
}

/// Two statistically independent sources at 16 kHz inside `±SOURCE_BOX`: one
/// with super-Gaussian and one with sub-Gaussian velocity.
pub fn gen_sources(n: usize, seed: u64) -> Result<Trajectory> {
    let dt = 1.0 / 16000.0;
    let shapes = [VelocityShape::SuperGaussian, VelocityShape::SubGaussian];
    let mut channels = Vec::with_capacity(2);
    for (i, shape) in shapes.into_iter().enumerate() {
        let cfg = WalkConfig {
            lo: vec![-SOURCE_BOX],
            hi: vec![SOURCE_BOX],
            speed: vec![20.0 / dt],
            correlation_time: 4.0 * dt,
            shapes: vec![shape],
            speed_gradient: 0.0,
        };
        let seed_i = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64 + 1);
        channels.push(gen_walk(&cfg, n, dt, seed_i)?.channel(0));
    }
    Trajectory::from_channels(&channels, dt, vec!["s1".into(), "s2".into()])
}
