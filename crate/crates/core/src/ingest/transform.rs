//! Instantaneous invertible transforms that simulate a different sensor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Trajectory;

/// Each mixture input must lie in `[-MIX_DOMAIN, MIX_DOMAIN]` (2^15).
pub const MIX_DOMAIN: f64 = 32768.0;

/// Density of the derivative check for monotone polynomials.
const MONOTONE_CHECK_POINTS: usize = 10_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransformSpec {
    Identity,
    /// `x'_i = scale_i · x_i + offset_i`; scales must be non-zero.
    Affine {
        scale: Vec<f64>,
        offset: Vec<f64>,
    },
    /// `x' = Σ_j coeffs[j] · x^j` on every channel, for inputs in `domain`.
    MonotonePolynomial {
        coeffs: Vec<f64>,
        domain: (f64, f64),
    },
    /// The fixed two-channel nonlinear mixture, see [`mix_two_sources`].
    TwoSourceMixing,
    /// Piecewise-linear interpolation through strictly monotone `(xs, ys)`.
    CustomTable {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, c)| acc * x + j as f64 * c)
}

fn strictly_monotone(values: impl Iterator<Item = f64>) -> bool {
    let mut sign = 0.0;
    for v in values {
        if v == 0.0 || !v.is_finite() {
            return false;
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return false;
        }
    }
    true
}

impl TransformSpec {
    /// Checks the transform's own invariants (monotonicity, shapes).
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            TransformSpec::Identity => Ok(()),
            TransformSpec::Affine { scale, offset } => {
                if scale.len() != dim || offset.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: scale.len().min(offset.len()),
                    });
                }
                if scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "affine scales must be finite and non-zero".into(),
                    ));
                }
                Ok(())
            }
            TransformSpec::MonotonePolynomial { coeffs, domain } => {
                let (lo, hi) = *domain;
                if !(lo < hi) || coeffs.len() < 2 {
                    return Err(Error::InvalidArgument("polynomial needs degree ≥ 1 and lo < hi".into()));
                }
                let n = MONOTONE_CHECK_POINTS;
                let slopes = (0..n).map(|i| poly_derivative(coeffs, lo + (hi - lo) * i as f64 / (n - 1) as f64));
                if strictly_monotone(slopes) {
                    Ok(())
                } else {
                    Err(Error::NotMonotone { lo, hi })
                }
            }
            TransformSpec::TwoSourceMixing => {
                if dim != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: dim,
                    });
                }
                Ok(())
            }
            TransformSpec::CustomTable { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::InvalidArgument("table needs at least two (x, y) pairs".into()));
                }
                let increasing = xs.windows(2).all(|w| w[0] < w[1]);
                if !increasing {
                    return Err(Error::InvalidArgument(
                        "table inputs must be strictly increasing".into(),
                    ));
                }
                if strictly_monotone(ys.windows(2).map(|w| w[1] - w[0])) {
                    Ok(())
                } else {
                    Err(Error::NotMonotone {
                        lo: xs[0],
                        hi: xs[xs.len() - 1],
                    })
                }
            }
        }
    }
}

/// Applies `spec` pointwise; the sample interval is unchanged.
pub fn apply_transform(traj: &Trajectory, spec: &TransformSpec) -> Result<Trajectory> {
    spec.validate(traj.dim())?;
    let names = traj.channel_names().iter().map(|n| format!("{n}'")).collect();
    match spec {
        TransformSpec::Identity => Ok(traj.clone()),
        TransformSpec::Affine { scale, offset } => traj.map_samples(traj.dim(), names, |_, x, out| {
            for i in 0..x.len() {
                out[i] = scale[i] * x[i] + offset[i];
            }
            Ok(())
        }),
        TransformSpec::MonotonePolynomial { coeffs, domain } => {
            let (lo, hi) = *domain;
            traj.map_samples(traj.dim(), names, |k, x, out| {
                for (o, &v) in out.iter_mut().zip(x) {
                    if !(lo..=hi).contains(&v) {
                        return Err(Error::OutsideDomain {
                            index: k,
                            value: v,
                            lo,
                            hi,
                        });
                    }
                    *o = poly(coeffs, v);
                }
                Ok(())
            })
        }
        TransformSpec::TwoSourceMixing => mix_two_sources(traj),
        TransformSpec::CustomTable { xs, ys } => {
            let (lo, hi) = (xs[0], xs[xs.len() - 1]);
            traj.map_samples(traj.dim(), names, |k, x, out| {
                for (o, &v) in out.iter_mut().zip(x) {
                    if !(lo..=hi).contains(&v) {
                        return Err(Error::OutsideDomain {
                            index: k,
                            value: v,
                            lo,
                            hi,
                        });
                    }
                    let seg = xs.partition_point(|e| *e <= v).clamp(1, xs.len() - 1);
                    let f = (v - xs[seg - 1]) / (xs[seg] - xs[seg - 1]);
                    *o = ys[seg - 1] + f * (ys[seg] - ys[seg - 1]);
                }
                Ok(())
            })
        }
    }
}

/// The two-channel nonlinear mixture
///
/// ```text
/// μ₁(x) = 0.763·x₁ + (958 − 0.0225·x₂)^1.5
/// μ₂(x) = 0.153·x₂ + (3.75·10⁷ − 763·x₁ − 229·x₂)^0.5
/// ```
///
/// defined for `|x₁|, |x₂| ≤ 2^15`.
pub fn mix_point(x1: f64, x2: f64) -> [f64; 2] {
    [
        0.763 * x1 + (958.0 - 0.0225 * x2).powf(1.5),
        0.153 * x2 + (3.75e7 - 763.0 * x1 - 229.0 * x2).powf(0.5),
    ]
}

pub fn mix_two_sources(traj: &Trajectory) -> Result<Trajectory> {
    if traj.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: traj.dim(),
        });
    }
    traj.map_samples(2, vec!["mu1".into(), "mu2".into()], |k, x, out| {
        for &v in x {
            if !(-MIX_DOMAIN..=MIX_DOMAIN).contains(&v) {
                return Err(Error::OutsideDomain {
                    index: k,
                    value: v,
                    lo: -MIX_DOMAIN,
                    hi: MIX_DOMAIN,
                });
            }
        }
        out.copy_from_slice(&mix_point(x[0], x[1]));
        Ok(())
    })
}
