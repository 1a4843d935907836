//! The inner time series and its comparison across sensors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::best_signed_permutation;
use crate::model::{FrameField, SignedPermutation, Trajectory, VelocitySeries, WeightSeries};

/// Fewest jointly valid samples accepted when correlating two series.
pub const MIN_OVERLAP: usize = 100;

/// `w = M_bin · ẋ` for every valid sample, with `M` taken from the sample's
/// own bin or, when that bin has no frame, the nearest framed bin one step away.
pub fn compute_weights(traj: &Trajectory, vel: &VelocitySeries, field: &FrameField) -> Result<WeightSeries> {
    check_inputs(vel, field, traj.len())?;
    if traj.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: traj.dim(),
        });
    }
    project(vel, field, |k| field.locate(traj.sample(k)))
}

/// Like [`compute_weights`] but with an explicit bin per sample. Samples whose
/// bin has no frame are invalid.
pub fn compute_weights_assigned(
    vel: &VelocitySeries,
    field: &FrameField,
    assignment: &[Option<usize>],
) -> Result<WeightSeries> {
    check_inputs(vel, field, assignment.len())?;
    project(vel, field, |k| {
        assignment[k]
            .filter(|b| field.frames.contains_key(b))
            .map(|b| (b, false))
    })
}

fn check_inputs(vel: &VelocitySeries, field: &FrameField, len: usize) -> Result<()> {
    if field.frames.is_empty() {
        return Err(Error::EmptyField);
    }
    if vel.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: vel.len(),
        });
    }
    if vel.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            found: vel.dim(),
        });
    }
    Ok(())
}

fn project<F>(vel: &VelocitySeries, field: &FrameField, locate: F) -> Result<WeightSeries>
where
    F: Fn(usize) -> Option<(usize, bool)>,
{
    let n = vel.dim();
    let len = vel.len();
    let mut data = vec![0.0; len * n];
    let mut valid = vec![false; len];
    let mut fallback = vec![false; len];
    for k in 0..len {
        let Some(v) = vel.get(k) else { continue };
        let Some((bin, borrowed)) = locate(k) else { continue };
        let m = &field.frames[&bin].m;
        let out = &mut data[k * n..(k + 1) * n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|j| m[(i, j)] * v[j]).sum();
        }
        valid[k] = true;
        fallback[k] = borrowed;
    }
    WeightSeries::with_fallback(data, n, vel.dt(), valid, fallback)
}

fn jointly_valid(a: &WeightSeries, b: &WeightSeries) -> Vec<usize> {
    (0..a.len()).filter(|&k| a.is_valid(k) && b.is_valid(k)).collect()
}

/// Pearson correlation of every channel of `a` against every channel of `b`
/// over the given samples.
fn correlation_matrix(a: &WeightSeries, b: &WeightSeries, idx: &[usize]) -> Result<DMatrix<f64>> {
    let count = idx.len() as f64;
    let stats = |w: &WeightSeries| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut means = vec![0.0; w.dim()];
        for &k in idx {
            for (m, v) in means.iter_mut().zip(w.value(k)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= count);
        let mut sds = vec![0.0; w.dim()];
        for &k in idx {
            for (i, v) in w.value(k).iter().enumerate() {
                sds[i] += (v - means[i]).powi(2);
            }
        }
        for (channel, s) in sds.iter_mut().enumerate() {
            *s = s.sqrt();
            if !(*s > 0.0) {
                return Err(Error::ZeroVariance { channel });
            }
        }
        Ok((means, sds))
    };
    let (ma, sa) = stats(a)?;
    let (mb, sb) = stats(b)?;
    let mut c = DMatrix::zeros(a.dim(), b.dim());
    for &k in idx {
        let (x, y) = (a.value(k), b.value(k));
        for i in 0..a.dim() {
            let dx = x[i] - ma[i];
            for j in 0..b.dim() {
                c[(i, j)] += dx * (y[j] - mb[j]);
            }
        }
    }
    for i in 0..a.dim() {
        for j in 0..b.dim() {
            c[(i, j)] /= sa[i] * sb[j];
        }
    }
    Ok(c)
}

/// Outcome of matching one weight series against another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightAlignment {
    /// Applying this to the second series best matches the first.
    pub permutation: SignedPermutation,
    /// `corr(w_i, P(w′)_i)` per channel.
    pub correlations: Vec<f64>,
    pub overlap: usize,
}

/// Finds the signed permutation `P` maximizing `Σ_i corr(w_i, P(w′)_i)`.
pub fn align_weight_series(w: &WeightSeries, wprime: &WeightSeries) -> Result<WeightAlignment> {
    if w.dim() != wprime.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: wprime.dim(),
        });
    }
    if w.len() != wprime.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {} vs {}",
            w.len(),
            wprime.len()
        )));
    }
    let idx = jointly_valid(w, wprime);
    if idx.len() < MIN_OVERLAP {
        return Err(Error::InsufficientOverlap {
            found: idx.len(),
            needed: MIN_OVERLAP,
        });
    }
    let c = correlation_matrix(w, wprime, &idx)?;
    let permutation = best_signed_permutation(&c);
    let correlations = (0..w.dim())
        .map(|j| f64::from(permutation.signs()[j]) * c[(j, permutation.perm()[j])])
        .collect();
    Ok(WeightAlignment {
        permutation,
        correlations,
        overlap: idx.len(),
    })
}

/// Channel-by-channel Pearson correlations over valid samples; the diagonal is exactly 1.
pub fn cross_channel_correlation(w: &WeightSeries) -> Result<DMatrix<f64>> {
    let idx: Vec<usize> = (0..w.len()).filter(|&k| w.is_valid(k)).collect();
    if idx.len() < 2 {
        return Err(Error::InsufficientOverlap {
            found: idx.len(),
            needed: 2,
        });
    }
    let mut c = correlation_matrix(w, w, &idx)?;
    for i in 0..w.dim() {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    Ok(c)
}

/// Thresholds for declaring a mixture separated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityThresholds {
    /// Each mixture channel must correlate at least this well with its matched source channel.
    pub min_match: f64,
    /// Off-diagonal mixture correlations must stay below this in magnitude.
    pub max_cross: f64,
}

impl Default for SeparabilityThresholds {
    fn default() -> Self {
        Self {
            min_match: 0.9,
            max_cross: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    /// Maps the concatenated source channels onto the mixture channels.
    pub permutation: SignedPermutation,
    pub correlations: Vec<f64>,
    pub cross_correlation: Vec<Vec<f64>>,
    pub max_cross: f64,
    pub min_match: f64,
    pub thresholds: SeparabilityThresholds,
    pub pass: bool,
}

/// Matches mixture weights against the stacked weights of the separately
/// measured subsystems.
pub fn separability_report(
    w_mixture: &WeightSeries,
    w_sources: &[&WeightSeries],
    thresholds: SeparabilityThresholds,
) -> Result<SeparabilityReport> {
    let total: usize = w_sources.iter().map(|s| s.dim()).sum();
    if total != w_mixture.dim() {
        return Err(Error::DimensionMismatch {
            expected: w_mixture.dim(),
            found: total,
        });
    }
    let stacked = WeightSeries::concat(w_sources)?;
    let alignment = align_weight_series(w_mixture, &stacked)?;
    let cross = cross_channel_correlation(w_mixture)?;
    let n = cross.nrows();
    let max_cross = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| cross[(i, j)].abs())
        .fold(0.0, f64::max);
    let min_match = alignment.correlations.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SeparabilityReport {
        permutation: alignment.permutation,
        correlations: alignment.correlations,
        cross_correlation: (0..n).map(|i| cross.row(i).iter().copied().collect()).collect(),
        max_cross,
        min_match,
        thresholds,
        pass: min_match >= thresholds.min_match && max_cross < thresholds.max_cross,
    })
}
