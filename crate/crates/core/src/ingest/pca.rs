use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;
use crate::model::{default_names, Trajectory};

/// Variance-normalized principal components of a series.
#[derive(Debug, Clone)]
pub struct PcaEmbedding {
    /// Top-k components, each scaled to unit (population) variance.
    pub trajectory: Trajectory,
    /// Fraction of total variance per component, all D of them, descending.
    pub explained: Vec<f64>,
    pub mean: DVector<f64>,
    /// Principal directions as columns (D × k).
    pub components: DMatrix<f64>,
}

impl PcaEmbedding {
    pub fn explained_top(&self) -> f64 {
        self.explained[..self.trajectory.dim()].iter().sum()
    }
}

/// Projects onto the top `k` principal axes and rescales each to unit variance.
pub fn pca_embed(series: &Trajectory, k: usize) -> Result<PcaEmbedding> {
    let d = series.dim();
    let n = series.len();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("cannot keep {k} of {d} components")));
    }
    if n <= d {
        return Err(Error::TooFewSamples { needed: d + 1, got: n });
    }
    let mut mean = DVector::zeros(d);
    for s in series.samples() {
        for i in 0..d {
            mean[i] += s[i];
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for s in series.samples() {
        for i in 0..d {
            let a = s[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += a * (s[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= n as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let (values, vectors) = sym_eigen_desc(&cov);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroVariance { channel: 0 });
    }
    for c in 0..k {
        if !(values[c] > 1e-12 * values[0]) {
            return Err(Error::ZeroVariance { channel: c });
        }
    }
    let components = vectors.columns(0, k).into_owned();
    let scale: Vec<f64> = (0..k).map(|c| values[c].sqrt()).collect();
    let trajectory = series.map_samples(k, default_names("pc", k), |_, s, out| {
        for c in 0..k {
            let proj: f64 = (0..d).map(|i| components[(i, c)] * (s[i] - mean[i])).sum();
            out[c] = proj / scale[c];
        }
        Ok(())
    })?;
    let explained = values.iter().map(|v| v.max(0.0) / total).collect();
    Ok(PcaEmbedding {
        trajectory,
        explained,
        mean,
        components,
    })
}
