//! Domain types shared across the pipeline.
//!
//! All series are stored sample-major in a flat buffer: sample `k`, channel `i`
//! lives at `k * dim + i`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state-space dimension supported by the fourth-order tensor storage.
pub const MAX_DIM: usize = 6;

/// Uniformly sampled multichannel measurement series.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    data: Vec<f64>,
    dim: usize,
    dt: f64,
    channel_names: Vec<String>,
}

impl Trajectory {
    pub fn new(samples: Vec<Vec<f64>>, dt: f64, channel_names: Vec<String>) -> Result<Self> {
        let dim = samples.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(samples.len() * dim);
        for (k, s) in samples.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::InvalidTrajectory(format!(
                    "sample {k} has {} components, expected {dim}",
                    s.len()
                )));
            }
            data.extend_from_slice(s);
        }
        Self::from_flat(data, dim, dt, channel_names)
    }

    pub fn from_flat(data: Vec<f64>, dim: usize, dt: f64, channel_names: Vec<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidTrajectory("dimension must be at least 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidTrajectory(format!(
                "buffer length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTrajectory(format!(
                "sample interval must be positive, got {dt}"
            )));
        }
        let len = data.len() / dim;
        if len < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: len });
        }
        if channel_names.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: channel_names.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "non-finite value at sample {}, channel {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            data,
            dim,
            dt,
            channel_names,
        })
    }

    /// Builds a trajectory with channels named `x1..xN`.
    pub fn from_samples(samples: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        let dim = samples.first().map(Vec::len).unwrap_or(0);
        Self::new(samples, dt, default_names("x", dim))
    }

    pub fn from_channels(channels: &[Vec<f64>], dt: f64, channel_names: Vec<String>) -> Result<Self> {
        let dim = channels.len();
        let len = channels.first().map(Vec::len).unwrap_or(0);
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidTrajectory("channels differ in length".into()));
        }
        let mut data = Vec::with_capacity(len * dim);
        for k in 0..len {
            data.extend(channels.iter().map(|c| c[k]));
        }
        Self::from_flat(data, dim, dt, channel_names)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn samples(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn channel(&self, i: usize) -> Vec<f64> {
        self.samples().map(|s| s[i]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// First `n` samples.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        Self::from_flat(
            self.data[..n * self.dim].to_vec(),
            self.dim,
            self.dt,
            self.channel_names.clone(),
        )
    }

    /// Pointwise map into a (possibly different) dimension.
    pub fn map_samples<F>(&self, out_dim: usize, names: Vec<String>, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64], &mut [f64]) -> Result<()>,
    {
        let mut out = vec![0.0; self.len() * out_dim];
        for (k, (s, o)) in self.samples().zip(out.chunks_exact_mut(out_dim)).enumerate() {
            f(k, s, o)?;
        }
        Self::from_flat(out, out_dim, self.dt, names)
    }
}

pub(crate) fn default_names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

/// Velocities aligned index-for-index with a [`Trajectory`]. Invalid samples
/// (boundaries of the difference stencil) are excluded from all statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySeries {
    data: Vec<f64>,
    dim: usize,
    dt: f64,
    valid: Vec<bool>,
}

impl VelocitySeries {
    pub fn new(data: Vec<f64>, dim: usize, dt: f64, valid: Vec<bool>) -> Result<Self> {
        if dim == 0 || data.len() != valid.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "velocity buffer of length {} does not match {} samples of dimension {dim}",
                data.len(),
                valid.len()
            )));
        }
        Ok(Self { data, dim, dt, valid })
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    /// The velocity at `k`, or `None` if it is invalid.
    pub fn get(&self, k: usize) -> Option<&[f64]> {
        self.valid[k].then(|| self.value(k))
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.valid[k]
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// The inner time series. Weights are dimensionless: rows of a frame scale as
/// inverse velocity and multiply velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSeries {
    data: Vec<f64>,
    dim: usize,
    dt: f64,
    valid: Vec<bool>,
    /// Samples whose own bin was unoccupied and borrowed a neighbouring frame.
    fallback: Vec<bool>,
    channel_names: Vec<String>,
}

impl WeightSeries {
    pub fn new(data: Vec<f64>, dim: usize, dt: f64, valid: Vec<bool>) -> Result<Self> {
        let fallback = vec![false; valid.len()];
        Self::with_fallback(data, dim, dt, valid, fallback)
    }

    pub fn with_fallback(data: Vec<f64>, dim: usize, dt: f64, valid: Vec<bool>, fallback: Vec<bool>) -> Result<Self> {
        if dim == 0 || data.len() != valid.len() * dim || fallback.len() != valid.len() {
            return Err(Error::InvalidArgument(format!(
                "weight buffer of length {} does not match {} samples of dimension {dim}",
                data.len(),
                valid.len()
            )));
        }
        Ok(Self {
            data,
            dim,
            dt,
            valid,
            fallback,
            channel_names: default_names("w", dim),
        })
    }

    /// Builds a fully valid series from per-channel vectors.
    pub fn from_channels(channels: &[Vec<f64>], dt: f64) -> Result<Self> {
        let dim = channels.len();
        let len = channels.first().map(Vec::len).unwrap_or(0);
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidArgument("channels differ in length".into()));
        }
        let mut data = Vec::with_capacity(len * dim);
        for k in 0..len {
            data.extend(channels.iter().map(|c| c[k]));
        }
        Self::new(data, dim, dt, vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn get(&self, k: usize) -> Option<&[f64]> {
        self.valid[k].then(|| self.value(k))
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.valid[k]
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn fallback_mask(&self) -> &[bool] {
        &self.fallback
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn channel(&self, i: usize) -> Vec<f64> {
        self.data.chunks_exact(self.dim).map(|s| s[i]).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Samples `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "range {start}..{end} outside a series of length {}",
                self.len()
            )));
        }
        let mut out = Self::with_fallback(
            self.data[start * self.dim..end * self.dim].to_vec(),
            self.dim,
            self.dt,
            self.valid[start..end].to_vec(),
            self.fallback[start..end].to_vec(),
        )?;
        out.channel_names = self.channel_names.clone();
        Ok(out)
    }

    /// Stacks the channels of several equally long series. A sample is valid
    /// only where every part is valid.
    pub fn concat(parts: &[&WeightSeries]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("no series to concatenate".into()))?;
        let len = first.len();
        if let Some(bad) = parts.iter().find(|p| p.len() != len) {
            return Err(Error::InvalidArgument(format!(
                "series lengths differ: {len} vs {}",
                bad.len()
            )));
        }
        let dim: usize = parts.iter().map(|p| p.dim).sum();
        let mut data = Vec::with_capacity(len * dim);
        let mut valid = Vec::with_capacity(len);
        let mut fallback = Vec::with_capacity(len);
        for k in 0..len {
            for p in parts {
                data.extend_from_slice(p.value(k));
            }
            valid.push(parts.iter().all(|p| p.valid[k]));
            fallback.push(parts.iter().any(|p| p.fallback[k]));
        }
        Self::with_fallback(data, dim, first.dt, valid, fallback)
    }
}

/// A permutation combined with per-channel reflections.
///
/// As a matrix, `P[j][perm[j]] = signs[j]`, so applying it to a vector gives
/// `out[j] = signs[j] * in[perm[j]]`. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<i8>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let n = perm.len();
        if signs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: signs.len(),
            });
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidArgument(format!("signs must be +1 or -1, got {signs:?}")));
        }
        Ok(Self { perm, signs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            signs: vec![1; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, p)| i == *p) && self.signs.iter().all(|s| *s == 1)
    }

    pub fn inverse(&self) -> Self {
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut signs = vec![1; n];
        for (k, &p) in self.perm.iter().enumerate() {
            perm[p] = k;
            signs[p] = self.signs[k];
        }
        Self { perm, signs }
    }

    /// `out[j] = signs[j] * input[perm[j]]`.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(input, &mut out);
        out
    }

    pub fn apply_into(&self, input: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = f64::from(self.signs[j]) * input[self.perm[j]];
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, self.perm[j])] = f64::from(self.signs[j]);
        }
        m
    }

    /// Every signed permutation of dimension `n` (`2^n * n!` elements).
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for perm in permutations(n) {
            for mask in 0..(1usize << n) {
                let signs = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
                out.push(Self {
                    perm: perm.clone(),
                    signs,
                });
            }
        }
        out
    }
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

/// `apply(compose(a, b), w) == apply(a, apply(b, w))`.
pub fn compose_signed_permutations(a: &SignedPermutation, b: &SignedPermutation) -> Result<SignedPermutation> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let perm = a.perm.iter().map(|&p| b.perm[p]).collect();
    let signs = a.perm.iter().zip(&a.signs).map(|(&p, &s)| s * b.signs[p]).collect();
    Ok(SignedPermutation { perm, signs })
}

/// Relabels and reflects the channels of a weight series.
pub fn apply_signed_permutation(p: &SignedPermutation, w: &WeightSeries) -> Result<WeightSeries> {
    if p.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: p.dim(),
        });
    }
    let mut data = vec![0.0; w.data.len()];
    for (src, dst) in w.data.chunks_exact(w.dim).zip(data.chunks_exact_mut(w.dim)) {
        p.apply_into(src, dst);
    }
    Ok(WeightSeries {
        data,
        dim: w.dim,
        dt: w.dt,
        valid: w.valid.clone(),
        fallback: w.fallback.clone(),
        channel_names: w.channel_names.clone(),
    })
}

/// Axis-aligned partition of measurement space with per-bin membership.
///
/// Bins are addressed by a flat row-major index over the per-axis bin counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    pub(crate) edges: Vec<Vec<f64>>,
    pub(crate) min_count: usize,
    pub(crate) members: BTreeMap<usize, Vec<usize>>,
    pub(crate) assignment: Vec<Option<usize>>,
}

impl BinGrid {
    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn shape(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.len() - 1).collect()
    }

    pub fn bin_count(&self) -> usize {
        self.edges.iter().map(|e| e.len() - 1).product()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Member sample indices keyed by flat bin index (non-empty bins only).
    pub fn members(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.members
    }

    /// Per-sample flat bin index; `None` for samples excluded from binning.
    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn count(&self, bin: usize) -> usize {
        self.members.get(&bin).map_or(0, Vec::len)
    }

    pub fn is_occupied(&self, bin: usize) -> bool {
        self.count(bin) >= self.min_count.max(1)
    }

    pub fn occupied_bins(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .filter(|(_, m)| m.len() >= self.min_count.max(1))
            .map(|(b, _)| *b)
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let shape = self.shape();
        multi.iter().zip(&shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for (slot, &n) in out.iter_mut().zip(&shape).rev() {
            *slot = flat % n;
            flat /= n;
        }
        out
    }

    pub fn bin_center(&self, bin: usize) -> Vec<f64> {
        self.multi_index(bin)
            .iter()
            .zip(&self.edges)
            .map(|(&i, e)| 0.5 * (e[i] + e[i + 1]))
            .collect()
    }

    /// Bin index along one axis: bins are half-open `[e_i, e_{i+1})` except the
    /// last, which includes the upper edge. `None` outside `[first, last]`.
    pub fn axis_index(&self, axis: usize, x: f64) -> Option<usize> {
        let e = &self.edges[axis];
        let n = e.len() - 1;
        if !(x >= e[0] && x <= e[n]) {
            return None;
        }
        let upper = e.partition_point(|edge| *edge <= x);
        Some(upper.saturating_sub(1).min(n - 1))
    }

    /// Flat index of the bin containing `point`, if it lies inside the grid.
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for (axis, &x) in point.iter().enumerate() {
            let n = self.edges[axis].len() - 1;
            flat = flat * n + self.axis_index(axis, x)?;
        }
        Some(flat)
    }

    /// Face-adjacent bins inside the grid, occupied or not.
    pub fn face_neighbors(&self, bin: usize) -> Vec<usize> {
        let shape = self.shape();
        let idx = self.multi_index(bin);
        let mut out = Vec::new();
        for axis in 0..shape.len() {
            for step in [-1i64, 1] {
                let j = idx[axis] as i64 + step;
                if j < 0 || j >= shape[axis] as i64 {
                    continue;
                }
                let mut n = idx.clone();
                n[axis] = j as usize;
                out.push(self.flat_index(&n));
            }
        }
        out
    }
}

/// Second- and fourth-order centred velocity moments of one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMoments {
    pub count: usize,
    pub mean_vel: DVector<f64>,
    pub c2: DMatrix<f64>,
    /// Row-major `N^4` buffer, fully symmetric.
    pub c4: Vec<f64>,
}

impl LocalMoments {
    pub fn dim(&self) -> usize {
        self.mean_vel.len()
    }

    pub fn c4_at(&self, k: usize, l: usize, m: usize, n: usize) -> f64 {
        let d = self.dim();
        self.c4[((k * d + l) * d + m) * d + n]
    }
}

/// The local frame of one bin: `m` whitens the second-order moment and
/// diagonalizes the contracted fourth-order moment; the columns of `v = m⁻¹`
/// are the local vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    pub m: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Diagonal of the transformed fourth-order contraction, one per row of `m`.
    pub d: Vec<f64>,
    pub degenerate: bool,
}

impl LocalFrame {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Left-multiplies `m` by `p`, keeping `v` and `d` consistent.
    pub fn permuted(&self, p: &SignedPermutation) -> LocalFrame {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut v = DMatrix::zeros(n, n);
        let mut d = vec![0.0; n];
        for j in 0..n {
            let src = p.perm()[j];
            let s = f64::from(p.signs()[j]);
            for c in 0..n {
                m[(j, c)] = s * self.m[(src, c)];
                v[(c, j)] = s * self.v[(c, src)];
            }
            d[j] = self.d[src];
        }
        LocalFrame {
            m,
            v,
            d,
            degenerate: self.degenerate,
        }
    }
}

/// How one bin was brought into agreement with its neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinAlignment {
    /// Signed permutation left-multiplied onto the canonical frame.
    pub correction: SignedPermutation,
    /// Connected component of the occupied-bin adjacency graph.
    pub component: usize,
}

/// Frames for all occupied bins of a grid, aligned so that neighbouring bins
/// agree up to one global signed permutation per connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    pub grid: BinGrid,
    pub frames: BTreeMap<usize, LocalFrame>,
    pub alignment: BTreeMap<usize, BinAlignment>,
    pub components: usize,
}

impl FrameField {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn frame(&self, bin: usize) -> Option<&LocalFrame> {
        self.frames.get(&bin)
    }

    /// Finds the frame used for a state: its own bin when that bin has a
    /// frame, otherwise the nearest framed bin within one grid step. The flag
    /// reports whether a neighbour was substituted.
    pub fn locate(&self, point: &[f64]) -> Option<(usize, bool)> {
        if let Some(bin) = self.grid.locate(point) {
            if self.frames.contains_key(&bin) {
                return Some((bin, false));
            }
        }
        self.nearest_framed(point).map(|b| (b, true))
    }

    fn nearest_framed(&self, point: &[f64]) -> Option<usize> {
        let shape = self.grid.shape();
        // fractional position in bin-width units, and the (possibly outside) cell
        let mut frac = Vec::with_capacity(shape.len());
        let mut cell = Vec::with_capacity(shape.len());
        for (axis, &x) in point.iter().enumerate() {
            let e = &self.grid.edges[axis];
            let n = shape[axis];
            let width = (e[n] - e[0]) / n as f64;
            let f = (x - e[0]) / width;
            let c = f.floor();
            if !f.is_finite() || c < -1.0 || c > n as f64 {
                return None;
            }
            let c = if x == e[n] { n as i64 - 1 } else { c as i64 };
            frac.push(f);
            cell.push(c);
        }
        let mut best: Option<(f64, usize)> = None;
        let dim = shape.len();
        let mut offset = vec![-1i64; dim];
        loop {
            let cand: Vec<i64> = cell.iter().zip(&offset).map(|(c, o)| c + o).collect();
            if cand.iter().zip(&shape).all(|(&c, &n)| c >= 0 && c < n as i64) {
                let multi: Vec<usize> = cand.iter().map(|&c| c as usize).collect();
                let flat = self.grid.flat_index(&multi);
                if self.frames.contains_key(&flat) {
                    let dist: f64 = multi
                        .iter()
                        .zip(&frac)
                        .map(|(&m, &f)| {
                            let d = f - (m as f64 + 0.5);
                            d * d
                        })
                        .sum();
                    let better = match best {
                        None => true,
                        Some((bd, bf)) => dist < bd || (dist == bd && flat < bf),
                    };
                    if better {
                        best = Some((dist, flat));
                    }
                }
            }
            // odometer over {-1, 0, 1}^dim
            let mut axis = 0;
            while axis < dim {
                offset[axis] += 1;
                if offset[axis] <= 1 {
                    break;
                }
                offset[axis] = -1;
                axis += 1;
            }
            if axis == dim {
                break;
            }
        }
        best.map(|(_, b)| b)
    }
}
