//! Velocities, the state-space bin grid, and per-bin velocity moments.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BinGrid, LocalMoments, Trajectory, VelocitySeries, MAX_DIM};

/// Finite-difference stencil for velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffScheme {
    /// `(x[k+1] - x[k]) / dt`; the last sample is invalid.
    Forward,
    /// `(x[k+1] - x[k-1]) / (2 dt)`; both endpoints are invalid.
    #[default]
    Central,
}

impl std::str::FromStr for DiffScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(DiffScheme::Forward),
            "central" => Ok(DiffScheme::Central),
            other => Err(Error::InvalidArgument(format!("unknown difference scheme '{other}'"))),
        }
    }
}

pub fn estimate_velocity(traj: &Trajectory, scheme: DiffScheme) -> Result<VelocitySeries> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let dim = traj.dim();
    let dt = traj.dt();
    let mut data = vec![0.0; n * dim];
    let mut valid = vec![false; n];
    match scheme {
        DiffScheme::Central => {
            for k in 1..n - 1 {
                let (prev, next) = (traj.sample(k - 1), traj.sample(k + 1));
                for i in 0..dim {
                    data[k * dim + i] = (next[i] - prev[i]) / (2.0 * dt);
                }
                valid[k] = true;
            }
        }
        DiffScheme::Forward => {
            for k in 0..n - 1 {
                let (cur, next) = (traj.sample(k), traj.sample(k + 1));
                for i in 0..dim {
                    data[k * dim + i] = (next[i] - cur[i]) / dt;
                }
                valid[k] = true;
            }
        }
    }
    VelocitySeries::new(data, dim, dt, valid)
}

/// `50 · N²` samples per bin.
pub fn default_min_count(dim: usize) -> usize {
    50 * dim * dim
}

/// Equal-width edges over `[min, max]` of every axis; the last edge is exactly
/// the maximum so the top sample lands in the last bin.
pub fn equal_width_edges(traj: &Trajectory, bins_per_axis: &[usize]) -> Result<Vec<Vec<f64>>> {
    if bins_per_axis.len() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: bins_per_axis.len(),
        });
    }
    let mut edges = Vec::with_capacity(traj.dim());
    for (axis, &count) in bins_per_axis.iter().enumerate() {
        if count == 0 {
            return Err(Error::InvalidArgument(format!("axis {axis} needs at least one bin")));
        }
        let (lo, hi) = traj.samples().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s[axis]), hi.max(s[axis]))
        });
        if !(hi > lo) {
            return Err(Error::ZeroRange { axis });
        }
        let mut e: Vec<f64> = (0..=count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect();
        e[count] = hi;
        edges.push(e);
    }
    Ok(edges)
}

/// Bins every sample (those with `valid[k]` set, when a mask is given) into
/// the grid described by `edges`. Samples outside the edges are left unassigned.
pub fn assign_to_grid(
    traj: &Trajectory,
    valid: Option<&[bool]>,
    edges: Vec<Vec<f64>>,
    min_count: usize,
) -> Result<BinGrid> {
    if edges.len() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: edges.len(),
        });
    }
    if edges
        .iter()
        .any(|e| e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])))
    {
        return Err(Error::InvalidArgument("bin edges must be strictly increasing".into()));
    }
    if let Some(mask) = valid {
        if mask.len() != traj.len() {
            return Err(Error::DimensionMismatch {
                expected: traj.len(),
                found: mask.len(),
            });
        }
    }
    let mut grid = BinGrid {
        edges,
        min_count,
        members: BTreeMap::new(),
        assignment: vec![None; traj.len()],
    };
    for (k, s) in traj.samples().enumerate() {
        if valid.is_none_or(|m| m[k]) {
            if let Some(bin) = grid.locate(s) {
                grid.assignment[k] = Some(bin);
                grid.members.entry(bin).or_default().push(k);
            }
        }
    }
    Ok(grid)
}

/// Equal-width grid over the observed range with a per-axis bin count.
pub fn build_grid(
    traj: &Trajectory,
    valid: Option<&[bool]>,
    bins_per_axis: &[usize],
    min_count: usize,
) -> Result<BinGrid> {
    let edges = equal_width_edges(traj, bins_per_axis)?;
    assign_to_grid(traj, valid, edges, min_count)
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Non-decreasing index tuples of length `order` over `0..dim`.
fn sorted_tuples(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, order: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == order {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(dim, order, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, order, 0, &mut Vec::with_capacity(order), &mut out);
    out
}

fn moments_of(vel: &VelocitySeries, members: &[usize]) -> LocalMoments {
    let dim = vel.dim();
    let count = members.len();
    let inv = 1.0 / count as f64;
    let mut mean = DVector::zeros(dim);
    for i in 0..dim {
        let mut acc = Compensated::default();
        for &k in members {
            acc.add(vel.value(k)[i]);
        }
        mean[i] = acc.value() * inv;
    }
    let centred: Vec<f64> = members
        .iter()
        .flat_map(|&k| {
            vel.value(k)
                .iter()
                .zip(mean.iter())
                .map(|(v, m)| v - m)
                .collect::<Vec<_>>()
        })
        .collect();
    let row = |j: usize| &centred[j * dim..(j + 1) * dim];

    let mut c2 = DMatrix::zeros(dim, dim);
    for t in sorted_tuples(dim, 2) {
        let mut acc = Compensated::default();
        for j in 0..count {
            let r = row(j);
            acc.add(r[t[0]] * r[t[1]]);
        }
        let v = acc.value() * inv;
        c2[(t[0], t[1])] = v;
        c2[(t[1], t[0])] = v;
    }

    let mut c4 = vec![0.0; dim.pow(4)];
    for t in sorted_tuples(dim, 4) {
        let mut acc = Compensated::default();
        for j in 0..count {
            let r = row(j);
            acc.add(r[t[0]] * r[t[1]] * r[t[2]] * r[t[3]]);
        }
        let v = acc.value() * inv;
        for p in crate::model::permutations(4) {
            let (a, b, c, d) = (t[p[0]], t[p[1]], t[p[2]], t[p[3]]);
            c4[((a * dim + b) * dim + c) * dim + d] = v;
        }
    }
    LocalMoments {
        count,
        mean_vel: mean,
        c2,
        c4,
    }
}

/// Centred second- and fourth-order velocity moments for every occupied bin.
/// Only samples with a valid velocity take part.
pub fn accumulate_moments(
    traj: &Trajectory,
    vel: &VelocitySeries,
    grid: &BinGrid,
) -> Result<BTreeMap<usize, LocalMoments>> {
    if vel.len() != traj.len() || grid.assignment().len() != traj.len() {
        return Err(Error::DimensionMismatch {
            expected: traj.len(),
            found: if vel.len() != traj.len() {
                vel.len()
            } else {
                grid.assignment().len()
            },
        });
    }
    if vel.dim() > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {} exceeds the supported maximum of {MAX_DIM}",
            vel.dim()
        )));
    }
    let mut out = BTreeMap::new();
    for (&bin, members) in grid.members() {
        let valid: Vec<usize> = members.iter().copied().filter(|&k| vel.is_valid(k)).collect();
        if valid.len() >= grid.min_count().max(1) {
            out.insert(bin, moments_of(vel, &valid));
        }
    }
    if out.is_empty() {
        return Err(Error::NoOccupiedBins);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::gen_sine;
    use rand::{seq::SliceRandom, Rng, SeedableRng};

    fn line(values: &[f64], dt: f64) -> Trajectory {
        Trajectory::from_samples(values.iter().map(|v| vec![*v]).collect(), dt).unwrap()
    }

    #[test]
    fn central_difference_on_ramp() {
        let v = estimate_velocity(&line(&[0.0, 1.0, 2.0], 1.0), DiffScheme::Central).unwrap();
        assert_eq!(v.get(1), Some(&[1.0][..]));
        assert!(v.get(0).is_none() && v.get(2).is_none());
    }

    #[test]
    fn forward_difference_marks_last_invalid() {
        let v = estimate_velocity(&line(&[0.0, 2.0, 3.0], 0.5), DiffScheme::Forward).unwrap();
        assert_eq!(v.get(0), Some(&[4.0][..]));
        assert_eq!(v.get(1), Some(&[2.0][..]));
        assert!(v.get(2).is_none());
    }

    #[test]
    fn constant_signal_has_zero_velocity() {
        let v = estimate_velocity(&line(&[3.0; 10], 0.1), DiffScheme::Central).unwrap();
        assert!((0..10).filter_map(|k| v.get(k)).all(|x| x[0] == 0.0));
    }

    #[test]
    fn central_difference_accuracy_on_sine() {
        let t = gen_sine(1.0, 0.01, 200).unwrap();
        let v = estimate_velocity(&t, DiffScheme::Central).unwrap();
        // Taylor remainder: |error| ≤ dt²/6 · max|x'''| = 1.7e-5
        assert!((v.get(100).unwrap()[0] - 1f64.cos()).abs() < 1e-4);
        assert!((v.get(100).unwrap()[0] - 1f64.cos()).abs() < 0.01f64.powi(2) / 6.0 + 1e-12);
    }

    #[test]
    fn too_few_samples() {
        assert!(Trajectory::from_samples(vec![vec![0.0], vec![1.0]], 1.0).is_err());
    }

    #[test]
    fn grid_edges_and_half_open_bins() {
        let t = line(&[0.0, 0.3, 0.5, 0.9, 1.0], 1.0);
        let g = build_grid(&t, None, &[4], 1).unwrap();
        assert_eq!(g.edges()[0], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.assignment()[2], Some(2));
        // the maximum lands in the last bin
        assert_eq!(g.assignment()[4], Some(3));
        assert_eq!(g.assignment()[0], Some(0));
    }

    #[test]
    fn zero_range_axis_is_rejected() {
        let t = Trajectory::from_samples(vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]], 1.0).unwrap();
        assert!(matches!(
            build_grid(&t, None, &[2, 2], 1),
            Err(Error::ZeroRange { axis: 1 })
        ));
    }

    /// Binomial occupancy: each of 128 bins holds 500000/128 ± 4σ samples.
    #[test]
    fn uniform_occupancy_is_binomial() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut values: Vec<f64> = (0..500_000).map(|_| rng.gen::<f64>()).collect();
        values[0] = 0.0;
        values[1] = 1.0;
        let t = line(&values, 1.0);
        let g = build_grid(&t, None, &[128], 1).unwrap();
        let n = 500_000f64;
        let p = 1.0 / 128.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for b in 0..128 {
            assert!(
                (g.count(b) as f64 - n * p).abs() < 4.0 * sigma,
                "bin {b}: {}",
                g.count(b)
            );
        }
        let total: usize = g.members().values().map(Vec::len).sum();
        assert_eq!(total, 500_000);
    }

    #[test]
    fn symmetric_velocities_give_unit_moments() {
        let t = line(&[0.0, 0.1, 0.2, 0.3], 1.0);
        let vel = VelocitySeries::new(vec![1.0, -1.0, 1.0, -1.0], 1, 1.0, vec![true; 4]).unwrap();
        let g = build_grid(&t, None, &[1], 1).unwrap();
        let m = accumulate_moments(&t, &vel, &g).unwrap();
        let b = &m[&0];
        assert_eq!(b.mean_vel[0], 0.0);
        assert_eq!(b.c2[(0, 0)], 1.0);
        assert_eq!(b.c4[0], 1.0);
    }

    #[test]
    fn identical_velocities_give_zero_c2() {
        let t = line(&[0.0, 0.1, 0.2, 0.3], 1.0);
        let vel = VelocitySeries::new(vec![2.0; 4], 1, 1.0, vec![true; 4]).unwrap();
        let g = build_grid(&t, None, &[1], 1).unwrap();
        let m = accumulate_moments(&t, &vel, &g).unwrap();
        assert_eq!(m[&0].c2[(0, 0)], 0.0);
    }

    #[test]
    fn no_occupied_bins_is_an_error() {
        let t = line(&[0.0, 0.1, 0.2, 0.3], 1.0);
        let vel = estimate_velocity(&t, DiffScheme::Central).unwrap();
        let g = build_grid(&t, Some(vel.valid_mask()), &[2], 10).unwrap();
        assert!(matches!(accumulate_moments(&t, &vel, &g), Err(Error::NoOccupiedBins)));
    }

    #[test]
    fn sine_second_moment_matches_closed_form() {
        let t = gen_sine(1.0, 0.01, 100_000).unwrap();
        let vel = estimate_velocity(&t, DiffScheme::Central).unwrap();
        let g = build_grid(&t, Some(vel.valid_mask()), &[128], default_min_count(1)).unwrap();
        let m = accumulate_moments(&t, &vel, &g).unwrap();
        assert_eq!(m.len(), 128);
        for (&bin, mom) in &m {
            let x = g.bin_center(bin)[0];
            assert!((mom.c2[(0, 0)] - (1.0 - x * x)).abs() < 0.05, "bin {bin}");
        }
    }

    fn random_2d(seed: u64, n: usize) -> (Trajectory, VelocitySeries) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let t = Trajectory::from_samples(samples, 0.1).unwrap();
        let data: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0f64).powi(3)).collect();
        (t, VelocitySeries::new(data, 2, 0.1, vec![true; n]).unwrap())
    }

    #[test]
    fn moments_are_symmetric_and_psd() {
        let (t, vel) = random_2d(8, 20_000);
        let g = build_grid(&t, None, &[3, 3], 200).unwrap();
        let m = accumulate_moments(&t, &vel, &g).unwrap();
        let total: usize = m.values().map(|b| b.count).sum();
        assert_eq!(total, 20_000);
        for b in m.values() {
            assert_eq!(b.c2, b.c2.transpose());
            assert!(b.c2.clone().symmetric_eigenvalues().min() >= 0.0);
            for p in crate::model::permutations(4) {
                for idx in 0..16usize {
                    let i = [idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1];
                    assert_eq!(
                        b.c4_at(i[0], i[1], i[2], i[3]),
                        b.c4_at(i[p[0]], i[p[1]], i[p[2]], i[p[3]])
                    );
                }
            }
        }
    }

    #[test]
    fn shuffling_samples_barely_changes_moments() {
        let (t, vel) = random_2d(9, 20_000);
        let g = build_grid(&t, None, &[2, 2], 100).unwrap();
        let base = accumulate_moments(&t, &vel, &g).unwrap();
        let mut order: Vec<usize> = (0..t.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
        let ts = Trajectory::from_samples(order.iter().map(|&k| t.sample(k).to_vec()).collect(), 0.1).unwrap();
        let vs = VelocitySeries::new(
            order.iter().flat_map(|&k| vel.value(k).to_vec()).collect(),
            2,
            0.1,
            vec![true; t.len()],
        )
        .unwrap();
        let gs = build_grid(&ts, None, &[2, 2], 100).unwrap();
        let shuffled = accumulate_moments(&ts, &vs, &gs).unwrap();
        for (bin, a) in &base {
            let b = &shuffled[bin];
            assert!((&a.c2 - &b.c2).abs().max() <= 1e-10 * a.c2.abs().max());
            let scale = a.c4.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(a.c4.iter().zip(&b.c4).all(|(x, y)| (x - y).abs() <= 1e-10 * scale));
        }
    }

    #[test]
    fn affine_rescaling_preserves_membership_and_scales_moments() {
        let (t, vel) = random_2d(10, 5_000);
        let (sx, sy) = (4.0, 0.5);
        let ts = t
            .map_samples(2, t.channel_names().to_vec(), |_, s, o| {
                o[0] = sx * s[0] + 3.0;
                o[1] = sy * s[1] - 1.0;
                Ok(())
            })
            .unwrap();
        let vs = VelocitySeries::new(
            vel.as_flat().chunks(2).flat_map(|v| [sx * v[0], sy * v[1]]).collect(),
            2,
            0.1,
            vec![true; t.len()],
        )
        .unwrap();
        let g = build_grid(&t, None, &[4, 4], 50).unwrap();
        let gs = build_grid(&ts, None, &[4, 4], 50).unwrap();
        assert_eq!(g.assignment(), gs.assignment());
        let a = accumulate_moments(&t, &vel, &g).unwrap();
        let b = accumulate_moments(&ts, &vs, &gs).unwrap();
        let s = [sx, sy];
        for (bin, ma) in &a {
            let mb = &b[bin];
            for i in 0..2 {
                for j in 0..2 {
                    let want = s[i] * s[j] * ma.c2[(i, j)];
                    assert!((mb.c2[(i, j)] - want).abs() <= 1e-12 * want.abs().max(1e-300) + 1e-15);
                }
            }
            for idx in 0..16usize {
                let i = [idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1];
                let f: f64 = i.iter().map(|&k| s[k]).product();
                let want = f * ma.c4_at(i[0], i[1], i[2], i[3]);
                assert!((mb.c4_at(i[0], i[1], i[2], i[3]) - want).abs() <= 1e-12 * want.abs() + 1e-18);
            }
        }
    }
}
