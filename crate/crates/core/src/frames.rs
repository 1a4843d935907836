//! Local frames: per-bin matrices that whiten the second-order velocity
//! moment and diagonalize its contracted fourth-order moment.
//!
//! The solve is closed form. With `c2 = E Λ Eᵀ`, the whitening `W = Λ^{-1/2} Eᵀ`
//! satisfies `W c2 Wᵀ = I`. Any other whitening is `M = Oᵀ W` with `O`
//! orthogonal, and since `Mᵀ M = c2⁻¹` the contracted fourth-order moment of
//! the `M`-transformed velocity is
//!
//! ```text
//! Σ_m I_klmm = (M T Mᵀ)_kl,   T_kl = Σ_mn (c2⁻¹)_mn c4_klmn,
//! ```
//!
//! which equals `Oᵀ (W T Wᵀ) O`. Taking `O` from the eigendecomposition of the
//! symmetric matrix `S = W T Wᵀ` makes it diagonal. The solution is unique up
//! to a signed permutation of rows whenever the eigenvalues of `S` are distinct.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{best_signed_permutation, sym_eigen_desc};
use crate::model::{BinAlignment, BinGrid, FrameField, LocalFrame, LocalMoments, SignedPermutation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameOptions {
    /// Adjacent eigenvalues closer than `gap_tol · max|d|` flag the frame as degenerate.
    pub gap_tol: f64,
    /// `c2` is rejected when its smallest eigenvalue is below `cond_tol` times its largest.
    pub cond_tol: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-3,
            cond_tol: 1e-10,
        }
    }
}

/// Contracts the fourth-order moment with a symmetric matrix over its last
/// two indices: `T_kl = Σ_mn a_mn c4_klmn`.
pub fn contract_c4(moments: &LocalMoments, a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = moments.dim();
    DMatrix::from_fn(n, n, |k, l| {
        let mut s = 0.0;
        for m in 0..n {
            for q in 0..n {
                s += a[(m, q)] * moments.c4_at(k, l, m, q);
            }
        }
        s
    })
}

fn whitening(c2: &DMatrix<f64>, cond_tol: f64) -> Result<DMatrix<f64>> {
    let (lambda, e) = sym_eigen_desc(c2);
    let n = lambda.len();
    let (hi, lo) = (lambda[0], lambda[n - 1]);
    if !(hi > 0.0) || !(lo > cond_tol * hi) {
        return Err(Error::IllConditioned {
            ratio: if hi > 0.0 { lo / hi } else { 0.0 },
        });
    }
    let scale = DMatrix::from_diagonal(&lambda.map(|l| 1.0 / l.sqrt()));
    let mut w = scale * e.transpose();
    // one refinement pass: W ← G^{-1/2} W with G = W c2 Wᵀ
    let g = &w * c2 * w.transpose();
    if (&g - DMatrix::identity(n, n)).abs().max() > 1e-14 {
        let (mu, f) = sym_eigen_desc(&g);
        let inv_sqrt = &f * DMatrix::from_diagonal(&mu.map(|m| 1.0 / m.sqrt())) * f.transpose();
        w = inv_sqrt * w;
    }
    Ok(w)
}

/// Solves for the local frame of one bin. Rows come out ordered by descending `d`.
pub fn solve_frame(moments: &LocalMoments, opts: &FrameOptions) -> Result<LocalFrame> {
    let n = moments.dim();
    if moments.c2.iter().chain(&moments.c4).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteMoments);
    }
    let w = whitening(&moments.c2, opts.cond_tol)?;
    let c2_inv = w.transpose() * &w;
    let t = contract_c4(moments, &c2_inv);
    let s = &w * t * w.transpose();
    let (d, o) = sym_eigen_desc(&s);
    let m = o.transpose() * w;
    let v = m.clone().try_inverse().ok_or(Error::Singular)?;
    let d: Vec<f64> = d.iter().copied().collect();
    let scale = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let degenerate = d.windows(2).any(|p| p[0] - p[1] < opts.gap_tol * scale) || n == 0;
    Ok(LocalFrame { m, v, d, degenerate })
}

/// Residuals of the two defining conditions for a frame:
/// `‖M c2 Mᵀ − I‖∞` and the largest off-diagonal of `M T Mᵀ` relative to `max|d|`.
pub fn frame_residuals(frame: &LocalFrame, moments: &LocalMoments) -> (f64, f64) {
    let n = frame.dim();
    let whitened = &frame.m * &moments.c2 * frame.m.transpose();
    let whiten_err = (whitened - DMatrix::identity(n, n)).abs().max();
    let c2_inv = frame.m.transpose() * &frame.m;
    let contracted = &frame.m * contract_c4(moments, &c2_inv) * frame.m.transpose();
    let scale = frame.d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(contracted[(i, j)].abs());
            }
        }
    }
    (whiten_err, if scale > 0.0 { off / scale } else { off })
}

fn row_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// The signed permutation that maps `frame` to its canonical form.
pub fn canonical_permutation(frame: &LocalFrame) -> SignedPermutation {
    let n = frame.dim();
    // first entry of largest magnitude decides the row sign
    let signs: Vec<i8> = (0..n)
        .map(|i| {
            let lead = frame
                .m
                .row(i)
                .iter()
                .fold(0.0f64, |best, &x| if x.abs() > best.abs() { x } else { best });
            if lead < 0.0 {
                -1
            } else {
                1
            }
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| frame.m.row(i).iter().map(|x| f64::from(signs[i]) * x).collect())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        frame.d[j]
            .total_cmp(&frame.d[i])
            .then_with(|| row_cmp(&rows[i], &rows[j]))
    });
    let perm_signs = order.iter().map(|&i| signs[i]).collect();
    SignedPermutation::new(order, perm_signs).expect("sorting yields a permutation")
}

/// Fixes the local permutation/reflection freedom: rows ordered by descending
/// `d` (ties broken lexicographically), each row signed so its largest-magnitude
/// entry is positive.
pub fn canonicalize_frame(frame: &LocalFrame) -> LocalFrame {
    frame.permuted(&canonical_permutation(frame))
}

/// Canonicalizes every frame and resolves the remaining per-bin signed
/// permutations by a breadth-first pass over face-adjacent occupied bins.
///
/// Each connected component starts from its most populated bin. A newly
/// reached bin takes the signed permutation `P` minimizing
/// `Σ ‖P·M_new·M_ref⁻¹ − I‖_F²` over its already aligned neighbours. Degenerate
/// frames never act as references; they are aligned afterwards against
/// aligned non-degenerate neighbours when any exist.
pub fn align_frame_field(grid: &BinGrid, frames: BTreeMap<usize, LocalFrame>) -> FrameField {
    let canonical: BTreeMap<usize, LocalFrame> = frames.iter().map(|(b, f)| (*b, canonicalize_frame(f))).collect();
    let n = canonical.values().next().map_or(0, LocalFrame::dim);
    let mut aligned: BTreeMap<usize, LocalFrame> = BTreeMap::new();
    let mut alignment: BTreeMap<usize, BinAlignment> = BTreeMap::new();

    let anchors: BTreeSet<usize> = canonical
        .iter()
        .filter(|(_, f)| !f.degenerate)
        .map(|(b, _)| *b)
        .collect();
    let mut roots: Vec<usize> = anchors.iter().copied().collect();
    roots.sort_by(|a, b| grid.count(*b).cmp(&grid.count(*a)).then(a.cmp(b)));

    let correction_against = |bin: usize, aligned: &BTreeMap<usize, LocalFrame>| -> Option<SignedPermutation> {
        let frame = &canonical[&bin];
        let refs: Vec<&LocalFrame> = grid
            .face_neighbors(bin)
            .into_iter()
            .filter(|nb| anchors.contains(nb))
            .filter_map(|nb| aligned.get(&nb))
            .collect();
        if refs.is_empty() {
            return None;
        }
        let mut score = DMatrix::zeros(n, n);
        for r in refs {
            score += (&frame.m * &r.v).transpose();
        }
        Some(best_signed_permutation(&score))
    };

    let mut component = 0;
    for root in roots {
        if aligned.contains_key(&root) {
            continue;
        }
        aligned.insert(root, canonical[&root].clone());
        alignment.insert(
            root,
            BinAlignment {
                correction: SignedPermutation::identity(n),
                component,
            },
        );
        let mut queue = VecDeque::from([root]);
        while let Some(bin) = queue.pop_front() {
            for nb in grid.face_neighbors(bin) {
                if !anchors.contains(&nb) || aligned.contains_key(&nb) {
                    continue;
                }
                let p = correction_against(nb, &aligned).expect("bin has an aligned neighbour");
                aligned.insert(nb, canonical[&nb].permuted(&p));
                alignment.insert(
                    nb,
                    BinAlignment {
                        correction: p,
                        component,
                    },
                );
                queue.push_back(nb);
            }
        }
        component += 1;
    }

    for (&bin, frame) in &canonical {
        if aligned.contains_key(&bin) || !frame.degenerate {
            continue;
        }
        let (p, comp) = match correction_against(bin, &aligned) {
            Some(p) => {
                let comp = grid
                    .face_neighbors(bin)
                    .into_iter()
                    .filter(|nb| anchors.contains(nb))
                    .find_map(|nb| alignment.get(&nb).map(|a| a.component))
                    .expect("reference neighbour is aligned");
                (p, comp)
            }
            None => {
                component += 1;
                (SignedPermutation::identity(n), component - 1)
            }
        };
        aligned.insert(bin, frame.permuted(&p));
        alignment.insert(
            bin,
            BinAlignment {
                correction: p,
                component: comp,
            },
        );
    }

    FrameField {
        grid: grid.clone(),
        frames: aligned,
        alignment,
        components: component,
    }
}

/// Bins whose frame could not be solved, with the reason.
pub type SkippedBins = Vec<(usize, Error)>;

/// Solves, canonicalizes and aligns frames for every bin with moments.
/// Bins whose moments are singular or non-finite are skipped and reported.
pub fn build_frame_field(
    grid: &BinGrid,
    moments: &BTreeMap<usize, LocalMoments>,
    opts: &FrameOptions,
) -> Result<(FrameField, SkippedBins)> {
    let mut frames = BTreeMap::new();
    let mut skipped = Vec::new();
    for (&bin, m) in moments {
        match solve_frame(m, opts) {
            Ok(f) => {
                frames.insert(bin, f);
            }
            Err(e) => skipped.push((bin, e)),
        }
    }
    if frames.is_empty() {
        return Err(Error::EmptyField);
    }
    Ok((align_frame_field(grid, frames), skipped))
}

/// Result of comparing two frames against the covariant transformation law.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformLawCheck {
    /// `R = M'(x') · (M(x) · ∂x/∂x')⁻¹`, which the law says is a signed permutation.
    pub relation: DMatrix<f64>,
    pub permutation: SignedPermutation,
    /// `‖R − P‖_F`.
    pub residual: f64,
}

/// Tests `M'(x') = P · M(x) · ∂x/∂x'` for some signed permutation `P`.
pub fn check_transform_law(
    m_x: &DMatrix<f64>,
    m_xprime: &DMatrix<f64>,
    jacobian: &DMatrix<f64>,
) -> Result<TransformLawCheck> {
    let n = m_x.nrows();
    for m in [m_x, m_xprime, jacobian] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows().max(m.ncols()),
            });
        }
    }
    if jacobian.clone().try_inverse().is_none() || jacobian.determinant() == 0.0 {
        return Err(Error::Singular);
    }
    let pulled = m_x * jacobian;
    let inv = pulled.try_inverse().ok_or(Error::Singular)?;
    let relation = m_xprime * inv;
    let permutation = best_signed_permutation(&relation);
    let residual = (&relation - permutation.matrix()).norm();
    Ok(TransformLawCheck {
        relation,
        permutation,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn moments_from_samples(samples: &[Vec<f64>]) -> LocalMoments {
        let n = samples[0].len();
        let count = samples.len() as f64;
        let mean = DVector::from_fn(n, |i, _| samples.iter().map(|s| s[i]).sum::<f64>() / count);
        let mut c2 = DMatrix::zeros(n, n);
        let mut c4 = vec![0.0; n.pow(4)];
        for s in samples {
            let c: Vec<f64> = (0..n).map(|i| s[i] - mean[i]).collect();
            for k in 0..n {
                for l in 0..n {
                    c2[(k, l)] += c[k] * c[l] / count;
                    for m in 0..n {
                        for q in 0..n {
                            c4[((k * n + l) * n + m) * n + q] += c[k] * c[l] * c[m] * c[q] / count;
                        }
                    }
                }
            }
        }
        LocalMoments {
            count: samples.len(),
            mean_vel: mean,
            c2,
            c4,
        }
    }

    /// Moments with c2 = I and c4 chosen so T = diag(t).
    fn diagonal_moments(t: &[f64]) -> LocalMoments {
        let n = t.len();
        let mut c4 = vec![0.0; n.pow(4)];
        // c4_kkkk = t_k - (n - 1) and c4_kkmm (k≠m) = 1 in all symmetric placements
        for k in 0..n {
            for m in 0..n {
                if k == m {
                    c4[((k * n + k) * n + k) * n + k] = t[k] - (n as f64 - 1.0);
                } else {
                    for (a, b, c, d) in [(k, k, m, m), (k, m, k, m), (k, m, m, k)] {
                        c4[((a * n + b) * n + c) * n + d] = 1.0;
                    }
                }
            }
        }
        LocalMoments {
            count: 1000,
            mean_vel: DVector::zeros(n),
            c2: DMatrix::identity(n, n),
            c4,
        }
    }

    #[test]
    fn identity_c2_with_diagonal_contraction() {
        let mom = diagonal_moments(&[2.0, 7.0, 4.0]);
        let t = contract_c4(&mom, &DMatrix::identity(3, 3));
        assert!(
            (t - DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 7.0, 4.0])))
                .abs()
                .max()
                < 1e-14
        );
        let f = solve_frame(&mom, &FrameOptions::default()).unwrap();
        let p = best_signed_permutation(&f.m);
        assert!((&f.m - p.matrix()).abs().max() < 1e-12);
        assert!((f.d[0] - 7.0).abs() < 1e-12 && (f.d[1] - 4.0).abs() < 1e-12 && (f.d[2] - 2.0).abs() < 1e-12);
        assert!(!f.degenerate);
    }

    #[test]
    fn one_dimensional_frame_is_inverse_root_of_c2() {
        let x: f64 = 0.6;
        let c = 1.0 - x * x;
        let mom = LocalMoments {
            count: 100,
            mean_vel: DVector::zeros(1),
            c2: DMatrix::from_element(1, 1, c),
            c4: vec![1.5 * c * c],
        };
        let f = canonicalize_frame(&solve_frame(&mom, &FrameOptions::default()).unwrap());
        assert!((f.m[(0, 0)] - 1.0 / c.sqrt()).abs() < 1e-12);
        assert!((f.v[(0, 0)] - c.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_and_non_finite_moments_are_rejected() {
        let mut mom = diagonal_moments(&[2.0, 5.0]);
        mom.c2[(1, 1)] = 0.0;
        assert!(matches!(
            solve_frame(&mom, &FrameOptions::default()),
            Err(Error::IllConditioned { .. })
        ));
        let mut mom = diagonal_moments(&[2.0, 5.0]);
        mom.c4[3] = f64::NAN;
        assert!(matches!(
            solve_frame(&mom, &FrameOptions::default()),
            Err(Error::NonFiniteMoments)
        ));
    }

    #[test]
    fn degenerate_contraction_is_flagged() {
        let f = solve_frame(&diagonal_moments(&[3.0, 3.0]), &FrameOptions::default()).unwrap();
        assert!(f.degenerate);
    }

    /// Two independent non-Gaussian channels scaled by (σ₁, σ₂): the frame is
    /// diag(1/σ₁, 1/σ₂) up to signed permutation, and the transformed samples
    /// recomputed by brute force satisfy both defining conditions.
    #[test]
    fn independent_channels_recover_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (s1, s2) = (3.0, 0.4);
        let samples: Vec<Vec<f64>> = (0..200_000)
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0f64..1.0) * 3f64.sqrt(); // uniform, unit variance
                let u: f64 = rng.gen_range(1e-12..1.0);
                let b = -(u.ln()) * if rng.gen::<bool>() { 1.0 } else { -1.0 } / 2f64.sqrt(); // Laplace
                vec![s1 * a, s2 * b]
            })
            .collect();
        let mom = moments_from_samples(&samples);
        let f = canonicalize_frame(&solve_frame(&mom, &FrameOptions::default()).unwrap());
        let p = best_signed_permutation(&f.m);
        let expected = p.matrix() * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / s1, 1.0 / s2]));
        assert!((&f.m - expected).abs().max() < 0.03, "{}", f.m);
        // brute-force recheck in transformed coordinates
        let transformed: Vec<Vec<f64>> = samples
            .iter()
            .map(|s| (&f.m * DVector::from_column_slice(s)).iter().copied().collect())
            .collect();
        let tm = moments_from_samples(&transformed);
        assert!((&tm.c2 - DMatrix::identity(2, 2)).abs().max() < 1e-10);
        let contracted = contract_c4(&tm, &DMatrix::identity(2, 2));
        assert!(contracted[(0, 1)].abs() < 1e-8 * contracted[(0, 0)].abs().max(contracted[(1, 1)].abs()));
    }

    fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> LocalFrame {
        let samples: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                (0..n)
                    .map(|i| rng.gen_range(-1.0f64..1.0).powi(2 * i as i32 + 1) * (i + 1) as f64)
                    .collect::<Vec<_>>()
            })
            .map(|v| {
                let mix = DMatrix::from_fn(n, n, |r, c| {
                    if r == c {
                        1.0
                    } else {
                        0.3 * (r + 2 * c) as f64 / n as f64
                    }
                });
                (mix * DVector::from_vec(v)).iter().copied().collect()
            })
            .collect();
        solve_frame(&moments_from_samples(&samples), &FrameOptions::default()).unwrap()
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            let f = canonicalize_frame(&random_frame(&mut rng, n));
            assert_eq!(canonicalize_frame(&f), f);
        }
    }

    #[test]
    fn negated_row_has_same_canonical_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_frame(&mut rng, 2);
        let flip = SignedPermutation::new(vec![0, 1], vec![1, -1]).unwrap();
        assert_eq!(canonicalize_frame(&f.permuted(&flip)), canonicalize_frame(&f));
    }

    #[test]
    fn canonical_form_is_constant_on_orbits() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 1..=3 {
            let f = random_frame(&mut rng, n);
            let c = canonicalize_frame(&f);
            for p in SignedPermutation::all(n) {
                assert_eq!(canonicalize_frame(&f.permuted(&p)), c);
            }
            // exact ties on d fall back to the rows
            let mut tied = f.clone();
            tied.d = vec![1.0; n];
            let ct = canonicalize_frame(&tied);
            for p in SignedPermutation::all(n) {
                assert_eq!(canonicalize_frame(&tied.permuted(&p)), ct);
            }
        }
    }

    fn grid_2d(nx: usize, ny: usize) -> BinGrid {
        let edges = vec![
            (0..=nx).map(|i| i as f64).collect(),
            (0..=ny).map(|i| i as f64).collect(),
        ];
        let mut members = BTreeMap::new();
        for b in 0..nx * ny {
            members.insert(b, vec![b; 10 + b]);
        }
        BinGrid {
            edges,
            min_count: 1,
            members,
            assignment: vec![],
        }
    }

    fn smooth_frame(theta: f64, scale: f64) -> LocalFrame {
        let (c, s) = (theta.cos(), theta.sin());
        let m = DMatrix::from_row_slice(2, 2, &[2.0 * scale * c, 2.0 * scale * s, -s / scale, c / scale]);
        let v = m.clone().try_inverse().unwrap();
        LocalFrame {
            m,
            v,
            d: vec![5.0 + theta, 1.0],
            degenerate: false,
        }
    }

    #[test]
    fn shared_frame_needs_no_corrections() {
        let grid = grid_2d(3, 3);
        let f = smooth_frame(0.2, 1.0);
        let frames = (0..9).map(|b| (b, f.clone())).collect();
        let field = align_frame_field(&grid, frames);
        assert!(field.alignment.values().all(|a| a.correction.is_identity()));
        assert_eq!(field.components, 1);
    }

    #[test]
    fn swapped_rows_are_swapped_back() {
        let grid = grid_2d(2, 1);
        let mut f = smooth_frame(0.1, 1.0);
        f.d = vec![1.0, 1.0 + 1e-9];
        f.degenerate = false;
        let swapped = f.permuted(&SignedPermutation::new(vec![1, 0], vec![1, 1]).unwrap());
        let frames = BTreeMap::from([(0, f.clone()), (1, swapped)]);
        let field = align_frame_field(&grid, frames);
        let a = &field.frames[&0];
        let b = &field.frames[&1];
        assert!((&a.m - &b.m).abs().max() < 1e-12);
    }

    /// Random signed permutations injected into a smooth field are undone up
    /// to one global signed permutation.
    #[test]
    fn injected_permutations_are_recovered() {
        let (nx, ny) = (6, 5);
        let grid = grid_2d(nx, ny);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let all = SignedPermutation::all(2);
        let truth: BTreeMap<usize, LocalFrame> = (0..nx * ny)
            .map(|b| {
                let idx = grid.multi_index(b);
                let theta = 0.08 * idx[0] as f64 + 0.05 * idx[1] as f64;
                (b, smooth_frame(theta, 1.0 + 0.05 * idx[1] as f64))
            })
            .collect();
        let scrambled = truth
            .iter()
            .map(|(b, f)| (*b, f.permuted(&all[rng.gen_range(0..all.len())])))
            .collect();
        let field = align_frame_field(&grid, scrambled);
        let root = &field.frames[&0];
        let global = best_signed_permutation(&(&root.m * &truth[&0].v));
        for (b, f) in &field.frames {
            let want = global.matrix() * &truth[b].m;
            assert!((&f.m - want).abs().max() < 1e-12, "bin {b}");
        }
    }

    #[test]
    fn disconnected_components_are_reported() {
        let grid = grid_2d(5, 1);
        let f = smooth_frame(0.0, 1.0);
        let frames = BTreeMap::from([(0, f.clone()), (1, f.clone()), (3, f.clone()), (4, f)]);
        let field = align_frame_field(&grid, frames);
        assert_eq!(field.components, 2);
        assert_ne!(field.alignment[&0].component, field.alignment[&4].component);
    }

    #[test]
    fn transform_law_exact_cases() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 2.0]);
        let jac = DMatrix::from_row_slice(2, 2, &[0.7, 0.1, 0.3, 1.4]);
        let check = check_transform_law(&m, &(&m * &jac), &jac).unwrap();
        assert!(check.permutation.is_identity());
        assert!(check.residual < 1e-14);
        let p = SignedPermutation::new(vec![1, 0], vec![-1, 1]).unwrap();
        let check = check_transform_law(&m, &(p.matrix() * &m * &jac), &jac).unwrap();
        assert_eq!(check.permutation, p);
        assert!(check.residual < 1e-14);
        assert!(matches!(
            check_transform_law(&m, &m, &DMatrix::zeros(2, 2)),
            Err(Error::Singular)
        ));
    }
}
