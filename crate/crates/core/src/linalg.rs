//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::model::{permutations, SignedPermutation};

/// Largest dimension for which signed-permutation searches are exhaustive.
pub const EXHAUSTIVE_MAX_DIM: usize = 4;

/// Symmetric eigendecomposition with eigenvalues in descending order and
/// eigenvectors as the matching columns. Each eigenvector's largest-magnitude
/// component is made positive so the result is deterministic.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        let lead = col
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if lead < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(c, &col);
    }
    (values, vectors)
}

/// The signed permutation `P` maximizing `Σ_j P[j][perm[j]] · score[j][perm[j]]`,
/// i.e. the one closest to `score` in Frobenius norm when `score` is near a
/// signed permutation. Exhaustive up to [`EXHAUSTIVE_MAX_DIM`], Hungarian
/// assignment on `|score|` beyond.
pub fn best_signed_permutation(score: &DMatrix<f64>) -> SignedPermutation {
    let n = score.nrows();
    assert_eq!(n, score.ncols(), "score matrix must be square");
    let perm = if n <= EXHAUSTIVE_MAX_DIM {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for p in permutations(n) {
            let total: f64 = p.iter().enumerate().map(|(j, &c)| score[(j, c)].abs()).sum();
            if best.as_ref().is_none_or(|(b, _)| total > *b) {
                best = Some((total, p));
            }
        }
        best.map(|(_, p)| p).unwrap_or_default()
    } else {
        let gain = score.map(f64::abs);
        hungarian_max(&gain)
    };
    let signs = perm
        .iter()
        .enumerate()
        .map(|(j, &c)| if score[(j, c)] < 0.0 { -1 } else { 1 })
        .collect();
    SignedPermutation::new(perm, signs).expect("assignment yields a permutation")
}

/// Maximum-weight perfect assignment; returns `col[row]`.
fn hungarian_max(gain: &DMatrix<f64>) -> Vec<usize> {
    let n = gain.nrows();
    let top = gain.iter().copied().fold(0.0f64, f64::max);
    let cost = |i: usize, j: usize| top - gain[(i, j)];
    // shortest augmenting path formulation, 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            col[p[j] - 1] = j - 1;
        }
    }
    col
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let (vals, vecs) = sym_eigen_desc(&a);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((rebuilt - a).abs().max() < 1e-12);
    }

    #[test]
    fn recovers_a_noisy_signed_permutation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            for p in SignedPermutation::all(n) {
                let noise = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.2..0.2));
                assert_eq!(best_signed_permutation(&(p.matrix() + noise)), p);
            }
        }
    }

    #[test]
    fn hungarian_agrees_with_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            for _ in 0..20 {
                let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
                let brute = permutations(n)
                    .into_iter()
                    .map(|p| p.iter().enumerate().map(|(i, &j)| g[(i, j)]).sum::<f64>())
                    .fold(f64::MIN, f64::max);
                let col = hungarian_max(&g);
                let got: f64 = col.iter().enumerate().map(|(i, &j)| g[(i, j)]).sum();
                assert!((got - brute).abs() < 1e-12, "n={n}: {got} vs {brute}");
            }
        }
    }
}
