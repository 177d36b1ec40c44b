//! Small dense symmetric eigen routines for the reference computations.
//!
//! The oracle module needs exact-ish eigenvalues of tiny symmetric matrices
//! (pseudoinverses, smallest singular values of row subsets, a dense check
//! for the power iteration). A cyclic Jacobi sweep is plenty at these sizes
//! and keeps the crate free of external LAPACK linkage.

use ndarray::{Array1, Array2};

/// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi.
///
/// Returns `(values, vectors)` with `vectors` column `k` the unit eigenvector
/// for `values[k]`; values are sorted ascending. Off-diagonal mass shrinks
/// quadratically per sweep; 60 sweeps is far beyond what n <= ~30 needs.
///
/// Panics if the input is not square. Symmetry is assumed, only the upper
/// triangle drives the rotations.
pub fn sym_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    if n <= 1 {
        return (m.diag().to_owned(), v);
    }

    for _ in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off.sqrt() <= 1e-300 || off <= 1e-32 * frob_sq(&m).max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                // Classic stable rotation: tan of the half-angle from the
                // quadratic, cos/sin from it.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].partial_cmp(&m[[j, j]]).unwrap());
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, new_col]] = v[[row, old_col]];
        }
    }
    (values, vectors)
}

fn frob_sq(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(a: &Array2<f64>) -> Array1<f64> {
    sym_eigen(a).0
}

/// Smallest singular value of a rectangular matrix with full row rank
/// intent: computed as sqrt of the smallest eigenvalue of `B B'` (clamped at
/// zero against round-off).
pub fn smallest_singular_value(b: &Array2<f64>) -> f64 {
    let gram = b.dot(&b.t());
    let vals = sym_eigenvalues(&gram);
    vals[0].max(0.0).sqrt()
}

/// Minimal-norm solution of `B z = y` for symmetric positive semidefinite
/// `B`, via eigendecomposition with a relative rank cutoff.
pub fn psd_pinv_apply(b: &Array2<f64>, y: &Array1<f64>, rel_cutoff: f64) -> Array1<f64> {
    let (vals, vecs) = sym_eigen(b);
    let max_val = vals.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rel_cutoff * max_val.max(1e-300);
    let mut z = Array1::<f64>::zeros(y.len());
    for k in 0..vals.len() {
        if vals[k] > cutoff {
            let col = vecs.column(k);
            let coeff = col.dot(y) / vals[k];
            z.scaled_add(coeff, &col);
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_of_diagonal_is_sorted_diagonal() {
        let a = array![[3.0, 0.0], [0.0, -1.0]];
        let vals = sym_eigenvalues(&a);
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = array![
            [4.0, 1.0, -2.0],
            [1.0, 2.0, 0.5],
            [-2.0, 0.5, 3.0]
        ];
        let (vals, vecs) = sym_eigen(&a);
        // A = V diag(vals) V'
        let mut recon = Array2::<f64>::zeros((3, 3));
        for k in 0..3 {
            let col = vecs.column(k);
            for i in 0..3 {
                for j in 0..3 {
                    recon[[i, j]] += vals[k] * col[i] * col[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((recon[[i, j]] - a[[i, j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn smallest_singular_value_of_known_matrix() {
        // B = [[1, 0], [0, 2]] has singular values {1, 2}.
        let b = array![[1.0, 0.0], [0.0, 2.0]];
        assert!((smallest_singular_value(&b) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pinv_apply_solves_consistent_system() {
        let b = array![[2.0, 0.0], [0.0, 0.0]];
        let y = array![4.0, 0.0];
        let z = psd_pinv_apply(&b, &y, 1e-12);
        assert!((z[0] - 2.0).abs() < 1e-10);
        assert!(z[1].abs() < 1e-12);
    }
}
