//! Data model shared by every solver: datasets with signed labels, kernels,
//! the label-signed sample matrix and its Gram operator, dual variables, and
//! the dual objectives.
//!
//! Conventions used throughout the crate:
//!
//! - labels are exactly `+1.0` or `-1.0`;
//! - the signed matrix `Xs` stacks the rows `y_i * x_i'`, so the penalized
//!   dual objective reads `D_lambda(u) = u' Q u / 2 + <1, u>` over the box
//!   `-1/lambda <= u_i <= 0` with `Q = Xs Xs'` (or the kernel Gram
//!   `q_ij = y_i y_j K(x_i, x_j)`);
//! - the primal iterate is recovered as `w = -Xs' u`;
//! - a score of exactly zero classifies as `+1`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Absolute slack allowed on box-constraint membership when evaluating the
/// dual objectives: iterates produced by clamping can sit on a boundary up to
/// round-off.
pub const BOX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset needs at least one point")]
    EmptyDataset,
    #[error("dataset needs at least one feature dimension")]
    NoFeatures,
    #[error("expected one label per point: {points} points, {labels} labels")]
    LabelCountMismatch { points: usize, labels: usize },
    #[error("label at index {index} is {value}, labels must be +1 or -1")]
    LabelNotSigned { index: usize, value: f64 },
    #[error("feature ({row}, {col}) is not finite")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("gaussian kernel width sigma2 = {sigma2} must be positive and finite")]
    InvalidKernelWidth { sigma2: f64 },
    #[error("matrix is not symmetric: max |q_ij - q_ji| = {max_asymmetry:e}")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("matrix is not positive semidefinite: smallest eigenvalue estimate {min_eigenvalue:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A labeled sample: `n` points in `R^d` with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Array2<f64>,
    labels: Array1<f64>,
}

impl Dataset {
    /// Validates shapes, label values, and finiteness.
    pub fn new(points: Array2<f64>, labels: Array1<f64>) -> Result<Self, ModelError> {
        if points.nrows() == 0 {
            return Err(ModelError::EmptyDataset);
        }
        if points.ncols() == 0 {
            return Err(ModelError::NoFeatures);
        }
        if points.nrows() != labels.len() {
            return Err(ModelError::LabelCountMismatch {
                points: points.nrows(),
                labels: labels.len(),
            });
        }
        for (i, &y) in labels.iter().enumerate() {
            if y != 1.0 && y != -1.0 {
                return Err(ModelError::LabelNotSigned { index: i, value: y });
            }
        }
        for ((r, c), &v) in points.indexed_iter() {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteFeature { row: r, col: c });
            }
        }
        Ok(Self { points, labels })
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn d(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }
}

/// The label-signed sample matrix: row `i` is `y_i * x_i'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMatrix {
    rows: Array2<f64>,
}

impl SignedMatrix {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.rows.row(i)
    }

    /// `Xs' u`, the adjoint applied to a dual vector.
    pub fn transpose_apply(&self, u: &Array1<f64>) -> Array1<f64> {
        self.rows.t().dot(u)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.rows.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Builds the signed matrix `Xs` with rows `y_i * x_i'`.
pub fn signed_matrix(dataset: &Dataset) -> SignedMatrix {
    let mut rows = dataset.points().clone();
    for (i, mut row) in rows.rows_mut().into_iter().enumerate() {
        let y = dataset.label(i);
        row.mapv_inplace(|v| y * v);
    }
    SignedMatrix { rows }
}

/// Positive-definite kernels supported by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `K(x, x') = <x, x'>`.
    Linear,
    /// `K(x, x') = exp(-||x - x'||^2 / (2 sigma2))`.
    Gaussian { sigma2: f64 },
}

impl Kernel {
    /// Rejects non-positive or non-finite Gaussian widths.
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Gaussian { sigma2 } => {
                if sigma2 > 0.0 && sigma2.is_finite() {
                    Ok(())
                } else {
                    Err(ModelError::InvalidKernelWidth { sigma2 })
                }
            }
        }
    }

    /// Evaluates the kernel on a pair of points. The width is assumed valid.
    pub fn eval(&self, x: ArrayView1<'_, f64>, x2: ArrayView1<'_, f64>) -> f64 {
        match *self {
            Kernel::Linear => x.dot(&x2),
            Kernel::Gaussian { sigma2 } => {
                let mut sq = 0.0;
                for (a, b) in x.iter().zip(x2.iter()) {
                    let dlt = a - b;
                    sq += dlt * dlt;
                }
                (-sq / (2.0 * sigma2)).exp()
            }
        }
    }
}

/// The signed Gram operator `Q` (with `q_ij = y_i y_j K(x_i, x_j)`) together
/// with a cached spectral-norm estimate. This is the only object the dual
/// solvers multiply by, so linear and kernel problems run through identical
/// code.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGram {
    q: Array2<f64>,
    op_norm: f64,
}

impl SignedGram {
    /// Wraps an explicit symmetric positive-semidefinite matrix.
    ///
    /// Symmetry is checked exactly to `1e-12` relative slack; semidefiniteness
    /// through a shifted power-iteration estimate of the smallest eigenvalue
    /// (tolerance `-1e-8 * max(1, op_norm)`).
    pub fn new(q: Array2<f64>) -> Result<Self, ModelError> {
        let n = q.nrows();
        if n != q.ncols() {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: q.ncols(),
            });
        }
        let mut scale = 0.0_f64;
        for &v in q.iter() {
            scale = scale.max(v.abs());
        }
        let mut max_asym = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max_asym = max_asym.max((q[[i, j]] - q[[j, i]]).abs());
            }
        }
        if max_asym > 1e-12 * scale.max(1.0) {
            return Err(ModelError::NotSymmetric {
                max_asymmetry: max_asym,
            });
        }
        let op_norm = power_iteration(&q, 1500, 1e-13);
        // lambda_min(Q) = op_norm - lambda_max(op_norm * I - Q); an early-
        // stopped estimate only errs on the forgiving side.
        let mut shifted = -&q;
        for i in 0..n {
            shifted[[i, i]] += op_norm;
        }
        let min_eig = op_norm - power_iteration(&shifted, 200, 1e-10);
        if min_eig < -1e-8 * op_norm.max(1.0) {
            return Err(ModelError::NotPositiveSemidefinite {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { q, op_norm })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &Array2<f64> {
        &self.q
    }

    /// Cached spectral norm (largest eigenvalue; `Q` is PSD).
    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    /// `Q u`.
    pub fn apply(&self, u: &Array1<f64>) -> Array1<f64> {
        self.q.dot(u)
    }
}

/// Builds the signed Gram operator for a dataset under a kernel.
pub fn gram(dataset: &Dataset, kernel: &Kernel) -> Result<SignedGram, ModelError> {
    kernel.validate()?;
    let n = dataset.n();
    let mut q = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = dataset.label(i)
                * dataset.label(j)
                * kernel.eval(dataset.point(i), dataset.point(j));
            q[[i, j]] = v;
            q[[j, i]] = v;
        }
    }
    SignedGram::new(q)
}

/// Cached spectral norm of the Gram operator.
pub fn operator_norm(gram: &SignedGram) -> f64 {
    gram.op_norm()
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Deterministic: starts from the normalized all-ones vector and stops on a
/// Rayleigh-quotient stall or after a fixed iteration budget. Returns the
/// largest Rayleigh quotient sampled, which can only under-approximate the
/// true norm (the 0.999 safety factor used for step sizes absorbs the
/// residual error). A start vector orthogonal to the whole spectrum (the
/// first iterate collapses to zero on a nonzero matrix) triggers a single
/// seeded random restart.
fn power_iteration(q: &Array2<f64>, max_iter: usize, stall_tol: f64) -> f64 {
    let n = q.nrows();
    let ones = Array1::<f64>::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut best = power_iteration_from(q, ones, max_iter, stall_tol);
    let scale = q.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    // The all-ones start can sit in (or round into) the dominant eigenspace's
    // orthogonal complement; when the estimate is negligible against the
    // entries, retry once from a seeded random direction.
    if best <= 1e-12 * scale && scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
        let mut v = Array1::<f64>::zeros(n);
        v.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        let norm = norm2(&v);
        if norm > 0.0 {
            v.mapv_inplace(|x| x / norm);
            best = best.max(power_iteration_from(q, v, max_iter, stall_tol));
        }
    }
    best
}

fn power_iteration_from(
    q: &Array2<f64>,
    mut v: Array1<f64>,
    max_iter: usize,
    stall_tol: f64,
) -> f64 {
    let mut best = 0.0_f64;
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        let qv = q.dot(&v);
        let rayleigh = v.dot(&qv);
        best = best.max(rayleigh);
        if (rayleigh - prev).abs() <= stall_tol * rayleigh.abs().max(1.0) {
            break;
        }
        prev = rayleigh;
        let norm = norm2(&qv);
        if norm == 0.0 {
            break;
        }
        v = qv / norm;
    }
    best.max(0.0)
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A dual variable: one coordinate per training point, nonpositive when
/// feasible, and confined to `[-1/lambda, 0]` while penalty `lambda` is
/// active.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub u: Array1<f64>,
}

impl DualPoint {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: Array1::zeros(n),
        }
    }

    pub fn from_vec(u: Vec<f64>) -> Self {
        Self {
            u: Array1::from_vec(u),
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.u)
    }
}

/// Finite part of the dual objective, `u' Q u / 2 + <1, u>`. Shared by both
/// extended objectives; only the feasible set differs.
fn dual_value(u: &DualPoint, gram: &SignedGram) -> f64 {
    let qu = gram.apply(&u.u);
    0.5 * u.u.dot(&qu) + u.u.sum()
}

/// Penalized dual objective `D_lambda(u)`: the quadratic value on the box
/// `[-1/lambda, 0]^n`, `+inf` outside it (membership tested with
/// [`BOX_TOLERANCE`] slack).
pub fn dual_objective_t(u: &DualPoint, lambda: f64, gram: &SignedGram) -> f64 {
    assert!(lambda > 0.0, "penalty must be positive");
    let lower = -1.0 / lambda;
    for &ui in u.u.iter() {
        if ui > BOX_TOLERANCE || ui < lower - BOX_TOLERANCE {
            return f64::INFINITY;
        }
    }
    dual_value(u, gram)
}

/// Limit dual objective `D_inf(u)`: the quadratic value on the nonpositive
/// orthant, `+inf` outside it.
pub fn dual_objective_inf(u: &DualPoint, gram: &SignedGram) -> f64 {
    for &ui in u.u.iter() {
        if ui > BOX_TOLERANCE {
            return f64::INFINITY;
        }
    }
    dual_value(u, gram)
}

/// Primal iterate `w = -Xs' u` associated with a dual variable.
pub fn dual_to_primal(u: &DualPoint, xs: &SignedMatrix) -> Array1<f64> {
    -xs.transpose_apply(&u.u)
}

/// Real-valued score of a test point under the dual representation:
/// `score(x) = -sum_i u_i y_i K(x_i, x)`. For the linear kernel this equals
/// `<w, x>` with `w = dual_to_primal(u)`.
pub fn predict(
    u: &DualPoint,
    train: &Dataset,
    kernel: &Kernel,
    x: ArrayView1<'_, f64>,
) -> Result<f64, ModelError> {
    kernel.validate()?;
    if x.len() != train.d() {
        return Err(ModelError::DimensionMismatch {
            expected: train.d(),
            got: x.len(),
        });
    }
    if u.len() != train.n() {
        return Err(ModelError::DimensionMismatch {
            expected: train.n(),
            got: u.len(),
        });
    }
    let mut score = 0.0;
    for i in 0..train.n() {
        score -= u.u[i] * train.label(i) * kernel.eval(train.point(i), x);
    }
    Ok(score)
}

/// Hard label for a score; ties at zero classify as `+1`.
pub fn classify(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
