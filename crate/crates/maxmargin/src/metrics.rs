//! Trace metrics: margins, gaps against a reference solution, test error,
//! and the Lyapunov energy of the inertial solver.
//!
//! Gap metrics compare a primal iterate `w` against an oracle solution
//! `(w*, u*)`. Margins and gaps are scale-aware: `margin_gap` and `angle_gap`
//! normalize both vectors, so they measure direction only and are invariant
//! under positive rescaling of `w`. Iterates with `||w|| <= 1e-12` have no
//! direction and are reported as degenerate rather than silently producing
//! garbage.

use ndarray::ArrayView1;
use thiserror::Error;

use crate::model::{self, Dataset, DualPoint, Kernel, ModelError, SignedMatrix};
use crate::oracle::OracleSolution;

/// Norm below which an iterate has no usable direction.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("iterate norm {norm:e} is too small to normalize")]
    DegenerateIterate { norm: f64 },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One row of a solver trace. Optional fields are absent when they cannot be
/// computed: gap metrics need an oracle solution, `test_error` needs a test
/// set, `energy` exists only for inertial iterates past the duplicated
/// starting row, and degenerate iterates have no direction-based gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub t: u64,
    pub lambda_t: f64,
    pub dual_obj: f64,
    pub dual_gap: Option<f64>,
    pub norm_error: Option<f64>,
    pub margin: f64,
    pub margin_gap: Option<f64>,
    pub angle_gap: Option<f64>,
    pub test_error: Option<f64>,
    pub energy: Option<f64>,
}

/// Smallest signed functional margin of `w` over the sample:
/// `min_i y_i <w, x_i>`. Positive iff `w` separates the sample.
pub fn margin(w: ArrayView1<'_, f64>, xs: &SignedMatrix) -> f64 {
    let mut min = f64::INFINITY;
    for row in xs.rows().rows() {
        min = min.min(row.dot(&w));
    }
    min
}

/// Margin of the normalized oracle direction minus the margin of the
/// normalized iterate: `M(w*/||w*||) - M(w/||w||)`. Nonnegative up to oracle
/// accuracy, zero iff `w` points along the max-margin direction.
pub fn margin_gap(
    w: ArrayView1<'_, f64>,
    sol: &OracleSolution,
    xs: &SignedMatrix,
) -> Result<f64, MetricsError> {
    let norm = norm2(w);
    if norm <= DEGENERATE_NORM {
        return Err(MetricsError::DegenerateIterate { norm });
    }
    let best = margin(sol.w_star.view(), xs) / sol.norm_w_star;
    Ok(best - margin(w, xs) / norm)
}

/// Cosine gap `1 - <w, w*> / (||w|| ||w*||)`, in `[0, 2]`: zero iff aligned,
/// two iff opposite. Round-off is clamped back into the interval.
pub fn angle_gap(w: ArrayView1<'_, f64>, sol: &OracleSolution) -> Result<f64, MetricsError> {
    let norm = norm2(w);
    if norm <= DEGENERATE_NORM {
        return Err(MetricsError::DegenerateIterate { norm });
    }
    let cos = w.dot(&sol.w_star.view()) / (norm * sol.norm_w_star);
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

/// Gap metrics of a dual iterate computed through the Gram operator alone,
/// valid under any kernel. See [`gram_space_gaps`].
#[derive(Debug, Clone, PartialEq)]
pub struct GramGaps {
    pub margin: f64,
    pub norm_error: Option<f64>,
    pub margin_gap: Option<f64>,
    pub angle_gap: Option<f64>,
}

/// Computes margin and gap metrics for a dual iterate `u` in feature space,
/// using only Gram products: the feature-space margin is `min_i (-Q u)_i`,
/// the iterate's norm is `sqrt(u' Q u)`, and inner products against the
/// reference expansion go through `Q u*`.
///
/// `qu` must be `Q u` for the same Gram operator that defines the feature
/// space; `reference` carries the oracle solution together with its
/// precomputed `Q u*`. Without a reference only the margin is available;
/// iterates with feature norm at most [`DEGENERATE_NORM`] have no direction
/// and get `None` direction gaps. Under the linear kernel every value agrees
/// with the corresponding primal-space metric on `w = -Xs' u`.
pub fn gram_space_gaps(
    u: &DualPoint,
    qu: &ndarray::Array1<f64>,
    reference: Option<(&OracleSolution, &ndarray::Array1<f64>)>,
) -> GramGaps {
    let margin = qu.iter().fold(f64::INFINITY, |m, &v| m.min(-v));
    let (norm_error, margin_gap, angle_gap) = match reference {
        Some((sol, qu_star)) => {
            // ||w - w*||^2 in feature space is (u - u*)' Q (u - u*).
            let mut err_sq = 0.0;
            for i in 0..u.len() {
                err_sq += (u.u[i] - sol.u_star.u[i]) * (qu[i] - qu_star[i]);
            }
            let norm_error = err_sq.max(0.0).sqrt();
            let norm = u.u.dot(qu).max(0.0).sqrt();
            if norm <= DEGENERATE_NORM {
                (Some(norm_error), None, None)
            } else {
                let best = sol.margin_at_w_star / sol.norm_w_star;
                let mgap = best - margin / norm;
                let cos = u.u.dot(qu_star) / (norm * sol.norm_w_star);
                (
                    Some(norm_error),
                    Some(mgap),
                    Some((1.0 - cos).clamp(0.0, 2.0)),
                )
            }
        }
        None => (None, None, None),
    };
    GramGaps {
        margin,
        norm_error,
        margin_gap,
        angle_gap,
    }
}

/// Fraction of test points whose hard label disagrees with the truth. Scores
/// of exactly zero classify as `+1`.
pub fn zero_one_error(
    u: &DualPoint,
    train: &Dataset,
    kernel: &Kernel,
    test: &Dataset,
) -> Result<f64, MetricsError> {
    if test.n() == 0 {
        return Err(MetricsError::EmptyTestSet);
    }
    let mut wrong = 0usize;
    for i in 0..test.n() {
        let score = model::predict(u, train, kernel, test.point(i))?;
        if model::classify(score) != test.label(i) {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test.n() as f64)
}

/// Lyapunov energy of the inertial recursion at iterate `t >= 1`:
///
/// ```text
/// E_t = (t + alpha - 1)^2 (D_t(u_t) - D_inf(u*))
///     + (1 / (2 gamma)) || (alpha - 1)(u_prev - u*) + (t + alpha - 1)(u_t - u_prev) ||^2.
/// ```
///
/// Non-increasing in `t` (for `t >= 1`) when `alpha >= 3` and the starting
/// penalty satisfies `lambda_0 <= 1 / ||u*||`; the caller passes the already
/// computed penalized dual value `dual_obj_t = D_t(u_t)`.
pub fn inertial_energy(
    t: u64,
    u_t: &DualPoint,
    u_prev: &DualPoint,
    sol: &OracleSolution,
    alpha: f64,
    gamma: f64,
    dual_obj_t: f64,
) -> f64 {
    let weight = t as f64 + alpha - 1.0;
    let nu = alpha - 1.0;
    let gap = dual_obj_t - sol.dual_value();
    let mut quad = 0.0;
    for i in 0..u_t.len() {
        let v = nu * (u_prev.u[i] - sol.u_star.u[i]) + weight * (u_t.u[i] - u_prev.u[i]);
        quad += v * v;
    }
    weight * weight * gap + quad / (2.0 * gamma)
}

fn norm2(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
