//! Slow, independent reference computations used to certify the fast
//! solvers: a projected-gradient max-margin solver with a KKT certificate, a
//! brute-force direction search in the plane, a grid oracle for the proximal
//! map, a pseudoinverse regression solution, and a Polyak-Lojasiewicz
//! constant estimate built from a Hoffman bound.
//!
//! Nothing here shares iteration code with the production solvers: the
//! max-margin reference runs projected gradient descent on the *limit* dual
//! objective (nonpositive orthant, no box, no penalty schedule), so agreement
//! between the two paths is meaningful evidence.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg;
use crate::model::{
    self, gram, signed_matrix, Dataset, DualPoint, Kernel, ModelError, SignedGram, SignedMatrix,
};

/// Iteration budget of the projected-gradient reference solver.
const MAX_ITERATIONS: usize = 10_000_000;

/// Dual values below this floor certify an unbounded objective, i.e. a
/// non-separable sample. The optimum equals `-||w*||^2 / 2`, so this floor is
/// only reachable when the true margin is below ~5e-4; instances handled by
/// this crate sit orders of magnitude above.
const VALUE_FLOOR: f64 = -1e7;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("sample is not linearly separable{detail}")]
    NonSeparable { detail: String },
    #[error("reference solver hit the iteration cap with step residual {residual:e}")]
    IterationCapExceeded { residual: f64 },
    #[error("KKT certificate failed: residual {residual:e} exceeds {bound:e}")]
    CertificateFailed { residual: f64, bound: f64 },
    #[error("instance has {n} points, this estimate enumerates subsets and is capped at n <= {max}")]
    InstanceTooLarge { n: usize, max: usize },
    #[error("linear system is inconsistent: residual {residual:e}")]
    InconsistentSystem { residual: f64 },
    #[error("direction search needs planar data, got d = {d}")]
    NotTwoDimensional { d: usize },
    #[error("grid needs at least two points, got {grid_size}")]
    GridTooSmall { grid_size: usize },
    #[error("starting dual vector must be nonpositive")]
    InfeasibleStart,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// KKT residuals of a max-margin candidate: all three vanish at the exact
/// solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `max_i max(0, 1 - y_i <w*, x_i>)`: violation of the margin
    /// constraints.
    pub primal_feasibility: f64,
    /// `max_i |u*_i (y_i <w*, x_i> - 1)|`: support vectors must sit exactly
    /// on the margin.
    pub complementary_slackness: f64,
    /// `||w* + Xs' u*||`: the primal-dual link (definitionally zero when w*
    /// is read off the dual, kept as a guard).
    pub stationarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal_feasibility
            .max(self.complementary_slackness)
            .max(self.stationarity)
    }
}

/// Certified minimal-norm separator.
///
/// For the linear kernel `w_star` is the separator itself. For a nonlinear
/// kernel the separator lives in feature space and only its dual coordinates
/// `u_star` are representable; `w_star = -Xs' u_star` is still reported (it
/// is the input-space shadow), while `norm_w_star` and `margin_at_w_star`
/// are computed through the Gram operator and remain exact in feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub w_star: Array1<f64>,
    pub u_star: DualPoint,
    pub norm_w_star: f64,
    pub margin_at_w_star: f64,
    pub kkt_residuals: KktResiduals,
}

impl OracleSolution {
    /// Optimal value of the limit dual objective,
    /// `D_inf(u*) = ||w*||^2 / 2 + <1, u*>` (equals `-||w*||^2 / 2` by strong
    /// duality, up to certificate accuracy).
    pub fn dual_value(&self) -> f64 {
        0.5 * self.norm_w_star * self.norm_w_star + self.u_star.u.sum()
    }
}

/// Minimal-norm separator by projected gradient descent on the limit dual
/// `D_inf(u) = u' Q u / 2 + <1, u>` over `u <= 0`, with step `1/||Q||`.
///
/// Returns only iterates whose KKT certificate holds with residual at most
/// `10 * tol`: a small step norm triggers a certificate attempt, and failed
/// attempts tighten the trigger until either the certificate passes or f64
/// runs out of precision. Non-separable samples are detected structurally:
/// either the dual value dives below a floor, or the windowed motion of the
/// iterate aligns with a recession ray (`d <= 0`, `Q d ~ 0`, `<1, d> < 0`),
/// which cannot happen for separable data because the dual is bounded below
/// there.
pub fn solve_max_margin(
    dataset: &Dataset,
    kernel: &Kernel,
    tol: f64,
) -> Result<OracleSolution, OracleError> {
    let g = gram(dataset, kernel)?;
    let xs = signed_matrix(dataset);
    if g.op_norm() == 0.0 {
        return Err(OracleError::NonSeparable {
            detail: ": Gram operator is zero, every margin vanishes".to_string(),
        });
    }
    let step = 1.0 / g.op_norm();
    let n = dataset.n();
    let mut u = Array1::<f64>::zeros(n);
    let mut checkpoint = u.clone();
    let mut last_residual = f64::INFINITY;
    let bound = 10.0 * tol;
    // Step-norm trigger for attempting a certificate; tightened whenever a
    // certificate attempt fails, since the step norm alone does not control
    // the KKT residual on ill-conditioned instances.
    let mut trigger = tol * step;

    for iter in 0..MAX_ITERATIONS {
        let qu = g.apply(&u);
        let value = 0.5 * u.dot(&qu) + u.sum();
        if value < VALUE_FLOOR {
            return Err(OracleError::NonSeparable {
                detail: format!(": dual objective unbounded below (reached {value:e})"),
            });
        }
        // On non-separable data the iterate escapes along a recession ray
        // d <= 0 with Q d = 0 and <1, d> < 0. Convergent coordinates settle,
        // so the motion over a window aligns with the ray: test the
        // normalized window displacement (restricted to its decreasing
        // coordinates) as an explicit certificate of unboundedness.
        if iter % 128 == 0 && iter > 0 {
            let motion = &u - &checkpoint;
            let m_norm = norm2(&motion);
            if m_norm >= 10.0 * step {
                let ray = motion.mapv(|v| if v <= -1e-6 * m_norm { v / m_norm } else { 0.0 });
                let ray_norm = norm2(&ray);
                if ray_norm >= 0.9
                    && norm2(&g.apply(&ray)) <= 1e-8 * g.op_norm() * ray_norm
                    && ray.sum() <= -1e-3
                {
                    return Err(OracleError::NonSeparable {
                        detail: ": found a recession ray of the dual".to_string(),
                    });
                }
            }
            checkpoint = u.clone();
        }
        let mut next = &u - &(step * (&qu + 1.0));
        next.mapv_inplace(|v| v.min(0.0));
        let diff = norm_diff(&next, &u);
        u = next;
        last_residual = diff;
        if diff <= trigger {
            let candidate = DualPoint { u: u.clone() };
            let sol = certify(&candidate, &g, &xs)?;
            let residual = sol.kkt_residuals.max();
            if residual <= bound {
                return Ok(sol);
            }
            if trigger <= f64::EPSILON * step {
                // The fixed point cannot be resolved any further in f64.
                // Infeasible margins at this precision mean the margins are
                // genuinely unreachable, not a numerical failure.
                if sol.kkt_residuals.primal_feasibility > bound
                    && sol.kkt_residuals.primal_feasibility > 1e-3
                {
                    return Err(OracleError::NonSeparable {
                        detail: format!(
                            ": best margin falls short of 1 by {:e}",
                            sol.kkt_residuals.primal_feasibility
                        ),
                    });
                }
                return Err(OracleError::CertificateFailed { residual, bound });
            }
            trigger *= 0.25;
        }
    }
    Err(OracleError::IterationCapExceeded {
        residual: last_residual,
    })
}

/// Assembles the solution record and its KKT certificate from a dual
/// candidate. Margins and norms go through the Gram operator so the same
/// code is exact for kernels.
fn certify(
    u_star: &DualPoint,
    g: &SignedGram,
    xs: &SignedMatrix,
) -> Result<OracleSolution, OracleError> {
    let qu = g.apply(&u_star.u);
    let margins = -&qu;
    let margin_at_w_star = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm_sq = (-&u_star.u).dot(&margins);
    let norm_w_star = norm_sq.max(0.0).sqrt();
    let w_star = model::dual_to_primal(u_star, xs);

    let mut primal = 0.0_f64;
    let mut compl_slack = 0.0_f64;
    for i in 0..u_star.len() {
        primal = primal.max(1.0 - margins[i]);
        compl_slack = compl_slack.max((u_star.u[i] * (margins[i] - 1.0)).abs());
    }
    let link = &w_star + &xs.transpose_apply(&u_star.u);
    let stationarity = norm2(&link);
    Ok(OracleSolution {
        w_star,
        u_star: u_star.clone(),
        norm_w_star,
        margin_at_w_star,
        kkt_residuals: KktResiduals {
            primal_feasibility: primal.max(0.0),
            complementary_slackness: compl_slack,
            stationarity,
        },
    })
}

/// Brute-force max-margin direction in the plane: scans `k` uniformly spaced
/// unit directions, then refines the best bracket by golden-section search.
/// Ties at the scan stage keep the smaller angle. Errors if the data is not
/// two-dimensional or no direction attains a positive margin.
pub fn max_margin_direction_grid(dataset: &Dataset, k: usize) -> Result<Array1<f64>, OracleError> {
    if dataset.d() != 2 {
        return Err(OracleError::NotTwoDimensional { d: dataset.d() });
    }
    if k < 4 {
        return Err(OracleError::GridTooSmall { grid_size: k });
    }
    let xs = signed_matrix(dataset);
    let margin_at = |theta: f64| -> f64 {
        let w = Array1::from_vec(vec![theta.cos(), theta.sin()]);
        crate::metrics::margin(w.view(), &xs)
    };

    let spacing = std::f64::consts::TAU / k as f64;
    let mut best_j = 0usize;
    let mut best_margin = f64::NEG_INFINITY;
    for j in 0..k {
        let m = margin_at(j as f64 * spacing);
        if m > best_margin {
            best_margin = m;
            best_j = j;
        }
    }

    // Golden-section refinement on the two cells around the best sample; the
    // margin is unimodal there when the maximizer is interior to the bracket.
    let golden = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = best_j as f64 * spacing - spacing;
    let mut b = best_j as f64 * spacing + spacing;
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let mut fc = margin_at(c);
    let mut fd = margin_at(d);
    for _ in 0..120 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = margin_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = margin_at(d);
        }
    }
    let theta = 0.5 * (a + b);
    let refined = margin_at(theta);
    let (theta, final_margin) = if refined >= best_margin {
        (theta, refined)
    } else {
        (best_j as f64 * spacing, best_margin)
    };
    if final_margin <= 0.0 {
        return Err(OracleError::NonSeparable {
            detail: format!(": best directional margin over the grid is {final_margin:e}"),
        });
    }
    Ok(Array1::from_vec(vec![theta.cos(), theta.sin()]))
}

/// Grid oracle for the proximal map: evaluates
/// `f(s) = s + (s - p)^2 / (2 gamma)` on a uniform grid over `[-1/lambda, 0]`
/// (inclusive endpoints) and returns the first grid argmin. Accuracy is one
/// grid cell: `|result - prox| <= (1/lambda) / (grid_size - 1)`.
pub fn prox_bruteforce(
    p: f64,
    gamma: f64,
    lambda: f64,
    grid_size: usize,
) -> Result<f64, OracleError> {
    if grid_size < 2 {
        return Err(OracleError::GridTooSmall { grid_size });
    }
    let lower = -1.0 / lambda;
    let step = -lower / (grid_size - 1) as f64;
    let mut best_s = lower;
    let mut best_f = f64::INFINITY;
    for i in 0..grid_size {
        let s = if i + 1 == grid_size {
            0.0
        } else {
            lower + i as f64 * step
        };
        let dlt = s - p;
        let f = s + dlt * dlt / (2.0 * gamma);
        if f < best_f {
            best_f = f;
            best_s = s;
        }
    }
    Ok(best_s)
}

/// Minimal-norm solution of the consistent system `X w = y` through the
/// pseudoinverse: `w = X' (X X')^+ y`, eigen-based with a relative rank
/// cutoff of `1e-12`. Errors if the residual shows the system is
/// inconsistent.
pub fn pseudoinverse_solution(
    x: &Array2<f64>,
    y: &Array1<f64>,
) -> Result<Array1<f64>, OracleError> {
    if x.nrows() != y.len() {
        return Err(OracleError::Model(ModelError::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        }));
    }
    let xxt = x.dot(&x.t());
    let z = linalg::psd_pinv_apply(&xxt, y, 1e-12);
    let w = x.t().dot(&z);
    let residual = norm_diff(&x.dot(&w), y);
    if residual > 1e-8 * norm2(y).max(1.0) {
        return Err(OracleError::InconsistentSystem { residual });
    }
    Ok(w)
}

/// Polyak-Lojasiewicz constant of the limit dual on its sublevel geometry:
///
/// ```text
/// mu = 1 / (8 tau^2 (9 M + 6 sqrt(2 M) R ||X|| + 2 R^2 ||X||^2 + 2))
/// ```
///
/// with `M = D_inf(u0) - D_inf(u*)`, `R = ||u0|| + 2 ||u*||`, `||X||` the
/// spectral norm of the signed matrix, and `tau` a Hoffman constant of the
/// constraint polyhedron, computed exactly as the maximum of
/// `1 / sigma_min(B)` over linearly independent row subsets of the stacked
/// matrix `[Xs'; 1'; I; -I]`. Subset enumeration is exponential, so the
/// instance is capped at `n <= 10`; linear kernel only.
pub fn estimate_mu(
    dataset: &Dataset,
    u0: &DualPoint,
    sol: &OracleSolution,
) -> Result<f64, OracleError> {
    const MAX_N: usize = 10;
    let n = dataset.n();
    if n > MAX_N {
        return Err(OracleError::InstanceTooLarge { n, max: MAX_N });
    }
    if u0.len() != n {
        return Err(OracleError::Model(ModelError::DimensionMismatch {
            expected: n,
            got: u0.len(),
        }));
    }
    let g = gram(dataset, &Kernel::Linear)?;
    let value0 = model::dual_objective_inf(u0, &g);
    if !value0.is_finite() {
        return Err(OracleError::InfeasibleStart);
    }
    let gap = value0 - sol.dual_value();
    let m = gap.max(0.0);
    let r = u0.norm() + 2.0 * sol.u_star.norm();
    let x_op = g.op_norm().max(0.0).sqrt();
    let tau = hoffman_tau(dataset);
    let denom = 9.0 * m + 6.0 * (2.0 * m).sqrt() * r * x_op + 2.0 * r * r * x_op * x_op + 2.0;
    Ok(1.0 / (8.0 * tau * tau * denom))
}

/// Hoffman constant by exhaustive enumeration: stacks the constraint rows
/// `[Xs'; 1'; I; -I]` (each a vector in R^n) and maximizes `1/sigma_min(B)`
/// over all linearly independent row subsets `B`. Dependent extensions are
/// pruned with a Gram-Schmidt residual test, which also silently drops
/// duplicate and opposite rows.
fn hoffman_tau(dataset: &Dataset) -> f64 {
    let xs = signed_matrix(dataset);
    let n = dataset.n();
    let d = dataset.d();
    let mut rows: Vec<Array1<f64>> = Vec::with_capacity(d + 1 + 2 * n);
    for j in 0..d {
        rows.push(xs.rows().column(j).to_owned());
    }
    rows.push(Array1::from_elem(n, 1.0));
    for i in 0..n {
        let mut e = Array1::<f64>::zeros(n);
        e[i] = 1.0;
        rows.push(e.clone());
        e[i] = -1.0;
        rows.push(e);
    }

    let mut best_inv_sigma = 0.0_f64;
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<Array1<f64>> = Vec::new();
    enumerate_subsets(
        &rows,
        0,
        &mut chosen,
        &mut basis,
        &mut best_inv_sigma,
    );
    best_inv_sigma
}

fn enumerate_subsets(
    rows: &[Array1<f64>],
    start: usize,
    chosen: &mut Vec<usize>,
    basis: &mut Vec<Array1<f64>>,
    best_inv_sigma: &mut f64,
) {
    let n = rows.first().map_or(0, |r| r.len());
    for idx in start..rows.len() {
        if chosen.len() == n {
            break;
        }
        let row = &rows[idx];
        let mut residual = row.clone();
        for b in basis.iter() {
            let coeff = residual.dot(b);
            residual.scaled_add(-coeff, b);
        }
        let res_norm = norm2(&residual);
        if res_norm <= 1e-10 * norm2(row).max(1.0) {
            continue;
        }
        chosen.push(idx);
        basis.push(&residual / res_norm);

        let mut b = Array2::<f64>::zeros((chosen.len(), n));
        for (k, &ri) in chosen.iter().enumerate() {
            b.row_mut(k).assign(&rows[ri]);
        }
        let sigma = linalg::smallest_singular_value(&b);
        if sigma > 0.0 {
            *best_inv_sigma = best_inv_sigma.max(1.0 / sigma);
        }
        enumerate_subsets(rows, idx + 1, chosen, basis, best_inv_sigma);

        basis.pop();
        chosen.pop();
    }
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
