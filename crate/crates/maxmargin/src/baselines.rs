//! Primal gradient baselines.
//!
//! Foils for the dual solvers: plain gradient descent on smooth margin
//! losses, subgradient descent on the hinge loss, and gradient descent on
//! the least-squares loss. None of them regularize, so their behavior
//! contrasts with the penalized dual iteration in three ways worth
//! measuring:
//!
//! * smooth margin losses (exponential, logistic) drive `||w_t||` to
//!   infinity on separable data while the direction drifts toward the
//!   max-margin separator only at a crawling `log` rate;
//! * hinge subgradient descent stalls at any interior weight vector whose
//!   margins all exceed 1, however far that vector is from max-margin;
//! * least-squares gradient descent converges to the minimal-norm
//!   interpolant of the labels, which is a different object than the
//!   minimal-norm separator.

use ndarray::Array1;
use thiserror::Error;

use crate::model::{signed_matrix, Dataset};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("step size {gamma} must be positive and finite")]
    InvalidStep { gamma: f64 },
    #[error("weight vector has length {got}, dataset has {expected} features")]
    WrongWeightLength { expected: usize, got: usize },
    #[error("the hinge loss is not differentiable; use subgrad_hinge")]
    HingeNotSmooth,
}

/// Margin losses `l(a)` evaluated at `a = y <w, x>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginLoss {
    /// `l(a) = exp(-a)`.
    Exponential,
    /// `l(a) = ln(1 + exp(-a))`.
    Logistic,
    /// `l(a) = max(0, 1 - a)`; subgradient only.
    Hinge,
}

impl MarginLoss {
    /// Loss value, computed stably for large `|a|`.
    pub fn value(&self, a: f64) -> f64 {
        match self {
            // Clip the exponent so huge negative margins saturate instead
            // of overflowing.
            MarginLoss::Exponential => (-a.max(-700.0)).exp(),
            MarginLoss::Logistic => {
                if a > 0.0 {
                    (-a).exp().ln_1p()
                } else {
                    -a + a.exp().ln_1p()
                }
            }
            MarginLoss::Hinge => (1.0 - a).max(0.0),
        }
    }

    /// Derivative `l'(a)`; for the hinge this is the subgradient choice
    /// that is 0 at the kink.
    pub fn derivative(&self, a: f64) -> f64 {
        match self {
            MarginLoss::Exponential => -(-a.max(-700.0)).exp(),
            // -sigma(-a), computed through the stable sigmoid branch.
            MarginLoss::Logistic => -1.0 / (1.0 + a.exp()),
            MarginLoss::Hinge => {
                if a < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Step-size rule for subgradient descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `gamma_t = c`.
    Constant(f64),
    /// `gamma_t = c / sqrt(t + 1)`.
    InvSqrt(f64),
}

impl StepRule {
    fn at(&self, t: usize) -> f64 {
        match self {
            StepRule::Constant(c) => *c,
            StepRule::InvSqrt(c) => c / ((t + 1) as f64).sqrt(),
        }
    }

    fn base(&self) -> f64 {
        match self {
            StepRule::Constant(c) | StepRule::InvSqrt(c) => *c,
        }
    }
}

/// History of a primal run: iterates, their smallest signed margins, and
/// objective values. All vectors hold `T + 1` entries including the start.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalTrace {
    pub ws: Vec<Array1<f64>>,
    pub margins: Vec<f64>,
    pub objectives: Vec<f64>,
}

fn check_step(gamma: f64) -> Result<(), BaselineError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(BaselineError::InvalidStep { gamma })
    }
}

fn check_start(w0: &Array1<f64>, d: usize) -> Result<(), BaselineError> {
    if w0.len() == d {
        Ok(())
    } else {
        Err(BaselineError::WrongWeightLength {
            expected: d,
            got: w0.len(),
        })
    }
}

/// Gradient descent on `sum_i l(y_i <w, x_i>)` for a smooth margin loss.
///
/// `w <- w - gamma * sum_i y_i x_i l'(y_i <w, x_i>)`. Rejects the hinge,
/// whose kink needs [`subgrad_hinge`].
pub fn gd_margin_loss(
    dataset: &Dataset,
    loss: MarginLoss,
    w0: &Array1<f64>,
    gamma: f64,
    iterations: usize,
) -> Result<PrimalTrace, BaselineError> {
    if loss == MarginLoss::Hinge {
        return Err(BaselineError::HingeNotSmooth);
    }
    check_step(gamma)?;
    check_start(w0, dataset.d())?;
    let xs = signed_matrix(dataset);
    let mut w = w0.clone();
    let mut trace = PrimalTrace {
        ws: Vec::with_capacity(iterations + 1),
        margins: Vec::with_capacity(iterations + 1),
        objectives: Vec::with_capacity(iterations + 1),
    };
    record(&mut trace, &w, &xs, |a| loss.value(a));
    for _ in 0..iterations {
        let mut grad = Array1::<f64>::zeros(dataset.d());
        for i in 0..xs.n() {
            let a = xs.row(i).dot(&w);
            grad.scaled_add(loss.derivative(a), &xs.row(i));
        }
        w.scaled_add(-gamma, &grad);
        record(&mut trace, &w, &xs, |a| loss.value(a));
    }
    Ok(trace)
}

/// Subgradient descent on the summed hinge loss with a step rule.
///
/// Uses the subgradient that vanishes at margins `>= 1`, so any weight
/// vector whose margins all clear 1 is a fixed point.
pub fn subgrad_hinge(
    dataset: &Dataset,
    w0: &Array1<f64>,
    rule: StepRule,
    iterations: usize,
) -> Result<PrimalTrace, BaselineError> {
    check_step(rule.base())?;
    check_start(w0, dataset.d())?;
    let xs = signed_matrix(dataset);
    let loss = MarginLoss::Hinge;
    let mut w = w0.clone();
    let mut trace = PrimalTrace {
        ws: Vec::with_capacity(iterations + 1),
        margins: Vec::with_capacity(iterations + 1),
        objectives: Vec::with_capacity(iterations + 1),
    };
    record(&mut trace, &w, &xs, |a| loss.value(a));
    for t in 0..iterations {
        let mut grad = Array1::<f64>::zeros(dataset.d());
        for i in 0..xs.n() {
            let a = xs.row(i).dot(&w);
            grad.scaled_add(loss.derivative(a), &xs.row(i));
        }
        w.scaled_add(-rule.at(t), &grad);
        record(&mut trace, &w, &xs, |a| loss.value(a));
    }
    Ok(trace)
}

/// Gradient descent on `1/2 ||X w - y||^2`.
///
/// Computed through signed rows as `1/2 sum_i (y_i <w, x_i> - 1)^2`, which
/// equals the plain residual square since `y_i^2 = 1`. With a small enough
/// step this converges, from zero, to the minimal-norm least-squares
/// solution `X^+ y`.
pub fn gd_least_squares(
    dataset: &Dataset,
    w0: &Array1<f64>,
    gamma: f64,
    iterations: usize,
) -> Result<PrimalTrace, BaselineError> {
    check_step(gamma)?;
    check_start(w0, dataset.d())?;
    let xs = signed_matrix(dataset);
    let mut w = w0.clone();
    let mut trace = PrimalTrace {
        ws: Vec::with_capacity(iterations + 1),
        margins: Vec::with_capacity(iterations + 1),
        objectives: Vec::with_capacity(iterations + 1),
    };
    let objective = |w: &Array1<f64>| -> f64 {
        // Residuals of X w = y in signed form: y_i <w, x_i> - 1, since
        // dividing X w - y by y_i = +-1 preserves the square.
        let mut s = 0.0;
        for i in 0..xs.n() {
            let r = xs.row(i).dot(w) - 1.0;
            s += r * r;
        }
        0.5 * s
    };
    trace.ws.push(w.clone());
    trace
        .margins
        .push(margin_of(&w, &xs));
    trace.objectives.push(objective(&w));
    for _ in 0..iterations {
        let mut grad = Array1::<f64>::zeros(dataset.d());
        for i in 0..xs.n() {
            let r = xs.row(i).dot(&w) - 1.0;
            grad.scaled_add(r, &xs.row(i));
        }
        w.scaled_add(-gamma, &grad);
        trace.ws.push(w.clone());
        trace.margins.push(margin_of(&w, &xs));
        trace.objectives.push(objective(&w));
    }
    Ok(trace)
}

fn margin_of(w: &Array1<f64>, xs: &crate::model::SignedMatrix) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..xs.n() {
        m = m.min(xs.row(i).dot(w));
    }
    m
}

fn record<F: Fn(f64) -> f64>(
    trace: &mut PrimalTrace,
    w: &Array1<f64>,
    xs: &crate::model::SignedMatrix,
    loss: F,
) {
    trace.ws.push(w.clone());
    trace.margins.push(margin_of(w, xs));
    let obj = (0..xs.n()).map(|i| loss(xs.row(i).dot(w))).sum();
    trace.objectives.push(obj);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn anchors() -> Dataset {
        Dataset::new(
            array![[0.5, 1.5], [1.5, 0.5], [-0.5, -1.5], [-1.5, -0.5]],
            array![1.0, 1.0, -1.0, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn loss_values_and_slopes_by_hand() {
        assert_abs_diff_eq!(MarginLoss::Exponential.value(0.0), 1.0);
        assert_abs_diff_eq!(MarginLoss::Exponential.derivative(1.0), -(-1.0_f64).exp());
        assert_abs_diff_eq!(MarginLoss::Logistic.value(0.0), 2.0_f64.ln());
        assert_abs_diff_eq!(MarginLoss::Logistic.derivative(0.0), -0.5);
        assert_eq!(MarginLoss::Hinge.value(0.25), 0.75);
        assert_eq!(MarginLoss::Hinge.value(2.0), 0.0);
        assert_eq!(MarginLoss::Hinge.derivative(0.999), -1.0);
        assert_eq!(MarginLoss::Hinge.derivative(1.0), 0.0);
        assert_eq!(MarginLoss::Hinge.derivative(5.0), 0.0);
    }

    #[test]
    fn logistic_is_stable_at_extreme_margins() {
        let l = MarginLoss::Logistic;
        assert!(l.value(800.0).is_finite());
        assert!(l.value(-800.0).is_finite());
        assert_abs_diff_eq!(l.value(-800.0), 800.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l.derivative(800.0), 0.0);
        assert_abs_diff_eq!(l.derivative(-800.0), -1.0);
        assert!(MarginLoss::Exponential.value(-800.0).is_finite());
    }

    #[test]
    fn logistic_first_step_matches_the_closed_form() {
        // Single point x = (1, 0), y = 1, w0 = 0: gradient is
        // l'(0) * x = -x/2, so one step of size gamma lands on (gamma/2, 0).
        let ds = Dataset::new(array![[1.0, 0.0]], array![1.0]).unwrap();
        let trace = gd_margin_loss(&ds, MarginLoss::Logistic, &array![0.0, 0.0], 0.2, 1).unwrap();
        assert_abs_diff_eq!(trace.ws[1][0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(trace.ws[1][1], 0.0);
        assert_eq!(trace.ws.len(), 2);
        assert_eq!(trace.margins.len(), 2);
        assert_eq!(trace.objectives.len(), 2);
    }

    #[test]
    fn smooth_losses_blow_up_the_norm_on_separable_data() {
        let ds = anchors();
        for loss in [MarginLoss::Exponential, MarginLoss::Logistic] {
            let trace = gd_margin_loss(&ds, loss, &array![0.0, 0.0], 0.05, 4000).unwrap();
            let norm = |w: &Array1<f64>| w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let half = norm(&trace.ws[2000]);
            let full = norm(&trace.ws[4000]);
            assert!(full > half, "{loss:?}: {full} <= {half}");
            assert!(full > 1.0, "{loss:?} norm stayed at {full}");
            // The objective still decreases even as the norm diverges.
            assert!(trace.objectives[4000] < trace.objectives[0]);
        }
    }

    #[test]
    fn gd_rejects_the_hinge() {
        let ds = anchors();
        assert!(matches!(
            gd_margin_loss(&ds, MarginLoss::Hinge, &array![0.0, 0.0], 0.1, 1),
            Err(BaselineError::HingeNotSmooth)
        ));
    }

    #[test]
    fn subgradient_descent_stalls_once_all_margins_clear_one() {
        // w = (10, 5) gives every anchor a margin of at least 12.5, so the
        // chosen subgradient is zero and the iterate never moves.
        let ds = anchors();
        let w0 = array![10.0, 5.0];
        let trace = subgrad_hinge(&ds, &w0, StepRule::Constant(0.1), 50).unwrap();
        for w in &trace.ws {
            assert_eq!(w, &w0);
        }
        assert!(trace.margins[0] >= 1.0);
        assert_eq!(trace.objectives[50], 0.0);
    }

    #[test]
    fn subgradient_descent_reduces_the_hinge_objective_from_zero() {
        let ds = anchors();
        let trace = subgrad_hinge(&ds, &array![0.0, 0.0], StepRule::InvSqrt(0.1), 200).unwrap();
        assert!(trace.objectives[200] < trace.objectives[0]);
        assert!(trace.margins[200] > 0.0);
    }

    #[test]
    fn least_squares_first_step_matches_the_closed_form() {
        // Single point x = (2, 0), y = 1, w0 = 0: residual -1, gradient
        // -x, one step of 0.1 lands on (0.2, 0) with objective
        // 0.5 (0.4 - 1)^2 = 0.18.
        let ds = Dataset::new(array![[2.0, 0.0]], array![1.0]).unwrap();
        let trace = gd_least_squares(&ds, &array![0.0, 0.0], 0.1, 1).unwrap();
        assert_abs_diff_eq!(trace.ws[1][0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(trace.objectives[0], 0.5);
        assert_abs_diff_eq!(trace.objectives[1], 0.18, epsilon = 1e-15);
    }

    #[test]
    fn least_squares_converges_to_the_interpolant_on_square_systems() {
        // Two independent points: the least-squares solution solves
        // y_i <w, x_i> = 1 exactly; here w = (1, 1).
        let ds = Dataset::new(array![[1.0, 0.0], [0.0, -1.0]], array![1.0, -1.0]).unwrap();
        let trace = gd_least_squares(&ds, &array![0.0, 0.0], 0.5, 200).unwrap();
        let w = trace.ws.last().unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-10);
        assert!(trace.objectives.last().unwrap() < &1e-15);
    }

    #[test]
    fn baselines_validate_their_inputs() {
        let ds = anchors();
        assert!(matches!(
            gd_margin_loss(&ds, MarginLoss::Logistic, &array![0.0], 0.1, 1),
            Err(BaselineError::WrongWeightLength { .. })
        ));
        assert!(matches!(
            gd_margin_loss(&ds, MarginLoss::Logistic, &array![0.0, 0.0], -0.1, 1),
            Err(BaselineError::InvalidStep { .. })
        ));
        assert!(matches!(
            subgrad_hinge(&ds, &array![0.0, 0.0], StepRule::Constant(0.0), 1),
            Err(BaselineError::InvalidStep { .. })
        ));
    }
}
