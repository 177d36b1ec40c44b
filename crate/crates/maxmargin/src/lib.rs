//! Max-margin linear and kernel classification through iteratively
//! regularized dual proximal descent.
//!
//! The minimal-norm separator of a linearly separable sample solves
//!
//! ```text
//! min ||w||^2 / 2   subject to   y_i <w, x_i> >= 1 for all i,
//! ```
//!
//! and the penalized relaxation with hinge loss,
//!
//! ```text
//! min_w ||w||^2 / 2 + (1/lambda) sum_i max(0, 1 - y_i <w, x_i>),
//! ```
//!
//! recovers it as `lambda -> 0`. Instead of solving the penalized problem to
//! optimality for a vanishing sequence of penalties, the solvers here run a
//! *single* proximal-gradient pass on the Fenchel dual, shrinking `lambda_t`
//! every iteration. The dual objective at penalty `lambda` is
//!
//! ```text
//! D_lambda(u) = u' Q u / 2 + <1, u>   on the box  -1/lambda <= u_i <= 0,
//! ```
//!
//! where `Q = Xs Xs'` is the Gram matrix of the label-signed sample. One
//! iteration costs one multiplication by `Q` plus a coordinatewise clamp, the
//! primal iterate is read off as `w_t = -Xs' u_t`, and with a summable-rate
//! schedule the iterates converge linearly to the minimal-norm separator
//! without ever solving an inner problem. A momentum variant accelerates the
//! same recursion, and everything applies verbatim to kernels by replacing
//! the Gram matrix.
//!
//! Module map:
//!
//! - [`model`]: datasets, kernels, the signed Gram operator, dual objectives.
//! - [`prox`]: the proximal map of the scaled conjugate hinge (a clamp).
//! - [`solvers`]: penalty schedules, the plain and inertial solver loops, and
//!   a fixed-penalty baseline solver.
//! - [`baselines`]: primal gradient and subgradient descent on margin losses,
//!   gradient descent on least squares.
//! - [`oracle`]: slow, independent reference computations (projected-gradient
//!   max-margin solver with a KKT certificate, grid searches, brute-force
//!   proximal map, pseudoinverse regression, a Polyak-Lojasiewicz constant).
//! - [`metrics`]: margins, gaps against an oracle solution, classification
//!   error, the inertial Lyapunov energy.
//! - [`data`]: seeded generators, label noise, file loading, standardization,
//!   train/test splitting.
//!
//! Everything is deterministic: randomness always flows through a caller
//! supplied seed, and repeated runs produce bitwise-identical traces.

pub mod baselines;
pub mod data;
mod linalg;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod prox;
pub mod solvers;

pub use data::DataConfig;
pub use metrics::MetricRow;
pub use model::{gram, signed_matrix, Dataset, DualPoint, Kernel, SignedGram, SignedMatrix};
pub use oracle::OracleSolution;
pub use prox::ProxParams;
pub use solvers::{Algorithm, Schedule, ScheduleFamily, SolverConfig, SolverState, Trace};
