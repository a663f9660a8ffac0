//! Ramsey optimal policy for discounted linear-quadratic problems with
//! autoregressive forcing shocks.
//!
//! The planner controls predetermined states `k` and forward-looking jumps
//! `x` (together `y = (k, x)`) subject to exogenous AR shocks `z` that the
//! instrument cannot reach. Solving the discounted Riccati equation on the
//! augmented state `(y, z)` yields the feedback rule `u = F_y y + F_z z`,
//! the optimal initial anchor `x0 = G_k k0 + G_z z0` for the jumps, and
//! exact welfare `-(k0, z0)' S (k0, z0)`:
//!
//! ```
//! use ramsey_lq::nalgebra::DVector;
//! use ramsey_lq::model::build_nkpc;
//! use ramsey_lq::riccati::{solve_full_riccati, compute_gain, DEFAULT_TOL, DEFAULT_MAX_ITER};
//! use ramsey_lq::welfare;
//!
//! # fn main() -> ramsey_lq::Result<()> {
//! let p = build_nkpc(0.99, 0.1275, 6.0, 0.8)?;
//! let sol = solve_full_riccati(&p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
//! let gain = compute_gain(&p, &sol)?;
//! let rep = welfare::report(&sol, &DVector::zeros(0), &DVector::from_element(1, 1.0))?;
//! assert!((rep.welfare - (-2.688)).abs() < 5e-3);
//! assert!((rep.x0[0] - 0.650).abs() < 1e-3);
//! # Ok(())
//! # }
//! ```
//!
//! The [`blocks`] module solves the same equation block by block (Riccati,
//! then Sylvester, then Lyapunov) as an independent cross-check, and
//! [`simulate`] verifies closed-form welfare by discounting realized losses
//! along the anchored closed-loop path.

pub mod blocks;
pub mod error;
pub mod linalg;
pub mod model;
pub mod riccati;
pub mod sample;
pub mod simulate;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{AugmentedLQProblem, ModelFile, Partition, ProblemData, ValidationReport};
pub use riccati::{FeedbackGain, HamiltonianPencil, MirrorReport, RiccatiSolution};
pub use simulate::{OracleComparison, Trajectory};
pub use welfare::WelfareReport;

pub use nalgebra;
