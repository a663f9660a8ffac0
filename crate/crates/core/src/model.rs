//! Problem definition for the augmented discounted LQ regulator.
//!
//! The planner minimizes the discounted quadratic loss
//!
//! ```text
//!   sum_t beta^t ( y_t' Q_yy y_t + 2 y_t' Q_yz z_t + z_t' Q_zz z_t + u_t' R_uu u_t )
//! ```
//!
//! subject to the block transition
//!
//! ```text
//!   y_{t+1} = A_yy y_t + A_yz z_t + B_yu u_t
//!   z_{t+1} = A_zz z_t
//! ```
//!
//! where `y = (k, x)` stacks controllable predetermined variables `k` on top
//! of non-predetermined (jump) variables `x`, and `z` is a non-controllable
//! autoregressive forcing process (zero rows in `B`). This module owns the
//! validated problem type, the two stabilizability assumptions (Kalman
//! controllability of the `y` block and `|lambda(A_zz)| < 1/sqrt(beta)`),
//! the `sqrt(beta)` discount scaling, the JSON schema used by the CLI, and
//! the built-in new-Keynesian Phillips curve example.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative singular-value cutoff for the Kalman controllability rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Tolerance on the smallest eigenvalue when checking that `Q_yy` is
/// positive semi-definite; symmetrization noise must not reject valid input.
pub const TOL_SYM: f64 = 1e-10;

/// Variable counts of the augmented problem.
///
/// `n_k` controllable predetermined variables, `n_x` non-predetermined
/// (jump) variables, `n_z` non-controllable shocks, `n_u` instruments.
/// The merged controllable block `y = (k, x)` has size `n_y = n_k + n_x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub n_k: usize,
    pub n_x: usize,
    pub n_z: usize,
    pub n_u: usize,
}

impl Partition {
    /// Checks the dimension invariants `n_k + n_x >= 1`, `n_z >= 1`,
    /// `n_u >= 1`.
    pub fn new(n_k: usize, n_x: usize, n_z: usize, n_u: usize) -> Result<Self> {
        if n_k + n_x == 0 {
            return Err(Error::InvalidParameter(
                "n_k + n_x must be at least 1".into(),
            ));
        }
        if n_z == 0 {
            return Err(Error::InvalidParameter("n_z must be at least 1".into()));
        }
        if n_u == 0 {
            return Err(Error::InvalidParameter("n_u must be at least 1".into()));
        }
        Ok(Self { n_k, n_x, n_z, n_u })
    }

    /// Size of the controllable block `y = (k, x)`.
    pub fn n_y(&self) -> usize {
        self.n_k + self.n_x
    }

    /// Size of the full augmented state `(y, z)`.
    pub fn n(&self) -> usize {
        self.n_y() + self.n_z
    }

    /// Index range of `k` inside the internal `(k, x, z)` ordering.
    pub fn k_range(&self) -> std::ops::Range<usize> {
        0..self.n_k
    }

    /// Index range of `x` inside the internal `(k, x, z)` ordering.
    pub fn x_range(&self) -> std::ops::Range<usize> {
        self.n_k..self.n_y()
    }

    /// Index range of `z` inside the internal `(k, x, z)` ordering.
    pub fn z_range(&self) -> std::ops::Range<usize> {
        self.n_y()..self.n()
    }
}

/// Unvalidated problem data handed to [`build_problem`].
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub partition: Partition,
    pub beta: f64,
    pub a_yy: DMatrix<f64>,
    pub a_yz: DMatrix<f64>,
    pub a_zz: DMatrix<f64>,
    pub b_yu: DMatrix<f64>,
    pub q_yy: DMatrix<f64>,
    pub q_yz: DMatrix<f64>,
    pub q_zz: DMatrix<f64>,
    pub r_uu: DMatrix<f64>,
}

/// A validated augmented LQ problem.
///
/// All fields are private: instances only exist after [`build_problem`] has
/// checked dimensions, finiteness, `Q_yy >= 0` and `R_uu > 0`, so downstream
/// solvers can rely on those invariants. The variable ordering is always
/// `y = (k, x)` with `k` first; block indices derive from [`Partition`].
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLQProblem {
    partition: Partition,
    beta: f64,
    a_yy: DMatrix<f64>,
    a_yz: DMatrix<f64>,
    a_zz: DMatrix<f64>,
    b_yu: DMatrix<f64>,
    q_yy: DMatrix<f64>,
    q_yz: DMatrix<f64>,
    q_zz: DMatrix<f64>,
    r_uu: DMatrix<f64>,
}

impl AugmentedLQProblem {
    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a_yy(&self) -> &DMatrix<f64> {
        &self.a_yy
    }

    pub fn a_yz(&self) -> &DMatrix<f64> {
        &self.a_yz
    }

    pub fn a_zz(&self) -> &DMatrix<f64> {
        &self.a_zz
    }

    pub fn b_yu(&self) -> &DMatrix<f64> {
        &self.b_yu
    }

    pub fn q_yy(&self) -> &DMatrix<f64> {
        &self.q_yy
    }

    pub fn q_yz(&self) -> &DMatrix<f64> {
        &self.q_yz
    }

    pub fn q_zz(&self) -> &DMatrix<f64> {
        &self.q_zz
    }

    pub fn r_uu(&self) -> &DMatrix<f64> {
        &self.r_uu
    }

    /// Full augmented transition `[A_yy A_yz; 0 A_zz]`.
    pub fn a_full(&self) -> DMatrix<f64> {
        let p = self.partition;
        let mut a = DMatrix::zeros(p.n(), p.n());
        a.view_mut((0, 0), (p.n_y(), p.n_y())).copy_from(&self.a_yy);
        a.view_mut((0, p.n_y()), (p.n_y(), p.n_z))
            .copy_from(&self.a_yz);
        a.view_mut((p.n_y(), p.n_y()), (p.n_z, p.n_z))
            .copy_from(&self.a_zz);
        a
    }

    /// Full augmented instrument loading `[B_yu; 0]`; the shock rows are
    /// structurally zero because `z` is non-controllable.
    pub fn b_full(&self) -> DMatrix<f64> {
        let p = self.partition;
        let mut b = DMatrix::zeros(p.n(), p.n_u);
        b.view_mut((0, 0), (p.n_y(), p.n_u)).copy_from(&self.b_yu);
        b
    }

    /// Full augmented state-cost matrix `[Q_yy Q_yz; Q_yz' Q_zz]`.
    pub fn q_full(&self) -> DMatrix<f64> {
        let p = self.partition;
        let mut q = DMatrix::zeros(p.n(), p.n());
        q.view_mut((0, 0), (p.n_y(), p.n_y())).copy_from(&self.q_yy);
        q.view_mut((0, p.n_y()), (p.n_y(), p.n_z))
            .copy_from(&self.q_yz);
        q.view_mut((p.n_y(), 0), (p.n_z, p.n_y()))
            .copy_from(&self.q_yz.transpose());
        q.view_mut((p.n_y(), p.n_y()), (p.n_z, p.n_z))
            .copy_from(&self.q_zz);
        q
    }
}

/// The `sqrt(beta)`-scaled system: the preliminary step that turns the
/// discounted problem into an undiscounted one.
#[derive(Debug, Clone)]
pub struct ScaledSystem<'p> {
    /// `sqrt(beta) * [A_yy A_yz; 0 A_zz]`.
    pub a_tilde: DMatrix<f64>,
    /// `sqrt(beta) * [B_yu; 0]`; the lower `n_z` rows stay exactly zero.
    pub b_tilde: DMatrix<f64>,
    /// The problem this scaling was derived from.
    pub source: &'p AugmentedLQProblem,
}

/// Result of the Kalman controllability check (Assumption 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityCheck {
    /// Numerical rank of the controllability matrix.
    pub rank: usize,
    /// True when the rank equals `n_y`.
    pub controllable: bool,
}

/// Result of the shock stability check (Assumption 2).
#[derive(Debug, Clone, PartialEq)]
pub struct ShockStabilityCheck {
    /// Moduli of the eigenvalues of `A_zz`.
    pub eigenvalue_moduli: Vec<f64>,
    /// True when every modulus is strictly below `1/sqrt(beta)`.
    pub stable: bool,
}

/// Merged validation report for both assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub controllability_rank: usize,
    pub controllable: bool,
    pub shock_eigenvalue_moduli: Vec<f64>,
    pub shock_stable: bool,
    /// Human-readable diagnostics, one line per assumption.
    pub messages: Vec<String>,
}

impl ValidationReport {
    /// True when both assumptions hold.
    pub fn all_pass(&self) -> bool {
        self.controllable && self.shock_stable
    }
}

fn check_block(
    name: &str,
    m: &DMatrix<f64>,
    rows: usize,
    cols: usize,
) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch {
            name: name.to_owned(),
            expected: format!("{rows}x{cols}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if !linalg::all_finite(m) {
        return Err(Error::NonFinite {
            name: name.to_owned(),
        });
    }
    Ok(())
}

/// Validates raw problem data and returns the canonical problem value.
///
/// Dimensions are checked against the partition, every entry must be
/// finite, `beta` must lie in `(0, 1]`, and the cost blocks `Q_yy`, `Q_zz`
/// and `R_uu` are replaced by their symmetric parts `(M + M')/2` before the
/// definiteness checks: `Q_yy` must be positive semi-definite up to
/// [`TOL_SYM`] and `R_uu` strictly positive definite.
pub fn build_problem(data: ProblemData) -> Result<AugmentedLQProblem> {
    let p = data.partition;
    // Re-assert the partition invariants; ProblemData fields are public.
    Partition::new(p.n_k, p.n_x, p.n_z, p.n_u)?;

    if !data.beta.is_finite() || data.beta <= 0.0 || data.beta > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1], got {}",
            data.beta
        )));
    }

    let (n_y, n_z, n_u) = (p.n_y(), p.n_z, p.n_u);
    check_block("A_yy", &data.a_yy, n_y, n_y)?;
    check_block("A_yz", &data.a_yz, n_y, n_z)?;
    check_block("A_zz", &data.a_zz, n_z, n_z)?;
    check_block("B_yu", &data.b_yu, n_y, n_u)?;
    check_block("Q_yy", &data.q_yy, n_y, n_y)?;
    check_block("Q_yz", &data.q_yz, n_y, n_z)?;
    check_block("Q_zz", &data.q_zz, n_z, n_z)?;
    check_block("R_uu", &data.r_uu, n_u, n_u)?;

    let q_yy = linalg::symmetrize(&data.q_yy);
    let q_zz = linalg::symmetrize(&data.q_zz);
    let r_uu = linalg::symmetrize(&data.r_uu);

    let min_q = linalg::min_symmetric_eigenvalue(&q_yy);
    if min_q < -TOL_SYM {
        return Err(Error::NotPositiveSemiDefinite {
            min_eigenvalue: min_q,
        });
    }
    let min_r = linalg::min_symmetric_eigenvalue(&r_uu);
    if min_r <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_r,
        });
    }

    Ok(AugmentedLQProblem {
        partition: p,
        beta: data.beta,
        a_yy: data.a_yy,
        a_yz: data.a_yz,
        a_zz: data.a_zz,
        b_yu: data.b_yu,
        q_yy,
        q_yz: data.q_yz,
        q_zz,
        r_uu,
    })
}

/// Applies the preliminary discounting step: `A_tilde = sqrt(beta) A`,
/// `B_tilde = sqrt(beta) B` on the full augmented blocks. `Q` and `R` are
/// left untouched.
pub fn scale_by_sqrt_beta(p: &AugmentedLQProblem) -> ScaledSystem<'_> {
    let s = p.beta.sqrt();
    ScaledSystem {
        a_tilde: p.a_full() * s,
        b_tilde: p.b_full() * s,
        source: p,
    }
}

/// Kalman controllability matrix of the discount-scaled `y` block:
///
/// ```text
///   [ sqrt(beta) B_yu,  beta A_yy B_yu,  beta^{3/2} A_yy^2 B_yu, ... ]
/// ```
///
/// built column-block by column-block from the scaled pair
/// `(sqrt(beta) A_yy, sqrt(beta) B_yu)`, which makes the columns bitwise
/// identical to powers of the scaled system.
pub fn controllability_matrix(p: &AugmentedLQProblem) -> DMatrix<f64> {
    let s = p.beta.sqrt();
    let a_s = &p.a_yy * s;
    let b_s = &p.b_yu * s;
    let (n_y, n_u) = (p.partition.n_y(), p.partition.n_u);
    let mut ctrl = DMatrix::zeros(n_y, n_y * n_u);
    let mut block = b_s;
    for j in 0..n_y {
        ctrl.view_mut((0, j * n_u), (n_y, n_u)).copy_from(&block);
        if j + 1 < n_y {
            block = &a_s * block;
        }
    }
    ctrl
}

/// Assumption 1: the scaled `(A_yy, B_yu)` pair is Kalman controllable.
///
/// The rank counts singular values above `tol` times the largest one.
pub fn check_controllability(p: &AugmentedLQProblem, tol: f64) -> ControllabilityCheck {
    let rank = linalg::numerical_rank(&controllability_matrix(p), tol);
    ControllabilityCheck {
        rank,
        controllable: rank == p.partition.n_y(),
    }
}

/// Assumption 2: every eigenvalue of `A_zz` has modulus strictly below
/// `1/sqrt(beta)`, so the discounted shock contribution stays summable.
pub fn check_shock_stability(p: &AugmentedLQProblem) -> Result<ShockStabilityCheck> {
    let moduli = linalg::eigenvalue_moduli(&p.a_zz, "A_zz eigenvalues")?;
    let bound = 1.0 / p.beta.sqrt();
    let stable = moduli.iter().all(|&m| m < bound);
    Ok(ShockStabilityCheck {
        eigenvalue_moduli: moduli,
        stable,
    })
}

/// Runs both assumption checks and merges them into a [`ValidationReport`]
/// with one diagnostic line per assumption.
pub fn validate(p: &AugmentedLQProblem, rank_tol: f64) -> Result<ValidationReport> {
    let ctrl = check_controllability(p, rank_tol);
    let shock = check_shock_stability(p)?;
    let n_y = p.partition.n_y();
    let bound = 1.0 / p.beta.sqrt();
    let max_modulus = shock
        .eigenvalue_moduli
        .iter()
        .fold(0.0_f64, |acc, &m| acc.max(m));
    let messages = vec![
        format!(
            "Assumption 1 (Kalman controllability): rank {} of {} — {}",
            ctrl.rank,
            n_y,
            if ctrl.controllable {
                "satisfied"
            } else {
                "VIOLATED"
            }
        ),
        format!(
            "Assumption 2 (shock stability): max |eigenvalue(A_zz)| = {:.6} vs bound 1/sqrt(beta) = {:.6} — {}",
            max_modulus,
            bound,
            if shock.stable { "satisfied" } else { "VIOLATED" }
        ),
    ];
    Ok(ValidationReport {
        controllability_rank: ctrl.rank,
        controllable: ctrl.controllable,
        shock_eigenvalue_moduli: shock.eigenvalue_moduli,
        shock_stable: shock.stable,
        messages,
    })
}

/// Builds the new-Keynesian Phillips curve example: inflation is the single
/// jump variable, the cost-push shock follows an AR(1) with persistence
/// `rho`, and the instrument is the output gap.
///
/// Blocks: `A_yy = [[1/beta]]`, `A_yz = [[-1/beta]]`, `A_zz = [[rho]]`,
/// `B_yu = [[-kappa/beta]]`, `Q_yy = [[1]]`, `Q_yz = [[0]]`, `Q_zz = [[0]]`,
/// `R_uu = [[kappa/epsilon]]`.
pub fn build_nkpc(beta: f64, kappa: f64, epsilon: f64, rho: f64) -> Result<AugmentedLQProblem> {
    if !beta.is_finite() || beta <= 0.0 || beta >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "nkpc: beta must lie in (0, 1), got {beta}"
        )));
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "nkpc: kappa must be positive, got {kappa}"
        )));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "nkpc: epsilon must be positive, got {epsilon}"
        )));
    }
    if !rho.is_finite() || rho <= 0.0 || rho >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "nkpc: rho must lie in (0, 1), got {rho}"
        )));
    }
    let scalar = |v: f64| DMatrix::from_element(1, 1, v);
    build_problem(ProblemData {
        partition: Partition::new(0, 1, 1, 1)?,
        beta,
        a_yy: scalar(1.0 / beta),
        a_yz: scalar(-1.0 / beta),
        a_zz: scalar(rho),
        b_yu: scalar(-kappa / beta),
        q_yy: scalar(1.0),
        q_yz: scalar(0.0),
        q_zz: scalar(0.0),
        r_uu: scalar(kappa / epsilon),
    })
}

/// JSON-facing mirror of [`AugmentedLQProblem`], row-major blocks.
///
/// Unknown fields are rejected so typos in hand-written model files fail
/// loudly instead of silently falling back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_k: usize,
    pub n_x: usize,
    pub n_z: usize,
    pub n_u: usize,
    pub beta: f64,
    #[serde(rename = "A_yy")]
    pub a_yy: Vec<Vec<f64>>,
    #[serde(rename = "A_yz")]
    pub a_yz: Vec<Vec<f64>>,
    #[serde(rename = "A_zz")]
    pub a_zz: Vec<Vec<f64>>,
    #[serde(rename = "B_yu")]
    pub b_yu: Vec<Vec<f64>>,
    #[serde(rename = "Q_yy")]
    pub q_yy: Vec<Vec<f64>>,
    #[serde(rename = "Q_yz")]
    pub q_yz: Vec<Vec<f64>>,
    #[serde(rename = "Q_zz")]
    pub q_zz: Vec<Vec<f64>>,
    #[serde(rename = "R_uu")]
    pub r_uu: Vec<Vec<f64>>,
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        let found_cols = rows.first().map_or(0, Vec::len);
        return Err(Error::DimensionMismatch {
            name: name.to_owned(),
            expected: format!("{nr}x{nc}"),
            found: format!("{}x{}", rows.len(), found_cols),
        });
    }
    Ok(DMatrix::from_row_iterator(
        nr,
        nc,
        rows.iter().flatten().copied(),
    ))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl ModelFile {
    /// Serializes a validated problem back into the JSON schema.
    pub fn from_problem(p: &AugmentedLQProblem) -> Self {
        let part = p.partition();
        Self {
            n_k: part.n_k,
            n_x: part.n_x,
            n_z: part.n_z,
            n_u: part.n_u,
            beta: p.beta(),
            a_yy: matrix_to_rows(p.a_yy()),
            a_yz: matrix_to_rows(p.a_yz()),
            a_zz: matrix_to_rows(p.a_zz()),
            b_yu: matrix_to_rows(p.b_yu()),
            q_yy: matrix_to_rows(p.q_yy()),
            q_yz: matrix_to_rows(p.q_yz()),
            q_zz: matrix_to_rows(p.q_zz()),
            r_uu: matrix_to_rows(p.r_uu()),
        }
    }

    /// Converts the raw file into a validated problem.
    pub fn to_problem(&self) -> Result<AugmentedLQProblem> {
        let partition = Partition::new(self.n_k, self.n_x, self.n_z, self.n_u)?;
        let (n_y, n_z, n_u) = (partition.n_y(), partition.n_z, partition.n_u);
        build_problem(ProblemData {
            partition,
            beta: self.beta,
            a_yy: rows_to_matrix("A_yy", &self.a_yy, n_y, n_y)?,
            a_yz: rows_to_matrix("A_yz", &self.a_yz, n_y, n_z)?,
            a_zz: rows_to_matrix("A_zz", &self.a_zz, n_z, n_z)?,
            b_yu: rows_to_matrix("B_yu", &self.b_yu, n_y, n_u)?,
            q_yy: rows_to_matrix("Q_yy", &self.q_yy, n_y, n_y)?,
            q_yz: rows_to_matrix("Q_yz", &self.q_yz, n_y, n_z)?,
            q_zz: rows_to_matrix("Q_zz", &self.q_zz, n_z, n_z)?,
            r_uu: rows_to_matrix("R_uu", &self.r_uu, n_u, n_u)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nkpc() -> AugmentedLQProblem {
        build_nkpc(0.99, 0.1275, 6.0, 0.8).unwrap()
    }

    #[test]
    fn nkpc_blocks_match_calibration() {
        let p = nkpc();
        assert_eq!(p.partition(), Partition::new(0, 1, 1, 1).unwrap());
        assert_relative_eq!(p.a_yy()[(0, 0)], 1.0 / 0.99, max_relative = 1e-15);
        assert_relative_eq!(p.a_yz()[(0, 0)], -1.0 / 0.99, max_relative = 1e-15);
        assert_eq!(p.a_zz()[(0, 0)], 0.8);
        assert_relative_eq!(p.b_yu()[(0, 0)], -0.1275 / 0.99, max_relative = 1e-15);
        assert_eq!(p.q_yy()[(0, 0)], 1.0);
        assert_eq!(p.r_uu()[(0, 0)], 0.1275 / 6.0);
        assert_eq!(p.r_uu()[(0, 0)], 0.02125);
    }

    #[test]
    fn nkpc_direct_substitution() {
        let p = build_nkpc(0.5, 0.5, 1.0, 0.5).unwrap();
        assert_eq!(p.a_yy()[(0, 0)], 2.0);
        assert_eq!(p.b_yu()[(0, 0)], -1.0);
    }

    #[test]
    fn nkpc_rejects_out_of_range_parameters() {
        assert!(build_nkpc(1.0, 0.1275, 6.0, 0.8).is_err());
        assert!(build_nkpc(0.99, -0.1, 6.0, 0.8).is_err());
        assert!(build_nkpc(0.99, 0.1275, 0.0, 0.8).is_err());
        assert!(build_nkpc(0.99, 0.1275, 6.0, 1.0).is_err());
    }

    #[test]
    fn zero_r_is_rejected() {
        let p = nkpc();
        let mut data = ProblemData {
            partition: p.partition(),
            beta: p.beta(),
            a_yy: p.a_yy().clone(),
            a_yz: p.a_yz().clone(),
            a_zz: p.a_zz().clone(),
            b_yu: p.b_yu().clone(),
            q_yy: p.q_yy().clone(),
            q_yz: p.q_yz().clone(),
            q_zz: p.q_zz().clone(),
            r_uu: DMatrix::from_element(1, 1, 0.0),
        };
        assert!(matches!(
            build_problem(data.clone()),
            Err(Error::NotPositiveDefinite { .. })
        ));
        data.r_uu = DMatrix::from_element(1, 1, f64::NAN);
        assert!(matches!(
            build_problem(data),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn asymmetric_q_is_symmetrized() {
        let data = ProblemData {
            partition: Partition::new(1, 1, 1, 1).unwrap(),
            beta: 0.95,
            a_yy: DMatrix::identity(2, 2),
            a_yz: DMatrix::zeros(2, 1),
            a_zz: DMatrix::from_element(1, 1, 0.5),
            b_yu: DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            q_yy: DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.4, 1.0]),
            q_yz: DMatrix::zeros(2, 1),
            q_zz: DMatrix::zeros(1, 1),
            r_uu: DMatrix::identity(1, 1),
        };
        let p = build_problem(data).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert_eq!(p.q_yy(), &expected);
    }

    #[test]
    fn rebuilding_a_validated_problem_changes_nothing() {
        let p = nkpc();
        let again = build_problem(ProblemData {
            partition: p.partition(),
            beta: p.beta(),
            a_yy: p.a_yy().clone(),
            a_yz: p.a_yz().clone(),
            a_zz: p.a_zz().clone(),
            b_yu: p.b_yu().clone(),
            q_yy: p.q_yy().clone(),
            q_yz: p.q_yz().clone(),
            q_zz: p.q_zz().clone(),
            r_uu: p.r_uu().clone(),
        })
        .unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn nkpc_is_controllable() {
        // n_y = 1 and B_yu is a nonzero scalar, so the controllability
        // matrix is the single nonzero entry sqrt(beta) * B_yu: rank 1.
        let p = nkpc();
        let ctrl = controllability_matrix(&p);
        assert_eq!(ctrl.shape(), (1, 1));
        assert_ne!(ctrl[(0, 0)], 0.0);
        let check = check_controllability(&p, DEFAULT_RANK_TOL);
        assert_eq!(check.rank, 1);
        assert!(check.controllable);
    }

    #[test]
    fn zero_b_is_uncontrollable() {
        let mut file = ModelFile::from_problem(&nkpc());
        file.b_yu = vec![vec![0.0]];
        let p = file.to_problem().unwrap();
        let check = check_controllability(&p, DEFAULT_RANK_TOL);
        assert_eq!(check.rank, 0);
        assert!(!check.controllable);
    }

    #[test]
    fn double_integrator_is_controllable() {
        let data = ProblemData {
            partition: Partition::new(2, 0, 1, 1).unwrap(),
            beta: 1.0,
            a_yy: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            a_yz: DMatrix::zeros(2, 1),
            a_zz: DMatrix::zeros(1, 1),
            b_yu: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            q_yy: DMatrix::identity(2, 2),
            q_yz: DMatrix::zeros(2, 1),
            q_zz: DMatrix::zeros(1, 1),
            r_uu: DMatrix::identity(1, 1),
        };
        let p = build_problem(data).unwrap();
        // With beta = 1 the controllability matrix is [B, A B] = [[0,1],[1,0]].
        let ctrl = controllability_matrix(&p);
        assert_eq!(ctrl, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let check = check_controllability(&p, DEFAULT_RANK_TOL);
        assert_eq!(check.rank, 2);
        assert!(check.controllable);
    }

    #[test]
    fn shock_stability_brackets_the_discount_bound() {
        let stable = nkpc();
        let check = check_shock_stability(&stable).unwrap();
        assert_eq!(check.eigenvalue_moduli, vec![0.8]);
        assert!(check.stable);

        // rho = 1.2 with beta = 1: modulus 1.2 >= 1, unstable.
        let data = ProblemData {
            partition: Partition::new(1, 0, 1, 1).unwrap(),
            beta: 1.0,
            a_yy: DMatrix::from_element(1, 1, 0.5),
            a_yz: DMatrix::zeros(1, 1),
            a_zz: DMatrix::from_element(1, 1, 1.2),
            b_yu: DMatrix::from_element(1, 1, 1.0),
            q_yy: DMatrix::identity(1, 1),
            q_yz: DMatrix::zeros(1, 1),
            q_zz: DMatrix::zeros(1, 1),
            r_uu: DMatrix::identity(1, 1),
        };
        let p = build_problem(data).unwrap();
        let check = check_shock_stability(&p).unwrap();
        assert_eq!(check.eigenvalue_moduli, vec![1.2]);
        assert!(!check.stable);
    }

    #[test]
    fn rotation_shock_block_is_stable_at_beta_one() {
        // A_zz = [[0, -0.9], [0.9, 0]] has eigenvalues +-0.9i.
        let data = ProblemData {
            partition: Partition::new(1, 0, 2, 1).unwrap(),
            beta: 1.0,
            a_yy: DMatrix::from_element(1, 1, 0.5),
            a_yz: DMatrix::zeros(1, 2),
            a_zz: DMatrix::from_row_slice(2, 2, &[0.0, -0.9, 0.9, 0.0]),
            b_yu: DMatrix::from_element(1, 1, 1.0),
            q_yy: DMatrix::identity(1, 1),
            q_yz: DMatrix::zeros(1, 2),
            q_zz: DMatrix::zeros(2, 2),
            r_uu: DMatrix::identity(1, 1),
        };
        let p = build_problem(data).unwrap();
        let check = check_shock_stability(&p).unwrap();
        assert_eq!(check.eigenvalue_moduli.len(), 2);
        for m in &check.eigenvalue_moduli {
            assert_relative_eq!(*m, 0.9, max_relative = 1e-12);
        }
        assert!(check.stable);
    }

    #[test]
    fn scaling_matches_hand_computation() {
        // beta = 1: the scaling is the identity.
        let data = ProblemData {
            partition: Partition::new(1, 0, 1, 1).unwrap(),
            beta: 1.0,
            a_yy: DMatrix::from_element(1, 1, 0.7),
            a_yz: DMatrix::from_element(1, 1, 0.3),
            a_zz: DMatrix::from_element(1, 1, 0.5),
            b_yu: DMatrix::from_element(1, 1, 1.0),
            q_yy: DMatrix::identity(1, 1),
            q_yz: DMatrix::zeros(1, 1),
            q_zz: DMatrix::zeros(1, 1),
            r_uu: DMatrix::identity(1, 1),
        };
        let p = build_problem(data.clone()).unwrap();
        let scaled = scale_by_sqrt_beta(&p);
        assert_eq!(scaled.a_tilde, p.a_full());
        assert_eq!(scaled.b_tilde, p.b_full());

        // beta = 0.25 with A_yy = [[2]]: sqrt(0.25) * 2 = 1 exactly.
        let mut quarter = data;
        quarter.beta = 0.25;
        quarter.a_yy = DMatrix::from_element(1, 1, 2.0);
        quarter.a_zz = DMatrix::zeros(1, 1);
        let p = build_problem(quarter).unwrap();
        let scaled = scale_by_sqrt_beta(&p);
        assert_eq!(scaled.a_tilde[(0, 0)], 1.0);

        // NKPC: entrywise sqrt(0.99) * [[1/0.99, -1/0.99], [0, 0.8]].
        let p = nkpc();
        let s = 0.99_f64.sqrt();
        let scaled = scale_by_sqrt_beta(&p);
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[(1.0 / 0.99) * s, (-1.0 / 0.99) * s, 0.0, 0.8 * s],
        );
        assert_eq!(scaled.a_tilde, expected);
        // The shock row of B_tilde is structurally zero.
        assert_eq!(scaled.b_tilde[(1, 0)], 0.0);
    }

    #[test]
    fn validate_merges_both_assumptions() {
        let report = validate(&nkpc(), DEFAULT_RANK_TOL).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.controllability_rank, 1);
        assert_eq!(report.shock_eigenvalue_moduli, vec![0.8]);
        assert_eq!(report.messages.len(), 2);
        assert!(report.messages[0].contains("satisfied"));
        assert!(report.messages[1].contains("satisfied"));
    }

    #[test]
    fn model_file_roundtrips_through_json() {
        let p = nkpc();
        let file = ModelFile::from_problem(&p);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let parsed: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_problem().unwrap(), p);
    }

    #[test]
    fn model_file_rejects_unknown_fields_and_bad_shapes() {
        let mut file_json =
            serde_json::to_value(ModelFile::from_problem(&nkpc())).unwrap();
        file_json["extra"] = serde_json::json!(1.0);
        let err = serde_json::from_value::<ModelFile>(file_json).unwrap_err();
        assert!(err.to_string().contains("extra"));

        let mut file = ModelFile::from_problem(&nkpc());
        file.a_yy = vec![vec![1.0, 2.0]];
        assert!(matches!(
            file.to_problem(),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partition_invariants_are_enforced() {
        assert!(Partition::new(0, 0, 1, 1).is_err());
        assert!(Partition::new(1, 0, 0, 1).is_err());
        assert!(Partition::new(1, 0, 1, 0).is_err());
        let p = Partition::new(2, 1, 3, 1).unwrap();
        assert_eq!(p.n_y(), 3);
        assert_eq!(p.n(), 6);
        assert_eq!(p.k_range(), 0..2);
        assert_eq!(p.x_range(), 2..3);
        assert_eq!(p.z_range(), 3..6);
    }

    #[test]
    fn beta_out_of_range_is_rejected() {
        let p = nkpc();
        let mut data = ProblemData {
            partition: p.partition(),
            beta: 1.5,
            a_yy: p.a_yy().clone(),
            a_yz: p.a_yz().clone(),
            a_zz: p.a_zz().clone(),
            b_yu: p.b_yu().clone(),
            q_yy: p.q_yy().clone(),
            q_yz: p.q_yz().clone(),
            q_zz: p.q_zz().clone(),
            r_uu: p.r_uu().clone(),
        };
        assert!(build_problem(data.clone()).is_err());
        data.beta = 0.0;
        assert!(build_problem(data.clone()).is_err());
        data.beta = 1.0;
        assert!(build_problem(data).is_ok());
    }
}
