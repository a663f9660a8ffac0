//! Three-stage block pipeline for the value matrix.
//!
//! Instead of iterating on the full augmented Riccati equation, the value
//! matrix can be built block by block:
//!
//! 1. `P_yy` solves the y-only discounted Riccati equation — the shock
//!    block never feeds back into it.
//! 2. `F_y` follows from `P_yy` alone.
//! 3. `P_yz` solves the Sylvester equation
//!    `P_yz = Q_yz + beta A_cl' P_yy A_yz + beta A_cl' P_yz A_zz` with
//!    `A_cl = A_yy + B_yu F_y`.
//! 4. `P_zz` solves the (2,2) block of the full Riccati display, a
//!    discrete-Lyapunov-form equation in `A_zz`.
//!
//! The linear stages are solved exactly by column-major vectorization:
//! `vec(A X B) = (B' (x) A) vec(X)`, so each equation becomes a small dense
//! system in `I - beta (A_zz' (x) A_cl')` or `I - beta (A_zz' (x) A_zz')`.
//! Those operators are singular precisely when some eigenvalue product
//! `beta lambda_a lambda_b` hits 1, which is ruled out by the
//! stabilizability assumptions; the solvers still detect the degenerate
//! case and report the offending eigenvalue pair.
//!
//! [`assemble`] runs all four stages and must agree with the full solver —
//! that equivalence is the main cross-check between the two code paths.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::AugmentedLQProblem;
use crate::riccati::{self, RiccatiSolution};

/// Reciprocal-condition threshold below which a vectorized operator is
/// reported as singular.
const OPERATOR_RCOND_TOL: f64 = 1e-12;

fn check_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch {
            name: name.to_owned(),
            expected: format!("{rows}x{cols}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Builds the singularity error for a vectorized operator by scanning for
/// the eigenvalue pair whose product `beta lambda_a lambda_b` is closest
/// to 1.
fn operator_singularity(
    context: &'static str,
    left: &DMatrix<f64>,
    right: &DMatrix<f64>,
    beta: f64,
) -> Error {
    let (Ok(ls), Ok(rs)) = (
        linalg::complex_eigenvalues(left, context),
        linalg::complex_eigenvalues(right, context),
    ) else {
        return Error::EigenFailure { context };
    };
    let mut best: Option<(f64, nalgebra::Complex<f64>, nalgebra::Complex<f64>)> = None;
    for &la in &ls {
        for &lb in &rs {
            let defect = (beta * la * lb - 1.0).norm();
            if best.is_none_or(|(d, _, _)| defect < d) {
                best = Some((defect, la, lb));
            }
        }
    }
    match best {
        Some((_, lambda_a, lambda_b)) => Error::SingularOperator {
            context,
            lambda_a,
            lambda_b,
        },
        None => Error::Singular { context },
    }
}

/// Cholesky factor of the modified inverse term `R_uu + beta B_yu' P_yy B_yu`.
fn inner_cholesky(
    p: &AugmentedLQProblem,
    p_yy: &DMatrix<f64>,
) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let inner = linalg::symmetrize(
        &(p.r_uu() + p.beta() * (p.b_yu().transpose() * p_yy * p.b_yu())),
    );
    Cholesky::new(inner).ok_or(Error::Singular {
        context: "R_uu + beta B_yu' P_yy B_yu",
    })
}

/// Solves the y-only discounted Riccati equation
/// `P_yy = Q_yy + beta A_yy' P_yy A_yy - beta^2 A_yy' P_yy B_yu inner^{-1} B_yu' P_yy A_yy`
/// by the same fixed-point iteration as the full solver.
pub fn solve_pyy(p: &AugmentedLQProblem, tol: f64, max_iter: usize) -> Result<DMatrix<f64>> {
    Ok(pyy_iteration(p, tol, max_iter)?.0)
}

fn pyy_iteration(
    p: &AugmentedLQProblem,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, usize)> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Riccati tolerance must be positive, got {tol}"
        )));
    }
    let n_y = p.partition().n_y();
    let out = riccati::dare_iteration(
        p.a_yy(),
        p.b_yu(),
        p.q_yy(),
        p.r_uu(),
        p.beta(),
        n_y,
        tol,
        max_iter,
    )?;
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            last_update: out.last_update,
        });
    }
    Ok((out.p, out.iterations))
}

/// Stage-two gain `F_y = -(R_uu + beta B_yu' P_yy B_yu)^{-1} beta B_yu' P_yy A_yy`.
pub fn solve_fy(p: &AugmentedLQProblem, p_yy: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n_y = p.partition().n_y();
    check_shape("P_yy", p_yy, n_y, n_y)?;
    let chol = inner_cholesky(p, p_yy)?;
    Ok(-chol.solve(&(p.beta() * p.b_yu().transpose() * (p_yy * p.a_yy()))))
}

/// Stage-three Sylvester solve for the cross block `P_yz`.
pub fn solve_pyz(
    p: &AugmentedLQProblem,
    p_yy: &DMatrix<f64>,
    f_y: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let part = p.partition();
    let (n_y, n_z, n_u) = (part.n_y(), part.n_z, part.n_u);
    check_shape("P_yy", p_yy, n_y, n_y)?;
    check_shape("F_y", f_y, n_u, n_y)?;
    let beta = p.beta();
    let a_cl = p.a_yy() + p.b_yu() * f_y;
    let rhs = p.q_yz() + beta * (a_cl.transpose() * p_yy * p.a_yz());
    let dim = n_y * n_z;
    let op = DMatrix::identity(dim, dim)
        - beta * p.a_zz().transpose().kronecker(&a_cl.transpose());
    if linalg::reciprocal_condition(&op) < OPERATOR_RCOND_TOL {
        return Err(operator_singularity("Sylvester", &a_cl, p.a_zz(), beta));
    }
    let vec_rhs = DMatrix::from_column_slice(dim, 1, linalg::vec_col(&rhs).as_slice());
    let sol = linalg::solve_lu(&op, &vec_rhs, "Sylvester operator")?;
    Ok(DMatrix::from_column_slice(n_y, n_z, sol.as_slice()))
}

/// Stage-four solve for the shock block `P_zz` from the (2,2) block of the
/// full Riccati display; the result is symmetrized.
pub fn solve_pzz(
    p: &AugmentedLQProblem,
    p_yy: &DMatrix<f64>,
    p_yz: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let part = p.partition();
    let (n_y, n_z) = (part.n_y(), part.n_z);
    check_shape("P_yy", p_yy, n_y, n_y)?;
    check_shape("P_yz", p_yz, n_y, n_z)?;
    let beta = p.beta();
    let chol = inner_cholesky(p, p_yy)?;
    // w = P_yy A_yz + P_yz A_zz appears in both the linear and the
    // quadratic correction terms.
    let w = p_yy * p.a_yz() + p_yz * p.a_zz();
    let x = chol.solve(&(p.b_yu().transpose() * &w));
    let g = p.a_yz().transpose() * p_yy * p.b_yu()
        + p.a_zz().transpose() * p_yz.transpose() * p.b_yu();
    let c = p.q_zz()
        + beta * (p.a_yz().transpose() * &w + p.a_zz().transpose() * (p_yz.transpose() * p.a_yz()))
        - beta * beta * (g * x);
    // Remaining unknown enters as beta A_zz' P_zz A_zz: a discrete
    // Lyapunov form solved by vectorization.
    let dim = n_z * n_z;
    let op = DMatrix::identity(dim, dim)
        - beta * p.a_zz().transpose().kronecker(&p.a_zz().transpose());
    if linalg::reciprocal_condition(&op) < OPERATOR_RCOND_TOL {
        return Err(operator_singularity("Lyapunov", p.a_zz(), p.a_zz(), beta));
    }
    let vec_c = DMatrix::from_column_slice(dim, 1, linalg::vec_col(&c).as_slice());
    let sol = linalg::solve_lu(&op, &vec_c, "Lyapunov operator")?;
    Ok(linalg::symmetrize(&DMatrix::from_column_slice(
        n_z,
        n_z,
        sol.as_slice(),
    )))
}

/// Runs the full pipeline `solve_pyy -> solve_fy -> solve_pyz -> solve_pzz`
/// and assembles the symmetric value matrix. The reported residual is the
/// full-Riccati residual of the assembled `P`, certifying the composition.
pub fn assemble(p: &AugmentedLQProblem, tol: f64, max_iter: usize) -> Result<RiccatiSolution> {
    let part = p.partition();
    let (n_y, n_z) = (part.n_y(), part.n_z);
    let (p_yy, iterations) = pyy_iteration(p, tol, max_iter)?;
    let f_y = solve_fy(p, &p_yy)?;
    let p_yz = solve_pyz(p, &p_yy, &f_y)?;
    let p_zz = solve_pzz(p, &p_yy, &p_yz)?;

    let mut full = DMatrix::zeros(part.n(), part.n());
    full.view_mut((0, 0), (n_y, n_y)).copy_from(&p_yy);
    full.view_mut((0, n_y), (n_y, n_z)).copy_from(&p_yz);
    full.view_mut((n_y, 0), (n_z, n_y))
        .copy_from(&p_yz.transpose());
    full.view_mut((n_y, n_y), (n_z, n_z)).copy_from(&p_zz);

    let residual_norm = riccati::riccati_residual(p, &full)?;
    Ok(RiccatiSolution::from_parts(
        full,
        part,
        iterations,
        residual_norm,
        true,
    ))
}
