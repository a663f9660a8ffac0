//! Full-block discounted Riccati solver, optimal feedback gain, and the
//! Hamiltonian pencil verification.
//!
//! The value matrix `P` of the augmented problem solves the discounted
//! discrete algebraic Riccati equation
//!
//! ```text
//!   P = Q + beta A'PA
//!         - beta^2 A'PB (R_uu + beta B_yu' P_yy B_yu)^{-1} B'PA
//! ```
//!
//! with `A`, `B`, `Q` the full augmented blocks. Because the shock rows of
//! `B` are structurally zero, the matrix to invert collapses to
//! `R_uu + beta B_yu' P_yy B_yu` — only the `y` block of `P` enters. The
//! solver is a plain fixed-point (value) iteration started at `P = Q` with
//! each iterate symmetrized; the discount scaling makes it a contraction
//! whenever the stabilizability assumptions hold.
//!
//! For verification the module also assembles the Hamiltonian pencil
//!
//! ```text
//!   L = [ I   -beta B R^{-1} B' ]      N = [  A   0 ]
//!       [ 0        beta A'     ]           [ -Q   I ]
//! ```
//!
//! whose eigenvalues (of `H = L^{-1} N`) come in mirror pairs
//! `(lambda, 1/(beta lambda))`: equivalently, after multiplying by
//! `sqrt(beta)` the products of paired roots equal 1.

use nalgebra::{Cholesky, Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{AugmentedLQProblem, Partition};

/// Default max-abs update threshold for the fixed-point iteration.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Converged (or diagnosed) solution of the full Riccati equation.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    p: DMatrix<f64>,
    partition: Partition,
    /// Number of fixed-point iterations performed.
    pub iterations: usize,
    /// Max-abs entry of `RHS(P) - P` for the returned `P`.
    pub residual_norm: f64,
    /// True when the last update fell below the tolerance.
    pub converged: bool,
}

impl RiccatiSolution {
    pub(crate) fn from_parts(
        p: DMatrix<f64>,
        partition: Partition,
        iterations: usize,
        residual_norm: f64,
        converged: bool,
    ) -> Self {
        Self {
            p,
            partition,
            iterations,
            residual_norm,
            converged,
        }
    }

    /// The full symmetric value matrix over the `(y, z)` state.
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    /// Upper-left `n_y x n_y` block.
    pub fn p_yy(&self) -> DMatrix<f64> {
        let n_y = self.partition.n_y();
        self.p.view((0, 0), (n_y, n_y)).into()
    }

    /// Upper-right `n_y x n_z` cross block.
    pub fn p_yz(&self) -> DMatrix<f64> {
        let (n_y, n_z) = (self.partition.n_y(), self.partition.n_z);
        self.p.view((0, n_y), (n_y, n_z)).into()
    }

    /// Lower-right `n_z x n_z` shock block.
    pub fn p_zz(&self) -> DMatrix<f64> {
        let (n_y, n_z) = (self.partition.n_y(), self.partition.n_z);
        self.p.view((n_y, n_y), (n_z, n_z)).into()
    }
}

/// Coefficients of the optimal rule `u_t = F_y y_t + F_z z_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGain {
    pub f_y: DMatrix<f64>,
    pub f_z: DMatrix<f64>,
}

/// The pencil `(L, N)` assembled from the problem in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianPencil {
    pub l: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

/// One matched mirror pair of pencil roots, in original units.
#[derive(Debug, Clone)]
pub struct MirrorPair {
    pub root: Complex<f64>,
    pub mirror: Complex<f64>,
    /// `|sqrt(beta) root * sqrt(beta) mirror - 1|`.
    pub defect: f64,
}

/// Outcome of the mirror-root pairing over the pencil spectrum.
#[derive(Debug, Clone)]
pub struct MirrorReport {
    /// All eigenvalues of `L^{-1} N` in original units.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Greedily matched pairs with defect below the tolerance.
    pub pairs: Vec<MirrorPair>,
    /// Eigenvalues treated as zero (their mirrors sit at infinity).
    pub zero_roots: Vec<Complex<f64>>,
    /// Nonzero eigenvalues left without a partner.
    pub unpaired: Vec<Complex<f64>>,
    /// True when every nonzero eigenvalue found its mirror.
    pub pass: bool,
}

/// Outcome of the shared fixed-point iteration.
pub(crate) struct DareOutcome {
    pub p: DMatrix<f64>,
    pub iterations: usize,
    pub last_update: f64,
    pub converged: bool,
}

/// One application of the Riccati right-hand side
/// `Q + beta A'PA - beta^2 A'PB inner^{-1} B'PA` where the inverted matrix
/// uses only the leading `inner_rows` rows of `B` and block of `P`.
pub(crate) fn riccati_rhs(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    beta: f64,
    inner_rows: usize,
    pm: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let b_in = b.rows(0, inner_rows);
    let p_in = pm.view((0, 0), (inner_rows, inner_rows));
    let inner = linalg::symmetrize(&(r + beta * (b_in.transpose() * p_in * b_in)));
    let chol = Cholesky::new(inner).ok_or(Error::Singular {
        context: "R_uu + beta B_yu' P_yy B_yu",
    })?;
    let bpa = b.transpose() * pm * a;
    let apb = a.transpose() * pm * b;
    let x = chol.solve(&bpa);
    Ok(q + beta * (a.transpose() * pm * a) - beta * beta * (apb * x))
}

/// Fixed-point iteration `P <- RHS(P)` from `P = Q`, symmetrizing each
/// iterate, until the max-abs update drops below `tol`.
#[allow(clippy::too_many_arguments)] // internal kernel mirroring the equation's terms
pub(crate) fn dare_iteration(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    beta: f64,
    inner_rows: usize,
    tol: f64,
    max_iter: usize,
) -> Result<DareOutcome> {
    let mut pm = q.clone();
    let mut last_update = f64::INFINITY;
    for it in 1..=max_iter {
        let next = linalg::symmetrize(&riccati_rhs(a, b, q, r, beta, inner_rows, &pm)?);
        last_update = linalg::max_abs_diff(&next, &pm);
        pm = next;
        if last_update < tol {
            return Ok(DareOutcome {
                p: pm,
                iterations: it,
                last_update,
                converged: true,
            });
        }
    }
    Ok(DareOutcome {
        p: pm,
        iterations: max_iter,
        last_update,
        converged: false,
    })
}

/// Solves the full augmented Riccati equation by value iteration.
///
/// On iteration exhaustion the best iterate is still returned with
/// `converged = false` so callers can inspect the diagnostics.
pub fn solve_full_riccati(
    p: &AugmentedLQProblem,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Riccati tolerance must be positive, got {tol}"
        )));
    }
    let a = p.a_full();
    let b = p.b_full();
    let q = p.q_full();
    let out = dare_iteration(
        &a,
        &b,
        &q,
        p.r_uu(),
        p.beta(),
        p.partition().n_y(),
        tol,
        max_iter,
    )?;
    let residual = riccati_rhs(&a, &b, &q, p.r_uu(), p.beta(), p.partition().n_y(), &out.p)?;
    let residual_norm = linalg::max_abs_diff(&residual, &out.p);
    Ok(RiccatiSolution::from_parts(
        out.p,
        p.partition(),
        out.iterations,
        residual_norm,
        out.converged,
    ))
}

/// Max-abs entry of `RHS(P) - P`: a direct certificate that a candidate `P`
/// solves the Riccati equation.
pub fn riccati_residual(p: &AugmentedLQProblem, pm: &DMatrix<f64>) -> Result<f64> {
    let n = p.partition().n();
    if pm.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            name: "P".into(),
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", pm.nrows(), pm.ncols()),
        });
    }
    let rhs = riccati_rhs(
        &p.a_full(),
        &p.b_full(),
        &p.q_full(),
        p.r_uu(),
        p.beta(),
        p.partition().n_y(),
        pm,
    )?;
    Ok(linalg::max_abs_diff(&rhs, pm))
}

/// Optimal rule coefficients
/// `[F_y F_z] = -(R_uu + beta B_yu' P_yy B_yu)^{-1} beta B_yu' [P_yy A_yy, P_yy A_yz + P_yz A_zz]`.
pub fn compute_gain(p: &AugmentedLQProblem, sol: &RiccatiSolution) -> Result<FeedbackGain> {
    if sol.partition() != p.partition() {
        return Err(Error::DimensionMismatch {
            name: "RiccatiSolution".into(),
            expected: format!("{:?}", p.partition()),
            found: format!("{:?}", sol.partition()),
        });
    }
    let beta = p.beta();
    let p_yy = sol.p_yy();
    let p_yz = sol.p_yz();
    let inner =
        linalg::symmetrize(&(p.r_uu() + beta * (p.b_yu().transpose() * &p_yy * p.b_yu())));
    let chol = Cholesky::new(inner).ok_or(Error::Singular {
        context: "R_uu + beta B_yu' P_yy B_yu",
    })?;
    let f_y = -chol.solve(&(beta * p.b_yu().transpose() * (&p_yy * p.a_yy())));
    let f_z = -chol.solve(&(beta * p.b_yu().transpose() * (&p_yy * p.a_yz() + &p_yz * p.a_zz())));
    Ok(FeedbackGain { f_y, f_z })
}

/// Closed-loop `y` transition `A_yy + B_yu F_y`.
pub fn closed_loop_y(p: &AugmentedLQProblem, gain: &FeedbackGain) -> DMatrix<f64> {
    p.a_yy() + p.b_yu() * &gain.f_y
}

/// Full closed-loop transition `[[A_yy + B F_y, A_yz + B F_z], [0, A_zz]]`.
pub fn closed_loop_full(p: &AugmentedLQProblem, gain: &FeedbackGain) -> DMatrix<f64> {
    let part = p.partition();
    let (n_y, n_z) = (part.n_y(), part.n_z);
    let mut cl = DMatrix::zeros(part.n(), part.n());
    cl.view_mut((0, 0), (n_y, n_y))
        .copy_from(&closed_loop_y(p, gain));
    cl.view_mut((0, n_y), (n_y, n_z))
        .copy_from(&(p.a_yz() + p.b_yu() * &gain.f_z));
    cl.view_mut((n_y, n_y), (n_z, n_z)).copy_from(p.a_zz());
    cl
}

/// Assembles the pencil `(L, N)` from the full augmented blocks.
pub fn build_pencil(p: &AugmentedLQProblem) -> HamiltonianPencil {
    let dim = p.partition().n();
    let a = p.a_full();
    let b = p.b_full();
    let q = p.q_full();
    let beta = p.beta();
    let r_inv = Cholesky::new(p.r_uu().clone())
        .expect("R_uu is positive definite by construction")
        .inverse();
    let mut l = DMatrix::zeros(2 * dim, 2 * dim);
    l.view_mut((0, 0), (dim, dim))
        .copy_from(&DMatrix::identity(dim, dim));
    l.view_mut((0, dim), (dim, dim))
        .copy_from(&(-beta * (&b * r_inv * b.transpose())));
    l.view_mut((dim, dim), (dim, dim))
        .copy_from(&(beta * a.transpose()));
    let mut n = DMatrix::zeros(2 * dim, 2 * dim);
    n.view_mut((0, 0), (dim, dim)).copy_from(&a);
    n.view_mut((dim, 0), (dim, dim)).copy_from(&(-q));
    n.view_mut((dim, dim), (dim, dim))
        .copy_from(&DMatrix::identity(dim, dim));
    HamiltonianPencil { l, n }
}

/// Checks the mirror-root structure of the pencil spectrum.
///
/// Eigenvalues of `H = L^{-1} N` are computed in original units, scaled by
/// `sqrt(beta)`, and paired greedily on the defect
/// `|mu_i mu_j - 1|` (smallest defects first, each root used at most once).
/// Scaled roots with modulus below `tol` count as zero — their mirrors sit
/// at infinity — and do not fail the check. The report maps every root back
/// to original units, where pairs read `(lambda, 1/(beta lambda))`.
pub fn pencil_mirror_check(
    pencil: &HamiltonianPencil,
    beta: f64,
    tol: f64,
) -> Result<MirrorReport> {
    let lu = pencil.l.clone().lu();
    let h = lu.solve(&pencil.n).ok_or(Error::Singular {
        context: "pencil matrix L",
    })?;
    let eigenvalues = linalg::complex_eigenvalues(&h, "pencil spectrum")?;
    let sq = beta.sqrt();
    let scaled: Vec<Complex<f64>> = eigenvalues.iter().map(|l| l * sq).collect();

    let m = scaled.len();
    let mut candidates = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let defect = (scaled[i] * scaled[j] - 1.0).norm();
            if defect <= tol {
                candidates.push((defect, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut used = vec![false; m];
    let mut pairs = Vec::new();
    for (defect, i, j) in candidates {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        pairs.push(MirrorPair {
            root: eigenvalues[i],
            mirror: eigenvalues[j],
            defect,
        });
    }

    let mut zero_roots = Vec::new();
    let mut unpaired = Vec::new();
    for i in 0..m {
        if used[i] {
            continue;
        }
        if scaled[i].norm() <= tol {
            zero_roots.push(eigenvalues[i]);
            continue;
        }
        // A root at +-1/sqrt(beta) in original units is its own mirror.
        let self_defect = (scaled[i] * scaled[i] - 1.0).norm();
        if self_defect <= tol {
            pairs.push(MirrorPair {
                root: eigenvalues[i],
                mirror: eigenvalues[i],
                defect: self_defect,
            });
        } else {
            unpaired.push(eigenvalues[i]);
        }
    }

    let pass = unpaired.is_empty();
    Ok(MirrorReport {
        eigenvalues,
        pairs,
        zero_roots,
        unpaired,
        pass,
    })
}
