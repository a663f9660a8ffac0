//! Optimal anchor of jump variables and exact welfare.
//!
//! Jump variables have no inherited initial condition: the planner picks
//! `x_0` itself, and the optimum zeroes the corresponding costate at t = 0,
//!
//! ```text
//!   P_xk k_0 + P_xx x_0 + P_xz z_0 = 0
//!     =>  x_0 = G_k k_0 + G_z z_0,   G_k = -P_xx^{-1} P_xk,
//!                                    G_z = -P_xx^{-1} P_xz.
//! ```
//!
//! Substituting the anchor back into `-(state)' P (state)` projects the
//! value matrix onto the truly exogenous coordinates `(k_0, z_0)`: in the
//! `(x, k, z)` ordering,
//!
//! ```text
//!   S = [G I]' P [G; I]  =  P_(kz)(kz) - P_(kz)x P_xx^{-1} P_x(kz),
//! ```
//!
//! the Schur complement of `P_xx`, and welfare is `W = -(k_0, z_0)' S
//! (k_0, z_0)` — all of it, including the shock block `P_zz`. Zeroing
//! `P_zz` instead (the "naive" reading that drops the shock equation)
//! produces a strictly positive welfare value on the calibrated example,
//! which a discounted sum of non-negative losses can never deliver; that
//! falsification is exposed here as [`naive_welfare`].
//!
//! Internally the state is ordered `(k, x, z)`; the jump-first `(x, k, z)`
//! ordering used by the anchor projection is realized by an explicit
//! permutation matrix so block extraction is testable rather than assumed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Partition;
use crate::riccati::RiccatiSolution;

/// Reciprocal-condition threshold below which `P_xx` counts as singular.
pub const PXX_RCOND_TOL: f64 = 1e-12;

/// Anchor map, projected welfare matrix, and the welfare value for one
/// initial condition.
#[derive(Debug, Clone)]
pub struct WelfareReport {
    /// Anchor loading on the predetermined block, `n_x x n_k`.
    pub g_k: DMatrix<f64>,
    /// Anchor loading on the shock block, `n_x x n_z`.
    pub g_z: DMatrix<f64>,
    /// Projected welfare matrix over `(k_0, z_0)`, symmetric.
    pub s: DMatrix<f64>,
    /// Anchored jump value `x_0 = G_k k_0 + G_z z_0`.
    pub x0: DVector<f64>,
    /// `-(k_0, z_0)' S (k_0, z_0)`.
    pub welfare: f64,
}

/// Permutation `Pi` mapping `(x, k, z)`-ordered coordinates into the
/// internal `(k, x, z)` slots, so that `Pi' P Pi` is the value matrix in
/// the `(x, k, z)` ordering.
pub fn jump_first_permutation(partition: Partition) -> DMatrix<f64> {
    let n = partition.n();
    let (n_k, n_x) = (partition.n_k, partition.n_x);
    let mut pi = DMatrix::zeros(n, n);
    for j in 0..n {
        let internal = if j < n_x {
            // x block leads in the jump-first ordering.
            n_k + j
        } else if j < n_x + n_k {
            j - n_x
        } else {
            // z block: same tail position in both orderings.
            j
        };
        pi[(internal, j)] = 1.0;
    }
    pi
}

fn check_p_shape(pm: &DMatrix<f64>, partition: Partition) -> Result<()> {
    let n = partition.n();
    if pm.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            name: "P".into(),
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", pm.nrows(), pm.ncols()),
        });
    }
    Ok(())
}

/// Solves the zeroed t = 0 costate condition for the anchor loadings
/// `(G_k, G_z) = -P_xx^{-1} (P_xk, P_xz)`.
///
/// With no jump variables the loadings are empty `0 x n_k` / `0 x n_z`
/// matrices.
pub fn anchor_map(
    pm: &DMatrix<f64>,
    partition: Partition,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_p_shape(pm, partition)?;
    let (n_k, n_x, n_z) = (partition.n_k, partition.n_x, partition.n_z);
    if n_x == 0 {
        return Ok((DMatrix::zeros(0, n_k), DMatrix::zeros(0, n_z)));
    }
    let x0 = partition.x_range().start;
    let p_xx: DMatrix<f64> = pm.view((x0, x0), (n_x, n_x)).into();
    if linalg::reciprocal_condition(&p_xx) < PXX_RCOND_TOL {
        return Err(Error::Singular { context: "P_xx" });
    }
    let mut rhs = DMatrix::zeros(n_x, n_k + n_z);
    rhs.view_mut((0, 0), (n_x, n_k))
        .copy_from(&pm.view((x0, 0), (n_x, n_k)));
    rhs.view_mut((0, n_k), (n_x, n_z))
        .copy_from(&pm.view((x0, partition.z_range().start), (n_x, n_z)));
    let sol = linalg::solve_lu(&p_xx, &rhs, "P_xx")?;
    Ok((
        -sol.view((0, 0), (n_x, n_k)),
        -sol.view((0, n_k), (n_x, n_z)),
    ))
}

/// Projects the value matrix onto `(k_0, z_0)` by substituting the anchor:
/// the Schur complement of `P_xx` in the `(x, k, z)`-ordered `P`, computed
/// as the sandwich product `[G I]' P_prop [G; I]` and symmetrized.
pub fn welfare_matrix(pm: &DMatrix<f64>, partition: Partition) -> Result<DMatrix<f64>> {
    let (g_k, g_z) = anchor_map(pm, partition)?;
    let (n_k, n_x, n_z) = (partition.n_k, partition.n_x, partition.n_z);
    let n = partition.n();
    let mut t = DMatrix::zeros(n, n_k + n_z);
    t.view_mut((0, 0), (n_x, n_k)).copy_from(&g_k);
    t.view_mut((0, n_k), (n_x, n_z)).copy_from(&g_z);
    for i in 0..n_k {
        t[(n_x + i, i)] = 1.0;
    }
    for i in 0..n_z {
        t[(n_x + n_k + i, n_k + i)] = 1.0;
    }
    let pi = jump_first_permutation(partition);
    let p_prop = pi.transpose() * pm * pi;
    Ok(linalg::symmetrize(&(t.transpose() * p_prop * t)))
}

/// Welfare of the anchored optimum, `W = -(k_0, z_0)' S (k_0, z_0)`.
pub fn welfare_value(s: &DMatrix<f64>, k0: &DVector<f64>, z0: &DVector<f64>) -> Result<f64> {
    let m = k0.len() + z0.len();
    if s.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            name: "S".into(),
            expected: format!("{m}x{m}"),
            found: format!("{}x{}", s.nrows(), s.ncols()),
        });
    }
    let mut q = DVector::zeros(m);
    q.rows_mut(0, k0.len()).copy_from(k0);
    q.rows_mut(k0.len(), z0.len()).copy_from(z0);
    Ok(-(q.transpose() * s * q)[(0, 0)])
}

/// Welfare recomputed after forcing `P_zz = 0`: the naive value that drops
/// the shock-block equation. On any problem with active shocks it comes
/// out strictly positive — impossible for a discounted sum of non-negative
/// losses — which is exactly the falsification the projection exists to
/// demonstrate.
pub fn naive_welfare(
    pm: &DMatrix<f64>,
    partition: Partition,
    k0: &DVector<f64>,
    z0: &DVector<f64>,
) -> Result<f64> {
    check_p_shape(pm, partition)?;
    let mut naive = pm.clone();
    naive
        .view_mut(
            (partition.n_y(), partition.n_y()),
            (partition.n_z, partition.n_z),
        )
        .fill(0.0);
    let s = welfare_matrix(&naive, partition)?;
    welfare_value(&s, k0, z0)
}

/// Bundles anchor, projection, anchored jump value, and welfare for one
/// initial condition.
pub fn report(
    sol: &RiccatiSolution,
    k0: &DVector<f64>,
    z0: &DVector<f64>,
) -> Result<WelfareReport> {
    let partition = sol.partition();
    if k0.len() != partition.n_k || z0.len() != partition.n_z {
        return Err(Error::DimensionMismatch {
            name: "initial condition".into(),
            expected: format!("k0 len {}, z0 len {}", partition.n_k, partition.n_z),
            found: format!("k0 len {}, z0 len {}", k0.len(), z0.len()),
        });
    }
    let (g_k, g_z) = anchor_map(sol.p(), partition)?;
    let s = welfare_matrix(sol.p(), partition)?;
    let x0 = &g_k * k0 + &g_z * z0;
    let welfare = welfare_value(&s, k0, z0)?;
    Ok(WelfareReport {
        g_k,
        g_z,
        s,
        x0,
        welfare,
    })
}
