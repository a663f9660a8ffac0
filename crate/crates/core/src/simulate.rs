//! Deterministic closed-loop simulation and the discounted-loss oracle.
//!
//! Under certainty equivalence the optimal feedback does not depend on the
//! shock innovations, so the welfare cross-check can run on the noiseless
//! impulse response: start from `(k_0, x_0, z_0)` with the anchored jump
//! value, iterate the closed-loop transition, accumulate
//! `sum_t beta^t l_t`, and compare `-sum` against the closed-form value
//! `-(k_0, z_0)' S (k_0, z_0)`. The two numbers come from entirely
//! different code paths — time iteration versus the Riccati fixed point —
//! which is what makes the comparison an oracle rather than a tautology.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::AugmentedLQProblem;
use crate::riccati::{FeedbackGain, RiccatiSolution};
use crate::welfare;

/// Default horizon for the welfare cross-check.
pub const DEFAULT_HORIZON: usize = 200;

/// Noiseless closed-loop paths over `t = 0..=horizon`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub horizon: usize,
    /// Controllable state `(k, x)` per period.
    pub y_path: Vec<DVector<f64>>,
    /// Forcing shocks per period; `z_path[t+1] = A_zz z_path[t]` exactly.
    pub z_path: Vec<DVector<f64>>,
    /// Instruments per period, including one for the final state.
    pub u_path: Vec<DVector<f64>>,
    /// `l_t = y'Q_yy y + 2 y'Q_yz z + z'Q_zz z + u'R_uu u` (no 1/2).
    pub period_loss: Vec<f64>,
    /// Running discounted sum of period losses.
    pub discounted_cumulative: Vec<f64>,
}

/// Side-by-side welfare from the simulation and from the Riccati solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub w_sim: f64,
    pub w_riccati: f64,
    pub gap: f64,
}

fn qform(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

fn check_len(name: &str, v: &DVector<f64>, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            name: name.to_owned(),
            expected: format!("{expected}"),
            found: format!("{}", v.len()),
        });
    }
    Ok(())
}

/// Simulates `u_t = F_y y_t + F_z z_t` under the block transition from the
/// initial condition `(k_0, x_0, z_0)`, recording states, instruments,
/// period losses, and the running discounted sum.
pub fn simulate_closed_loop(
    p: &AugmentedLQProblem,
    gain: &FeedbackGain,
    k0: &DVector<f64>,
    z0: &DVector<f64>,
    x0: &DVector<f64>,
    horizon: usize,
) -> Result<Trajectory> {
    let part = p.partition();
    check_len("k0", k0, part.n_k)?;
    check_len("x0", x0, part.n_x)?;
    check_len("z0", z0, part.n_z)?;
    if gain.f_y.shape() != (part.n_u, part.n_y()) || gain.f_z.shape() != (part.n_u, part.n_z) {
        return Err(Error::DimensionMismatch {
            name: "FeedbackGain".into(),
            expected: format!("F_y {}x{}, F_z {}x{}", part.n_u, part.n_y(), part.n_u, part.n_z),
            found: format!(
                "F_y {}x{}, F_z {}x{}",
                gain.f_y.nrows(),
                gain.f_y.ncols(),
                gain.f_z.nrows(),
                gain.f_z.ncols()
            ),
        });
    }

    let mut y = DVector::zeros(part.n_y());
    y.rows_mut(0, part.n_k).copy_from(k0);
    y.rows_mut(part.n_k, part.n_x).copy_from(x0);
    let mut z = z0.clone();

    let mut traj = Trajectory {
        horizon,
        y_path: Vec::with_capacity(horizon + 1),
        z_path: Vec::with_capacity(horizon + 1),
        u_path: Vec::with_capacity(horizon + 1),
        period_loss: Vec::with_capacity(horizon + 1),
        discounted_cumulative: Vec::with_capacity(horizon + 1),
    };
    let mut beta_pow = 1.0;
    let mut cumulative = 0.0;
    for t in 0..=horizon {
        let u = &gain.f_y * &y + &gain.f_z * &z;
        let loss = qform(&y, p.q_yy())
            + 2.0 * (y.transpose() * p.q_yz() * &z)[(0, 0)]
            + qform(&z, p.q_zz())
            + qform(&u, p.r_uu());
        let finite = loss.is_finite()
            && y.iter().all(|v| v.is_finite())
            && z.iter().all(|v| v.is_finite())
            && u.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::UnstableSimulation { period: t });
        }
        cumulative += beta_pow * loss;
        beta_pow *= p.beta();
        traj.y_path.push(y.clone());
        traj.z_path.push(z.clone());
        traj.u_path.push(u.clone());
        traj.period_loss.push(loss);
        traj.discounted_cumulative.push(cumulative);
        if t < horizon {
            y = p.a_yy() * &y + p.a_yz() * &z + p.b_yu() * &u;
            z = p.a_zz() * &z;
        }
    }
    Ok(traj)
}

/// Discounted sum `sum_{t=0}^{T} beta^t l_t` over a stored trajectory.
pub fn discounted_loss(p: &AugmentedLQProblem, traj: &Trajectory) -> f64 {
    let mut beta_pow = 1.0;
    let mut sum = 0.0;
    for loss in &traj.period_loss {
        sum += beta_pow * loss;
        beta_pow *= p.beta();
    }
    sum
}

/// Compares anchored simulation welfare against the closed-form Riccati
/// welfare for the same `(k_0, z_0)`.
pub fn oracle_welfare(
    p: &AugmentedLQProblem,
    sol: &RiccatiSolution,
    gain: &FeedbackGain,
    k0: &DVector<f64>,
    z0: &DVector<f64>,
    horizon: usize,
) -> Result<OracleComparison> {
    if sol.partition() != p.partition() {
        return Err(Error::DimensionMismatch {
            name: "RiccatiSolution".into(),
            expected: format!("{:?}", p.partition()),
            found: format!("{:?}", sol.partition()),
        });
    }
    let rep = welfare::report(sol, k0, z0)?;
    let traj = simulate_closed_loop(p, gain, k0, z0, &rep.x0, horizon)?;
    let w_sim = -discounted_loss(p, &traj);
    Ok(OracleComparison {
        w_sim,
        w_riccati: rep.welfare,
        gap: (w_sim - rep.welfare).abs(),
    })
}
