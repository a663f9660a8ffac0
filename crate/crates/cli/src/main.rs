//! Command-line front end for the `ramsey-lq` solver.
//!
//! Exit codes: 0 success, 1 verification failure, 2 parse or validation
//! failure, 3 solver non-convergence or numerical breakdown, 4 assumption
//! violation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ramsey_lq::nalgebra::{DMatrix, DVector};
use ramsey_lq::{
    blocks, linalg,
    model::{self, build_nkpc, DEFAULT_RANK_TOL},
    riccati::{
        build_pencil, closed_loop_full, compute_gain, pencil_mirror_check, riccati_residual,
        solve_full_riccati, DEFAULT_MAX_ITER, DEFAULT_TOL,
    },
    simulate, welfare, AugmentedLQProblem, Error, FeedbackGain, ModelFile, RiccatiSolution,
    ValidationReport,
};
use serde::Serialize;

const MIRROR_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "ramsey-lq",
    version,
    about = "Ramsey optimal policy for discounted LQ models with AR forcing shocks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model file and emit the full report as JSON.
    Solve {
        /// Path to the model JSON file.
        model: PathBuf,
        /// Initial predetermined state: a scalar or a JSON array.
        #[arg(long)]
        k0: Option<String>,
        /// Initial shock state: a scalar or a JSON array.
        #[arg(long)]
        z0: Option<String>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the anchored closed loop; optional CSV trajectory.
    Simulate {
        /// Path to the model JSON file.
        model: PathBuf,
        /// Horizon T; states are reported for t = 0..=T.
        #[arg(long, default_value_t = 200)]
        periods: usize,
        /// Initial predetermined state: a scalar or a JSON array.
        #[arg(long)]
        k0: Option<String>,
        /// Initial shock state: a scalar or a JSON array.
        #[arg(long)]
        z0: Option<String>,
        /// Write the trajectory as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the full certificate suite against a model file.
    Verify {
        /// Path to the model JSON file.
        model: PathBuf,
    },
    /// Emit a built-in example model as JSON.
    Example {
        /// Example name; `nkpc` is the only one built in.
        name: String,
        /// Discount factor.
        #[arg(long, default_value_t = 0.99)]
        beta: f64,
        /// Phillips-curve slope.
        #[arg(long, default_value_t = 0.1275)]
        kappa: f64,
        /// Elasticity of substitution (sets the instrument weight kappa/epsilon).
        #[arg(long, default_value_t = 6.0)]
        epsilon: f64,
        /// Shock autocorrelation.
        #[arg(long, default_value_t = 0.8)]
        rho: f64,
        /// Write the model here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure carrying the process exit code and a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

type CliResult<T> = Result<T, Failure>;

fn fail<T>(code: u8, message: impl Into<String>) -> CliResult<T> {
    Err(Failure {
        code,
        message: message.into(),
    })
}

/// Failure for solver errors surfacing after parse and assumption checks.
/// Non-convergence and numerical breakdowns share exit code 3: the input
/// was well-formed but no solution was produced.
fn solver_fail(e: Error) -> Failure {
    Failure {
        code: 3,
        message: e.to_string(),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run() -> CliResult<ExitCode> {
    match Cli::parse().command {
        Command::Solve { model, k0, z0, out } => cmd_solve(&model, k0, z0, out),
        Command::Simulate {
            model,
            periods,
            k0,
            z0,
            csv,
        } => cmd_simulate(&model, periods, k0, z0, csv),
        Command::Verify { model } => cmd_verify(&model),
        Command::Example {
            name,
            beta,
            kappa,
            epsilon,
            rho,
            out,
        } => cmd_example(&name, beta, kappa, epsilon, rho, out),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load_problem(path: &Path) -> CliResult<AugmentedLQProblem> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(2, format!("cannot read {}: {e}", path.display())),
    };
    let file: ModelFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        // serde_json's message carries "at line L column C".
        Err(e) => return fail(2, format!("{}: {e}", path.display())),
    };
    file.to_problem()
        .map_err(|e| Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        })
}

/// Runs the assumption checks; errors with exit code 4 naming the failed
/// assumption when one is violated.
fn assumption_gate(p: &AugmentedLQProblem) -> CliResult<ValidationReport> {
    let report = model::validate(p, DEFAULT_RANK_TOL).map_err(|e| Failure {
        code: 3,
        message: e.to_string(),
    })?;
    if !report.all_pass() {
        let violated: Vec<&str> = report
            .messages
            .iter()
            .filter(|m| m.contains("VIOLATED"))
            .map(|m| m.as_str())
            .collect();
        return fail(4, violated.join("; "));
    }
    Ok(report)
}

/// Parses an initial-condition flag: a scalar, or a JSON array for vectors.
/// A missing flag means the zero vector.
fn parse_init(flag: Option<String>, len: usize, name: &str) -> CliResult<DVector<f64>> {
    let Some(text) = flag else {
        return Ok(DVector::zeros(len));
    };
    let values: Vec<f64> = if let Ok(v) = text.trim().parse::<f64>() {
        vec![v]
    } else {
        match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => {
                return fail(
                    2,
                    format!("--{name} must be a number or a JSON array of numbers: {e}"),
                )
            }
        }
    };
    if values.len() != len {
        return fail(
            2,
            format!("--{name} has {} entries, expected {len}", values.len()),
        );
    }
    Ok(DVector::from_column_slice(&values))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Prints to standard output, treating a closed pipe (e.g. `| head`) as a
/// deliberate end of consumption rather than an error.
fn print_stdout(text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => fail(2, format!("cannot write to standard output: {e}")),
    }
}

fn write_text(out: Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(&path, text).map_or_else(
            |e| fail(2, format!("cannot write {}: {e}", path.display())),
            Ok,
        ),
        None => print_stdout(text),
    }
}

/// Everything the solve pipeline produces, shared by `solve` and `simulate`.
struct Solved {
    problem: AugmentedLQProblem,
    validation: ValidationReport,
    solution: RiccatiSolution,
    gain: FeedbackGain,
    block_max_abs_diff: f64,
}

fn solve_pipeline(path: &Path) -> CliResult<Solved> {
    let problem = load_problem(path)?;
    let validation = assumption_gate(&problem)?;
    let solution =
        solve_full_riccati(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(solver_fail)?;
    if !solution.converged {
        return fail(
            3,
            format!(
                "Riccati iteration did not converge after {} iterations \
                 (residual {:.3e})",
                solution.iterations, solution.residual_norm
            ),
        );
    }
    let block = blocks::assemble(&problem, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| Failure {
        code: 3,
        message: format!("block cross-check: {e}"),
    })?;
    let block_max_abs_diff = linalg::max_abs_diff(solution.p(), block.p());
    let gain = compute_gain(&problem, &solution).map_err(solver_fail)?;
    Ok(Solved {
        problem,
        validation,
        solution,
        gain,
        block_max_abs_diff,
    })
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ProblemEcho {
    n_k: usize,
    n_x: usize,
    n_z: usize,
    n_u: usize,
    beta: f64,
}

#[derive(Serialize)]
struct PBlocks {
    #[serde(rename = "P_yy")]
    p_yy: Vec<Vec<f64>>,
    #[serde(rename = "P_yz")]
    p_yz: Vec<Vec<f64>>,
    #[serde(rename = "P_zz")]
    p_zz: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct FBlocks {
    #[serde(rename = "F_y")]
    f_y: Vec<Vec<f64>>,
    #[serde(rename = "F_z")]
    f_z: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct AnchorBlocks {
    #[serde(rename = "G_k")]
    g_k: Vec<Vec<f64>>,
    #[serde(rename = "G_z")]
    g_z: Vec<Vec<f64>>,
    x0: Vec<f64>,
}

#[derive(Serialize)]
struct AssumptionsEcho {
    controllability_rank: usize,
    controllable: bool,
    shock_eigenvalue_moduli: Vec<f64>,
    shock_stable: bool,
    messages: Vec<String>,
}

impl From<&ValidationReport> for AssumptionsEcho {
    fn from(v: &ValidationReport) -> Self {
        AssumptionsEcho {
            controllability_rank: v.controllability_rank,
            controllable: v.controllable,
            shock_eigenvalue_moduli: v.shock_eigenvalue_moduli.clone(),
            shock_stable: v.shock_stable,
            messages: v.messages.clone(),
        }
    }
}

#[derive(Serialize)]
struct Diagnostics {
    iterations: usize,
    residual_norm: f64,
    converged: bool,
    block_max_abs_diff: f64,
    mirror_pass: bool,
    assumptions: AssumptionsEcho,
}

#[derive(Serialize)]
struct SolveReport {
    problem: ProblemEcho,
    #[serde(rename = "P")]
    p: PBlocks,
    #[serde(rename = "F")]
    f: FBlocks,
    anchor: AnchorBlocks,
    welfare_matrix: Vec<Vec<f64>>,
    welfare: f64,
    naive_welfare: f64,
    diagnostics: Diagnostics,
}

fn cmd_solve(
    model: &Path,
    k0: Option<String>,
    z0: Option<String>,
    out: Option<PathBuf>,
) -> CliResult<ExitCode> {
    let solved = solve_pipeline(model)?;
    let part = solved.problem.partition();
    let k0 = parse_init(k0, part.n_k, "k0")?;
    let z0 = parse_init(z0, part.n_z, "z0")?;

    let wrep = welfare::report(&solved.solution, &k0, &z0).map_err(solver_fail)?;
    let naive =
        welfare::naive_welfare(solved.solution.p(), part, &k0, &z0).map_err(solver_fail)?;
    let mirror =
        pencil_mirror_check(&build_pencil(&solved.problem), solved.problem.beta(), MIRROR_TOL)
            .map_err(solver_fail)?;
    let residual =
        riccati_residual(&solved.problem, solved.solution.p()).map_err(solver_fail)?;

    let report = SolveReport {
        problem: ProblemEcho {
            n_k: part.n_k,
            n_x: part.n_x,
            n_z: part.n_z,
            n_u: part.n_u,
            beta: solved.problem.beta(),
        },
        p: PBlocks {
            p_yy: rows(&solved.solution.p_yy()),
            p_yz: rows(&solved.solution.p_yz()),
            p_zz: rows(&solved.solution.p_zz()),
        },
        f: FBlocks {
            f_y: rows(&solved.gain.f_y),
            f_z: rows(&solved.gain.f_z),
        },
        anchor: AnchorBlocks {
            g_k: rows(&wrep.g_k),
            g_z: rows(&wrep.g_z),
            x0: wrep.x0.iter().copied().collect(),
        },
        welfare_matrix: rows(&wrep.s),
        welfare: wrep.welfare,
        naive_welfare: naive,
        diagnostics: Diagnostics {
            iterations: solved.solution.iterations,
            residual_norm: residual,
            converged: solved.solution.converged,
            block_max_abs_diff: solved.block_max_abs_diff,
            mirror_pass: mirror.pass,
            assumptions: AssumptionsEcho::from(&solved.validation),
        },
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateSummary {
    #[serde(rename = "W_sim")]
    w_sim: f64,
    #[serde(rename = "W_riccati")]
    w_riccati: f64,
    gap: f64,
}

fn write_csv(path: &Path, p: &AugmentedLQProblem, traj: &simulate::Trajectory) -> CliResult<()> {
    let part = p.partition();
    let mut text = String::from("t");
    for i in 1..=part.n_k {
        let _ = write!(text, ",k_{i}");
    }
    for i in 1..=part.n_x {
        let _ = write!(text, ",x_{i}");
    }
    for i in 1..=part.n_z {
        let _ = write!(text, ",z_{i}");
    }
    for i in 1..=part.n_u {
        let _ = write!(text, ",u_{i}");
    }
    text.push_str(",period_loss,discounted_cumulative\n");

    for t in 0..=traj.horizon {
        let _ = write!(text, "{t}");
        for i in 0..part.n_y() {
            let _ = write!(text, ",{:.16e}", traj.y_path[t][i]);
        }
        for i in 0..part.n_z {
            let _ = write!(text, ",{:.16e}", traj.z_path[t][i]);
        }
        for i in 0..part.n_u {
            let _ = write!(text, ",{:.16e}", traj.u_path[t][i]);
        }
        let _ = write!(text, ",{:.16e}", traj.period_loss[t]);
        let _ = writeln!(text, ",{:.16e}", traj.discounted_cumulative[t]);
    }
    std::fs::write(path, text)
        .map_or_else(|e| fail(2, format!("cannot write {}: {e}", path.display())), Ok)
}

fn cmd_simulate(
    model: &Path,
    periods: usize,
    k0: Option<String>,
    z0: Option<String>,
    csv: Option<PathBuf>,
) -> CliResult<ExitCode> {
    let solved = solve_pipeline(model)?;
    let part = solved.problem.partition();
    let k0 = parse_init(k0, part.n_k, "k0")?;
    let z0 = parse_init(z0, part.n_z, "z0")?;

    let wrep = welfare::report(&solved.solution, &k0, &z0).map_err(solver_fail)?;
    let traj = simulate::simulate_closed_loop(
        &solved.problem,
        &solved.gain,
        &k0,
        &z0,
        &wrep.x0,
        periods,
    )
    .map_err(solver_fail)?;

    if let Some(path) = csv {
        write_csv(&path, &solved.problem, &traj)?;
    }

    let w_sim = -simulate::discounted_loss(&solved.problem, &traj);
    let summary = SimulateSummary {
        w_sim,
        w_riccati: wrep.welfare,
        gap: (w_sim - wrep.welfare).abs(),
    };
    print_stdout(&serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Check {
    name: &'static str,
    /// Measured quantity; see the name for its meaning.
    value: f64,
    /// Pass threshold the value is compared against.
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    checks: Vec<Check>,
    /// Solver checks not run because a precondition failed.
    skipped: Vec<&'static str>,
    pass: bool,
}

const SOLVER_CHECKS: [&str; 9] = [
    "riccati_convergence",
    "riccati_residual",
    "p_symmetry",
    "p_positive_semidefinite",
    "block_full_equivalence",
    "closed_loop_stability",
    "mirror_pairing",
    "bellman_identity",
    "oracle_gap",
];

fn finish_verify(report: VerifyReport) -> CliResult<ExitCode> {
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    print_stdout(&text)?;
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_verify(model: &Path) -> CliResult<ExitCode> {
    let p = load_problem(model)?;
    let mut checks = Vec::new();

    let validation = model::validate(&p, DEFAULT_RANK_TOL).map_err(solver_fail)?;
    checks.push(Check {
        name: "assumption_1_controllability",
        value: validation.controllability_rank as f64,
        threshold: p.partition().n_y() as f64,
        pass: validation.controllable,
    });
    let worst_modulus = validation
        .shock_eigenvalue_moduli
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b));
    checks.push(Check {
        name: "assumption_2_shock_stability",
        value: worst_modulus,
        threshold: 1.0 / p.beta().sqrt(),
        pass: validation.shock_stable,
    });
    if !validation.all_pass() {
        return finish_verify(VerifyReport {
            checks,
            skipped: SOLVER_CHECKS.to_vec(),
            pass: false,
        });
    }

    let sol = solve_full_riccati(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(solver_fail)?;
    checks.push(Check {
        name: "riccati_convergence",
        value: sol.iterations as f64,
        threshold: DEFAULT_MAX_ITER as f64,
        pass: sol.converged,
    });
    if !sol.converged {
        return finish_verify(VerifyReport {
            checks,
            skipped: SOLVER_CHECKS[1..].to_vec(),
            pass: false,
        });
    }

    // The remaining checks can all be measured; any hard numerical error
    // below is a breakdown, not a failed certificate.
    let residual = riccati_residual(&p, sol.p()).map_err(solver_fail)?;
    checks.push(Check {
        name: "riccati_residual",
        value: residual,
        threshold: 1e-10,
        pass: residual <= 1e-10,
    });

    let asym = linalg::asymmetry(sol.p());
    checks.push(Check {
        name: "p_symmetry",
        value: asym,
        threshold: 1e-10,
        pass: asym <= 1e-10,
    });

    let min_eig = linalg::min_symmetric_eigenvalue(sol.p());
    checks.push(Check {
        name: "p_positive_semidefinite",
        value: min_eig,
        threshold: -1e-8,
        pass: min_eig >= -1e-8,
    });

    let block = blocks::assemble(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(solver_fail)?;
    let diff = linalg::max_abs_diff(sol.p(), block.p());
    checks.push(Check {
        name: "block_full_equivalence",
        value: diff,
        threshold: 1e-9,
        pass: diff <= 1e-9,
    });

    let gain = compute_gain(&p, &sol).map_err(solver_fail)?;
    let radius = linalg::spectral_radius(&closed_loop_full(&p, &gain), "closed loop")
        .map_err(solver_fail)?;
    let cap = 1.0 / p.beta().sqrt() + 1e-10;
    checks.push(Check {
        name: "closed_loop_stability",
        value: radius,
        threshold: cap,
        pass: radius < cap,
    });

    let mirror = pencil_mirror_check(&build_pencil(&p), p.beta(), MIRROR_TOL).map_err(solver_fail)?;
    checks.push(Check {
        name: "mirror_pairing",
        value: mirror.unpaired.len() as f64,
        threshold: 0.0,
        pass: mirror.pass,
    });

    // Certificates along the anchored trajectory from a ones start.
    let part = p.partition();
    let k0 = DVector::from_element(part.n_k, 1.0);
    let z0 = DVector::from_element(part.n_z, 1.0);
    let wrep = welfare::report(&sol, &k0, &z0).map_err(solver_fail)?;
    let traj = simulate::simulate_closed_loop(&p, &gain, &k0, &z0, &wrep.x0, 51).map_err(solver_fail)?;
    let value = |t: usize| {
        let mut s = DVector::zeros(part.n());
        for i in 0..part.n_y() {
            s[i] = traj.y_path[t][i];
        }
        for i in 0..part.n_z {
            s[part.n_y() + i] = traj.z_path[t][i];
        }
        -(s.transpose() * sol.p() * s)[(0, 0)]
    };
    let mut bellman_gap = 0.0_f64;
    for t in 0..=50 {
        bellman_gap =
            bellman_gap.max((value(t) - (-traj.period_loss[t] + p.beta() * value(t + 1))).abs());
    }
    checks.push(Check {
        name: "bellman_identity",
        value: bellman_gap,
        threshold: 1e-8,
        pass: bellman_gap <= 1e-8,
    });

    let cmp = simulate::oracle_welfare(&p, &sol, &gain, &k0, &z0, 200).map_err(solver_fail)?;
    let gap_tol = (1e-8 * cmp.w_riccati.abs()).max(1e-12);
    checks.push(Check {
        name: "oracle_gap",
        value: cmp.gap,
        threshold: gap_tol,
        pass: cmp.gap <= gap_tol,
    });

    let pass = checks.iter().all(|c| c.pass);
    finish_verify(VerifyReport {
        checks,
        skipped: Vec::new(),
        pass,
    })
}

// ---------------------------------------------------------------------------
// example
// ---------------------------------------------------------------------------

fn cmd_example(
    name: &str,
    beta: f64,
    kappa: f64,
    epsilon: f64,
    rho: f64,
    out: Option<PathBuf>,
) -> CliResult<ExitCode> {
    if name != "nkpc" {
        return fail(2, format!("unknown example `{name}` (known examples: nkpc)"));
    }
    let p = build_nkpc(beta, kappa, epsilon, rho).map_err(|e| Failure {
        code: 2,
        message: e.to_string(),
    })?;
    let text = serde_json::to_string_pretty(&ModelFile::from_problem(&p))
        .expect("model serializes");
    write_text(out, &text)?;
    Ok(ExitCode::SUCCESS)
}
