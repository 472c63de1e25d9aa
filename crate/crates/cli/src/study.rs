//! Runs every rung of a study through the solver or the evaluators.

use rayon::prelude::*;
use vofrac_core::order::DEFAULT_SIGMA_TOL;
use vofrac_core::solver::manufactured;
use vofrac_core::*;

use crate::config::{ProblemId, Rung, StudyKind, StudySpec};
use crate::report::{ConvergenceReport, Row};
use crate::CliError;

/// Log-spaced abscissae per α in a certification rung.
const CERTIFY_SAMPLES: usize = 10_000;
const CERTIFY_ALPHAS: usize = 11;

/// Runs the study. Rung failures become `-` rows; only an invalid spec is
/// an error.
pub fn run_study(spec: &StudySpec) -> std::result::Result<ConvergenceReport, CliError> {
    spec.validate()?;
    let order = spec.order_function()?;
    let one = |r: &Rung| {
        run_rung(spec, &order, *r).unwrap_or_else(|e| Row::failed(r.m, r.n, e.to_string()))
    };
    let rows: Vec<Row> = if spec.parallel_rungs {
        spec.ladder.par_iter().map(one).collect()
    } else {
        spec.ladder.iter().map(one).collect()
    };
    let mut report = ConvergenceReport { rows };
    if spec.kind.is_order_study() {
        report.compute_orders();
    }
    Ok(report)
}

fn solver_config(spec: &StudySpec, scheme: Scheme, n: usize) -> SolverConfig {
    let mut c = SolverConfig::new(scheme, n)
        .with_epsilon(spec.epsilon)
        .with_ladder(spec.ladder_rule);
    if let Some(cap) = spec.max_storage {
        c = c.with_max_storage(cap);
    }
    c
}

fn solve(spec: &StudySpec, order: &OrderFunction, scheme: Scheme, r: Rung) -> Result<RunReport> {
    let config = solver_config(spec, scheme, r.n);
    match spec.problem {
        ProblemId::ScalarOde => run_scalar(&ScalarProblem::cubic(order.clone()), &config),
        ProblemId::Example1_2d => run(&manufactured(2, r.m, order.clone())?, &config),
        ProblemId::Example2_3d => run(&manufactured(3, r.m, order.clone())?, &config),
    }
}

fn solution_row(r: Rung, report: &RunReport, error: f64) -> Row {
    Row {
        m: r.m,
        n: r.n,
        error: Some(error),
        order: None,
        wall_time: Some(report.wall_time),
        storage: Some(report.peak_numeric_storage),
        failure: None,
    }
}

fn run_rung(
    spec: &StudySpec,
    order: &OrderFunction,
    r: Rung,
) -> std::result::Result<Row, CliError> {
    match spec.kind {
        StudyKind::TemporalOrder | StudyKind::SpacetimeOrder | StudyKind::Scaling => {
            let rep = solve(spec, order, spec.scheme, r)?;
            let err = rep
                .max_error
                .ok_or_else(|| CliError::Config("problem has no exact solution".into()))?;
            Ok(solution_row(r, &rep, err))
        }
        StudyKind::Agreement => {
            let fast = solve(spec, order, Scheme::Fast, r)?;
            let direct = solve(spec, order, Scheme::Direct, r)?;
            let gap = fast
                .final_values
                .iter()
                .zip(&direct.final_values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let mut row = solution_row(r, &fast, gap);
            row.wall_time = Some(fast.wall_time + direct.wall_time);
            row.storage = Some(fast.peak_numeric_storage.max(direct.peak_numeric_storage));
            Ok(row)
        }
        StudyKind::KernelCertify => {
            let dt = 1.0 / r.n as f64;
            let eps = spec.epsilon.resolve(order, dt);
            let start = std::time::Instant::now();
            let q = EsaQuadrature::from_rule(
                eps,
                order.alpha_lo(),
                order.alpha_hi(),
                dt,
                1.0,
                spec.ladder_rule,
            )?;
            let span = order.alpha_hi() - order.alpha_lo();
            let alphas: Vec<f64> = (0..CERTIFY_ALPHAS)
                .map(|i| order.alpha_lo() + span * i as f64 / (CERTIFY_ALPHAS - 1) as f64)
                .collect();
            let rep = q.certify_on(dt, &alphas, CERTIFY_SAMPLES)?;
            let mut row = Row {
                m: r.m,
                n: r.n,
                error: Some(rep.max_rel_err),
                order: None,
                wall_time: Some(start.elapsed().as_secs_f64()),
                storage: Some(q.len()),
                failure: None,
            };
            if !rep.passed {
                row.failure = Some(format!(
                    "relative error {:.3e} exceeds ε = {eps:.3e}",
                    rep.max_rel_err
                ));
                row.error = None;
            }
            Ok(row)
        }
        StudyKind::CoefficientAudit => {
            let start = std::time::Instant::now();
            let schedule = build_schedule(&TemporalMesh::new(1.0, r.n)?, order, DEFAULT_SIGMA_TOL)?;
            let dt = schedule.dt;
            let eps = spec.epsilon.resolve(order, dt);
            let q = EsaQuadrature::from_rule(
                eps,
                order.alpha_lo(),
                order.alpha_hi(),
                dt,
                1.0,
                spec.ladder_rule,
            )?;
            let mut gap = 0.0f64;
            let mut violations = 0;
            for k in 0..r.n {
                let rho = rho_row(k, &q, &schedule);
                let g = g_row(k, &schedule);
                gap = rho
                    .rho
                    .iter()
                    .zip(&g.g)
                    .fold(gap, |m, (a, b)| m.max((a - b).abs()));
                violations += check_rho_properties(&rho, eps).violations.len();
                violations += check_rho_gap(&rho, &g, dt, eps).violations.len();
            }
            let mut row = Row {
                m: r.m,
                n: r.n,
                error: Some(gap),
                order: None,
                wall_time: Some(start.elapsed().as_secs_f64()),
                storage: Some(q.len()),
                failure: None,
            };
            if violations > 0 {
                row.failure = Some(format!("{violations} coefficient violations"));
                row.error = None;
            }
            Ok(row)
        }
    }
}
