//! Time marching for `∂_t^α u = Δu + f` with the direct or the fast
//! history treatment.
//!
//! Each step solves `(c A_h − σ Λ_h) u^{k+1} = A_h(c u^k − hist + f^{k+σ}) + (1−σ) Λ_h u^k`,
//! where `c` and `hist` come from either evaluator.

mod problems;

pub use problems::{
    example1_2d, example2_3d, manufactured, zero_source, ProblemSpec, ScalarProblem, Source,
    SpaceTimeFn, TimeFn,
};

use std::time::Instant;

use rayon::prelude::*;

use crate::direct::g_row;
use crate::error::{Error, Result};
use crate::esa::{EsaQuadrature, LadderRule};
use crate::fast::{default_epsilon, step_operator, HistoryBank, PanelIntegrals};
use crate::grid::{apply_a_h, apply_lambda_h, Field, SineSolver, SpatialMesh};
use crate::order::{build_schedule, OrderFunction, SigmaSchedule, TemporalMesh, DEFAULT_SIGMA_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Direct,
    #[default]
    Fast,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "fast" => Ok(Self::Fast),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::Fast => "fast",
        })
    }
}

/// Accuracy target of the exponential sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EpsilonPolicy {
    /// `min(Δt², half the coefficient-property bound)`.
    #[default]
    Default,
    DtSquared,
    Fixed(f64),
}

impl EpsilonPolicy {
    pub fn resolve(&self, order: &OrderFunction, dt: f64) -> f64 {
        match *self {
            Self::Default => default_epsilon(order.alpha_lo(), order.alpha_hi(), dt),
            Self::DtSquared => (dt * dt).min((-1.0f64).exp()),
            Self::Fixed(e) => e,
        }
    }
}

impl std::str::FromStr for EpsilonPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::Default),
            "dt2" | "dt_squared" => Ok(Self::DtSquared),
            other => {
                let v = other.strip_prefix("fixed:").unwrap_or(other);
                v.parse::<f64>()
                    .ok()
                    .filter(|e| *e > 0.0)
                    .map(Self::Fixed)
                    .ok_or_else(|| Error::InvalidParameter(format!("bad ε policy {other:?}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub epsilon: EpsilonPolicy,
    pub sigma_tol: f64,
    pub ladder: LadderRule,
    /// Refuse to start if the run would hold more scalars than this.
    pub max_storage: Option<usize>,
    /// Record `|u^k|²_{1,A_h}` at every level.
    pub track_energy: bool,
    /// Keep every level `u^0..=u^n` in the report.
    pub record_levels: bool,
}

impl SolverConfig {
    pub fn new(scheme: Scheme, n: usize) -> Self {
        Self {
            scheme,
            n,
            epsilon: EpsilonPolicy::Default,
            sigma_tol: DEFAULT_SIGMA_TOL,
            ladder: LadderRule::default(),
            max_storage: None,
            track_energy: false,
            record_levels: false,
        }
    }

    pub fn with_epsilon(mut self, epsilon: EpsilonPolicy) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_ladder(mut self, ladder: LadderRule) -> Self {
        self.ladder = ladder;
        self
    }

    pub fn with_max_storage(mut self, cap: usize) -> Self {
        self.max_storage = Some(cap);
        self
    }

    pub fn with_energy(mut self) -> Self {
        self.track_energy = true;
        self
    }

    pub fn with_levels(mut self) -> Self {
        self.record_levels = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scheme: Scheme,
    /// Final level `u^n` on the interior points.
    pub final_values: Vec<f64>,
    pub mesh: Option<SpatialMesh>,
    /// `‖u^n − u(·, T)‖_∞` when the exact solution is known.
    pub max_error: Option<f64>,
    /// Seconds spent stepping, setup excluded.
    pub wall_time: f64,
    /// Live numeric scalars at the peak: retained levels plus history arrays.
    pub peak_numeric_storage: usize,
    pub step_times: Vec<f64>,
    /// Exponentials in the ladder (zero for the direct scheme).
    pub n_exponentials: usize,
    pub epsilon: Option<f64>,
    /// `|u^k|²_{1,A_h}` for `k = 0..=n`, when requested.
    pub energy: Vec<f64>,
    /// Every level `u^0..=u^n`, when requested.
    pub levels: Vec<Vec<f64>>,
}

impl RunReport {
    pub fn final_field(&self) -> Option<Field> {
        let mesh = self.mesh.as_ref()?;
        Field::from_values(mesh, self.final_values.clone()).ok()
    }
}

/// The spatial part of a step: the two operators and the implicit solve.
pub trait Discretization: Sync {
    fn dof(&self) -> usize;
    fn apply_a(&self, u: &[f64]) -> Vec<f64>;
    fn apply_lambda(&self, u: &[f64]) -> Vec<f64>;
    /// Overwrites `rhs` with the solution of `(c A − σ Λ) u = rhs`.
    fn solve(&self, rhs: &mut [f64], c: f64, sigma: f64);
    /// `|u|²_{1,A_h}`, if the discretisation has one.
    fn energy(&self, _u: &[f64]) -> Option<f64> {
        None
    }
}

/// Compact fourth-order operators with the sine-transform solve.
pub struct CompactGrid {
    solver: SineSolver,
}

impl CompactGrid {
    pub fn new(mesh: &SpatialMesh) -> Self {
        Self {
            solver: SineSolver::new(mesh),
        }
    }

    fn field(&self, u: &[f64]) -> Field {
        Field {
            mesh: self.solver.mesh().clone(),
            values: u.to_vec(),
        }
    }
}

impl Discretization for CompactGrid {
    fn dof(&self) -> usize {
        self.solver.mesh().dof()
    }

    fn apply_a(&self, u: &[f64]) -> Vec<f64> {
        apply_a_h(&self.field(u)).values
    }

    fn apply_lambda(&self, u: &[f64]) -> Vec<f64> {
        apply_lambda_h(&self.field(u)).values
    }

    fn solve(&self, rhs: &mut [f64], c: f64, sigma: f64) {
        self.solver.solve_in_place(rhs, c, sigma);
    }

    fn energy(&self, u: &[f64]) -> Option<f64> {
        Some(self.field(u).h1_ah_seminorm().powi(2))
    }
}

/// `A = I`, `Λ = −κ I` on a single unknown.
pub struct ScalarRelaxation {
    pub kappa: f64,
}

impl Discretization for ScalarRelaxation {
    fn dof(&self) -> usize {
        1
    }

    fn apply_a(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }

    fn apply_lambda(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| -self.kappa * v).collect()
    }

    fn solve(&self, rhs: &mut [f64], c: f64, sigma: f64) {
        rhs.iter_mut().for_each(|v| *v /= c + sigma * self.kappa);
    }
}

/// Time at which the source is sampled in step `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SourceTime {
    /// `t_{k+σ_k}`, as the scheme requires.
    SigmaPoint,
    /// `t_k`; only used to show that the wrong choice costs accuracy.
    #[cfg_attr(not(test), allow(dead_code))]
    StepStart,
}

struct MarchOutput {
    final_values: Vec<f64>,
    step_times: Vec<f64>,
    storage: usize,
    n_exp: usize,
    epsilon: Option<f64>,
    energy: Vec<f64>,
    levels: Vec<Vec<f64>>,
}

fn storage_needed(scheme: Scheme, n: usize, dof: usize, n_exp: usize) -> usize {
    match scheme {
        Scheme::Direct => (n + 1) * dof,
        Scheme::Fast => n_exp * dof + 3 * dof,
    }
}

#[allow(clippy::too_many_arguments)]
fn march<D: Discretization>(
    disc: &D,
    schedule: &SigmaSchedule,
    order: &OrderFunction,
    u0: Vec<f64>,
    mut source: impl FnMut(f64, &mut [f64]),
    config: &SolverConfig,
    source_time: SourceTime,
) -> Result<MarchOutput> {
    let n = schedule.len();
    let dof = disc.dof();
    let dt = schedule.dt;
    let t_final = schedule.t_final;

    let (quad, epsilon) = match config.scheme {
        Scheme::Fast => {
            let eps = config.epsilon.resolve(order, dt);
            let q = EsaQuadrature::from_rule(
                eps,
                order.alpha_lo(),
                order.alpha_hi(),
                dt,
                t_final,
                config.ladder,
            )?;
            (Some(q), Some(eps))
        }
        Scheme::Direct => (None, None),
    };
    let n_exp = quad.as_ref().map_or(0, EsaQuadrature::len);
    let storage = storage_needed(config.scheme, n, dof, n_exp);
    if let Some(cap) = config.max_storage {
        if storage > cap {
            return Err(Error::StorageCap {
                required: storage,
                cap,
            });
        }
    }

    let mut u_prev = u0.clone();
    let mut u = u0;
    let mut diffs: Vec<Vec<f64>> = Vec::new();
    let mut bank = quad.as_ref().map(|q| HistoryBank::new(q.len(), dof));
    let mut panels = PanelIntegrals::default();
    let mut f = vec![0.0; dof];
    let mut hist = vec![0.0; dof];
    let mut step_times = Vec::with_capacity(n);
    let mut energy = Vec::new();
    if config.track_energy {
        energy.extend(disc.energy(&u));
    }
    let mut levels = Vec::new();
    if config.record_levels {
        levels.push(u.clone());
    }

    for k in 0..n {
        let start = Instant::now();
        let alpha = schedule.alpha_sigma[k];
        let sigma = schedule.sigma[k];
        let s = schedule.s_factor[k];
        let t_src = match source_time {
            SourceTime::SigmaPoint => schedule.t_sigma[k],
            SourceTime::StepStart => k as f64 * dt,
        };
        source(t_src, &mut f);

        let c = match (config.scheme, quad.as_ref(), bank.as_mut()) {
            (Scheme::Fast, Some(q), Some(bank)) if k >= 1 => {
                panels.fill(q, sigma, schedule.sigma[k - 1], dt, t_final);
                let op = step_operator(q, schedule, &panels, k);
                bank.begin_step(k, &panels, &op.scaled_weights(), &u_prev, &u, &mut hist)?;
                op.c_implicit
            }
            (Scheme::Fast, _, _) => {
                hist.iter_mut().for_each(|h| *h = 0.0);
                s * sigma.powf(1.0 - alpha)
            }
            (Scheme::Direct, _, _) => {
                let row = g_row(k, schedule);
                direct_history(&row.g, &diffs, s, &mut hist);
                s * row.g[0]
            }
        };

        // A_h(c u^k − hist + f) + (1−σ) Λ_h u^k
        let mut inner: Vec<f64> = u
            .iter()
            .zip(&hist)
            .zip(&f)
            .map(|((uk, h), fk)| c * uk - h + fk)
            .collect();
        inner = disc.apply_a(&inner);
        let lam = disc.apply_lambda(&u);
        for (r, l) in inner.iter_mut().zip(&lam) {
            *r += (1.0 - sigma) * l;
        }
        disc.solve(&mut inner, c, sigma);
        let u_next = inner;

        if let (Scheme::Fast, Some(bank)) = (config.scheme, bank.as_mut()) {
            if k >= 1 {
                bank.finish_step(&panels, &u, &u_next)?;
            }
        }
        if config.scheme == Scheme::Direct {
            diffs.push(u_next.iter().zip(&u).map(|(a, b)| a - b).collect());
        }
        u_prev = std::mem::replace(&mut u, u_next);
        step_times.push(start.elapsed().as_secs_f64());
        if config.track_energy {
            energy.extend(disc.energy(&u));
        }
        if config.record_levels {
            levels.push(u.clone());
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Step {
                step: k,
                source: Box::new(Error::InvalidParameter("non-finite solution".into())),
            });
        }
    }
    Ok(MarchOutput {
        final_values: u,
        step_times,
        storage,
        n_exp,
        epsilon,
        energy,
        levels,
    })
}

/// `out = s Σ_{l=1}^{k} g_l (u^{k−l+1} − u^{k−l})`, with `diffs[j] = u^{j+1} − u^j`.
fn direct_history(g: &[f64], diffs: &[Vec<f64>], s: f64, out: &mut [f64]) {
    let k = diffs.len();
    let body = |(d, o): (usize, &mut f64)| {
        let mut acc = 0.0;
        for l in 1..=k {
            acc += g[l] * diffs[k - l][d];
        }
        *o = s * acc;
    };
    if out.len() >= 256 && k >= 8 {
        out.par_iter_mut().enumerate().for_each(body);
    } else {
        out.iter_mut().enumerate().for_each(body);
    }
}

fn schedule_for(
    order: &OrderFunction,
    t_final: f64,
    config: &SolverConfig,
) -> Result<SigmaSchedule> {
    if config.n == 0 {
        return Err(Error::InvalidParameter(
            "step count must be positive".into(),
        ));
    }
    build_schedule(
        &TemporalMesh::new(t_final, config.n)?,
        order,
        config.sigma_tol,
    )
}

pub(crate) fn run_with(
    problem: &ProblemSpec,
    config: &SolverConfig,
    source_time: SourceTime,
) -> Result<RunReport> {
    problem.validate()?;
    let schedule = schedule_for(&problem.order, problem.t_final, config)?;
    let disc = CompactGrid::new(&problem.mesh);
    let mesh = problem.mesh.clone();
    let begin = Instant::now();
    let out = march(
        &disc,
        &schedule,
        &problem.order,
        problem.initial.values.clone(),
        |t, buf| problem.source.fill(&mesh, t, buf),
        config,
        source_time,
    )?;
    let wall_time = begin.elapsed().as_secs_f64();
    let max_error = problem.error_at(&out.final_values, problem.t_final);
    Ok(RunReport {
        scheme: config.scheme,
        final_values: out.final_values,
        mesh: Some(mesh),
        max_error,
        wall_time,
        peak_numeric_storage: out.storage,
        step_times: out.step_times,
        n_exponentials: out.n_exp,
        epsilon: out.epsilon,
        energy: out.energy,
        levels: out.levels,
    })
}

/// Runs the full trajectory and reports the final level and its error.
pub fn run(problem: &ProblemSpec, config: &SolverConfig) -> Result<RunReport> {
    run_with(problem, config, SourceTime::SigmaPoint)
}

/// Same time marching on the scalar relaxation equation.
pub fn run_scalar(problem: &ScalarProblem, config: &SolverConfig) -> Result<RunReport> {
    let schedule = schedule_for(&problem.order, problem.t_final, config)?;
    let disc = ScalarRelaxation {
        kappa: problem.kappa,
    };
    let begin = Instant::now();
    let out = march(
        &disc,
        &schedule,
        &problem.order,
        vec![problem.u0],
        |t, buf| buf[0] = (problem.source)(t),
        config,
        SourceTime::SigmaPoint,
    )?;
    let wall_time = begin.elapsed().as_secs_f64();
    let max_error = problem
        .exact
        .as_ref()
        .map(|e| (out.final_values[0] - e(problem.t_final)).abs());
    Ok(RunReport {
        scheme: config.scheme,
        final_values: out.final_values,
        mesh: None,
        max_error,
        wall_time,
        peak_numeric_storage: out.storage,
        step_times: out.step_times,
        n_exponentials: out.n_exp,
        epsilon: out.epsilon,
        energy: out.energy,
        levels: out.levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialMesh;

    #[test]
    fn zero_problem_stays_zero() {
        let mesh = SpatialMesh::cube(2, 0.0, 1.0, 6).unwrap();
        let p = zero_source(Field::zeros(&mesh), OrderFunction::sin4(1.0).unwrap(), 1.0);
        for scheme in [Scheme::Direct, Scheme::Fast] {
            let r = run(&p, &SolverConfig::new(scheme, 20)).unwrap();
            assert!(r.final_values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fast_and_direct_agree_with_tiny_epsilon() {
        let p = example1_2d(10).unwrap();
        let cfg = SolverConfig::new(Scheme::Fast, 50).with_epsilon(EpsilonPolicy::Fixed(1e-12));
        let f = run(&p, &cfg).unwrap();
        let d = run(&p, &SolverConfig::new(Scheme::Direct, 50)).unwrap();
        let gap = f
            .final_values
            .iter()
            .zip(&d.final_values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap <= 1e-8, "gap {gap}");
    }

    #[test]
    fn one_dimensional_convergence() {
        // With n = m² both error terms fall by 16 per doubling of m.
        let order = OrderFunction::sin4(1.0).unwrap();
        let mut errs = Vec::new();
        for m in [8usize, 16, 32] {
            let p = manufactured(1, m, order.clone()).unwrap();
            let r = run(&p, &SolverConfig::new(Scheme::Fast, m * m)).unwrap();
            errs.push(r.max_error.unwrap());
        }
        let last = (errs[1] / errs[2]).log2();
        assert!((last - 4.0).abs() < 0.3, "{errs:?}");
    }

    #[test]
    fn source_time_matters() {
        let order = OrderFunction::sin4(1.0).unwrap();
        let mut right = Vec::new();
        let mut wrong = Vec::new();
        for n in [20usize, 40, 80] {
            let p = manufactured(1, 64, order.clone()).unwrap();
            let cfg = SolverConfig::new(Scheme::Fast, n);
            right.push(
                run_with(&p, &cfg, SourceTime::SigmaPoint)
                    .unwrap()
                    .max_error
                    .unwrap(),
            );
            wrong.push(
                run_with(&p, &cfg, SourceTime::StepStart)
                    .unwrap()
                    .max_error
                    .unwrap(),
            );
        }
        let good = (right[1] / right[2]).log2();
        let bad = (wrong[1] / wrong[2]).log2();
        assert!(good > 1.8, "σ-point order {good}");
        assert!(bad < 1.3, "step-start order {bad}");
    }

    #[test]
    fn storage_tallies() {
        let p = example1_2d(8).unwrap();
        let dof = 49;
        let d = run(&p, &SolverConfig::new(Scheme::Direct, 16)).unwrap();
        assert_eq!(d.peak_numeric_storage, 17 * dof);
        let f = run(&p, &SolverConfig::new(Scheme::Fast, 16)).unwrap();
        assert_eq!(f.peak_numeric_storage, (f.n_exponentials + 3) * dof);
        let capped = run(
            &p,
            &SolverConfig::new(Scheme::Direct, 16).with_max_storage(100),
        );
        assert!(matches!(capped, Err(Error::StorageCap { .. })));
    }

    #[test]
    fn energy_does_not_grow_without_source() {
        let mesh = SpatialMesh::cube(2, 0.0, 1.0, 12).unwrap();
        let phi = mesh.sample(|x| x[0] * (1.0 - x[0]) * (3.0 * x[1]).sin());
        let p = zero_source(phi, OrderFunction::sin4(1.0).unwrap(), 1.0);
        let r = run(&p, &SolverConfig::new(Scheme::Fast, 40).with_energy()).unwrap();
        assert_eq!(r.energy.len(), 41);
        for e in &r.energy {
            assert!(*e <= r.energy[0] + 1e-10);
        }
    }

    #[test]
    fn scalar_problem_converges_in_time() {
        let p = ScalarProblem::cubic(OrderFunction::sin4(1.0).unwrap());
        let e1 = run_scalar(&p, &SolverConfig::new(Scheme::Direct, 64))
            .unwrap()
            .max_error
            .unwrap();
        let e2 = run_scalar(&p, &SolverConfig::new(Scheme::Direct, 128))
            .unwrap()
            .max_error
            .unwrap();
        assert!((e1 / e2).log2() > 1.8);
        let f2 = run_scalar(&p, &SolverConfig::new(Scheme::Fast, 128))
            .unwrap()
            .max_error
            .unwrap();
        assert!((f2 - e2).abs() < 1e-6);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            "dt2".parse::<EpsilonPolicy>().unwrap(),
            EpsilonPolicy::DtSquared
        );
        assert_eq!(
            "1e-10".parse::<EpsilonPolicy>().unwrap(),
            EpsilonPolicy::Fixed(1e-10)
        );
        assert_eq!(
            "fixed:1e-6".parse::<EpsilonPolicy>().unwrap(),
            EpsilonPolicy::Fixed(1e-6)
        );
        assert!("-3".parse::<EpsilonPolicy>().is_err());
        assert_eq!("direct".parse::<Scheme>().unwrap(), Scheme::Direct);
    }
}
