//! Variable order `α(t)`, the uniform time mesh and the superconvergence
//! schedule `σ_k`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::special::gamma;

const BOUND_SAMPLES: usize = 1000;
const NEWTON_START: f64 = 0.75;
const NEWTON_MAX_ITER: usize = 50;
const BISECT_MARGIN: f64 = 1e-12;

/// Default tolerance on `|F(σ)|` for the σ root solve.
pub const DEFAULT_SIGMA_TOL: f64 = 1e-14;

type OrderFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A variable order `α(t)` with declared bounds `[alpha_lo, alpha_hi] ⊂ (0, 1)`.
///
/// The bounds are checked against a dense sample of `[0, horizon]` when the
/// function is built; they feed the exponential-sum parameters, so a bound
/// that is too tight would silently void the kernel error estimate.
#[derive(Clone)]
pub struct OrderFunction {
    f: OrderFn,
    alpha_lo: f64,
    alpha_hi: f64,
    label: String,
}

impl fmt::Debug for OrderFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrderFunction")
            .field("label", &self.label)
            .field("alpha_lo", &self.alpha_lo)
            .field("alpha_hi", &self.alpha_hi)
            .finish()
    }
}

impl OrderFunction {
    pub fn new<F>(f: F, alpha_lo: f64, alpha_hi: f64, horizon: f64, label: &str) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(alpha_lo > 0.0 && alpha_lo <= alpha_hi && alpha_hi < 1.0) {
            return Err(Error::InvalidOrder(format!(
                "bounds [{alpha_lo}, {alpha_hi}] are not inside (0, 1)"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidOrder(format!(
                "horizon {horizon} must be positive"
            )));
        }
        for i in 0..=BOUND_SAMPLES {
            let t = horizon * i as f64 / BOUND_SAMPLES as f64;
            let a = f(t);
            if !(a >= alpha_lo && a <= alpha_hi) {
                return Err(Error::InvalidOrder(format!(
                    "{label}: α({t}) = {a} outside declared bounds [{alpha_lo}, {alpha_hi}]"
                )));
            }
        }
        Ok(Self {
            f: Arc::new(f),
            alpha_lo,
            alpha_hi,
            label: label.to_string(),
        })
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        Self::new(move |_| alpha, alpha, alpha, 1.0, &format!("const:{alpha}"))
    }

    /// `α(t) = (2 + sin t) / 4`, with the bounds taken as the exact range of
    /// the function on `[0, horizon]`.
    pub fn sin4(horizon: f64) -> Result<Self> {
        let (lo, hi) = sin_range(horizon);
        Self::new(
            |t: f64| (2.0 + t.sin()) / 4.0,
            (2.0 + lo) / 4.0,
            (2.0 + hi) / 4.0,
            horizon,
            "sin4",
        )
    }

    /// Piecewise-linear interpolation of `(t, α)` pairs, held constant outside
    /// the tabulated range.
    pub fn tabulated(points: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidOrder("empty table".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidOrder(
                "table times must be strictly increasing".into(),
            ));
        }
        let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let table = points;
        Self::new(move |t| interpolate(&table, t), lo, hi, horizon, "table")
    }

    /// Parses `const:<a>`, `sin4` or `table:t0:a0,t1:a1,...`.
    pub fn parse(spec: &str, horizon: f64) -> Result<Self> {
        let spec = spec.trim();
        if spec == "sin4" {
            return Self::sin4(horizon);
        }
        if let Some(v) = spec.strip_prefix("const:") {
            let a: f64 = v
                .parse()
                .map_err(|_| Error::InvalidOrder(format!("bad constant order {v:?}")))?;
            return Self::new(move |_| a, a, a, horizon, spec);
        }
        if let Some(body) = spec.strip_prefix("table:") {
            let mut points = Vec::new();
            for pair in body.split(',') {
                let (t, a) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidOrder(format!("bad table entry {pair:?}")))?;
                let t: f64 = t
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidOrder(format!("bad time {t:?}")))?;
                let a: f64 = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidOrder(format!("bad order {a:?}")))?;
                points.push((t, a));
            }
            return Self::tabulated(points, horizon);
        }
        Err(Error::InvalidOrder(format!(
            "unknown order function {spec:?}"
        )))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn alpha_lo(&self) -> f64 {
        self.alpha_lo
    }

    pub fn alpha_hi(&self) -> f64 {
        self.alpha_hi
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_constant(&self) -> bool {
        self.alpha_lo == self.alpha_hi
    }
}

fn sin_range(horizon: f64) -> (f64, f64) {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut lo = 0.0f64.min(horizon.sin());
    let mut hi = 0.0f64.max(horizon.sin());
    let mut peak = FRAC_PI_2;
    while peak <= horizon {
        let v = peak.sin();
        lo = lo.min(v);
        hi = hi.max(v);
        peak += PI;
    }
    (lo, hi)
}

fn interpolate(table: &[(f64, f64)], t: f64) -> f64 {
    if t <= table[0].0 {
        return table[0].1;
    }
    for w in table.windows(2) {
        let (t0, a0) = w[0];
        let (t1, a1) = w[1];
        if t <= t1 {
            return a0 + (a1 - a0) * (t - t0) / (t1 - t0);
        }
    }
    table[table.len() - 1].1
}

/// Uniform mesh `t_k = k Δt`, `k = 0..=n`, on `[0, T]` with `T ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalMesh {
    t_final: f64,
    n: usize,
    dt: f64,
}

impl TemporalMesh {
    pub fn new(t_final: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("step count must be positive".into()));
        }
        if !(t_final >= 1.0 && t_final.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "final time {t_final} must be >= 1"
            )));
        }
        Ok(Self {
            t_final,
            n,
            dt: t_final / n as f64,
        })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.n {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }
}

/// Per-step data at the superconvergence points `t_{k+σ_k}`.
#[derive(Debug, Clone)]
pub struct SigmaSchedule {
    pub sigma: Vec<f64>,
    pub t_sigma: Vec<f64>,
    pub alpha_sigma: Vec<f64>,
    /// `Δt^{-α} / Γ(2 - α)` at `α = α_{k+σ_k}`.
    pub s_factor: Vec<f64>,
    pub dt: f64,
    pub t_final: f64,
}

impl SigmaSchedule {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// Root of `F(σ) = σ − (1 − α(t_k + σΔt)/2)` in `(1/2, 1)`.
///
/// Newton from 0.75 with a central-difference slope; falls back to
/// bisection if an iterate leaves the bracket or Newton stalls.
pub fn solve_sigma(order: &OrderFunction, t_k: f64, dt: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "σ tolerance {tol} must be positive"
        )));
    }
    let residual = |s: f64| -> Result<f64> {
        let t = t_k + s * dt;
        let a = order.eval(t);
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::OrderOutOfRange { t, alpha: a });
        }
        Ok(s - (1.0 - 0.5 * a))
    };

    let mut s = NEWTON_START;
    for _ in 0..NEWTON_MAX_ITER {
        let f = residual(s)?;
        if f.abs() <= tol {
            return Ok(s);
        }
        let h = 1e-6;
        let slope = 1.0
            + 0.5 * dt * (order.eval(t_k + (s + h) * dt) - order.eval(t_k + (s - h) * dt))
                / (2.0 * h * dt);
        if !slope.is_finite() || slope == 0.0 {
            break;
        }
        let next = s - f / slope;
        if !(next > 0.5 && next < 1.0) {
            break;
        }
        s = next;
    }

    let mut lo = 0.5 + BISECT_MARGIN;
    let mut hi = 1.0 - BISECT_MARGIN;
    let mut f_lo = residual(lo)?;
    let f_hi = residual(hi)?;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::SigmaSolve {
            t_k,
            reason: format!("no sign change on the bracket (F = {f_lo}, {f_hi})"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = residual(mid)?;
        if f.abs() <= tol {
            return Ok(mid);
        }
        if (f < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    Err(Error::SigmaSolve {
        t_k,
        reason: format!("bracket [{lo}, {hi}] collapsed without reaching |F| <= {tol}"),
    })
}

pub fn build_schedule(
    mesh: &TemporalMesh,
    order: &OrderFunction,
    tol: f64,
) -> Result<SigmaSchedule> {
    let n = mesh.steps();
    let dt = mesh.dt();
    let mut sched = SigmaSchedule {
        sigma: Vec::with_capacity(n),
        t_sigma: Vec::with_capacity(n),
        alpha_sigma: Vec::with_capacity(n),
        s_factor: Vec::with_capacity(n),
        dt,
        t_final: mesh.t_final(),
    };
    for k in 0..n {
        let t_k = mesh.node(k);
        let sigma = solve_sigma(order, t_k, dt, tol).map_err(|e| Error::ScheduleStep {
            step: k,
            source: Box::new(e),
        })?;
        let t_s = t_k + sigma * dt;
        let alpha = order.eval(t_s);
        sched.sigma.push(sigma);
        sched.t_sigma.push(t_s);
        sched.alpha_sigma.push(alpha);
        sched.s_factor.push(dt.powf(-alpha) / gamma(2.0 - alpha));
    }
    Ok(sched)
}
