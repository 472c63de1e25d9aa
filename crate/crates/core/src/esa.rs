//! Exponential-sum approximation of the power kernel `s^{-α}` on
//! `[Δt/T, 1]` by a trapezoidal rule in log-space.

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Alpha values sampled when checking a ladder across `[α̲, ᾱ]`.
const ALPHA_SWEEP: usize = 10;
/// Hard limit on how far the certified ladder may widen the nominal one.
const MAX_EXTRA_NODES: i64 = 400;

/// How the index range `N̲+1 ..= N̄` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LadderRule {
    /// The closed-form step and index bounds, used as given.
    Nominal,
    /// The nominal ladder, widened at either end until the truncated tails
    /// are provably below the target accuracy on `[Δt/(2T), 1]`.
    #[default]
    Certified,
}

impl std::str::FromStr for LadderRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" => Ok(Self::Nominal),
            "certified" => Ok(Self::Certified),
            other => Err(Error::InvalidParameter(format!(
                "unknown ladder rule {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsaParams {
    pub epsilon: f64,
    pub h: f64,
    pub n_lo: i64,
    pub n_hi: i64,
    pub t_final: f64,
    pub dt: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub rule: LadderRule,
}

impl EsaParams {
    /// Step and index bounds exactly as the closed-form rule prescribes.
    pub fn compute(
        epsilon: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        dt: f64,
        t_final: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= (-1.0f64).exp()) {
            return Err(Error::InvalidParameter(format!(
                "ε = {epsilon} must lie in (0, 1/e]"
            )));
        }
        if !(alpha_lo > 0.0 && alpha_lo <= alpha_hi && alpha_hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "order bounds [{alpha_lo}, {alpha_hi}] must lie in (0, 1)"
            )));
        }
        if !(dt > 0.0 && dt <= t_final) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < Δt = {dt} <= T = {t_final}"
            )));
        }
        let log_inv_eps = -epsilon.ln();
        let h = 2.0 * std::f64::consts::PI
            / (3f64.ln() + alpha_hi * (1.0 / 1f64.cos()).ln() + log_inv_eps);
        let n_lo = ((epsilon.ln() + ln_gamma(1.0 + alpha_hi)) / (h * alpha_lo)).ceil() as i64;
        let n_hi =
            (((t_final / dt).ln() + log_inv_eps.ln() + alpha_lo.ln() + 0.5) / h).floor() as i64;
        if n_hi <= n_lo {
            return Err(Error::EmptyQuadrature { n_lo, n_hi });
        }
        Ok(Self {
            epsilon,
            h,
            n_lo,
            n_hi,
            t_final,
            dt,
            alpha_lo,
            alpha_hi,
            rule: LadderRule::Nominal,
        })
    }

    /// Starts from [`EsaParams::compute`] and widens the index range until
    /// the neglected terms are below `ε/2` at `s = Δt/(2T)` and below `ε/4`
    /// at `s = 1`, relative to `s^{-α}`, for every sampled α.
    pub fn certified(
        epsilon: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        dt: f64,
        t_final: f64,
    ) -> Result<Self> {
        let mut p = Self::compute(epsilon, alpha_lo, alpha_hi, dt, t_final)?;
        p.rule = LadderRule::Certified;
        let s_min = dt / (2.0 * t_final);
        let alphas = alpha_grid(alpha_lo, alpha_hi);
        let nominal_hi = p.n_hi;
        while alphas
            .iter()
            .any(|&a| upper_tail(p.h, p.n_hi, a, s_min) > 0.5 * epsilon)
        {
            p.n_hi += 1;
            if p.n_hi - nominal_hi > MAX_EXTRA_NODES {
                return Err(Error::InvalidParameter(
                    "upper ladder tail does not converge".into(),
                ));
            }
        }
        let nominal_lo = p.n_lo;
        while alphas
            .iter()
            .any(|&a| lower_tail(p.h, p.n_lo, a, 1.0) > 0.25 * epsilon)
        {
            p.n_lo -= 1;
            if nominal_lo - p.n_lo > MAX_EXTRA_NODES {
                return Err(Error::InvalidParameter(
                    "lower ladder tail does not converge".into(),
                ));
            }
        }
        Ok(p)
    }

    pub fn build(
        epsilon: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        dt: f64,
        t_final: f64,
        rule: LadderRule,
    ) -> Result<Self> {
        match rule {
            LadderRule::Nominal => Self::compute(epsilon, alpha_lo, alpha_hi, dt, t_final),
            LadderRule::Certified => Self::certified(epsilon, alpha_lo, alpha_hi, dt, t_final),
        }
    }

    pub fn count(&self) -> usize {
        (self.n_hi - self.n_lo) as usize
    }
}

fn alpha_grid(lo: f64, hi: f64) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    (0..ALPHA_SWEEP)
        .map(|j| lo + (hi - lo) * j as f64 / (ALPHA_SWEEP - 1) as f64)
        .collect()
}

/// Relative size `s^α Σ_{i>n} θ_i e^{-λ_i s}` of the terms beyond `n`.
fn upper_tail(h: f64, n: i64, alpha: f64, s: f64) -> f64 {
    let lg = ln_gamma(alpha);
    let mut total = 0.0;
    let mut i = n + 1;
    loop {
        let x = i as f64 * h;
        let term = (alpha * x - x.exp() * s - lg + alpha * s.ln()).exp() * h;
        total += term;
        // Terms decay super-exponentially once λ_i s exceeds α.
        if (x.exp() * s > alpha + 1.0 && term <= 1e-30 * total) || i > n + 10_000 {
            break;
        }
        i += 1;
    }
    total
}

/// Relative size of the terms at or below `n` (they are missing from the sum).
fn lower_tail(h: f64, n: i64, alpha: f64, s: f64) -> f64 {
    let lg = ln_gamma(alpha);
    let mut total = 0.0;
    let mut i = n;
    loop {
        let x = i as f64 * h;
        let term = (alpha * x - x.exp() * s - lg + alpha * s.ln()).exp() * h;
        total += term;
        if term <= 1e-30 * total || i < n - 100_000 {
            break;
        }
        i -= 1;
    }
    total
}

/// Exponents `λ_i = e^{ih}` and the α-dependent weight rule.
#[derive(Debug, Clone)]
pub struct EsaQuadrature {
    params: EsaParams,
    lambdas: Vec<f64>,
    /// `i·h` for each node, kept to form weights in the log domain.
    log_lambdas: Vec<f64>,
}

/// Result of sweeping the kernel approximation over `(s, α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyReport {
    pub max_rel_err: f64,
    pub argmax_s: f64,
    pub argmax_alpha: f64,
    pub epsilon: f64,
    pub passed: bool,
}

impl EsaQuadrature {
    pub fn new(params: EsaParams) -> Self {
        let log_lambdas: Vec<f64> = (params.n_lo + 1..=params.n_hi)
            .map(|i| i as f64 * params.h)
            .collect();
        let lambdas = log_lambdas.iter().map(|x| x.exp()).collect();
        Self {
            params,
            lambdas,
            log_lambdas,
        }
    }

    pub fn from_rule(
        epsilon: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        dt: f64,
        t_final: f64,
        rule: LadderRule,
    ) -> Result<Self> {
        Ok(Self::new(EsaParams::build(
            epsilon, alpha_lo, alpha_hi, dt, t_final, rule,
        )?))
    }

    pub fn params(&self) -> &EsaParams {
        &self.params
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `θ_i(α) = h e^{α i h} / Γ(α)`.
    pub fn weights(&self, alpha: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.weights_into(alpha, 1.0, &mut out);
        out
    }

    /// Writes `scale · θ_i(α)` into `out`.
    pub fn weights_into(&self, alpha: f64, scale: f64, out: &mut [f64]) {
        let lg = ln_gamma(alpha);
        let h = self.params.h;
        for (o, &x) in out.iter_mut().zip(&self.log_lambdas) {
            *o = scale * h * (alpha * x - lg).exp();
        }
    }

    /// `Σ θ_i(α) e^{-λ_i s}`, the approximation of `s^{-α}`.
    pub fn kernel_approx(&self, alpha: f64, s: f64) -> f64 {
        let lg = ln_gamma(alpha);
        let h = self.params.h;
        let mut sum = 0.0;
        for (&x, &lam) in self.log_lambdas.iter().zip(&self.lambdas) {
            sum += (alpha * x - lam * s - lg).exp();
        }
        h * sum
    }

    /// Sweeps `samples` log-spaced abscissae over `[Δt/T, 1]` and ten α values
    /// across the declared order bounds.
    pub fn certify(&self, samples: usize) -> Result<CertifyReport> {
        let p = &self.params;
        self.certify_on(
            p.dt / p.t_final,
            &alpha_grid(p.alpha_lo, p.alpha_hi),
            samples,
        )
    }

    pub fn certify_on(&self, s_min: f64, alphas: &[f64], samples: usize) -> Result<CertifyReport> {
        if samples < 2 {
            return Err(Error::InvalidParameter(
                "certification needs at least two samples".into(),
            ));
        }
        if !(s_min > 0.0 && s_min <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "s_min = {s_min} must lie in (0, 1]"
            )));
        }
        let log_min = s_min.ln();
        let mut report = CertifyReport {
            max_rel_err: 0.0,
            argmax_s: 1.0,
            argmax_alpha: alphas.first().copied().unwrap_or(self.params.alpha_lo),
            epsilon: self.params.epsilon,
            passed: true,
        };
        for &alpha in alphas {
            for j in 0..samples {
                let s = if j + 1 == samples {
                    1.0
                } else {
                    (log_min * (1.0 - j as f64 / (samples - 1) as f64)).exp()
                };
                let err = (self.kernel_approx(alpha, s) * s.powf(alpha) - 1.0).abs();
                if err > report.max_rel_err {
                    report.max_rel_err = err;
                    report.argmax_s = s;
                    report.argmax_alpha = alpha;
                }
            }
        }
        report.passed = report.max_rel_err <= self.params.epsilon;
        Ok(report)
    }
}
