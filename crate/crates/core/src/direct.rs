//! Direct L2-1σ evaluation: coefficient rows `g_l^(k)`, the O(k) sum, and a
//! quadrature reference for the Caputo derivative itself.

use crate::error::{Error, Result};
use crate::order::{OrderFunction, SigmaSchedule};
use crate::quadrature::integrate;
use crate::special::{gamma, pow_step_diff, CompensatedSum};

/// Coefficients `g_0^(k) ..= g_k^(k)` for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRowG {
    pub k: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub g: Vec<f64>,
}

/// `(1-α) ∫_0^1 (c-s)^{-α} ds` for c > 1.
#[inline]
fn j0_scaled(c: f64, alpha: f64) -> f64 {
    pow_step_diff(c, 1.0 - alpha)
}

/// `(1-α) ∫_0^1 (s - 1/2)(c-s)^{-α} ds` for c > 1.
///
/// The closed form subtracts two terms of size `c^{1-α}` to leave a result of
/// size `c^{-1-α}`, so far from the singularity a series in `1/(c-1/2)` is
/// used instead.
fn m_scaled(c: f64, alpha: f64) -> f64 {
    let cm = c - 0.5;
    if cm < 2.0 {
        let p = 1.0 - alpha;
        let j0 = pow_step_diff(c, p);
        let j1 = pow_step_diff(c, 2.0 - alpha) * p / (2.0 - alpha);
        return cm * j0 - j1;
    }
    // (c'-x)^{-α} = c'^{-α} Σ_j (α)_j/j! (x/c')^j; odd j survive against x on [-1/2, 1/2].
    let inv = 1.0 / cm;
    let mut coef = alpha; // (α)_1 / 1!
    let mut j = 1u32;
    let mut xpow = inv * 0.25; // c'^{-1} (1/2)^2
    let mut sum = 0.0;
    loop {
        let term = coef * xpow / (j + 2) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || j > 200 {
            break;
        }
        coef *= (alpha + j as f64) * (alpha + j as f64 + 1.0) / ((j + 1) as f64 * (j + 2) as f64);
        xpow *= inv * inv * 0.25;
        j += 2;
    }
    (1.0 - alpha) * cm.powf(-alpha) * sum
}

/// The row of L2-1σ coefficients at step `k` of `schedule`.
pub fn g_row(k: usize, schedule: &SigmaSchedule) -> CoefficientRowG {
    let alpha = schedule.alpha_sigma[k];
    let sigma = schedule.sigma[k];
    let lead = sigma.powf(1.0 - alpha);
    if k == 0 {
        return CoefficientRowG {
            k,
            alpha,
            sigma,
            g: vec![lead],
        };
    }
    let mut g = Vec::with_capacity(k + 1);
    g.push(m_scaled(1.0 + sigma, alpha) + lead);
    // m_prev carries M(l + σ) from the previous iteration.
    let mut m_prev = m_scaled(1.0 + sigma, alpha);
    for l in 1..k {
        let c = l as f64 + sigma;
        let m_next = m_scaled(c + 1.0, alpha);
        g.push(m_next + j0_scaled(c, alpha) - m_prev);
        m_prev = m_next;
    }
    let c = k as f64 + sigma;
    g.push(j0_scaled(c, alpha) - m_prev);
    CoefficientRowG { k, alpha, sigma, g }
}

/// `s^(k) Σ_l g_l (u_{k-l+1} - u_{k-l})` for a trajectory `u_0 ..= u_{k+1}`.
pub fn evaluate_direct(history: &[f64], row: &CoefficientRowG, s_k: f64) -> Result<f64> {
    let k = row.k;
    if history.len() != k + 2 {
        return Err(Error::LengthMismatch {
            expected: k + 2,
            got: history.len(),
        });
    }
    let mut acc = CompensatedSum::new();
    for (l, g) in row.g.iter().enumerate() {
        acc += g * (history[k - l + 1] - history[k - l]);
    }
    Ok(s_k * acc.value())
}

/// Direct formula at every step of a scalar trajectory `u_0 ..= u_n`.
pub fn direct_sweep(trajectory: &[f64], schedule: &SigmaSchedule) -> Result<Vec<f64>> {
    let n = schedule.len();
    if trajectory.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: trajectory.len(),
        });
    }
    (0..n)
        .map(|k| {
            evaluate_direct(
                &trajectory[..k + 2],
                &g_row(k, schedule),
                schedule.s_factor[k],
            )
        })
        .collect()
}

/// Reference value of the Caputo derivative of order `α(t)` at `t`,
/// computed from `u'` by adaptive quadrature.
///
/// The integral is split at `t/2`; on the upper half the substitution
/// `τ = t − s^{1/(1−α)}` removes the endpoint singularity.
pub fn caputo_oracle<F: Fn(f64) -> f64>(
    u_prime: F,
    order: &OrderFunction,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be positive"
        )));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let alpha = order.eval(t);
    let p = 1.0 - alpha;
    let half = 0.5 * t;
    let lower = integrate(
        |tau| u_prime(tau) * (t - tau).powf(-alpha),
        0.0,
        half,
        0.4 * tol,
    )?;
    let upper = integrate(
        |s: f64| u_prime(t - s.powf(1.0 / p)) / p,
        0.0,
        half.powf(p),
        0.4 * tol,
    )?;
    Ok((lower + upper) / gamma(p))
}
