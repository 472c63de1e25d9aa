//! FL2-1σ: the L2-1σ history sum compressed onto an exponential ladder and
//! advanced by a two-term recursion per exponential.

use rayon::prelude::*;

use crate::direct::CoefficientRowG;
use crate::error::{Error, Result};
use crate::esa::EsaQuadrature;
use crate::order::SigmaSchedule;
use crate::special::{gamma, CompensatedSum};

/// Below this many degrees of freedom the bank is updated on one thread.
const PAR_MIN_DOF: usize = 512;

/// Per-step panel weights for every exponential of the ladder.
#[derive(Debug, Clone, Default)]
pub struct PanelIntegrals {
    /// `∫_0^1 (3/2 − τ) e^{−λ(σ_k + 1 − τ)Δt/T} dτ`
    pub a: Vec<f64>,
    /// `∫_0^1 (τ − 1/2) e^{−λ(σ_k + 1 − τ)Δt/T} dτ`
    pub b: Vec<f64>,
    /// `e^{−λ(1 + σ_k − σ_{k−1})Δt/T}`
    pub decay: Vec<f64>,
}

/// Brackets `(E1/2 + E2, E1/2 − E2)` with `E1 = ∫_0^1 e^{−zv}dv` and
/// `E2 = ∫_0^1 v e^{−zv}dv`.
fn panel_brackets(z: f64) -> (f64, f64) {
    if z < 1.0 {
        // Power series; the B bracket starts at z/12 and the closed form
        // would lose every digit as z → 0.
        let mut a = 0.0;
        let mut b = 0.0;
        let mut zp = 1.0; // (−z)^j / j!
        let mut j = 0u32;
        loop {
            let jf = j as f64;
            let p = zp / (2.0 * (jf + 1.0));
            let q = zp / (jf + 2.0);
            a += p + q;
            b += p - q;
            if zp.abs() < 1e-18 {
                break;
            }
            j += 1;
            zp *= -z / j as f64;
        }
        (a, b)
    } else {
        let em = (-z).exp();
        let e1 = -(-z).exp_m1() / z;
        let e2 = (1.0 - (1.0 + z) * em) / (z * z);
        (0.5 * e1 + e2, 0.5 * e1 - e2)
    }
}

impl PanelIntegrals {
    pub fn compute(
        quad: &EsaQuadrature,
        sigma_k: f64,
        sigma_km1: f64,
        dt: f64,
        t_final: f64,
    ) -> Self {
        let mut p = Self::default();
        p.fill(quad, sigma_k, sigma_km1, dt, t_final);
        p
    }

    /// Recomputes in place, reusing the allocations.
    pub fn fill(
        &mut self,
        quad: &EsaQuadrature,
        sigma_k: f64,
        sigma_km1: f64,
        dt: f64,
        t_final: f64,
    ) {
        let n = quad.len();
        self.a.resize(n, 0.0);
        self.b.resize(n, 0.0);
        self.decay.resize(n, 0.0);
        let shift = 1.0 + sigma_k - sigma_km1;
        for (i, &lam) in quad.lambdas().iter().enumerate() {
            let z = lam * dt / t_final;
            let w = (-z * sigma_k).exp();
            let (ab, bb) = panel_brackets(z);
            self.a[i] = w * ab;
            self.b[i] = w * bb;
            self.decay[i] = (-z * shift).exp();
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// History values `H_i^(k)`, one per exponential per degree of freedom.
///
/// Stored degree-of-freedom major so that one point's ladder is contiguous.
/// A step is either a single [`HistoryBank::advance`] or the split pair
/// [`HistoryBank::begin_step`] / [`HistoryBank::finish_step`] used when
/// `u^{k+1}` is the unknown of an implicit solve.
#[derive(Debug, Clone)]
pub struct HistoryBank {
    n_exp: usize,
    dof: usize,
    h: Vec<f64>,
    step: usize,
    pending: bool,
}

impl HistoryBank {
    pub fn new(n_exp: usize, dof: usize) -> Self {
        Self {
            n_exp,
            dof,
            h: vec![0.0; n_exp * dof],
            step: 0,
            pending: false,
        }
    }

    /// Index of the last completed update; 0 before the first advance.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn n_exp(&self) -> usize {
        self.n_exp
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Live scalars held by the bank.
    pub fn storage(&self) -> usize {
        self.h.len()
    }

    pub fn values(&self, dof: usize) -> &[f64] {
        &self.h[dof * self.n_exp..(dof + 1) * self.n_exp]
    }

    fn check(&self, k: usize, panels: &PanelIntegrals, fields: &[&[f64]]) -> Result<()> {
        if self.pending || k == 0 || self.step + 1 != k {
            return Err(Error::StepOrder {
                bank_step: self.step,
                requested: k,
            });
        }
        if panels.len() != self.n_exp {
            return Err(Error::LengthMismatch {
                expected: self.n_exp,
                got: panels.len(),
            });
        }
        for f in fields {
            if f.len() != self.dof {
                return Err(Error::LengthMismatch {
                    expected: self.dof,
                    got: f.len(),
                });
            }
        }
        Ok(())
    }

    /// `H ← decay·H + A(u^k − u^{k−1}) + B(u^{k+1} − u^k)`.
    pub fn advance(
        &mut self,
        k: usize,
        panels: &PanelIntegrals,
        u_km1: &[f64],
        u_k: &[f64],
        u_kp1: &[f64],
    ) -> Result<()> {
        self.check(k, panels, &[u_km1, u_k, u_kp1])?;
        let n = self.n_exp;
        let body = |(d, row): (usize, &mut [f64])| {
            let d_old = u_k[d] - u_km1[d];
            let d_new = u_kp1[d] - u_k[d];
            for i in 0..n {
                row[i] = panels.decay[i] * row[i] + panels.a[i] * d_old + panels.b[i] * d_new;
            }
        };
        if self.dof >= PAR_MIN_DOF {
            self.h.par_chunks_mut(n).enumerate().for_each(body);
        } else {
            self.h.chunks_mut(n).enumerate().for_each(body);
        }
        self.step = k;
        Ok(())
    }

    /// First half of step `k`: applies the decay and the `A` term, and writes
    /// `Σ_i weights_i · (decay_i H_i + A_i (u^k − u^{k−1}))` per point into
    /// `out`. The `B` term waits for [`HistoryBank::finish_step`].
    pub fn begin_step(
        &mut self,
        k: usize,
        panels: &PanelIntegrals,
        weights: &[f64],
        u_km1: &[f64],
        u_k: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.check(k, panels, &[u_km1, u_k, out])?;
        if weights.len() != self.n_exp {
            return Err(Error::LengthMismatch {
                expected: self.n_exp,
                got: weights.len(),
            });
        }
        let n = self.n_exp;
        let body = |((d, row), o): ((usize, &mut [f64]), &mut f64)| {
            let d_old = u_k[d] - u_km1[d];
            let mut acc = 0.0;
            for i in 0..n {
                let v = panels.decay[i] * row[i] + panels.a[i] * d_old;
                row[i] = v;
                acc += weights[i] * v;
            }
            *o = acc;
        };
        if self.dof >= PAR_MIN_DOF {
            self.h
                .par_chunks_mut(n)
                .enumerate()
                .zip(out.par_iter_mut())
                .for_each(body);
        } else {
            self.h
                .chunks_mut(n)
                .enumerate()
                .zip(out.iter_mut())
                .for_each(body);
        }
        self.pending = true;
        Ok(())
    }

    /// Second half of step `k`, once `u^{k+1}` is known.
    pub fn finish_step(
        &mut self,
        panels: &PanelIntegrals,
        u_k: &[f64],
        u_kp1: &[f64],
    ) -> Result<()> {
        if !self.pending {
            return Err(Error::StepOrder {
                bank_step: self.step,
                requested: self.step + 1,
            });
        }
        if u_k.len() != self.dof || u_kp1.len() != self.dof {
            return Err(Error::LengthMismatch {
                expected: self.dof,
                got: u_k.len().min(u_kp1.len()),
            });
        }
        let n = self.n_exp;
        let body = |(d, row): (usize, &mut [f64])| {
            let d_new = u_kp1[d] - u_k[d];
            for i in 0..n {
                row[i] += panels.b[i] * d_new;
            }
        };
        if self.dof >= PAR_MIN_DOF {
            self.h.par_chunks_mut(n).enumerate().for_each(body);
        } else {
            self.h.chunks_mut(n).enumerate().for_each(body);
        }
        self.pending = false;
        self.step += 1;
        Ok(())
    }

    /// `Σ_i weights_i H_i` per degree of freedom.
    pub fn weighted_sum(&self, weights: &[f64], out: &mut [f64]) {
        let n = self.n_exp;
        for (o, row) in out.iter_mut().zip(self.h.chunks(n)) {
            *o = row.iter().zip(weights).map(|(h, w)| h * w).sum();
        }
    }
}

/// Coefficients that split the fast formula at step `k` into an implicit
/// part on `u^{k+1} − u^k` and a known history part:
///
/// `FL = c_implicit (u^{k+1} − u^k) + weight_on_history Σ θ_i (decay_i H_i^{(k−1)} + A_i (u^k − u^{k−1}))`.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub c_implicit: f64,
    /// `T^{−α} / Γ(1−α)`.
    pub weight_on_history: f64,
    /// `θ_i(α_{k+σ_k})`.
    pub theta: Vec<f64>,
}

impl StepOperator {
    /// `weight_on_history · θ_i`, ready for [`HistoryBank::begin_step`].
    pub fn scaled_weights(&self) -> Vec<f64> {
        self.theta
            .iter()
            .map(|t| t * self.weight_on_history)
            .collect()
    }
}

pub fn step_operator(
    quad: &EsaQuadrature,
    schedule: &SigmaSchedule,
    panels: &PanelIntegrals,
    k: usize,
) -> StepOperator {
    let alpha = schedule.alpha_sigma[k];
    let sigma = schedule.sigma[k];
    let theta = quad.weights(alpha);
    let weight_on_history = schedule.t_final.powf(-alpha) / gamma(1.0 - alpha);
    let mut tb = CompensatedSum::new();
    for (t, b) in theta.iter().zip(&panels.b) {
        tb += t * b;
    }
    let c_implicit =
        schedule.s_factor[k] * sigma.powf(1.0 - alpha) + weight_on_history * tb.value();
    StepOperator {
        c_implicit,
        weight_on_history,
        theta,
    }
}

/// Fast formula at step `k` for a scalar bank already advanced through `k`.
/// At `k = 0` it is the direct formula.
pub fn evaluate_fast(
    bank: &HistoryBank,
    quad: &EsaQuadrature,
    schedule: &SigmaSchedule,
    k: usize,
    u_k: f64,
    u_kp1: f64,
) -> Result<f64> {
    if bank.dof() != 1 {
        return Err(Error::LengthMismatch {
            expected: 1,
            got: bank.dof(),
        });
    }
    if bank.step() != k || bank.pending {
        return Err(Error::StepOrder {
            bank_step: bank.step(),
            requested: k,
        });
    }
    let alpha = schedule.alpha_sigma[k];
    let local = schedule.s_factor[k] * schedule.sigma[k].powf(1.0 - alpha) * (u_kp1 - u_k);
    if k == 0 {
        return Ok(local);
    }
    let theta = quad.weights(alpha);
    let mut acc = CompensatedSum::new();
    for (t, h) in theta.iter().zip(bank.values(0)) {
        acc += t * h;
    }
    Ok(schedule.t_final.powf(-alpha) / gamma(1.0 - alpha) * acc.value() + local)
}

/// Fast formula at every step of a scalar trajectory `u_0 ..= u_n`.
pub fn fast_sweep(
    trajectory: &[f64],
    schedule: &SigmaSchedule,
    quad: &EsaQuadrature,
) -> Result<Vec<f64>> {
    let n = schedule.len();
    if trajectory.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: trajectory.len(),
        });
    }
    let mut bank = HistoryBank::new(quad.len(), 1);
    let mut panels = PanelIntegrals::default();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if k >= 1 {
            panels.fill(
                quad,
                schedule.sigma[k],
                schedule.sigma[k - 1],
                schedule.dt,
                schedule.t_final,
            );
            bank.advance(
                k,
                &panels,
                &trajectory[k - 1..k],
                &trajectory[k..k + 1],
                &trajectory[k + 1..k + 2],
            )?;
        }
        out.push(evaluate_fast(
            &bank,
            quad,
            schedule,
            k,
            trajectory[k],
            trajectory[k + 1],
        )?);
    }
    Ok(out)
}

/// Coefficients `ρ_l^(k)` of the fast formula written as a weighted sum of
/// differences, the counterpart of [`CoefficientRowG`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRowRho {
    pub k: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub rho: Vec<f64>,
}

/// Expands the recursion into explicit coefficients. Costs O(k · ladder);
/// meant for diagnostics only.
pub fn rho_row(k: usize, quad: &EsaQuadrature, schedule: &SigmaSchedule) -> CoefficientRowRho {
    let alpha = schedule.alpha_sigma[k];
    let sigma = schedule.sigma[k];
    let lead = sigma.powf(1.0 - alpha);
    if k == 0 {
        return CoefficientRowRho {
            k,
            alpha,
            sigma,
            rho: vec![lead],
        };
    }
    let (dt, t_final) = (schedule.dt, schedule.t_final);
    let prev = schedule.sigma[k - 1];
    let panels = PanelIntegrals::compute(quad, sigma, prev, dt, t_final);
    let theta = quad.weights(alpha);
    let scale = (dt / t_final).powf(alpha) * (1.0 - alpha);
    let z: Vec<f64> = quad.lambdas().iter().map(|l| l * dt / t_final).collect();

    let sum = |f: &dyn Fn(usize) -> f64| {
        let mut acc = CompensatedSum::new();
        for i in 0..theta.len() {
            acc += theta[i] * f(i);
        }
        acc.value()
    };
    let mut rho = Vec::with_capacity(k + 1);
    rho.push(lead + scale * sum(&|i| panels.b[i]));
    for l in 1..k {
        let lf = l as f64;
        rho.push(
            scale
                * sum(&|i| {
                    (-z[i] * (lf - 1.0)).exp() * panels.a[i] + (-z[i] * lf).exp() * panels.b[i]
                }),
        );
    }
    let kf = k as f64;
    rho.push(scale * sum(&|i| (-z[i] * (kf - 1.0)).exp() * panels.a[i]));
    CoefficientRowRho {
        k,
        alpha,
        sigma,
        rho,
    }
}

/// Largest ε for which the ρ coefficients keep their monotonicity and
/// positivity guarantees on a mesh of step `dt`.
pub fn coefficient_epsilon_bound(alpha_lo: f64, alpha_hi: f64, dt: f64) -> f64 {
    2.0 * (1.0 - alpha_hi) * (2.0 - 0.5 * alpha_hi).powf(1.0 - alpha_hi) * dt.powf(alpha_hi)
        / ((6.0 - 3.5 * alpha_lo) * (1.0 - 0.5 * alpha_lo))
}

/// `min(Δt², bound/2)`, capped at `1/e`.
pub fn default_epsilon(alpha_lo: f64, alpha_hi: f64, dt: f64) -> f64 {
    (dt * dt)
        .min(0.5 * coefficient_epsilon_bound(alpha_lo, alpha_hi, dt))
        .min((-1.0f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoViolation {
    /// `ρ_l ≤ 0`.
    NonPositive { l: usize },
    /// `ρ_l ≥ ρ_{l−1}`.
    NotDecreasing { l: usize },
    /// `ρ_k` at or below `(1−ε)(1−α) / (2(k+σ)^α)`.
    BelowFloor,
    /// `(2σ−1)ρ_0 − σρ_1 < 0`.
    LeadingPair,
    /// `|ρ_l − g_l|` above its allowance.
    Gap { l: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RhoReport {
    pub k: usize,
    pub violations: Vec<RhoViolation>,
}

impl RhoReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Monotonicity, positivity floor and leading-pair inequality of one row.
pub fn check_rho_properties(row: &CoefficientRowRho, epsilon: f64) -> RhoReport {
    let mut report = RhoReport {
        k: row.k,
        violations: Vec::new(),
    };
    let rho = &row.rho;
    for (l, r) in rho.iter().enumerate() {
        if !(*r > 0.0) {
            report.violations.push(RhoViolation::NonPositive { l });
        }
    }
    if row.k == 0 {
        return report;
    }
    for l in 1..rho.len() {
        if !(rho[l] < rho[l - 1]) {
            report.violations.push(RhoViolation::NotDecreasing { l });
        }
    }
    let k = row.k as f64;
    let floor = (1.0 - epsilon) * (1.0 - row.alpha) / (2.0 * (k + row.sigma).powf(row.alpha));
    if !(rho[row.k] > floor) {
        report.violations.push(RhoViolation::BelowFloor);
    }
    if (2.0 * row.sigma - 1.0) * rho[0] - row.sigma * rho[1] < 0.0 {
        report.violations.push(RhoViolation::LeadingPair);
    }
    report
}

/// `|ρ_l − g_l| ≤ (1−α)Δt^{−α} ε · {1/4, 5/4, 1}` for the first, interior
/// and last entries.
pub fn check_rho_gap(
    rho: &CoefficientRowRho,
    g: &CoefficientRowG,
    dt: f64,
    epsilon: f64,
) -> RhoReport {
    let mut report = RhoReport {
        k: rho.k,
        violations: Vec::new(),
    };
    if rho.rho.len() != g.g.len() {
        report.violations.push(RhoViolation::Gap { l: 0 });
        return report;
    }
    let k = rho.k;
    let unit = (1.0 - rho.alpha) * dt.powf(-rho.alpha) * epsilon;
    for (l, (r, gl)) in rho.rho.iter().zip(&g.g).enumerate() {
        let factor = if k == 0 {
            0.0
        } else if l == 0 {
            0.25
        } else if l == k {
            1.0
        } else {
            1.25
        };
        // A few ulps of slack: at k = 0 the two are equal by construction.
        let slack = 4.0 * f64::EPSILON * gl.abs();
        if (r - gl).abs() > factor * unit + slack {
            report.violations.push(RhoViolation::Gap { l });
        }
    }
    report
}
