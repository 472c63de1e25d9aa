//! Gamma function, compensated summation and a few cancellation-free
//! elementary differences used by the coefficient closed forms.

use std::ops::AddAssign;

/// Γ(x) for x > 0.
///
/// Arguments in (0, 1) are shifted up with Γ(x) = Γ(1 + x) / x so the
/// Lanczos evaluation always runs away from the pole at zero.
pub fn gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1.0 {
        statrs::function::gamma::gamma(1.0 + x) / x
    } else {
        statrs::function::gamma::gamma(x)
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `c^p - (c - 1)^p` for c > 1 without subtracting two nearly equal powers.
pub fn pow_step_diff(c: f64, p: f64) -> f64 {
    debug_assert!(c > 1.0);
    -c.powf(p) * (p * (-1.0 / c).ln_1p()).exp_m1()
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_reference_values() {
        // Γ(1/2) = √π, Γ(3/2) = √π/2, Γ(1/3) from tables.
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14 * PI.sqrt());
        assert!((gamma(1.5) - PI.sqrt() / 2.0).abs() < 1e-14);
        let g13 = 2.678_938_534_707_747_6;
        assert!((gamma(1.0 / 3.0) - g13).abs() / g13 < 1e-14);
        assert!((gamma(1.0) - 1.0).abs() < 1e-15);
        assert!((gamma(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_relative_accuracy_on_unit_interval() {
        // Γ(x)Γ(1-x) = π / sin(πx) ties the two halves of (0, 1) together.
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let lhs = gamma(x) * gamma(1.0 - x);
            let rhs = PI / (PI * x).sin();
            assert!((lhs - rhs).abs() / rhs < 2e-14, "x = {x}");
        }
    }

    #[test]
    fn pow_step_diff_matches_naive_for_small_c() {
        for &(c, p) in &[(1.5f64, 0.5f64), (2.0, 1.25), (3.7, 0.3), (1.01, 1.9)] {
            let naive: f64 = c.powf(p) - (c - 1.0f64).powf(p);
            assert!((pow_step_diff(c, p) - naive).abs() < 1e-14 * naive.abs().max(1.0));
        }
    }

    #[test]
    fn pow_step_diff_large_c_tracks_derivative() {
        // For c → ∞, c^p − (c−1)^p ≈ p c^{p−1} (1 + (1−p)/(2c)).
        let c = 1e8f64;
        let p = 0.5;
        let approx = p * c.powf(p - 1.0) * (1.0 + (1.0 - p) / (2.0 * c));
        assert!((pow_step_diff(c, p) - approx).abs() / approx < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s += 1e16;
        for _ in 0..10 {
            s += 1.0;
        }
        s += -1e16;
        assert_eq!(s.value(), 10.0);
    }
}
