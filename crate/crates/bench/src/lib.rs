//! Shared fixtures for the benchmarks.

use vofrac_core::{
    build_schedule, EsaQuadrature, LadderRule, OrderFunction, SigmaSchedule, TemporalMesh,
};

/// Schedule, smooth trajectory and exponential ladder for `n` steps on `[0, 1]`.
pub struct ScalarFixture {
    pub schedule: SigmaSchedule,
    pub trajectory: Vec<f64>,
    pub quad: EsaQuadrature,
}

impl ScalarFixture {
    pub fn new(n: usize, epsilon: f64) -> Self {
        let order = OrderFunction::sin4(1.0).expect("valid order");
        let mesh = TemporalMesh::new(1.0, n).expect("valid mesh");
        let schedule = build_schedule(&mesh, &order, 1e-14).expect("σ schedule");
        let trajectory = (0..=n)
            .map(|k| 1.0 + (k as f64 / n as f64).powi(3))
            .collect();
        let quad = EsaQuadrature::from_rule(
            epsilon,
            order.alpha_lo(),
            order.alpha_hi(),
            schedule.dt,
            1.0,
            LadderRule::Certified,
        )
        .expect("exponential ladder");
        Self {
            schedule,
            trajectory,
            quad,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let f = ScalarFixture::new(64, 1e-8);
        assert_eq!(f.trajectory.len(), 65);
        assert_eq!(f.schedule.len(), 64);
        assert!(!f.quad.is_empty());
    }
}
