//! Problem definitions, including the manufactured sine-product solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, SpatialMesh};
use crate::order::OrderFunction;
use crate::special::gamma;

pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Right-hand side `f(x, t)`.
#[derive(Clone)]
pub enum Source {
    Zero,
    /// `g(t) · profile(x)`, evaluated with one call to `g` per step.
    Separable {
        time: TimeFn,
        profile: Field,
    },
    General(SpaceTimeFn),
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "Source::Zero"),
            Self::Separable { .. } => write!(f, "Source::Separable"),
            Self::General(_) => write!(f, "Source::General"),
        }
    }
}

impl Source {
    /// Writes `f(·, t)` on the interior points into `out`.
    pub fn fill(&self, mesh: &SpatialMesh, t: f64, out: &mut [f64]) {
        match self {
            Self::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            Self::Separable { time, profile } => {
                let g = time(t);
                for (o, p) in out.iter_mut().zip(&profile.values) {
                    *o = g * p;
                }
            }
            Self::General(f) => {
                let d = mesh.dims();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = f(&mesh.point(i)[..d], t);
                }
            }
        }
    }
}

/// `∂_t^α u = Δu + f` on a box, zero on the boundary, `u(·,0) = φ`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub label: String,
    pub mesh: SpatialMesh,
    pub t_final: f64,
    pub order: OrderFunction,
    pub source: Source,
    pub initial: Field,
    pub exact: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("mesh", &self.mesh)
            .field("t_final", &self.t_final)
            .field("order", &self.order)
            .field("source", &self.source)
            .finish()
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.initial.mesh != self.mesh {
            return Err(Error::InvalidMesh(
                "initial field lives on a different mesh".into(),
            ));
        }
        if let Source::Separable { profile, .. } = &self.source {
            if profile.mesh != self.mesh {
                return Err(Error::InvalidMesh(
                    "source profile lives on a different mesh".into(),
                ));
            }
        }
        if !(self.t_final >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "final time {} must be >= 1",
                self.t_final
            )));
        }
        Ok(())
    }

    /// Max-norm distance of `values` from the exact solution at time `t`.
    pub fn error_at(&self, values: &[f64], t: f64) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        let d = self.mesh.dims();
        Some(
            values
                .iter()
                .enumerate()
                .map(|(i, v)| (v - exact(&self.mesh.point(i)[..d], t)).abs())
                .fold(0.0, f64::max),
        )
    }
}

fn sine_product(x: &[f64]) -> f64 {
    x.iter().map(|v| v.sin()).product()
}

/// `u = (t³ + 3t² + 1) Π sin x_r` on `(0, π)^d`, `T = 1`, with the source
/// that makes it exact for the given order.
pub fn manufactured(d: usize, m: usize, order: OrderFunction) -> Result<ProblemSpec> {
    let mesh = SpatialMesh::cube(d, 0.0, PI, m)?;
    let profile = mesh.sample(sine_product);
    let dd = d as f64;
    let ord = order.clone();
    let time: TimeFn = Arc::new(move |t: f64| {
        let a = ord.eval(t);
        let caputo = if t > 0.0 {
            6.0 / gamma(4.0 - a) * t.powf(3.0 - a) + 6.0 / gamma(3.0 - a) * t.powf(2.0 - a)
        } else {
            0.0
        };
        caputo + dd * (t * t * t + 3.0 * t * t + 1.0)
    });
    Ok(ProblemSpec {
        label: format!("sine_product_{d}d"),
        initial: profile.clone(),
        source: Source::Separable { time, profile },
        mesh,
        t_final: 1.0,
        order,
        exact: Some(Arc::new(|x: &[f64], t: f64| {
            (t * t * t + 3.0 * t * t + 1.0) * sine_product(x)
        })),
    })
}

/// Two-dimensional manufactured problem with `α(t) = (2 + sin t)/4`.
pub fn example1_2d(m: usize) -> Result<ProblemSpec> {
    let mut p = manufactured(2, m, OrderFunction::sin4(1.0)?)?;
    p.label = "example1_2d".into();
    Ok(p)
}

/// Three-dimensional counterpart of [`example1_2d`].
pub fn example2_3d(m: usize) -> Result<ProblemSpec> {
    let mut p = manufactured(3, m, OrderFunction::sin4(1.0)?)?;
    p.label = "example2_3d".into();
    Ok(p)
}

/// No source; only the initial data drives the solution.
pub fn zero_source(initial: Field, order: OrderFunction, t_final: f64) -> ProblemSpec {
    ProblemSpec {
        label: "zero_source".into(),
        mesh: initial.mesh.clone(),
        t_final,
        order,
        source: Source::Zero,
        initial,
        exact: None,
    }
}

/// Scalar relaxation `∂_t^α u = −κu + f(t)` on `[0, T]`.
#[derive(Clone)]
pub struct ScalarProblem {
    pub order: OrderFunction,
    pub kappa: f64,
    pub t_final: f64,
    pub u0: f64,
    pub source: TimeFn,
    pub exact: Option<TimeFn>,
}

impl std::fmt::Debug for ScalarProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarProblem")
            .field("order", &self.order)
            .field("kappa", &self.kappa)
            .field("t_final", &self.t_final)
            .finish()
    }
}

impl ScalarProblem {
    /// Exact solution `t³ + 3t² + 1` with unit relaxation rate.
    pub fn cubic(order: OrderFunction) -> Self {
        let ord = order.clone();
        Self {
            order,
            kappa: 1.0,
            t_final: 1.0,
            u0: 1.0,
            source: Arc::new(move |t: f64| {
                let a = ord.eval(t);
                let caputo = if t > 0.0 {
                    6.0 / gamma(4.0 - a) * t.powf(3.0 - a) + 6.0 / gamma(3.0 - a) * t.powf(2.0 - a)
                } else {
                    0.0
                };
                caputo + t * t * t + 3.0 * t * t + 1.0
            }),
            exact: Some(Arc::new(|t: f64| t * t * t + 3.0 * t * t + 1.0)),
        }
    }
}
