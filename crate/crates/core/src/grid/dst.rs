//! DST-I along each axis and the diagonal solve of `(c A_h − σ Λ_h) u = f`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Field, SpatialMesh, PAR_MIN_POINTS};
use crate::error::{Error, Result};

/// Lines shorter than this use the dense sine matrix.
const FFT_MIN_CELLS: usize = 32;

/// Unnormalised DST-I, `S_p = Σ_{j=1}^{m−1} x_j sin(jpπ/m)`, on one line.
#[derive(Clone)]
pub enum DstPlan {
    Direct { n: usize, table: Vec<f64> },
    Fft { m: usize, fft: Arc<dyn Fft<f64>> },
}

impl std::fmt::Debug for DstPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Direct { n, .. } => write!(f, "DstPlan::Direct({})", n + 1),
            Self::Fft { m, .. } => write!(f, "DstPlan::Fft({m})"),
        }
    }
}

/// Per-thread buffers for [`DstPlan::transform`].
#[derive(Default)]
pub struct DstScratch {
    line: Vec<f64>,
    buf: Vec<Complex<f64>>,
    fft_scratch: Vec<Complex<f64>>,
}

impl DstPlan {
    /// Picks the dense path below 32 cells and the FFT path above.
    pub fn new(m: usize) -> Self {
        if m < FFT_MIN_CELLS {
            Self::direct(m)
        } else {
            Self::fft(m)
        }
    }

    pub fn direct(m: usize) -> Self {
        let n = m - 1;
        let mut table = vec![0.0; n * n];
        for p in 0..n {
            for j in 0..n {
                // Reduce jp mod 2m first so the sine argument stays small.
                let k = ((p + 1) * (j + 1)) % (2 * m);
                table[p * n + j] = (k as f64 * PI / m as f64).sin();
            }
        }
        Self::Direct { n, table }
    }

    pub fn fft(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * m);
        Self::Fft { m, fft }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Direct { n, .. } => *n,
            Self::Fft { m, .. } => m - 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transforms `x` in place.
    pub fn transform(&self, x: &mut [f64], scratch: &mut DstScratch) {
        match self {
            Self::Direct { n, table } => {
                scratch.line.clear();
                scratch.line.extend_from_slice(x);
                for p in 0..*n {
                    let row = &table[p * n..(p + 1) * n];
                    x[p] = row.iter().zip(&scratch.line).map(|(s, v)| s * v).sum();
                }
            }
            Self::Fft { m, fft } => {
                let m = *m;
                let buf = &mut scratch.buf;
                buf.clear();
                buf.resize(2 * m, Complex::new(0.0, 0.0));
                for j in 1..m {
                    buf[j].re = x[j - 1];
                    buf[2 * m - j].re = -x[j - 1];
                }
                let need = fft.get_inplace_scratch_len();
                if scratch.fft_scratch.len() < need {
                    scratch.fft_scratch.resize(need, Complex::new(0.0, 0.0));
                }
                fft.process_with_scratch(buf, &mut scratch.fft_scratch[..need]);
                for p in 1..m {
                    x[p - 1] = -0.5 * buf[p].im;
                }
            }
        }
    }
}

/// Spectra of the one-dimensional stencils on each axis.
#[derive(Debug, Clone)]
pub struct StencilEigens {
    /// `a_j = (5 + cos(jπ/m)) / 6`.
    pub average: Vec<Vec<f64>>,
    /// `μ_j = −(4/Δx²) sin²(jπ/(2m))`.
    pub second_difference: Vec<Vec<f64>>,
}

impl StencilEigens {
    pub fn new(mesh: &SpatialMesh) -> Self {
        let mut average = Vec::new();
        let mut second_difference = Vec::new();
        for a in mesh.axes() {
            let m = a.m as f64;
            let dx = a.dx();
            average.push(
                (1..a.m)
                    .map(|j| (5.0 + (j as f64 * PI / m).cos()) / 6.0)
                    .collect(),
            );
            second_difference.push(
                (1..a.m)
                    .map(|j| -4.0 / (dx * dx) * (j as f64 * PI / (2.0 * m)).sin().powi(2))
                    .collect(),
            );
        }
        Self {
            average,
            second_difference,
        }
    }
}

/// Diagonalises `A_h` and `Λ_h` in the tensor sine basis.
#[derive(Debug, Clone)]
pub struct SineSolver {
    mesh: SpatialMesh,
    plans: Vec<DstPlan>,
    eigens: StencilEigens,
    /// `Π_r a_{j_r}` per spectral index.
    prod_a: Vec<f64>,
    /// `Σ_k μ_{j_k} Π_{l≠k} a_{j_l}` per spectral index.
    lambda: Vec<f64>,
    /// `Π_r 2/m_r`, applied once on the inverse.
    inverse_scale: f64,
}

impl SineSolver {
    pub fn new(mesh: &SpatialMesh) -> Self {
        Self::with_plans(
            mesh,
            mesh.axes().iter().map(|a| DstPlan::new(a.m)).collect(),
        )
    }

    /// Uses the given plan per axis; lets tests pin the dense or FFT path.
    pub fn with_plans(mesh: &SpatialMesh, plans: Vec<DstPlan>) -> Self {
        let eigens = StencilEigens::new(mesh);
        let dof = mesh.dof();
        let mut prod_a = vec![1.0; dof];
        let mut lambda = vec![0.0; dof];
        let d = mesh.dims();
        for idx in 0..dof {
            let mi = mesh.multi_index(idx);
            let a: Vec<f64> = (0..d).map(|r| eigens.average[r][mi[r] - 1]).collect();
            prod_a[idx] = a.iter().product();
            lambda[idx] = (0..d)
                .map(|k| {
                    let others: f64 = (0..d).filter(|&l| l != k).map(|l| a[l]).product();
                    eigens.second_difference[k][mi[k] - 1] * others
                })
                .sum();
        }
        let inverse_scale = mesh.axes().iter().map(|a| 2.0 / a.m as f64).product();
        Self {
            mesh: mesh.clone(),
            plans,
            eigens,
            prod_a,
            lambda,
            inverse_scale,
        }
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.mesh
    }

    pub fn eigens(&self) -> &StencilEigens {
        &self.eigens
    }

    /// Unnormalised sine transform along every axis, in place.
    pub fn forward(&self, values: &mut [f64]) {
        for r in 0..self.mesh.dims() {
            self.transform_axis(r, values);
        }
    }

    /// Exact inverse of [`SineSolver::forward`].
    pub fn inverse(&self, values: &mut [f64]) {
        self.forward(values);
        let s = self.inverse_scale;
        values.iter_mut().for_each(|v| *v *= s);
    }

    fn transform_axis(&self, r: usize, values: &mut [f64]) {
        let plan = &self.plans[r];
        let n = self.mesh.axis(r).interior();
        let s = self.mesh.stride(r);
        let par = values.len() >= PAR_MIN_POINTS;
        if s == 1 {
            if par {
                values
                    .par_chunks_mut(n)
                    .for_each_init(DstScratch::default, |sc, line| plan.transform(line, sc));
            } else {
                let mut sc = DstScratch::default();
                values
                    .chunks_mut(n)
                    .for_each(|line| plan.transform(line, &mut sc));
            }
            return;
        }
        // Gather strided lines into a line-major buffer, transform, scatter.
        let total = values.len();
        let block = n * s;
        let gather = |(l, line): (usize, &mut [f64])| {
            let (o, i) = (l / s, l % s);
            for (j, v) in line.iter_mut().enumerate() {
                *v = values[o * block + j * s + i];
            }
        };
        let mut lines = vec![0.0; total];
        if par {
            lines.par_chunks_mut(n).enumerate().for_each(gather);
            lines
                .par_chunks_mut(n)
                .for_each_init(DstScratch::default, |sc, line| plan.transform(line, sc));
            values.par_iter_mut().enumerate().for_each(|(idx, v)| {
                let (o, rem) = (idx / block, idx % block);
                let (j, i) = (rem / s, rem % s);
                *v = lines[(o * s + i) * n + j];
            });
        } else {
            lines.chunks_mut(n).enumerate().for_each(gather);
            let mut sc = DstScratch::default();
            lines
                .chunks_mut(n)
                .for_each(|line| plan.transform(line, &mut sc));
            values.iter_mut().enumerate().for_each(|(idx, v)| {
                let (o, rem) = (idx / block, idx % block);
                let (j, i) = (rem / s, rem % s);
                *v = lines[(o * s + i) * n + j];
            });
        }
    }

    fn check(&self, c: f64, sigma: f64, f: &Field) -> Result<()> {
        if !(c > 0.0) || !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need c > 0 and σ > 0, got c = {c}, σ = {sigma}"
            )));
        }
        if f.mesh != self.mesh {
            return Err(Error::InvalidMesh(
                "field mesh differs from solver mesh".into(),
            ));
        }
        Ok(())
    }

    /// Solves `(c A_h − σ Λ_h) u = rhs`.
    pub fn solve(&self, rhs: &Field, c: f64, sigma: f64) -> Result<Field> {
        self.check(c, sigma, rhs)?;
        let mut v = rhs.values.clone();
        self.solve_in_place(&mut v, c, sigma);
        Ok(Field {
            mesh: self.mesh.clone(),
            values: v,
        })
    }

    /// In-place variant of [`SineSolver::solve`] with no validation.
    pub fn solve_in_place(&self, values: &mut [f64], c: f64, sigma: f64) {
        self.forward(values);
        let s = self.inverse_scale;
        let scale = |(v, (pa, la)): (&mut f64, (&f64, &f64))| *v *= s / (c * pa - sigma * la);
        if values.len() >= PAR_MIN_POINTS {
            values
                .par_iter_mut()
                .zip(self.prod_a.par_iter().zip(self.lambda.par_iter()))
                .for_each(scale);
        } else {
            values
                .iter_mut()
                .zip(self.prod_a.iter().zip(self.lambda.iter()))
                .for_each(scale);
        }
        self.forward(values);
    }

    /// `(c A_h − σ Λ_h) u` evaluated through the spectrum.
    pub fn apply_spectral(&self, u: &Field, c: f64, sigma: f64) -> Result<Field> {
        self.check(c, sigma, u)?;
        let mut v = u.values.clone();
        self.forward(&mut v);
        for ((x, pa), la) in v.iter_mut().zip(&self.prod_a).zip(&self.lambda) {
            *x *= c * pa - sigma * la;
        }
        self.inverse(&mut v);
        Ok(Field {
            mesh: self.mesh.clone(),
            values: v,
        })
    }
}
