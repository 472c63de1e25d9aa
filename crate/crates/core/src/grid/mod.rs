//! Tensor-product meshes on boxes with homogeneous Dirichlet boundary, the
//! compact fourth-order operators, discrete norms and a sine-transform solver.

mod dst;
mod ops;

pub use dst::{DstPlan, DstScratch, SineSolver, StencilEigens};
pub use ops::{
    apply_a_h, apply_compact_average, apply_lambda_h, apply_laplacian, apply_second_difference,
};

use crate::error::{Error, Result};

/// Below this many points grid sweeps stay on one thread.
pub(crate) const PAR_MIN_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    /// Number of cells; the axis carries `m - 1` interior points.
    pub m: usize,
}

impl Axis {
    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.m as f64
    }

    pub fn interior(&self) -> usize {
        self.m - 1
    }
}

/// A uniform mesh on a box in one to three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMesh {
    axes: Vec<Axis>,
}

impl SpatialMesh {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidMesh(format!(
                "{} dimensions; expected 1 to 3",
                axes.len()
            )));
        }
        for (r, a) in axes.iter().enumerate() {
            if a.m < 2 {
                return Err(Error::InvalidMesh(format!(
                    "axis {r}: m = {} must be at least 2",
                    a.m
                )));
            }
            if !(a.hi > a.lo) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "axis {r}: empty interval [{}, {}]",
                    a.lo, a.hi
                )));
            }
        }
        Ok(Self { axes })
    }

    /// `(lo, hi)^d` with `m` cells per axis.
    pub fn cube(d: usize, lo: f64, hi: f64, m: usize) -> Result<Self> {
        Self::new(vec![Axis { lo, hi, m }; d])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, r: usize) -> &Axis {
        &self.axes[r]
    }

    pub fn dx(&self, r: usize) -> f64 {
        self.axes[r].dx()
    }

    /// Interior point counts per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::interior).collect()
    }

    pub fn dof(&self) -> usize {
        self.axes.iter().map(Axis::interior).product()
    }

    /// Flat-index stride of axis `r`; the last axis is contiguous.
    pub fn stride(&self, r: usize) -> usize {
        self.axes[r + 1..].iter().map(Axis::interior).product()
    }

    /// `Π Δx^(r)`, the weight of one point in discrete inner products.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::dx).product()
    }

    /// Multi-index (1-based per axis, as on the mesh) of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for r in (0..self.dims()).rev() {
            let n = self.axes[r].interior();
            idx[r] = flat % n + 1;
            flat /= n;
        }
        idx
    }

    /// Coordinates of the interior point at a flat index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for (r, a) in self.axes.iter().enumerate() {
            x[r] = a.lo + idx[r] as f64 * a.dx();
        }
        x
    }

    /// Field whose value at each interior point is `f(x)`.
    pub fn sample<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Field {
        let d = self.dims();
        let values = (0..self.dof()).map(|i| f(&self.point(i)[..d])).collect();
        Field {
            mesh: self.clone(),
            values,
        }
    }
}

/// Interior values of a grid function; the boundary is implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub mesh: SpatialMesh,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: &SpatialMesh) -> Self {
        Self {
            mesh: mesh.clone(),
            values: vec![0.0; mesh.dof()],
        }
    }

    pub fn from_values(mesh: &SpatialMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.dof() {
            return Err(Error::LengthMismatch {
                expected: mesh.dof(),
                got: values.len(),
            });
        }
        Ok(Self {
            mesh: mesh.clone(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        inner(self, self).sqrt()
    }

    /// `|u|_1`: forward differences over every edge, boundary edges included.
    pub fn h1_seminorm(&self) -> f64 {
        let mesh = &self.mesh;
        let shape = mesh.shape();
        let mut total = 0.0;
        for r in 0..mesh.dims() {
            let n = shape[r];
            let s = mesh.stride(r);
            let outer = self.len() / (n * s);
            let dx = mesh.dx(r);
            let mut acc = 0.0;
            for o in 0..outer {
                for i in 0..s {
                    let at = |j: usize| self.values[o * n * s + j * s + i];
                    let mut prev = 0.0;
                    for j in 0..n {
                        let v = at(j);
                        acc += (v - prev) * (v - prev);
                        prev = v;
                    }
                    acc += prev * prev;
                }
            }
            total += acc / (dx * dx);
        }
        (total * mesh.cell_volume()).sqrt()
    }

    /// `|u|_{1,A_h} = sqrt((A_h u, −Δ_h u))`.
    pub fn h1_ah_seminorm(&self) -> f64 {
        let au = apply_a_h(self);
        let lu = apply_laplacian(self);
        (-inner(&au, &lu)).max(0.0).sqrt()
    }

    pub fn norms(&self) -> Norms {
        Norms {
            max: self.max_norm(),
            l2: self.l2_norm(),
            h1: self.h1_seminorm(),
            h1_ah: self.h1_ah_seminorm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
    pub h1: f64,
    pub h1_ah: f64,
}

/// `(u, w) = Π Δx Σ u_j w_j`.
pub fn inner(u: &Field, w: &Field) -> f64 {
    let mut acc = crate::special::CompensatedSum::new();
    for (a, b) in u.values.iter().zip(&w.values) {
        acc += a * b;
    }
    acc.value() * u.mesh.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_norms() {
        let mesh = SpatialMesh::cube(1, 0.0, 4.0, 4).unwrap();
        let u = Field::from_values(&mesh, vec![1.0, 2.0, 1.0]).unwrap();
        let n = u.norms();
        assert!((n.l2 - 6f64.sqrt()).abs() < 1e-15);
        assert!((n.h1 - 2.0).abs() < 1e-15);
        assert_eq!(n.max, 2.0);
        assert!((n.h1_ah - (11.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_field_norms() {
        let mesh = SpatialMesh::cube(2, 0.0, 1.0, 5).unwrap();
        let n = Field::zeros(&mesh).norms();
        assert_eq!((n.max, n.l2, n.h1, n.h1_ah), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn mesh_validation_and_layout() {
        assert!(SpatialMesh::cube(4, 0.0, 1.0, 4).is_err());
        assert!(SpatialMesh::cube(2, 0.0, 1.0, 1).is_err());
        assert!(SpatialMesh::cube(1, 1.0, 1.0, 4).is_err());
        let mesh = SpatialMesh::new(vec![
            Axis {
                lo: 0.0,
                hi: 1.0,
                m: 4,
            },
            Axis {
                lo: 0.0,
                hi: 2.0,
                m: 5,
            },
        ])
        .unwrap();
        assert_eq!(mesh.shape(), vec![3, 4]);
        assert_eq!(mesh.stride(0), 4);
        assert_eq!(mesh.stride(1), 1);
        assert_eq!(mesh.multi_index(5), [2, 2, 0]);
        let p = mesh.point(5);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }
}
