//! Three-point stencils along one axis and the operators built from them.

use rayon::prelude::*;

use super::{Field, SpatialMesh, PAR_MIN_POINTS};

/// `out = w_m·u_{j−1} + w_c·u_j + w_p·u_{j+1}` along axis `r`, zero ghosts.
///
/// For a non-contiguous axis the flat array is a stack of `n_r × stride`
/// blocks, so the stencil combines whole rows of length `stride`.
pub(crate) fn stencil_axis(
    mesh: &SpatialMesh,
    r: usize,
    u: &[f64],
    out: &mut [f64],
    w: (f64, f64, f64),
) {
    let n = mesh.axis(r).interior();
    let s = mesh.stride(r);
    let (wm, wc, wp) = w;
    let row = |q: usize, dst: &mut [f64]| {
        // q indexes rows of length s; j is its position along axis r.
        let j = q % n;
        let base = q * s;
        let centre = &u[base..base + s];
        for (i, d) in dst.iter_mut().enumerate() {
            *d = wc * centre[i];
        }
        if j > 0 {
            let below = &u[base - s..base];
            for (d, v) in dst.iter_mut().zip(below) {
                *d += wm * v;
            }
        }
        if j + 1 < n {
            let above = &u[base + s..base + 2 * s];
            for (d, v) in dst.iter_mut().zip(above) {
                *d += wp * v;
            }
        }
    };
    if s == 1 {
        // Contiguous lines: one task per line.
        let line = |(dst, src): (&mut [f64], &[f64])| {
            for j in 0..n {
                let mut v = wc * src[j];
                if j > 0 {
                    v += wm * src[j - 1];
                }
                if j + 1 < n {
                    v += wp * src[j + 1];
                }
                dst[j] = v;
            }
        };
        if u.len() >= PAR_MIN_POINTS {
            out.par_chunks_mut(n).zip(u.par_chunks(n)).for_each(line);
        } else {
            out.chunks_mut(n).zip(u.chunks(n)).for_each(line);
        }
    } else if u.len() >= PAR_MIN_POINTS {
        out.par_chunks_mut(s)
            .enumerate()
            .for_each(|(q, dst)| row(q, dst));
    } else {
        out.chunks_mut(s)
            .enumerate()
            .for_each(|(q, dst)| row(q, dst));
    }
}

pub(crate) fn second_difference_weights(mesh: &SpatialMesh, r: usize) -> (f64, f64, f64) {
    let inv = 1.0 / (mesh.dx(r) * mesh.dx(r));
    (inv, -2.0 * inv, inv)
}

pub(crate) const AVERAGE_WEIGHTS: (f64, f64, f64) = (1.0 / 12.0, 10.0 / 12.0, 1.0 / 12.0);

fn apply(f: &Field, r: usize, w: (f64, f64, f64)) -> Field {
    let mut out = vec![0.0; f.len()];
    stencil_axis(&f.mesh, r, &f.values, &mut out, w);
    Field {
        mesh: f.mesh.clone(),
        values: out,
    }
}

/// `δ_r² u`.
pub fn apply_second_difference(f: &Field, r: usize) -> Field {
    apply(f, r, second_difference_weights(&f.mesh, r))
}

/// `A_r u = (u_{j−1} + 10u_j + u_{j+1}) / 12`.
pub fn apply_compact_average(f: &Field, r: usize) -> Field {
    apply(f, r, AVERAGE_WEIGHTS)
}

/// `A_h = Π_r A_r`.
pub fn apply_a_h(f: &Field) -> Field {
    let mut cur = f.clone();
    for r in 0..f.mesh.dims() {
        cur = apply_compact_average(&cur, r);
    }
    cur
}

/// `Δ_h = Σ_r δ_r²`.
pub fn apply_laplacian(f: &Field) -> Field {
    let mut acc = vec![0.0; f.len()];
    for r in 0..f.mesh.dims() {
        let d = apply_second_difference(f, r);
        for (a, v) in acc.iter_mut().zip(&d.values) {
            *a += v;
        }
    }
    Field {
        mesh: f.mesh.clone(),
        values: acc,
    }
}

/// `Λ_h = Σ_k (Π_{l≠k} A_l) δ_k²`.
pub fn apply_lambda_h(f: &Field) -> Field {
    let d = f.mesh.dims();
    let mut acc = vec![0.0; f.len()];
    for k in 0..d {
        let mut cur = apply_second_difference(f, k);
        for l in (0..d).filter(|&l| l != k) {
            cur = apply_compact_average(&cur, l);
        }
        for (a, v) in acc.iter_mut().zip(&cur.values) {
            *a += v;
        }
    }
    Field {
        mesh: f.mesh.clone(),
        values: acc,
    }
}
