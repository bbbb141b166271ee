//! Robin friction `d3 u_h + 2 alpha u_h = 0` on the top plate and
//! `d3 u_h - 2 alpha u_h = 0` on the bottom plate, imposed as boundary
//! rows of a vertical collocation problem.

use crate::dense::RMat;
use crate::error::{Error, Result};
use crate::field::Field3D;
use crate::vertical::VerticalGrid;

/// Residuals of the two Robin rows for a nodal column: `(bottom, top)`.
pub fn robin_rows(vg: &VerticalGrid, ell: f64, alpha: f64, col: &[f64]) -> (f64, f64) {
    let n = vg.len() - 1;
    let d = &vg.diff;
    let dz = |i: usize| d.row(i).iter().zip(col).map(|(a, b)| a * b).sum::<f64>() / ell;
    (dz(0) - 2.0 * alpha * col[0], dz(n) + 2.0 * alpha * col[n])
}

/// Overwrites the end values of every horizontal column so both Robin rows hold,
/// and sets `u3 = 0` on the plates. Returns the largest remaining row residual.
pub fn apply_robin_bc(u: &mut Field3D, alpha: f64) -> Result<f64> {
    if u.ncomp() != 3 {
        return Err(Error::GridMismatch("apply_robin_bc expects a 3-component velocity".into()));
    }
    let g = u.geom().clone();
    let vg = &g.vertical;
    let (nv, np, ell) = (g.nv(), g.plane.npts(), g.ell);
    let n = nv - 1;
    let d = &vg.diff;
    // Rows: bottom (D[0] / ell - 2 alpha e0), top (D[n] / ell + 2 alpha e_n).
    let a00 = d.get(0, 0) / ell - 2.0 * alpha;
    let a0n = d.get(0, n) / ell;
    let an0 = d.get(n, 0) / ell;
    let ann = d.get(n, n) / ell + 2.0 * alpha;
    let det = a00 * ann - a0n * an0;
    if det.abs() < 1e-300 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "singular Robin rows".into(),
        });
    }
    let data = u.phys_mut();
    for c in 0..3 {
        for p in 0..np {
            let col = &mut data[(c * np + p) * nv..(c * np + p + 1) * nv];
            if c == 2 {
                col[0] = 0.0;
                col[n] = 0.0;
                continue;
            }
            let r0: f64 = -(1..n).map(|j| d.get(0, j) * col[j]).sum::<f64>() / ell;
            let rn: f64 = -(1..n).map(|j| d.get(n, j) * col[j]).sum::<f64>() / ell;
            col[0] = (r0 * ann - a0n * rn) / det;
            col[n] = (a00 * rn - an0 * r0) / det;
        }
    }
    Ok(robin_residual(u, alpha))
}

/// Largest Robin row residual over the horizontal columns, plus `|u3|` on the plates.
pub fn robin_residual(u: &Field3D, alpha: f64) -> f64 {
    let g = u.geom();
    let np = g.plane.npts();
    let n = g.nv() - 1;
    let mut worst = 0.0f64;
    for p in 0..np {
        for c in 0..2 {
            let (b, t) = robin_rows(&g.vertical, g.ell, alpha, u.column(c, p));
            worst = worst.max(b.abs()).max(t.abs());
        }
        let w = u.column(2, p);
        worst = worst.max(w[0].abs()).max(w[n].abs());
    }
    worst
}

/// Collocation solver for `(sigma + k^2) v - v'' = f` on `(-ell, ell)` with Robin ends.
#[derive(Debug, Clone)]
pub struct RobinBvp {
    inv: RMat,
}

impl RobinBvp {
    pub fn new(vg: &VerticalGrid, ell: f64, alpha: f64, shift: f64) -> Result<Self> {
        let nv = vg.len();
        let n = nv - 1;
        let d = &vg.diff;
        let d2 = d.matmul(d);
        let mut a = RMat::from_fn(nv, nv, |i, j| {
            let id = if i == j { shift } else { 0.0 };
            id - d2.get(i, j) / (ell * ell)
        });
        for j in 0..nv {
            a.set(0, j, d.get(0, j) / ell - if j == 0 { 2.0 * alpha } else { 0.0 });
            a.set(n, j, d.get(n, j) / ell + if j == n { 2.0 * alpha } else { 0.0 });
        }
        let inv = a.inverse().ok_or(Error::InvalidParameter {
            name: "shift",
            reason: "singular collocation matrix".into(),
        })?;
        Ok(Self { inv })
    }

    /// Solves with right-hand side `f` at the nodes; the end values of `f` are ignored.
    pub fn solve(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len() - 1;
        let mut rhs = f.to_vec();
        rhs[0] = 0.0;
        rhs[n] = 0.0;
        let mut out = vec![0.0; f.len()];
        self.inv.apply(&rhs, &mut out);
        out
    }
}
