//! Monotone semi-Lagrangian transport of scalars by a given velocity.
//!
//! Departure points use a midpoint iteration. Values are interpolated with
//! tensor cubic Lagrange stencils and clamped to the range of the enclosing
//! cell, so no new extrema appear. A bounded additive correction restores the
//! discrete mass without leaving the input range.

use crate::error::{Error, Result};
use crate::field::{Field2D, Field3D};
use crate::geometry::PlaneGeometry;
use crate::spectral::{dz, grad_h, grad_h3};

/// Upper bound on `dt * max |grad u|` for non-crossing trajectories.
pub const LIPSCHITZ_LIMIT: f64 = 0.5;
const DEPARTURE_ITERS: usize = 3;

#[inline]
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Periodic stencil along a uniform axis: `(indices, weights, left cell index)`.
#[inline]
fn periodic_stencil(x: f64, h: f64, n: usize) -> ([usize; 4], [f64; 4], usize, usize) {
    let s = x / h;
    let i0 = s.floor();
    let t = s - i0;
    let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
    let idx = [(i0 + n - 1) % n, i0, (i0 + 1) % n, (i0 + 2) % n];
    (idx, cubic_weights(t), i0, (i0 + 1) % n)
}

/// Stencil on the ascending nonuniform nodes `z`, clamped to the ends.
#[inline]
fn nodal_stencil(x: f64, z: &[f64]) -> ([usize; 4], [f64; 4], usize, usize) {
    let n = z.len();
    let x = x.clamp(z[0], z[n - 1]);
    let cell = match z.partition_point(|&v| v <= x) {
        0 => 0,
        p => (p - 1).min(n - 2),
    };
    let start = cell.saturating_sub(1).min(n - 4);
    let idx = [start, start + 1, start + 2, start + 3];
    let mut w = [0.0; 4];
    for a in 0..4 {
        let mut v = 1.0;
        for b in 0..4 {
            if a != b {
                v *= (x - z[idx[b]]) / (z[idx[a]] - z[idx[b]]);
            }
        }
        w[a] = v;
    }
    (idx, w, cell, cell + 1)
}

struct Stencil2 {
    i: [usize; 4],
    wi: [f64; 4],
    j: [usize; 4],
    wj: [f64; 4],
    corners: [usize; 4],
}

impl Stencil2 {
    fn new(plane: &PlaneGeometry, x: f64, y: f64) -> Self {
        let h = plane.spacing();
        let n = plane.nh;
        let (i, wi, a0, a1) = periodic_stencil(x, h, n);
        let (j, wj, b0, b1) = periodic_stencil(y, h, n);
        Self {
            i,
            wi,
            j,
            wj,
            corners: [a0 * n + b0, a0 * n + b1, a1 * n + b0, a1 * n + b1],
        }
    }

    fn eval(&self, f: &[f64], n: usize) -> f64 {
        let mut acc = 0.0;
        for (a, wa) in self.i.iter().zip(&self.wi) {
            let row = a * n;
            let mut r = 0.0;
            for (b, wb) in self.j.iter().zip(&self.wj) {
                r += wb * f[row + b];
            }
            acc += wa * r;
        }
        acc
    }

    fn eval_clamped(&self, f: &[f64], n: usize) -> f64 {
        let v = self.eval(f, n);
        let (lo, hi) = self
            .corners
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &c| (l.min(f[c]), h.max(f[c])));
        v.clamp(lo, hi)
    }
}

struct Stencil3 {
    h: Stencil2,
    k: [usize; 4],
    wk: [f64; 4],
    kc: [usize; 2],
}

impl Stencil3 {
    fn eval(&self, f: &[f64], n: usize, nv: usize) -> f64 {
        let mut acc = 0.0;
        for (a, wa) in self.h.i.iter().zip(&self.h.wi) {
            for (b, wb) in self.h.j.iter().zip(&self.h.wj) {
                let base = (a * n + b) * nv;
                let col: f64 = self.k.iter().zip(&self.wk).map(|(k, w)| w * f[base + k]).sum();
                acc += wa * wb * col;
            }
        }
        acc
    }

    fn eval_clamped(&self, f: &[f64], n: usize, nv: usize) -> f64 {
        let v = self.eval(f, n, nv);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &c in &self.h.corners {
            for &k in &self.kc {
                let x = f[c * nv + k];
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        v.clamp(lo, hi)
    }
}

/// Adds `c (f - lo)(hi - f)` so that `sum w f = target`, staying inside `[lo, hi]`.
///
/// Returns the remaining mass defect if the correction had to be limited.
pub fn bounded_mass_fix(f: &mut [f64], w: &[f64], target: f64, lo: f64, hi: f64) -> f64 {
    let mass: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
    let defect = target - mass;
    if defect == 0.0 || hi <= lo {
        return defect;
    }
    let bump: Vec<f64> = f.iter().map(|&v| ((v - lo) * (hi - v)).max(0.0)).collect();
    let norm: f64 = bump.iter().zip(w).map(|(a, b)| a * b).sum();
    if norm <= 0.0 {
        return defect;
    }
    let limit = 1.0 / (hi - lo);
    let c = (defect / norm).clamp(-limit, limit);
    for (v, b) in f.iter_mut().zip(&bump) {
        *v = (*v + c * b).clamp(lo, hi);
    }
    let mass: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
    target - mass
}

fn check_lipschitz(dt: f64, grad_max: f64) -> Result<()> {
    if dt * grad_max > LIPSCHITZ_LIMIT {
        return Err(Error::CflViolation {
            dt,
            admissible: LIPSCHITZ_LIMIT / grad_max,
        });
    }
    Ok(())
}

/// Largest step accepted by the transport for the velocity `u` (2 components).
pub fn admissible_dt_2d(u: &Field2D) -> f64 {
    let g1 = grad_h(&u.component(0)).unwrap();
    let g2 = grad_h(&u.component(1)).unwrap();
    let m = g1.max_abs().max(g2.max_abs());
    if m > 0.0 {
        LIPSCHITZ_LIMIT / m
    } else {
        f64::INFINITY
    }
}

/// Largest step accepted by the transport for the velocity `u` (3 components).
pub fn admissible_dt_3d(u: &Field3D) -> f64 {
    let (a, b) = grad_h3(u);
    let m = a.max_abs().max(b.max_abs()).max(dz(u).max_abs());
    if m > 0.0 {
        LIPSCHITZ_LIMIT / m
    } else {
        f64::INFINITY
    }
}

/// Transports the scalar `f` over one step of length `dt` with the midpoint velocity `u`.
pub fn advect_2d(f: &Field2D, u: &Field2D, dt: f64) -> Result<Field2D> {
    if f.ncomp() != 1 || u.ncomp() != 2 || !f.plane().same_grid(u.plane()) {
        return Err(Error::GridMismatch("advect_2d expects a scalar and a 2-vector on one grid".into()));
    }
    check_lipschitz(dt, LIPSCHITZ_LIMIT / admissible_dt_2d(u))?;
    let plane = f.plane();
    let n = plane.nh;
    let (u1, u2) = (u.comp(0), u.comp(1));
    let src = f.phys();
    let mut out = vec![0.0; n * n];
    for (p, o) in out.iter_mut().enumerate() {
        let (x, y) = (plane.coord(p / n), plane.coord(p % n));
        let (mut a1, mut a2) = (dt * u1[p], dt * u2[p]);
        for _ in 0..DEPARTURE_ITERS {
            let st = Stencil2::new(plane, x - 0.5 * a1, y - 0.5 * a2);
            a1 = dt * st.eval(u1, n);
            a2 = dt * st.eval(u2, n);
        }
        *o = Stencil2::new(plane, x - a1, y - a2).eval_clamped(src, n);
    }
    let w = vec![plane.spacing().powi(2); n * n];
    bounded_mass_fix(&mut out, &w, f.integral(0), f.min(), f.max());
    Field2D::from_phys(plane, 1, out)
}

/// Transports the scalar `f` on the slab with the midpoint velocity `u` (3 components).
///
/// Departure heights are clamped to the plates, where `u3` vanishes.
pub fn advect_3d(f: &Field3D, u: &Field3D, dt: f64) -> Result<Field3D> {
    if f.ncomp() != 1 || u.ncomp() != 3 || !f.geom().same_grid(u.geom()) {
        return Err(Error::GridMismatch("advect_3d expects a scalar and a 3-vector on one grid".into()));
    }
    check_lipschitz(dt, LIPSCHITZ_LIMIT / admissible_dt_3d(u))?;
    let g = f.geom();
    let plane = &g.plane;
    let (n, nv) = (g.nh(), g.nv());
    let z: Vec<f64> = (0..nv).map(|j| g.z(j)).collect();
    let (u1, u2, u3) = (u.comp(0), u.comp(1), u.comp(2));
    let src = f.phys();
    let stencil = |x: f64, y: f64, zz: f64| {
        let (k, wk, c0, c1) = nodal_stencil(zz, &z);
        Stencil3 {
            h: Stencil2::new(plane, x, y),
            k,
            wk,
            kc: [c0, c1],
        }
    };
    let mut out = vec![0.0; n * n * nv];
    for p in 0..n * n {
        let (x, y) = (plane.coord(p / n), plane.coord(p % n));
        for (j, &zj) in z.iter().enumerate() {
            let q = p * nv + j;
            let (mut a1, mut a2, mut a3) = (dt * u1[q], dt * u2[q], dt * u3[q]);
            for _ in 0..DEPARTURE_ITERS {
                let st = stencil(x - 0.5 * a1, y - 0.5 * a2, zj - 0.5 * a3);
                a1 = dt * st.eval(u1, n, nv);
                a2 = dt * st.eval(u2, n, nv);
                a3 = dt * st.eval(u3, n, nv);
            }
            out[q] = stencil(x - a1, y - a2, zj - a3).eval_clamped(src, n, nv);
        }
    }
    let h2 = plane.spacing().powi(2);
    let wcol: Vec<f64> = g.vertical.cc_weights.iter().map(|w| w * g.ell * h2).collect();
    let w: Vec<f64> = (0..n * n).flat_map(|_| wcol.iter().copied()).collect();
    bounded_mass_fix(&mut out, &w, f.integral(0), f.min(), f.max());
    Field3D::from_phys(g, 1, out)
}
