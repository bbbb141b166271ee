//! Divergence-free Galerkin space in the vertical, one horizontal mode at a time.
//!
//! For a mode `k != 0` the horizontal velocity is split along `k/|k|` (`a`)
//! and its rotation `k_perp/|k|` (`b`), with `c = u3`. Incompressibility
//! `i|k| a + c' / ell = 0` and `c(+-1) = 0` leave `b` free and `c` determined
//! by its interior nodal values, so the space has dimension `2N`.
//! The zero mode keeps both horizontal components and forces `u3 = 0`.
//! Nyquist modes are excluded.

use crate::dense::{CMat, RMat};
use crate::geometry::SlabGeometry;
use crate::vertical::VerticalGrid;
use rustfft::num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rotation to the `(a, b, c)` frame of a horizontal mode.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub c: f64,
    pub s: f64,
}

impl Frame {
    pub fn new(k1: f64, k2: f64) -> Self {
        let k = k1.hypot(k2);
        if k == 0.0 {
            Self { c: 1.0, s: 0.0 }
        } else {
            Self { c: k1 / k, s: k2 / k }
        }
    }

    /// `(x, y) -> (a, b)`.
    #[inline]
    pub fn to_frame(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        (x * self.c + y * self.s, -x * self.s + y * self.c)
    }

    /// `(a, b) -> (x, y)`.
    #[inline]
    pub fn from_frame(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        (a * self.c - b * self.s, a * self.s + b * self.c)
    }
}

/// Basis matrix of the space for `s = ell |k|` in the rotated frame, `3nv x dim`.
pub fn basis(vg: &VerticalGrid, s: f64) -> CMat {
    let nv = vg.len();
    if s == 0.0 {
        let mut b = CMat::zeros(3 * nv, 2 * nv);
        for j in 0..2 * nv {
            b.set(j, j, Complex64::new(1.0, 0.0));
        }
        return b;
    }
    let n = nv - 1;
    let dim = 2 * n;
    let mut b = CMat::zeros(3 * nv, dim);
    for j in 0..nv {
        b.set(nv + j, j, Complex64::new(1.0, 0.0));
    }
    for (col, j) in (1..n).enumerate() {
        let col = nv + col;
        for r in 0..nv {
            b.set(r, col, I * (vg.diff.get(r, j) / s));
        }
        b.set(2 * nv + j, col, Complex64::new(1.0, 0.0));
    }
    b
}

fn block_diag3(m: &RMat) -> CMat {
    let nv = m.rows;
    let mut out = CMat::zeros(3 * nv, 3 * nv);
    for blk in 0..3 {
        for i in 0..nv {
            for j in 0..nv {
                out.set(blk * nv + i, blk * nv + j, Complex64::new(m.get(i, j), 0.0));
            }
        }
    }
    out
}

/// `B (B^H A B)^{-1} B^H A_right`, the generic Galerkin map.
fn galerkin_map(b: &CMat, a: &CMat, right: Option<&CMat>) -> CMat {
    let bh = b.adjoint();
    let s = bh.matmul(&a.matmul(b));
    let sinv = s.inverse().expect("singular Galerkin matrix");
    let left = b.matmul(&sinv).matmul(&bh);
    match right {
        Some(r) => left.matmul(r),
        None => left,
    }
}

/// L2-orthogonal projector onto the space, in the rotated frame.
pub fn projector(vg: &VerticalGrid, s: f64) -> CMat {
    let m = block_diag3(&vg.mass);
    galerkin_map(&basis(vg, s), &m, Some(&m))
}

/// Coefficients of the implicit per-mode operator
/// `cm rho_ref u + cr rho_ref e3 x u - Delta u` with Robin friction `2 alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitCoeffs {
    pub mass: f64,
    pub rotation: f64,
    pub alpha: f64,
}

/// Full operator in the rotated frame for `|k|^2 = k2`, acting on nodal `(a, b, c)`.
pub fn implicit_operator(vg: &VerticalGrid, ell: f64, k2: f64, co: ImplicitCoeffs) -> CMat {
    let nv = vg.len();
    let mut a = CMat::zeros(3 * nv, 3 * nv);
    for blk in 0..3 {
        for i in 0..nv {
            for j in 0..nv {
                let v = (co.mass + k2) * ell * vg.mass.get(i, j) + vg.stiff.get(i, j) / ell;
                a.set(blk * nv + i, blk * nv + j, Complex64::new(v, 0.0));
            }
        }
    }
    for blk in 0..2 {
        for j in [0, nv - 1] {
            let idx = blk * nv + j;
            a.set(idx, idx, a.get(idx, idx) + 2.0 * co.alpha);
        }
    }
    if co.rotation != 0.0 {
        for i in 0..nv {
            for j in 0..nv {
                let v = co.rotation * ell * vg.mass.get(i, j);
                a.set(i, nv + j, a.get(i, nv + j) - v);
                a.set(nv + i, j, a.get(nv + i, j) + v);
            }
        }
    }
    a
}

/// Inverse of the implicit operator restricted to the space, `3nv x 3nv` in the rotated frame.
pub fn implicit_inverse(vg: &VerticalGrid, ell: f64, k2: f64, co: ImplicitCoeffs) -> CMat {
    let s = ell * k2.sqrt();
    galerkin_map(&basis(vg, s), &implicit_operator(vg, ell, k2, co), None)
}

/// Per-mode projectors of a slab geometry, cached by integer `|k|^2`.
#[derive(Debug)]
pub struct ProjectorCache {
    geom: SlabGeometry,
    cache: Mutex<HashMap<i64, Arc<CMat>>>,
}

impl ProjectorCache {
    pub fn new(geom: &SlabGeometry) -> Self {
        Self {
            geom: geom.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, idx: usize) -> Arc<CMat> {
        let key = self.geom.plane.int_k2(idx);
        let mut c = self.cache.lock().unwrap();
        c.entry(key)
            .or_insert_with(|| {
                let (k1, k2) = self.geom.plane.kvec(idx);
                Arc::new(projector(&self.geom.vertical, self.geom.ell * k1.hypot(k2)))
            })
            .clone()
    }

    /// Projects mixed coefficients `(c, k, j)` of a 3-component field in place.
    pub fn project_mixed(&self, mixed: &mut [Complex64]) {
        let plane = &self.geom.plane;
        let np = plane.npts();
        let nv = self.geom.nv();
        let mut x = vec![Complex64::default(); 3 * nv];
        let mut y = vec![Complex64::default(); 3 * nv];
        for idx in 0..np {
            if plane.has_nyquist(idx) {
                for c in 0..3 {
                    mixed[(c * np + idx) * nv..(c * np + idx + 1) * nv].fill(Complex64::default());
                }
                continue;
            }
            let (k1, k2) = plane.kvec(idx);
            let fr = Frame::new(k1, k2);
            gather_frame(mixed, np, nv, idx, fr, &mut x);
            self.get(idx).apply(&x, &mut y);
            scatter_frame(&y, np, nv, idx, fr, mixed);
        }
    }
}

/// Reads the three components of mode `idx` into the rotated frame.
pub fn gather_frame(mixed: &[Complex64], np: usize, nv: usize, idx: usize, fr: Frame, out: &mut [Complex64]) {
    for j in 0..nv {
        let (a, b) = fr.to_frame(mixed[idx * nv + j], mixed[(np + idx) * nv + j]);
        out[j] = a;
        out[nv + j] = b;
        out[2 * nv + j] = mixed[(2 * np + idx) * nv + j];
    }
}

/// Writes the three rotated-frame components of mode `idx` back.
pub fn scatter_frame(vals: &[Complex64], np: usize, nv: usize, idx: usize, fr: Frame, mixed: &mut [Complex64]) {
    for j in 0..nv {
        let (x, y) = fr.from_frame(vals[j], vals[nv + j]);
        mixed[idx * nv + j] = x;
        mixed[(np + idx) * nv + j] = y;
        mixed[(2 * np + idx) * nv + j] = vals[2 * nv + j];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &CMat, b: &CMat) -> f64 {
        a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn projector_is_idempotent_and_fixes_basis() {
        let vg = VerticalGrid::new(9);
        for s in [0.0, 0.05, 1.3, 40.0] {
            let p = projector(&vg, s);
            let p2 = p.matmul(&p);
            assert!(max_diff(&p, &p2) < 1e-10, "s = {s}");
            let b = basis(&vg, s);
            let pb = p.matmul(&b);
            assert!(max_diff(&pb, &b) < 1e-10);
        }
    }

    #[test]
    fn basis_is_divergence_free_with_no_penetration() {
        let vg = VerticalGrid::new(9);
        let s = 0.7;
        let b = basis(&vg, s);
        let nv = 9;
        for col in 0..b.cols {
            let a: Vec<Complex64> = (0..nv).map(|r| b.get(r, col)).collect();
            let c: Vec<Complex64> = (0..nv).map(|r| b.get(2 * nv + r, col)).collect();
            let mut dc = vec![Complex64::default(); nv];
            vg.diff.apply_c(&c, &mut dc);
            for j in 0..nv {
                // i |k| a + c'/ell with ell |k| = s, in units where ell = 1.
                let div = I * s * a[j] + dc[j];
                assert!(div.norm() < 1e-11);
            }
            assert!(c[0].norm() < 1e-15 && c[nv - 1].norm() < 1e-15);
        }
    }

    #[test]
    fn implicit_inverse_solves_on_space() {
        let vg = VerticalGrid::new(9);
        let co = ImplicitCoeffs {
            mass: 3.0,
            rotation: 5.0,
            alpha: 0.4,
        };
        let (ell, k2) = (0.2, 2.0);
        let g = implicit_inverse(&vg, ell, k2, co);
        let a = implicit_operator(&vg, ell, k2, co);
        let b = basis(&vg, ell * k2.sqrt());
        // G A B = B on the space.
        let gab = g.matmul(&a.matmul(&b));
        assert!(max_diff(&gab, &b) < 1e-9);
    }
}
