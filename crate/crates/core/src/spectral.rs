//! Horizontal spectral calculus, Leray projections and smooth frequency cutoffs.

use crate::error::{Error, Result};
use crate::field::{Field2D, Field3D};
use crate::galerkin::ProjectorCache;
use crate::geometry::{PlaneGeometry, SlabGeometry};
use rustfft::num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn need(f_ncomp: usize, want: usize, what: &str) -> Result<()> {
    if f_ncomp != want {
        return Err(Error::GridMismatch(format!("{what} expects {want} components, got {f_ncomp}")));
    }
    Ok(())
}

/// Applies a per-mode multiplier to every component; `m(k1, k2, c, coef)` returns the new coefficient.
fn map_modes(plane: &PlaneGeometry, spec: &[Complex64], mut m: impl FnMut(usize, f64, f64, Complex64) -> Complex64) -> Vec<Complex64> {
    let np = plane.npts();
    spec.iter()
        .enumerate()
        .map(|(i, &v)| {
            let (k1, k2) = plane.kvec(i % np);
            m(i / np, k1, k2, v)
        })
        .collect()
}

/// Horizontal gradient of a scalar field.
pub fn grad_h(f: &Field2D) -> Result<Field2D> {
    need(f.ncomp(), 1, "grad_h")?;
    let plane = f.plane();
    let s = f.spec();
    let mut out = Vec::with_capacity(2 * s.len());
    out.extend(map_modes(plane, s, |_, k1, _, v| I * k1 * v));
    out.extend(map_modes(plane, s, |_, _, k2, v| I * k2 * v));
    Field2D::from_spec(plane, 2, &out)
}

/// `(-d2 f, d1 f)`.
pub fn perp_grad_h(f: &Field2D) -> Result<Field2D> {
    need(f.ncomp(), 1, "perp_grad_h")?;
    let plane = f.plane();
    let s = f.spec();
    let mut out = Vec::with_capacity(2 * s.len());
    out.extend(map_modes(plane, s, |_, _, k2, v| -I * k2 * v));
    out.extend(map_modes(plane, s, |_, k1, _, v| I * k1 * v));
    Field2D::from_spec(plane, 2, &out)
}

/// `d1 v1 + d2 v2`.
pub fn div_h(v: &Field2D) -> Result<Field2D> {
    need(v.ncomp(), 2, "div_h")?;
    let plane = v.plane();
    let np = plane.npts();
    let s = v.spec();
    let out: Vec<Complex64> = (0..np)
        .map(|i| {
            let (k1, k2) = plane.kvec(i);
            I * (k1 * s[i] + k2 * s[np + i])
        })
        .collect();
    Field2D::from_spec(plane, 1, &out)
}

/// `d1 v2 - d2 v1`.
pub fn curl_h(v: &Field2D) -> Result<Field2D> {
    need(v.ncomp(), 2, "curl_h")?;
    let plane = v.plane();
    let np = plane.npts();
    let s = v.spec();
    let out: Vec<Complex64> = (0..np)
        .map(|i| {
            let (k1, k2) = plane.kvec(i);
            I * (k1 * s[np + i] - k2 * s[i])
        })
        .collect();
    Field2D::from_spec(plane, 1, &out)
}

/// Horizontal Laplacian, component-wise.
pub fn laplacian_h(f: &Field2D) -> Field2D {
    let out = map_modes(f.plane(), f.spec(), |_, k1, k2, v| -(k1 * k1 + k2 * k2) * v);
    Field2D::from_spec(f.plane(), f.ncomp(), &out).unwrap()
}

/// Inverse Laplacian with zero mean.
pub fn inverse_laplacian_h(f: &Field2D) -> Field2D {
    let out = map_modes(f.plane(), f.spec(), |_, k1, k2, v| {
        let k2s = k1 * k1 + k2 * k2;
        if k2s == 0.0 {
            Complex64::default()
        } else {
            -v / k2s
        }
    });
    Field2D::from_spec(f.plane(), f.ncomp(), &out).unwrap()
}

/// Two-thirds truncation of every component.
pub fn dealias(f: &Field2D) -> Field2D {
    let plane = f.plane();
    let np = plane.npts();
    let out: Vec<Complex64> = f
        .spec()
        .iter()
        .enumerate()
        .map(|(i, &v)| if plane.dealias_keep(i % np) { v } else { Complex64::default() })
        .collect();
    Field2D::from_spec(plane, f.ncomp(), &out).unwrap()
}

/// Helmholtz projection of a horizontal vector field on the torus.
///
/// The mean is kept; Nyquist modes are removed since their derivative is not represented.
pub fn leray_project_2d(v: &Field2D) -> Result<Field2D> {
    need(v.ncomp(), 2, "leray_project_2d")?;
    let plane = v.plane();
    let np = plane.npts();
    let s = v.spec();
    let mut out = vec![Complex64::default(); 2 * np];
    for i in 0..np {
        if plane.has_nyquist(i) {
            continue;
        }
        let (k1, k2) = plane.kvec(i);
        let kk = k1 * k1 + k2 * k2;
        let (a, b) = (s[i], s[np + i]);
        if kk == 0.0 {
            out[i] = a;
            out[np + i] = b;
        } else {
            let p = (k1 * a + k2 * b) / kk;
            out[i] = a - k1 * p;
            out[np + i] = b - k2 * p;
        }
    }
    Field2D::from_spec(plane, 2, &out)
}

/// Projection onto discretely divergence-free slab fields with `u3 = 0` on the plates.
///
/// Each horizontal mode is projected orthogonally in `L2(-ell, ell)` onto the
/// vertical Galerkin space, which is the weak form of the Neumann problem for
/// the pressure. The result is exactly idempotent and self-adjoint.
pub fn leray_project_3d(u: &Field3D) -> Result<Field3D> {
    need(u.ncomp(), 3, "leray_project_3d")?;
    let cache = ProjectorCache::new(u.geom());
    leray_project_3d_with(u, &cache)
}

pub fn leray_project_3d_with(u: &Field3D, cache: &ProjectorCache) -> Result<Field3D> {
    need(u.ncomp(), 3, "leray_project_3d")?;
    let mut mixed = u.mixed();
    cache.project_mixed(&mut mixed);
    Field3D::from_mixed(u.geom(), 3, &mixed)
}

/// Horizontal derivatives of every component at every node, `(d1 f, d2 f)` component-major.
pub fn grad_h3(f: &Field3D) -> (Field3D, Field3D) {
    let g = f.geom();
    let np = g.plane.npts();
    let nv = g.nv();
    let mixed = f.mixed();
    let mut d1 = mixed.clone();
    let mut d2 = mixed;
    for (i, (a, b)) in d1.iter_mut().zip(d2.iter_mut()).enumerate() {
        let (k1, k2) = g.plane.kvec((i / nv) % np);
        *a *= I * k1;
        *b *= I * k2;
    }
    (
        Field3D::from_mixed(g, f.ncomp(), &d1).unwrap(),
        Field3D::from_mixed(g, f.ncomp(), &d2).unwrap(),
    )
}

/// Vertical derivative `d/dx3` of every component.
pub fn dz(f: &Field3D) -> Field3D {
    let g = f.geom();
    let nv = g.nv();
    let mut out = vec![0.0; f.phys().len()];
    let inv = 1.0 / g.ell;
    for (src, dst) in f.phys().chunks(nv).zip(out.chunks_mut(nv)) {
        g.vertical.diff.apply(src, dst);
        dst.iter_mut().for_each(|v| *v *= inv);
    }
    Field3D::from_phys(g, f.ncomp(), out).unwrap()
}

/// Three-dimensional divergence of a 3-component field.
pub fn div3(u: &Field3D) -> Result<Field3D> {
    need(u.ncomp(), 3, "div3")?;
    let (d1, d2) = grad_h3(u);
    let d3 = dz(&u.component(2));
    let g = u.geom();
    let data = d1
        .comp(0)
        .iter()
        .zip(d2.comp(1))
        .zip(d3.phys())
        .map(|((a, b), c)| a + b + c)
        .collect();
    Field3D::from_phys(g, 1, data)
}

/// Horizontal curl `d1 u2 - d2 u1` at every node.
pub fn curl_h3(u: &Field3D) -> Result<Field3D> {
    if u.ncomp() < 2 {
        return Err(Error::GridMismatch("curl_h3 needs horizontal components".into()));
    }
    let (d1, d2) = grad_h3(u);
    let data = d1.comp(1).iter().zip(d2.comp(0)).map(|(a, b)| a - b).collect();
    Field3D::from_phys(u.geom(), 1, data)
}

/// `int_Omega |grad u|^2 dx` with spectral horizontal and polynomial vertical derivatives.
pub fn gradient_norm_sq(u: &Field3D) -> f64 {
    let (d1, d2) = grad_h3(u);
    d1.norm_sq() + d2.norm_sq() + dz(u).norm_sq()
}

/// Quintic smooth step: `1` on `[0, 1]`, `0` beyond `2`, `C^2` in between.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let t = s - 1.0;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Radial cutoff profile `chi`, equal to one on the unit ball and zero outside radius two.
pub fn chi(r: f64) -> f64 {
    smooth_step(r)
}

/// Smooth Fourier cutoff `S_M`: multiplier `chi(|xi| / 2^M)` on physical wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffKernel {
    pub level: i32,
}

impl CutoffKernel {
    pub fn new(level: i32) -> Self {
        Self { level }
    }

    pub fn radius(&self) -> f64 {
        2f64.powi(self.level)
    }

    pub fn multiplier(&self, k1: f64, k2: f64) -> f64 {
        chi(k1.hypot(k2) / self.radius())
    }
}

/// Applies `S_M` to every component.
pub fn spectral_cutoff(f: &Field2D, level: i32) -> Field2D {
    let kern = CutoffKernel::new(level);
    let out = map_modes(f.plane(), f.spec(), |_, k1, k2, v| v * kern.multiplier(k1, k2));
    Field2D::from_spec(f.plane(), f.ncomp(), &out).unwrap()
}

/// `b_M(x) = b(2^M |grad rho0(x)|)`, the smooth indicator of the flat set of `rho0`.
pub fn smooth_step_bm(rho0: &Field2D, level: i32) -> Result<Field2D> {
    let g = grad_h(rho0)?;
    let scale = 2f64.powi(level);
    let np = rho0.plane().npts();
    let data = (0..np)
        .map(|p| smooth_step(scale * g.comp(0)[p].hypot(g.comp(1)[p])))
        .collect();
    Field2D::from_phys(rho0.plane(), 1, data)
}

/// Convenience for callers building slabs from a torus.
pub fn slab_of(plane: &PlaneGeometry, nv: usize, ell: f64) -> Result<SlabGeometry> {
    SlabGeometry::new(plane.period, plane.nh, nv, ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn plane(n: usize) -> PlaneGeometry {
        PlaneGeometry::new(2.0 * PI, n).unwrap()
    }

    #[test]
    fn derivatives_of_trig_fields() {
        let p = plane(16);
        let f = Field2D::from_fn(&p, 1, |_, x, y| x.sin() * (2.0 * y).cos());
        let g = grad_h(&f).unwrap();
        for i in 0..p.npts() {
            let (x, y) = (p.coord(i / 16), p.coord(i % 16));
            assert!((g.comp(0)[i] - x.cos() * (2.0 * y).cos()).abs() < 1e-12);
            assert!((g.comp(1)[i] + 2.0 * x.sin() * (2.0 * y).sin()).abs() < 1e-12);
        }
        let c = curl_h(&g).unwrap();
        assert!(c.max_abs() < 1e-12);
        let d = div_h(&perp_grad_h(&f).unwrap()).unwrap();
        assert!(d.max_abs() < 1e-12);
        let lap = laplacian_h(&f);
        let back = inverse_laplacian_h(&lap);
        assert!(back.sub(&f).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_is_annihilated_by_leray_2d() {
        let p = plane(16);
        let phi = Field2D::from_fn(&p, 1, |_, x, y| (x + 2.0 * y).sin() + (3.0 * x).cos());
        let g = grad_h(&phi).unwrap();
        assert!(leray_project_2d(&g).unwrap().max_abs() < 1e-12);
        let v = perp_grad_h(&phi).unwrap();
        assert!(leray_project_2d(&v).unwrap().sub(&v).max_abs() < 1e-12);
    }

    #[test]
    fn cutoff_behaviour() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(2.5), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        let p = plane(64);
        let f = Field2D::from_fn(&p, 1, |_, x, y| x.sin() + (20.0 * y).cos());
        let lo = spectral_cutoff(&f, 2);
        for i in 0..p.npts() {
            assert!((lo.phys()[i] - p.coord(i / 64).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_set_indicator() {
        let p = plane(32);
        let rho0 = Field2D::from_fn(&p, 1, |_, x, _| 1.0 + 0.5 * x.sin());
        let b = smooth_step_bm(&rho0, 3).unwrap();
        // |grad rho0| = 0.5 |cos x|; at x = pi/2 it vanishes.
        assert_eq!(b.phys()[8 * 32], 1.0);
        assert_eq!(b.phys()[0], 0.0);
    }
}
