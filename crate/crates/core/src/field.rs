//! Physical/spectral field containers on the torus and on the slab.
//!
//! The physical values are authoritative. The spectral representation is
//! computed on demand and cached; every mutable borrow of the physical data
//! drops the cache.

use crate::error::{Error, Result};
use crate::geometry::{PlaneGeometry, SlabGeometry};
use rustfft::num_complex::Complex64;
use std::sync::OnceLock;

/// Vector or scalar field on the horizontal torus, indexed `(c, i1, i2)`.
#[derive(Debug, Clone)]
pub struct Field2D {
    plane: PlaneGeometry,
    ncomp: usize,
    data: Vec<f64>,
    spec: OnceLock<Vec<Complex64>>,
}

impl Field2D {
    pub fn zeros(plane: &PlaneGeometry, ncomp: usize) -> Self {
        Self {
            plane: plane.clone(),
            ncomp,
            data: vec![0.0; ncomp * plane.npts()],
            spec: OnceLock::new(),
        }
    }

    pub fn from_fn(plane: &PlaneGeometry, ncomp: usize, f: impl Fn(usize, f64, f64) -> f64) -> Self {
        let n = plane.nh;
        let mut data = Vec::with_capacity(ncomp * n * n);
        for c in 0..ncomp {
            for i1 in 0..n {
                for i2 in 0..n {
                    data.push(f(c, plane.coord(i1), plane.coord(i2)));
                }
            }
        }
        Self {
            plane: plane.clone(),
            ncomp,
            data,
            spec: OnceLock::new(),
        }
    }

    pub fn from_phys(plane: &PlaneGeometry, ncomp: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ncomp * plane.npts() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} components on {}^2 points",
                data.len(),
                ncomp,
                plane.nh
            )));
        }
        Ok(Self {
            plane: plane.clone(),
            ncomp,
            data,
            spec: OnceLock::new(),
        })
    }

    /// Builds the field from Fourier coefficients; imaginary parts of the synthesis are dropped.
    pub fn from_spec(plane: &PlaneGeometry, ncomp: usize, spec: &[Complex64]) -> Result<Self> {
        let np = plane.npts();
        if spec.len() != ncomp * np {
            return Err(Error::GridMismatch(format!("{} coefficients for {} components", spec.len(), ncomp)));
        }
        let mut data = Vec::with_capacity(ncomp * np);
        for c in 0..ncomp {
            data.extend(plane.fft.inverse_real(&spec[c * np..(c + 1) * np]));
        }
        Self::from_phys(plane, ncomp, data)
    }

    pub fn plane(&self) -> &PlaneGeometry {
        &self.plane
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn phys(&self) -> &[f64] {
        &self.data
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let np = self.plane.npts();
        &self.data[c * np..(c + 1) * np]
    }

    pub fn phys_mut(&mut self) -> &mut [f64] {
        self.spec.take();
        &mut self.data
    }

    pub fn into_phys(self) -> Vec<f64> {
        self.data
    }

    /// Normalised Fourier coefficients, component-major.
    pub fn spec(&self) -> &[Complex64] {
        self.spec.get_or_init(|| {
            let np = self.plane.npts();
            let mut out = Vec::with_capacity(self.data.len());
            for c in 0..self.ncomp {
                out.extend(self.plane.fft.forward_real(&self.data[c * np..(c + 1) * np]));
            }
            out
        })
    }

    pub fn spec_comp(&self, c: usize) -> &[Complex64] {
        let np = self.plane.npts();
        &self.spec()[c * np..(c + 1) * np]
    }

    pub fn has_cached_spec(&self) -> bool {
        self.spec.get().is_some()
    }

    /// `int |f|^2 dx` over the torus.
    pub fn norm_sq(&self) -> f64 {
        let w = self.plane.spacing().powi(2);
        w * self.data.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `int f_c dx` for component `c`.
    pub fn integral(&self, c: usize) -> f64 {
        self.plane.spacing().powi(2) * self.comp(c).iter().sum::<f64>()
    }

    /// `int f . g dx`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.plane.spacing().powi(2) * self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_phys(&self.plane, self.ncomp, self.data.iter().map(|&v| f(v)).collect()).unwrap()
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.data.len(), other.data.len());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self::from_phys(&self.plane, self.ncomp, data).unwrap()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Single component as a scalar field.
    pub fn component(&self, c: usize) -> Self {
        Self::from_phys(&self.plane, 1, self.comp(c).to_vec()).unwrap()
    }

    /// Stack scalar fields into a vector field.
    pub fn stack(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::GridMismatch("no components".into()))?;
        let mut data = Vec::new();
        let mut ncomp = 0;
        for p in parts {
            if !p.plane.same_grid(&first.plane) {
                return Err(Error::GridMismatch("components on different grids".into()));
            }
            data.extend_from_slice(&p.data);
            ncomp += p.ncomp;
        }
        Self::from_phys(&first.plane, ncomp, data)
    }
}

/// Field on the slab, indexed `(c, i1, i2, j)` with `j` the vertical node.
///
/// The spectral form holds Fourier coefficients in the horizontal and
/// Chebyshev coefficients in the vertical, in the same index order.
#[derive(Debug, Clone)]
pub struct Field3D {
    geom: SlabGeometry,
    ncomp: usize,
    data: Vec<f64>,
    spec: OnceLock<Vec<Complex64>>,
}

impl Field3D {
    pub fn zeros(geom: &SlabGeometry, ncomp: usize) -> Self {
        Self {
            geom: geom.clone(),
            ncomp,
            data: vec![0.0; ncomp * geom.plane.npts() * geom.nv()],
            spec: OnceLock::new(),
        }
    }

    /// Samples `f(c, x1, x2, x3)` with `x3` the physical height.
    pub fn from_fn(geom: &SlabGeometry, ncomp: usize, f: impl Fn(usize, f64, f64, f64) -> f64) -> Self {
        let (n, nv) = (geom.nh(), geom.nv());
        let mut data = Vec::with_capacity(ncomp * n * n * nv);
        for c in 0..ncomp {
            for i1 in 0..n {
                for i2 in 0..n {
                    for j in 0..nv {
                        data.push(f(c, geom.plane.coord(i1), geom.plane.coord(i2), geom.z(j)));
                    }
                }
            }
        }
        Self {
            geom: geom.clone(),
            ncomp,
            data,
            spec: OnceLock::new(),
        }
    }

    pub fn from_phys(geom: &SlabGeometry, ncomp: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ncomp * geom.plane.npts() * geom.nv() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} components on {}^2 x {} points",
                data.len(),
                ncomp,
                geom.nh(),
                geom.nv()
            )));
        }
        Ok(Self {
            geom: geom.clone(),
            ncomp,
            data,
            spec: OnceLock::new(),
        })
    }

    /// Column `(c, i1, i2)` extruded from a 2-D field, constant in `x3`.
    pub fn extrude(geom: &SlabGeometry, f: &Field2D) -> Result<Self> {
        if !geom.plane.same_grid(f.plane()) {
            return Err(Error::GridMismatch("extrusion onto a different torus".into()));
        }
        let nv = geom.nv();
        let data = f.phys().iter().flat_map(|&v| std::iter::repeat_n(v, nv)).collect();
        Self::from_phys(geom, f.ncomp(), data)
    }

    pub fn geom(&self) -> &SlabGeometry {
        &self.geom
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn phys(&self) -> &[f64] {
        &self.data
    }

    pub fn phys_mut(&mut self) -> &mut [f64] {
        self.spec.take();
        &mut self.data
    }

    pub fn into_phys(self) -> Vec<f64> {
        self.data
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let sz = self.geom.plane.npts() * self.geom.nv();
        &self.data[c * sz..(c + 1) * sz]
    }

    /// Vertical column of component `c` at horizontal point `p = i1 * nh + i2`.
    pub fn column(&self, c: usize, p: usize) -> &[f64] {
        let nv = self.geom.nv();
        let base = (c * self.geom.plane.npts() + p) * nv;
        &self.data[base..base + nv]
    }

    /// Horizontal slice of component `c` at vertical node `j`.
    pub fn level(&self, c: usize, j: usize) -> Vec<f64> {
        let nv = self.geom.nv();
        self.comp(c).iter().skip(j).step_by(nv).copied().collect()
    }

    /// Fourier coefficients at every vertical node, indexed `(c, k, j)`.
    pub fn mixed(&self) -> Vec<Complex64> {
        to_mixed(&self.geom, self.ncomp, &self.data)
    }

    pub fn from_mixed(geom: &SlabGeometry, ncomp: usize, mixed: &[Complex64]) -> Result<Self> {
        let np = geom.plane.npts();
        let nv = geom.nv();
        if mixed.len() != ncomp * np * nv {
            return Err(Error::GridMismatch(format!("{} mixed coefficients", mixed.len())));
        }
        Self::from_phys(geom, ncomp, from_mixed(geom, ncomp, mixed))
    }

    /// Fourier x Chebyshev coefficients, indexed `(c, k, m)`.
    pub fn spec(&self) -> &[Complex64] {
        self.spec.get_or_init(|| {
            let nv = self.geom.nv();
            let mut mixed = self.mixed();
            let vg = &self.geom.vertical;
            let mut tmp = vec![Complex64::default(); nv];
            for col in mixed.chunks_mut(nv) {
                vg.to_modal.apply_c(col, &mut tmp);
                col.copy_from_slice(&tmp);
            }
            mixed
        })
    }

    pub fn from_spec(geom: &SlabGeometry, ncomp: usize, spec: &[Complex64]) -> Result<Self> {
        let nv = geom.nv();
        if spec.len() != ncomp * geom.plane.npts() * nv {
            return Err(Error::GridMismatch(format!("{} spectral coefficients", spec.len())));
        }
        let mut mixed = spec.to_vec();
        let mut tmp = vec![Complex64::default(); nv];
        for col in mixed.chunks_mut(nv) {
            geom.vertical.to_nodal.apply_c(col, &mut tmp);
            col.copy_from_slice(&tmp);
        }
        Self::from_mixed(geom, ncomp, &mixed)
    }

    pub fn has_cached_spec(&self) -> bool {
        self.spec.get().is_some()
    }

    /// Horizontal quadrature weight times Clenshaw–Curtis weight in physical height.
    fn weights(&self) -> Vec<f64> {
        let h2 = self.geom.plane.spacing().powi(2);
        self.geom.vertical.cc_weights.iter().map(|w| w * self.geom.ell * h2).collect()
    }

    /// `int_Omega f_c dx`.
    pub fn integral(&self, c: usize) -> f64 {
        let w = self.weights();
        let nv = self.geom.nv();
        self.comp(c).chunks(nv).map(|col| col.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()).sum()
    }

    /// `int_Omega |f|^2 dx` over all components.
    pub fn norm_sq(&self) -> f64 {
        let w = self.weights();
        let nv = self.geom.nv();
        self.data
            .chunks(nv)
            .map(|col| col.iter().zip(&w).map(|(a, b)| a * a * b).sum::<f64>())
            .sum()
    }

    /// `int_Omega f . g dx`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        let w = self.weights();
        let nv = self.geom.nv();
        self.data
            .chunks(nv)
            .zip(other.data.chunks(nv))
            .map(|(a, b)| a.iter().zip(b).zip(&w).map(|((x, y), ww)| x * y * ww).sum::<f64>())
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_phys(&self.geom, self.ncomp, self.data.iter().map(|&v| f(v)).collect()).unwrap()
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.data.len(), other.data.len());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self::from_phys(&self.geom, self.ncomp, data).unwrap()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn component(&self, c: usize) -> Self {
        Self::from_phys(&self.geom, 1, self.comp(c).to_vec()).unwrap()
    }

    pub fn stack(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::GridMismatch("no components".into()))?;
        let mut data = Vec::new();
        let mut ncomp = 0;
        for p in parts {
            if !p.geom.same_grid(&first.geom) {
                return Err(Error::GridMismatch("components on different grids".into()));
            }
            data.extend_from_slice(&p.data);
            ncomp += p.ncomp;
        }
        Self::from_phys(&first.geom, ncomp, data)
    }
}

pub(crate) fn to_mixed(geom: &SlabGeometry, ncomp: usize, data: &[f64]) -> Vec<Complex64> {
    let np = geom.plane.npts();
    let nv = geom.nv();
    let mut out = vec![Complex64::default(); ncomp * np * nv];
    let mut buf = vec![Complex64::default(); np];
    for c in 0..ncomp {
        for j in 0..nv {
            for (p, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(data[(c * np + p) * nv + j], 0.0);
            }
            geom.plane.fft.forward(&mut buf);
            for (p, b) in buf.iter().enumerate() {
                out[(c * np + p) * nv + j] = *b;
            }
        }
    }
    out
}

pub(crate) fn from_mixed(geom: &SlabGeometry, ncomp: usize, mixed: &[Complex64]) -> Vec<f64> {
    let np = geom.plane.npts();
    let nv = geom.nv();
    let mut out = vec![0.0; ncomp * np * nv];
    let mut buf = vec![Complex64::default(); np];
    for c in 0..ncomp {
        for j in 0..nv {
            for (p, b) in buf.iter_mut().enumerate() {
                *b = mixed[(c * np + p) * nv + j];
            }
            geom.plane.fft.inverse(&mut buf);
            for (p, b) in buf.iter().enumerate() {
                out[(c * np + p) * nv + j] = b.re;
            }
        }
    }
    out
}

/// Average over `x3 in (-ell, ell)`, exact for the nodal interpolant.
pub fn vertical_average(f: &Field3D) -> Field2D {
    let vg = &f.geom().vertical;
    let nv = f.geom().nv();
    let data = f.phys().chunks(nv).map(|col| vg.average(col)).collect();
    Field2D::from_phys(&f.geom().plane, f.ncomp(), data).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x3 = +ell`.
    Top,
    /// `x3 = -ell`.
    Bottom,
}

/// Restriction of `f` to the top or bottom plate.
pub fn boundary_trace(f: &Field3D, side: Side) -> Field2D {
    let nv = f.geom().nv();
    let j = match side {
        Side::Top => nv - 1,
        Side::Bottom => 0,
    };
    let data = f.phys().chunks(nv).map(|col| col[j]).collect();
    Field2D::from_phys(&f.geom().plane, f.ncomp(), data).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn slab() -> SlabGeometry {
        SlabGeometry::new(2.0 * PI, 16, 9, 0.3).unwrap()
    }

    #[test]
    fn spectral_roundtrip_3d() {
        let g = slab();
        let f = Field3D::from_fn(&g, 2, |c, x, y, z| (c as f64 + 1.0) * x.sin() * (2.0 * y).cos() * (1.0 + z * z));
        let back = Field3D::from_spec(&g, 2, f.spec()).unwrap();
        for (a, b) in f.phys().iter().zip(back.phys()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mixed = f.mixed();
        let back = Field3D::from_mixed(&g, 2, &mixed).unwrap();
        for (a, b) in f.phys().iter().zip(back.phys()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cache_invalidated_on_mutation() {
        let g = slab();
        let mut f = Field3D::from_fn(&g, 1, |_, x, _, _| x.cos());
        let before = f.spec()[0];
        assert!(f.has_cached_spec());
        f.phys_mut().iter_mut().for_each(|v| *v += 1.0);
        assert!(!f.has_cached_spec());
        assert!((f.spec()[0] - before - 1.0).norm() < 1e-12);
    }

    #[test]
    fn average_of_polynomial_profile() {
        let g = slab();
        let f = Field3D::from_fn(&g, 1, |_, x, _, z| x.sin() + z * z + z);
        let avg = vertical_average(&f);
        let ell = g.ell;
        for (p, v) in avg.phys().iter().enumerate() {
            let x = g.plane.coord(p / 16);
            assert!((v - (x.sin() + ell * ell / 3.0)).abs() < 1e-13);
        }
        let top = boundary_trace(&f, Side::Top);
        assert!((top.phys()[0] - (ell * ell + ell)).abs() < 1e-14);
        let bot = boundary_trace(&f, Side::Bottom);
        assert!((bot.phys()[0] - (ell * ell - ell)).abs() < 1e-14);
    }

    #[test]
    fn extrusion_is_constant_in_height() {
        let g = slab();
        let f2 = Field2D::from_fn(&g.plane, 1, |_, x, y| x.sin() * y.cos());
        let f3 = Field3D::extrude(&g, &f2).unwrap();
        let avg = vertical_average(&f3);
        for (a, b) in avg.phys().iter().zip(f2.phys()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((f3.integral(0) - 2.0 * g.ell * f2.integral(0)).abs() < 1e-12);
    }
}
