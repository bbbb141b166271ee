//! Periodic horizontal torus and thin slab geometry.

use crate::error::{invalid, Result};
use crate::vertical::VerticalGrid;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Normalised 2-D FFT on an `n x n` row-major grid (`index = i1 * n + i2`).
///
/// `forward` returns coefficients `c` with `f(x) = sum c_k exp(i k.x)`.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fft2({})", self.n)
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n * n);
        plan.process(buf);
        transpose(buf, n);
        plan.process(buf);
        transpose(buf, n);
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(&self.fwd, buf);
        let s = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(&self.inv, buf);
    }

    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn inverse_real(&self, c: &[Complex64]) -> Vec<f64> {
        let mut buf = c.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Horizontal torus `[0, L)^2` sampled on `nh x nh` points.
#[derive(Debug, Clone)]
pub struct PlaneGeometry {
    pub period: f64,
    pub nh: usize,
    pub fft: Arc<Fft2>,
}

impl PlaneGeometry {
    pub fn new(period: f64, nh: usize) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid("period", format!("{period} must be positive")));
        }
        if nh < 8 || !nh.is_multiple_of(2) {
            return Err(invalid("nh", format!("{nh} must be even and at least 8")));
        }
        Ok(Self {
            period,
            nh,
            fft: Arc::new(Fft2::new(nh)),
        })
    }

    pub fn npts(&self) -> usize {
        self.nh * self.nh
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.nh as f64
    }

    pub fn area(&self) -> f64 {
        self.period * self.period
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed integer wavenumber of FFT index `m`.
    pub fn index_to_int(&self, m: usize) -> i64 {
        if m <= self.nh / 2 {
            m as i64
        } else {
            m as i64 - self.nh as i64
        }
    }

    pub fn is_nyquist(&self, m: usize) -> bool {
        m == self.nh / 2
    }

    /// Physical wavenumber used for derivatives; zero on the Nyquist line.
    pub fn wavenumber(&self, m: usize) -> f64 {
        if self.is_nyquist(m) {
            0.0
        } else {
            2.0 * std::f64::consts::PI / self.period * self.index_to_int(m) as f64
        }
    }

    /// `(k1, k2)` for flat index `idx = m1 * nh + m2`.
    pub fn kvec(&self, idx: usize) -> (f64, f64) {
        (self.wavenumber(idx / self.nh), self.wavenumber(idx % self.nh))
    }

    /// Squared integer wavenumber magnitude, used as a cache key.
    pub fn int_k2(&self, idx: usize) -> i64 {
        let a = self.index_to_int(idx / self.nh);
        let b = self.index_to_int(idx % self.nh);
        a * a + b * b
    }

    pub fn has_nyquist(&self, idx: usize) -> bool {
        self.is_nyquist(idx / self.nh) || self.is_nyquist(idx % self.nh)
    }

    /// Two-thirds rule: keep `3 |m| < nh` in both directions.
    pub fn dealias_keep(&self, idx: usize) -> bool {
        let a = self.index_to_int(idx / self.nh).unsigned_abs() as usize;
        let b = self.index_to_int(idx % self.nh).unsigned_abs() as usize;
        3 * a < self.nh && 3 * b < self.nh
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nh == other.nh && self.period == other.period
    }
}

/// Thin slab `T_L^2 x (-ell, ell)` with Lobatto nodes in the vertical.
#[derive(Debug, Clone)]
pub struct SlabGeometry {
    pub plane: PlaneGeometry,
    pub ell: f64,
    pub vertical: Arc<VerticalGrid>,
}

impl SlabGeometry {
    pub fn new(period: f64, nh: usize, nv: usize, ell: f64) -> Result<Self> {
        if nv < 5 || nv.is_multiple_of(2) {
            return Err(invalid("nv", format!("{nv} must be odd and at least 5")));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(invalid("ell", format!("{ell} must be positive")));
        }
        Ok(Self {
            plane: PlaneGeometry::new(period, nh)?,
            ell,
            vertical: Arc::new(VerticalGrid::new(nv)),
        })
    }

    /// Same horizontal grid and vertical node count with a different thickness.
    pub fn with_ell(&self, ell: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(invalid("ell", format!("{ell} must be positive")));
        }
        Ok(Self {
            plane: self.plane.clone(),
            ell,
            vertical: self.vertical.clone(),
        })
    }

    pub fn nh(&self) -> usize {
        self.plane.nh
    }

    pub fn nv(&self) -> usize {
        self.vertical.len()
    }

    pub fn period(&self) -> f64 {
        self.plane.period
    }

    /// Physical height of node `j`.
    pub fn z(&self, j: usize) -> f64 {
        self.ell * self.vertical.nodes[j]
    }

    pub fn volume(&self) -> f64 {
        2.0 * self.ell * self.plane.area()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.plane.same_grid(&other.plane) && self.nv() == other.nv() && self.ell == other.ell
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_roundtrip_and_normalisation() {
        let g = PlaneGeometry::new(2.0 * std::f64::consts::PI, 8).unwrap();
        let x: Vec<f64> = (0..64)
            .map(|i| {
                let (a, b) = (g.coord(i / 8), g.coord(i % 8));
                1.5 + (a).cos() + 2.0 * (2.0 * b).sin()
            })
            .collect();
        let c = g.fft.forward_real(&x);
        assert!((c[0].re - 1.5).abs() < 1e-14);
        assert!((c[8].re - 0.5).abs() < 1e-14);
        assert!((c[2].im + 1.0).abs() < 1e-14);
        let back = g.fft.inverse_real(&c);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn validation() {
        assert!(SlabGeometry::new(1.0, 6, 9, 0.1).is_err());
        assert!(SlabGeometry::new(1.0, 9, 9, 0.1).is_err());
        assert!(SlabGeometry::new(1.0, 8, 8, 0.1).is_err());
        assert!(SlabGeometry::new(1.0, 8, 3, 0.1).is_err());
        assert!(SlabGeometry::new(1.0, 8, 5, 0.0).is_err());
        assert!(SlabGeometry::new(-1.0, 8, 5, 0.1).is_err());
        assert!(SlabGeometry::new(1.0, 8, 5, 0.1).is_ok());
    }

    #[test]
    fn wavenumbers() {
        let g = PlaneGeometry::new(2.0 * std::f64::consts::PI, 8).unwrap();
        assert_eq!(g.index_to_int(7), -1);
        assert_eq!(g.wavenumber(4), 0.0);
        assert_eq!(g.wavenumber(3), 3.0);
        assert!(g.dealias_keep(2 * 8 + 6));
        assert!(!g.dealias_keep(3 * 8));
    }
}
