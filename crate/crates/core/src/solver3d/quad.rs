//! Transfers between nodal mode columns and physical values on the
//! Gauss–Legendre levels, and assembly of Galerkin test functionals.
//!
//! Mixed arrays are indexed `(idx, j)` per component; level arrays are
//! indexed `(q, p)` and level spectra `(q, idx)`. Every transfer is
//! restricted to the two-thirds dealiased modes.

use crate::geometry::SlabGeometry;
use rustfft::num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct SlabQuadrature {
    pub geom: SlabGeometry,
    pub kept: Vec<usize>,
}

impl SlabQuadrature {
    pub fn new(geom: &SlabGeometry) -> Self {
        let kept = (0..geom.plane.npts()).filter(|&i| geom.plane.dealias_keep(i)).collect();
        Self {
            geom: geom.clone(),
            kept,
        }
    }

    pub fn nq(&self) -> usize {
        self.geom.vertical.n_quad()
    }

    pub fn np(&self) -> usize {
        self.geom.plane.npts()
    }

    /// Physical values on every quadrature level of one mixed component.
    pub fn to_levels(&self, col: &[Complex64]) -> Vec<f64> {
        let (np, nq, nv) = (self.np(), self.nq(), self.geom.nv());
        let e = &self.geom.vertical.interp;
        let mut spec = vec![Complex64::default(); nq * np];
        for &idx in &self.kept {
            let c = &col[idx * nv..(idx + 1) * nv];
            for q in 0..nq {
                let mut acc = Complex64::default();
                for (w, v) in e.row(q).iter().zip(c) {
                    acc += v * *w;
                }
                spec[q * np + idx] = acc;
            }
        }
        let mut out = vec![0.0; nq * np];
        for (s, o) in spec.chunks_mut(np).zip(out.chunks_mut(np)) {
            self.geom.plane.fft.inverse(s);
            for (a, b) in o.iter_mut().zip(s.iter()) {
                *a = b.re;
            }
        }
        out
    }

    /// Level-by-level Fourier coefficients, truncated.
    pub fn level_spec(&self, phys: &[f64]) -> Vec<Complex64> {
        let np = self.np();
        let mut out = Vec::with_capacity(phys.len());
        for lvl in phys.chunks(np) {
            let mut s = self.geom.plane.fft.forward_real(lvl);
            for (i, v) in s.iter_mut().enumerate() {
                if !self.geom.plane.dealias_keep(i) {
                    *v = Complex64::default();
                }
            }
            out.extend(s);
        }
        out
    }

    /// `out(idx, j) += scale * sum_q w_q E_qj s(q, idx) * mult(idx)`, i.e. `int g phi_j dz / ell`.
    pub fn add_mass(&self, s: &[Complex64], out: &mut [Complex64], scale: f64, mult: impl Fn(usize) -> Complex64) {
        self.add_with(s, out, scale, &self.geom.vertical.interp, mult);
    }

    /// Same with the derivative of the test function, `int g phi_j' dzeta`.
    pub fn add_dz(&self, s: &[Complex64], out: &mut [Complex64], scale: f64, mult: impl Fn(usize) -> Complex64) {
        self.add_with(s, out, scale, &self.geom.vertical.interp_diff, mult);
    }

    fn add_with(
        &self,
        s: &[Complex64],
        out: &mut [Complex64],
        scale: f64,
        m: &crate::dense::RMat,
        mult: impl Fn(usize) -> Complex64,
    ) {
        let (np, nq, nv) = (self.np(), self.nq(), self.geom.nv());
        let w = &self.geom.vertical.gl_weights;
        for &idx in &self.kept {
            let f = mult(idx) * scale;
            if f == Complex64::default() {
                continue;
            }
            let dst = &mut out[idx * nv..(idx + 1) * nv];
            for q in 0..nq {
                let v = s[q * np + idx] * w[q] * f;
                for (d, e) in dst.iter_mut().zip(m.row(q)) {
                    *d += v * *e;
                }
            }
        }
    }

    /// Vertical average `(1/2) sum_q w_q s(q, idx)` of a level spectrum.
    pub fn average(&self, s: &[Complex64]) -> Vec<Complex64> {
        let np = self.np();
        let w = &self.geom.vertical.gl_weights;
        let mut out = vec![Complex64::default(); np];
        for &idx in &self.kept {
            out[idx] = 0.5 * w.iter().enumerate().map(|(q, wq)| s[q * np + idx] * *wq).sum::<Complex64>();
        }
        out
    }

    /// `int_Omega a b dx` of two level arrays.
    pub fn integrate_product(&self, a: &[f64], b: &[f64]) -> f64 {
        let np = self.np();
        let w = &self.geom.vertical.gl_weights;
        let h2 = self.geom.plane.spacing().powi(2);
        let mut acc = 0.0;
        for (q, wq) in w.iter().enumerate() {
            let s: f64 = a[q * np..(q + 1) * np].iter().zip(&b[q * np..(q + 1) * np]).map(|(x, y)| x * y).sum();
            acc += wq * s;
        }
        acc * h2 * self.geom.ell
    }
}
