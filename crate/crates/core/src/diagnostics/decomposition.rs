//! Splitting of the filtered averaged momentum and the flat-set structure of `rho0`.

use crate::error::{Error, Result};
use crate::field::{vertical_average, Field2D};
use crate::fit::{fit_rate, FitResult};
use crate::solver3d::{SlabQuadrature, State3D};
use crate::spectral::{grad_h, smooth_step_bm, spectral_cutoff};
use rustfft::num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn product(a: &Field2D, v: &Field2D) -> Field2D {
    let np = a.plane().npts();
    let data = v.phys().iter().enumerate().map(|(i, x)| x * a.phys()[i % np]).collect();
    Field2D::from_phys(v.plane(), v.ncomp(), data).unwrap()
}

/// `S_M[a v] - a S_M[v]` for a scalar `a` and any field `v`.
pub fn commutator(a: &Field2D, v: &Field2D, level: i32) -> Field2D {
    spectral_cutoff(&product(a, v), level).sub(&product(a, &spectral_cutoff(v, level)))
}

pub fn commutator_norm(a: &Field2D, v: &Field2D, level: i32) -> f64 {
    commutator(a, v, level).norm()
}

/// Power-law fit of the commutator norm against `2^M` over the given levels.
pub fn commutator_slope(a: &Field2D, v: &Field2D, levels: &[i32]) -> Result<FitResult> {
    let xs: Vec<f64> = levels.iter().map(|&m| 2f64.powi(m)).collect();
    let ys: Vec<f64> = levels.iter().map(|&m| commutator_norm(a, v, m)).collect();
    fit_rate(&xs, &ys)
}

/// Filtered momentum split `S_M vbar = rho0 S_M ubar + H + eps^theta zeta + ell G`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub level: i32,
    pub vbar_m: Field2D,
    pub main: Field2D,
    /// Commutator `S_M[rho0 ubar] - rho0 S_M ubar`.
    pub h: Field2D,
    /// `S_M[((rhobar - rho0) / eps^theta) ubar]`.
    pub zeta: Field2D,
    /// `ell^{-1} S_M[avg(rho (u_h - ubar_h))]`.
    pub g: Field2D,
    /// Sup norm of the reassembly error.
    pub identity_error: f64,
}

/// Splits the nodal average of `rho u_h` at cutoff `level` and exponent `theta`.
pub fn decomposition_check(state: &State3D, rho0: &Field2D, level: i32, theta: f64) -> Result<Decomposition> {
    let g = state.geom();
    if !g.plane.same_grid(rho0.plane()) {
        return Err(Error::GridMismatch("rho0 on a different torus".into()));
    }
    let (eps, ell) = (state.regime.epsilon, state.regime.ell);
    let np = g.plane.npts();
    let nv = g.nv();
    let ubar3 = vertical_average(&state.u);
    let ubar = Field2D::from_phys(&g.plane, 2, ubar3.phys()[..2 * np].to_vec())?;
    let rho_bar = vertical_average(&state.rho);
    let rho = state.rho.phys();
    let mut fl = vec![0.0; 2 * np];
    for c in 0..2 {
        for p in 0..np {
            let col = state.u.column(c, p);
            let ub = ubar.phys()[c * np + p];
            let vals: Vec<f64> = (0..nv).map(|j| rho[p * nv + j] * (col[j] - ub)).collect();
            fl[c * np + p] = g.vertical.average(&vals);
        }
    }
    let fluct = Field2D::from_phys(&g.plane, 2, fl)?;

    let vbar = product(&rho_bar, &ubar).add(&fluct);
    let vbar_m = spectral_cutoff(&vbar, level);
    let main = product(rho0, &spectral_cutoff(&ubar, level));
    let h = commutator(rho0, &ubar, level);
    let dev = rho_bar.zip_with(rho0, |a, b| (a - b) / eps.powf(theta));
    let zeta = spectral_cutoff(&product(&dev, &ubar), level);
    let gg = spectral_cutoff(&fluct, level).scale(1.0 / ell);
    let rebuilt = main.add(&h).add(&zeta.scale(eps.powf(theta))).add(&gg.scale(ell));
    let identity_error = rebuilt.sub(&vbar_m).max_abs();
    Ok(Decomposition {
        level,
        vbar_m,
        main,
        h,
        zeta,
        g: gg,
        identity_error,
    })
}

/// `Theta = -(perp_grad rho0 . ubar) ubar_perp + (grad rho0 . ubar) ubar`.
pub fn theta_field(rho0: &Field2D, ubar: &Field2D) -> Result<Field2D> {
    if ubar.ncomp() < 2 {
        return Err(Error::GridMismatch("theta_field needs a horizontal velocity".into()));
    }
    let gr = grad_h(rho0)?;
    let np = rho0.plane().npts();
    let mut data = vec![0.0; 2 * np];
    for p in 0..np {
        let (g1, g2) = (gr.phys()[p], gr.phys()[np + p]);
        let (u1, u2) = (ubar.phys()[p], ubar.phys()[np + p]);
        let perp = -g2 * u1 + g1 * u2;
        let par = g1 * u1 + g2 * u2;
        data[p] = -perp * (-u2) + par * u1;
        data[np + p] = -perp * u1 + par * u2;
    }
    Field2D::from_phys(rho0.plane(), 2, data)
}

/// Sup of `(1 - b_M)(Theta - |grad rho0|^{-2}((grad rho0 . u)^2 + (perp_grad rho0 . u)^2) grad rho0)`.
pub fn theta_identity_error(rho0: &Field2D, ubar: &Field2D, level: i32) -> Result<f64> {
    let th = theta_field(rho0, ubar)?;
    let b = smooth_step_bm(rho0, level)?;
    let gr = grad_h(rho0)?;
    let np = rho0.plane().npts();
    let mut worst = 0.0f64;
    for p in 0..np {
        let w = 1.0 - b.phys()[p];
        if w == 0.0 {
            continue;
        }
        let (g1, g2) = (gr.phys()[p], gr.phys()[np + p]);
        let (u1, u2) = (ubar.phys()[p], ubar.phys()[np + p]);
        let gg = g1 * g1 + g2 * g2;
        let s = ((g1 * u1 + g2 * u2).powi(2) + (-g2 * u1 + g1 * u2).powi(2)) / gg;
        worst = worst
            .max((w * (th.phys()[p] - s * g1)).abs())
            .max((w * (th.phys()[np + p] - s * g2)).abs());
    }
    Ok(worst)
}

/// Fraction of grid cells where `|grad rho0| <= delta`, sampled at cell centres.
///
/// Node samples would put the critical lines of profiles such as `cos x1`
/// exactly on the grid, so the interpolant is shifted by half a cell first.
pub fn nondegeneracy_measure(rho0: &Field2D, delta: f64) -> Result<f64> {
    let plane = rho0.plane();
    let np = plane.npts();
    let half = 0.5 * plane.spacing();
    let shifted: Vec<Complex64> = (0..np)
        .map(|i| {
            if plane.has_nyquist(i) {
                return Complex64::new(0.0, 0.0);
            }
            let (k1, k2) = plane.kvec(i);
            rho0.spec()[i] * Complex64::from_polar(1.0, (k1 + k2) * half)
        })
        .collect();
    let gr = grad_h(&Field2D::from_spec(plane, 1, &shifted)?)?;
    let count = (0..np)
        .filter(|&p| gr.phys()[p].hypot(gr.phys()[np + p]) <= delta)
        .count();
    Ok(count as f64 / np as f64)
}

/// Monte-Carlo estimate of the same fraction with `samples` uniform points,
/// evaluating the trigonometric interpolant of `grad rho0` exactly.
pub fn nondegeneracy_monte_carlo(rho0: &Field2D, delta: f64, samples: usize, seed: u64) -> Result<f64> {
    let plane = rho0.plane();
    let np = plane.npts();
    let spec = rho0.spec();
    let scale = 1e-13 * spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let modes: Vec<(f64, f64, rustfft::num_complex::Complex64)> = (0..np)
        .filter(|&i| spec[i].norm() > scale && !plane.has_nyquist(i))
        .map(|i| {
            let (k1, k2) = plane.kvec(i);
            (k1, k2, spec[i])
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.gen::<f64>() * plane.period;
        let y = rng.gen::<f64>() * plane.period;
        let (mut g1, mut g2) = (0.0, 0.0);
        for &(k1, k2, c) in &modes {
            let ph = k1 * x + k2 * y;
            // Re(i k c e^{i ph}).
            let v = -(c.re * ph.sin() + c.im * ph.cos());
            g1 += k1 * v;
            g2 += k2 * v;
        }
        if g1.hypot(g2) <= delta {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

/// Constraint quantities of the averaged state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// `|| avg rho - rho0 ||_{L2}`.
    pub density_deviation: f64,
    /// `|| grad rho0 . ubar ||_{L2}`.
    pub gradient_alignment: f64,
}

pub fn constraint_check(state: &State3D, rho0: &Field2D) -> Result<ConstraintReport> {
    let g = state.geom();
    let np = g.plane.npts();
    let rho_bar = vertical_average(&state.rho);
    let ubar = vertical_average(&state.u);
    let gr = grad_h(rho0)?;
    let dot: Vec<f64> = (0..np)
        .map(|p| gr.phys()[p] * ubar.phys()[p] + gr.phys()[np + p] * ubar.phys()[np + p])
        .collect();
    Ok(ConstraintReport {
        density_deviation: rho_bar.sub(rho0).norm(),
        gradient_alignment: Field2D::from_phys(&g.plane, 1, dot)?.norm(),
    })
}

/// Random velocity with equal energy in every dyadic shell, band-limited below `kmax`.
pub fn dyadic_random_field(plane: &crate::geometry::PlaneGeometry, ncomp: usize, kmax: f64, seed: u64) -> Field2D {
    let np = plane.npts();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::default(); ncomp * np];
    for c in 0..ncomp {
        for i in 0..np {
            let (k1, k2) = plane.kvec(i);
            let k = k1.hypot(k2);
            if k == 0.0 || k > kmax || plane.has_nyquist(i) {
                continue;
            }
            let ph = rng.gen::<f64>() * std::f64::consts::TAU;
            spec[c * np + i] = Complex64::from_polar(1.0 / k, ph);
        }
    }
    // Hermitian symmetrisation gives a real field.
    let raw = Field2D::from_spec(plane, ncomp, &spec).unwrap();
    raw.scale(1.0 / raw.norm().max(f64::MIN_POSITIVE))
}

/// Quadrature shared with the momentum solver, for callers holding only a state.
pub fn quadrature_for(state: &State3D) -> SlabQuadrature {
    SlabQuadrature::new(state.geom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PlaneGeometry;
    use std::f64::consts::PI;

    #[test]
    fn flat_fraction_of_sine() {
        let plane = PlaneGeometry::new(2.0 * PI, 256).unwrap();
        let rho0 = Field2D::from_fn(&plane, 1, |_, x, _| x.sin());
        let exact = 2.0 / PI * 0.1f64.asin();
        let grid = nondegeneracy_measure(&rho0, 0.1).unwrap();
        assert!((grid - exact).abs() < 0.01, "{grid} vs {exact}");
        let ridge = Field2D::from_fn(&PlaneGeometry::new(2.0 * PI, 16).unwrap(), 1, |_, x, _| x.cos());
        assert_eq!(nondegeneracy_measure(&ridge, 0.05).unwrap(), 0.0);
        let mc = nondegeneracy_monte_carlo(&rho0, 0.1, 10 * 256 * 256, 3).unwrap();
        assert!((mc - exact).abs() < 0.002, "{mc} vs {exact}");
    }

    #[test]
    fn theta_identity_holds() {
        let plane = PlaneGeometry::new(2.0 * PI, 32).unwrap();
        let rho0 = Field2D::from_fn(&plane, 1, |_, x, y| 1.0 + 0.5 * x.sin() * y.sin());
        let u = Field2D::from_fn(&plane, 2, |c, x, y| if c == 0 { y.cos() + 0.3 } else { (x - y).sin() });
        assert!(theta_identity_error(&rho0, &u, 3).unwrap() < 1e-12);
    }
}
