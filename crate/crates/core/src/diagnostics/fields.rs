//! Vertically averaged fields of a slab state, built with the same
//! quadrature and dealiasing as the momentum solver.

use crate::error::{Error, Result};
use crate::field::{boundary_trace, vertical_average, Field2D, Field3D, Side};
use crate::solver3d::{SlabQuadrature, State3D};
use crate::spectral::curl_h;
use rustfft::num_complex::Complex64;

/// Averaged quantities of one state.
#[derive(Debug, Clone)]
pub struct AveragedFields {
    pub t: f64,
    /// `avg (rho - rho0) / eps`.
    pub sigma: Field2D,
    /// `avg rho u_h`, two components.
    pub vbar: Field2D,
    /// `curl vbar`.
    pub eta: Field2D,
    /// `avg u`, three components.
    pub ubar: Field2D,
    /// `curl avg u_h`.
    pub omega_bar: Field2D,
    pub omega_top: Field2D,
    pub omega_bottom: Field2D,
    /// `avg rho u_i u_l` for `i, l` horizontal, ordered `11, 12, 21, 22`.
    pub flux: Field2D,
}

fn horizontal(f: &Field2D) -> Field2D {
    let np = f.plane().npts();
    Field2D::from_phys(f.plane(), 2, f.phys()[..2 * np].to_vec()).unwrap()
}

/// Vertical average of products on the quadrature levels, truncated.
fn level_average(quad: &SlabQuadrature, levels: &[f64]) -> Field2D {
    let avg = quad.average(&quad.level_spec(levels));
    Field2D::from_spec(&quad.geom.plane, 1, &avg).unwrap()
}

pub fn averaged_fields(state: &State3D, rho0: &Field2D, quad: &SlabQuadrature) -> Result<AveragedFields> {
    let g = state.geom();
    if !g.plane.same_grid(rho0.plane()) || rho0.ncomp() != 1 {
        return Err(Error::GridMismatch("rho0 must be a scalar on the slab torus".into()));
    }
    let eps = state.regime.epsilon;
    let rho_bar = vertical_average(&state.rho);
    let sigma = rho_bar.zip_with(rho0, |a, b| (a - b) / eps);

    let sz = g.plane.npts() * g.nv();
    let u_mixed = state.u.mixed();
    let rho_l = quad.to_levels(&state.rho.mixed());
    let ul: Vec<Vec<f64>> = (0..2).map(|c| quad.to_levels(&u_mixed[c * sz..(c + 1) * sz])).collect();
    let ru: Vec<Vec<f64>> = ul.iter().map(|u| rho_l.iter().zip(u).map(|(a, b)| a * b).collect()).collect();
    let v1 = level_average(quad, &ru[0]);
    let v2 = level_average(quad, &ru[1]);
    let vbar = Field2D::stack(&[&v1, &v2])?;
    let mut flux_parts = Vec::with_capacity(4);
    for r in &ru {
        for u in &ul {
            let t: Vec<f64> = r.iter().zip(u).map(|(a, b)| a * b).collect();
            flux_parts.push(level_average(quad, &t));
        }
    }
    let flux = Field2D::stack(&flux_parts.iter().collect::<Vec<_>>())?;

    let ubar = vertical_average(&state.u);
    let omega_bar = curl_h(&horizontal(&ubar))?;
    let omega_top = curl_h(&horizontal(&boundary_trace(&state.u, Side::Top)))?;
    let omega_bottom = curl_h(&horizontal(&boundary_trace(&state.u, Side::Bottom)))?;
    Ok(AveragedFields {
        t: state.t,
        sigma,
        eta: curl_h(&vbar)?,
        vbar,
        ubar,
        omega_bar,
        omega_top,
        omega_bottom,
        flux,
    })
}

/// `curl div` of the averaged horizontal flux tensor, in spectral space.
pub fn curl_div_flux(flux: &Field2D) -> Field2D {
    let plane = flux.plane();
    let np = plane.npts();
    let s = flux.spec();
    let out: Vec<Complex64> = (0..np)
        .map(|i| {
            let (k1, k2) = plane.kvec(i);
            // (div T)_a = i k_b T_ab; curl w = i k1 w2 - i k2 w1.
            let d1 = Complex64::new(0.0, 1.0) * (k1 * s[i] + k2 * s[np + i]);
            let d2 = Complex64::new(0.0, 1.0) * (k1 * s[2 * np + i] + k2 * s[3 * np + i]);
            Complex64::new(0.0, 1.0) * (k1 * d2 - k2 * d1)
        })
        .collect();
    Field2D::from_spec(plane, 1, &out).unwrap()
}

/// Averaged vorticity forcing `f = -(curl div avg(rho u (x) u) + (alpha/ell)(w_top + w_bottom)) + Lap w_bar`.
pub fn vorticity_forcing(a: &AveragedFields, alpha: f64, ell: f64) -> Field2D {
    let cd = curl_div_flux(&a.flux);
    let fric = a.omega_top.add(&a.omega_bottom).scale(alpha / ell);
    let lap = crate::spectral::laplacian_h(&a.omega_bar);
    lap.sub(&cd).sub(&fric)
}

/// Height-resolved field minus its vertical average.
pub fn fluctuation(f: &Field3D) -> Field3D {
    let avg = vertical_average(f);
    let nv = f.geom().nv();
    let data = f.phys().iter().enumerate().map(|(i, v)| v - avg.phys()[i / nv]).collect();
    Field3D::from_phys(f.geom(), f.ncomp(), data).unwrap()
}
