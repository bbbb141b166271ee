//! Space-time weak-form residuals of the mass and momentum equations on a
//! sampled trajectory.
//!
//! Test functions are separable, `a(t) Phi(x)`, with `a(T) = 0`. Spatial
//! integrals use the nodal quadrature of the slab, time integrals the
//! trapezoid rule over the samples.

use super::State3D;
use crate::error::{Error, Result};
use crate::field::{boundary_trace, Field3D, Side};
use crate::spectral::{dz, grad_h3};

/// Time profile returning `(a(t), a'(t))`.
pub type TimeProfile = Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Separable test function `a(t) Phi(x)`.
pub struct SeparableTest {
    pub profile: TimeProfile,
    pub space: Field3D,
}

impl SeparableTest {
    pub fn new(profile: TimeProfile, space: Field3D) -> Self {
        Self { profile, space }
    }

    /// `a(t) = (1 - t/T)^2`, which vanishes to first order at `T`.
    pub fn quadratic_decay(t_end: f64, space: Field3D) -> Self {
        let profile: TimeProfile = Box::new(move |t| {
            let s = 1.0 - t / t_end;
            (s * s, -2.0 * s / t_end)
        });
        Self::new(profile, space)
    }
}

impl std::fmt::Debug for SeparableTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparableTest").field("space", &self.space).finish_non_exhaustive()
    }
}

fn check_window(history: &[State3D], test: &SeparableTest, ncomp: usize) -> Result<()> {
    if history.len() < 2 {
        return Err(Error::InsufficientSamples(format!("{} samples, need 2", history.len())));
    }
    if test.space.ncomp() != ncomp || !test.space.geom().same_grid(history[0].geom()) {
        return Err(Error::GridMismatch("test function does not match the trajectory grid".into()));
    }
    for w in history.windows(2) {
        if w[1].t <= w[0].t {
            return Err(Error::InsufficientSamples("sample times must increase".into()));
        }
    }
    let t_end = history.last().unwrap().t;
    let (a_end, _) = (test.profile)(t_end);
    let (a0, _) = (test.profile)(history[0].t);
    if a_end.abs() > 1e-12 * a0.abs().max(1.0) {
        return Err(Error::TestFunctionSupport(a_end.abs()));
    }
    Ok(())
}

fn trapezoid(ts: &[f64], vals: &[f64]) -> f64 {
    ts.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// `-int int rho (d_t phi + u . grad phi) - int rho(0) phi(0)`.
pub fn weak_residual_mass(history: &[State3D], test: &SeparableTest) -> Result<f64> {
    check_window(history, test, 1)?;
    let phi = &test.space;
    let (p1, p2) = grad_h3(phi);
    let p3 = dz(phi);
    let ts: Vec<f64> = history.iter().map(|s| s.t).collect();
    let vals: Vec<f64> = history
        .iter()
        .map(|s| {
            let (a, da) = (test.profile)(s.t);
            let adv = s.u.comp(0).iter().zip(p1.phys()).map(|(u, g)| u * g);
            let adv: Vec<f64> = adv
                .zip(s.u.comp(1).iter().zip(p2.phys()).map(|(u, g)| u * g))
                .zip(s.u.comp(2).iter().zip(p3.phys()).map(|(u, g)| u * g))
                .map(|((x, y), z)| x + y + z)
                .collect();
            let adv = Field3D::from_phys(phi.geom(), 1, adv).unwrap();
            -(da * s.rho.dot(phi) + a * s.rho.dot(&adv))
        })
        .collect();
    let (a0, _) = (test.profile)(history[0].t);
    Ok(trapezoid(&ts, &vals) - a0 * history[0].rho.dot(phi))
}

/// Spatial part of the momentum form at one time, without the `d_t` term.
fn momentum_flux(s: &State3D, psi: &Field3D, dpsi: &[Field3D; 3], coriolis: bool) -> f64 {
    let g = s.geom();
    let n = g.plane.npts() * g.nv();
    let m = s.momentum();
    let u = &s.u;
    let (u1, u2) = grad_h3(u);
    let u3 = dz(u);
    let du = [&u1, &u2, &u3];

    let mut conv = vec![0.0; n];
    let mut visc = vec![0.0; n];
    for i in 0..3 {
        for l in 0..3 {
            let dp = &dpsi[l].comp(i);
            let mi = m.comp(i);
            let ul = u.comp(l);
            let dul = du[l].comp(i);
            for p in 0..n {
                conv[p] += mi[p] * ul[p] * dp[p];
                visc[p] += dul[p] * dp[p];
            }
        }
    }
    let ones = Field3D::from_phys(g, 1, vec![1.0; n]).unwrap();
    let conv = Field3D::from_phys(g, 1, conv).unwrap().dot(&ones);
    let visc = Field3D::from_phys(g, 1, visc).unwrap().dot(&ones);
    let rot = if coriolis {
        let (m1, m2) = (m.comp(0), m.comp(1));
        let rot: Vec<f64> = (0..n).map(|p| -m2[p] * psi.comp(0)[p] + m1[p] * psi.comp(1)[p]).collect();
        Field3D::from_phys(g, 1, rot).unwrap().dot(&ones) / s.regime.epsilon
    } else {
        0.0
    };
    let mut plates = 0.0;
    for side in [Side::Top, Side::Bottom] {
        let ut = boundary_trace(u, side);
        let pt = boundary_trace(psi, side);
        let np = g.plane.npts();
        let h2 = g.plane.spacing().powi(2);
        plates += (0..2 * np).map(|p| ut.phys()[p] * pt.phys()[p]).sum::<f64>() * h2;
    }
    -conv + rot + visc + 2.0 * s.regime.alpha * plates
}

/// Weak momentum residual against a divergence-free `psi` with `psi3 = 0` on the plates:
///
/// ```text
/// int int [-rho u . d_t psi - rho u (x) u : grad psi + (1/eps) e3 x rho u . psi + grad u : grad psi]
///   + 2 alpha int int_plates u . psi - int m(0) . psi(0)
/// ```
pub fn weak_residual_momentum(history: &[State3D], test: &SeparableTest, coriolis: bool) -> Result<f64> {
    check_window(history, test, 3)?;
    let psi = &test.space;
    let (d1, d2) = grad_h3(psi);
    let dpsi = [d1, d2, dz(psi)];
    let ts: Vec<f64> = history.iter().map(|s| s.t).collect();
    let vals: Vec<f64> = history
        .iter()
        .map(|s| {
            let (a, da) = (test.profile)(s.t);
            -da * s.momentum().dot(psi) + a * momentum_flux(s, psi, &dpsi, coriolis)
        })
        .collect();
    let (a0, _) = (test.profile)(history[0].t);
    Ok(trapezoid(&ts, &vals) - a0 * history[0].momentum().dot(psi))
}

/// `(grad_h^perp phi, 0) / (2 ell)` for a horizontal `phi`, extruded over the slab.
pub fn averaged_vorticity_test(phi: &crate::field::Field2D, geom: &crate::geometry::SlabGeometry) -> Result<Field3D> {
    let perp = crate::spectral::perp_grad_h(phi)?.scale(0.5 / geom.ell);
    let zero = crate::field::Field2D::zeros(phi.plane(), 1);
    let v = crate::field::Field2D::stack(&[&perp.component(0), &perp.component(1), &zero])?;
    Field3D::extrude(geom, &v)
}
