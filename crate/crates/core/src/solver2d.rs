//! Two-dimensional limit system on the torus:
//!
//! ```text
//! d_t r0 + div(r0 u) = 0
//! d_t w + u.grad w = nu Lap w - 2 lambda w - curl(r0 u_perp),   u = perp_grad psi + U,  Lap psi = w
//! ```
//!
//! with `u_perp = (-u2, u1)`. Linear terms are integrated exactly, the
//! convection explicitly with RK4 and two-thirds dealiasing, and `r0` by
//! the monotone semi-Lagrangian transport.

use crate::error::{invalid, Error, Result};
use crate::field::Field2D;
use crate::geometry::PlaneGeometry;
use crate::transport::{admissible_dt_2d, advect_2d};
use rustfft::num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub lambda: f64,
    pub nu: f64,
    /// Constant mean flow added to the velocity.
    pub mean_flow: [f64; 2],
}

impl LimitParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            nu: 1.0,
            mean_flow: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone)]
pub struct State2D {
    pub r0: Field2D,
    pub omega: Field2D,
    pub t: f64,
}

impl State2D {
    pub fn new(r0: Field2D, omega: Field2D) -> Result<Self> {
        if r0.ncomp() != 1 || omega.ncomp() != 1 || !r0.plane().same_grid(omega.plane()) {
            return Err(Error::GridMismatch("limit state needs two scalars on one grid".into()));
        }
        Ok(Self { r0, omega, t: 0.0 })
    }

    pub fn velocity(&self, params: &LimitParams) -> Field2D {
        velocity_from_vorticity(&self.omega, params.mean_flow)
    }

    /// `1/2 int |u|^2`.
    pub fn energy(&self, params: &LimitParams) -> f64 {
        0.5 * self.velocity(params).norm_sq()
    }

    /// `1/2 int w^2`.
    pub fn enstrophy(&self) -> f64 {
        0.5 * self.omega.norm_sq()
    }
}

fn velocity_spec(plane: &PlaneGeometry, w: &[Complex64], mean: [f64; 2]) -> Vec<Complex64> {
    let np = plane.npts();
    let mut out = vec![Complex64::default(); 2 * np];
    for (i, &wi) in w.iter().enumerate() {
        let (k1, k2) = plane.kvec(i);
        let kk = k1 * k1 + k2 * k2;
        if kk == 0.0 {
            continue;
        }
        let psi = -wi / kk;
        out[i] = -I * k2 * psi;
        out[np + i] = I * k1 * psi;
    }
    out[0] += mean[0];
    out[np] += mean[1];
    out
}

/// `u = perp_grad psi + U` with `Lap psi = w`, so that `curl u = w`.
pub fn velocity_from_vorticity(omega: &Field2D, mean_flow: [f64; 2]) -> Field2D {
    let plane = omega.plane();
    Field2D::from_spec(plane, 2, &velocity_spec(plane, omega.spec(), mean_flow)).unwrap()
}

fn truncate(plane: &PlaneGeometry, s: &mut [Complex64]) {
    let np = plane.npts();
    for (i, v) in s.iter_mut().enumerate() {
        if !plane.dealias_keep(i % np) {
            *v = Complex64::default();
        }
    }
}

/// Dealiased nonlinear vorticity tendency `-u.grad w - div(r0 u)` in spectral space.
fn nonlinear(plane: &PlaneGeometry, w: &[Complex64], r0: &[Complex64], mean: [f64; 2]) -> Vec<Complex64> {
    let np = plane.npts();
    let mut u = velocity_spec(plane, w, mean);
    truncate(plane, &mut u);
    let mut gw = vec![Complex64::default(); 2 * np];
    for i in 0..np {
        let (k1, k2) = plane.kvec(i);
        gw[i] = I * k1 * w[i];
        gw[np + i] = I * k2 * w[i];
    }
    truncate(plane, &mut gw);
    let mut r = r0.to_vec();
    truncate(plane, &mut r);
    let fft = &plane.fft;
    let u1 = fft.inverse_real(&u[..np]);
    let u2 = fft.inverse_real(&u[np..]);
    let w1 = fft.inverse_real(&gw[..np]);
    let w2 = fft.inverse_real(&gw[np..]);
    let rp = fft.inverse_real(&r);
    let adv: Vec<f64> = (0..np).map(|p| u1[p] * w1[p] + u2[p] * w2[p]).collect();
    let f1: Vec<f64> = (0..np).map(|p| rp[p] * u1[p]).collect();
    let f2: Vec<f64> = (0..np).map(|p| rp[p] * u2[p]).collect();
    let adv = fft.forward_real(&adv);
    let f1 = fft.forward_real(&f1);
    let f2 = fft.forward_real(&f2);
    let mut out: Vec<Complex64> = (0..np)
        .map(|i| {
            let (k1, k2) = plane.kvec(i);
            -adv[i] - I * (k1 * f1[i] + k2 * f2[i])
        })
        .collect();
    truncate(plane, &mut out);
    out
}

/// Time derivatives `(d_t r0, d_t w)` of the limit system at `state`.
pub fn limit_rhs(state: &State2D, params: &LimitParams) -> (Field2D, Field2D) {
    let plane = state.omega.plane();
    let np = plane.npts();
    let w = state.omega.spec();
    let r0 = state.r0.spec();
    let mut dw = nonlinear(plane, w, r0, params.mean_flow);
    for (i, v) in dw.iter_mut().enumerate() {
        let (k1, k2) = plane.kvec(i);
        *v += linear_rate(params, k1 * k1 + k2 * k2) * w[i];
    }
    // d_t r0 = -div(r0 u), dealiased like the vorticity flux.
    let mut u = velocity_spec(plane, w, params.mean_flow);
    truncate(plane, &mut u);
    let mut r = r0.to_vec();
    truncate(plane, &mut r);
    let fft = &plane.fft;
    let (u1, u2, rp) = (fft.inverse_real(&u[..np]), fft.inverse_real(&u[np..]), fft.inverse_real(&r));
    let f1 = fft.forward_real(&(0..np).map(|p| rp[p] * u1[p]).collect::<Vec<_>>());
    let f2 = fft.forward_real(&(0..np).map(|p| rp[p] * u2[p]).collect::<Vec<_>>());
    let mut dr: Vec<Complex64> = (0..np)
        .map(|i| {
            let (k1, k2) = plane.kvec(i);
            -I * (k1 * f1[i] + k2 * f2[i])
        })
        .collect();
    truncate(plane, &mut dr);
    (
        Field2D::from_spec(plane, 1, &dr).unwrap(),
        Field2D::from_spec(plane, 1, &dw).unwrap(),
    )
}

#[inline]
fn linear_rate(params: &LimitParams, kk: f64) -> f64 {
    -(params.nu * kk + 2.0 * params.lambda)
}

/// Largest step accepted for the current velocity.
pub fn admissible_dt(state: &State2D, params: &LimitParams, cfl: f64) -> f64 {
    let u = state.velocity(params);
    let umax = u.max_abs();
    let adv = if umax > 0.0 {
        cfl * u.plane().spacing() / umax
    } else {
        f64::INFINITY
    };
    adv.min(admissible_dt_2d(&u))
}

/// Time stepper holding the previous velocity for the midpoint transport.
#[derive(Debug, Clone)]
pub struct Solver2D {
    pub params: LimitParams,
    pub dt: f64,
    pub cfl: f64,
    prev_u: Option<Field2D>,
}

impl Solver2D {
    pub fn new(params: LimitParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        if params.lambda < 0.0 || params.nu <= 0.0 {
            return Err(invalid("params", format!("{params:?}")));
        }
        Ok(Self {
            params,
            dt,
            cfl: 1.0,
            prev_u: None,
        })
    }

    pub fn step(&mut self, state: &mut State2D) -> Result<()> {
        let u = state.velocity(&self.params);
        let admissible = admissible_dt(state, &self.params, self.cfl);
        if self.dt > admissible {
            return Err(Error::CflViolation {
                dt: self.dt,
                admissible,
            });
        }
        let u_mid = match &self.prev_u {
            Some(p) => u.zip_with(p, |a, b| 1.5 * a - 0.5 * b),
            None => u.clone(),
        };
        let r_new = advect_2d(&state.r0, &u_mid, self.dt)?;
        let w_new = self.vorticity_step(state, &r_new);
        if w_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("vorticity"));
        }
        let plane = state.omega.plane().clone();
        state.omega = Field2D::from_spec(&plane, 1, &w_new)?;
        state.r0 = r_new;
        state.t += self.dt;
        self.prev_u = Some(u);
        Ok(())
    }

    fn vorticity_step(&self, state: &State2D, r_new: &Field2D) -> Vec<Complex64> {
        let plane = state.omega.plane();
        let dt = self.dt;
        let mean = self.params.mean_flow;
        let w = state.omega.spec();
        let ra = state.r0.spec();
        let rb = r_new.spec();
        let r_at = |tau: f64| -> Vec<Complex64> { ra.iter().zip(rb).map(|(a, b)| a * (1.0 - tau) + b * tau).collect() };
        let e_full: Vec<f64> = (0..w.len())
            .map(|i| {
                let (k1, k2) = plane.kvec(i);
                (linear_rate(&self.params, k1 * k1 + k2 * k2) * dt).exp()
            })
            .collect();
        let e_half: Vec<f64> = e_full.iter().map(|e| e.sqrt()).collect();
        let r_mid = r_at(0.5);
        let k1 = nonlinear(plane, w, ra, mean);
        let s2: Vec<Complex64> = (0..w.len()).map(|i| e_half[i] * (w[i] + 0.5 * dt * k1[i])).collect();
        let k2 = nonlinear(plane, &s2, &r_mid, mean);
        let s3: Vec<Complex64> = (0..w.len()).map(|i| e_half[i] * w[i] + 0.5 * dt * k2[i]).collect();
        let k3 = nonlinear(plane, &s3, &r_mid, mean);
        let s4: Vec<Complex64> = (0..w.len()).map(|i| e_full[i] * w[i] + dt * e_half[i] * k3[i]).collect();
        let k4 = nonlinear(plane, &s4, rb, mean);
        (0..w.len())
            .map(|i| {
                e_full[i] * w[i] + dt / 6.0 * (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i])
            })
            .collect()
    }
}

/// One step of the limit system from `state`, without transport history.
pub fn step2d(state: &State2D, params: &LimitParams, dt: f64) -> Result<State2D> {
    let mut s = state.clone();
    Solver2D::new(*params, dt)?.step(&mut s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{curl_h, div_h, laplacian_h};
    use std::f64::consts::PI;

    fn plane(n: usize) -> PlaneGeometry {
        PlaneGeometry::new(2.0 * PI, n).unwrap()
    }

    #[test]
    fn single_mode_velocity() {
        let p = plane(16);
        let w = Field2D::from_fn(&p, 1, |_, x, _| x.sin());
        let u = velocity_from_vorticity(&w, [0.0, 0.0]);
        for i in 0..p.npts() {
            let x = p.coord(i / 16);
            assert!(u.comp(0)[i].abs() < 1e-13);
            assert!((u.comp(1)[i] + x.cos()).abs() < 1e-13);
        }
        assert!(curl_h(&u).unwrap().sub(&w).max_abs() < 1e-12);
        assert!(div_h(&u).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn taylor_green_decays_exactly() {
        let p = plane(16);
        let params = LimitParams::new(0.0);
        let w0 = Field2D::from_fn(&p, 1, |_, x, y| 2.0 * x.sin() * y.sin());
        let mut s = State2D::new(Field2D::zeros(&p, 1), w0.clone()).unwrap();
        let mut solver = Solver2D::new(params, 0.01).unwrap();
        for _ in 0..100 {
            solver.step(&mut s).unwrap();
        }
        let expect = w0.scale((-2.0f64).exp());
        assert!(s.omega.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn curl_of_momentum_tendency_matches() {
        let p = plane(24);
        let params = LimitParams::new(0.7);
        let raw_w = Field2D::from_fn(&p, 1, |_, x, y| x.sin() * (2.0 * y).cos() + 0.5 * (x + y).cos());
        let raw_r = Field2D::from_fn(&p, 1, |_, x, y| 0.3 * (2.0 * x).cos() + 0.2 * y.sin());
        let s = State2D::new(crate::spectral::dealias(&raw_r), crate::spectral::dealias(&raw_w)).unwrap();
        let (_, dw) = limit_rhs(&s, &params);
        // Momentum tendency -div(u (x) u) + Lap u - 2 lambda u - r0 u_perp, built from primitive variables.
        let u = s.velocity(&params);
        let (u1, u2) = (u.component(0), u.component(1));
        let prod = |a: &Field2D, b: &Field2D| a.zip_with(b, |x, y| x * y);
        let flux1 = Field2D::stack(&[&prod(&u1, &u1), &prod(&u1, &u2)]).unwrap();
        let flux2 = Field2D::stack(&[&prod(&u2, &u1), &prod(&u2, &u2)]).unwrap();
        let lap = laplacian_h(&u);
        let r = &s.r0;
        let m1 = div_h(&flux1).unwrap().scale(-1.0).add(&lap.component(0)).sub(&u1.scale(2.0 * params.lambda)).add(&prod(r, &u2));
        let m2 = div_h(&flux2).unwrap().scale(-1.0).add(&lap.component(1)).sub(&u2.scale(2.0 * params.lambda)).sub(&prod(r, &u1));
        let curl = curl_h(&Field2D::stack(&[&m1, &m2]).unwrap()).unwrap();
        assert!(curl.sub(&dw).max_abs() < 1e-11, "{}", curl.sub(&dw).max_abs());
    }
}
