//! Rotating variable-density Navier–Stokes in the slab.
//!
//! ```text
//! d_t rho + div(rho u) = 0,   div u = 0
//! d_t(rho u) + div(rho u (x) u) + (1/eps) e3 x rho u - Lap u + grad p / eps = 0
//! ```
//!
//! with `u3 = 0` and Robin friction on the plates. Momentum uses BDF2 with
//! extrapolated explicit convection; viscosity, friction and rotation are
//! implicit. The velocity lives in the per-mode divergence-free Galerkin
//! space, so the pressure never appears. Variable density enters through a
//! fixed-point iteration preconditioned by the constant-density operator.

mod ledger;
mod quad;
mod robin;
pub mod weak;

pub use ledger::{EnergyLedger, LedgerRow};
pub use quad::SlabQuadrature;
pub use robin::{apply_robin_bc, robin_residual, robin_rows, RobinBvp};

use crate::dense::CMat;
use crate::error::{invalid, Error, Result};
use crate::field::{Field3D, Side};
use crate::galerkin::{gather_frame, implicit_inverse, scatter_frame, Frame, ImplicitCoeffs, ProjectorCache};
use crate::geometry::SlabGeometry;
use crate::regime::RegimeParams;
use crate::transport::{admissible_dt_3d, advect_3d};
use rustfft::num_complex::Complex64;
use std::collections::HashMap;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Density, velocity and time of a slab flow.
#[derive(Debug, Clone)]
pub struct State3D {
    pub rho: Field3D,
    pub u: Field3D,
    pub t: f64,
    pub regime: RegimeParams,
}

impl State3D {
    pub fn new(rho: Field3D, u: Field3D, regime: RegimeParams) -> Result<Self> {
        if rho.ncomp() != 1 || u.ncomp() != 3 {
            return Err(Error::GridMismatch("state needs scalar density and 3-component velocity".into()));
        }
        if !rho.geom().same_grid(u.geom()) {
            return Err(Error::GridMismatch("density and velocity on different grids".into()));
        }
        if (rho.geom().ell - regime.ell).abs() > 1e-14 * regime.ell {
            return Err(Error::GridMismatch(format!(
                "slab half-thickness {} differs from regime ell {}",
                rho.geom().ell,
                regime.ell
            )));
        }
        Ok(Self { rho, u, t: 0.0, regime })
    }

    pub fn geom(&self) -> &SlabGeometry {
        self.rho.geom()
    }

    pub fn momentum(&self) -> Field3D {
        let np = self.rho.phys().len();
        let r = self.rho.phys();
        let data = self.u.phys().iter().enumerate().map(|(i, v)| v * r[i % np]).collect();
        Field3D::from_phys(self.geom(), 3, data).unwrap()
    }

    /// `(1 / 2 ell) * 1/2 int rho |u|^2` on the nodes.
    pub fn kinetic_energy(&self) -> f64 {
        let m = self.momentum();
        0.25 * m.dot(&self.u) / self.regime.ell
    }
}

/// `(1/eps) e3 x (rho u) = (1/eps)(-rho u2, rho u1, 0)`.
pub fn coriolis_term(rho: &Field3D, u: &Field3D, epsilon: f64) -> Result<Field3D> {
    if rho.ncomp() != 1 || u.ncomp() != 3 || !rho.geom().same_grid(u.geom()) {
        return Err(Error::GridMismatch("coriolis_term expects scalar rho and 3-vector u".into()));
    }
    let r = rho.phys();
    let n = r.len();
    let (u1, u2) = (u.comp(0), u.comp(1));
    let mut data = vec![0.0; 3 * n];
    for i in 0..n {
        data[i] = -r[i] * u2[i] / epsilon;
        data[n + i] = r[i] * u1[i] / epsilon;
    }
    Field3D::from_phys(rho.geom(), 3, data)
}

/// Transports the density over one step with the midpoint velocity.
pub fn advect_density(rho: &Field3D, u_mid: &Field3D, dt: f64) -> Result<Field3D> {
    advect_3d(rho, u_mid, dt)
}

/// Rule for the fixed step of a run: `min(cfl * advective, eps_factor * eps, dt_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub cfl: f64,
    pub eps_factor: f64,
    pub dt_max: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            eps_factor: 0.5,
            dt_max: 0.01,
        }
    }
}

/// Advective limit `min(h / max|u_h|, dz_min / max|u3|)` and the transport limit.
pub fn advective_limit(u: &Field3D) -> f64 {
    let g = u.geom();
    let h = g.plane.spacing();
    let dzmin = g.ell * (g.vertical.nodes[1] - g.vertical.nodes[0]);
    let uh = u.comp(0).iter().zip(u.comp(1)).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
    let u3 = u.comp(2).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut lim = f64::INFINITY;
    if uh > 0.0 {
        lim = lim.min(h / uh);
    }
    if u3 > 0.0 {
        lim = lim.min(dzmin / u3);
    }
    lim
}

pub fn choose_dt(state: &State3D, rule: StepRule) -> f64 {
    let adv = rule.cfl * advective_limit(&state.u);
    let sl = 0.9 * admissible_dt_3d(&state.u);
    adv.min(sl).min(rule.eps_factor * state.regime.epsilon).min(rule.dt_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub dt: f64,
    /// Rotation term on or off.
    pub coriolis: bool,
    /// Relaxation of the variable-density fixed point.
    pub damping: f64,
    pub max_inner: usize,
    pub inner_tol: f64,
    /// Advective Courant bound checked at every step.
    pub cfl: f64,
}

impl SolverOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            coriolis: true,
            damping: 1.0,
            max_inner: 50,
            inner_tol: 1e-9,
            cfl: 0.9,
        }
    }
}

/// Per-step report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub inner_iterations: usize,
    pub inner_residual: f64,
    pub ledger: LedgerRow,
}

/// BDF2 stepper with its history and operator caches.
#[derive(Debug)]
pub struct Solver3D {
    geom: SlabGeometry,
    regime: RegimeParams,
    opts: SolverOptions,
    quad: SlabQuadrature,
    rho_ref: f64,
    cache: [HashMap<i64, CMat>; 2],
    u_mixed: Vec<Complex64>,
    prev: Option<History>,
    last_mass: Vec<Complex64>,
    last_conv: Vec<Complex64>,
    rho_levels: Vec<f64>,
    bounds: (f64, f64),
    steps: usize,
    pub ledger: EnergyLedger,
}

#[derive(Debug)]
struct History {
    u_mixed: Vec<Complex64>,
    u_phys: Field3D,
    mass: Vec<Complex64>,
    conv: Vec<Complex64>,
}

impl Solver3D {
    /// Projects the initial velocity onto the discrete divergence-free space,
    /// writes it back into `state`, and opens the energy ledger.
    ///
    /// `initial_energy` is the budget `avg int |m_in|^2 / rho_in`; pass `None` to use the projected state.
    pub fn new(state: &mut State3D, opts: SolverOptions, initial_energy: Option<f64>) -> Result<Self> {
        if !(opts.dt > 0.0 && opts.dt.is_finite()) {
            return Err(invalid("dt", format!("{} must be positive", opts.dt)));
        }
        if !(opts.damping > 0.0 && opts.damping <= 1.0) {
            return Err(invalid("damping", format!("{} not in (0, 1]", opts.damping)));
        }
        let geom = state.geom().clone();
        let quad = SlabQuadrature::new(&geom);
        let (lo, hi) = (state.rho.min(), state.rho.max());
        if lo < 0.0 {
            return Err(invalid("rho", format!("negative density {lo}")));
        }
        let rho_ref = 0.5 * (lo + hi);
        if rho_ref <= 0.0 {
            return Err(invalid("rho", "density vanishes identically"));
        }
        let budget = initial_energy.unwrap_or_else(|| {
            let m = state.momentum();
            0.5 * m.dot(&state.u) / state.regime.ell
        });

        let mut u_mixed = state.u.mixed();
        restrict_to(&quad, &mut u_mixed, 3);
        ProjectorCache::new(&geom).project_mixed(&mut u_mixed);
        state.u = Field3D::from_mixed(&geom, 3, &u_mixed)?;

        let mut solver = Self {
            regime: state.regime,
            quad,
            opts,
            rho_ref,
            cache: [HashMap::new(), HashMap::new()],
            u_mixed,
            prev: None,
            last_mass: Vec::new(),
            last_conv: Vec::new(),
            rho_levels: Vec::new(),
            bounds: (lo, hi),
            steps: 0,
            ledger: EnergyLedger::new(budget),
            geom,
        };
        solver.rho_levels = solver.levels_of_scalar(&state.rho);
        let u_levels = solver.velocity_levels(&solver.u_mixed);
        solver.last_mass = solver.mass_functional(&solver.rho_levels, &u_levels);
        solver.last_conv = solver.convection_functional(&solver.rho_levels, &u_levels);
        let ke = solver.kinetic(&solver.rho_levels, &u_levels);
        solver.ledger.record(state.t, ke, 0.0, 0.0);
        Ok(solver)
    }

    pub fn dt(&self) -> f64 {
        self.opts.dt
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn quadrature(&self) -> &SlabQuadrature {
        &self.quad
    }

    /// Density bounds enforced on the transport.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    fn levels_of_scalar(&self, f: &Field3D) -> Vec<f64> {
        self.quad.to_levels(&f.mixed())
    }

    fn velocity_levels(&self, u: &[Complex64]) -> [Vec<f64>; 3] {
        let sz = self.quad.np() * self.geom.nv();
        [0, 1, 2].map(|c| self.quad.to_levels(&u[c * sz..(c + 1) * sz]))
    }

    fn zero_functional(&self) -> Vec<Complex64> {
        vec![Complex64::default(); 3 * self.quad.np() * self.geom.nv()]
    }

    /// `int rho v . phi` for three level arrays `v`.
    fn mass_functional_of(&self, rho: &[f64], v: [&[f64]; 3]) -> Vec<Complex64> {
        let sz = self.quad.np() * self.geom.nv();
        let ell = self.geom.ell;
        let mut out = self.zero_functional();
        for (c, vc) in v.iter().enumerate() {
            let prod: Vec<f64> = rho.iter().zip(vc.iter()).map(|(a, b)| a * b).collect();
            let s = self.quad.level_spec(&prod);
            self.quad.add_mass(&s, &mut out[c * sz..(c + 1) * sz], ell, |_| Complex64::new(1.0, 0.0));
        }
        out
    }

    fn mass_functional(&self, rho: &[f64], u: &[Vec<f64>; 3]) -> Vec<Complex64> {
        self.mass_functional_of(rho, [&u[0], &u[1], &u[2]])
    }

    /// `int (rho u (x) u) : grad phi`.
    fn convection_functional(&self, rho: &[f64], u: &[Vec<f64>; 3]) -> Vec<Complex64> {
        let sz = self.quad.np() * self.geom.nv();
        let ell = self.geom.ell;
        let plane = &self.geom.plane;
        let mut out = self.zero_functional();
        let ru: Vec<Vec<f64>> = (0..3).map(|i| rho.iter().zip(&u[i]).map(|(a, b)| a * b).collect()).collect();
        for i in 0..3 {
            let dst = &mut out[i * sz..(i + 1) * sz];
            for l in 0..3 {
                let t: Vec<f64> = ru[i].iter().zip(&u[l]).map(|(a, b)| a * b).collect();
                let s = self.quad.level_spec(&t);
                match l {
                    0 => self.quad.add_mass(&s, dst, ell, |idx| -I * plane.kvec(idx).0),
                    1 => self.quad.add_mass(&s, dst, ell, |idx| -I * plane.kvec(idx).1),
                    _ => self.quad.add_dz(&s, dst, 1.0, |_| Complex64::new(1.0, 0.0)),
                }
            }
        }
        out
    }

    /// `int rho (sigma u + (1/eps) e3 x u) . phi` for the new density.
    fn variable_operator(&self, rho: &[f64], u: &[Vec<f64>; 3], sigma: f64) -> Vec<Complex64> {
        let rot = if self.opts.coriolis { 1.0 / self.regime.epsilon } else { 0.0 };
        let v0: Vec<f64> = u[0].iter().zip(&u[1]).map(|(a, b)| sigma * a - rot * b).collect();
        let v1: Vec<f64> = u[1].iter().zip(&u[0]).map(|(a, b)| sigma * a + rot * b).collect();
        let v2: Vec<f64> = u[2].iter().map(|a| sigma * a).collect();
        self.mass_functional_of(rho, [&v0, &v1, &v2])
    }

    /// Adds `-(grad u, grad phi) - 2 alpha (u, phi)_plates` to `r`.
    fn subtract_viscous(&self, u: &[Complex64], r: &mut [Complex64]) {
        let (np, nv) = (self.quad.np(), self.geom.nv());
        let vg = &self.geom.vertical;
        let ell = self.geom.ell;
        let alpha = self.regime.alpha;
        let mut mu = vec![Complex64::default(); nv];
        let mut ku = vec![Complex64::default(); nv];
        for c in 0..3 {
            for &idx in &self.quad.kept {
                let (k1, k2) = self.geom.plane.kvec(idx);
                let kk = k1 * k1 + k2 * k2;
                let base = (c * np + idx) * nv;
                let col = &u[base..base + nv];
                vg.mass.apply_c(col, &mut mu);
                vg.stiff.apply_c(col, &mut ku);
                let dst = &mut r[base..base + nv];
                for j in 0..nv {
                    dst[j] -= mu[j] * (kk * ell) + ku[j] / ell;
                }
                if c < 2 {
                    dst[0] -= col[0] * (2.0 * alpha);
                    dst[nv - 1] -= col[nv - 1] * (2.0 * alpha);
                }
            }
        }
    }

    fn precondition(&mut self, scheme: usize, sigma: f64, r: &[Complex64]) -> Vec<Complex64> {
        let (np, nv) = (self.quad.np(), self.geom.nv());
        let co = ImplicitCoeffs {
            mass: self.rho_ref * sigma,
            rotation: if self.opts.coriolis { self.rho_ref / self.regime.epsilon } else { 0.0 },
            alpha: self.regime.alpha,
        };
        let mut out = vec![Complex64::default(); r.len()];
        let mut x = vec![Complex64::default(); 3 * nv];
        let mut y = vec![Complex64::default(); 3 * nv];
        for &idx in &self.quad.kept {
            let (k1, k2) = self.geom.plane.kvec(idx);
            let key = self.geom.plane.int_k2(idx);
            let g = self.cache[scheme]
                .entry(key)
                .or_insert_with(|| implicit_inverse(&self.geom.vertical, self.geom.ell, k1 * k1 + k2 * k2, co));
            let fr = Frame::new(k1, k2);
            gather_frame(r, np, nv, idx, fr, &mut x);
            g.apply(&x, &mut y);
            scatter_frame(&y, np, nv, idx, fr, &mut out);
        }
        out
    }

    fn kinetic(&self, rho: &[f64], u: &[Vec<f64>; 3]) -> f64 {
        let mut e = 0.0;
        for uc in u {
            let ru: Vec<f64> = rho.iter().zip(uc).map(|(a, b)| a * b).collect();
            e += self.quad.integrate_product(&ru, uc);
        }
        0.25 * e / self.geom.ell
    }

    /// `(avg int |grad u|^2, (alpha/ell) int |u_h(+ell)|^2 + |u_h(-ell)|^2)`.
    fn dissipation_rates(&self, u: &[Complex64]) -> (f64, f64) {
        let (np, nv) = (self.quad.np(), self.geom.nv());
        let vg = &self.geom.vertical;
        let ell = self.geom.ell;
        let area = self.geom.plane.area();
        let mut grad = 0.0;
        let mut bdry = 0.0;
        let mut mu = vec![Complex64::default(); nv];
        let mut ku = vec![Complex64::default(); nv];
        for c in 0..3 {
            for &idx in &self.quad.kept {
                let (k1, k2) = self.geom.plane.kvec(idx);
                let col = &u[(c * np + idx) * nv..(c * np + idx + 1) * nv];
                vg.mass.apply_c(col, &mut mu);
                vg.stiff.apply_c(col, &mut ku);
                let m: f64 = col.iter().zip(&mu).map(|(a, b)| (a.conj() * b).re).sum();
                let k: f64 = col.iter().zip(&ku).map(|(a, b)| (a.conj() * b).re).sum();
                grad += (k1 * k1 + k2 * k2) * ell * m + k / ell;
                if c < 2 {
                    bdry += col[0].norm_sqr() + col[nv - 1].norm_sqr();
                }
            }
        }
        (
            area * grad / (2.0 * ell),
            area * self.regime.alpha / ell * bdry,
        )
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut State3D) -> Result<StepInfo> {
        let dt = self.opts.dt;
        let admissible = (self.opts.cfl * advective_limit(&state.u)).min(admissible_dt_3d(&state.u));
        if dt > admissible {
            return Err(Error::CflViolation { dt, admissible });
        }
        let u_mid = match &self.prev {
            Some(h) => state.u.zip_with(&h.u_phys, |a, b| 1.5 * a - 0.5 * b),
            None => state.u.clone(),
        };
        let rho_new = advect_density(&state.rho, &u_mid, dt)?;
        let (lo, hi) = self.bounds;
        let tol = 1e-12 * hi.abs().max(1.0);
        let (rmin, rmax) = (rho_new.min(), rho_new.max());
        if rmin < lo - tol || rmax > hi + tol || !rmin.is_finite() || !rmax.is_finite() {
            return Err(Error::DensityBound {
                t: state.t + dt,
                min: rmin,
                max: rmax,
                lower: lo,
                upper: hi,
            });
        }
        let rho_new_levels = self.levels_of_scalar(&rho_new);

        let (scheme, sigma, mut rhs) = match &self.prev {
            Some(h) => {
                let mut rhs = self.zero_functional();
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r = self.last_mass[i] * (2.0 / dt) - h.mass[i] * (0.5 / dt) + self.last_conv[i] * 2.0 - h.conv[i];
                }
                (1, 1.5 / dt, rhs)
            }
            None => {
                let rhs: Vec<Complex64> = self
                    .last_mass
                    .iter()
                    .zip(&self.last_conv)
                    .map(|(m, c)| m / dt + c)
                    .collect();
                (0, 1.0 / dt, rhs)
            }
        };
        let rhs_norm = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !rhs_norm.is_finite() {
            return Err(Error::NonFinite("momentum right-hand side"));
        }

        let mut u = match &self.prev {
            Some(h) => self.u_mixed.iter().zip(&h.u_mixed).map(|(a, b)| 2.0 * a - b).collect(),
            None => self.u_mixed.clone(),
        };
        let mut iterations = 0;
        let mut rel = f64::INFINITY;
        while iterations < self.opts.max_inner {
            iterations += 1;
            let levels = self.velocity_levels(&u);
            let op = self.variable_operator(&rho_new_levels, &levels, sigma);
            let mut r: Vec<Complex64> = rhs.iter().zip(&op).map(|(a, b)| a - b).collect();
            self.subtract_viscous(&u, &mut r);
            let du = self.precondition(scheme, sigma, &r);
            let dn = du.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let un = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for (a, b) in u.iter_mut().zip(&du) {
                *a += b * self.opts.damping;
            }
            rel = if un > 0.0 { dn / un } else { dn };
            if !rel.is_finite() {
                return Err(Error::NonFinite("velocity"));
            }
            if rel <= self.opts.inner_tol {
                break;
            }
        }
        if rel > self.opts.inner_tol {
            return Err(Error::NonConvergence {
                iterations,
                residual: rel,
            });
        }
        rhs.clear();

        let levels = self.velocity_levels(&u);
        let new_mass = self.mass_functional(&rho_new_levels, &levels);
        let new_conv = self.convection_functional(&rho_new_levels, &levels);
        let ke = self.kinetic(&rho_new_levels, &levels);
        let (grad, bdry) = self.dissipation_rates(&u);

        let u_phys_new = Field3D::from_mixed(&self.geom, 3, &u)?;
        let old_u = std::mem::replace(&mut state.u, u_phys_new);
        let old_mixed = std::mem::replace(&mut self.u_mixed, u);
        self.prev = Some(History {
            u_mixed: old_mixed,
            u_phys: old_u,
            mass: std::mem::replace(&mut self.last_mass, new_mass),
            conv: std::mem::replace(&mut self.last_conv, new_conv),
        });
        self.rho_levels = rho_new_levels;
        state.rho = rho_new;
        state.t += dt;
        self.steps += 1;
        let row = self.ledger.record(state.t, ke, dt * grad, dt * bdry);
        Ok(StepInfo {
            inner_iterations: iterations,
            inner_residual: rel,
            ledger: row,
        })
    }

    /// Current velocity as Fourier coefficients at the vertical nodes.
    pub fn velocity_mixed(&self) -> &[Complex64] {
        &self.u_mixed
    }

    /// Density on the quadrature levels, as used by the momentum products.
    pub fn density_levels(&self) -> &[f64] {
        &self.rho_levels
    }
}

fn restrict_to(quad: &SlabQuadrature, mixed: &mut [Complex64], ncomp: usize) {
    let (np, nv) = (quad.np(), quad.geom.nv());
    for c in 0..ncomp {
        for idx in 0..np {
            if !quad.geom.plane.dealias_keep(idx) {
                mixed[(c * np + idx) * nv..(c * np + idx + 1) * nv].fill(Complex64::default());
            }
        }
    }
}

/// One step of `solver` on `state`.
pub fn step_imex(solver: &mut Solver3D, state: &mut State3D) -> Result<StepInfo> {
    solver.step(state)
}

/// Boundary value of the horizontal velocity on one plate.
pub fn plate_velocity(u: &Field3D, side: Side) -> crate::field::Field2D {
    let t = crate::field::boundary_trace(u, side);
    let np = t.plane().npts();
    crate::field::Field2D::from_phys(t.plane(), 2, t.phys()[..2 * np].to_vec()).unwrap()
}

#[cfg(test)]
mod tests;
