use super::*;
use crate::regime::RegimeParams;
use crate::spectral::div3;
use std::f64::consts::PI;

fn setup(nh: usize, nv: usize, eps: f64, ell: f64, alpha: f64) -> (SlabGeometry, RegimeParams) {
    (
        SlabGeometry::new(2.0 * PI, nh, nv, ell).unwrap(),
        RegimeParams::new(1, eps, ell, alpha).unwrap(),
    )
}

#[test]
fn coriolis_sign() {
    let (g, _) = setup(8, 5, 0.1, 0.1, 0.1);
    let rho = Field3D::from_fn(&g, 1, |_, _, _, _| 1.0);
    let u = Field3D::from_fn(&g, 3, |c, _, _, _| if c == 0 { 1.0 } else { 0.0 });
    let f = coriolis_term(&rho, &u, 0.1).unwrap();
    assert!(f.comp(0).iter().all(|v| v.abs() < 1e-15));
    assert!(f.comp(1).iter().all(|v| (v - 10.0).abs() < 1e-12));
}

#[test]
fn inertial_oscillation_frequency() {
    let eps = 0.1;
    let (g, reg) = setup(8, 5, eps, 0.5, 1e-12);
    let rho = Field3D::from_fn(&g, 1, |_, _, _, _| 1.0);
    let u = Field3D::from_fn(&g, 3, |c, _, _, _| if c == 0 { 1.0 } else { 0.0 });
    let mut s = State3D::new(rho, u, reg).unwrap();
    let dt = 2e-5;
    let mut solver = Solver3D::new(&mut s, SolverOptions::new(dt), None).unwrap();
    // Integrate to a quarter period and read the phase.
    let steps = ((0.5 * PI * eps) / dt).round() as usize;
    for _ in 0..steps {
        solver.step(&mut s).unwrap();
    }
    let (u1, u2) = (s.u.comp(0)[0], s.u.comp(1)[0]);
    // u1 = cos(t/eps), u2 = -sin(t/eps).
    let phase = (-u2).atan2(u1);
    let freq = phase / s.t;
    assert!((freq * eps - 1.0).abs() < 1e-6, "relative frequency error {}", freq * eps - 1.0);
}

#[test]
fn friction_eigenmode_decay_rate() {
    // Horizontally uniform shear without rotation: u_t = u_zz, u_z = -+2 alpha u on the plates.
    let (ell, alpha) = (0.5, 0.8);
    let (g, reg) = setup(8, 17, 1.0, ell, alpha);
    // Smallest root of mu tan(mu ell) = 2 alpha.
    let mut mu: f64 = 1.0;
    for _ in 0..60 {
        let f = mu * (mu * ell).tan() - 2.0 * alpha;
        let df = (mu * ell).tan() + mu * ell / (mu * ell).cos().powi(2);
        mu -= f / df;
    }
    let rho = Field3D::from_fn(&g, 1, |_, _, _, _| 1.0);
    let u = Field3D::from_fn(&g, 3, |c, _, _, z| if c == 0 { (mu * z).cos() } else { 0.0 });
    let mut s = State3D::new(rho, u, reg).unwrap();
    let mut opts = SolverOptions::new(1e-3);
    opts.coriolis = false;
    let mut solver = Solver3D::new(&mut s, opts, None).unwrap();
    let a0 = s.u.comp(0)[g.nv() / 2];
    for _ in 0..200 {
        solver.step(&mut s).unwrap();
    }
    let a1 = s.u.comp(0)[g.nv() / 2];
    let rate = -(a1 / a0).ln() / s.t;
    assert!((rate / (mu * mu) - 1.0).abs() < 1e-5, "{rate} vs {}", mu * mu);
}

#[test]
fn incompressible_and_impermeable_after_steps() {
    let (g, reg) = setup(16, 9, 0.2, 0.2, 0.2);
    let rho = Field3D::from_fn(&g, 1, |_, x, y, z| 1.0 + 0.2 * (x + y).sin() + z);
    let u = Field3D::from_fn(&g, 3, |c, x, y, z| match c {
        0 => y.sin() + 0.5 * z / 0.2 * x.cos(),
        1 => x.cos(),
        _ => 0.0,
    });
    let mut s = State3D::new(rho.clone(), u, reg).unwrap();
    let dt = choose_dt(&s, StepRule::default());
    let mut solver = Solver3D::new(&mut s, SolverOptions::new(dt), None).unwrap();
    for _ in 0..10 {
        solver.step(&mut s).unwrap();
        let d = div3(&s.u).unwrap();
        assert!(d.max_abs() <= 1e-10, "div {}", d.max_abs());
        let top = crate::field::boundary_trace(&s.u, Side::Top);
        let bot = crate::field::boundary_trace(&s.u, Side::Bottom);
        let np = g.plane.npts();
        assert!(top.phys()[2 * np..].iter().chain(&bot.phys()[2 * np..]).all(|v| v.abs() < 1e-12));
    }
    assert!((s.rho.integral(0) - rho.integral(0)).abs() <= 1e-10 * rho.integral(0));
    assert!(s.rho.min() >= rho.min() && s.rho.max() <= rho.max());
    assert!(solver.ledger.holds(1e-10));
}

#[test]
fn constant_density_energy_is_non_increasing() {
    let (g, reg) = setup(16, 9, 0.25, 0.25, 0.25);
    let rho = Field3D::from_fn(&g, 1, |_, _, _, _| 1.0);
    let u = Field3D::from_fn(&g, 3, |c, x, y, z| match c {
        0 => (2.0 * y).sin() * (1.0 + z),
        1 => x.cos() - z * y.sin(),
        _ => 0.0,
    });
    let mut s = State3D::new(rho, u, reg).unwrap();
    let mut solver = Solver3D::new(&mut s, SolverOptions::new(0.005), None).unwrap();
    let e0 = solver.ledger.rows[0].kinetic;
    for _ in 0..40 {
        let info = solver.step(&mut s).unwrap();
        assert!(info.inner_iterations <= 2);
        let r = info.ledger;
        assert!(r.kinetic + r.dissipation + r.boundary <= e0 * (1.0 + 1e-3), "{r}");
    }
    assert!(solver.ledger.rows.last().unwrap().kinetic < e0);
}

#[test]
fn rejects_oversized_step() {
    let (g, reg) = setup(16, 5, 0.5, 0.5, 0.5);
    let rho = Field3D::from_fn(&g, 1, |_, _, _, _| 1.0);
    let u = Field3D::from_fn(&g, 3, |c, _, y, _| if c == 0 { 5.0 * y.sin() } else { 0.0 });
    let mut s = State3D::new(rho, u, reg).unwrap();
    let mut solver = Solver3D::new(&mut s, SolverOptions::new(0.5), None).unwrap();
    assert!(matches!(solver.step(&mut s), Err(Error::CflViolation { .. })));
}
