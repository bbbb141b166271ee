use std::f64::consts::TAU;

use thinslab_core::data::{DataSpec, DensityProfile, PerturbationProfile, VelocityProfile};
use thinslab_core::diagnostics::{mass_identity_residual, vorticity_eq_residual};
use thinslab_core::experiment::{run_single, RunSettings};
use thinslab_core::field::{vertical_average, Field2D, Field3D};
use thinslab_core::geometry::SlabGeometry;
use thinslab_core::regime::RegimeParams;
use thinslab_core::solver3d::weak::{averaged_vorticity_test, weak_residual_mass, weak_residual_momentum, SeparableTest};
use thinslab_core::solver3d::{Solver3D, SolverOptions, State3D};

fn run(state: &mut State3D, opts: SolverOptions, steps: usize) -> Vec<State3D> {
    let mut solver = Solver3D::new(state, opts, None).unwrap();
    let mut hist = vec![state.clone()];
    for _ in 0..steps {
        solver.step(state).unwrap();
        hist.push(state.clone());
    }
    hist
}

#[test]
fn rest_state_stays_at_rest() {
    let g = SlabGeometry::new(TAU, 8, 9, 0.25).unwrap();
    let rho = Field3D::from_fn(&g, 1, |_, x, y, _| 1.0 + 0.3 * x.sin() * y.cos());
    let r = RegimeParams::new(4, 0.25, 0.25, 0.5).unwrap();
    let mut s = State3D::new(rho.clone(), Field3D::zeros(&g, 3), r).unwrap();
    run(&mut s, SolverOptions::new(0.01), 10);
    assert!(s.u.max_abs() <= 1e-14, "{}", s.u.max_abs());
    assert!(s.rho.sub(&rho).max_abs() <= 1e-12);
}

#[test]
fn viscous_shear_decays_at_heat_rate() {
    let amp = 0.7;
    let g = SlabGeometry::new(TAU, 8, 5, 1.0).unwrap();
    let r = RegimeParams::new(1, 1.0, 1.0, 0.0).unwrap();
    let u = Field3D::from_fn(&g, 3, |c, _, y, _| if c == 0 { amp * y.sin() } else { 0.0 });
    let mut s = State3D::new(Field3D::from_fn(&g, 1, |_, _, _, _| 1.0), u, r).unwrap();
    let mut opts = SolverOptions::new(1e-3);
    opts.coriolis = false;
    run(&mut s, opts, 100);
    let exact = Field3D::from_fn(&g, 3, |c, _, y, _| if c == 0 { amp * (-s.t).exp() * y.sin() } else { 0.0 });
    let rel = s.u.sub(&exact).max_abs() / exact.max_abs();
    assert!((s.t - 0.1).abs() < 1e-12);
    assert!(rel <= 1e-6, "relative error {rel:e}");
}

fn columnar_run(alpha: f64) -> State3D {
    let g = SlabGeometry::new(TAU, 16, 9, 0.2).unwrap();
    let r = RegimeParams::new(5, 0.2, 0.2, alpha).unwrap();
    let u = Field3D::from_fn(&g, 3, |c, x, y, _| match c {
        0 => y.sin() + 0.5 * (x + 2.0 * y).cos(),
        1 => x.cos() - 0.25 * (x + 2.0 * y).cos(),
        _ => 0.0,
    });
    let mut s = State3D::new(Field3D::from_fn(&g, 1, |_, _, _, _| 1.0), u, r).unwrap();
    run(&mut s, SolverOptions::new(0.01), 30);
    s
}

#[test]
fn columnar_data_keep_averaged_vertical_velocity_zero() {
    // Plate friction drives boundary layers, so only the average stays zero.
    let s = columnar_run(0.4);
    let ubar3 = vertical_average(&s.u).component(2).max_abs();
    assert!(ubar3 <= 1e-10, "{ubar3:e}");
    assert!(s.u.component(2).max_abs() > 1e-6);

    let s = columnar_run(0.0);
    assert!(s.u.component(2).max_abs() <= 1e-10);
    assert!(vertical_average(&s.u).component(2).max_abs() <= 1e-10);
}

struct WeakCase {
    geom: SlabGeometry,
    regime: RegimeParams,
    rho: Field3D,
    u: Field3D,
}

fn weak_case(nh: usize) -> WeakCase {
    let geom = SlabGeometry::new(TAU, nh, 9, 0.25).unwrap();
    let rho = Field3D::from_fn(&geom, 1, |_, x, y, z| 1.0 + 0.25 * (x - y).sin() + 0.1 * x.cos() * z / 0.25);
    let u = thinslab_core::spectral::leray_project_3d(&Field3D::from_fn(&geom, 3, |c, x, y, z| match c {
        0 => y.sin() + 2.0 * z * x.cos(),
        1 => 0.5 * x.sin(),
        _ => 0.0,
    }))
    .unwrap();
    WeakCase {
        regime: RegimeParams::new(4, 0.25, 0.25, 0.25).unwrap(),
        geom,
        rho,
        u,
    }
}

impl WeakCase {
    fn history(&self, t_end: f64, steps: usize) -> Vec<State3D> {
        let mut s = State3D::new(self.rho.clone(), self.u.clone(), self.regime).unwrap();
        run(&mut s, SolverOptions::new(t_end / steps as f64), steps)
    }
}

#[test]
fn momentum_weak_residual_vanishes_with_the_step() {
    let t_end = 0.2;
    let case = weak_case(16);
    let phi = Field2D::from_fn(&case.geom.plane, 1, |_, x, y| (x + y).cos() + 0.5 * (2.0 * x).sin());
    let psi = averaged_vorticity_test(&phi, &case.geom).unwrap();
    let res: Vec<f64> = [20usize, 40, 80]
        .iter()
        .map(|&n| {
            let test = SeparableTest::quadratic_decay(t_end, psi.clone());
            weak_residual_momentum(&case.history(t_end, n), &test, true).unwrap().abs()
        })
        .collect();
    for w in res.windows(2) {
        assert!(w[1] < 0.4 * w[0], "{res:?}");
    }
    assert!(res[2] < 1e-4, "{res:?}");
}

#[test]
fn mass_weak_residual_vanishes_with_the_grid() {
    let t_end = 0.2;
    let res: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&nh| {
            let case = weak_case(nh);
            let scalar = Field3D::from_fn(&case.geom, 1, |_, x, y, z| x.sin() * y.cos() * (1.0 + z));
            let test = SeparableTest::quadratic_decay(t_end, scalar);
            weak_residual_mass(&case.history(t_end, 40), &test).unwrap().abs()
        })
        .collect();
    for w in res.windows(2) {
        assert!(w[1] < 0.5 * w[0], "{res:?}");
    }
    assert!(res[2] < 1e-4, "{res:?}");
}

#[test]
fn averaged_identity_residuals_are_sampled_consistently() {
    let data = DataSpec {
        rho0: DensityProfile::Constant { value: 1.0 },
        r_in: PerturbationProfile::Sine { amplitude: 1.0 },
        u_in: VelocityProfile::Cellular { amplitude: 1.0 },
        seed: 3,
    };
    let mut settings = RunSettings::new(data);
    settings.nh = 16;
    settings.nv = 9;
    settings.dt = Some(0.005);
    settings.t_final = 0.4;
    settings.diag_stride = 1;
    let r = RegimeParams::new(4, 0.25, 0.25, 0.25).unwrap();
    let out = run_single(&settings, &r).unwrap();
    assert!(out.norms.limit_error.is_some());
    assert!(out.ledger.min_relative_slack() >= -1e-6);
    let rho0 = DensityProfile::Constant { value: 1.0 }.field(out.samples[0].geom());
    // At finite eps the residual is the physical defect, so refining the
    // sample spacing only removes the differencing part.
    let at = |stride: usize| {
        let sm: Vec<State3D> = out.samples.iter().step_by(stride).cloned().collect();
        let vort = vorticity_eq_residual(&sm, &rho0).unwrap();
        let mass = mass_identity_residual(&sm, &rho0).unwrap();
        assert!(!vort.is_empty() && vort.len() <= sm.len());
        assert!(!mass.is_empty() && mass.len() <= sm.len());
        assert!(vort.iter().chain(mass.iter()).all(|x| x.norm().is_finite()));
        let pick = |v: &[thinslab_core::diagnostics::TimedResidual]| v.iter().find(|x| (x.t - 0.2).abs() < 1e-9).unwrap().norm();
        (pick(&vort), pick(&mass))
    };
    let (coarse, fine) = (at(4), at(2));
    assert!(fine.0 <= coarse.0 * (1.0 + 1e-9), "vorticity {coarse:?} -> {fine:?}");
    assert!(fine.1 <= coarse.1 * 1.05, "mass {coarse:?} -> {fine:?}");
}
