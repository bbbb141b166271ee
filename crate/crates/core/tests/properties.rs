use proptest::prelude::*;
use std::f64::consts::TAU;

use thinslab_core::data::{gen_initial_data, AdmissibilityLimits, DataSpec, DensityProfile, PerturbationProfile, VelocityProfile};
use thinslab_core::diagnostics::{jensen_l2, jensen_linf, poincare_defect, POINCARE_CONSTANT};
use thinslab_core::experiment::{SweepReport, SweepRow};
use thinslab_core::field::{Field2D, Field3D};
use thinslab_core::fit::fit_rate;
use thinslab_core::geometry::{PlaneGeometry, SlabGeometry};
use thinslab_core::regime::{make_regime_sequence, LambdaLimit, PowerLaw, RegimeParams};
use thinslab_core::snapshot::{read_field3d, write_field3d, Representation};
use thinslab_core::spectral::{leray_project_2d, spectral_cutoff};
use thinslab_core::transport::{admissible_dt_2d, advect_2d};

/// Trigonometric field with a handful of random modes.
fn planar(plane: &PlaneGeometry, ncomp: usize, c: &[f64]) -> Field2D {
    Field2D::from_fn(plane, ncomp, |comp, x, y| {
        let s = comp as f64;
        c[0] * (x + s).sin() + c[1] * (2.0 * y - s).cos() + c[2] * (x - 3.0 * y).sin() + c[3] * (4.0 * x + y).cos()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn planar_leray_is_an_orthogonal_projector(a in coeffs(), b in coeffs()) {
        let plane = PlaneGeometry::new(TAU, 16).unwrap();
        let (u, v) = (planar(&plane, 2, &a), planar(&plane, 2, &b));
        let pu = leray_project_2d(&u).unwrap();
        let pv = leray_project_2d(&v).unwrap();
        let scale = 1.0 + u.norm() * v.norm();
        prop_assert!(leray_project_2d(&pu).unwrap().sub(&pu).max_abs() <= 1e-12 * (1.0 + u.max_abs()));
        prop_assert!((pu.dot(&v) - u.dot(&pv)).abs() <= 1e-12 * scale);
        prop_assert!(pu.norm() <= u.norm() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn cutoffs_are_nested(a in coeffs(), m in 0i32..4) {
        let plane = PlaneGeometry::new(TAU, 32).unwrap();
        let f = planar(&plane, 1, &a).map(|v| (0.3 * v).exp());
        let low = spectral_cutoff(&f, m);
        prop_assert!(spectral_cutoff(&low, m + 1).sub(&low).max_abs() <= 1e-12);
        prop_assert!(spectral_cutoff(&f, m).norm() <= f.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn jensen_orderings_hold(a in coeffs(), ell in 0.01..1.0f64, tilt in -3.0..3.0f64) {
        let g = SlabGeometry::new(TAU, 8, 9, ell).unwrap();
        let f = Field3D::from_fn(&g, 2, |c, x, y, z| {
            let s = z / ell;
            a[c] * x.sin() + a[c + 2] * y.cos() * s + tilt * s * s
        });
        prop_assert!(jensen_l2(&f).ordered(1e-12));
        prop_assert!(jensen_linf(&f).ordered(1e-12));
        prop_assert!(poincare_defect(&f).ratio <= POINCARE_CONSTANT * (1.0 + 1e-9));
    }

    #[test]
    fn exact_power_laws_fit_exactly(p in -3.0..3.0f64, c in 0.01..100.0f64, n in 3usize..10) {
        let xs: Vec<f64> = (0..n).map(|i| 0.3 * 0.6f64.powi(i as i32)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(p)).collect();
        let f = fit_rate(&xs, &ys).unwrap();
        prop_assert!((f.exponent - p).abs() <= 1e-10);
        prop_assert!((f.constant / c - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn transport_respects_bounds(a in coeffs(), b in coeffs(), frac in 0.1..1.0f64) {
        let plane = PlaneGeometry::new(TAU, 32).unwrap();
        let rho = planar(&plane, 1, &a).map(|v| 1.0 + 0.1 * v);
        let u = leray_project_2d(&planar(&plane, 2, &b)).unwrap();
        let dt = frac * admissible_dt_2d(&u).min(0.1);
        let next = advect_2d(&rho, &u, dt).unwrap();
        prop_assert!(next.min() >= rho.min() - 1e-12);
        prop_assert!(next.max() <= rho.max() + 1e-12);
    }

    #[test]
    fn snapshots_roundtrip_bitwise(a in coeffs(), ell in 0.01..2.0f64) {
        let g = SlabGeometry::new(5.0, 8, 5, ell).unwrap();
        let f = Field3D::from_fn(&g, 2, |c, x, y, z| a[c] * x.sin() + a[c + 1] * y * z);
        let mut buf = Vec::new();
        write_field3d(&mut buf, &f, Representation::Physical).unwrap();
        let back = read_field3d(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.phys(), f.phys());
        prop_assert_eq!(back.geom().ell, ell);
    }

    #[test]
    fn matched_exponents_have_finite_lambda(ca in 0.1..10.0f64, cl in 0.1..10.0f64, p in 0.5..2.5f64) {
        let seq = make_regime_sequence(3, 12, PowerLaw::new(cl, p), PowerLaw::new(ca, p)).unwrap();
        for r in &seq {
            prop_assert!((r.lambda() - ca / cl).abs() <= 1e-9 * ca / cl);
        }
        prop_assert_eq!(LambdaLimit::of(PowerLaw::new(cl, p), PowerLaw::new(ca, p)), LambdaLimit::Finite(ca / cl));
        prop_assert!(seq.windows(2).all(|w| w[1].epsilon < w[0].epsilon && w[1].ell < w[0].ell));
    }

    #[test]
    fn verdicts_ignore_row_order(seed in 0u64..1000) {
        let mut rows: Vec<SweepRow> = (4..10u32)
            .map(|n| {
                let eps = 1.0 / n as f64;
                let wobble = 1.0 + 0.05 * (((seed + n as u64) % 7) as f64 / 7.0);
                SweepRow {
                    n,
                    epsilon: eps,
                    ell: eps,
                    alpha: eps,
                    quantities: [("v3".to_string(), eps * wobble), ("e".to_string(), eps * eps), ("ledger_slack".to_string(), 0.1)]
                        .into_iter()
                        .collect(),
                }
            })
            .collect();
        let a = SweepReport::from_rows(LambdaLimit::Finite(1.0), rows.clone()).unwrap();
        let k = (seed % rows.len() as u64) as usize;
        rows.rotate_left(k);
        rows.reverse();
        let b = SweepReport::from_rows(LambdaLimit::Finite(1.0), rows).unwrap();
        prop_assert_eq!(a.verdicts, b.verdicts);
        prop_assert_eq!(a.fits, b.fits);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn admissibility_is_monotone_in_eps(amp in -1.5..1.5f64, n in 2u32..6) {
        let spec = DataSpec {
            rho0: DensityProfile::SinSin { amplitude: 0.5 },
            r_in: PerturbationProfile::Sine { amplitude: amp },
            u_in: VelocityProfile::Cellular { amplitude: 1.0 },
            seed: 0,
        };
        let limits = AdmissibilityLimits::default();
        let accepted = |n: u32| {
            let eps = 1.0 / n as f64;
            let g = SlabGeometry::new(TAU, 16, 5, eps).unwrap();
            gen_initial_data(&spec, &RegimeParams::new(n, eps, eps, eps).unwrap(), &g, &limits).is_ok()
        };
        if accepted(n) {
            for m in n + 1..n + 4 {
                prop_assert!(accepted(m), "accepted at n = {} but not at n = {}", n, m);
            }
        }
    }
}

#[test]
fn strong_perturbation_is_rejected_then_accepted() {
    let spec = DataSpec {
        rho0: DensityProfile::Constant { value: 1.0 },
        r_in: PerturbationProfile::Constant { value: -3.0 },
        u_in: VelocityProfile::Zero,
        seed: 0,
    };
    let limits = AdmissibilityLimits::default();
    let check = |n: u32| {
        let eps = 1.0 / n as f64;
        let g = SlabGeometry::new(TAU, 8, 5, eps).unwrap();
        gen_initial_data(&spec, &RegimeParams::new(n, eps, eps, eps).unwrap(), &g, &limits)
    };
    assert!(check(2).is_err());
    assert!(check(4).is_ok());
}
