//! Thin-layer Poincaré inequality, averaging-product defect and Jensen orderings.

use super::fields::fluctuation;
use crate::error::{Error, Result};
use crate::field::{vertical_average, Field3D};
use crate::spectral::gradient_norm_sq;

/// Sharp constant of `avg int |u - avg u|^2 <= C ell int |Du|^2` on `(-ell, ell)`.
pub const POINCARE_CONSTANT: f64 = 2.0 / (std::f64::consts::PI * std::f64::consts::PI);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareDefect {
    /// `(1 / 2ell) int |u - avg u|^2`.
    pub lhs: f64,
    /// `ell int |Du|^2`.
    pub rhs: f64,
    pub ratio: f64,
}

pub fn poincare_defect(u: &Field3D) -> PoincareDefect {
    let ell = u.geom().ell;
    let lhs = fluctuation(u).norm_sq() / (2.0 * ell);
    let rhs = ell * gradient_norm_sq(u);
    PoincareDefect {
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingDefect {
    /// `|| avg(f u) - avg f avg u ||_{L2(T^2)}`.
    pub defect: f64,
    /// Root-mean-square of the same quantity over the torus.
    pub defect_rms: f64,
    /// `sqrt(2 C) ell ||f||_inf (avg int |Du|^2)^{1/2}` with `C` the Poincaré constant.
    pub bound: f64,
}

pub fn averaging_product_defect(f: &Field3D, u: &Field3D) -> Result<AveragingDefect> {
    if f.ncomp() != 1 || !f.geom().same_grid(u.geom()) {
        return Err(Error::GridMismatch("averaging defect needs a scalar and a field on one slab".into()));
    }
    let g = u.geom();
    let n = f.phys().len();
    let fu_data: Vec<f64> = u.phys().iter().enumerate().map(|(i, v)| v * f.phys()[i % n]).collect();
    let fu = Field3D::from_phys(g, u.ncomp(), fu_data)?;
    let avg_fu = vertical_average(&fu);
    let fbar = vertical_average(f);
    let ubar = vertical_average(u);
    let np = g.plane.npts();
    let diff: Vec<f64> = avg_fu
        .phys()
        .iter()
        .enumerate()
        .map(|(i, v)| v - fbar.phys()[i % np] * ubar.phys()[i])
        .collect();
    let h2 = g.plane.spacing().powi(2);
    let defect = (h2 * diff.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let avg_du = gradient_norm_sq(u) / (2.0 * g.ell);
    let bound = (2.0 * POINCARE_CONSTANT).sqrt() * g.ell * f.max_abs() * avg_du.sqrt();
    Ok(AveragingDefect {
        defect,
        defect_rms: defect / g.plane.area().sqrt(),
        bound,
    })
}

/// `(norm of the average, average of the norm)`; the first never exceeds the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenPair {
    pub norm_of_average: f64,
    pub average_of_norm: f64,
}

impl JensenPair {
    pub fn ordered(&self, rtol: f64) -> bool {
        self.norm_of_average <= self.average_of_norm * (1.0 + rtol) + 1e-300
    }
}

/// Horizontal L2 norm of the average against the root of the averaged squared L2 norm.
pub fn jensen_l2(f: &Field3D) -> JensenPair {
    let g = f.geom();
    JensenPair {
        norm_of_average: vertical_average(f).norm(),
        average_of_norm: (f.norm_sq() / (2.0 * g.ell)).sqrt(),
    }
}

/// Sup norm of the average against the vertical average of horizontal sup norms.
pub fn jensen_linf(f: &Field3D) -> JensenPair {
    let g = f.geom();
    let nv = g.nv();
    let np = g.plane.npts();
    let mut level_max = vec![0.0f64; nv];
    for c in 0..f.ncomp() {
        for p in 0..np {
            for (j, v) in f.column(c, p).iter().enumerate() {
                level_max[j] = level_max[j].max(v.abs());
            }
        }
    }
    JensenPair {
        norm_of_average: vertical_average(f).max_abs(),
        average_of_norm: g.vertical.average(&level_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SlabGeometry;
    use std::f64::consts::PI;

    #[test]
    fn linear_profile_ratio_is_one_sixth() {
        for ell in [0.5, 0.1, 0.02] {
            let g = SlabGeometry::new(2.0 * PI, 8, 9, ell).unwrap();
            let u = Field3D::from_fn(&g, 3, |c, _, _, z| if c == 0 { z } else { 0.0 });
            let d = poincare_defect(&u);
            assert!((d.ratio - 1.0 / 6.0).abs() < 1e-12, "{}", d.ratio);
        }
    }

    #[test]
    fn sine_profile_ratio() {
        let ell = 0.3;
        let g = SlabGeometry::new(2.0 * PI, 8, 33, ell).unwrap();
        let u = Field3D::from_fn(&g, 3, |c, _, _, z| if c == 0 { (PI * z / ell).sin() } else { 0.0 });
        let d = poincare_defect(&u);
        assert!((d.ratio - 1.0 / (2.0 * PI * PI)).abs() < 1e-9);
        assert!(d.ratio <= POINCARE_CONSTANT);
    }

    #[test]
    fn product_defect_closed_form() {
        let g = SlabGeometry::new(1.0, 8, 9, 0.5).unwrap();
        let f = Field3D::from_fn(&g, 1, |_, _, _, z| z);
        let u = Field3D::from_fn(&g, 3, |c, _, _, z| if c == 0 { z } else { 0.0 });
        let d = averaging_product_defect(&f, &u).unwrap();
        assert!((d.defect_rms - 1.0 / 12.0).abs() < 1e-12);
        assert!(d.defect <= d.bound);
    }

    #[test]
    fn jensen_on_profile() {
        let g = SlabGeometry::new(2.0 * PI, 8, 9, 0.2).unwrap();
        let f = Field3D::from_fn(&g, 1, |_, x, _, z| x.sin() + 5.0 * z);
        assert!(jensen_l2(&f).ordered(1e-12));
        assert!(jensen_linf(&f).ordered(1e-12));
    }
}
