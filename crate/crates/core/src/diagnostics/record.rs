use super::decomposition::constraint_check;
use super::fields::fluctuation;
use super::inequalities::{jensen_l2, jensen_linf, JensenPair};
use crate::error::Result;
use crate::field::{boundary_trace, vertical_average, Field2D, Field3D, Side};
use crate::solver3d::{robin_residual, State3D};
use crate::spectral::{div3, dz, grad_h3};

/// Scalar diagnostics of one stored state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub kinetic: f64,
    pub sigma_norm: f64,
    pub ubar3_norm: f64,
    /// `(avg int |u - ubar|^2)^{1/2}`.
    pub columnarity: f64,
    pub trace_gap_top: f64,
    pub trace_gap_bottom: f64,
    pub density_deviation: f64,
    pub gradient_alignment: f64,
    pub robin_residual: f64,
    pub divergence_max: f64,
    /// Jensen pairs for `rho` (sup), `sqrt(rho) u`, `Du` and `u3` (L2).
    pub jensen: [JensenPair; 4],
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 11] = [
        "t",
        "kinetic",
        "sigma_norm",
        "ubar3_norm",
        "columnarity",
        "trace_gap_top",
        "trace_gap_bottom",
        "density_deviation",
        "gradient_alignment",
        "robin_residual",
        "divergence_max",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.kinetic,
            self.sigma_norm,
            self.ubar3_norm,
            self.columnarity,
            self.trace_gap_top,
            self.trace_gap_bottom,
            self.density_deviation,
            self.gradient_alignment,
            self.robin_residual,
            self.divergence_max,
        ]
    }

    pub fn jensen_ordered(&self) -> bool {
        self.jensen.iter().all(|p| p.ordered(1e-12))
    }
}

fn trace_gap(u: &Field3D, ubar: &Field2D, side: Side) -> f64 {
    let tr = boundary_trace(u, side);
    let np = ubar.plane().npts();
    let h2 = ubar.plane().spacing().powi(2);
    (h2 * (0..2 * np).map(|i| (tr.phys()[i] - ubar.phys()[i]).powi(2)).sum::<f64>()).sqrt()
}

pub fn diagnostics_record(state: &State3D, rho0: &Field2D) -> Result<DiagnosticsRecord> {
    let g = state.geom();
    let ell = g.ell;
    let eps = state.regime.epsilon;
    let np = g.plane.npts();
    let ubar = vertical_average(&state.u);
    let rho_bar = vertical_average(&state.rho);
    let sigma = rho_bar.sub(rho0).scale(1.0 / eps);
    let u3bar = Field2D::from_phys(&g.plane, 1, ubar.phys()[2 * np..].to_vec())?;
    let cons = constraint_check(state, rho0)?;

    let sqrt_rho_u = {
        let r = state.rho.phys();
        let n = r.len();
        let d = state.u.phys().iter().enumerate().map(|(i, v)| v * r[i % n].max(0.0).sqrt()).collect();
        Field3D::from_phys(g, 3, d)?
    };
    let (d1, d2) = grad_h3(&state.u);
    let du = Field3D::stack(&[&d1, &d2, &dz(&state.u)])?;
    Ok(DiagnosticsRecord {
        t: state.t,
        kinetic: state.kinetic_energy(),
        sigma_norm: sigma.norm(),
        ubar3_norm: u3bar.norm(),
        columnarity: (fluctuation(&state.u).norm_sq() / (2.0 * ell)).sqrt(),
        trace_gap_top: trace_gap(&state.u, &ubar, Side::Top),
        trace_gap_bottom: trace_gap(&state.u, &ubar, Side::Bottom),
        density_deviation: cons.density_deviation,
        gradient_alignment: cons.gradient_alignment,
        robin_residual: robin_residual(&state.u, state.regime.alpha),
        divergence_max: div3(&state.u)?.max_abs(),
        jensen: [
            jensen_linf(&state.rho),
            jensen_l2(&sqrt_rho_u),
            jensen_l2(&du),
            jensen_l2(&state.u.component(2)),
        ],
    })
}
