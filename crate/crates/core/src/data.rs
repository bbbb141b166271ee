//! Initial data: a registry of analytic profiles and the admissibility
//! checks applied before a run.
//!
//! The density is `rho_in = rho0(x_h) + eps r_in(x)` and the momentum
//! `m_in = rho_in u_in` with a divergence-free `u_in` satisfying `u3 = 0` on
//! the plates.

use crate::diagnostics::{dyadic_random_field, nondegeneracy_measure};
use crate::error::{invalid, Error, Result};
use crate::field::{vertical_average, Field2D, Field3D};
use crate::geometry::SlabGeometry;
use crate::regime::RegimeParams;
use crate::spectral::{div3, grad_h, perp_grad_h};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// Named numeric parameters of a profile.
pub type ProfileParams = BTreeMap<String, f64>;

fn take(params: &ProfileParams, allowed: &[(&'static str, f64)], id: &str) -> Result<Vec<f64>> {
    for key in params.keys() {
        if !allowed.iter().any(|(k, _)| k == key) {
            return Err(invalid("profile", format!("`{id}` has no parameter `{key}`")));
        }
    }
    allowed
        .iter()
        .map(|(k, d)| {
            let v = params.get(*k).copied().unwrap_or(*d);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(invalid("profile", format!("`{id}.{k}` is not finite")))
            }
        })
        .collect()
}

/// Reference density `rho0(x_h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityProfile {
    Constant { value: f64 },
    /// `1 + a sin(k x1) sin(k x2)`.
    SinSin { amplitude: f64 },
    /// `1 + a cos(k x1)`.
    Ridge { amplitude: f64 },
}

/// Density perturbation `r_in(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationProfile {
    Zero,
    Constant { value: f64 },
    /// `a sin(k x1)`.
    Sine { amplitude: f64 },
    /// `a sin(k x1) + b (x3/ell) cos(k x2)`: height-dependent with the same average.
    Layered { amplitude: f64, vertical: f64 },
}

/// Initial velocity `u_in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityProfile {
    Zero,
    /// `(a sin(k x2), 0, 0)`.
    Shear { amplitude: f64 },
    /// Columnar cellular flow `grad_perp psi`, `psi = a (sin k x1 sin k x2 + 0.5 cos(k x1 + 2 k x2)) / k`.
    Cellular { amplitude: f64 },
    /// Cellular flow plus a height-dependent part with zero vertical average.
    IllPrepared { amplitude: f64, vertical: f64 },
    /// Columnar divergence-free flow with equal energy per dyadic shell, below `kmax`.
    Random { amplitude: f64, kmax: f64 },
}

impl DensityProfile {
    pub fn from_id(id: &str, p: &ProfileParams) -> Result<Self> {
        Ok(match id {
            "constant" => Self::Constant {
                value: take(p, &[("value", 1.0)], id)?[0],
            },
            "sinsin" => Self::SinSin {
                amplitude: take(p, &[("amplitude", 0.5)], id)?[0],
            },
            "ridge" => Self::Ridge {
                amplitude: take(p, &[("amplitude", 0.5)], id)?[0],
            },
            _ => return Err(unknown("rho0", id, Self::IDS)),
        })
    }

    pub const IDS: &'static [&'static str] = &["constant", "sinsin", "ridge"];

    pub fn field(&self, geom: &SlabGeometry) -> Field2D {
        let k = TAU / geom.period();
        Field2D::from_fn(&geom.plane, 1, |_, x, y| match *self {
            Self::Constant { value } => value,
            Self::SinSin { amplitude } => 1.0 + amplitude * (k * x).sin() * (k * y).sin(),
            Self::Ridge { amplitude } => 1.0 + amplitude * (k * x).cos(),
        })
    }
}

impl PerturbationProfile {
    pub fn from_id(id: &str, p: &ProfileParams) -> Result<Self> {
        Ok(match id {
            "zero" => {
                take(p, &[], id)?;
                Self::Zero
            }
            "constant" => Self::Constant {
                value: take(p, &[("value", 0.0)], id)?[0],
            },
            "sine" => Self::Sine {
                amplitude: take(p, &[("amplitude", 1.0)], id)?[0],
            },
            "layered" => {
                let v = take(p, &[("amplitude", 1.0), ("vertical", 0.5)], id)?;
                Self::Layered {
                    amplitude: v[0],
                    vertical: v[1],
                }
            }
            _ => return Err(unknown("r_in", id, Self::IDS)),
        })
    }

    pub const IDS: &'static [&'static str] = &["zero", "constant", "sine", "layered"];

    pub fn field(&self, geom: &SlabGeometry) -> Field3D {
        let k = TAU / geom.period();
        let ell = geom.ell;
        Field3D::from_fn(geom, 1, |_, x, y, z| match *self {
            Self::Zero => 0.0,
            Self::Constant { value } => value,
            Self::Sine { amplitude } => amplitude * (k * x).sin(),
            Self::Layered { amplitude, vertical } => amplitude * (k * x).sin() + vertical * (z / ell) * (k * y).cos(),
        })
    }
}

impl VelocityProfile {
    pub fn from_id(id: &str, p: &ProfileParams) -> Result<Self> {
        Ok(match id {
            "zero" => {
                take(p, &[], id)?;
                Self::Zero
            }
            "shear" => Self::Shear {
                amplitude: take(p, &[("amplitude", 1.0)], id)?[0],
            },
            "cellular" => Self::Cellular {
                amplitude: take(p, &[("amplitude", 1.0)], id)?[0],
            },
            "ill_prepared" => {
                let v = take(p, &[("amplitude", 1.0), ("vertical", 0.5)], id)?;
                Self::IllPrepared {
                    amplitude: v[0],
                    vertical: v[1],
                }
            }
            "random" => {
                let v = take(p, &[("amplitude", 1.0), ("kmax", 4.0)], id)?;
                if v[1] < 1.0 {
                    return Err(invalid("profile", "`random.kmax` must be at least 1"));
                }
                Self::Random {
                    amplitude: v[0],
                    kmax: v[1],
                }
            }
            _ => return Err(unknown("m_in", id, Self::IDS)),
        })
    }

    pub const IDS: &'static [&'static str] = &["zero", "shear", "cellular", "ill_prepared", "random"];

    /// Divergence-free velocity on `geom`; `seed` drives the random profile.
    pub fn field(&self, geom: &SlabGeometry, seed: u64) -> Result<Field3D> {
        let k = TAU / geom.period();
        let plane = &geom.plane;
        let cellular = |a: f64| -> Result<Field2D> {
            let psi = Field2D::from_fn(plane, 1, |_, x, y| {
                a * ((k * x).sin() * (k * y).sin() + 0.5 * (k * x + 2.0 * k * y).cos()) / k
            });
            perp_grad_h(&psi)
        };
        let columnar = |uh: Field2D| -> Result<Field3D> {
            let zero = Field2D::zeros(plane, 1);
            Field3D::extrude(geom, &Field2D::stack(&[&uh.component(0), &uh.component(1), &zero])?)
        };
        match *self {
            Self::Zero => Ok(Field3D::zeros(geom, 3)),
            Self::Shear { amplitude } => Ok(Field3D::from_fn(geom, 3, |c, _, y, _| {
                if c == 0 {
                    amplitude * (k * y).sin()
                } else {
                    0.0
                }
            })),
            Self::Cellular { amplitude } => columnar(cellular(amplitude)?),
            Self::IllPrepared { amplitude, vertical } => {
                // u_h = U + b z W with W = grad chi, and u3 = -b ell (z^2 - 1)/2 div W in z = x3/ell.
                let base = columnar(cellular(amplitude)?)?;
                let ell = geom.ell;
                let b = vertical;
                Ok(Field3D::from_fn(geom, 3, |c, x, y, x3| {
                    let z = x3 / ell;
                    let (cx, sx, cy, sy) = ((k * x).cos(), (k * x).sin(), (k * y).cos(), (k * y).sin());
                    // chi = cos(k x1) cos(k x2) / k.
                    match c {
                        0 => b * z * (-sx * cy),
                        1 => b * z * (-cx * sy),
                        _ => -b * ell * (z * z - 1.0) / 2.0 * (-2.0 * k * cx * cy),
                    }
                })
                .add(&base))
            }
            Self::Random { amplitude, kmax } => {
                let psi = dyadic_random_field(plane, 1, kmax * k, seed);
                let u = perp_grad_h(&psi)?;
                let n = (u.norm_sq() / plane.area()).sqrt().max(f64::MIN_POSITIVE);
                columnar(u.scale(amplitude / n))
            }
        }
    }
}

fn unknown(block: &'static str, id: &str, known: &[&str]) -> Error {
    invalid(block, format!("unknown profile `{id}`; registry has {}", known.join(", ")))
}

/// Profile choices of a data block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataSpec {
    pub rho0: DensityProfile,
    pub r_in: PerturbationProfile,
    pub u_in: VelocityProfile,
    pub seed: u64,
}

/// Thresholds of the admissibility suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityLimits {
    /// Bound on `avg int |m|^2 / rho`.
    pub energy: f64,
    /// Bound on the sup and truncated `H^-2` norms of `avg r_in`.
    pub perturbation: f64,
    /// Highest wavenumber magnitude entering the truncated `H^-2` norm.
    pub low_modes: f64,
    /// Bound on `max |m|^2 / rho`, with `m = 0` required where `rho = 0`.
    pub vacuum: f64,
    /// Bound on `max |div u_in|`.
    pub divergence: f64,
}

impl Default for AdmissibilityLimits {
    fn default() -> Self {
        Self {
            energy: 1e3,
            perturbation: 1e2,
            low_modes: 8.0,
            vacuum: 1e4,
            divergence: 1e-8,
        }
    }
}

/// Outcome of one admissibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub hypothesis: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdmissibilityReport {
    pub checks: Vec<Check>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    fn push(&mut self, hypothesis: &'static str, passed: bool, detail: String) {
        self.checks.push(Check {
            hypothesis,
            passed,
            detail,
        });
    }
}

/// Generated data with its diagnostics.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub rho: Field3D,
    pub m: Field3D,
    pub u: Field3D,
    pub rho0: Field2D,
    pub r_in: Field3D,
    /// `avg int |m|^2 / rho`.
    pub energy: f64,
    pub report: AdmissibilityReport,
}

/// Gradient thresholds, as fractions of `max |grad rho0|`, of the flat-set sweep.
pub const FLAT_SET_DELTAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Area fractions of `{|grad rho0| <= delta}` over [`FLAT_SET_DELTAS`].
pub fn flat_set_sweep(rho0: &Field2D) -> Result<Vec<(f64, f64)>> {
    let g = grad_h(rho0)?;
    let np = rho0.plane().npts();
    let gmax = (0..np).map(|p| g.phys()[p].hypot(g.phys()[np + p])).fold(0.0, f64::max);
    FLAT_SET_DELTAS
        .iter()
        .map(|&d| Ok((d * gmax, nondegeneracy_measure(rho0, d * gmax)?)))
        .collect()
}

/// The sweep passes if the fractions do not increase and halve over the range.
pub fn flat_set_passes(sweep: &[(f64, f64)]) -> bool {
    let monotone = sweep.windows(2).all(|w| w[1].1 <= w[0].1);
    let first = sweep.first().map_or(0.0, |s| s.1);
    let last = sweep.last().map_or(0.0, |s| s.1);
    monotone && last <= 0.5 * first
}

/// Truncated `H^-2` norm `(sum_{0 < |k| <= kmax} |k|^-4 |f_k|^2)^{1/2}` scaled to the torus area.
pub fn low_mode_h_minus2(f: &Field2D, kmax: f64) -> f64 {
    let plane = f.plane();
    let s = f.spec();
    let mut acc = 0.0;
    for i in 0..plane.npts() {
        let (k1, k2) = plane.kvec(i);
        let kk = k1 * k1 + k2 * k2;
        if kk > 0.0 && kk <= kmax * kmax {
            acc += s[i].norm_sqr() / (kk * kk);
        }
    }
    (acc * plane.area()).sqrt()
}

/// Runs every admissibility check on assembled data.
pub fn admissibility(
    rho: &Field3D,
    m: &Field3D,
    rho0: &Field2D,
    r_in: &Field3D,
    limits: &AdmissibilityLimits,
) -> Result<(AdmissibilityReport, f64)> {
    let mut rep = AdmissibilityReport::default();
    let g = rho.geom();
    let ell = g.ell;
    let (r0min, r0max) = (rho0.min(), rho0.max());
    rep.push(
        "reference-density",
        r0min > 0.0,
        format!("rho0 in [{r0min:.6e}, {r0max:.6e}]"),
    );
    let (lo, hi) = (rho.min(), rho.max());
    rep.push(
        "density-bounds",
        lo >= 0.0 && hi <= 2.0 * r0max,
        format!("rho_in in [{lo:.6e}, {hi:.6e}], need [0, {:.6e}]", 2.0 * r0max),
    );

    let n = rho.phys().len();
    let mut ratio = vec![0.0; n];
    let mut vacuum_ok = true;
    let mut worst = 0.0f64;
    for p in 0..n {
        let mm = (0..3).map(|c| m.comp(c)[p].powi(2)).sum::<f64>();
        let r = rho.phys()[p];
        if r > 0.0 {
            ratio[p] = mm / r;
            worst = worst.max(ratio[p]);
        } else if mm > 0.0 {
            vacuum_ok = false;
        }
    }
    let energy = Field3D::from_phys(g, 1, ratio)?.integral(0) / (2.0 * ell);
    rep.push(
        "initial-energy",
        energy.is_finite() && energy <= limits.energy,
        format!("avg int |m|^2/rho = {energy:.6e}, bound {:.3e}", limits.energy),
    );
    rep.push(
        "vacuum-compatibility",
        vacuum_ok && worst <= limits.vacuum,
        format!("max |m|^2/rho = {worst:.6e}, momentum vanishes on vacuum: {vacuum_ok}"),
    );

    let rbar = vertical_average(r_in);
    let sup = rbar.max_abs();
    let hm2 = low_mode_h_minus2(&rbar, limits.low_modes);
    rep.push(
        "perturbation-bounds",
        sup <= limits.perturbation && hm2 <= limits.perturbation,
        format!("|avg r_in|_inf = {sup:.6e}, |avg r_in|_H-2 = {hm2:.6e}, bound {:.3e}", limits.perturbation),
    );

    if r0max - r0min > 1e-12 * r0max.abs().max(1.0) {
        let sweep = flat_set_sweep(rho0)?;
        let desc: Vec<String> = sweep.iter().map(|(d, f)| format!("{d:.3e}:{f:.4}")).collect();
        rep.push("nondegeneracy", flat_set_passes(&sweep), format!("delta:fraction {}", desc.join(" ")));
    }

    let mut div_ok = false;
    let mut detail = String::from("velocity undefined");
    if lo > 0.0 {
        let u = m.zip_with(&Field3D::stack(&[rho, rho, rho])?, |a, b| a / b);
        let d = div3(&u)?.max_abs();
        let nv = g.nv();
        let wall = u.comp(2).chunks(nv).map(|c| c[0].abs().max(c[nv - 1].abs())).fold(0.0, f64::max);
        div_ok = d <= limits.divergence && wall <= limits.divergence;
        detail = format!("max |div u| = {d:.3e}, max |u3| on plates = {wall:.3e}");
    }
    rep.push("divergence-free", div_ok, detail);
    Ok((rep, energy))
}

/// Builds `rho_in`, `m_in` from `spec` and rejects data violating an admissibility check.
pub fn gen_initial_data(
    spec: &DataSpec,
    regime: &RegimeParams,
    geom: &SlabGeometry,
    limits: &AdmissibilityLimits,
) -> Result<InitialData> {
    let data = build_initial_data(spec, regime, geom, limits)?;
    if let Some(c) = data.report.first_failure() {
        return Err(Error::Inadmissible {
            hypothesis: c.hypothesis.to_string(),
            detail: c.detail.clone(),
        });
    }
    Ok(data)
}

/// Same as [`gen_initial_data`] but returns failing data with its report.
pub fn build_initial_data(
    spec: &DataSpec,
    regime: &RegimeParams,
    geom: &SlabGeometry,
    limits: &AdmissibilityLimits,
) -> Result<InitialData> {
    if (geom.ell - regime.ell).abs() > 1e-14 * regime.ell {
        return Err(Error::GridMismatch(format!("slab ell {} differs from regime ell {}", geom.ell, regime.ell)));
    }
    let rho0 = spec.rho0.field(geom);
    let r_in = spec.r_in.field(geom);
    let eps = regime.epsilon;
    let base = Field3D::extrude(geom, &rho0)?;
    let rho = base.zip_with(&r_in, |a, b| a + eps * b);
    let u = spec.u_in.field(geom, spec.seed)?;
    let m = u.zip_with(&Field3D::stack(&[&rho, &rho, &rho])?, |a, b| a * b);
    let (report, energy) = admissibility(&rho, &m, &rho0, &r_in, limits)?;
    Ok(InitialData {
        rho,
        m,
        u,
        rho0,
        r_in,
        energy,
        report,
    })
}
