//! Single runs and regime sweeps: data generation, lockstep comparison with
//! the limit system, time-integrated norms and the sweep report.

use crate::data::{gen_initial_data, AdmissibilityLimits, DataSpec, InitialData};
use crate::diagnostics::{diagnostics_record, fluctuation, mass_identity_residual, vorticity_eq_residual, wave_residual, DiagnosticsRecord};
use crate::error::{invalid, Error, Result};
use crate::field::{boundary_trace, vertical_average, Field2D, Side};
use crate::fit::{fit_rate, FitResult};
use crate::geometry::SlabGeometry;
use crate::regime::{make_regime_sequence, LambdaLimit, PowerLaw, RegimeParams};
use crate::solver2d::{LimitParams, Solver2D, State2D};
use crate::solver3d::{choose_dt, EnergyLedger, Solver3D, SolverOptions, State3D, StepRule};
use crate::spectral::{curl_h, leray_project_2d};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Environment variable holding the sweep worker count.
pub const WORKERS_ENV: &str = "THINSLAB_WORKERS";

/// Worker count from [`WORKERS_ENV`], or the number of logical cores.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Everything fixed across the members of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub period: f64,
    pub nh: usize,
    pub nv: usize,
    pub data: DataSpec,
    pub limits: AdmissibilityLimits,
    pub step: StepRule,
    /// Fixed step overriding `step`.
    pub dt: Option<f64>,
    pub t_final: f64,
    /// Solver steps between stored samples.
    pub diag_stride: usize,
    /// Cutoff levels of the filtered wave residuals.
    pub levels: Vec<i32>,
    pub theta: f64,
    pub coriolis: bool,
    /// Run the limit system alongside when the reference density is constant.
    pub compare_limit: bool,
    pub max_inner: usize,
    pub inner_tol: f64,
    pub damping: f64,
}

impl RunSettings {
    pub fn new(data: DataSpec) -> Self {
        Self {
            period: std::f64::consts::TAU,
            nh: 32,
            nv: 17,
            data,
            limits: AdmissibilityLimits::default(),
            step: StepRule::default(),
            dt: None,
            t_final: 0.5,
            diag_stride: 10,
            levels: Vec::new(),
            theta: 0.5,
            coriolis: true,
            compare_limit: true,
            max_inner: 50,
            inner_tol: 1e-9,
            damping: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid("t_final", format!("{} must be positive", self.t_final)));
        }
        if self.diag_stride == 0 {
            return Err(invalid("diag_stride", "must be at least 1"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("dt", format!("{dt} must be positive")));
            }
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(invalid("theta", format!("{} not in (0, 1)", self.theta)));
        }
        Ok(())
    }

    pub fn geometry(&self, ell: f64) -> Result<SlabGeometry> {
        SlabGeometry::new(self.period, self.nh, self.nv, ell)
    }
}

/// Limit-system row `{t, energy, enstrophy, r0_min, r0_max}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub r0_min: f64,
    pub r0_max: f64,
}

impl LimitRow {
    pub const COLUMNS: [&'static str; 5] = ["t", "energy", "enstrophy", "r0_min", "r0_max"];

    pub fn of(s: &State2D, p: &LimitParams) -> Self {
        Self {
            t: s.t,
            energy: s.energy(p),
            enstrophy: s.enstrophy(),
            r0_min: s.r0.min(),
            r0_max: s.r0.max(),
        }
    }

    pub fn values(&self) -> [f64; 5] {
        [self.t, self.energy, self.enstrophy, self.r0_min, self.r0_max]
    }
}

/// Residual norms of the averaged identities at one interior sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub t: f64,
    pub vorticity: f64,
    pub mass: f64,
    /// `(level, res_sigma, res_eta)`.
    pub wave: Vec<(i32, f64, f64)>,
}

/// `L^2_T L^2` norms of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunNorms {
    /// `avg u3`.
    pub v3: f64,
    /// `avg u`.
    pub ubar: f64,
    /// `(avg |u - avg u|^2)^{1/2}`.
    pub columnarity: f64,
    pub trace_gap_top: f64,
    pub trace_gap_bottom: f64,
    /// `int_0^T avg int |grad u|^2`.
    pub du_avg: f64,
    /// `avg u_h - u_limit`, when the limit system ran.
    pub limit_error: Option<f64>,
}

/// Output of [`run_single`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub regime: RegimeParams,
    pub dt: f64,
    pub steps: usize,
    pub initial_energy: f64,
    pub ledger: EnergyLedger,
    pub records: Vec<DiagnosticsRecord>,
    pub limit_rows: Vec<LimitRow>,
    pub residuals: Vec<ResidualRow>,
    pub samples: Vec<State3D>,
    pub norms: RunNorms,
    pub max_inner_iterations: usize,
}

/// Instantaneous squared norms integrated in time by the trapezoid rule.
#[derive(Debug, Default)]
struct TimeIntegrals {
    last: Option<(f64, [f64; 6])>,
    acc: [f64; 6],
}

impl TimeIntegrals {
    fn add(&mut self, t: f64, v: [f64; 6]) {
        if let Some((t0, v0)) = self.last {
            for i in 0..6 {
                self.acc[i] += 0.5 * (t - t0) * (v0[i] + v[i]);
            }
        }
        self.last = Some((t, v));
    }
}

fn squared_norms(state: &State3D, limit: Option<&Field2D>) -> [f64; 6] {
    let g = state.geom();
    let np = g.plane.npts();
    let h2 = g.plane.spacing().powi(2);
    let ubar = vertical_average(&state.u);
    let ub = ubar.phys();
    let sum = |r: std::ops::Range<usize>, f: &dyn Fn(usize) -> f64| h2 * r.map(f).sum::<f64>();
    let v3 = sum(2 * np..3 * np, &|i| ub[i] * ub[i]);
    let all = sum(0..3 * np, &|i| ub[i] * ub[i]);
    let col = fluctuation(&state.u).norm_sq() / (2.0 * g.ell);
    let gap = |side| {
        let tr = boundary_trace(&state.u, side);
        sum(0..2 * np, &|i| (tr.phys()[i] - ub[i]).powi(2))
    };
    let err = limit.map_or(0.0, |l| sum(0..2 * np, &|i| (ub[i] - l.phys()[i]).powi(2)));
    [v3, all, col, gap(Side::Top), gap(Side::Bottom), err]
}

/// Matched limit data: `r0 = avg r_in`, `u = P(avg m_h / rho0)`.
pub fn matched_limit_state(data: &InitialData) -> Result<(State2D, [f64; 2])> {
    let plane = data.rho0.plane();
    let np = plane.npts();
    let r0 = vertical_average(&data.r_in);
    let mbar = vertical_average(&data.m);
    let uh: Vec<f64> = (0..2 * np).map(|i| mbar.phys()[i] / data.rho0.phys()[i % np]).collect();
    let u = leray_project_2d(&Field2D::from_phys(plane, 2, uh)?)?;
    let mean = [u.spec()[0].re, u.spec()[np].re];
    Ok((State2D::new(r0, curl_h(&u)?)?, mean))
}

fn is_constant(f: &Field2D) -> bool {
    f.max() - f.min() <= 1e-12 * f.max_abs().max(1.0)
}

/// Advances one member to `t_final`; `observer` sees every state after a step.
pub fn run_single_with(
    settings: &RunSettings,
    regime: &RegimeParams,
    observer: &mut dyn FnMut(usize, &State3D),
) -> Result<RunOutput> {
    settings.validate()?;
    let geom = settings.geometry(regime.ell)?;
    let data = gen_initial_data(&settings.data, regime, &geom, &settings.limits)?;
    let u0 = data.u.clone();
    let mut state = State3D::new(data.rho.clone(), u0, *regime)?;
    let fail = |step: usize| {
        let eps = regime.epsilon;
        move |e: Error| Error::RunFailed {
            epsilon: eps,
            step,
            source: Box::new(e),
        }
    };

    let raw_dt = match settings.dt {
        Some(dt) => dt,
        None => choose_dt(&state, settings.step),
    };
    let steps = (settings.t_final / raw_dt).ceil().max(1.0) as usize;
    let dt = settings.t_final / steps as f64;
    let mut opts = SolverOptions::new(dt);
    opts.coriolis = settings.coriolis;
    opts.max_inner = settings.max_inner;
    opts.inner_tol = settings.inner_tol;
    opts.damping = settings.damping;
    let mut solver = Solver3D::new(&mut state, opts, Some(data.energy)).map_err(fail(0))?;

    let with_limit = settings.compare_limit && is_constant(&data.rho0);
    let mut limit = if with_limit {
        let (s2, mean) = matched_limit_state(&data)?;
        let mut p = LimitParams::new(regime.lambda());
        p.mean_flow = mean;
        Some((s2, Solver2D::new(p, dt)?))
    } else {
        None
    };
    let mut limit_rows = Vec::new();
    let limit_velocity = |l: &Option<(State2D, Solver2D)>| l.as_ref().map(|(s, so)| s.velocity(&so.params));

    let mut ints = TimeIntegrals::default();
    ints.add(state.t, squared_norms(&state, limit_velocity(&limit).as_ref()));
    let mut records = vec![diagnostics_record(&state, &data.rho0)?];
    let mut samples = vec![state.clone()];
    if let Some((s, so)) = &limit {
        limit_rows.push(LimitRow::of(s, &so.params));
    }
    observer(0, &state);

    let mut max_inner = 0;
    for n in 1..=steps {
        let info = solver.step(&mut state).map_err(fail(n))?;
        max_inner = max_inner.max(info.inner_iterations);
        if let Some((s, so)) = &mut limit {
            so.step(s).map_err(fail(n))?;
        }
        ints.add(state.t, squared_norms(&state, limit_velocity(&limit).as_ref()));
        if n % settings.diag_stride == 0 {
            records.push(diagnostics_record(&state, &data.rho0)?);
            samples.push(state.clone());
            if let Some((s, so)) = &limit {
                limit_rows.push(LimitRow::of(s, &so.params));
            }
        }
        observer(n, &state);
    }

    let residuals = if samples.len() >= 3 {
        residual_rows(&samples, &data.rho0, &settings.levels)?
    } else {
        Vec::new()
    };
    let a = ints.acc;
    let norms = RunNorms {
        v3: a[0].sqrt(),
        ubar: a[1].sqrt(),
        columnarity: a[2].sqrt(),
        trace_gap_top: a[3].sqrt(),
        trace_gap_bottom: a[4].sqrt(),
        du_avg: solver.ledger.rows.last().map_or(0.0, |r| r.dissipation),
        limit_error: with_limit.then(|| a[5].sqrt()),
    };
    Ok(RunOutput {
        regime: *regime,
        dt,
        steps,
        initial_energy: data.energy,
        ledger: solver.ledger.clone(),
        records,
        limit_rows,
        residuals,
        samples,
        norms,
        max_inner_iterations: max_inner,
    })
}

pub fn run_single(settings: &RunSettings, regime: &RegimeParams) -> Result<RunOutput> {
    run_single_with(settings, regime, &mut |_, _| {})
}

/// Identity residual norms over stored samples.
pub fn residual_rows(samples: &[State3D], rho0: &Field2D, levels: &[i32]) -> Result<Vec<ResidualRow>> {
    let vort = vorticity_eq_residual(samples, rho0)?;
    let mass = mass_identity_residual(samples, rho0)?;
    let waves = levels
        .iter()
        .map(|&m| wave_residual(samples, rho0, m))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..vort.len())
        .map(|j| ResidualRow {
            t: vort[j].t,
            vorticity: vort[j].norm(),
            mass: mass[j].norm(),
            wave: levels
                .iter()
                .zip(&waves)
                .map(|(&m, w)| (m, w[j].res_sigma.norm(), w[j].res_eta.norm()))
                .collect(),
        })
        .collect())
}

/// Regime sequence and execution of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub run: RunSettings,
    pub n_min: u32,
    pub n_max: u32,
    pub ell_law: PowerLaw,
    pub alpha_law: PowerLaw,
    /// Worker pool size; `None` reads [`WORKERS_ENV`].
    pub workers: Option<usize>,
}

/// One member of the report table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub epsilon: f64,
    pub ell: f64,
    pub alpha: f64,
    pub quantities: BTreeMap<String, f64>,
}

/// Spread of a measured bound constant across the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstant {
    pub min: f64,
    pub max: f64,
}

impl BoundConstant {
    pub fn ratio(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Sweep table with fits, constants and verdicts derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub limit: LambdaLimit,
    pub rows: Vec<SweepRow>,
    pub fits: BTreeMap<String, FitResult>,
    pub constants: BTreeMap<String, BoundConstant>,
    pub verdicts: Vec<Verdict>,
}

/// Quantities fitted against `ell`.
pub const FITTED: [&str; 6] = ["e", "v3", "ubar", "columnarity", "trace_gap_top", "trace_gap_bottom"];

/// Allowed spread of a bound constant.
pub const CONSTANT_SPREAD: f64 = 5.0;
/// Lower bound on the fitted exponent of `v3`.
pub const V3_EXPONENT: f64 = 0.4;
/// Required reduction of the limit error across the sweep.
pub const LIMIT_REDUCTION: f64 = 4.0;
/// Relative tolerance of the energy budget.
pub const ENERGY_RTOL: f64 = 1e-6;

/// Table row of one run.
pub fn sweep_row(out: &RunOutput) -> SweepRow {
    let r = out.regime;
    let nm = &out.norms;
    let mut q = BTreeMap::new();
    q.insert("v3".into(), nm.v3);
    q.insert("ubar".into(), nm.ubar);
    q.insert("columnarity".into(), nm.columnarity);
    q.insert("trace_gap_top".into(), nm.trace_gap_top);
    q.insert("trace_gap_bottom".into(), nm.trace_gap_bottom);
    q.insert("du_avg".into(), nm.du_avg);
    if nm.du_avg > 0.0 {
        q.insert("c_u3".into(), nm.v3 * nm.v3 / (r.ell * nm.du_avg));
    }
    q.insert("c_deg".into(), nm.ubar / (r.ell + (r.ell / r.alpha).sqrt()));
    if let Some(e) = nm.limit_error {
        q.insert("e".into(), e);
    }
    q.insert("ledger_slack".into(), out.ledger.min_relative_slack());
    q.insert("initial_energy".into(), out.initial_energy);
    q.insert("dt".into(), out.dt);
    q.insert("steps".into(), out.steps as f64);
    SweepRow {
        n: r.n,
        epsilon: r.epsilon,
        ell: r.ell,
        alpha: r.alpha,
        quantities: q,
    }
}

fn column(rows: &[SweepRow], name: &str) -> Option<Vec<(f64, f64)>> {
    rows.iter().map(|r| r.quantities.get(name).map(|&v| (r.ell, v))).collect()
}

fn spread(vals: &[f64]) -> Option<BoundConstant> {
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min > 0.0 && max.is_finite()).then_some(BoundConstant { min, max })
}

/// `true` if the values decrease strictly along the sequence.
fn decreasing(vals: &[f64]) -> bool {
    vals.windows(2).all(|w| w[1] < w[0])
}

impl SweepReport {
    /// Fits, constants and verdicts of a table; rows are sorted by `n` first.
    pub fn from_rows(limit: LambdaLimit, mut rows: Vec<SweepRow>) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::InsufficientSamples(format!("{} sweep members, need 3", rows.len())));
        }
        rows.sort_by_key(|r| r.n);
        let mut fits = BTreeMap::new();
        for name in FITTED {
            if let Some(col) = column(&rows, name) {
                let (x, y): (Vec<f64>, Vec<f64>) = col.into_iter().unzip();
                if y.iter().all(|v| *v > 0.0) {
                    fits.insert(name.to_string(), fit_rate(&x, &y)?);
                }
            }
        }
        let mut constants = BTreeMap::new();
        for name in ["c_u3", "c_deg"] {
            if let Some(col) = column(&rows, name) {
                let v: Vec<f64> = col.into_iter().map(|p| p.1).collect();
                if let Some(c) = spread(&v) {
                    constants.insert(name.to_string(), c);
                }
            }
        }

        let mut verdicts = Vec::new();
        if let Some(col) = column(&rows, "ledger_slack") {
            let worst = col.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict {
                name: "energy-inequality".into(),
                passed: worst >= -ENERGY_RTOL,
                detail: format!("min relative slack {worst:.3e}"),
            });
        }
        if let Some(f) = fits.get("v3") {
            verdicts.push(Verdict {
                name: "vertical-velocity-rate".into(),
                passed: f.exponent >= V3_EXPONENT,
                detail: format!("exponent {:.4} +- {:.4}, need >= {V3_EXPONENT}", f.exponent, f.half_width),
            });
        }
        if let Some(c) = constants.get("c_u3") {
            verdicts.push(Verdict {
                name: "vertical-velocity-constant".into(),
                passed: c.ratio() <= CONSTANT_SPREAD,
                detail: format!("C in [{:.4e}, {:.4e}], ratio {:.3}", c.min, c.max, c.ratio()),
            });
        }
        if let Some(col) = column(&rows, "e") {
            let v: Vec<f64> = col.iter().map(|p| p.1).collect();
            let red = v[0] / v[v.len() - 1];
            verdicts.push(Verdict {
                name: "limit-convergence".into(),
                passed: decreasing(&v) && red >= LIMIT_REDUCTION,
                detail: format!("monotone {}, reduction {red:.3}", decreasing(&v)),
            });
        }
        if limit == LambdaLimit::Divergent {
            let v: Vec<f64> = column(&rows, "ubar").unwrap_or_default().iter().map(|p| p.1).collect();
            if let Some(c) = constants.get("c_deg") {
                verdicts.push(Verdict {
                    name: "degenerate-decay".into(),
                    passed: c.ratio() <= CONSTANT_SPREAD && decreasing(&v),
                    detail: format!("C ratio {:.3}, norm decreasing {}", c.ratio(), decreasing(&v)),
                });
            }
        }
        Ok(Self {
            limit,
            rows,
            fits,
            constants,
            verdicts,
        })
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Names of the quantities present in every row.
    pub fn quantity_names(&self) -> Vec<String> {
        let first = match self.rows.first() {
            Some(r) => r,
            None => return Vec::new(),
        };
        first
            .quantities
            .keys()
            .filter(|k| self.rows.iter().all(|r| r.quantities.contains_key(*k)))
            .cloned()
            .collect()
    }
}

/// Runs every member of the sweep in parallel and assembles the report.
pub fn run_sweep(settings: &SweepSettings) -> Result<(SweepReport, Vec<RunOutput>)> {
    let seq = make_regime_sequence(settings.n_min, settings.n_max, settings.ell_law, settings.alpha_law)?;
    if seq.len() < 3 {
        return Err(Error::InsufficientSamples(format!("{} sweep members, need 3", seq.len())));
    }
    settings.run.validate()?;
    let workers = settings.workers.unwrap_or_else(default_workers).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let outputs: Vec<RunOutput> = pool.install(|| {
        seq.par_iter()
            .map(|r| run_single(&settings.run, r))
            .collect::<Result<Vec<_>>>()
    })?;
    let rows = outputs.iter().map(sweep_row).collect();
    let report = SweepReport::from_rows(LambdaLimit::of(settings.ell_law, settings.alpha_law), rows)?;
    Ok((report, outputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DensityProfile, PerturbationProfile, VelocityProfile};

    fn row(n: u32, ell: f64, q: &[(&str, f64)]) -> SweepRow {
        SweepRow {
            n,
            epsilon: 1.0 / n as f64,
            ell,
            alpha: ell,
            quantities: q.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn injected_power_law_fits_exactly() {
        let rows: Vec<SweepRow> = (4..=8)
            .map(|n| {
                let ell = 1.0 / n as f64;
                row(n, ell, &[("e", 3.0 * ell), ("ledger_slack", 0.5)])
            })
            .collect();
        let rep = SweepReport::from_rows(LambdaLimit::Finite(1.0), rows).unwrap();
        let f = &rep.fits["e"];
        assert!((f.exponent - 1.0).abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-12);
        assert!(rep.verdict("energy-inequality").unwrap().passed);
    }

    #[test]
    fn verdicts_ignore_row_order() {
        let mk = |n: u32| {
            let ell = 1.0 / n as f64;
            row(n, ell, &[("e", ell * ell), ("v3", ell.sqrt()), ("c_u3", 1.0 + ell)])
        };
        let a = SweepReport::from_rows(LambdaLimit::Finite(1.0), (4..=9).map(mk).collect()).unwrap();
        let b = SweepReport::from_rows(LambdaLimit::Finite(1.0), (4..=9).rev().map(mk).collect()).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
    }

    #[test]
    fn small_sweeps_are_refused() {
        let rows = vec![row(1, 1.0, &[]), row(2, 0.5, &[])];
        assert!(SweepReport::from_rows(LambdaLimit::Finite(1.0), rows).is_err());
    }

    #[test]
    fn rest_state_run_is_identically_zero() {
        let mut s = RunSettings::new(DataSpec {
            rho0: DensityProfile::Constant { value: 1.0 },
            r_in: PerturbationProfile::Zero,
            u_in: VelocityProfile::Zero,
            seed: 0,
        });
        s.nh = 16;
        s.nv = 9;
        s.t_final = 0.05;
        s.diag_stride = 2;
        let r = RegimeParams::new(4, 0.25, 0.25, 0.25).unwrap();
        let out = run_single(&s, &r).unwrap();
        for rec in &out.records {
            assert!(rec.values()[1..].iter().all(|v| *v == 0.0), "{rec:?}");
        }
        assert_eq!(out.norms.limit_error, Some(0.0));
        assert!(out.ledger.rows.iter().all(|r| r.kinetic == 0.0 && r.dissipation == 0.0));
    }
}
