//! TOML run configuration.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thinslab_core::data::{AdmissibilityLimits, DataSpec, DensityProfile, PerturbationProfile, VelocityProfile};
use thinslab_core::experiment::{RunSettings, SweepSettings};
use thinslab_core::regime::{make_regime_sequence, LambdaLimit, PowerLaw, RegimeParams};
use thinslab_core::solver3d::StepRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Horizontal period `L`.
    pub period: f64,
    pub nh: usize,
    pub nv: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            period: std::f64::consts::TAU,
            nh: 32,
            nv: 17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub coeff: f64,
    pub exponent: f64,
}

impl From<LawConfig> for PowerLaw {
    fn from(l: LawConfig) -> Self {
        PowerLaw::new(l.coeff, l.exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeConfig {
    pub n_min: u32,
    pub n_max: u32,
    /// Member used by single runs; defaults to `n_min`.
    pub n: Option<u32>,
    pub ell: LawConfig,
    pub alpha: LawConfig,
    /// Sweep workers; `THINSLAB_WORKERS` or the core count when absent.
    pub workers: Option<usize>,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        let unit = LawConfig {
            coeff: 1.0,
            exponent: 1.0,
        };
        Self {
            n_min: 4,
            n_max: 24,
            n: None,
            ell: unit,
            alpha: unit,
            workers: None,
        }
    }
}

/// A profile id with its numeric parameters, e.g. `{ id = "sine", amplitude = 0.5 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub id: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl ProfileConfig {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub rho0: ProfileConfig,
    pub r_in: ProfileConfig,
    pub u_in: ProfileConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub limits: LimitsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsConfig {
    pub energy: f64,
    pub perturbation: f64,
    pub low_modes: f64,
    pub vacuum: f64,
    pub divergence: f64,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        let d = AdmissibilityLimits::default();
        Self {
            energy: d.energy,
            perturbation: d.perturbation,
            low_modes: d.low_modes,
            vacuum: d.vacuum,
            divergence: d.divergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub t_final: f64,
    /// Fixed step; the step rule below applies when absent.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub eps_factor: f64,
    pub dt_max: f64,
    /// Steps between stored diagnostics.
    pub dt_diag: usize,
    /// Cutoff levels `M` of the filtered wave residuals.
    pub levels: Vec<i32>,
    pub wave_diagnostics: bool,
    pub theta: f64,
    pub coriolis: bool,
    pub compare_limit: bool,
    pub max_inner: usize,
    pub inner_tol: f64,
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let rule = StepRule::default();
        Self {
            t_final: 0.5,
            dt: None,
            cfl: rule.cfl,
            eps_factor: rule.eps_factor,
            dt_max: rule.dt_max,
            dt_diag: 10,
            levels: Vec::new(),
            wave_diagnostics: false,
            theta: 0.5,
            coriolis: true,
            compare_limit: true,
            max_inner: 50,
            inner_tol: 1e-9,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Steps between checkpoints; 0 writes only the final state.
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(crate::error::io_at(path))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> CliResult<()> {
        let s = &self.solver;
        if s.wave_diagnostics && s.levels.is_empty() {
            return Err(CliError::Invalid("solver.levels must be non-empty when wave diagnostics are on".into()));
        }
        if let Some(n) = self.regime.n {
            if n < self.regime.n_min || n > self.regime.n_max {
                return Err(CliError::Invalid(format!(
                    "regime.n = {n} outside [{}, {}]",
                    self.regime.n_min, self.regime.n_max
                )));
            }
        }
        self.members()?;
        self.run_settings()?.validate()?;
        Ok(())
    }

    pub fn data_spec(&self) -> CliResult<DataSpec> {
        let d = &self.data;
        Ok(DataSpec {
            rho0: DensityProfile::from_id(&d.rho0.id, &d.rho0.params)?,
            r_in: PerturbationProfile::from_id(&d.r_in.id, &d.r_in.params)?,
            u_in: VelocityProfile::from_id(&d.u_in.id, &d.u_in.params)?,
            seed: d.seed,
        })
    }

    pub fn run_settings(&self) -> CliResult<RunSettings> {
        let mut r = RunSettings::new(self.data_spec()?);
        let (g, s, l) = (&self.geometry, &self.solver, &self.data.limits);
        r.period = g.period;
        r.nh = g.nh;
        r.nv = g.nv;
        r.limits = AdmissibilityLimits {
            energy: l.energy,
            perturbation: l.perturbation,
            low_modes: l.low_modes,
            vacuum: l.vacuum,
            divergence: l.divergence,
        };
        r.step = StepRule {
            cfl: s.cfl,
            eps_factor: s.eps_factor,
            dt_max: s.dt_max,
        };
        r.dt = s.dt;
        r.t_final = s.t_final;
        r.diag_stride = s.dt_diag;
        r.levels = if s.wave_diagnostics { s.levels.clone() } else { Vec::new() };
        r.theta = s.theta;
        r.coriolis = s.coriolis;
        r.compare_limit = s.compare_limit;
        r.max_inner = s.max_inner;
        r.inner_tol = s.inner_tol;
        r.damping = s.damping;
        Ok(r)
    }

    pub fn sweep_settings(&self) -> CliResult<SweepSettings> {
        Ok(SweepSettings {
            run: self.run_settings()?,
            n_min: self.regime.n_min,
            n_max: self.regime.n_max,
            ell_law: self.regime.ell.into(),
            alpha_law: self.regime.alpha.into(),
            workers: self.regime.workers,
        })
    }

    pub fn members(&self) -> CliResult<Vec<RegimeParams>> {
        let r = &self.regime;
        Ok(make_regime_sequence(r.n_min, r.n_max, r.ell.into(), r.alpha.into())?)
    }

    /// The member selected by `regime.n`, or the first one.
    pub fn member(&self) -> CliResult<RegimeParams> {
        let n = self.regime.n.unwrap_or(self.regime.n_min);
        self.members()?
            .into_iter()
            .find(|m| m.n == n)
            .ok_or_else(|| CliError::Invalid(format!("no member n = {n}")))
    }

    pub fn lambda_limit(&self) -> LambdaLimit {
        LambdaLimit::of(self.regime.ell.into(), self.regime.alpha.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[data]
rho0 = { id = "constant", value = 1.0 }
r_in = { id = "sine", amplitude = 0.5 }
u_in = { id = "shear", amplitude = 1.0 }
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_toml(MINIMAL, Path::new("m.toml")).unwrap();
        assert_eq!(c.geometry.nh, 32);
        assert_eq!(c.regime.n_min, 4);
        assert_eq!(c.member().unwrap().n, 4);
        assert_eq!(c.lambda_limit(), LambdaLimit::Finite(1.0));
        let s = c.run_settings().unwrap();
        assert_eq!(s.t_final, 0.5);
        assert!(s.levels.is_empty());
    }

    #[test]
    fn toml_roundtrip() {
        let c = RunConfig::from_toml(MINIMAL, Path::new("m.toml")).unwrap();
        let back = RunConfig::from_toml(&c.to_toml(), Path::new("r.toml")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\n[solver]\nt_finale = 1.0\n");
        assert!(matches!(RunConfig::from_toml(&bad, Path::new("b.toml")), Err(CliError::Config { .. })));
        let bad_param = MINIMAL.replace("amplitude = 0.5", "amplitud = 0.5");
        assert!(RunConfig::from_toml(&bad_param, Path::new("b.toml")).is_err());
        let bad_id = MINIMAL.replace("\"shear\"", "\"vortex\"");
        assert!(RunConfig::from_toml(&bad_id, Path::new("b.toml")).is_err());
    }

    #[test]
    fn wave_levels_required() {
        let bad = format!("{MINIMAL}\n[solver]\nwave_diagnostics = true\n");
        assert!(matches!(RunConfig::from_toml(&bad, Path::new("b.toml")), Err(CliError::Invalid(_))));
        let good = format!("{MINIMAL}\n[solver]\nwave_diagnostics = true\nlevels = [2, 3]\n");
        let c = RunConfig::from_toml(&good, Path::new("g.toml")).unwrap();
        assert_eq!(c.run_settings().unwrap().levels, vec![2, 3]);
    }

    #[test]
    fn regime_laws_validated() {
        let bad = format!("{MINIMAL}\n[regime]\nell = {{ coeff = 1.0, exponent = 0.0 }}\n");
        assert!(RunConfig::from_toml(&bad, Path::new("b.toml")).is_err());
        let out = format!("{MINIMAL}\n[regime]\nn_min = 4\nn_max = 8\nn = 9\n");
        assert!(RunConfig::from_toml(&out, Path::new("b.toml")).is_err());
    }
}
