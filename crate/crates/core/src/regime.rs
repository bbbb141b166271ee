//! Scaling regimes linking the Rossby number to the slab half-thickness and
//! the boundary friction.

use crate::error::{invalid, Result};

/// Power law `coeff * eps^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub const fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }

    pub fn eval(&self, eps: f64) -> f64 {
        self.coeff * eps.powf(self.exponent)
    }
}

/// Parameters of one member of a regime sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    pub n: u32,
    pub epsilon: f64,
    pub ell: f64,
    pub alpha: f64,
}

impl RegimeParams {
    pub fn new(n: u32, epsilon: f64, ell: f64, alpha: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(invalid("epsilon", format!("{epsilon} not in (0, 1]")));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(invalid("ell", format!("{ell} must be positive")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("{alpha} must be non-negative")));
        }
        Ok(Self {
            n,
            epsilon,
            ell,
            alpha,
        })
    }

    /// Effective friction `alpha / ell` seen by the averaged flow.
    pub fn lambda(&self) -> f64 {
        self.alpha / self.ell
    }

    /// Classify the member against a target friction `lambda` with relative tolerance `tol`.
    pub fn classify(&self, lambda: f64, tol: f64) -> Regime {
        let r = self.lambda();
        if (r - lambda).abs() <= tol * lambda.abs().max(1.0) {
            Regime::QuasiHomogeneous { lambda }
        } else if r > lambda {
            Regime::Degenerate
        } else {
            Regime::Other
        }
    }
}

/// Limiting behaviour of `lambda = alpha / ell` along `eps -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaLimit {
    Finite(f64),
    Vanishing,
    Divergent,
}

impl LambdaLimit {
    pub fn of(ell_law: PowerLaw, alpha_law: PowerLaw) -> Self {
        let d = alpha_law.exponent - ell_law.exponent;
        if alpha_law.coeff == 0.0 {
            LambdaLimit::Finite(0.0)
        } else if d.abs() < 1e-12 {
            LambdaLimit::Finite(alpha_law.coeff / ell_law.coeff)
        } else if d > 0.0 {
            LambdaLimit::Vanishing
        } else {
            LambdaLimit::Divergent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `alpha / ell` stays at a finite friction.
    QuasiHomogeneous { lambda: f64 },
    /// `alpha / ell` grows without bound.
    Degenerate,
    Other,
}

/// Builds `eps_n = 1/n`, `ell_n = ell_law(eps_n)`, `alpha_n = alpha_law(eps_n)` for `n_min..=n_max`.
pub fn make_regime_sequence(
    n_min: u32,
    n_max: u32,
    ell_law: PowerLaw,
    alpha_law: PowerLaw,
) -> Result<Vec<RegimeParams>> {
    if n_min < 1 {
        return Err(invalid("n_min", "must be at least 1"));
    }
    if n_max < n_min {
        return Err(invalid("n_max", format!("{n_max} < n_min = {n_min}")));
    }
    if !(ell_law.coeff > 0.0 && ell_law.coeff.is_finite()) {
        return Err(invalid("ell_law", format!("{ell_law:?} needs a positive coefficient")));
    }
    if !(ell_law.exponent > 0.0 && ell_law.exponent.is_finite()) {
        return Err(invalid("ell_law", format!("{ell_law:?} does not decrease with eps")));
    }
    if !(alpha_law.coeff >= 0.0 && alpha_law.coeff.is_finite() && alpha_law.exponent.is_finite()) {
        return Err(invalid("alpha_law", format!("{alpha_law:?} must be non-negative")));
    }
    (n_min..=n_max)
        .map(|n| {
            let eps = 1.0 / n as f64;
            RegimeParams::new(n, eps, ell_law.eval(eps), alpha_law.eval(eps))
        })
        .collect()
}
