//! Log-log least-squares fits of power laws.

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// `y ~ constant * x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub constant: f64,
    /// Root-mean-square residual in `ln y`.
    pub residual: f64,
    /// Half-width of the 95% confidence interval of the exponent.
    pub half_width: f64,
    pub points: usize,
}

pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InsufficientSamples(format!("{} abscissae, {} values", xs.len(), ys.len())));
    }
    if let Some((x, y)) = xs.iter().zip(ys).find(|(x, y)| !(**x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidParameter {
            name: "fit_rate",
            reason: format!("pair ({x:e}, {y:e}) is not positive and finite"),
        });
    }
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::InsufficientSamples(format!("{n} points, need 3")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples("all abscissae coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let se = (ssr / (nf - 2.0) / sxx).sqrt();
    let half_width = StudentsT::new(0.0, 1.0, nf - 2.0).map_or(f64::NAN, |d| d.inverse_cdf(0.975)) * se;
    Ok(FitResult {
        exponent: slope,
        constant: icpt.exp(),
        residual: (ssr / nf).sqrt(),
        half_width,
        points: n,
    })
}
