//! Residuals of the averaged balance laws evaluated on stored trajectories.
//!
//! Time derivatives are centred differences of samples at a uniform spacing.

use super::fields::{averaged_fields, vorticity_forcing, AveragedFields};
use crate::error::{Error, Result};
use crate::field::Field2D;
use crate::solver3d::{SlabQuadrature, State3D};
use crate::spectral::{div_h, spectral_cutoff, CutoffKernel};
use rustfft::num_complex::Complex64;

/// Residual field at one interior sample time.
#[derive(Debug, Clone)]
pub struct TimedResidual {
    pub t: f64,
    pub field: Field2D,
}

impl TimedResidual {
    pub fn norm(&self) -> f64 {
        self.field.norm()
    }
}

/// Uniform sample spacing, or an error if the samples are irregular.
pub fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::InsufficientSamples(format!("{} samples, need 3", times.len())));
    }
    let d = times[1] - times[0];
    if d <= 0.0 {
        return Err(Error::InsufficientSamples("sample times must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - d).abs() > 1e-9 * d.max(1.0) {
            return Err(Error::InsufficientSamples("sample times are not uniformly spaced".into()));
        }
    }
    Ok(d)
}

fn averages(samples: &[State3D], rho0: &Field2D) -> Result<(Vec<AveragedFields>, f64)> {
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let dt = uniform_spacing(&times)?;
    let quad = SlabQuadrature::new(samples[0].geom());
    let avgs = samples.iter().map(|s| averaged_fields(s, rho0, &quad)).collect::<Result<Vec<_>>>()?;
    Ok((avgs, dt))
}

fn centred(prev: &Field2D, next: &Field2D, dt: f64) -> Field2D {
    next.zip_with(prev, |a, b| (a - b) / (2.0 * dt))
}

/// `d_t(eta - sigma) - f` at every interior sample, with `f` the averaged vorticity forcing.
pub fn vorticity_eq_residual(samples: &[State3D], rho0: &Field2D) -> Result<Vec<TimedResidual>> {
    let (a, dt) = averages(samples, rho0)?;
    let reg = samples[0].regime;
    let x: Vec<Field2D> = a.iter().map(|f| f.eta.sub(&f.sigma)).collect();
    Ok((1..a.len() - 1)
        .map(|j| {
            let dx = centred(&x[j - 1], &x[j + 1], dt);
            let f = vorticity_forcing(&a[j], reg.alpha, reg.ell);
            TimedResidual {
                t: a[j].t,
                field: dx.sub(&f),
            }
        })
        .collect())
}

/// Averaged mass balance `eps d_t sigma + div vbar` at every interior sample.
pub fn mass_identity_residual(samples: &[State3D], rho0: &Field2D) -> Result<Vec<TimedResidual>> {
    let (a, dt) = averages(samples, rho0)?;
    let eps = samples[0].regime.epsilon;
    (1..a.len() - 1)
        .map(|j| {
            let ds = centred(&a[j - 1].sigma, &a[j + 1].sigma, dt).scale(eps);
            Ok(TimedResidual {
                t: a[j].t,
                field: ds.add(&div_h(&a[j].vbar)?),
            })
        })
        .collect()
}

/// Filtered acoustic-wave residuals at one interior time.
#[derive(Debug, Clone)]
pub struct WaveResidual {
    pub t: f64,
    /// `S_M[eps d_t eta + div vbar - eps f]`.
    pub res_eta: Field2D,
    /// `S_M[eps d_t sigma + div vbar]`.
    pub res_sigma: Field2D,
    /// `res_sigma` evaluated mode by mode in Fourier space.
    pub res_sigma_spectral: Field2D,
}

/// Residuals of the filtered wave system at cutoff level `level`.
pub fn wave_residual(samples: &[State3D], rho0: &Field2D, level: i32) -> Result<Vec<WaveResidual>> {
    let (a, dt) = averages(samples, rho0)?;
    let reg = samples[0].regime;
    let eps = reg.epsilon;
    let kern = CutoffKernel::new(level);
    (1..a.len() - 1)
        .map(|j| {
            let div_v = div_h(&a[j].vbar)?;
            let ds = centred(&a[j - 1].sigma, &a[j + 1].sigma, dt).scale(eps);
            let de = centred(&a[j - 1].eta, &a[j + 1].eta, dt).scale(eps);
            let f = vorticity_forcing(&a[j], reg.alpha, reg.ell).scale(eps);
            let res_sigma = spectral_cutoff(&ds.add(&div_v), level);
            let res_eta = spectral_cutoff(&de.add(&div_v).sub(&f), level);

            let plane = rho0.plane();
            let np = plane.npts();
            let (sp, sn) = (a[j - 1].sigma.spec(), a[j + 1].sigma.spec());
            let v = a[j].vbar.spec();
            let spec: Vec<Complex64> = (0..np)
                .map(|i| {
                    let (k1, k2) = plane.kvec(i);
                    let dsig = (sn[i] - sp[i]) * (eps / (2.0 * dt));
                    let dv = Complex64::new(0.0, 1.0) * (k1 * v[i] + k2 * v[np + i]);
                    (dsig + dv) * kern.multiplier(k1, k2)
                })
                .collect();
            Ok(WaveResidual {
                t: a[j].t,
                res_eta,
                res_sigma,
                res_sigma_spectral: Field2D::from_spec(plane, 1, &spec)?,
            })
        })
        .collect()
}
