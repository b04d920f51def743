//! Gaussian fluctuations of the final state.
//!
//! With `J` the (constant) Jacobian of the drift, `Phi(t, s) = exp(J (t - s))`
//! and the terminal covariance of the fluctuation process is
//! `Lambda = int_0^tau Phi(tau, s) G(r(s)) Phi(tau, s)^T ds`. Projecting out
//! the spreader coordinate along the drift at absorption gives
//! `Sigma = B Lambda B^T`, where `B = [I | -F_{0..k}(r(tau)) / delta]` and
//! `delta` is the last drift component at `r(tau)`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::asymptotics::locate_x_infinity;
use crate::error::{Error, Result};
use crate::fluid::closed_form;
use crate::model::{diffusion, drift, jacobian, DensityState, InitialConfiguration};
use crate::quadrature::integrate_vector;

pub const LAMBDA_TOLERANCE: f64 = 1e-10;
const LAMBDA_MAX_INTERVALS: usize = 4000;

/// `Phi(t, s) = exp(J (t - s))`.
pub fn fundamental_matrix(k: usize, t: f64, s: f64) -> Result<DMatrix<f64>> {
    check_times(k, t, s)?;
    Ok((jacobian(k) * (t - s)).exp())
}

/// `Phi(t, s)` from RK4 on `dPhi/dt = J Phi`, `Phi(s, s) = I`, with `steps`
/// equal steps.
pub fn fundamental_matrix_ode(k: usize, t: f64, s: f64, steps: usize) -> Result<DMatrix<f64>> {
    check_times(k, t, s)?;
    if steps == 0 {
        return Err(Error::Domain("need at least one step".into()));
    }
    let j = jacobian(k);
    let h = (t - s) / steps as f64;
    let mut phi = DMatrix::identity(k + 1, k + 1);
    for _ in 0..steps {
        let k1 = &j * &phi;
        let k2 = &j * (&phi + &k1 * (h / 2.0));
        let k3 = &j * (&phi + &k2 * (h / 2.0));
        let k4 = &j * (&phi + &k3 * h);
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(phi)
}

fn check_times(k: usize, t: f64, s: f64) -> Result<()> {
    if k < 1 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(s.is_finite() && t.is_finite()) || s > t {
        return Err(Error::Domain(format!("need s <= t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// Absorption point of the fluid trajectory; errors when the limit has no
/// outbreak.
fn absorption(init: &InitialConfiguration) -> Result<(f64, DensityState)> {
    let loc = locate_x_infinity(init);
    if loc.degenerate {
        return Err(Error::Degenerate(format!("no outbreak in the fluid limit (x_inf = x0 = {})", init.x0())));
    }
    Ok((loc.tau_inf, closed_form(loc.tau_inf, init)))
}

/// Terminal covariance `Lambda` of the fluctuation process, symmetrised.
pub fn lambda_infinity(init: &InitialConfiguration) -> Result<DMatrix<f64>> {
    let (tau, _) = absorption(init)?;
    lambda_up_to(init, tau)
}

fn lambda_up_to(init: &InitialConfiguration, tau: f64) -> Result<DMatrix<f64>> {
    let k = init.k();
    let dim = k + 1;
    let j = jacobian(k);
    let integrand = |s: f64| {
        let phi = (&j * (tau - s)).exp();
        let g = diffusion(&closed_form(s, init));
        let m = &phi * g * phi.transpose();
        m.as_slice().to_vec()
    };
    let r = integrate_vector(integrand, 0.0, tau, LAMBDA_TOLERANCE, LAMBDA_MAX_INTERVALS)?;
    let m = DMatrix::from_vec(dim, dim, r.value);
    Ok((&m + m.transpose()) * 0.5)
}

/// Last drift component at absorption; must be negative.
pub fn delta_infinity(init: &InitialConfiguration) -> Result<f64> {
    let (_, r) = absorption(init)?;
    delta_at(&r)
}

fn delta_at(r: &DensityState) -> Result<f64> {
    let f = drift(r);
    let delta = f[r.k()];
    if delta >= 0.0 {
        return Err(Error::Degenerate(format!("boundary derivative {delta} is not negative")));
    }
    Ok(delta)
}

/// `k x (k+1)` projection `[I | -F_{0..k}(r(tau)) / delta]`.
pub fn projection_b(init: &InitialConfiguration) -> Result<DMatrix<f64>> {
    let (_, r) = absorption(init)?;
    let delta = delta_at(&r)?;
    Ok(projection_at(&r, delta))
}

fn projection_at(r: &DensityState, delta: f64) -> DMatrix<f64> {
    let k = r.k();
    let f = drift(r);
    let mut b = DMatrix::zeros(k, k + 1);
    for i in 0..k {
        b[(i, i)] = 1.0;
        b[(i, k)] = -f[i] / delta;
    }
    b
}

pub fn sigma(init: &InitialConfiguration) -> Result<DMatrix<f64>> {
    analyze(init).map(|r| r.sigma)
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltResult {
    pub k: usize,
    pub tau_inf: f64,
    pub x_inf: f64,
    pub y_inf: Vec<f64>,
    pub delta_inf: f64,
    pub lambda_inf: DMatrix<f64>,
    pub b_matrix: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
}

impl CltResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain numeric data serializes")
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct CltExport<'a> {
    k: usize,
    tau_inf: f64,
    x_inf: f64,
    y_inf: &'a [f64],
    delta_inf: f64,
    lambda: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    sigma: Vec<Vec<f64>>,
}

impl Serialize for CltResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CltExport {
            k: self.k,
            tau_inf: self.tau_inf,
            x_inf: self.x_inf,
            y_inf: &self.y_inf,
            delta_inf: self.delta_inf,
            lambda: rows(&self.lambda_inf),
            b: rows(&self.b_matrix),
            sigma: rows(&self.sigma),
        }
        .serialize(serializer)
    }
}

/// Full pipeline: absorption point, `delta`, `Lambda`, `B` and `Sigma`.
pub fn analyze(init: &InitialConfiguration) -> Result<CltResult> {
    let (tau, r) = absorption(init)?;
    let delta = delta_at(&r)?;
    let lambda = lambda_up_to(init, tau)?;
    let b = projection_at(&r, delta);
    let s = &b * &lambda * b.transpose();
    let sigma = (&s + s.transpose()) * 0.5;
    Ok(CltResult {
        k: init.k(),
        tau_inf: tau,
        x_inf: r.x,
        y_inf: r.aware.clone(),
        delta_inf: delta,
        lambda_inf: lambda,
        b_matrix: b,
        sigma,
    })
}
