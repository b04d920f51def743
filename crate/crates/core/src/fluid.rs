//! Fluid limit of the time-changed chain.
//!
//! The limit system `x' = -x`, `y_1' = x - y_1`, `y_i' = y_{i-1} - y_i`,
//! `y' = y_{k-1} - (1 - x - sum y_i)` is linear and solved in closed form:
//! `x(t) = x0 e^{-t}`, `y_i(t) = e^{-t} sum_{r<=i} y_{i-r,0} t^r/r!` and
//! `y(t) = f(x(t))`. A fixed-step RK4 integrator is kept as an independent
//! check of that solution.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{aware_levels_at, bisect_sign_change, FinalSizeFunction};
use crate::error::{Error, Result};
use crate::model::{drift, DensityState, InitialConfiguration};

const TAU_SCAN_START: f64 = 1e-9;
const TAU_SCAN_STEP: f64 = 1.0 / 16.0;
const TAU_BISECTION_WIDTH: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidSample {
    pub t: f64,
    pub state: DensityState,
}

/// Closed-form fluid trajectory together with its absorption time.
#[derive(Debug, Clone)]
pub struct FluidTrajectory {
    init: InitialConfiguration,
    f: FinalSizeFunction,
    tau_inf: f64,
}

impl FluidTrajectory {
    pub fn new(init: &InitialConfiguration) -> Self {
        let f = FinalSizeFunction::new(init);
        let tau_inf = first_nonpositive_time(&f);
        Self { init: init.clone(), f, tau_inf }
    }

    pub fn tau_inf(&self) -> f64 {
        self.tau_inf
    }

    pub fn init(&self) -> &InitialConfiguration {
        &self.init
    }

    pub fn at(&self, t: f64) -> DensityState {
        DensityState { x: self.init.x0() * (-t).exp(), aware: aware_levels_at(&self.init, t), y: self.f.phi(t) }
    }

    /// Samples on `0, step, 2 step, ..` up to and including `t_end`.
    pub fn sample(&self, t_end: f64, step: f64) -> Result<Vec<FluidSample>> {
        grid(t_end, step).map(|ts| ts.into_iter().map(|t| FluidSample { t, state: self.at(t) }).collect())
    }
}

/// Closed-form solution at time `t >= 0`.
pub fn closed_form(t: f64, init: &InitialConfiguration) -> DensityState {
    DensityState { x: init.x0() * (-t).exp(), aware: aware_levels_at(init, t), y: FinalSizeFunction::new(init).phi(t) }
}

fn grid(t_end: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::Domain(format!("t_end must be a finite nonnegative time, got {t_end}")));
    }
    let full = (t_end / step).floor() as usize;
    let mut ts: Vec<f64> = (0..=full).map(|i| i as f64 * step).collect();
    if t_end - ts[full] > 1e-12 * step.max(t_end) {
        ts.push(t_end);
    }
    Ok(ts)
}

fn rk4_step(v: &nalgebra::DVector<f64>, h: f64) -> nalgebra::DVector<f64> {
    let rhs = |u: &nalgebra::DVector<f64>| drift(&DensityState::from_slice(u.as_slice()));
    let k1 = rhs(v);
    let k2 = rhs(&(v + &k1 * (h / 2.0)));
    let k3 = rhs(&(v + &k2 * (h / 2.0)));
    let k4 = rhs(&(v + &k3 * h));
    v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Classical RK4 on the limit system with fixed `step`; the final step is
/// shortened to land on `t_end`.
pub fn integrate_numeric(init: &InitialConfiguration, t_end: f64, step: f64) -> Result<Vec<FluidSample>> {
    let ts = grid(t_end, step)?;
    let mut v = init.initial_density().to_vector();
    let mut out = Vec::with_capacity(ts.len());
    out.push(FluidSample { t: 0.0, state: DensityState::from_slice(v.as_slice()) });
    for w in ts.windows(2) {
        v = rk4_step(&v, w[1] - w[0]);
        out.push(FluidSample { t: w[1], state: DensityState::from_slice(v.as_slice()) });
    }
    Ok(out)
}

fn first_nonpositive_time(f: &FinalSizeFunction) -> f64 {
    let mut lo = TAU_SCAN_START;
    if f.phi(lo) <= 0.0 {
        return 0.0;
    }
    let mut hi = lo + TAU_SCAN_STEP;
    while f.phi(hi) > 0.0 {
        lo = hi;
        hi += TAU_SCAN_STEP;
    }
    bisect_sign_change(|t| f.phi(t), lo, hi, TAU_BISECTION_WIDTH)
}

/// First `t > 0` with `y(t) <= 0`. The boundary point `t = 0` is skipped, as
/// `y(0) = 0` under the standard configuration.
pub fn tau_infinity(init: &InitialConfiguration) -> f64 {
    first_nonpositive_time(&FinalSizeFunction::new(init))
}

/// CSV with columns `t, x, y_1 .. y_{k-1}, y`.
pub fn write_csv<W: Write>(samples: &[FluidSample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let k = samples.first().map_or(1, |s| s.state.k());
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend((1..k).map(|i| format!("y_{i}")));
    header.push("y".into());
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.t.to_string(), s.state.x.to_string()];
        row.extend(s.state.aware.iter().map(f64::to_string));
        row.push(s.state.y.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
