//! Simulation and asymptotic analysis of the k-spreading Maki-Thompson rumor
//! model.
//!
//! - [`model`]: states, transition rates and the density-dependent building
//!   blocks (rates, drift, Jacobian, diffusion).
//! - [`ssa`]: exact and embedded-chain simulation, replicated in parallel.
//! - [`asymptotics`]: final-size function, `x_inf`, zero counting.
//! - [`fluid`]: closed-form and RK4 fluid limit.
//! - [`clt`]: covariance of the Gaussian fluctuations at absorption.
//! - [`mc`]: Monte Carlo checks of the limit theorems.
//! - [`figures`]: data behind the standard plots.

pub mod asymptotics;
pub mod clt;
pub mod error;
pub mod figures;
pub mod fluid;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod ssa;

pub use asymptotics::{
    classify_zeros, f_eval, locate_x_infinity, summarize, x_infinity, y_infinity, AsymptoticSummary, ConfigFamily,
    ZeroClassification,
};
pub use clt::{analyze, CltResult};
pub use error::{Error, Result};
pub use fluid::{closed_form, integrate_numeric, tau_infinity, FluidSample, FluidTrajectory};
pub use mc::{run_clt, run_lln, sweep_k, sweep_with, CltReport, ExperimentConfig, LlnReport, SweepRow};
pub use model::{DensityState, InitialConfiguration, ModelParams, PopulationState};
pub use nalgebra::{DMatrix, DVector};
pub use ssa::{replicate, simulate_embedded, simulate_exact, FinalOutcome, SimulationMode, Trajectory};
