//! State spaces, transition scheme and the density-dependent building blocks
//! of the k-spreading Maki-Thompson chain.
//!
//! Coordinates are always ordered `(x, y_1, ..., y_{k-1}, y)` and increments
//! are always indexed `0..=k`:
//!
//! | index      | increment                  | time-changed rate     |
//! |------------|----------------------------|-----------------------|
//! | `0`        | ignorant -> 1-aware        | `X`                   |
//! | `i < k`    | i-aware -> (i+1)-aware     | `Y_i`                 |
//! | `k`        | spreader -> stifler        | `N - 1 - X - sum Y_i` |
//!
//! The `(k-1)`-aware class feeds the spreaders, and with `k = 1` index `0`
//! turns an ignorant straight into a spreader. The original chain has every
//! rate multiplied by the spreader count `Y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `x0 + sum y_i0 + y0 <= 1` for user supplied fractions.
const SIMPLEX_SLACK: f64 = 1e-12;

/// Number of hearings needed to become a spreader, and population size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    k: usize,
    n: u64,
}

impl ModelParams {
    /// Populations are capped at `u32::MAX` so that rate products fit in `u64`.
    pub fn new(k: usize, n: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParams(format!("k must be at least 1, got {k}")));
        }
        if n < 2 {
            return Err(Error::InvalidParams(format!("N must be at least 2, got {n}")));
        }
        if n > u64::from(u32::MAX) {
            return Err(Error::InvalidParams(format!("N = {n} exceeds {}", u32::MAX)));
        }
        Ok(Self { k, n })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Integer class counts of the finite chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PopulationState {
    pub ignorants: u64,
    /// `Y_1 .. Y_{k-1}`; empty when `k = 1`.
    pub aware: Vec<u64>,
    pub spreaders: u64,
    pub stiflers: u64,
}

impl PopulationState {
    pub fn new(ignorants: u64, aware: Vec<u64>, spreaders: u64, stiflers: u64) -> Self {
        Self { ignorants, aware, spreaders, stiflers }
    }

    /// One spreader, everybody else ignorant.
    pub fn standard(params: &ModelParams) -> Self {
        Self::new(params.n - 1, vec![0; params.k - 1], 1, 0)
    }

    /// Builds a state from `[X, Y_1, .., Y_{k-1}, Y, Z]`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.len() < 3 {
            return Err(Error::InvalidState(format!("need at least 3 counts (X, Y, Z), got {}", counts.len())));
        }
        let last = counts.len() - 1;
        Ok(Self::new(counts[0], counts[1..last - 1].to_vec(), counts[last - 1], counts[last]))
    }

    pub fn k(&self) -> usize {
        self.aware.len() + 1
    }

    pub fn total(&self) -> u64 {
        self.ignorants + self.aware.iter().sum::<u64>() + self.spreaders + self.stiflers
    }

    /// `[X, Y_1, .., Y_{k-1}, Y, Z]`.
    pub fn counts(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.aware.len() + 3);
        out.push(self.ignorants);
        out.extend_from_slice(&self.aware);
        out.push(self.spreaders);
        out.push(self.stiflers);
        out
    }

    pub fn is_absorbed(&self) -> bool {
        self.spreaders == 0
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.aware.len() != params.k - 1 {
            return Err(Error::InvalidState(format!(
                "expected {} aware classes for k = {}, got {}",
                params.k - 1,
                params.k,
                self.aware.len()
            )));
        }
        let total = self.total();
        if total != params.n {
            return Err(Error::InvalidState(format!("class counts sum to {total}, population is {}", params.n)));
        }
        Ok(())
    }

    /// Count in the source class of increment `index`.
    fn source(&self, index: usize) -> u64 {
        let k = self.k();
        match index {
            0 => self.ignorants,
            i if i < k => self.aware[i - 1],
            _ => self.spreaders,
        }
    }

    /// Applies increment `index` in place.
    pub fn apply(&mut self, index: usize) -> Result<()> {
        let k = self.k();
        if index > k {
            return Err(Error::InvalidTransition { index, reason: format!("only increments 0..={k} exist") });
        }
        if self.source(index) == 0 {
            return Err(Error::InvalidTransition { index, reason: "source class is empty".into() });
        }
        self.apply_unchecked(index);
        Ok(())
    }

    /// Caller guarantees `index <= k` and a nonempty source class.
    pub(crate) fn apply_unchecked(&mut self, index: usize) {
        let k = self.aware.len() + 1;
        if index == k {
            self.spreaders -= 1;
            self.stiflers += 1;
            return;
        }
        match index {
            0 => self.ignorants -= 1,
            i => self.aware[i - 1] -= 1,
        }
        if index + 1 == k {
            self.spreaders += 1;
        } else {
            self.aware[index] += 1;
        }
    }
}

/// Rates of the original chain, `[X Y, Y_1 Y, .., Y_{k-1} Y, (N-1-X-sum Y_i) Y]`.
pub fn transition_rates(state: &PopulationState, params: &ModelParams) -> Result<Vec<u64>> {
    let mut rates = time_changed_rates(state, params)?;
    for r in &mut rates {
        *r *= state.spreaders;
    }
    Ok(rates)
}

/// Rates of the time-changed chain: the original rates with the common factor
/// `Y` removed. Whenever `Y > 0` they sum to `N - 1`.
pub fn time_changed_rates(state: &PopulationState, params: &ModelParams) -> Result<Vec<u64>> {
    state.validate(params)?;
    let mut rates = Vec::with_capacity(params.k + 1);
    rates.push(state.ignorants);
    rates.extend_from_slice(&state.aware);
    // Y - 1 other spreaders plus Z stiflers; zero only when Y = 0 and Z = 0.
    let others = (params.n - 1).saturating_sub(state.ignorants + state.aware.iter().sum::<u64>());
    rates.push(others);
    Ok(rates)
}

pub fn apply_increment(state: &PopulationState, index: usize) -> Result<PopulationState> {
    let mut next = state.clone();
    next.apply(index)?;
    Ok(next)
}

/// Limiting initial fractions `(x0, y_{1,0}, .., y_{k-1,0}, y0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConfiguration {
    x0: f64,
    aware: Vec<f64>,
    y0: f64,
}

impl InitialConfiguration {
    pub fn new(x0: f64, aware: Vec<f64>, y0: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0 <= 1.0) {
            return Err(Error::InvalidConfig(format!("x0 must lie in (0, 1], got {x0}")));
        }
        for (i, &v) in aware.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("y_{{{},0}} must lie in [0, 1], got {v}", i + 1)));
            }
        }
        if !(0.0..=1.0).contains(&y0) {
            return Err(Error::InvalidConfig(format!("y0 must lie in [0, 1], got {y0}")));
        }
        let sum = x0 + aware.iter().sum::<f64>() + y0;
        if sum > 1.0 + SIMPLEX_SLACK {
            return Err(Error::InvalidConfig(format!("initial fractions sum to {sum} > 1")));
        }
        Ok(Self { x0, aware, y0 })
    }

    /// `x0 = 1`, every other fraction zero.
    pub fn standard(k: usize) -> Self {
        assert!(k >= 1, "k must be at least 1");
        Self { x0: 1.0, aware: vec![0.0; k - 1], y0: 0.0 }
    }

    /// `x0 < 1` with no aware individuals: the family whose zero count is
    /// characterised through the series coefficients.
    pub fn no_aware(k: usize, x0: f64, y0: f64) -> Result<Self> {
        Self::new(x0, vec![0.0; k.max(1) - 1], y0)
    }

    /// Fractions `state / N`. Fails when there are no ignorants.
    pub fn from_state(state: &PopulationState, n: u64) -> Result<Self> {
        let n = n as f64;
        Self::new(
            state.ignorants as f64 / n,
            state.aware.iter().map(|&c| c as f64 / n).collect(),
            state.spreaders as f64 / n,
        )
    }

    pub fn k(&self) -> usize {
        self.aware.len() + 1
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn aware(&self) -> &[f64] {
        &self.aware
    }

    pub fn z0(&self) -> f64 {
        (1.0 - (self.x0 + self.aware.iter().sum::<f64>() + self.y0)).max(0.0)
    }

    /// `y_{j,0}` with the convention `y_{0,0} = x0`.
    pub fn level(&self, j: usize) -> f64 {
        if j == 0 {
            self.x0
        } else {
            self.aware[j - 1]
        }
    }

    pub fn is_standard(&self) -> bool {
        self.x0 == 1.0
    }

    pub fn has_no_aware(&self) -> bool {
        self.aware.iter().all(|&v| v == 0.0)
    }

    pub fn initial_density(&self) -> DensityState {
        DensityState { x: self.x0, aware: self.aware.clone(), y: self.y0 }
    }
}

/// A point `(x, y_1, .., y_{k-1}, y)` of the fluid limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    pub x: f64,
    pub aware: Vec<f64>,
    pub y: f64,
}

impl DensityState {
    pub fn new(x: f64, aware: Vec<f64>, y: f64) -> Self {
        Self { x, aware, y }
    }

    pub fn from_population(state: &PopulationState, n: u64) -> Self {
        let n = n as f64;
        Self {
            x: state.ignorants as f64 / n,
            aware: state.aware.iter().map(|&c| c as f64 / n).collect(),
            y: state.spreaders as f64 / n,
        }
    }

    /// Inverse of [`DensityState::to_vector`]; `v` has length `k + 1`.
    pub fn from_slice(v: &[f64]) -> Self {
        let last = v.len() - 1;
        Self { x: v[0], aware: v[1..last].to_vec(), y: v[last] }
    }

    pub fn k(&self) -> usize {
        self.aware.len() + 1
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.k() + 1);
        v[0] = self.x;
        for (i, &a) in self.aware.iter().enumerate() {
            v[i + 1] = a;
        }
        v[self.k()] = self.y;
        v
    }

    /// Mass outside the stifler class, `x + sum y_i + y`.
    pub fn occupied(&self) -> f64 {
        self.x + self.aware.iter().sum::<f64>() + self.y
    }
}

/// The increment vectors `l_0 .. l_k` in `R^{k+1}`.
pub fn increments(k: usize) -> Vec<DVector<f64>> {
    (0..=k)
        .map(|i| {
            let mut l = DVector::zeros(k + 1);
            l[i] = -1.0;
            if i < k {
                l[i + 1] = 1.0;
            }
            l
        })
        .collect()
}

/// Density rate functions `[x, y_1, .., y_{k-1}, 1 - x - sum y_i]`.
pub fn beta(d: &DensityState) -> Vec<f64> {
    let mut out = Vec::with_capacity(d.k() + 1);
    out.push(d.x);
    out.extend_from_slice(&d.aware);
    out.push(1.0 - d.x - d.aware.iter().sum::<f64>());
    out
}

/// Drift `F = sum_i l_i beta_i`:
/// `(-x, x - y_1, y_1 - y_2, .., y_{k-1} + x + sum y_i - 1)`.
pub fn drift(d: &DensityState) -> DVector<f64> {
    let k = d.k();
    let mut f = DVector::zeros(k + 1);
    f[0] = -d.x;
    let mut prev = d.x;
    for (i, &a) in d.aware.iter().enumerate() {
        f[i + 1] = prev - a;
        prev = a;
    }
    // `prev` is now y_{k-1} (or x when k = 1).
    f[k] = prev + d.x + d.aware.iter().sum::<f64>() - 1.0;
    f
}

/// Constant Jacobian of [`drift`].
pub fn jacobian(k: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(k + 1, k + 1);
    j[(0, 0)] = -1.0;
    for i in 1..k {
        j[(i, i - 1)] = 1.0;
        j[(i, i)] = -1.0;
    }
    for c in 0..k {
        j[(k, c)] = 1.0;
    }
    j[(k, k - 1)] += 1.0;
    j
}

/// Diffusion matrix `G = sum_i l_i l_i^T beta_i`, tridiagonal.
pub fn diffusion(d: &DensityState) -> DMatrix<f64> {
    let k = d.k();
    let b = beta(d);
    let mut g = DMatrix::zeros(k + 1, k + 1);
    for (i, &rate) in b.iter().enumerate().take(k) {
        g[(i, i)] += rate;
        g[(i + 1, i + 1)] += rate;
        g[(i, i + 1)] -= rate;
        g[(i + 1, i)] -= rate;
    }
    g[(k, k)] += b[k];
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn k2_state() -> (ModelParams, PopulationState) {
        (ModelParams::new(2, 10).unwrap(), PopulationState::new(5, vec![2], 2, 1))
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 10).is_err());
        assert!(ModelParams::new(1, 1).is_err());
        assert!(ModelParams::new(1, 2).is_ok());
    }

    #[test]
    fn rates_classic_small() {
        let p = ModelParams::new(1, 3).unwrap();
        let s = PopulationState::new(2, vec![], 1, 0);
        assert_eq!(transition_rates(&s, &p).unwrap(), vec![2, 0]);
        assert_eq!(time_changed_rates(&s, &p).unwrap(), vec![2, 0]);
    }

    #[test]
    fn rates_k2() {
        let (p, s) = k2_state();
        assert_eq!(transition_rates(&s, &p).unwrap(), vec![10, 4, 4]);
        assert_eq!(time_changed_rates(&s, &p).unwrap(), vec![5, 2, 2]);
    }

    #[test]
    fn rates_vanish_without_spreaders() {
        let p = ModelParams::new(3, 10).unwrap();
        let s = PopulationState::new(4, vec![3, 1], 0, 2);
        assert!(transition_rates(&s, &p).unwrap().iter().all(|&r| r == 0));
    }

    #[test]
    fn conservation_violation_is_rejected() {
        let p = ModelParams::new(2, 10).unwrap();
        let s = PopulationState::new(5, vec![2], 2, 2);
        assert!(matches!(transition_rates(&s, &p), Err(Error::InvalidState(_))));
        let wrong_k = PopulationState::new(5, vec![], 4, 1);
        assert!(matches!(time_changed_rates(&wrong_k, &p), Err(Error::InvalidState(_))));
    }

    #[test]
    fn increments_k2() {
        let (_, s) = k2_state();
        assert_eq!(apply_increment(&s, 0).unwrap(), PopulationState::new(4, vec![3], 2, 1));
        assert_eq!(apply_increment(&s, 1).unwrap(), PopulationState::new(5, vec![1], 3, 1));
        assert_eq!(apply_increment(&s, 2).unwrap(), PopulationState::new(5, vec![2], 1, 2));
    }

    #[test]
    fn increment_k1_goes_straight_to_spreader() {
        let s = PopulationState::new(3, vec![], 1, 0);
        assert_eq!(apply_increment(&s, 0).unwrap(), PopulationState::new(2, vec![], 2, 0));
    }

    #[test]
    fn empty_source_is_rejected() {
        let s = PopulationState::new(0, vec![0, 3], 1, 0);
        assert!(matches!(apply_increment(&s, 0), Err(Error::InvalidTransition { index: 0, .. })));
        assert!(matches!(apply_increment(&s, 1), Err(Error::InvalidTransition { index: 1, .. })));
        assert!(apply_increment(&s, 2).is_ok());
        assert!(matches!(apply_increment(&s, 4), Err(Error::InvalidTransition { index: 4, .. })));
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta(&DensityState::new(1.0, vec![0.0], 0.0)), vec![1.0, 0.0, 0.0]);
        let b = beta(&DensityState::new(0.5, vec![0.2, 0.1], 0.1));
        for (got, want) in b.iter().zip([0.5, 0.2, 0.1, 0.2]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn drift_examples() {
        let f2 = drift(&DensityState::new(1.0, vec![0.0], 0.0));
        assert_eq!(f2.as_slice(), &[-1.0, 1.0, 0.0]);
        let f3 = drift(&DensityState::new(1.0, vec![0.0, 0.0], 0.0));
        assert_eq!(f3.as_slice(), &[-1.0, 1.0, 0.0, 0.0]);
        // k = 1: y' = 2x - 1
        let f1 = drift(&DensityState::new(0.3, vec![], 0.2));
        assert_abs_diff_eq!(f1[1], 2.0 * 0.3 - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_displays() {
        let j2 = jacobian(2);
        let want2 = DMatrix::from_row_slice(3, 3, &[-1., 0., 0., 1., -1., 0., 1., 2., 0.]);
        assert_eq!(j2, want2);
        let j3 = jacobian(3);
        let want3 = DMatrix::from_row_slice(4, 4, &[-1., 0., 0., 0., 1., -1., 0., 0., 0., 1., -1., 0., 1., 1., 2., 0.]);
        assert_eq!(j3, want3);
        assert_eq!(jacobian(1), DMatrix::from_row_slice(2, 2, &[-1., 0., 2., 0.]));
    }

    #[test]
    fn diffusion_k2_form() {
        let (x, y1) = (0.3, 0.25);
        let g = diffusion(&DensityState::new(x, vec![y1], 0.1));
        let want = DMatrix::from_row_slice(3, 3, &[x, -x, 0., -x, x + y1, -y1, 0., -y1, 1. - x]);
        assert_abs_diff_eq!(g, want, epsilon = 1e-15);
        let g0 = diffusion(&DensityState::new(1.0, vec![0.0], 0.0));
        assert_eq!(g0, DMatrix::from_row_slice(3, 3, &[1., -1., 0., -1., 1., 0., 0., 0., 0.]));
    }

    #[test]
    fn diffusion_k3_form() {
        let (x, y1, y2) = (0.4, 0.2, 0.15);
        let g = diffusion(&DensityState::new(x, vec![y1, y2], 0.05));
        #[rustfmt::skip]
        let want = DMatrix::from_row_slice(4, 4, &[
            x,   -x,      0.,       0.,
            -x,  x + y1,  -y1,      0.,
            0.,  -y1,     y1 + y2,  -y2,
            0.,  0.,      -y2,      1. - x - y1,
        ]);
        assert_abs_diff_eq!(g, want, epsilon = 1e-15);
    }

    #[test]
    fn initial_configuration_checks() {
        assert!(InitialConfiguration::new(0.0, vec![], 0.0).is_err());
        assert!(InitialConfiguration::new(0.8, vec![0.3], 0.0).is_err());
        assert!(InitialConfiguration::new(0.5, vec![0.2], 0.1).is_ok());
        let c = InitialConfiguration::new(0.5, vec![0.2], 0.1).unwrap();
        assert_abs_diff_eq!(c.z0(), 0.2, epsilon = 1e-15);
        assert_eq!(c.level(0), 0.5);
        assert_eq!(c.level(1), 0.2);
        assert!(InitialConfiguration::standard(3).is_standard());
    }
}
