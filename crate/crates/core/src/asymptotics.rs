//! Final-size function `f`, its zeros, and the limiting class proportions.
//!
//! With `t = ln(x0 / x)`, the fluid trajectory satisfies `y(t) = f(x(t))` and
//!
//! ```text
//! f(x) = y0 + rho(0) - (x/x0) * sum_{r<k} rho(r)/r! * t^r - t,
//! rho(r) = sum_{j=0}^{k-r-1} (k - j - r + 1) * y_{j,0},   y_{0,0} = x0.
//! ```
//!
//! `x_inf = sup{x in (0, x0] : f(x) < 0}` is the limiting fraction of
//! individuals that never hear the rumor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::InitialConfiguration;

/// Below this `t` the function is summed from its power series, which avoids
/// the cancellation of `y0 + rho(0) - t - e^{-t} (...)` near `x0`.
const SERIES_CUTOFF: f64 = 1.0;
const SERIES_TERMS: usize = 48;

/// First scan point below `x0` for the supremum search, as a fraction of `x0`.
const SCAN_START: f64 = 1e-9;
/// Geometric scan ratio `2^{-1/8}`, expressed as a step in `t`.
const SCAN_STEP: f64 = std::f64::consts::LN_2 / 8.0;
/// Bisection width in `t`; translates to relative precision in `x`.
const BISECTION_WIDTH: f64 = 1e-13;

/// Default number of grid points used by [`classify_zeros`].
pub const DEFAULT_ZERO_SCAN_POINTS: usize = 1 << 17;

/// Coefficient numerators below this magnitude count as zero when counting
/// sign changes.
const COEFF_ZERO_TOL: f64 = 1e-12;

/// `rho(r)` for `0 <= r <= k - 1`.
pub fn rho(r: usize, init: &InitialConfiguration) -> Result<f64> {
    let k = init.k();
    if r >= k {
        return Err(Error::Domain(format!("rho({r}) undefined for k = {k}; need r <= {}", k - 1)));
    }
    Ok((0..k - r).map(|j| (k - j - r + 1) as f64 * init.level(j)).sum())
}

fn rho_all(init: &InitialConfiguration) -> Vec<f64> {
    (0..init.k()).map(|r| rho(r, init).expect("r < k")).collect()
}

/// Power-series coefficients `a_0 .. a_{n_max}` of
/// `psi(t) = (y0 + rho(0) - t) e^t - sum_{r<k} rho(r)/r! t^r`.
pub fn series_coefficients(init: &InitialConfiguration, n_max: usize) -> Vec<f64> {
    let rho = rho_all(init);
    let y0 = init.y0();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut inv_fact = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            inv_fact /= n as f64;
        }
        let numer = coefficient_numerator(y0, &rho, n);
        out.push(numer * inv_fact);
    }
    out
}

/// `n! a_n`. The difference `rho(0) - rho(n)` is formed first so that
/// `a_0 = y0` exactly.
fn coefficient_numerator(y0: f64, rho: &[f64], n: usize) -> f64 {
    match rho.get(n) {
        Some(r) => y0 + (rho[0] - r) - n as f64,
        None => y0 + rho[0] - n as f64,
    }
}

/// `f` bundled with the quantities it depends on, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct FinalSizeFunction {
    x0: f64,
    y0: f64,
    rho: Vec<f64>,
    series: Vec<f64>,
}

impl FinalSizeFunction {
    pub fn new(init: &InitialConfiguration) -> Self {
        Self { x0: init.x0(), y0: init.y0(), rho: rho_all(init), series: series_coefficients(init, SERIES_TERMS) }
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `y0 + rho(0)`; `phi(t) < 0` for every `t` beyond it.
    pub fn level(&self) -> f64 {
        self.y0 + self.rho[0]
    }

    /// `f(x0 e^{-t})` for `t >= 0`.
    pub fn phi(&self, t: f64) -> f64 {
        if t < SERIES_CUTOFF {
            let mut acc = 0.0;
            let mut pow = 1.0;
            for &a in &self.series {
                acc += a * pow;
                pow *= t;
            }
            (-t).exp() * acc
        } else {
            let mut sum = 0.0;
            let mut term = 1.0;
            for (r, &rho) in self.rho.iter().enumerate() {
                if r > 0 {
                    term *= t / r as f64;
                }
                sum += rho * term;
            }
            self.level() - t - (-t).exp() * sum
        }
    }

    /// `f(x)` on `(0, x0]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= self.x0) {
            return Err(Error::Domain(format!("f is defined on (0, {}], got x = {x}", self.x0)));
        }
        Ok(self.phi((self.x0 / x).ln()))
    }
}

/// `f(x)` for the given initial configuration.
pub fn f_eval(x: f64, init: &InitialConfiguration) -> Result<f64> {
    FinalSizeFunction::new(init).eval(x)
}

/// Regularized lower incomplete gamma `P(k, t) = gamma(k, t) / (k-1)!`,
/// which is also `P(R >= k)` for `R ~ Poisson(t)`.
pub fn gamma_lower_regularized(k: usize, t: f64) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    if t <= 0.0 {
        return 0.0;
    }
    if t < (k + 1) as f64 {
        // e^{-t} sum_{r >= k} t^r / r!, all terms positive.
        let mut term = (-t).exp();
        for r in 1..=k {
            term *= t / r as f64;
        }
        let mut sum = term;
        let mut r = k;
        loop {
            r += 1;
            term *= t / r as f64;
            sum += term;
            if term <= sum * 1e-17 || term == 0.0 {
                break;
            }
        }
        sum
    } else {
        // 1 - e^{-t} sum_{r < k} t^r / r!; the subtracted part is small here.
        let mut term = (-t).exp();
        let mut sum = term;
        for r in 1..k {
            term *= t / r as f64;
            sum += term;
        }
        1.0 - sum
    }
}

/// `gamma(k, t) = int_0^t u^{k-1} e^{-u} du` for integer `k >= 1`.
pub fn gamma_lower(k: usize, t: f64) -> f64 {
    gamma_lower_regularized(k, t) * factorial(k - 1)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `P(R >= k)` for `R ~ Poisson(t)`.
pub fn poisson_tail(k: usize, t: f64) -> f64 {
    gamma_lower_regularized(k, t)
}

/// `E(R; R > k) = t P(R >= k)` for `R ~ Poisson(t)`.
pub fn poisson_partial_mean(k: usize, t: f64) -> f64 {
    t * poisson_tail(k, t)
}

/// `f` for the standard configuration in incomplete-gamma form,
/// `((1 + k + ln x) gamma(k, -ln x) - x (-ln x)^k) / (k-1)!`.
pub fn f_standard(x: f64, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("standard f is defined on (0, 1], got x = {x}")));
    }
    let t = -x.ln();
    let g = gamma_lower(k, t);
    Ok(((1.0 + k as f64 - t) * g - x * t.powi(k as i32)) / factorial(k - 1))
}

/// Location of `sup{x : f(x) < 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XInfinity {
    pub x_inf: f64,
    /// `ln(x0 / x_inf)`.
    pub tau_inf: f64,
    /// `f < 0` immediately below `x0`, so the supremum is `x0` itself and no
    /// outbreak happens in the limit.
    pub degenerate: bool,
}

/// Locates `x_inf` by a geometric scan downward from just below `x0`,
/// followed by bisection.
pub fn locate_x_infinity(init: &InitialConfiguration) -> XInfinity {
    let f = FinalSizeFunction::new(init);
    let x0 = f.x0();
    let t_start = -(-SCAN_START).ln_1p();
    if f.phi(t_start) < 0.0 {
        return XInfinity { x_inf: x0, tau_inf: 0.0, degenerate: true };
    }
    // phi < 0 for all t > y0 + rho(0), so the scan terminates.
    let mut lo = t_start;
    let mut hi = t_start + SCAN_STEP;
    while f.phi(hi) >= 0.0 {
        lo = hi;
        hi += SCAN_STEP;
    }
    let tau = bisect_sign_change(|t| f.phi(t), lo, hi, BISECTION_WIDTH);
    XInfinity { x_inf: x0 * (-tau).exp(), tau_inf: tau, degenerate: false }
}

pub fn x_infinity(init: &InitialConfiguration) -> f64 {
    locate_x_infinity(init).x_inf
}

/// Bisection for a sign change of `g` on `[lo, hi]` with `g(lo) >= 0 > g(hi)`
/// (or the reverse); returns the bracket midpoint.
pub(crate) fn bisect_sign_change(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let lo_nonneg = g(lo) >= 0.0;
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) >= 0.0) == lo_nonneg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `y_i(t) = e^{-t} sum_{r=0}^{i} y_{i-r,0} t^r / r!` for `i = 1..k-1`.
pub(crate) fn aware_levels_at(init: &InitialConfiguration, t: f64) -> Vec<f64> {
    let decay = (-t).exp();
    (1..init.k())
        .map(|i| {
            let mut term = 1.0;
            let mut sum = init.level(i);
            for r in 1..=i {
                term *= t / r as f64;
                sum += init.level(i - r) * term;
            }
            decay * sum
        })
        .collect()
}

/// Limiting aware fractions `y_{i,inf}` and stifler fraction `z_inf`.
pub fn y_infinity(init: &InitialConfiguration, x_inf: f64) -> (Vec<f64>, f64) {
    let t = (init.x0() / x_inf).ln();
    let y = aware_levels_at(init, t);
    let z = 1.0 - x_inf - y.iter().sum::<f64>();
    (y, z)
}

/// Which zero-count result applies to a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConfigFamily {
    /// `x0 = 1`: exactly two zeros on `(0, 1]`.
    Standard,
    /// `x0 < 1` and no aware individuals, split into cases 1 to 4 by `y0`
    /// and the thresholds `x0 <= k/(k+1)`, `y0 + (k+1) x0 <= k`.
    NoAware {
        case: u8,
    },
    General,
}

impl ConfigFamily {
    pub fn of(init: &InitialConfiguration) -> Self {
        let k = init.k() as f64;
        if init.is_standard() {
            ConfigFamily::Standard
        } else if init.has_no_aware() {
            let (x0, y0) = (init.x0(), init.y0());
            let case = match (y0 == 0.0, y0 > 0.0) {
                (true, _) if (k + 1.0) * x0 <= k => 1,
                (true, _) => 2,
                (_, true) if y0 + (k + 1.0) * x0 <= k => 3,
                _ => 4,
            };
            ConfigFamily::NoAware { case }
        } else {
            ConfigFamily::General
        }
    }

    /// Zero counts on `(0, x0]` established for this family. With `k = 1`
    /// and no spreaders, `a_0 = 0` leaves a single sign change, so `f` has one
    /// interior zero besides `x0`.
    pub fn proven_counts(&self, k: usize) -> Option<Vec<usize>> {
        match self {
            ConfigFamily::Standard => Some(vec![2]),
            ConfigFamily::NoAware { case: 1 | 3 } => Some(vec![1]),
            ConfigFamily::NoAware { case: 2 } if k == 1 => Some(vec![2]),
            ConfigFamily::NoAware { .. } => Some(vec![1, 3]),
            ConfigFamily::General => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroClassification {
    pub k: usize,
    /// Sign changes `C` in the coefficient sequence `a_n`.
    pub sign_changes: usize,
    /// Counts on the open interval `(0, x0)` allowed by parity: `C, C-2, ..`.
    pub interior_counts: Vec<usize>,
    pub family: ConfigFamily,
    /// Counts on `(0, x0]` proven for the family, if it is one of the
    /// analysed families.
    pub proven_counts: Option<Vec<usize>>,
    /// Counts on `(0, x0]` still possible: the proven set when available,
    /// otherwise the parity set shifted by the zero at `x0` when `y0 = 0`.
    pub possible_counts: Vec<usize>,
    /// Zeros found by the grid scan, ascending; includes `x0` when `y0 = 0`.
    pub zeros: Vec<f64>,
    /// Grid resolution of the scan that produced `zeros`.
    pub scan_points: usize,
}

impl ZeroClassification {
    pub fn located_count(&self) -> usize {
        self.zeros.len()
    }

    /// Zeros located strictly inside `(0, x0)`.
    pub fn interior_located(&self, x0: f64) -> usize {
        self.zeros.iter().filter(|&&z| z < x0).count()
    }
}

fn count_sign_changes(init: &InitialConfiguration) -> usize {
    let rho = rho_all(init);
    let y0 = init.y0();
    let c = y0 + rho[0];
    // a_n < 0 for n >= k once n > y0 + rho(0).
    let n_max = (init.k() + 2).max(c.ceil() as usize + 2);
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for n in 0..=n_max {
        let numer = coefficient_numerator(y0, &rho, n);
        if numer.abs() <= COEFF_ZERO_TOL {
            continue;
        }
        let positive = numer > 0.0;
        if let Some(prev) = last {
            if prev != positive {
                changes += 1;
            }
        }
        last = Some(positive);
    }
    changes
}

pub fn classify_zeros(init: &InitialConfiguration) -> ZeroClassification {
    classify_zeros_with_resolution(init, DEFAULT_ZERO_SCAN_POINTS)
}

/// Zero classification with an explicit scan resolution: `points` uniformly
/// spaced values of `t = ln(x0/x)` on `(0, y0 + rho(0) + 1]`, i.e. a
/// log-spaced grid in `x`.
pub fn classify_zeros_with_resolution(init: &InitialConfiguration, points: usize) -> ZeroClassification {
    let points = points.max(16);
    let f = FinalSizeFunction::new(init);
    let c = count_sign_changes(init);
    let interior_counts: Vec<usize> = (0..=c / 2).map(|j| c - 2 * j).collect();
    let family = ConfigFamily::of(init);
    let proven = family.proven_counts(init.k());
    let boundary = usize::from(init.y0() == 0.0);
    let possible_counts = match &proven {
        Some(p) => p.clone(),
        None => {
            let mut v: Vec<usize> = interior_counts.iter().map(|n| n + boundary).collect();
            v.sort_unstable();
            v
        }
    };

    let t_max = f.level() + 1.0;
    let dt = t_max / points as f64;
    let mut roots_t = Vec::new();
    let mut prev_t = dt;
    let mut prev = f.phi(prev_t);
    for j in 2..=points {
        let t = dt * j as f64;
        let v = f.phi(t);
        if v == 0.0 {
            roots_t.push(t);
        } else if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            roots_t.push(bisect_sign_change(|s| f.phi(s), prev_t, t, BISECTION_WIDTH));
        }
        prev = v;
        prev_t = t;
    }
    let x0 = f.x0();
    let mut zeros: Vec<f64> = roots_t.iter().map(|t| x0 * (-t).exp()).collect();
    if boundary == 1 {
        zeros.push(x0);
    }
    zeros.sort_by(|a, b| a.partial_cmp(b).expect("finite zeros"));

    ZeroClassification {
        k: init.k(),
        sign_changes: c,
        interior_counts,
        family,
        proven_counts: proven,
        possible_counts,
        zeros,
        scan_points: points,
    }
}

/// Everything the law of large numbers says about the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSummary {
    pub k: usize,
    pub x0: f64,
    pub tau_inf: f64,
    pub x_inf: f64,
    pub y_inf: Vec<f64>,
    pub z_inf: f64,
    pub degenerate: bool,
    /// Possible numbers of zeros of `f` on `(0, x0]`.
    pub zero_count_bound: Vec<usize>,
    pub zeros: Vec<f64>,
}

pub fn summarize(init: &InitialConfiguration) -> AsymptoticSummary {
    let loc = locate_x_infinity(init);
    let (y_inf, z_inf) = y_infinity(init, loc.x_inf);
    let zeros = classify_zeros(init);
    AsymptoticSummary {
        k: init.k(),
        x0: init.x0(),
        tau_inf: loc.tau_inf,
        x_inf: loc.x_inf,
        y_inf,
        z_inf,
        degenerate: loc.degenerate,
        zero_count_bound: zeros.possible_counts,
        zeros: zeros.zeros,
    }
}
