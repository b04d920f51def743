//! Monte Carlo checks of the law of large numbers and the central limit
//! theorem for the final state.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{locate_x_infinity, y_infinity};
use crate::clt::{analyze, CltResult};
use crate::error::{Error, Result};
use crate::model::{InitialConfiguration, ModelParams, PopulationState};
use crate::ssa::{counts_from_fractions, replica_rng, replicate, FinalOutcome, SimRng, SimulationMode};

/// Class means must lie within this many standard errors of the limit.
pub const LLN_Z_THRESHOLD: f64 = 4.0;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const BOOTSTRAP_CONFIDENCE: f64 = 0.999;
/// Stream reserved for bootstrap resampling, disjoint from replica streams.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

/// A replicated experiment: integer initial counts for the simulator and the
/// limiting fractions used as theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub n_replicas: usize,
    pub base_seed: u64,
    pub mode: SimulationMode,
    pub init_counts: PopulationState,
    pub theory: InitialConfiguration,
}

impl ExperimentConfig {
    /// Counts obtained by flooring `init * n` (see [`counts_from_fractions`]),
    /// with `init` itself as the theory configuration.
    pub fn from_fractions(
        init: &InitialConfiguration,
        n: u64,
        n_replicas: usize,
        base_seed: u64,
        mode: SimulationMode,
    ) -> Result<Self> {
        let params = ModelParams::new(init.k(), n)?;
        let init_counts = counts_from_fractions(init, n)?;
        let cfg = Self { params, n_replicas, base_seed, mode, init_counts, theory: init.clone() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Explicit counts; the theory configuration is `counts / N`.
    pub fn from_counts(
        counts: PopulationState,
        n_replicas: usize,
        base_seed: u64,
        mode: SimulationMode,
    ) -> Result<Self> {
        let params = ModelParams::new(counts.k(), counts.total())?;
        let theory = InitialConfiguration::from_state(&counts, params.n())?;
        let cfg = Self { params, n_replicas, base_seed, mode, init_counts: counts, theory };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.init_counts.validate(&self.params)?;
        if self.n_replicas == 0 {
            return Err(Error::InvalidConfig("need at least one replica".into()));
        }
        if self.theory.k() != self.params.k() {
            return Err(Error::InvalidConfig(format!(
                "theory configuration has k = {}, parameters have k = {}",
                self.theory.k(),
                self.params.k()
            )));
        }
        Ok(())
    }

    /// Parses `key = value` lines (`#` starts a comment). Keys: `k`, `n`,
    /// `replicas`, `seed`, `mode`, and either `counts` (comma separated
    /// `X, Y_1.., Y, Z`) or fractions via `standard = true` / `x0`, `yi0`
    /// (comma separated), `y0`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut k = None;
        let mut n = None;
        let mut replicas = None;
        let mut seed = 0u64;
        let mut mode = SimulationMode::default();
        let mut counts = None;
        let mut standard = false;
        let mut x0 = None;
        let mut y0 = None;
        let mut yi0: Option<Vec<f64>> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                what: "experiment config",
                detail: format!("line {}: expected key = value", lineno + 1),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "k" => k = Some(parse_num::<usize>(key, value)?),
                "n" => n = Some(parse_num::<u64>(key, value)?),
                "replicas" => replicas = Some(parse_num::<usize>(key, value)?),
                "seed" => seed = parse_num(key, value)?,
                "mode" => mode = value.parse()?,
                "counts" => counts = Some(parse_list::<u64>(key, value)?),
                "standard" => standard = parse_num::<bool>(key, value)?,
                "x0" => x0 = Some(parse_num::<f64>(key, value)?),
                "y0" => y0 = Some(parse_num::<f64>(key, value)?),
                "yi0" => yi0 = Some(parse_list::<f64>(key, value)?),
                other => {
                    return Err(Error::Parse { what: "experiment config", detail: format!("unknown key {other:?}") })
                }
            }
        }

        let replicas = replicas.unwrap_or(1);
        if let Some(c) = counts {
            let state = PopulationState::from_counts(&c)?;
            if k.is_some_and(|k| k != state.k()) || n.is_some_and(|n| n != state.total()) {
                return Err(Error::InvalidConfig("counts disagree with k or n".into()));
            }
            return Self::from_counts(state, replicas, seed, mode);
        }
        let k = k.ok_or_else(|| Error::InvalidConfig("missing k".into()))?;
        let n = n.ok_or_else(|| Error::InvalidConfig("missing n".into()))?;
        let init = if standard {
            if k == 0 {
                return Err(Error::InvalidParams("k must be at least 1".into()));
            }
            InitialConfiguration::standard(k)
        } else {
            let x0 = x0.ok_or_else(|| Error::InvalidConfig("need standard = true, counts, or x0".into()))?;
            let aware = yi0.unwrap_or_else(|| vec![0.0; k.saturating_sub(1)]);
            if aware.len() + 1 != k {
                return Err(Error::InvalidConfig(format!("yi0 needs {} entries", k.saturating_sub(1))));
            }
            InitialConfiguration::new(x0, aware, y0.unwrap_or(0.0))?
        };
        Self::from_fractions(&init, n, replicas, seed, mode)
    }

    /// Inverse of [`parse`](Self::parse), always in counts form.
    pub fn to_config_string(&self) -> String {
        let counts: Vec<String> = self.init_counts.counts().iter().map(u64::to_string).collect();
        format!(
            "k = {}\nn = {}\nreplicas = {}\nseed = {}\nmode = {}\ncounts = {}\n",
            self.params.k(),
            self.params.n(),
            self.n_replicas,
            self.base_seed,
            self.mode,
            counts.join(",")
        )
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse { what: "experiment config", detail: format!("bad value {value:?} for {key}") })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

/// Names of the final classes `x, y_1.., y, z`.
fn class_names(k: usize) -> Vec<String> {
    let mut names = vec!["x".to_string()];
    names.extend((1..k).map(|i| format!("y_{i}")));
    names.extend(["y".to_string(), "z".to_string()]);
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEstimate {
    pub class: String,
    pub mean: f64,
    pub std_error: f64,
    pub theory: f64,
    /// `(mean - theory) / std_error`; infinite when the standard error is 0
    /// and the mean is off.
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnReport {
    pub k: usize,
    pub n: u64,
    pub n_replicas: usize,
    pub base_seed: u64,
    pub mode: SimulationMode,
    pub classes: Vec<ClassEstimate>,
    /// Every final state has `X + sum Y_i + Y + Z = N`.
    pub conservation_ok: bool,
    pub pass: bool,
}

impl LlnReport {
    /// CSV with columns `class, mean, std_error, theory, z_score, pass`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["class", "mean", "std_error", "theory", "z_score", "pass"])?;
        for c in &self.classes {
            w.write_record([
                c.class.clone(),
                c.mean.to_string(),
                c.std_error.to_string(),
                c.theory.to_string(),
                c.z_score.to_string(),
                c.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn z_score(mean: f64, se: f64, theory: f64) -> f64 {
    let diff = mean - theory;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Limiting fractions `(x, y_1.., y = 0, z)`.
fn limit_fractions(theory: &InitialConfiguration) -> Vec<f64> {
    let x_inf = locate_x_infinity(theory).x_inf;
    let (aware, z) = y_infinity(theory, x_inf);
    let mut v = vec![x_inf];
    v.extend(aware);
    v.extend([0.0, z]);
    v
}

/// LLN report from already simulated outcomes.
pub fn lln_from_outcomes(config: &ExperimentConfig, outcomes: &[FinalOutcome]) -> Result<LlnReport> {
    if outcomes.is_empty() {
        return Err(Error::Experiment("no outcomes".into()));
    }
    let k = config.params.k();
    let n = config.params.n();
    let nf = n as f64;
    let names = class_names(k);
    let theory = limit_fractions(&config.theory);
    let conservation_ok = outcomes.iter().all(|o| o.final_state.total() == n);
    let mut classes = Vec::with_capacity(names.len());
    for (c, name) in names.into_iter().enumerate() {
        let values: Vec<f64> = outcomes.iter().map(|o| o.final_state.counts()[c] as f64 / nf).collect();
        let (mean, se) = mean_and_se(&values);
        let z = z_score(mean, se, theory[c]);
        classes.push(ClassEstimate {
            class: name,
            mean,
            std_error: se,
            theory: theory[c],
            z_score: z,
            pass: z.abs() <= LLN_Z_THRESHOLD,
        });
    }
    let pass = conservation_ok && classes.iter().all(|c| c.pass);
    Ok(LlnReport {
        k,
        n,
        n_replicas: outcomes.len(),
        base_seed: config.base_seed,
        mode: config.mode,
        classes,
        conservation_ok,
        pass,
    })
}

pub fn run_lln(config: &ExperimentConfig) -> Result<LlnReport> {
    config.validate()?;
    let outcomes = replicate(&config.params, &config.init_counts, config.n_replicas, config.base_seed, config.mode)?;
    lln_from_outcomes(config, &outcomes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEntry {
    pub row: usize,
    pub col: usize,
    pub sample: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub theory: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub k: usize,
    pub n: u64,
    pub n_replicas: usize,
    pub base_seed: u64,
    pub mode: SimulationMode,
    /// Coordinate names `x, y_1, .., y_{k-1}`.
    pub coordinates: Vec<String>,
    pub mean_fluctuation: Vec<f64>,
    pub mean_std_error: Vec<f64>,
    pub centering_norm: f64,
    /// `centering_norm <= 4 max(mean_std_error)`.
    pub centering_pass: bool,
    pub resamples: usize,
    pub confidence: f64,
    /// Upper triangle, row-major.
    pub entries: Vec<CovarianceEntry>,
    /// Every theoretical entry lies in its bootstrap interval.
    pub pass: bool,
}

impl CltReport {
    /// CSV with columns `row, col, sample, ci_lower, ci_upper, theory, pass`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row", "col", "sample", "ci_lower", "ci_upper", "theory", "pass"])?;
        for e in &self.entries {
            w.write_record([
                self.coordinates[e.row].clone(),
                self.coordinates[e.col].clone(),
                e.sample.to_string(),
                e.ci_lower.to_string(),
                e.ci_upper.to_string(),
                e.theory.to_string(),
                e.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample covariance (denominator `n - 1`) of the rows selected by `idx`.
#[allow(clippy::needless_range_loop)]
fn covariance(samples: &[Vec<f64>], idx: impl Iterator<Item = usize> + Clone) -> Vec<Vec<f64>> {
    let dim = samples[0].len();
    let count = idx.clone().count() as f64;
    let mut mean = vec![0.0; dim];
    for i in idx.clone() {
        for d in 0..dim {
            mean[d] += samples[i][d];
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut cov = vec![vec![0.0; dim]; dim];
    for i in idx {
        let s = &samples[i];
        for a in 0..dim {
            let da = s[a] - mean[a];
            for b in a..dim {
                cov[a][b] += da * (s[b] - mean[b]);
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            cov[a][b] /= count - 1.0;
            cov[b][a] = cov[a][b];
        }
    }
    cov
}

pub fn sample_covariance(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    covariance(samples, 0..samples.len())
}

/// Linear interpolation between order statistics of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Lower and upper bound matrices.
pub type CovarianceInterval = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Percentile bootstrap intervals for every covariance entry.
pub fn bootstrap_covariance_ci<R: Rng + ?Sized>(
    samples: &[Vec<f64>],
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<CovarianceInterval> {
    let n = samples.len();
    if n < 2 || resamples == 0 {
        return Err(Error::Experiment("bootstrap needs at least two samples and one resample".into()));
    }
    let dim = samples[0].len();
    let mut draws = vec![vec![Vec::with_capacity(resamples); dim]; dim];
    let mut idx = vec![0usize; n];
    for _ in 0..resamples {
        idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
        let c = covariance(samples, idx.iter().copied());
        for a in 0..dim {
            for b in 0..dim {
                draws[a][b].push(c[a][b]);
            }
        }
    }
    let alpha = (1.0 - confidence) / 2.0;
    let mut lower = vec![vec![0.0; dim]; dim];
    let mut upper = vec![vec![0.0; dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            let d = &mut draws[a][b];
            d.sort_by(f64::total_cmp);
            lower[a][b] = quantile(d, alpha);
            upper[a][b] = quantile(d, 1.0 - alpha);
        }
    }
    Ok((lower, upper))
}

/// CLT report from already simulated outcomes and the theoretical result.
pub fn clt_from_outcomes(
    config: &ExperimentConfig,
    outcomes: &[FinalOutcome],
    theory: &CltResult,
) -> Result<CltReport> {
    let k = config.params.k();
    if outcomes.len() < 2 {
        return Err(Error::Experiment("need at least two outcomes".into()));
    }
    if theory.k != k {
        return Err(Error::Experiment("theory and experiment disagree on k".into()));
    }
    let n = config.params.n();
    let nf = n as f64;
    let root_n = nf.sqrt();
    let mut center = vec![theory.x_inf];
    center.extend(&theory.y_inf);
    let samples: Vec<Vec<f64>> = outcomes
        .iter()
        .map(|o| {
            let c = o.final_state.counts();
            (0..k).map(|i| root_n * (c[i] as f64 / nf - center[i])).collect()
        })
        .collect();

    let mut mean_fluctuation = Vec::with_capacity(k);
    let mut mean_std_error = Vec::with_capacity(k);
    for d in 0..k {
        let col: Vec<f64> = samples.iter().map(|s| s[d]).collect();
        let (m, se) = mean_and_se(&col);
        mean_fluctuation.push(m);
        mean_std_error.push(se);
    }
    let centering_norm = mean_fluctuation.iter().map(|m| m * m).sum::<f64>().sqrt();
    let max_se = mean_std_error.iter().copied().fold(0.0, f64::max);
    let centering_pass = centering_norm <= 4.0 * max_se;

    let cov = sample_covariance(&samples);
    let mut rng: SimRng = replica_rng(config.base_seed, BOOTSTRAP_STREAM);
    let (lower, upper) = bootstrap_covariance_ci(&samples, BOOTSTRAP_RESAMPLES, BOOTSTRAP_CONFIDENCE, &mut rng)?;
    let mut entries = Vec::new();
    for a in 0..k {
        for b in a..k {
            let t = theory.sigma[(a, b)];
            entries.push(CovarianceEntry {
                row: a,
                col: b,
                sample: cov[a][b],
                ci_lower: lower[a][b],
                ci_upper: upper[a][b],
                theory: t,
                pass: lower[a][b] <= t && t <= upper[a][b],
            });
        }
    }
    let pass = entries.iter().all(|e| e.pass);
    let mut coordinates = vec!["x".to_string()];
    coordinates.extend((1..k).map(|i| format!("y_{i}")));
    Ok(CltReport {
        k,
        n,
        n_replicas: outcomes.len(),
        base_seed: config.base_seed,
        mode: config.mode,
        coordinates,
        mean_fluctuation,
        mean_std_error,
        centering_norm,
        centering_pass,
        resamples: BOOTSTRAP_RESAMPLES,
        confidence: BOOTSTRAP_CONFIDENCE,
        entries,
        pass,
    })
}

pub fn run_clt(config: &ExperimentConfig) -> Result<CltReport> {
    config.validate()?;
    let theory = analyze(&config.theory)?;
    let outcomes = replicate(&config.params, &config.init_counts, config.n_replicas, config.base_seed, config.mode)?;
    clt_from_outcomes(config, &outcomes, &theory)
}

/// Limit quantities of the standard configuration for one `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub x_inf: f64,
    pub y_inf: Vec<f64>,
    pub z_inf: f64,
    pub tau_inf: f64,
}

pub fn sweep_k(k_min: usize, k_max: usize) -> Result<Vec<SweepRow>> {
    sweep_with(k_min, k_max, |k| Ok(InitialConfiguration::standard(k)))
}

/// Limit quantities of `make(k)` for `k = k_min..=k_max`.
pub fn sweep_with<F>(k_min: usize, k_max: usize, make: F) -> Result<Vec<SweepRow>>
where
    F: Fn(usize) -> Result<InitialConfiguration>,
{
    if k_min < 1 || k_min > k_max {
        return Err(Error::Domain(format!("need 1 <= k_min <= k_max, got {k_min}..={k_max}")));
    }
    (k_min..=k_max)
        .map(|k| {
            let init = make(k)?;
            let loc = locate_x_infinity(&init);
            let (y_inf, z_inf) = y_infinity(&init, loc.x_inf);
            Ok(SweepRow { k, x_inf: loc.x_inf, y_inf, z_inf, tau_inf: loc.tau_inf })
        })
        .collect()
}

/// CSV with columns `k, x_inf, z_inf, tau_inf, y_inf` (aware fractions
/// joined by `;`).
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "x_inf", "z_inf", "tau_inf", "y_inf"])?;
    for r in rows {
        let y: Vec<String> = r.y_inf.iter().map(f64::to_string).collect();
        w.write_record([
            r.k.to_string(),
            r.x_inf.to_string(),
            r.z_inf.to_string(),
            r.tau_inf.to_string(),
            y.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
