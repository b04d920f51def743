//! Exact simulation of the counting process.
//!
//! While `Y > 0` the time-changed rates `X, Y_1, .., Y_{k-1}, N-1-X-sum Y_i`
//! sum to `N - 1`, so the next increment is found by drawing one uniform
//! integer in `[0, N - 1)` and scanning the cumulative counts. The exact mode
//! adds exponential holding times with total rate `Y (N - 1)`; the embedded
//! mode skips them, which leaves the final state distribution unchanged.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InitialConfiguration, ModelParams, PopulationState};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    /// Continuous time with exponential holding times.
    Exact,
    /// Jump chain only.
    #[default]
    Embedded,
}

impl fmt::Display for SimulationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Embedded => "embedded",
        })
    }
}

impl FromStr for SimulationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "embedded" => Ok(Self::Embedded),
            other => Err(Error::Parse {
                what: "simulation mode",
                detail: format!("expected exact or embedded, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalOutcome {
    pub final_state: PopulationState,
    /// Absorption time in exact mode; `None` in embedded mode.
    pub absorption_time: Option<f64>,
    pub jump_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: PopulationState,
}

/// Recorded jump times and post-jump states, starting with the initial state
/// at time 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    /// CSV with columns `time, X, Y_1 .. Y_{k-1}, Y, Z`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let k = self.points.first().map_or(1, |p| p.state.k());
        let mut header = vec!["time".to_string(), "X".to_string()];
        header.extend((1..k).map(|i| format!("Y_{i}")));
        header.extend(["Y".to_string(), "Z".to_string()]);
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.time.to_string()];
            row.extend(p.state.counts().iter().map(u64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generator for a single run.
pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for replica `index`: stream `index` of the base seed. Replica 0
/// reproduces [`seeded_rng`].
pub fn replica_rng(base_seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Index of the next increment, chosen with probability proportional to the
/// time-changed rates. Requires `Y >= 1`.
fn draw_increment<R: Rng + ?Sized>(state: &PopulationState, n: u64, rng: &mut R) -> usize {
    let mut u = rng.random_range(0..n - 1);
    if u < state.ignorants {
        return 0;
    }
    u -= state.ignorants;
    for (i, &a) in state.aware.iter().enumerate() {
        if u < a {
            return i + 1;
        }
        u -= a;
    }
    state.k()
}

fn prepare(params: &ModelParams, init: &PopulationState) -> Result<()> {
    init.validate(params)
}

fn jump_bound(params: &ModelParams) -> u64 {
    (params.k() as u64 + 1) * params.n()
}

/// Continuous-time run using `rng`, optionally recording every jump.
pub fn simulate_exact_with<R: Rng + ?Sized>(
    params: &ModelParams,
    init: &PopulationState,
    rng: &mut R,
    record: bool,
) -> Result<(FinalOutcome, Option<Trajectory>)> {
    prepare(params, init)?;
    let n = params.n();
    let mut state = init.clone();
    let mut time = 0.0;
    let mut jumps = 0u64;
    let mut traj = record.then(|| Trajectory { points: vec![TrajectoryPoint { time, state: state.clone() }] });
    while state.spreaders > 0 {
        let total_rate = state.spreaders as f64 * (n - 1) as f64;
        let e: f64 = rng.sample(Exp1);
        time += e / total_rate;
        let idx = draw_increment(&state, n, rng);
        state.apply_unchecked(idx);
        jumps += 1;
        if let Some(t) = traj.as_mut() {
            t.points.push(TrajectoryPoint { time, state: state.clone() });
        }
    }
    debug_assert!(jumps <= jump_bound(params));
    Ok((FinalOutcome { final_state: state, absorption_time: Some(time), jump_count: jumps }, traj))
}

/// Continuous-time run seeded from `seed`.
pub fn simulate_exact(
    params: &ModelParams,
    init: &PopulationState,
    seed: u64,
    record: bool,
) -> Result<(FinalOutcome, Option<Trajectory>)> {
    simulate_exact_with(params, init, &mut seeded_rng(seed), record)
}

/// Jump-chain run using `rng`.
pub fn simulate_embedded_with<R: Rng + ?Sized>(
    params: &ModelParams,
    init: &PopulationState,
    rng: &mut R,
) -> Result<FinalOutcome> {
    prepare(params, init)?;
    let n = params.n();
    let mut state = init.clone();
    let mut jumps = 0u64;
    while state.spreaders > 0 {
        let idx = draw_increment(&state, n, rng);
        state.apply_unchecked(idx);
        jumps += 1;
    }
    debug_assert!(jumps <= jump_bound(params));
    Ok(FinalOutcome { final_state: state, absorption_time: None, jump_count: jumps })
}

pub fn simulate_embedded(params: &ModelParams, init: &PopulationState, seed: u64) -> Result<FinalOutcome> {
    simulate_embedded_with(params, init, &mut seeded_rng(seed))
}

/// One replica of a replicated experiment.
pub fn simulate_replica(
    params: &ModelParams,
    init: &PopulationState,
    base_seed: u64,
    index: u64,
    mode: SimulationMode,
) -> Result<FinalOutcome> {
    let mut rng = replica_rng(base_seed, index);
    match mode {
        SimulationMode::Exact => simulate_exact_with(params, init, &mut rng, false).map(|(o, _)| o),
        SimulationMode::Embedded => simulate_embedded_with(params, init, &mut rng),
    }
}

/// `n_replicas` independent runs in parallel. Output order and values depend
/// only on the inputs, not on the thread count.
pub fn replicate(
    params: &ModelParams,
    init: &PopulationState,
    n_replicas: usize,
    base_seed: u64,
    mode: SimulationMode,
) -> Result<Vec<FinalOutcome>> {
    if n_replicas == 0 {
        return Err(Error::Experiment("need at least one replica".into()));
    }
    prepare(params, init)?;
    (0..n_replicas as u64).into_par_iter().map(|i| simulate_replica(params, init, base_seed, i, mode)).collect()
}

/// Integer initial counts approximating `init` in a population of size `n`:
/// each class is floored, the remainder goes to stiflers, and at least one
/// spreader is present.
pub fn counts_from_fractions(init: &InitialConfiguration, n: u64) -> Result<PopulationState> {
    let nf = n as f64;
    let ignorants = (init.x0() * nf).floor() as u64;
    let aware: Vec<u64> = init.aware().iter().map(|&v| (v * nf).floor() as u64).collect();
    let mut spreaders = (init.y0() * nf).floor() as u64;
    let mut occupied = ignorants + aware.iter().sum::<u64>() + spreaders;
    let mut ignorants = ignorants;
    if spreaders == 0 {
        spreaders = 1;
        occupied += 1;
        if occupied > n {
            ignorants -= 1;
            occupied -= 1;
        }
    }
    if occupied > n {
        return Err(Error::InvalidConfig(format!("fractions need {occupied} individuals, more than N = {n}")));
    }
    Ok(PopulationState::new(ignorants, aware, spreaders, n - occupied))
}
