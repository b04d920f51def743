//! Shared oracles for the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use rumorlab::{ModelParams, PopulationState};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Exact final-state distribution of the jump chain, by recursion over the
/// jump tree. Transition probabilities are recomputed from first principles:
/// with `Y > 0` the spreader meets one of the other `N - 1` individuals
/// uniformly at random.
pub fn exact_final_distribution(params: &ModelParams, init: &PopulationState) -> BTreeMap<PopulationState, f64> {
    let mut memo: HashMap<PopulationState, BTreeMap<PopulationState, f64>> = HashMap::new();
    final_from(params, init, &mut memo)
}

fn final_from(
    params: &ModelParams,
    s: &PopulationState,
    memo: &mut HashMap<PopulationState, BTreeMap<PopulationState, f64>>,
) -> BTreeMap<PopulationState, f64> {
    if let Some(d) = memo.get(s) {
        return d.clone();
    }
    let mut out = BTreeMap::new();
    if s.spreaders == 0 {
        out.insert(s.clone(), 1.0);
    } else {
        let others = (params.n() - 1) as f64;
        let k = s.k();
        // Contact with an ignorant or an aware individual moves them up one level.
        let mut moves: Vec<(f64, PopulationState)> = Vec::new();
        if s.ignorants > 0 {
            let mut t = s.clone();
            t.ignorants -= 1;
            if k == 1 {
                t.spreaders += 1;
            } else {
                t.aware[0] += 1;
            }
            moves.push((s.ignorants as f64 / others, t));
        }
        for i in 0..k.saturating_sub(1) {
            if s.aware[i] > 0 {
                let mut t = s.clone();
                t.aware[i] -= 1;
                if i + 1 == k - 1 {
                    t.spreaders += 1;
                } else {
                    t.aware[i + 1] += 1;
                }
                moves.push((s.aware[i] as f64 / others, t));
            }
        }
        // Contact with another spreader or a stifler stifles the caller.
        let knowing = (s.spreaders - 1 + s.stiflers) as f64;
        if knowing > 0.0 {
            let mut t = s.clone();
            t.spreaders -= 1;
            t.stiflers += 1;
            moves.push((knowing / others, t));
        }
        for (p, t) in moves {
            for (f, q) in final_from(params, &t, memo) {
                *out.entry(f).or_insert(0.0) += p * q;
            }
        }
    }
    memo.insert(s.clone(), out.clone());
    out
}

/// Pearson chi-square p-value of `observed` counts against `expected`
/// probabilities. Cells with expected count below 5 are pooled.
pub fn chi_square_p_value(
    expected: &BTreeMap<PopulationState, f64>,
    observed: &HashMap<PopulationState, u64>,
    n: u64,
) -> f64 {
    let total = n as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pooled_e, mut pooled_o) = (0.0, 0.0);
    for (state, &p) in expected {
        let e = p * total;
        let o = *observed.get(state).unwrap_or(&0) as f64;
        if e < 5.0 {
            pooled_e += e;
            pooled_o += o;
        } else {
            stat += (o - e).powi(2) / e;
            cells += 1;
        }
    }
    let unexpected: u64 = observed.iter().filter(|(s, _)| !expected.contains_key(*s)).map(|(_, &c)| c).sum();
    assert_eq!(unexpected, 0, "simulator reached a final state the oracle says is impossible");
    if pooled_e > 0.0 {
        stat += (pooled_o - pooled_e).powi(2) / pooled_e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Small configurations used by the oracle comparisons.
pub fn desk_cases() -> Vec<(ModelParams, PopulationState)> {
    let mut cases = Vec::new();
    for n in 2..=6u64 {
        let p = ModelParams::new(1, n).unwrap();
        cases.push((p, PopulationState::standard(&p)));
        let p = ModelParams::new(2, n).unwrap();
        cases.push((p, PopulationState::standard(&p)));
    }
    let p = ModelParams::new(2, 6).unwrap();
    cases.push((p, PopulationState::new(2, vec![2], 1, 1)));
    cases
}

/// Max absolute entrywise difference.
pub fn max_abs_diff(a: &rumorlab::DMatrix<f64>, b: &rumorlab::DMatrix<f64>) -> f64 {
    (a - b).amax()
}
