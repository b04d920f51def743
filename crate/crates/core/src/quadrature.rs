//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued
//! integrands. Every component shares the subdivision; the error of an
//! interval is the largest componentwise `|K15 - G7|`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone)]
pub struct QuadratureResult {
    pub value: Vec<f64>,
    /// Sum over intervals of the per-interval error bound.
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &F, a: f64, b: f64, dim: usize) -> Segment
where
    F: Fn(f64) -> Vec<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k15 = vec![0.0; dim];
    let mut g7 = vec![0.0; dim];

    let fc = f(center);
    for d in 0..dim {
        k15[d] = WGK[7] * fc[d];
        g7[d] = WG[3] * fc[d];
    }
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(center - half * x);
        let f2 = f(center + half * x);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            k15[d] += wk * s;
            if j % 2 == 1 {
                g7[d] += WG[j / 2] * s;
            }
        }
    }
    let mut error: f64 = 0.0;
    for d in 0..dim {
        k15[d] *= half;
        g7[d] *= half;
        error = error.max((k15[d] - g7[d]).abs());
    }
    Segment { a, b, value: k15, error }
}

/// Integrates `f` over `[a, b]` until the summed error estimate is at most
/// `abs_tol`, using at most `max_intervals` subintervals.
pub fn integrate_vector<F>(f: F, a: f64, b: f64, abs_tol: f64, max_intervals: usize) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Vec<f64>,
{
    let dim = f(a).len();
    let mut evaluations = 1;
    if a == b {
        return Ok(QuadratureResult { value: vec![0.0; dim], error: 0.0, intervals: 0, evaluations });
    }
    let mut heap = BinaryHeap::new();
    heap.push(kronrod(&f, a, b, dim));
    evaluations += 15;
    let mut total_error = heap.peek().map_or(0.0, |s| s.error);

    while total_error > abs_tol {
        if heap.len() >= max_intervals {
            return Err(Error::Quadrature { tolerance: abs_tol, estimate: total_error });
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { tolerance: abs_tol, estimate: total_error });
        }
        let left = kronrod(&f, worst.a, mid, dim);
        let right = kronrod(&f, mid, worst.b, dim);
        evaluations += 30;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Sum the smallest contributions first.
    let mut segments = heap.into_vec();
    segments.sort_by(|p, q| p.error.total_cmp(&q.error));
    let mut value = vec![0.0; dim];
    let mut error = 0.0;
    for s in &segments {
        for (v, sv) in value.iter_mut().zip(&s.value) {
            *v += sv;
        }
        error += s.error;
    }
    Ok(QuadratureResult { value, error, intervals: segments.len(), evaluations })
}

/// Scalar convenience wrapper around [`integrate_vector`].
pub fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_vector(|x| vec![f(x)], a, b, abs_tol, 2000).map(|r| r.value[0])
}
