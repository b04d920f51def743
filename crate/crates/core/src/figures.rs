//! Data behind the standard plots: the `x_inf` against `k` table, graphs of
//! the final-size function for three `k = 3` configurations, and the
//! limiting bivariate normal density for `k = 2`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{classify_zeros, FinalSizeFunction, ZeroClassification};
use crate::clt::analyze;
use crate::error::{Error, Result};
use crate::mc::{sweep_k, SweepRow};
use crate::model::InitialConfiguration;

/// `x_inf` for the standard configuration and `k = 1..=k_max`.
pub fn x_inf_table(k_max: usize) -> Result<Vec<SweepRow>> {
    sweep_k(1, k_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSizePanel {
    pub label: String,
    pub k: usize,
    pub x0: f64,
    pub y0: f64,
    /// `(x, f(x))` on an even grid of `(0, x0]`.
    pub grid: Vec<(f64, f64)>,
    pub zeros: ZeroClassification,
}

/// The three `k = 3` panels: standard, `(x0, y0) = (0.95, 0.02)` and
/// `(0.95, 0.01)`, each sampled at `points` values of `x`.
pub fn final_size_panels(points: usize) -> Result<Vec<FinalSizePanel>> {
    if points < 2 {
        return Err(Error::Domain("need at least two grid points".into()));
    }
    let configs = [
        ("standard", InitialConfiguration::standard(3)),
        ("x0=0.95,y0=0.02", InitialConfiguration::no_aware(3, 0.95, 0.02)?),
        ("x0=0.95,y0=0.01", InitialConfiguration::no_aware(3, 0.95, 0.01)?),
    ];
    configs
        .into_iter()
        .map(|(label, init)| {
            let f = FinalSizeFunction::new(&init);
            let x0 = init.x0();
            let grid = (1..=points)
                .map(|j| {
                    let x = x0 * j as f64 / points as f64;
                    f.eval(x).map(|v| (x, v))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FinalSizePanel { label: label.into(), k: 3, x0, y0: init.y0(), grid, zeros: classify_zeros(&init) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub sigma: [[f64; 2]; 2],
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `density[i][j]` at `(xs[i], ys[j])`.
    pub density: Vec<Vec<f64>>,
}

impl DensityGrid {
    /// Long-format CSV with columns `u, v, density`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["u", "v", "density"])?;
        for (i, x) in self.xs.iter().enumerate() {
            for (j, y) in self.ys.iter().enumerate() {
                w.write_record([x.to_string(), y.to_string(), self.density[i][j].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Centered bivariate normal density with the `k = 2` standard covariance,
/// on a `points x points` grid spanning 3.5 standard deviations.
pub fn bivariate_density(points: usize) -> Result<DensityGrid> {
    if points < 2 {
        return Err(Error::Domain("need at least two grid points".into()));
    }
    let s = analyze(&InitialConfiguration::standard(2))?.sigma;
    let (a, b, c) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
    let det = a * c - b * b;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let axis = |var: f64| -> Vec<f64> {
        let half = 3.5 * var.sqrt();
        (0..points).map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64).collect()
    };
    let xs = axis(a);
    let ys = axis(c);
    let density = xs
        .iter()
        .map(|&u| ys.iter().map(|&v| norm * (-(c * u * u - 2.0 * b * u * v + a * v * v) / (2.0 * det)).exp()).collect())
        .collect();
    Ok(DensityGrid { sigma: [[a, b], [b, c]], xs, ys, density })
}
