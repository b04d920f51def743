use anyhow::{Context, Result};
use rumorlab::asymptotics::classify_zeros_with_resolution;
use rumorlab::figures::{bivariate_density, final_size_panels, x_inf_table};
use rumorlab::fluid::write_csv as write_fluid_csv;
use rumorlab::mc::{run_clt, run_lln, sweep_with, write_sweep_csv};
use rumorlab::ssa::{counts_from_fractions, simulate_exact};
use rumorlab::{
    analyze, integrate_numeric, replicate, summarize, FluidTrajectory, InitialConfiguration, ModelParams,
    PopulationState, SimulationMode,
};
use serde_json::{json, Value};

use crate::args::{Command, FigureArgs, Format, OdeArgs, SimulateArgs, SweepArgs, ZerosArgs};
use crate::Usage;

/// Default replica count for `lln` and `cltcheck` without a config file.
const DEFAULT_REPLICAS: usize = 1000;

pub enum Output {
    Json(Value),
    Csv(Vec<u8>),
}

pub fn run(command: &Command, format: Format) -> Result<Output> {
    match command {
        Command::Simulate(a) => simulate(a, format),
        Command::Asymptotics(a) => {
            let s = summarize(&a.configuration()?);
            match format {
                Format::Json => Ok(Output::Json(serde_json::to_value(s)?)),
                Format::Csv => {
                    let mut rows = vec![
                        ("k".to_string(), s.k as f64),
                        ("x0".into(), s.x0),
                        ("tau_inf".into(), s.tau_inf),
                        ("x_inf".into(), s.x_inf),
                    ];
                    rows.extend(s.y_inf.iter().enumerate().map(|(i, v)| (format!("y_inf_{}", i + 1), *v)));
                    rows.push(("z_inf".into(), s.z_inf));
                    rows.extend(s.zeros.iter().enumerate().map(|(i, v)| (format!("zero_{}", i + 1), *v)));
                    csv_rows(&["quantity", "value"], rows.into_iter().map(|(q, v)| vec![q, v.to_string()]))
                }
            }
        }
        Command::Ode(a) => ode(a, format),
        Command::Clt(a) => {
            let r = analyze(&a.configuration()?)?;
            match format {
                Format::Json => Ok(Output::Json(r.to_json())),
                Format::Csv => {
                    let mut rows = Vec::new();
                    for (name, m) in [("lambda", &r.lambda_inf), ("b", &r.b_matrix), ("sigma", &r.sigma)] {
                        for i in 0..m.nrows() {
                            for j in 0..m.ncols() {
                                rows.push(vec![name.to_string(), i.to_string(), j.to_string(), m[(i, j)].to_string()]);
                            }
                        }
                    }
                    csv_rows(&["matrix", "row", "col", "value"], rows)
                }
            }
        }
        Command::Lln(a) => {
            let report = run_lln(&a.experiment(DEFAULT_REPLICAS)?)?;
            match format {
                Format::Json => Ok(Output::Json(serde_json::to_value(report)?)),
                Format::Csv => csv_with(|w| report.write_csv(w)),
            }
        }
        Command::Cltcheck(a) => {
            let report = run_clt(&a.experiment(DEFAULT_REPLICAS)?)?;
            match format {
                Format::Json => Ok(Output::Json(serde_json::to_value(report)?)),
                Format::Csv => csv_with(|w| report.write_csv(w)),
            }
        }
        Command::Sweep(a) => sweep(a, format),
        Command::Zeros(a) => zeros(a, format),
        Command::Figure(a) => figure(a, format),
    }
}

fn csv_with(write: impl FnOnce(&mut Vec<u8>) -> rumorlab::Result<()>) -> Result<Output> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(Output::Csv(buf))
}

fn csv_rows<I, R>(header: &[&str], rows: I) -> Result<Output>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(Output::Csv(w.into_inner().context("flushing csv")?))
}

fn simulate(a: &SimulateArgs, format: Format) -> Result<Output> {
    let mode: SimulationMode = a.mode.into();
    if a.record && mode != SimulationMode::Exact {
        return Err(Usage("--record requires --mode exact".into()).into());
    }
    if a.replicas == 0 {
        return Err(Usage("--replicas must be at least 1".into()).into());
    }
    let k = a.init.k;
    let initial = match &a.counts {
        Some(c) => {
            let s = PopulationState::from_counts(c)?;
            if s.k() != k {
                return Err(Usage(format!("--counts needs {} entries for k = {k}", k + 2)).into());
            }
            if s.total() != a.n {
                return Err(Usage(format!("--counts sum to {}, not --n {}", s.total(), a.n)).into());
            }
            s
        }
        None => counts_from_fractions(&a.init.configuration()?, a.n)?,
    };
    let params = ModelParams::new(k, a.n)?;
    let outcomes = replicate(&params, &initial, a.replicas, a.seed, mode)?;
    let trajectory = if a.record { simulate_exact(&params, &initial, a.seed, true)?.1 } else { None };

    match format {
        Format::Json => {
            let mut v = json!({
                "k": k,
                "n": a.n,
                "mode": mode,
                "seed": a.seed,
                "initial": initial,
                "outcomes": outcomes,
            });
            if let Some(t) = trajectory {
                v["trajectory"] = serde_json::to_value(t.points)?;
            }
            Ok(Output::Json(v))
        }
        Format::Csv => {
            if let Some(t) = trajectory {
                return csv_with(|w| t.write_csv(w));
            }
            let mut header = vec!["replica".to_string(), "X".into()];
            header.extend((1..k).map(|i| format!("Y_{i}")));
            header.extend(["Y".into(), "Z".into(), "absorption_time".into(), "jumps".into()]);
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows = outcomes.iter().enumerate().map(|(i, o)| {
                let mut r = vec![i.to_string()];
                r.extend(o.final_state.counts().iter().map(u64::to_string));
                r.push(o.absorption_time.map(|t| t.to_string()).unwrap_or_default());
                r.push(o.jump_count.to_string());
                r
            });
            csv_rows(&header, rows)
        }
    }
}

fn ode(a: &OdeArgs, format: Format) -> Result<Output> {
    let init = a.init.configuration()?;
    let traj = FluidTrajectory::new(&init);
    let t_end = a.t_end.unwrap_or_else(|| traj.tau_inf());
    let samples = if a.numeric { integrate_numeric(&init, t_end, a.step)? } else { traj.sample(t_end, a.step)? };
    match format {
        Format::Json => Ok(Output::Json(json!({
            "k": init.k(),
            "tau_inf": traj.tau_inf(),
            "method": if a.numeric { "rk4" } else { "closed_form" },
            "samples": samples,
        }))),
        Format::Csv => csv_with(|w| write_fluid_csv(&samples, w)),
    }
}

fn sweep(a: &SweepArgs, format: Format) -> Result<Output> {
    let rows = match a.x0 {
        Some(x0) => {
            let y0 = a.y0.unwrap_or(1.0 - x0);
            sweep_with(a.k_min, a.k_max, |k| InitialConfiguration::no_aware(k, x0, y0))?
        }
        None => sweep_with(a.k_min, a.k_max, |k| Ok(InitialConfiguration::standard(k)))?,
    };
    match format {
        Format::Json => Ok(Output::Json(json!({ "rows": rows }))),
        Format::Csv => csv_with(|w| write_sweep_csv(&rows, w)),
    }
}

fn zeros(a: &ZerosArgs, format: Format) -> Result<Output> {
    let z = classify_zeros_with_resolution(&a.init.configuration()?, a.points);
    match format {
        Format::Json => Ok(Output::Json(serde_json::to_value(z)?)),
        Format::Csv => {
            csv_rows(&["index", "x"], z.zeros.iter().enumerate().map(|(i, x)| vec![i.to_string(), x.to_string()]))
        }
    }
}

fn figure(a: &FigureArgs, format: Format) -> Result<Output> {
    match a.id {
        2 => {
            let rows = x_inf_table(a.k_max)?;
            match format {
                Format::Json => {
                    let table: Vec<Value> = rows.iter().map(|r| json!({ "k": r.k, "x_inf": r.x_inf })).collect();
                    Ok(Output::Json(json!({ "figure": 2, "rows": table })))
                }
                Format::Csv => {
                    csv_rows(&["k", "x_inf"], rows.iter().map(|r| vec![r.k.to_string(), r.x_inf.to_string()]))
                }
            }
        }
        3 => {
            let panels = final_size_panels(a.points)?;
            match format {
                Format::Json => Ok(Output::Json(json!({ "figure": 3, "panels": panels }))),
                Format::Csv => {
                    let rows = panels
                        .iter()
                        .flat_map(|p| p.grid.iter().map(|(x, f)| vec![p.label.clone(), x.to_string(), f.to_string()]));
                    csv_rows(&["panel", "x", "f"], rows)
                }
            }
        }
        4 => {
            let grid = bivariate_density(a.points)?;
            match format {
                Format::Json => {
                    let mut v = serde_json::to_value(&grid)?;
                    v["figure"] = json!(4);
                    Ok(Output::Json(v))
                }
                Format::Csv => csv_with(|w| grid.write_csv(w)),
            }
        }
        id => Err(Usage(format!("unknown figure {id}")).into()),
    }
}
