use rayon::prelude::*;
use serde_json::json;
use std::f64::consts::TAU;

use symdesk_core::pendulum::*;
use symdesk_core::Error;

use crate::cli::{LoopArgs, PendulumCmd, QuadArgs};
use crate::error::CliError;
use crate::output::{f, i, num, OutputDir, Table};
use crate::report::{Check, RunReport};

pub const FLOW_PERIOD_TOL: f64 = 1e-5;
pub const ENERGY_DRIFT_TOL: f64 = 1e-8;
pub const DUALITY_TOL: f64 = 1e-4;
pub const SPECTRUM_RESIDUAL_TOL: f64 = 1e-8;
const DUALITY_STEP: f64 = 1e-5;

fn range(v: &[f64], name: &str) -> Result<(f64, f64), CliError> {
    match v {
        [a, b] if a < b => Ok((*a, *b)),
        _ => Err(CliError::config(format!("--{name} needs two increasing values"))),
    }
}

fn quadrature(q: &QuadArgs) -> Result<PendulumQuadrature, CliError> {
    if !(8..=4096).contains(&q.nodes) {
        return Err(CliError::config("--nodes must lie in [8, 4096]"));
    }
    Ok(PendulumQuadrature::new(q.nodes))
}

fn make_loop(a: &LoopArgs) -> Result<Loop, CliError> {
    if !(a.radius > 0.0) || a.turns == 0 {
        return Err(CliError::config("loop needs a positive radius and at least one turn"));
    }
    let mut lp = Loop::circle((a.center_h, a.center_l), a.radius, a.loop_steps).turns(a.turns);
    if a.reverse {
        lp = lp.reversed();
    }
    Ok(lp)
}

fn matrix_json(m: &[[i64; 2]; 2]) -> serde_json::Value {
    json!([[m[0][0], m[0][1]], [m[1][0], m[1][1]]])
}

/// Errors that describe a failed computation rather than a bad request.
fn as_failure(e: &Error) -> bool {
    matches!(e, Error::LoopTooCoarse { .. } | Error::HbarTooLarge { .. } | Error::NoReturn(_))
}

pub fn run(cmd: &PendulumCmd, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    match cmd {
        PendulumCmd::Periods { h_range, l_range, grid, flow, flow_dt, quad } => {
            let (h0, h1) = range(h_range, "h-range")?;
            let (l0, l1) = range(l_range, "l-range")?;
            if *grid < 2 {
                return Err(CliError::config("--grid must be at least 2"));
            }
            let q = quadrature(quad)?;
            let values: Vec<EnergyMomentum> = (0..grid * grid)
                .map(|k| {
                    let (a, b) = (k / grid, k % grid);
                    let h = h0 + (h1 - h0) * a as f64 / (grid - 1) as f64;
                    let l = l0 + (l1 - l0) * b as f64 / (grid - 1) as f64;
                    EnergyMomentum::new(h, l)
                })
                .collect::<Result<_, _>>()?;
            let rows = values
                .par_iter()
                .map(|v| {
                    let p = q.periods(v);
                    let (h, l) = (v.h(), v.l());
                    let d = DUALITY_STEP;
                    let djh = (q.action_at(h + d, l)? - q.action_at(h - d, l)?) / (2.0 * d);
                    let djl = (q.action_at(h, l + d)? - q.action_at(h, l - d)?) / (2.0 * d);
                    let fl = if *flow { Some(flow_periods_oracle(v, *flow_dt)?) } else { None };
                    Ok((*v, p, q.action(v), djh, djl, fl))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let mut t = Table::new(&["h", "l", "T", "Theta", "J", "dJ_dh", "dJ_dl", "T_flow", "Theta_flow", "energy_drift"]);
            let (mut worst_t, mut worst_drift, mut worst_dual) = (0.0f64, 0.0f64, 0.0f64);
            for (v, p, j, djh, djl, fl) in &rows {
                let (tf, thf, drift) = fl.map_or((f64::NAN, f64::NAN, f64::NAN), |x| (x.t, x.theta, x.energy_drift));
                if fl.is_some() {
                    worst_t = worst_t.max((tf - p.t).abs() / p.t);
                    worst_drift = worst_drift.max(drift);
                }
                let rel_h = (djh - p.t / TAU).abs() / (p.t / TAU);
                let rel_l = if v.l() != 0.0 { (djl + p.theta / TAU).abs() / (p.theta / TAU).abs() } else { 0.0 };
                worst_dual = worst_dual.max(rel_h).max(rel_l);
                t.push(vec![f(v.h()), f(v.l()), f(p.t), f(p.theta), f(*j), f(*djh), f(*djl), f(tf), f(thf), f(drift)]);
            }
            out.write_csv("periods.csv", &t)?;
            report.check(Check::at_most("action_period_duality", worst_dual, DUALITY_TOL));
            if *flow {
                report.check(Check::at_most("period_vs_flow", worst_t, FLOW_PERIOD_TOL));
                report.check(Check::at_most("energy_drift", worst_drift, ENERGY_DRIFT_TOL));
            }
        }
        PendulumCmd::Monodromy { lp, quad } => {
            let q = quadrature(quad)?;
            let lp = make_loop(lp)?;
            let m = match monodromy(&lp, &q) {
                Ok(m) => m,
                Err(e) if as_failure(&e) => {
                    report.check(Check::holds("monodromy", false, e.to_string()));
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            let mut t = Table::new(&["step", "h", "l", "T", "Theta_branch", "defect"]);
            for s in &m.trace {
                t.push(vec![i(s.step), f(s.h), f(s.l), f(s.t), f(s.theta_branch), f(s.defect)]);
            }
            out.write_csv("loop_trace.csv", &t)?;
            out.write_json("monodromy.json", &json!({"matrix": matrix_json(&m.matrix), "residual": num(m.residual)}))?;
            report.result("matrix", matrix_json(&m.matrix));
            report.result("residual", num(m.residual));
            report.result("elementary_shear", json!(intmat::is_elementary_shear(&m.matrix)));
            report.check(Check::at_most("rounding_residual", m.residual, MAX_LOOP_DEFECT));
            let det = intmat::det(&m.matrix);
            report.check(Check::holds("unimodular", det == 1, format!("det = {det}")));
            let tr = intmat::trace(&m.matrix);
            report.check(Check::holds("unipotent", tr == 2, format!("trace = {tr}")));
        }
        PendulumCmd::Spectrum { hbar, h_range, l_range, quad } => {
            let q = quadrature(quad)?;
            let w = Window { h: range(h_range, "h-range")?, l: range(l_range, "l-range")? };
            let spec = joint_spectrum(*hbar, w, &q)?;
            let mut t = Table::new(&["h", "l", "n", "m"]);
            for p in &spec.points {
                t.push(vec![f(p.h), f(p.l), i(p.n), i(p.m)]);
            }
            out.write_csv("spectrum.csv", &t)?;
            report.result("points", json!(spec.points.len()));
            report.check(Check::at_most("quantization_residual", spec.max_residual(&q)?, SPECTRUM_RESIDUAL_TOL));
        }
        PendulumCmd::Cells { hbar, lp, quad } => {
            let q = quadrature(quad)?;
            let lp = make_loop(lp)?;
            let classical = match monodromy(&lp, &q) {
                Ok(m) => m.matrix,
                Err(e) if as_failure(&e) => {
                    report.check(Check::holds("monodromy", false, e.to_string()));
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            let spec = joint_spectrum(*hbar, Window::around(&lp, Window::CELL_MARGIN), &q)?;
            let cell = match cell_transport(&spec, &lp) {
                Ok(c) => c,
                Err(e) if as_failure(&e) => {
                    report.check(Check::holds("cell_transport", false, e.to_string()));
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            let expected = intmat::transpose(&intmat::inverse(&classical));
            out.write_json(
                "cells.json",
                &json!({
                    "matrix": matrix_json(&cell.matrix),
                    "classical": matrix_json(&classical),
                    "expected": matrix_json(&expected),
                    "max_defect": num(cell.max_defect),
                    "moves": cell.moves,
                    "hbar": num(*hbar),
                }),
            )?;
            report.result("matrix", matrix_json(&cell.matrix));
            report.result("classical", matrix_json(&classical));
            report.check(Check::holds(
                "transpose_inverse",
                cell.matrix == expected,
                format!("cell {:?}, expected {:?}", cell.matrix, expected),
            ));
            report.check(Check::at_most("cell_defect", cell.max_defect, MAX_CELL_DEFECT));
        }
    }
    Ok(())
}
