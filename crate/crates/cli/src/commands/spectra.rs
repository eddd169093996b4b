use rayon::prelude::*;
use serde_json::json;

use symdesk_core::spectral::*;

use crate::cli::{SpectraCmd, TorusArgs, TorusPreset, TraceArgs};
use crate::error::CliError;
use crate::formats::load_torus;
use crate::output::{f, i, num, OutputDir, Table};
use crate::report::{Check, RunReport};

/// Cutoffs up to this size are re-counted by brute force.
pub const BRUTE_FORCE_LIMIT: f64 = 50.0;

fn torus(a: &TorusArgs) -> Result<FlatTorusSpec, CliError> {
    match &a.torus {
        Some(p) => load_torus(p),
        None => Ok(match a.preset {
            TorusPreset::Square => FlatTorusSpec::square(),
            TorusPreset::Rectangular => FlatTorusSpec::rectangular(),
        }),
    }
}

fn spectrum(a: &TorusArgs) -> Result<(FlatTorusSpec, SpectrumList), CliError> {
    let spec = torus(a)?;
    let s = enumerate_spectrum(&spec, a.cutoff)?;
    Ok((spec, s))
}

/// Dual vectors in the ball, counted over a box twice as wide as needed.
fn brute_force_count(spec: &FlatTorusSpec, r: f64) -> u64 {
    let d = spec.dual();
    let inv = d.try_inverse().expect("invertible");
    let reach = (0..2).map(|k| (2.0 * r * inv.row(k).norm()).ceil() as i64 + 2).max().unwrap_or(2);
    let mut n = 0;
    for a in -reach..=reach {
        for b in -reach..=reach {
            let v = d * nalgebra::Vector2::new(a as f64, b as f64);
            if v.norm() <= r + MERGE_TOL * r.max(1.0) {
                n += 1;
            }
        }
    }
    n
}

fn trace(s: &SpectrumList, a: &TraceArgs) -> Result<TraceSignal, CliError> {
    if !(a.dt > 0.0 && a.t_stop > a.t_start) {
        return Err(CliError::config("trace grid needs --dt > 0 and --t-stop > --t-start"));
    }
    if !(a.epsilon > 0.0) {
        return Err(CliError::config("--epsilon must be positive"));
    }
    let count = ((a.t_stop - a.t_start) / a.dt).round() as usize + 1;
    let ts = uniform_grid(a.t_start, a.t_stop, count);
    let damped: Vec<(f64, f64)> = s.eigenvalues.iter().map(|&(l, m)| (l, m as f64 * (-a.epsilon * l).exp())).collect();
    let values = ts.par_iter().map(|&t| trace_at(&damped, t)).collect();
    Ok(TraceSignal { t: ts, values, epsilon: a.epsilon })
}

fn trace_table(tr: &TraceSignal) -> Table {
    let mut t = Table::new(&["t", "re", "im", "abs"]);
    for (x, z) in tr.t.iter().zip(&tr.values) {
        t.push(vec![f(*x), f(z.re), f(z.im), f(z.re.hypot(z.im))]);
    }
    t
}

pub fn run(cmd: &SpectraCmd, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    match cmd {
        SpectraCmd::Enumerate { torus: ta } => {
            let (spec, s) = spectrum(ta)?;
            let mut t = Table::new(&["lambda", "multiplicity"]);
            for &(l, m) in &s.eigenvalues {
                t.push(vec![f(l), i(m)]);
            }
            out.write_csv("spectrum.csv", &t)?;
            let total = s.counting_function(ta.cutoff)?;
            report.result("count", json!(total));
            report.result("distinct", json!(s.eigenvalues.len()));
            report.check(Check::holds("constant_mode", s.eigenvalues.first() == Some(&(0.0, 1)), "λ₀ = 0 with multiplicity 1"));
            if ta.cutoff <= BRUTE_FORCE_LIMIT {
                let brute = brute_force_count(&spec, ta.cutoff);
                report.check(Check::holds("completeness", brute == total, format!("brute force {brute}, enumerated {total}")));
            }
        }
        SpectraCmd::Weyl { torus: ta, lambda, tol } => {
            let (_, s) = spectrum(ta)?;
            let mut t = Table::new(&["lambda", "count", "measured", "predicted", "ratio"]);
            let mut worst = 0.0f64;
            for &l in lambda {
                let w = s.weyl_fit(l)?;
                worst = worst.max((w.ratio - 1.0).abs());
                t.push(vec![f(l), i(w.count), f(w.measured), f(w.predicted), f(w.ratio)]);
            }
            out.write_csv("weyl.csv", &t)?;
            report.result("weyl_coefficient", num(weyl_coefficient(&s.spec)));
            report.check(Check::at_most("weyl_ratio", worst, *tol));
        }
        SpectraCmd::Smooth { torus: ta, lambda, sigma, tol } => {
            let (spec, s) = spectrum(ta)?;
            if sigma.is_empty() || lambda.is_empty() {
                return Err(CliError::config("need at least one --lambda and one --sigma"));
            }
            let mut t = Table::new(&["lambda", "sigma", "value", "leading", "relative_error"]);
            let (mut worst_lead, mut worst_spread) = (0.0f64, 0.0f64);
            for &l in lambda {
                let lead = smoothed_leading_term(&spec, l);
                let vals = sigma.iter().map(|&sg| s.smoothed_density(l, sg)).collect::<Result<Vec<_>, _>>()?;
                for (&sg, &v) in sigma.iter().zip(&vals) {
                    let rel = (v - lead).abs() / lead;
                    worst_lead = worst_lead.max(rel);
                    t.push(vec![f(l), f(sg), f(v), f(lead), f(rel)]);
                }
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                worst_spread = worst_spread.max((hi - lo) / lo);
            }
            out.write_csv("smoothed.csv", &t)?;
            report.check(Check::at_most("leading_term", worst_lead, *tol));
            report.check(Check::at_most("sigma_independence", worst_spread, *tol));
        }
        SpectraCmd::Trace { torus: ta, trace: tra } => {
            let (_, s) = spectrum(ta)?;
            let tr = trace(&s, tra)?;
            out.write_csv("trace.csv", &trace_table(&tr))?;
            let a = tr.abs();
            let s0: f64 = s.eigenvalues.iter().map(|&(l, m)| m as f64 * (-tra.epsilon * l).exp()).sum();
            let peak = a.iter().cloned().fold(0.0, f64::max);
            report.result("s0", num(s0));
            report.check(Check::at_most("bounded_by_s0", (peak - s0).max(0.0) / s0, 1e-12));
        }
        SpectraCmd::Peaks { torus: ta, trace: tra, k, peak_t_min, match_tol, spurious_ratio } => {
            let (spec, s) = spectrum(ta)?;
            let tr = trace(&s, tra)?;
            out.write_csv("trace.csv", &trace_table(&tr))?;
            let peaks = detect_peaks(&tr, *k, *peak_t_min)?;
            let lengths = spec.lattice_lengths(tra.t_stop + 1.0);
            let matched = match_lengths(&peaks, &lengths);
            let worst = matched.iter().map(|m| m.1).fold(0.0, f64::max);
            let smallest = peaks.iter().map(|p| p.amplitude).fold(f64::INFINITY, f64::min);
            let first = lengths.first().copied().unwrap_or(f64::INFINITY);
            let window = (*peak_t_min, first - 0.1);
            let spurious = local_maxima(&tr, window.0)
                .iter()
                .filter(|p| p.t < window.1)
                .map(|p| p.amplitude)
                .fold(0.0, f64::max);
            let peak_rows: Vec<_> = peaks
                .iter()
                .zip(&matched)
                .map(|(p, m)| json!({"t": num(p.t), "amplitude": num(p.amplitude), "length": num(m.0), "residual": num(m.1)}))
                .collect();
            out.write_json(
                "peaks.json",
                &json!({
                    "peaks": peak_rows,
                    "epsilon": num(tra.epsilon),
                    "spurious": {"window": [num(window.0), num(window.1)], "max_local_maximum": num(spurious),
                                 "ratio": num(spurious / smallest)},
                }),
            )?;
            report.result("peaks", json!(peaks.iter().map(|p| num(p.t)).collect::<Vec<_>>()));
            report.check(Check::at_most("peak_match", worst, *match_tol));
            report.check(Check::at_most("spurious_ratio", spurious / smallest, *spurious_ratio));
        }
    }
    Ok(())
}
