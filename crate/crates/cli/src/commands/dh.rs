use rayon::prelude::*;
use serde_json::{json, Value};

use symdesk_core::dh::*;
use symdesk_core::quad::GaussLegendre;
use symdesk_core::Error;

use crate::cli::{DhCmd, OracleKind};
use crate::error::CliError;
use crate::formats::{load_model, load_polytope, read_model};
use crate::output::{f, num, nums, OutputDir, Table};
use crate::report::{Check, RunReport};

pub const INTERNAL_TOL: f64 = 1e-10;
pub const MC_TOL: f64 = 0.01;
pub const TORIC_TOL: f64 = 1e-10;

/// Histogram over the sphere with chunks evaluated in parallel and summed
/// in chunk order.
pub fn parallel_histogram(samples: u64, seed: u64, bins: usize, symmetrize: bool) -> SphereHistogram {
    let chunks: Vec<(u64, u64)> = mc_chunks(samples).collect();
    let parts: Vec<Vec<u64>> =
        chunks.par_iter().map(|&(c, n)| mc_chunk_counts(seed, c, n, bins, symmetrize)).collect();
    let mut counts = vec![0u64; bins];
    for p in parts {
        for (a, b) in counts.iter_mut().zip(p) {
            *a += b;
        }
    }
    mc_histogram_from_counts(counts, samples, seed, symmetrize)
}

fn density_table(d: &PiecewisePoly, xs: &[f64]) -> Table {
    let mut t = Table::new(&["x", "rho"]);
    for &x in xs {
        t.push(vec![f(x), f(d.eval(x))]);
    }
    t
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn padded_image(m: &HamiltonianS1Model) -> (f64, f64) {
    let (lo, hi) = m.image();
    let pad = 0.1 * (hi - lo).max(1.0);
    (lo - pad, hi + pad)
}

fn is_round_sphere(m: &HamiltonianS1Model) -> bool {
    let mut pts: Vec<(f64, i64)> = m.points().iter().map(|p| (p.value, p.weights[0])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    m.halfdim() == 1 && pts == [(-1.0, 1), (1.0, -1)]
}

pub fn run(cmd: &DhCmd, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    match cmd {
        DhCmd::Check { model, t, oracle, samples, seed, bins, plain_estimator, polytope, xi, grid: npts } => {
            if t.is_empty() || *npts < 2 {
                return Err(CliError::config("need a nonempty --t list and --grid ≥ 2"));
            }
            let file = read_model(model)?;
            let m = match HamiltonianS1Model::new(file.halfdim, &file.label, file.points()) {
                Ok(m) => m,
                Err(Error::SupportIdentities(r)) => {
                    let worst = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    report.result("support_residuals", nums(&r));
                    report.check(Check::at_most("support_identities", worst, SUPPORT_TOL));
                    out.write_json("dh_check.json", &json!({"model": file.label, "support_residuals": nums(&r)}))?;
                    return Ok(());
                }
                Err(e) => {
                    return Err(CliError::Schema { path: model.display().to_string(), message: e.to_string() })
                }
            };
            let residuals = support_residuals(m.halfdim(), m.points());
            let worst_support = residuals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            report.check(Check::at_most("support_identities", worst_support, SUPPORT_TOL));

            let density = m.density();
            let (lo, hi) = padded_image(&m);
            let xs = grid(lo, hi, *npts);
            out.write_csv("density.csv", &density_table(&density, &xs))?;

            let hist;
            let slice;
            let oracle_ref = match oracle {
                OracleKind::None => None,
                OracleKind::Mc => {
                    let seed = seed.ok_or_else(|| CliError::config("--oracle mc needs --seed"))?;
                    if !is_round_sphere(&m) {
                        return Err(CliError::config("the Monte Carlo oracle samples the round sphere only"));
                    }
                    if *samples == 0 || *bins == 0 {
                        return Err(CliError::config("--samples and --bins must be positive"));
                    }
                    hist = parallel_histogram(*samples, seed, *bins, !plain_estimator);
                    let rule = GaussLegendre::new(8);
                    let mut table = Table::new(&["x", "rho"]);
                    let mut worst = 0.0f64;
                    for (e, &rho) in hist.edges.windows(2).zip(&hist.density) {
                        table.push(vec![f(0.5 * (e[0] + e[1])), f(rho)]);
                        let mean = rule.integrate(e[0], e[1], |x| density.eval(x)) / (e[1] - e[0]);
                        worst = worst.max((rho / mean - 1.0).abs());
                    }
                    out.write_csv("histogram.csv", &table)?;
                    report.result(
                        "histogram",
                        json!({"samples": hist.samples, "seed": hist.seed, "bins": hist.density.len(),
                               "symmetrized": hist.symmetrized, "algorithm": hist.algorithm}),
                    );
                    report.check(Check::at_most("mc_bins", worst, MC_TOL));
                    Some(DensityOracle::Histogram(&hist))
                }
                OracleKind::Toric => {
                    let path = polytope.as_ref().ok_or_else(|| CliError::config("--oracle toric needs --polytope"))?;
                    let poly = load_polytope(path)?;
                    slice = ToricSlice::new(poly, xi.clone())?;
                    let worst = xs.iter().map(|&x| (slice.density(x) - density.eval(x)).abs()).fold(0.0, f64::max);
                    report.check(Check::at_most("toric_slices", worst, TORIC_TOL));
                    Some(DensityOracle::Toric(&slice))
                }
            };

            let r = verify_identity(&m, t, oracle_ref)?;
            let rows: Vec<Value> = r
                .rows
                .iter()
                .map(|row| {
                    json!({
                        "t": num(row.t),
                        "localization": num(row.localization),
                        "transform": num(row.transform),
                        "internal_error": num(row.internal_error),
                        "oracle_transform": row.oracle_transform.map_or(Value::Null, num),
                        "oracle_error": row.oracle_error.map_or(Value::Null, num),
                    })
                })
                .collect();
            out.write_json(
                "dh_check.json",
                &json!({
                    "model": m.label(),
                    "total_volume": num(m.total_volume()),
                    "support_residuals": nums(&residuals),
                    "rows": rows,
                    "max_internal_error": num(r.max_internal_error),
                    "max_oracle_error": r.max_oracle_error.map_or(Value::Null, num),
                }),
            )?;
            report.result("total_volume", num(m.total_volume()));
            report.result("max_internal_error", num(r.max_internal_error));
            report.check(Check::at_most("laplace_round_trip", r.max_internal_error, INTERNAL_TOL));
            if let Some(e) = r.max_oracle_error {
                report.result("max_oracle_error", num(e));
                let tol = if *oracle == OracleKind::Mc { MC_TOL } else { TORIC_TOL };
                report.check(Check::at_most("oracle_transform", e, tol));
            }
        }
        DhCmd::Density { model, points, range } => {
            let m = load_model(model)?;
            if *points < 2 {
                return Err(CliError::config("--points must be at least 2"));
            }
            let (lo, hi) = match range.as_slice() {
                [] => padded_image(&m),
                [a, b] if a < b => (*a, *b),
                _ => return Err(CliError::config("--range needs two increasing values")),
            };
            let d = m.density();
            let xs = grid(lo, hi, *points);
            out.write_csv("density.csv", &density_table(&d, &xs))?;
            let min = xs.iter().map(|&x| d.eval(x)).fold(f64::INFINITY, f64::min);
            report.check(Check::at_most("negativity", (-min).max(0.0), 1e-12));
            let vol = m.total_volume();
            report.result("total_volume", num(vol));
            report.check(Check::at_most("volume", (d.integral() - vol).abs() / vol.abs(), INTERNAL_TOL));
        }
    }
    Ok(())
}
