use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

use symdesk_core::lie::{LieAlgebra, MatrixRealization};
use symdesk_core::path::*;

use crate::cli::{FamilyKind, Lie3Args};
use crate::error::CliError;
use crate::formats::{load_family, path_table, resolve_algebra, write_family};
use crate::output::{f, i, num, OutputDir, Table};
use crate::report::{Check, RunReport};

pub const COCYCLE_TOL: f64 = 1e-7;
pub const ASSOCIATIVITY_TOL: f64 = 1e-7;
pub const INVERSE_TOL: f64 = 1e-8;
pub const DEVELOP_TOL: f64 = 1e-8;
pub const EXP_TOL: f64 = 1e-9;
pub const CONVERGENCE_RANGE: (f64, f64) = (12.0, 20.0);

#[derive(Debug, Clone, Copy)]
struct Trial {
    cocycle: f64,
    associativity: f64,
    inverse: f64,
    develop: f64,
    exp_oracle: f64,
}

fn cocycle_defect(g: &GridPath, d: &GridPath) -> Result<f64, CliError> {
    let gd = path_mul(g, d)?;
    let (ag, ad, agd) = (transport(g)?, transport(d)?, transport(&gd)?);
    Ok((0..=g.steps()).map(|k| (agd.at(k) - ag.at(k) * ad.at(k)).amax()).fold(0.0, f64::max))
}

fn inverse_defect(g: &GridPath) -> Result<f64, CliError> {
    Ok(path_mul(&path_inv(g)?, g)?.sup_norm())
}

fn run_trial(
    paths: &[GridPath; 3],
    x: &[f64],
    rep: Option<&MatrixRealization>,
    alg: &Arc<LieAlgebra>,
) -> Result<Trial, CliError> {
    let [g, d, e] = paths;
    let cocycle = cocycle_defect(g, d)?;
    let gd = path_mul(g, d)?;
    let associativity = path_mul(&gd, e)?.sup_distance(&path_mul(g, &path_mul(d, e)?)?)?;
    let inverse = inverse_defect(g)?;
    let (develop_defect, exp_oracle) = match rep {
        Some(rep) => {
            let lhs = develop(&gd, rep)?;
            let rhs = develop(g, rep)? * develop(d, rep)?;
            let c = GridPath::constant(alg.clone(), g.steps(), x)?;
            let oracle = rep.rho(x).exp();
            ((lhs - rhs).norm(), (develop(&c, rep)? - oracle).amax())
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(Trial { cocycle, associativity, inverse, develop: develop_defect, exp_oracle })
}

pub fn run(args: &Lie3Args, out: &mut OutputDir, report: &mut RunReport) -> Result<(), CliError> {
    if args.steps < 4 || args.trials == 0 {
        return Err(CliError::config("need --steps ≥ 4 and --trials ≥ 1"));
    }
    let (alg, rep) = resolve_algebra(args.algebra.as_deref(), args.constants.as_deref())?;
    let n = alg.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut inputs = Vec::with_capacity(args.trials);
    for _ in 0..args.trials {
        let paths = [0, 1, 2].map(|_| random_unit_path(alg.clone(), args.steps, &mut rng));
        let [a, b, c] = paths;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        inputs.push(([a?, b?, c?], x));
    }
    let trials = inputs
        .par_iter()
        .map(|(p, x)| run_trial(p, x, rep.as_ref(), &alg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&["trial", "cocycle", "associativity", "inverse", "develop", "exp_oracle"]);
    for (k, t) in trials.iter().enumerate() {
        table.push(vec![i(k), f(t.cocycle), f(t.associativity), f(t.inverse), f(t.develop), f(t.exp_oracle)]);
    }
    out.write_csv("lie3_trials.csv", &table)?;

    let worst = |sel: fn(&Trial) -> f64| trials.iter().map(sel).fold(0.0, f64::max);
    report.result("algebra", json!(alg.label()));
    report.result("dim", json!(n));
    report.check(Check::at_most("cocycle", worst(|t| t.cocycle), COCYCLE_TOL));
    report.check(Check::at_most("associativity", worst(|t| t.associativity), ASSOCIATIVITY_TOL));
    report.check(Check::at_most("inverse", worst(|t| t.inverse), INVERSE_TOL));
    if let Some(rep) = &rep {
        report.check(Check::at_most("develop_homomorphism", worst(|t| t.develop), DEVELOP_TOL));
        report.check(Check::at_most("exp_oracle", worst(|t| t.exp_oracle), EXP_TOL));
        if alg.label() == "so3" {
            let c = GridPath::constant(alg.clone(), args.steps, &[0.0, 0.0, PI])?;
            let e = develop(&c, rep)?;
            let target = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -1.0, 1.0]));
            report.check(Check::at_most("so3_half_turn", (e - target).amax(), EXP_TOL));
        }
    }

    if args.convergence {
        // the same random function sampled at N/2 and N
        let sample = |steps: usize| {
            let mut r = ChaCha8Rng::seed_from_u64(args.seed);
            random_unit_path(alg.clone(), steps, &mut r)
        };
        let coarse = inverse_defect(&sample(args.steps / 2)?)?;
        let fine = inverse_defect(&sample(args.steps)?)?;
        report.result("inverse_defect_half", num(coarse));
        report.result("inverse_defect_full", num(fine));
        let ratio = coarse / fine;
        let (lo, hi) = CONVERGENCE_RANGE;
        report.check(Check::within("convergence_ratio", ratio, lo, hi));
    }

    if args.export_paths {
        let [g, d, _] = &inputs[0].0;
        out.write_csv("paths/gamma.csv", &path_table(g))?;
        out.write_csv("paths/delta.csv", &path_table(d))?;
        out.write_csv("paths/product.csv", &path_table(&path_mul(g, d)?))?;
    }

    if let Some(kind) = args.emit_family {
        let steps = args.steps;
        let family = PathFamily::from_fn(args.family_s, |s| match kind {
            FamilyKind::ZeroMean => GridPath::from_fn(alg.clone(), steps, |t, o| {
                o.fill(0.0);
                o[0] = s * (2.0 * PI * t).sin();
            }),
            FamilyKind::Drift => {
                let mut x = vec![0.0; n];
                x[0] = s;
                GridPath::constant(alg.clone(), steps, &x)
            }
        })?;
        write_family(out, "family", &family)?;
    }

    if let Some(dir) = &args.family {
        let family = load_family(dir)?;
        let h = homotopy_functional(&family, args.family_tol)?;
        report.result("family_max_norm", num(h.max_norm));
        report.result("family_compatible", json!(h.compatible()));
        let mut t = Table::new(&["j", "s", "norm"]);
        let s = family.s_steps();
        for (j, v) in h.values.iter().enumerate() {
            t.push(vec![i(j), f(j as f64 / s as f64), f(v.norm())]);
        }
        out.write_csv("homotopy.csv", &t)?;
    }
    Ok(())
}
