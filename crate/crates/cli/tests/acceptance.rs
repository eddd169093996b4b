//! Acceptance criteria, one test each. Every test prints a single
//! `ACCEPTANCE <n> PASS|FAIL` line with the measured numbers before
//! asserting, so `cargo test -- --nocapture` gives a readable summary.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::{E, PI, TAU};
use std::path::{Path, PathBuf};
use std::process::Command;

use symdesk_core::dh::*;
use symdesk_core::lie::LieAlgebra;
use symdesk_core::path::*;
use symdesk_core::pendulum::*;
use symdesk_core::spectral::*;

fn verdict(n: u32, title: &str, pass: bool, detail: String) {
    println!("ACCEPTANCE {n:>2} {} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({title}) failed: {detail}");
}

const ALGEBRAS: [&str; 3] = ["so3", "sl2", "heisenberg3"];

/// Scaling and squaring with a truncated Taylor series, kept separate from
/// every library routine.
fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = m.abs().row_sum().max();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let a = m / 2f64.powi(squarings);
    let n = m.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

type IMat = [[i64; 2]; 2];

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// GL(2, Z)-conjugate to `[[1, 1], [0, 1]]`: determinant 1, trace 2, and
/// `M − I` a nonzero primitive matrix.
fn conjugate_to_unit_shear(m: &IMat) -> bool {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let content = [m[0][0] - 1, m[0][1], m[1][0], m[1][1] - 1].iter().fold(0, |g, &x| gcd(g, x));
    det == 1 && m[0][0] + m[1][1] == 2 && content == 1
}

/// `M^{−T}` for a unimodular integer matrix.
fn transpose_inverse(m: &IMat) -> IMat {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    assert_eq!(det.abs(), 1);
    [[m[1][1] * det, -m[1][0] * det], [-m[0][1] * det, m[0][0] * det]]
}

#[test]
fn acceptance_01_lie3_group_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut coc, mut assoc, mut inv, mut dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for label in ALGEBRAS {
        let (alg, rep) = LieAlgebra::standard(label).unwrap();
        for _ in 0..20 {
            let g = random_unit_path(alg.clone(), 1000, &mut rng).unwrap();
            let d = random_unit_path(alg.clone(), 1000, &mut rng).unwrap();
            let e = random_unit_path(alg.clone(), 1000, &mut rng).unwrap();
            let gd = path_mul(&g, &d).unwrap();
            let (ag, ad, agd) = (transport(&g).unwrap(), transport(&d).unwrap(), transport(&gd).unwrap());
            for k in 0..=1000 {
                coc = coc.max((agd.at(k) - ag.at(k) * ad.at(k)).amax());
            }
            let left = path_mul(&gd, &e).unwrap();
            let right = path_mul(&g, &path_mul(&d, &e).unwrap()).unwrap();
            assoc = assoc.max(left.sup_distance(&right).unwrap());
            inv = inv.max(path_mul(&path_inv(&g).unwrap(), &g).unwrap().sup_norm());
            let lhs = develop(&gd, &rep).unwrap();
            let rhs = develop(&g, &rep).unwrap() * develop(&d, &rep).unwrap();
            dev = dev.max((lhs - rhs).norm());
        }
    }
    let pass = coc <= 1e-7 && assoc <= 1e-7 && inv <= 1e-8 && dev <= 1e-8;
    verdict(
        1,
        "path-group laws at N=1000",
        pass,
        format!("cocycle {coc:.2e} assoc {assoc:.2e} inverse {inv:.2e} develop {dev:.2e}"),
    );
}

#[test]
fn acceptance_02_lie3_convergence() {
    let mut ratios = Vec::new();
    for label in ["so3", "sl2"] {
        let (alg, _) = LieAlgebra::standard(label).unwrap();
        let defect = |steps: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let g = random_unit_path(alg.clone(), steps, &mut rng).unwrap();
            path_mul(&path_inv(&g).unwrap(), &g).unwrap().sup_norm()
        };
        ratios.push(defect(500) / defect(1000));
    }
    let pass = ratios.iter().all(|r| (12.0..=20.0).contains(r));
    verdict(2, "fourth-order inverse-law convergence", pass, format!("ratios so3/sl2 = {ratios:.2?}"));
}

#[test]
fn acceptance_03_exponential_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for label in ALGEBRAS {
        let (alg, rep) = LieAlgebra::standard(label).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..alg.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = GridPath::constant(alg.clone(), 1000, &x).unwrap();
            worst = worst.max((develop(&g, &rep).unwrap() - expm(&rep.rho(&x))).amax());
        }
    }
    let (so3, rep) = LieAlgebra::standard("so3").unwrap();
    let half_turn = develop(&GridPath::constant(so3, 1000, &[0.0, 0.0, PI]).unwrap(), &rep).unwrap();
    let target = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -1.0, 1.0]));
    let rot = (half_turn - target).amax();
    verdict(
        3,
        "develop(const X) vs scaling-and-squaring",
        worst <= 1e-9 && rot <= 1e-9,
        format!("max entry error {worst:.2e}, so3 half turn {rot:.2e}"),
    );
}

/// 5×5 grid of regular values shared by criteria 4 and 5.
fn regular_grid() -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for a in 0..5 {
        for b in 0..5 {
            v.push((0.2 + 0.45 * a as f64, 0.1 + 0.1 * b as f64));
        }
    }
    v
}

#[test]
fn acceptance_04_pendulum_quadrature_vs_flow() {
    let q = PendulumQuadrature::default();
    let (mut worst_t, mut worst_drift) = (0.0f64, 0.0f64);
    let grid = regular_grid();
    for &(h, l) in &grid {
        let v = EnergyMomentum::new(h, l).unwrap_or_else(|e| panic!("({h}, {l}) not regular: {e}"));
        let p = q.periods(&v);
        let fl = flow_periods_oracle(&v, FLOW_STEP).unwrap();
        worst_t = worst_t.max((p.t - fl.t).abs() / p.t);
        worst_drift = worst_drift.max(fl.energy_drift);
    }
    verdict(
        4,
        "period quadrature vs integrated flow",
        grid.len() == 25 && worst_t <= 1e-5 && worst_drift <= 1e-8,
        format!("max relative T error {worst_t:.2e}, energy drift {worst_drift:.2e}"),
    );
}

#[test]
fn acceptance_05_action_period_duality() {
    let q = PendulumQuadrature::default();
    let points: Vec<(f64, f64)> = regular_grid().into_iter().step_by(2).take(10).collect();
    let d = 1e-5;
    let mut worst = 0.0f64;
    for &(h, l) in &points {
        assert!(l != 0.0);
        let p = q.periods(&EnergyMomentum::new(h, l).unwrap());
        let jh = (q.action_at(h + d, l).unwrap() - q.action_at(h - d, l).unwrap()) / (2.0 * d);
        let jl = (q.action_at(h, l + d).unwrap() - q.action_at(h, l - d).unwrap()) / (2.0 * d);
        let (gh, gl) = (p.t / TAU, -p.theta / TAU);
        worst = worst.max((jh - gh).abs() / gh.abs()).max((jl - gl).abs() / gl.abs());
    }
    verdict(
        5,
        "grad J = (T, -Theta)/2pi",
        points.len() == 10 && worst <= 1e-4,
        format!("{} points, max relative error {worst:.2e}", points.len()),
    );
}

#[test]
fn acceptance_06_classical_monodromy() {
    let q = PendulumQuadrature::default();
    let main = monodromy(&Loop::around_focus_focus(0.5, 256), &q).unwrap().matrix;
    let mut classes = BTreeMap::new();
    for r in [0.3, 0.5, 0.7] {
        for k in [128, 256, 512] {
            let m = monodromy(&Loop::around_focus_focus(r, k), &q).unwrap().matrix;
            classes.insert(format!("r={r},K={k}"), (m, conjugate_to_unit_shear(&m)));
        }
    }
    let contractible = monodromy(&Loop::circle((0.5, 0.3), 0.1, 128), &q).unwrap().matrix;
    let pass = conjugate_to_unit_shear(&main)
        && classes.values().all(|&(m, shear)| shear && m == main)
        && contractible == [[1, 0], [0, 1]];
    verdict(
        6,
        "monodromy around the focus-focus value",
        pass,
        format!("M = {main:?}, all {} loops agree: {}, contractible {contractible:?}", classes.len(), classes.values().all(|c| c.0 == main)),
    );
}

#[test]
fn acceptance_07_quantum_lattice_defect() {
    let q = PendulumQuadrature::default();
    let lp = Loop::around_focus_focus(0.5, 256);
    let classical = monodromy(&lp, &q).unwrap().matrix;
    let spec = joint_spectrum(0.05, Window::around(&lp, Window::CELL_MARGIN), &q).unwrap();
    let cell = cell_transport(&spec, &lp).unwrap();
    let small = Loop::circle((0.5, 0.3), 0.1, 256);
    let spec2 = joint_spectrum(0.05, Window::around(&small, Window::CELL_MARGIN), &q).unwrap();
    let trivial = cell_transport(&spec2, &small).unwrap();
    let want = transpose_inverse(&classical);
    verdict(
        7,
        "cell transport at hbar = 0.05",
        cell.matrix == want && trivial.matrix == [[1, 0], [0, 1]],
        format!("cell {:?}, M^-T {want:?}, contractible {:?}", cell.matrix, trivial.matrix),
    );
}

#[test]
fn acceptance_08_dh_sphere() {
    let s2 = HamiltonianS1Model::sphere();
    let hist = mc_pushforward_oracle(1_000_000, 20240611, 40, true).unwrap();
    let bins = hist.density.iter().map(|d| (d / TAU - 1.0).abs()).fold(0.0, f64::max);
    let d = s2.density();
    let flat = (0..=1000).map(|k| (d.eval(-1.0 + 0.002 * k as f64) - TAU).abs()).fold(0.0, f64::max);
    let closed = TAU * (E - 1.0 / E);
    let at_one = (s2.localization_value(1.0).unwrap() - closed).abs();
    // Richardson step on t ↦ L(t) = 4π(1 + t²/6 + …)
    let h = 1e-3;
    let (l1, l2) = (s2.localization_value(h).unwrap(), s2.localization_value(2.0 * h).unwrap());
    let limit = ((4.0 * l1 - l2) / 3.0 - 4.0 * PI).abs();
    let volume = (s2.total_volume() - 4.0 * PI).abs();
    let pass = bins <= 0.01 && flat <= 1e-12 && at_one <= 1e-12 && limit <= 1e-10 && volume <= 1e-10;
    verdict(
        8,
        "Archimedes on the sphere",
        pass,
        format!("MC worst bin {bins:.2e}, density flat {flat:.1e}, L(1) error {at_one:.1e}, t->0 {limit:.1e}"),
    );
}

#[test]
fn acceptance_09_dh_cp2_toric() {
    let cp2 = HamiltonianS1Model::cp2();
    let d = cp2.density();
    let slice = ToricSlice::new(Polytope::unit_triangle(), vec![1, 2]).unwrap();
    let xs: Vec<f64> = (0..1000).map(|k| -0.25 + 2.5 * k as f64 / 999.0).collect();
    let vs_slice = xs.iter().map(|&x| (d.eval(x) - slice.density(x)).abs()).fold(0.0, f64::max);
    let tent = |x: f64| 2.0 * PI * PI * if (0.0..=1.0).contains(&x) { x } else if (1.0..=2.0).contains(&x) { 2.0 - x } else { 0.0 };
    let vs_tent = xs.iter().map(|&x| (d.eval(x) - tent(x)).abs()).fold(0.0, f64::max);
    let identities = support_residuals(2, cp2.points());
    let ts: Vec<f64> = (1..=50).map(|k| 0.1 * k as f64).collect();
    let round_trip = verify_identity(&cp2, &ts, None).unwrap().max_internal_error;
    let pass = vs_slice <= 1e-10 && vs_tent <= 1e-10 && identities == [0.0, 0.0] && round_trip <= 1e-10;
    verdict(
        9,
        "CP2 density vs toric slices",
        pass,
        format!("slice {vs_slice:.1e}, tent {vs_tent:.1e}, identities {identities:?}, round trip {round_trip:.1e}"),
    );
}

fn brute_force(basis: [[f64; 2]; 2], r: f64, reach: i64) -> u64 {
    let mut n = 0;
    for a in -reach..=reach {
        for b in -reach..=reach {
            let x = basis[0][0] * a as f64 + basis[0][1] * b as f64;
            let y = basis[1][0] * a as f64 + basis[1][1] * b as f64;
            if x * x + y * y <= r * r * (1.0 + 1e-12) {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn acceptance_10_weyl_law() {
    let square = enumerate_spectrum(&FlatTorusSpec::square(), 200.0).unwrap();
    let n10 = square.counting_function(10.0).unwrap();
    let brute = brute_force([[1.0, 0.0], [0.0, 1.0]], 10.0, 12);
    let sq = (square.counting_function(200.0).unwrap() as f64 / (PI * 200.0 * 200.0) - 1.0).abs();
    let rect = enumerate_spectrum(&FlatTorusSpec::rectangular(), 200.0).unwrap();
    let rect_brute = brute_force([[1.0, 0.0], [0.0, 0.5]], 30.0, 70);
    let rect_n30 = rect.counting_function(30.0).unwrap();
    let re = (rect.counting_function(200.0).unwrap() as f64 / (2.0 * PI * 200.0 * 200.0) - 1.0).abs();
    let pass = n10 == 317 && brute == 317 && sq <= 1e-3 && rect_n30 == rect_brute && re <= 1e-3;
    verdict(
        10,
        "Weyl law on flat tori",
        pass,
        format!("N(10) = {n10} (brute {brute}), square ratio error {sq:.2e}, rectangular {re:.2e}"),
    );
}

#[test]
fn acceptance_11_smoothed_expansion() {
    let s = enumerate_spectrum(&FlatTorusSpec::square(), 200.0).unwrap();
    let mut lead = 0.0f64;
    let mut spread = 0.0f64;
    for lambda in [100.0, 150.0] {
        let v: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&sg| s.smoothed_density(lambda, sg).unwrap()).collect();
        for x in &v {
            lead = lead.max((x - TAU * lambda).abs() / (TAU * lambda));
        }
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        spread = spread.max((hi - lo) / lo);
    }
    verdict(
        11,
        "smoothed sums vs 2 pi lambda",
        lead <= 0.02 && spread <= 0.02,
        format!("max deviation from leading term {lead:.2e}, sigma spread {spread:.2e}"),
    );
}

#[test]
fn acceptance_12_wave_trace_singular_support() {
    let s = enumerate_spectrum(&FlatTorusSpec::square(), 200.0).unwrap();
    let tr = s.wave_trace(&uniform_grid(0.0, 18.5, 7401), 0.05).unwrap();
    let peaks = detect_peaks(&tr, 5, 1.0).unwrap();
    let want = [TAU, TAU * 2f64.sqrt(), 2.0 * TAU, TAU * 5f64.sqrt(), 2.0 * TAU * 2f64.sqrt()];
    let miss = peaks.iter().zip(want).map(|(p, w)| (p.t - w).abs()).fold(0.0, f64::max);
    let smallest = peaks.iter().map(|p| p.amplitude).fold(f64::INFINITY, f64::min);
    // local maxima of |S| between the t = 0 singularity and the first length
    let a = tr.abs();
    let mut spurious = 0.0f64;
    for k in 1..a.len() - 1 {
        let t = tr.t[k];
        if t > 1.0 && t < TAU - 0.1 && a[k] > a[k - 1] && a[k] >= a[k + 1] {
            spurious = spurious.max(a[k]);
        }
    }
    verdict(
        12,
        "wave-trace peaks at geodesic lengths",
        miss <= 0.02 && spurious < 0.2 * smallest,
        format!("worst peak offset {miss:.2e}, spurious/smallest = {:.3}", spurious / smallest),
    );
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_symdesk")
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Every CLI command exercised by the acceptance criteria.
fn acceptance_commands() -> Vec<(&'static str, Vec<String>)> {
    let m = |p: &str| repo_root().join("models").join(p).display().to_string();
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        ("lie3_so3", v(&["lie3", "--algebra", "so3", "--steps", "1000", "--trials", "20", "--seed", "7", "--convergence"])),
        ("lie3_sl2", v(&["lie3", "--algebra", "sl2", "--steps", "1000", "--trials", "20", "--seed", "7"])),
        ("periods", v(&["pendulum", "periods", "--flow"])),
        ("monodromy", v(&["pendulum", "monodromy", "--radius", "0.5", "--loop-steps", "256"])),
        ("spectrum", v(&["pendulum", "spectrum", "--hbar", "0.05"])),
        ("cells", v(&["pendulum", "cells", "--hbar", "0.05"])),
        ("dh_s2", [v(&["dh", "check", "--model"]), vec![m("s2.json")], v(&["--oracle", "mc", "--seed", "11"])].concat()),
        (
            "dh_cp2",
            [
                v(&["dh", "check", "--model"]),
                vec![m("cp2.json")],
                v(&["--oracle", "toric", "--polytope"]),
                vec![m("triangle.json")],
                v(&["--xi", "1,2"]),
            ]
            .concat(),
        ),
        ("dh_density", [v(&["dh", "density", "--model"]), vec![m("s2xs2.json")]].concat()),
        ("enumerate", v(&["spectra", "enumerate", "--cutoff", "10"])),
        ("weyl", v(&["spectra", "weyl", "--lambda", "200"])),
        ("smooth", v(&["spectra", "smooth"])),
        ("peaks", v(&["spectra", "peaks", "--k", "5"])),
    ]
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn acceptance_13_determinism() {
    let root = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut failures = Vec::new();
    for (name, args) in acceptance_commands() {
        let mut snaps = Vec::new();
        for run in 0..2 {
            let dir = root.path().join(format!("{name}-{run}"));
            let status = Command::new(bin()).arg("--out").arg(&dir).args(&args).status().unwrap();
            if status.code() != Some(0) {
                failures.push(format!("{name} exit {:?}", status.code()));
            }
            snaps.push(snapshot(&dir));
        }
        if snaps[0] != snaps[1] || snaps[0].is_empty() {
            differing.push(name);
        }
    }
    verdict(
        13,
        "byte-identical reruns of the CLI commands",
        differing.is_empty() && failures.is_empty(),
        format!("{} commands, differing {differing:?}, failing {failures:?}", acceptance_commands().len()),
    );
}
