//! The spherical pendulum `H = ½|p|² + z` on `T*S²` (unit mass, length and
//! gravity) and its angular momentum `L`.
//!
//! Reduction to the height `z` gives `ż² = P(z) = 2(h − z)(1 − z²) − ℓ²`.
//! The period lattice of a regular fibre is spanned by `(0, 2π)` (pure
//! rotation) and `(T, −Θ)` (one oscillation in `z`, compensated by the
//! azimuth advance `Θ`); with this sign `∇J = (T, −Θ) / 2π` for the action
//! `J = (1/π) ∫ √P / (1 − z²) dz`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::quad::{graded_edges, GaussLegendre};

/// Values closer than this to the critical set are rejected.
pub const DEGENERACY_TOL: f64 = 1e-8;
pub const DEFAULT_NODES: usize = 200;
/// Largest allowed lattice-matching defect along a loop.
pub const MAX_LOOP_DEFECT: f64 = 0.25;
/// Largest allowed cell-matching defect in the quantum cell transport.
pub const MAX_CELL_DEFECT: f64 = 0.3;
/// The focus-focus critical value.
pub const FOCUS_FOCUS: (f64, f64) = (1.0, 0.0);

/// `P(z) = 2(h − z)(1 − z²) − ℓ²`.
pub fn reduced_cubic(h: f64, l: f64, z: f64) -> f64 {
    2.0 * (h - z) * (1.0 - z * z) - l * l
}

/// The three real roots of `P`, `lower <= upper <= third`; motion in `z`
/// happens on `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roots {
    pub lower: f64,
    pub upper: f64,
    pub third: f64,
}

/// Roots of `P` for any value whose fibre is a nonempty set of motions on
/// the sphere. Does not reject the focus-focus value or values near the
/// boundary; [`EnergyMomentum::new`] does.
pub fn roots(h: f64, l: f64) -> Result<Roots> {
    let not = |reason| Error::NotRegular { h, l, reason };
    if !h.is_finite() || !l.is_finite() {
        return Err(not("non-finite input"));
    }
    if l == 0.0 {
        if h <= -1.0 {
            return Err(not("below the stable equilibrium"));
        }
        // P = 2(h − z)(1 − z²): roots are exactly −1, h, 1
        let (upper, third) = if h < 1.0 { (h, 1.0) } else { (1.0, h) };
        return Ok(Roots { lower: -1.0, upper, third });
    }
    let disc = (h * h + 3.0).sqrt();
    let zmax = (h - disc) / 3.0;
    let zmin = (h + disc) / 3.0;
    if zmax <= -1.0 || reduced_cubic(h, l, zmax) <= 0.0 {
        return Err(not("outside the energy-momentum image"));
    }
    let f = |z| reduced_cubic(h, l, z);
    let lower = bisect_root(f, -2.0, zmax);
    let upper = bisect_root(f, zmax, zmin);
    let hi = h.abs().max(1.0) + 2.0;
    let third = bisect_root(f, zmin, hi);
    Ok(Roots { lower, upper, third })
}

/// Root of `f` in `[a, b]` with `f(a)` and `f(b)` of opposite sign, by
/// bisection to full precision followed by a guarded Newton polish.
fn bisect_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    let rising = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
    }
    let mut z = 0.5 * (a + b);
    for _ in 0..2 {
        let d = 1e-7 * (1.0 + z.abs());
        let slope = (f(z + d) - f(z - d)) / (2.0 * d);
        if slope != 0.0 {
            let next = z - f(z) / slope;
            if next >= a && next <= b {
                z = next;
            }
        }
    }
    z
}

/// A regular value `(h, ℓ)` of the energy-momentum map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMomentum {
    h: f64,
    l: f64,
    roots: Roots,
}

impl EnergyMomentum {
    pub fn new(h: f64, l: f64) -> Result<Self> {
        let not = |reason| Error::NotRegular { h, l, reason };
        if (h - FOCUS_FOCUS.0).abs() <= DEGENERACY_TOL && (l - FOCUS_FOCUS.1).abs() <= DEGENERACY_TOL {
            return Err(not("focus-focus critical value"));
        }
        let roots = roots(h, l)?;
        if l != 0.0 {
            let zmax = (h - (h * h + 3.0).sqrt()) / 3.0;
            // ∂P/∂h = 2(1 − z²) ≤ 2, so this bounds the distance to the curve
            if reduced_cubic(h, l, zmax) <= 2.0 * DEGENERACY_TOL {
                return Err(not("on the relative-equilibrium curve"));
            }
        } else if h + 1.0 <= DEGENERACY_TOL {
            return Err(not("on the relative-equilibrium curve"));
        }
        if roots.third - roots.upper <= DEGENERACY_TOL {
            return Err(not("focus-focus critical value"));
        }
        Ok(Self { h, l, roots })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn roots(&self) -> Roots {
        self.roots
    }

    /// `(z₋, z₊)`.
    pub fn turning_points(&self) -> (f64, f64) {
        (self.roots.lower, self.roots.upper)
    }
}

/// `(z₋, z₊)` for a regular value.
pub fn turning_points(h: f64, l: f64) -> Result<(f64, f64)> {
    Ok(EnergyMomentum::new(h, l)?.turning_points())
}

/// Return time `T` of the height and azimuth advance `Θ` over one return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Periods {
    pub t: f64,
    pub theta: f64,
}

/// Integrals over `[z₋, z₊]` after `z = z₋ + (z₊ − z₋) sin²θ`, which turns
/// both square-root endpoint singularities into smooth integrands.
#[derive(Debug, Clone)]
pub struct PendulumQuadrature {
    rule: GaussLegendre,
}

impl Default for PendulumQuadrature {
    fn default() -> Self {
        Self::new(DEFAULT_NODES)
    }
}

/// Geometry of the substitution at one value.
struct Substitution {
    width: f64,
    one_plus_lower: f64,
    one_minus_upper: f64,
    gap: f64,
    edges: Vec<f64>,
}

impl Substitution {
    fn new(r: &Roots) -> Self {
        let width = r.upper - r.lower;
        let one_plus_lower = 1.0 + r.lower;
        let one_minus_upper = 1.0 - r.upper;
        let gap = r.third - r.upper;
        // θ-scales on which 1 ± z or z₃ − z vary near the ends
        let scale = |d: f64| {
            let s = (d / width).sqrt();
            (d > 0.0 && s < 0.05).then_some(s.max(1e-12))
        };
        let left = scale(one_plus_lower);
        let right = match (scale(one_minus_upper), scale(gap)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let edges = graded_edges(0.0, 0.5 * PI, left, right);
        Self { width, one_plus_lower, one_minus_upper, gap, edges }
    }

    /// `(sin²θ, cos²θ, 1 − z², z₃ − z)` at `θ`.
    fn at(&self, theta: f64) -> (f64, f64, f64, f64) {
        let s = theta.sin();
        let c = theta.cos();
        let (s2, c2) = (s * s, c * c);
        let one_plus = self.one_plus_lower + self.width * s2;
        let one_minus = self.one_minus_upper + self.width * c2;
        (s2, c2, one_plus * one_minus, self.gap + self.width * c2)
    }
}

impl PendulumQuadrature {
    pub fn new(nodes: usize) -> Self {
        Self { rule: GaussLegendre::new(nodes) }
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }

    /// `T = 2∫ dz/√P`, `Θ = 2ℓ ∫ dz / ((1 − z²)√P)`.
    pub fn periods(&self, v: &EnergyMomentum) -> Periods {
        self.periods_raw(v.l, &v.roots)
    }

    fn periods_raw(&self, l: f64, r: &Roots) -> Periods {
        let sub = Substitution::new(r);
        let t = 4.0
            * self.rule.integrate_panels(&sub.edges, |th| {
                let (_, _, _, g) = sub.at(th);
                1.0 / (2.0 * g).sqrt()
            });
        let theta = if l == 0.0 {
            0.0
        } else {
            4.0 * l
                * self.rule.integrate_panels(&sub.edges, |th| {
                    let (_, _, q, g) = sub.at(th);
                    1.0 / (q * (2.0 * g).sqrt())
                })
        };
        Periods { t, theta }
    }

    /// `J = (1/π) ∫ √P / (1 − z²) dz`.
    pub fn action(&self, v: &EnergyMomentum) -> f64 {
        self.action_raw(&v.roots)
    }

    fn action_raw(&self, r: &Roots) -> f64 {
        let sub = Substitution::new(r);
        let w = sub.width;
        2.0 * w * w / PI
            * self.rule.integrate_panels(&sub.edges, |th| {
                let (s2, c2, q, g) = sub.at(th);
                s2 * c2 * (2.0 * g).sqrt() / q
            })
    }

    /// `J` at any value with a nonempty fibre, including the focus-focus value.
    pub fn action_at(&self, h: f64, l: f64) -> Result<f64> {
        Ok(self.action_raw(&roots(h, l)?))
    }

    pub fn lattice(&self, v: &EnergyMomentum) -> PeriodLattice {
        let p = self.periods(v);
        PeriodLattice { base: *v, rotation: [0.0, 2.0 * PI], return_map: [p.t, -p.theta] }
    }
}

/// Basis of the period lattice at a regular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodLattice {
    pub base: EnergyMomentum,
    /// `(0, 2π)`.
    pub rotation: [f64; 2],
    /// `(T, −Θ)`.
    pub return_map: [f64; 2],
}

impl PeriodLattice {
    fn basis(&self) -> Matrix2<f64> {
        Matrix2::new(self.rotation[0], self.return_map[0], self.rotation[1], self.return_map[1])
    }
}

/// Result of integrating Hamilton's equations directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPeriods {
    pub t: f64,
    /// Azimuth advance over one return, in `(−2π, 2π)`.
    pub theta: f64,
    /// Largest `|H − h|` seen along the trajectory.
    pub energy_drift: f64,
}

pub const FLOW_STEP: f64 = 1e-4;
pub const FLOW_TIMEOUT: f64 = 100.0;

type State = [f64; 6];

/// `q̈ = −e_z + (q_z − |v|²) q` keeps the motion on the unit sphere.
fn sphere_rhs(s: &State) -> State {
    let (q, v) = ([s[0], s[1], s[2]], [s[3], s[4], s[5]]);
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let lam = q[2] - v2;
    [v[0], v[1], v[2], lam * q[0], lam * q[1], lam * q[2] - 1.0]
}

fn rk4_step(s: &State, dt: f64) -> State {
    let add = |a: &State, b: &State, c: f64| -> State { core::array::from_fn(|i| a[i] + c * b[i]) };
    let k1 = sphere_rhs(s);
    let k2 = sphere_rhs(&add(s, &k1, 0.5 * dt));
    let k3 = sphere_rhs(&add(s, &k2, 0.5 * dt));
    let k4 = sphere_rhs(&add(s, &k3, dt));
    core::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn project(s: &mut State) {
    let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    for x in &mut s[..3] {
        *x /= n;
    }
    let radial = s[0] * s[3] + s[1] * s[4] + s[2] * s[5];
    for i in 0..3 {
        s[3 + i] -= radial * s[i];
    }
}

fn energy(s: &State) -> f64 {
    0.5 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]) + s[2]
}

/// Root in `[0, 1]` of the cubic Hermite interpolant with end values
/// `y0, y1` and end slopes `d0, d1` (already scaled by the step).
fn hermite_root(y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let p = |u: f64| {
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * d1
    };
    let (mut a, mut b) = (0.0, 1.0);
    let rising = y0 < 0.0;
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if (p(m) < 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn hermite_value(y0: f64, y1: f64, d0: f64, d1: f64, u: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * d1
}

/// First return of the height to its starting turning point, by RK4 on
/// the embedded equations of motion with projection back to `T S²`.
///
/// Starts at `z₊` (or `z₋` when `z₊` is the north pole) with purely
/// azimuthal velocity and stops at the second sign change of `ż`.
pub fn flow_periods_oracle(v: &EnergyMomentum, dt: f64) -> Result<FlowPeriods> {
    let (zl, zu) = v.turning_points();
    let start = if 1.0 - zu > 1e-6 {
        zu
    } else if 1.0 + zl > 1e-6 {
        zl
    } else {
        return Err(Error::Invalid(alloc::string::String::from(
            "both turning points are poles; the oracle needs an off-axis start",
        )));
    };
    let rho = (1.0 - start * start).sqrt();
    let mut s: State = [rho, 0.0, start, 0.0, v.l() / rho, 0.0];
    let h = v.h();
    let mut drift = (energy(&s) - h).abs();
    let mut t = 0.0;
    let mut phi = 0.0;
    let mut sign_changes = 0;
    let mut zdot = s[5];
    let azimuth_rate = |s: &State| (s[0] * s[4] - s[1] * s[3]) / (s[0] * s[0] + s[1] * s[1]);
    while t < FLOW_TIMEOUT {
        let mut next = rk4_step(&s, dt);
        project(&mut next);
        drift = drift.max((energy(&next) - h).abs());
        let mut dphi = next[1].atan2(next[0]) - s[1].atan2(s[0]);
        if dphi > PI {
            dphi -= 2.0 * PI;
        } else if dphi < -PI {
            dphi += 2.0 * PI;
        }
        let znext = next[5];
        // the first step leaves the turning point where ż = 0 exactly
        if t > 0.0 && (zdot < 0.0) != (znext < 0.0) && znext != 0.0 {
            sign_changes += 1;
            if sign_changes == 2 {
                // z̈ along the trajectory is the vertical acceleration
                let a0 = sphere_rhs(&s)[5] * dt;
                let a1 = sphere_rhs(&next)[5] * dt;
                let u = hermite_root(zdot, znext, a0, a1);
                let w0 = azimuth_rate(&s) * dt;
                let w1 = azimuth_rate(&next) * dt;
                let theta = phi + hermite_value(0.0, dphi, w0, w1, u);
                return Ok(FlowPeriods { t: t + u * dt, theta, energy_drift: drift });
            }
        }
        phi += dphi;
        zdot = znext;
        s = next;
        t += dt;
    }
    Err(Error::NoReturn(FLOW_TIMEOUT))
}

/// A closed loop of regular values traced `turns` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loop {
    pub center: (f64, f64),
    pub radius: f64,
    /// Samples per turn.
    pub steps: usize,
    pub turns: usize,
    pub reversed: bool,
}

impl Loop {
    pub fn circle(center: (f64, f64), radius: f64, steps: usize) -> Self {
        Self { center, radius, steps, turns: 1, reversed: false }
    }

    /// The standard loop around the focus-focus value.
    pub fn around_focus_focus(radius: f64, steps: usize) -> Self {
        Self::circle(FOCUS_FOCUS, radius, steps)
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn turns(mut self, turns: usize) -> Self {
        self.turns = turns;
        self
    }

    /// `steps * turns + 1` points; the first and last coincide. The phase is
    /// offset by `π / 2K` so no sample sits on the center's horizontal line.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let k = self.steps as f64;
        let dir = if self.reversed { -1.0 } else { 1.0 };
        let phase0 = PI / (2.0 * k);
        (0..=self.steps * self.turns)
            .map(|i| {
                let phase = phase0 + dir * 2.0 * PI * (i % self.steps) as f64 / k;
                (self.center.0 + self.radius * phase.cos(), self.center.1 + self.radius * phase.sin())
            })
            .collect()
    }
}

/// One sample of the continued lattice basis along a loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSample {
    pub step: usize,
    pub h: f64,
    pub l: f64,
    pub t: f64,
    /// `Θ` of the continued second generator `(T, −Θ_branch)`.
    pub theta_branch: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyResult {
    /// Continued basis after one traversal, in coordinates of the initial
    /// basis (columns).
    pub matrix: [[i64; 2]; 2],
    pub loop_spec: Loop,
    pub residual: f64,
    pub trace: Vec<LoopSample>,
}

fn round_matrix(m: &Matrix2<f64>) -> ([[i64; 2]; 2], f64) {
    let mut out = [[0i64; 2]; 2];
    let mut defect = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let r = m[(i, j)].round();
            defect = defect.max((m[(i, j)] - r).abs());
            out[i][j] = r as i64;
        }
    }
    (out, defect)
}

fn to_matrix(m: &[[i64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64)
}

/// Continues the period-lattice basis around `lp` by integer rematching at
/// every sample and returns the holonomy.
pub fn monodromy(lp: &Loop, quad: &PendulumQuadrature) -> Result<MonodromyResult> {
    if lp.steps < 64 {
        return Err(Error::Invalid(alloc::format!("loop needs at least 64 steps, got {}", lp.steps)));
    }
    let pts = lp.points();
    let mut tracked: Option<Matrix2<f64>> = None;
    let mut initial = Matrix2::identity();
    let mut residual = 0.0f64;
    let mut trace = Vec::with_capacity(pts.len());
    for (step, &(h, l)) in pts.iter().enumerate() {
        let v = EnergyMomentum::new(h, l)?;
        let raw = quad.lattice(&v).basis();
        let (basis, defect) = match tracked {
            None => {
                initial = raw;
                (raw, 0.0)
            }
            Some(prev) => {
                let inv = raw.try_inverse().ok_or(Error::Singular { node: step })?;
                let (coeffs, defect) = round_matrix(&(inv * prev));
                if defect >= MAX_LOOP_DEFECT {
                    return Err(Error::LoopTooCoarse { step, defect });
                }
                (raw * to_matrix(&coeffs), defect)
            }
        };
        residual = residual.max(defect);
        trace.push(LoopSample { step, h, l, t: raw[(0, 1)], theta_branch: -basis[(1, 1)], defect });
        tracked = Some(basis);
    }
    let last = tracked.expect("loop has points");
    let inv0 = initial.try_inverse().ok_or(Error::Singular { node: 0 })?;
    let (matrix, defect) = round_matrix(&(inv0 * last));
    residual = residual.max(defect);
    Ok(MonodromyResult { matrix, loop_spec: *lp, residual, trace })
}

/// Axis-aligned box of `(h, ℓ)` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub h: (f64, f64),
    pub l: (f64, f64),
}

impl Window {
    pub fn contains(&self, h: f64, l: f64) -> bool {
        h >= self.h.0 && h <= self.h.1 && l >= self.l.0 && l <= self.l.1
    }

    /// Margin that leaves room for a few elementary cells around a loop.
    pub const CELL_MARGIN: f64 = 0.3;

    /// Bounding box of a loop widened by `margin`.
    pub fn around(lp: &Loop, margin: f64) -> Self {
        let r = lp.radius + margin;
        Self { h: (lp.center.0 - r, lp.center.0 + r), l: (lp.center.1 - r, lp.center.1 + r) }
    }

    pub fn area(&self) -> f64 {
        (self.h.1 - self.h.0) * (self.l.1 - self.l.0)
    }
}

/// A point `(h, ℓ)` with `ℓ = ħm` and `J(h, ℓ) = ħ(n + ½)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub h: f64,
    pub l: f64,
    pub n: i64,
    pub m: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    pub hbar: f64,
    pub window: Window,
    pub points: Vec<SpectrumPoint>,
}

/// Maslov shift of the height oscillation (two simple turning points).
pub const MASLOV_SHIFT: f64 = 0.5;

/// Lowest `h` with a nonempty fibre at angular momentum `l`.
pub fn lowest_energy(l: f64) -> f64 {
    if l == 0.0 {
        return -1.0;
    }
    let g = |h: f64| {
        let zmax = (h - (h * h + 3.0).sqrt()) / 3.0;
        reduced_cubic(h, l, zmax)
    };
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    bisect_root(g, -1.0, hi)
}

impl JointSpectrum {
    /// Largest `|J(h, ħm) − ħ(n + ½)|` and `|ℓ − ħm|` over the points.
    pub fn max_residual(&self, quad: &PendulumQuadrature) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in &self.points {
            let j = quad.action_at(p.h, p.l)?;
            worst = worst
                .max((j - self.hbar * (p.n as f64 + MASLOV_SHIFT)).abs())
                .max((p.l - self.hbar * p.m as f64).abs());
        }
        Ok(worst)
    }

    pub fn find(&self, n: i64, m: i64) -> Option<&SpectrumPoint> {
        self.points.iter().find(|p| p.n == n && p.m == m)
    }
}

/// Bohr–Sommerfeld points in `window`: for each `m` with `ħm` inside the
/// `ℓ`-range, every `n` whose quantized action is attained, solved for `h`
/// by bisection (`J` increases with `h` since `∂J/∂h = T / 2π`).
pub fn joint_spectrum(hbar: f64, window: Window, quad: &PendulumQuadrature) -> Result<JointSpectrum> {
    if !(hbar > 0.0) {
        return Err(Error::Invalid(alloc::format!("hbar must be positive, got {hbar}")));
    }
    if !(window.h.1 > window.h.0 && window.l.1 >= window.l.0) {
        return Err(Error::Invalid(alloc::string::String::from("empty window")));
    }
    let m_lo = (window.l.0 / hbar).ceil() as i64;
    let m_hi = (window.l.1 / hbar).floor() as i64;
    let mut points = Vec::new();
    for m in m_lo..=m_hi {
        let l = hbar * m as f64;
        let h_lo = window.h.0.max(lowest_energy(l) + 1e-6);
        let h_hi = window.h.1;
        if h_lo >= h_hi {
            continue;
        }
        let j_lo = quad.action_at(h_lo, l)?;
        let j_hi = quad.action_at(h_hi, l)?;
        let n_lo = (j_lo / hbar - MASLOV_SHIFT).ceil() as i64;
        let n_hi = (j_hi / hbar - MASLOV_SHIFT).floor() as i64;
        for n in n_lo.max(0)..=n_hi {
            let target = hbar * (n as f64 + MASLOV_SHIFT);
            let (mut a, mut b) = (h_lo, h_hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if quad.action_at(mid, l)? < target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            points.push(SpectrumPoint { h: 0.5 * (a + b), l, n, m });
        }
    }
    if points.is_empty() {
        return Err(Error::Invalid(alloc::string::String::from("window contains no spectrum points")));
    }
    Ok(JointSpectrum { hbar, window, points })
}

/// Bucketed nearest-point lookup over the spectrum.
struct PointGrid<'a> {
    points: &'a [SpectrumPoint],
    origin: (f64, f64),
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointGrid<'a> {
    fn new(spec: &'a JointSpectrum) -> Self {
        let cell = spec.hbar;
        let origin = (spec.window.h.0, spec.window.l.0);
        let cols = ((spec.window.h.1 - origin.0) / cell).ceil() as usize + 1;
        let rows = ((spec.window.l.1 - origin.1) / cell).ceil() as usize + 1;
        let mut buckets = alloc::vec![Vec::new(); cols * rows];
        for (i, p) in spec.points.iter().enumerate() {
            let (c, r) = Self::index(origin, cell, cols, rows, p.h, p.l);
            buckets[r * cols + c].push(i);
        }
        Self { points: &spec.points, origin, cell, cols, rows, buckets }
    }

    fn index(origin: (f64, f64), cell: f64, cols: usize, rows: usize, h: f64, l: f64) -> (usize, usize) {
        let c = ((h - origin.0) / cell).floor().clamp(0.0, (cols - 1) as f64) as usize;
        let r = ((l - origin.1) / cell).floor().clamp(0.0, (rows - 1) as f64) as usize;
        (c, r)
    }

    fn nearest(&self, x: Vector2<f64>) -> Option<Vector2<f64>> {
        let (c0, r0) = Self::index(self.origin, self.cell, self.cols, self.rows, x[0], x[1]);
        let mut best: Option<(f64, Vector2<f64>)> = None;
        let max_ring = self.cols.max(self.rows);
        for ring in 0..=max_ring {
            if let Some((d, _)) = best {
                // every point in ring `ring` is at least (ring − 1) cells away
                if (ring as f64 - 1.0) * self.cell > d.sqrt() {
                    break;
                }
            }
            let (rlo, rhi) = (r0 as isize - ring as isize, r0 as isize + ring as isize);
            let (clo, chi) = (c0 as isize - ring as isize, c0 as isize + ring as isize);
            for r in rlo..=rhi {
                for c in clo..=chi {
                    let on_ring = r == rlo || r == rhi || c == clo || c == chi;
                    if !on_ring || r < 0 || c < 0 || r >= self.rows as isize || c >= self.cols as isize {
                        continue;
                    }
                    for &i in &self.buckets[r as usize * self.cols + c as usize] {
                        let p = Vector2::new(self.points[i].h, self.points[i].l);
                        let d = (p - x).norm_squared();
                        if best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, p));
                        }
                    }
                }
            }
        }
        best.map(|(_, p)| p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTransport {
    /// Final cell vectors in coordinates of the initial cell (columns).
    pub matrix: [[i64; 2]; 2],
    pub max_defect: f64,
    /// Number of elementary lattice moves made along the loop.
    pub moves: usize,
}

/// Carries an elementary cell of the joint spectrum around `lp`.
///
/// The cell starts at the spectrum point nearest the loop's first sample,
/// spanned by `(n, m+1) − (n, m)` (reduced against the other vector) and
/// `(n+1, m) − (n, m)`. It then walks
/// one lattice step at a time toward each loop sample; after every step the
/// base point and both cell vectors are re-snapped to the nearest spectrum
/// points, and moves stop once no single step gets closer to the sample. The returned matrix expresses the final cell in the initial one.
pub fn cell_transport(spec: &JointSpectrum, lp: &Loop) -> Result<CellTransport> {
    let pts = lp.points();
    if pts.iter().any(|&(h, l)| !spec.window.contains(h, l)) {
        return Err(Error::Invalid(alloc::string::String::from("loop leaves the spectrum window")));
    }
    let grid = PointGrid::new(spec);
    let first = Vector2::new(pts[0].0, pts[0].1);
    let start = spec
        .points
        .iter()
        .filter(|p| spec.find(p.n + 1, p.m).is_some() && spec.find(p.n, p.m + 1).is_some())
        .min_by(|a, b| {
            let da = (Vector2::new(a.h, a.l) - first).norm_squared();
            let db = (Vector2::new(b.h, b.l) - first).norm_squared();
            da.total_cmp(&db)
        })
        .ok_or(Error::HbarTooLarge { step: 0, defect: f64::INFINITY })?;
    let at = |p: &SpectrumPoint| Vector2::new(p.h, p.l);
    let mut base = at(start);
    let e_n = at(spec.find(start.n + 1, start.m).unwrap()) - base;
    // Shortening the Δm vector by multiples of the Δn vector keeps the cell
    // well shaped; the holonomy fixes the Δn direction, so its matrix in the
    // reduced basis is unchanged.
    let mut e_m = at(spec.find(start.n, start.m + 1).unwrap()) - base;
    e_m -= e_n * (e_m.dot(&e_n) / e_n.norm_squared()).round();
    let initial = Matrix2::from_columns(&[e_m, e_n]);
    let mut cell = initial;
    let mut max_defect = 0.0f64;
    let mut moves = 0;

    let snap = |x: Vector2<f64>, cell: &Matrix2<f64>, step: usize| -> Result<(Vector2<f64>, f64)> {
        let p = grid.nearest(x).ok_or(Error::HbarTooLarge { step, defect: f64::INFINITY })?;
        let inv = cell.try_inverse().ok_or(Error::Singular { node: step })?;
        let d = (inv * (p - x)).amax();
        if d >= MAX_CELL_DEFECT {
            return Err(Error::HbarTooLarge { step, defect: d });
        }
        Ok((p, d))
    };

    for (step, &(h, l)) in pts.iter().enumerate().skip(1) {
        let target = Vector2::new(h, l);
        // greedy descent: each move strictly shortens the distance to the target
        loop {
            let here = (target - base).norm_squared();
            let best = [cell.column(0).into_owned(), cell.column(1).into_owned()]
                .into_iter()
                .flat_map(|v| [v, -v])
                .map(|v| ((target - base - v).norm_squared(), v))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("four candidate moves");
            if best.0 >= here {
                break;
            }
            let (next, d0) = snap(base + best.1, &cell, step)?;
            if (target - next).norm_squared() >= here {
                break;
            }
            let (a, d1) = snap(next + cell.column(0), &cell, step)?;
            let (b, d2) = snap(next + cell.column(1), &cell, step)?;
            max_defect = max_defect.max(d0).max(d1).max(d2);
            cell = Matrix2::from_columns(&[a - next, b - next]);
            base = next;
            moves += 1;
        }
    }
    let inv0 = initial.try_inverse().ok_or(Error::Singular { node: 0 })?;
    let (matrix, defect) = round_matrix(&(inv0 * cell));
    if defect >= MAX_CELL_DEFECT {
        return Err(Error::HbarTooLarge { step: pts.len() - 1, defect });
    }
    Ok(CellTransport { matrix, max_defect: max_defect.max(defect), moves })
}

/// Integer 2×2 helpers for comparing monodromy classes.
pub mod intmat {
    pub type IMat = [[i64; 2]; 2];

    pub fn mul(a: &IMat, b: &IMat) -> IMat {
        core::array::from_fn(|i| core::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
    }

    pub fn det(a: &IMat) -> i64 {
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn trace(a: &IMat) -> i64 {
        a[0][0] + a[1][1]
    }

    /// Inverse of a determinant-±1 matrix.
    pub fn inverse(a: &IMat) -> IMat {
        let d = det(a);
        assert!(d == 1 || d == -1, "not unimodular");
        [[a[1][1] * d, -a[0][1] * d], [-a[1][0] * d, a[0][0] * d]]
    }

    pub fn transpose(a: &IMat) -> IMat {
        [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
    }

    pub const IDENTITY: IMat = [[1, 0], [0, 1]];

    /// Whether `a` is GL(2, Z)-conjugate to `[[1, 1], [0, 1]]`: unipotent,
    /// not the identity, and `a − I` has content one.
    pub fn is_elementary_shear(a: &IMat) -> bool {
        if det(a) != 1 || trace(a) != 2 || *a == IDENTITY {
            return false;
        }
        let n = [a[0][0] - 1, a[0][1], a[1][0], a[1][1] - 1];
        n.iter().fold(0i64, |g, &x| gcd(g, x.abs())) == 1
    }

    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
}
