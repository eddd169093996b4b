//! Spectrum of `P = √(−Δ)` on flat 2-tori `R²/Γ`: eigenvalue counting,
//! Weyl's law, smoothed spectral sums and the Abel-regularized wave trace.
//!
//! Eigenfunctions are `e^{i⟨v,x⟩}` for `v` in the dual lattice
//! `Γ* = 2π L^{−T} Z²`, so the eigenvalues are the norms `|v|`.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{Complex, Matrix2, Vector2};

use crate::error::{Error, Result};

/// Norms closer than this are one eigenvalue.
pub const MERGE_TOL: f64 = 1e-9;
pub const DEFAULT_CAP: u64 = 10_000_000;
pub const DEFAULT_EPSILON: f64 = 0.05;
/// Coarsest trace grid accepted by [`detect_peaks`].
pub const MAX_PEAK_SPACING: f64 = 0.005;
pub const DEFAULT_T_MIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatTorusSpec {
    lattice: Matrix2<f64>,
}

impl FlatTorusSpec {
    /// `lattice` has the basis vectors of `Γ` as columns.
    pub fn new(lattice: Matrix2<f64>) -> Result<Self> {
        let det = lattice.determinant();
        if !det.is_finite() || det.abs() <= 1e-12 * lattice.norm_squared().max(1.0) {
            return Err(Error::Invalid("lattice matrix is singular".to_string()));
        }
        Ok(Self { lattice })
    }

    pub fn from_columns(a: [f64; 2], b: [f64; 2]) -> Result<Self> {
        Self::new(Matrix2::new(a[0], b[0], a[1], b[1]))
    }

    /// `R² / 2πZ²`.
    pub fn square() -> Self {
        Self::new(Matrix2::identity() * (2.0 * PI)).expect("valid")
    }

    /// `R² / (2πZ × 4πZ)`.
    pub fn rectangular() -> Self {
        Self::new(Matrix2::new(2.0 * PI, 0.0, 0.0, 4.0 * PI)).expect("valid")
    }

    pub fn lattice(&self) -> &Matrix2<f64> {
        &self.lattice
    }

    pub fn volume(&self) -> f64 {
        self.lattice.determinant().abs()
    }

    /// Basis of `Γ*` as columns.
    pub fn dual(&self) -> Matrix2<f64> {
        self.lattice.try_inverse().expect("invertible").transpose() * (2.0 * PI)
    }

    /// Distinct lengths of nonzero vectors of `Γ` up to `max`, ascending.
    pub fn lattice_lengths(&self, max: f64) -> Vec<f64> {
        let (vectors, _) = ball_points(&self.lattice, max);
        let mut norms: Vec<f64> = vectors.into_iter().filter(|&r| r > 0.0).collect();
        norms.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for r in norms {
            if out.last().is_none_or(|&l| r - l > MERGE_TOL * r.max(1.0)) {
                out.push(r);
            }
        }
        out
    }
}

/// Half-widths of the coefficient box containing the ball `|B k| ≤ r`:
/// `|k_i| ≤ r · |row_i(B⁻¹)|`.
fn box_bounds(basis: &Matrix2<f64>, r: f64) -> [i64; 2] {
    let inv = basis.try_inverse().expect("invertible");
    [0, 1].map(|i| (r * inv.row(i).norm()).floor() as i64)
}

fn ball_points(basis: &Matrix2<f64>, r: f64) -> (Vec<f64>, u64) {
    let [k0, k1] = box_bounds(basis, r);
    let mut out = Vec::new();
    for a in -k0..=k0 {
        for b in -k1..=k1 {
            let v = basis * Vector2::new(a as f64, b as f64);
            let n = v.norm();
            if n <= r + MERGE_TOL * r.max(1.0) {
                out.push(n);
            }
        }
    }
    let box_size = ((2 * k0 + 1) * (2 * k1 + 1)) as u64;
    (out, box_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumList {
    /// `(λ, multiplicity)` ascending.
    pub eigenvalues: Vec<(f64, u64)>,
    pub cutoff: f64,
    pub spec: FlatTorusSpec,
}

pub fn enumerate_spectrum(spec: &FlatTorusSpec, cutoff: f64) -> Result<SpectrumList> {
    enumerate_spectrum_capped(spec, cutoff, DEFAULT_CAP)
}

pub fn enumerate_spectrum_capped(spec: &FlatTorusSpec, cutoff: f64, cap: u64) -> Result<SpectrumList> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::Invalid("cutoff must be positive".to_string()));
    }
    let dual = spec.dual();
    let [k0, k1] = box_bounds(&dual, cutoff);
    // the box holds at most 4/π times the ball's count on a square lattice;
    // refuse early when even a quarter of it would exceed the cap
    let box_size = (2 * k0 as u64 + 1).saturating_mul(2 * k1 as u64 + 1);
    if box_size / 4 > cap {
        return Err(Error::TooMany { count: box_size, cap });
    }
    let (mut norms, _) = ball_points(&dual, cutoff);
    if norms.len() as u64 > cap {
        return Err(Error::TooMany { count: norms.len() as u64, cap });
    }
    norms.sort_by(f64::total_cmp);
    let mut eigenvalues: Vec<(f64, u64)> = Vec::new();
    for r in norms {
        match eigenvalues.last_mut() {
            Some((l, m)) if r - *l <= MERGE_TOL * l.max(1.0) => *m += 1,
            _ => eigenvalues.push((r, 1)),
        }
    }
    // the constant mode is exact
    if let Some(first) = eigenvalues.first_mut() {
        first.0 = 0.0;
    }
    Ok(SpectrumList { eigenvalues, cutoff, spec: *spec })
}

impl SpectrumList {
    pub fn total(&self) -> u64 {
        self.eigenvalues.iter().map(|e| e.1).sum()
    }

    fn check(&self, lambda: f64) -> Result<()> {
        if lambda > self.cutoff {
            return Err(Error::OutOfRange { what: "lambda", value: lambda, limit: self.cutoff });
        }
        Ok(())
    }

    /// `N(λ) = #{j : λ_j ≤ λ}` with multiplicity. Eigenvalues within the
    /// merge tolerance above `λ` count as equal to it.
    pub fn counting_function(&self, lambda: f64) -> Result<u64> {
        self.check(lambda)?;
        let limit = lambda + MERGE_TOL * lambda.max(1.0);
        Ok(self.eigenvalues.iter().take_while(|e| e.0 <= limit).map(|e| e.1).sum())
    }

    pub fn weyl_fit(&self, lambda: f64) -> Result<WeylFit> {
        let count = self.counting_function(lambda)?;
        let measured = count as f64 / (lambda * lambda);
        let predicted = weyl_coefficient(&self.spec);
        Ok(WeylFit { lambda, count, measured, predicted, ratio: measured / predicted })
    }

    /// `Σ_j m_j χ_σ(λ − λ_j)` with the unit-mass Gaussian `χ_σ`.
    pub fn smoothed_density(&self, lambda: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::Invalid("sigma must be positive".to_string()));
        }
        if lambda + 6.0 * sigma > self.cutoff {
            return Err(Error::OutOfRange { what: "lambda + 6 sigma", value: lambda + 6.0 * sigma, limit: self.cutoff });
        }
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
        Ok(self
            .eigenvalues
            .iter()
            .map(|&(l, m)| {
                let u = (lambda - l) / sigma;
                m as f64 * norm * (-0.5 * u * u).exp()
            })
            .sum())
    }

    pub fn wave_trace(&self, ts: &[f64], epsilon: f64) -> Result<TraceSignal> {
        if !(epsilon > 0.0) {
            return Err(Error::Invalid("epsilon must be positive".to_string()));
        }
        let damped: Vec<(f64, f64)> = self.eigenvalues.iter().map(|&(l, m)| (l, m as f64 * (-epsilon * l).exp())).collect();
        let values = ts.iter().map(|&t| trace_at(&damped, t)).collect();
        Ok(TraceSignal { t: ts.to_vec(), values, epsilon })
    }
}

/// `S(t)` from `(λ_j, m_j e^{−ελ_j})`, summed in ascending `λ` order.
pub fn trace_at(damped: &[(f64, f64)], t: f64) -> Complex<f64> {
    let mut re = 0.0;
    let mut im = 0.0;
    for &(l, w) in damped {
        let (s, c) = (l * t).sin_cos();
        re += w * c;
        im -= w * s;
    }
    Complex::new(re, im)
}

/// Leading Weyl coefficient `vol · π / (2π)²`.
pub fn weyl_coefficient(spec: &FlatTorusSpec) -> f64 {
    spec.volume() * PI / (4.0 * PI * PI)
}

/// Leading term `c₀ λ / (2π)²` of the smoothed sum, `c₀ = vol · 2π`.
pub fn smoothed_leading_term(spec: &FlatTorusSpec, lambda: f64) -> f64 {
    spec.volume() * 2.0 * PI * lambda / (4.0 * PI * PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylFit {
    pub lambda: f64,
    pub count: u64,
    pub measured: f64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSignal {
    pub t: Vec<f64>,
    pub values: Vec<Complex<f64>>,
    pub epsilon: f64,
}

impl TraceSignal {
    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re.hypot(z.im)).collect()
    }
}

/// Uniform grid `start, start + h, …` with `count` points.
pub fn uniform_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let h = (stop - start) / (count - 1) as f64;
    (0..count).map(|i| start + h * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub t: f64,
    pub amplitude: f64,
}

/// Strict local maxima of `|S|` on the grid for `t > t_min`, each refined by
/// the parabola through its neighbours.
pub fn local_maxima(tr: &TraceSignal, t_min: f64) -> Vec<Peak> {
    let a = tr.abs();
    let mut out = Vec::new();
    for i in 1..a.len().saturating_sub(1) {
        if tr.t[i] <= t_min || !(a[i] > a[i - 1] && a[i] >= a[i + 1]) {
            continue;
        }
        let h = tr.t[i + 1] - tr.t[i];
        let denom = a[i - 1] - 2.0 * a[i] + a[i + 1];
        let (shift, amplitude) = if denom < 0.0 {
            let d = 0.5 * (a[i - 1] - a[i + 1]) / denom;
            (d, a[i] - 0.25 * (a[i - 1] - a[i + 1]) * d)
        } else {
            (0.0, a[i])
        };
        out.push(Peak { t: tr.t[i] + shift * h, amplitude });
    }
    out
}

/// The `k` largest local maxima beyond `t_min`, sorted by position.
pub fn detect_peaks(tr: &TraceSignal, k: usize, t_min: f64) -> Result<Vec<Peak>> {
    let spacing = tr.t.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    if spacing > MAX_PEAK_SPACING * (1.0 + 1e-9) {
        return Err(Error::OutOfRange { what: "grid spacing", value: spacing, limit: MAX_PEAK_SPACING });
    }
    let mut peaks = local_maxima(tr, t_min);
    if peaks.len() < k {
        return Err(Error::TooFewPeaks { found: peaks.len(), wanted: k });
    }
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    peaks.truncate(k);
    peaks.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(peaks)
}

/// Pairs every peak with the nearest lattice length: `(length, |t − length|)`.
pub fn match_lengths(peaks: &[Peak], lengths: &[f64]) -> Vec<(f64, f64)> {
    peaks
        .iter()
        .map(|p| {
            lengths
                .iter()
                .map(|&l| (l, (p.t - l).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((f64::NAN, f64::INFINITY))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_small_counts() {
        let s = enumerate_spectrum(&FlatTorusSpec::square(), 10.0).unwrap();
        assert_eq!(s.eigenvalues[0], (0.0, 1));
        assert_eq!(s.counting_function(0.0).unwrap(), 1);
        assert_eq!(s.counting_function(1.0 - 1e-6).unwrap(), 1);
        assert_eq!(s.counting_function(1.0).unwrap(), 5);
        assert_eq!(s.counting_function(10.0).unwrap(), 317);
        assert!(s.counting_function(10.5).is_err());
    }

    #[test]
    fn rectangular_dual_has_half_steps() {
        let s = enumerate_spectrum(&FlatTorusSpec::rectangular(), 1.0).unwrap();
        let got: Vec<(f64, u64)> = s.eigenvalues.clone();
        assert_eq!(got.len(), 3);
        assert!((got[1].0 - 0.5).abs() < 1e-12 && got[1].1 == 2);
        assert!((got[2].0 - 1.0).abs() < 1e-12 && got[2].1 == 4);
    }

    #[test]
    fn singular_lattice_is_rejected() {
        assert!(FlatTorusSpec::from_columns([1.0, 2.0], [2.0, 4.0]).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_spectrum_capped(&FlatTorusSpec::square(), 100.0, 1000);
        assert!(matches!(err, Err(Error::TooMany { .. })));
    }

    #[test]
    fn lattice_lengths_of_square_torus() {
        let l = FlatTorusSpec::square().lattice_lengths(13.0);
        let want = [2.0 * PI, 2.0 * PI * 2f64.sqrt(), 4.0 * PI];
        assert_eq!(l.len(), 3);
        for (a, b) in l.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parabolic_refinement_is_exact_for_parabolas() {
        let t = uniform_grid(0.0, 2.0, 401);
        let values = t.iter().map(|&x| Complex::new(5.0 - (x - 1.2345).powi(2), 0.0)).collect();
        let tr = TraceSignal { t, values, epsilon: 0.1 };
        let p = detect_peaks(&tr, 1, 0.1).unwrap();
        assert!((p[0].t - 1.2345).abs() < 1e-12);
        assert!((p[0].amplitude - 5.0).abs() < 1e-12);
    }
}
