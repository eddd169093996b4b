//! Duistermaat–Heckman localization for circle actions with isolated fixed
//! points.
//!
//! With Liouville measure `ωⁿ/n!`, the transform of the pushforward of the
//! measure along the Hamiltonian is the fixed-point sum
//! `(2π)ⁿ Σ_p e^{−t f(p)} / (tⁿ ∏_j w_{p,j})`, and the density itself is
//! `ρ(x) = (2π)ⁿ Σ_p (x − f(p))₊^{n−1} / ((n−1)! ∏_j w_{p,j})`.
//! Weights are oriented so that all of them are positive at the minimum.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

/// Absolute tolerance of the compact-support identities.
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub value: f64,
    pub weights: Vec<i64>,
}

impl FixedPoint {
    pub fn new(value: f64, weights: Vec<i64>) -> Self {
        Self { value, weights }
    }

    fn weight_product(&self) -> f64 {
        self.weights.iter().map(|&w| w as f64).product()
    }
}

/// A compact Hamiltonian `S¹`-manifold of dimension `2n` described by its
/// fixed points.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianS1Model {
    halfdim: usize,
    points: Vec<FixedPoint>,
    label: String,
}

/// `Σ_p f(p)^k / ∏ w_p` for `k = 0..n`.
pub fn support_residuals(halfdim: usize, points: &[FixedPoint]) -> Vec<f64> {
    (0..halfdim)
        .map(|k| points.iter().map(|p| p.value.powi(k as i32) / p.weight_product()).sum())
        .collect()
}

impl HamiltonianS1Model {
    pub fn new(halfdim: usize, label: &str, points: Vec<FixedPoint>) -> Result<Self> {
        if halfdim == 0 {
            return Err(Error::Invalid("half-dimension must be positive".to_string()));
        }
        if points.is_empty() {
            return Err(Error::Invalid("model needs at least one fixed point".to_string()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.weights.len() != halfdim {
                return Err(Error::Invalid(format!(
                    "point {i} has {} weights, expected {halfdim}",
                    p.weights.len()
                )));
            }
            if p.weights.contains(&0) {
                return Err(Error::Invalid(format!("point {i} has a zero weight")));
            }
            if !p.value.is_finite() {
                return Err(Error::Invalid(format!("point {i} has a non-finite value")));
            }
        }
        let residuals = support_residuals(halfdim, &points);
        if residuals.iter().any(|r| r.abs() > SUPPORT_TOL) {
            return Err(Error::SupportIdentities(residuals));
        }
        Ok(Self { halfdim, points, label: label.to_string() })
    }

    /// The round unit sphere rotating about the vertical axis; the height is
    /// the Hamiltonian.
    pub fn sphere() -> Self {
        Self::new(1, "s2", alloc::vec![FixedPoint::new(-1.0, alloc::vec![1]), FixedPoint::new(1.0, alloc::vec![-1])])
            .expect("sphere model is valid")
    }

    /// `CP²` as the toric manifold over the unit triangle, circle direction `(1, 2)`.
    pub fn cp2() -> Self {
        Self::new(
            2,
            "cp2",
            alloc::vec![
                FixedPoint::new(0.0, alloc::vec![1, 2]),
                FixedPoint::new(1.0, alloc::vec![-1, 1]),
                FixedPoint::new(2.0, alloc::vec![-2, -1]),
            ],
        )
        .expect("cp2 model is valid")
    }

    /// Product action: values add, weights concatenate.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let mut points = Vec::with_capacity(self.points.len() * other.points.len());
        for p in &self.points {
            for q in &other.points {
                let mut weights = p.weights.clone();
                weights.extend_from_slice(&q.weights);
                points.push(FixedPoint::new(p.value + q.value, weights));
            }
        }
        Self::new(self.halfdim + other.halfdim, &format!("{}x{}", self.label, other.label), points)
    }

    pub fn halfdim(&self) -> usize {
        self.halfdim
    }

    pub fn points(&self) -> &[FixedPoint] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `[min f(p), max f(p)]`, the image of the moment map.
    pub fn image(&self) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.value), hi.max(p.value)))
    }

    /// Adds `c` to every critical value.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let points = self.points.iter().map(|p| FixedPoint::new(p.value + c, p.weights.clone())).collect();
        Self::new(self.halfdim, &self.label, points)
    }

    /// The model for `−f` (negated values and weights).
    pub fn negated(&self) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| FixedPoint::new(-p.value, p.weights.iter().map(|w| -w).collect()))
            .collect();
        Self::new(self.halfdim, &self.label, points)
    }

    /// `(2π)ⁿ Σ_p e^{−t f(p)} / (tⁿ ∏ w_p)`.
    pub fn localization_value(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Err(Error::ZeroParameter);
        }
        let scale = (2.0 * PI).powi(self.halfdim as i32) / t.powi(self.halfdim as i32);
        Ok(scale * self.points.iter().map(|p| (-t * p.value).exp() / p.weight_product()).sum::<f64>())
    }

    /// The `t → 0` limit, `(2π)ⁿ Σ_p (−f(p))ⁿ / (n! ∏ w_p)`.
    pub fn total_volume(&self) -> f64 {
        let n = self.halfdim as i32;
        let fact: f64 = (1..=self.halfdim).map(|k| k as f64).product();
        (2.0 * PI).powi(n) / fact * self.points.iter().map(|p| (-p.value).powi(n) / p.weight_product()).sum::<f64>()
    }

    pub fn density(&self) -> PiecewisePoly {
        dh_density(self)
    }
}

/// A density that vanishes outside `[breaks[0], breaks[last]]` and on each
/// interval `[b_i, b_{i+1}]` equals `Σ_k coeffs[i][k] (x − b_i)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫₀^L e^{−tu} u^k du` for `k = 0..=kmax`.
fn truncated_moments(t: f64, len: f64, kmax: usize) -> Vec<f64> {
    let x = t * len;
    if x.abs() < 1.0 {
        // L^{k+1} Σ_j (−x)^j / (j! (k + j + 1))
        (0..=kmax)
            .map(|k| {
                let mut term = 1.0;
                let mut sum = 0.0;
                for j in 0..60 {
                    if j > 0 {
                        term *= -x / j as f64;
                    }
                    sum += term / (k + j + 1) as f64;
                }
                len.powi(k as i32 + 1) * sum
            })
            .collect()
    } else {
        let e = (-x).exp();
        let mut out = Vec::with_capacity(kmax + 1);
        out.push(-(-x).exp_m1() / t);
        for k in 1..=kmax {
            let prev = out[k - 1];
            out.push(-len.powi(k as i32) * e / t + k as f64 / t * prev);
        }
        out
    }
}

impl PiecewisePoly {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) || self.coeffs.is_empty() {
            return 0.0;
        }
        let i = match self.breaks.partition_point(|&b| b <= x) {
            0 => 0,
            k => (k - 1).min(self.coeffs.len() - 1),
        };
        let u = x - self.breaks[i];
        self.coeffs[i].iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    /// `∫ e^{−tx} ρ(x) dx` in closed form, interval by interval.
    pub fn laplace(&self, t: f64) -> f64 {
        let mut total = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (a, b) = (self.breaks[i], self.breaks[i + 1]);
            let moments = if t == 0.0 {
                (0..c.len()).map(|k| (b - a).powi(k as i32 + 1) / (k + 1) as f64).collect()
            } else {
                truncated_moments(t, b - a, c.len().saturating_sub(1))
            };
            let inner: f64 = c.iter().zip(&moments).map(|(ck, mk)| ck * mk).sum();
            total += (-t * a).exp() * inner;
        }
        total
    }

    /// `∫ ρ`.
    pub fn integral(&self) -> f64 {
        self.laplace(0.0)
    }
}

/// The pushforward density of Liouville measure, as a piecewise polynomial
/// of degree `n − 1` with breaks at the critical values.
pub fn dh_density(model: &HamiltonianS1Model) -> PiecewisePoly {
    let n = model.halfdim;
    let mut breaks: Vec<f64> = model.points.iter().map(|p| p.value).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let fact: f64 = (1..n).map(|k| k as f64).product();
    let scale = (2.0 * PI).powi(n as i32) / fact;
    let mut coeffs = Vec::with_capacity(breaks.len().saturating_sub(1));
    for w in breaks.windows(2) {
        let b = w[0];
        let mut c = alloc::vec![0.0; n];
        for p in model.points.iter().filter(|p| p.value <= b) {
            // (x − f)^{n−1} = Σ_k C(n−1, k) (x − b)^k (b − f)^{n−1−k}
            let amp = scale / p.weight_product();
            for (k, ck) in c.iter_mut().enumerate() {
                *ck += amp * binomial(n - 1, k) * (b - p.value).powi((n - 1 - k) as i32);
            }
        }
        coeffs.push(c);
    }
    PiecewisePoly { breaks, coeffs }
}

/// A Delzant polytope of dimension 1 or 2 (a segment or a convex polygon
/// with vertices listed in cyclic order).
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<[f64; 2]>,
}

fn primitive(v: [f64; 2]) -> Result<[i64; 2]> {
    let r = [v[0].round(), v[1].round()];
    if (r[0] - v[0]).abs() > 1e-9 || (r[1] - v[1]).abs() > 1e-9 {
        return Err(Error::Invalid(format!("edge ({}, {}) is not integral", v[0], v[1])));
    }
    let (a, b) = (r[0] as i64, r[1] as i64);
    let g = gcd(a.abs(), b.abs());
    if g == 0 {
        return Err(Error::Invalid("repeated vertex".to_string()));
    }
    Ok([a / g, b / g])
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Polytope {
    pub fn segment(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Invalid("segment needs a < b".to_string()));
        }
        Ok(Self { dim: 1, vertices: alloc::vec![[a, 0.0], [b, 0.0]] })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Invalid("polygon needs at least three vertices".to_string()));
        }
        let p = Self { dim: 2, vertices };
        // smoothness: edge generators at every vertex form a Z-basis
        for i in 0..p.vertices.len() {
            let [e1, e2] = p.edges_at(i)?;
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            if det.abs() != 1 {
                return Err(Error::Invalid(format!("vertex {i} is not smooth (edge determinant {det})")));
            }
        }
        Ok(p)
    }

    pub fn unit_triangle() -> Self {
        Self::polygon(alloc::vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("valid")
    }

    pub fn unit_square() -> Self {
        Self::polygon(alloc::vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    fn edges_at(&self, i: usize) -> Result<[[i64; 2]; 2]> {
        let n = self.vertices.len();
        let v = self.vertices[i];
        let prev = self.vertices[(i + n - 1) % n];
        let next = self.vertices[(i + 1) % n];
        Ok([
            primitive([prev[0] - v[0], prev[1] - v[1]])?,
            primitive([next[0] - v[0], next[1] - v[1]])?,
        ])
    }

    fn pairing(&self, xi: &[i64]) -> Vec<f64> {
        self.vertices
            .iter()
            .map(|v| (0..self.dim).map(|k| v[k] * xi[k] as f64).sum())
            .collect()
    }

    fn check_xi(&self, xi: &[i64]) -> Result<Vec<f64>> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: xi.len() });
        }
        let values = self.pairing(xi);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::NonGeneric(w[0]));
        }
        Ok(values)
    }

    /// The fixed-point data of the circle `ξ` inside the torus action:
    /// vertex values `⟨v, ξ⟩`, weights `⟨e, ξ⟩` over the edge generators.
    pub fn circle_model(&self, xi: &[i64]) -> Result<HamiltonianS1Model> {
        let values = self.check_xi(xi)?;
        let points = match self.dim {
            1 => alloc::vec![
                FixedPoint::new(values[0], alloc::vec![xi[0]]),
                FixedPoint::new(values[1], alloc::vec![-xi[0]]),
            ],
            _ => (0..self.vertices.len())
                .map(|i| {
                    let edges = self.edges_at(i)?;
                    let weights = edges.iter().map(|e| e[0] * xi[0] + e[1] * xi[1]).collect();
                    Ok(FixedPoint::new(values[i], weights))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        HamiltonianS1Model::new(self.dim, "toric", points)
    }
}

/// Pushforward density of `(2π)ⁿ` times Lebesgue measure on a polytope
/// under `u ↦ ⟨u, ξ⟩`, from exact slice geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ToricSlice {
    polytope: Polytope,
    xi: Vec<i64>,
    values: Vec<f64>,
}

impl ToricSlice {
    pub fn new(polytope: Polytope, xi: Vec<i64>) -> Result<Self> {
        let values = polytope.check_xi(&xi)?;
        Ok(Self { polytope, xi, values })
    }

    fn xi_norm(&self) -> f64 {
        self.xi.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
    }

    /// Density at `x`: `(2π)ⁿ · |slice| / |ξ|`, the slice measured by its
    /// Euclidean `(n − 1)`-volume.
    pub fn density(&self, x: f64) -> f64 {
        let lo = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(x >= lo && x <= hi) {
            return 0.0;
        }
        let scale = (2.0 * PI).powi(self.polytope.dim as i32) / self.xi_norm();
        if self.polytope.dim == 1 {
            return scale;
        }
        let vs = &self.polytope.vertices;
        let n = vs.len();
        let mut hits: Vec<[f64; 2]> = Vec::with_capacity(4);
        for i in 0..n {
            let (a, b) = (vs[i], vs[(i + 1) % n]);
            let (sa, sb) = (self.values[i], self.values[(i + 1) % n]);
            if (sa - x) * (sb - x) <= 0.0 && sa != sb {
                let u = (x - sa) / (sb - sa);
                hits.push([a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]);
            }
        }
        let mut len = 0.0f64;
        for p in &hits {
            for q in &hits {
                len = len.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        scale * len
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.density(x)).collect()
    }

    /// `∫ e^{−tx} ρ(x) dx` by Gauss–Legendre between consecutive vertex
    /// values, where the density is linear.
    pub fn laplace(&self, t: f64) -> f64 {
        let rule = GaussLegendre::new(8);
        let mut knots = self.values.clone();
        knots.sort_by(f64::total_cmp);
        rule.integrate_panels(&knots, |x| (-t * x).exp() * self.density(x))
    }
}

/// Identifier of the sampling scheme behind [`SphereHistogram`].
pub const MC_ALGORITHM: &str = "chacha8-stream-per-chunk/ziggurat-normal3/v1";
/// Samples per independent random substream.
pub const MC_CHUNK: u64 = 1 << 16;

/// Histogram estimate of the pushforward of area on the unit sphere under
/// the height function.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereHistogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: u64,
    pub seed: u64,
    pub symmetrized: bool,
    pub algorithm: &'static str,
}

impl SphereHistogram {
    /// `∫ e^{−tx} ρ(x) dx` for the piecewise-constant density.
    pub fn laplace(&self, t: f64) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.density)
            .map(|(e, d)| {
                let part = if t == 0.0 { e[1] - e[0] } else { ((-t * e[0]).exp() - (-t * e[1]).exp()) / t };
                d * part
            })
            .sum()
    }
}

fn bin_of(z: f64, bins: usize) -> usize {
    (((z + 1.0) * 0.5 * bins as f64) as usize).min(bins - 1)
}

/// Counts for one chunk of samples drawn from substream `chunk`.
///
/// Points are area-uniform on the sphere (normalized Gaussian triples). With
/// `symmetrize`, each point contributes the heights of all six images under
/// the axis permutations and reflections, i.e. `±x, ±y, ±z`.
pub fn mc_chunk_counts(seed: u64, chunk: u64, samples: u64, bins: usize, symmetrize: bool) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut counts = alloc::vec![0u64; bins];
    for _ in 0..samples {
        let v: [f64; 3] = core::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r == 0.0 {
            continue;
        }
        if symmetrize {
            for c in v {
                counts[bin_of(c / r, bins)] += 1;
                counts[bin_of(-c / r, bins)] += 1;
            }
        } else {
            counts[bin_of(v[2] / r, bins)] += 1;
        }
    }
    counts
}

/// Chunk sizes covering `samples` in order.
pub fn mc_chunks(samples: u64) -> impl Iterator<Item = (u64, u64)> {
    let full = samples / MC_CHUNK;
    let rest = samples % MC_CHUNK;
    (0..full).map(|c| (c, MC_CHUNK)).chain((rest > 0).then_some((full, rest)))
}

/// Assembles per-chunk counts (in any order) into a density scaled to the
/// total area `4π`.
pub fn mc_histogram_from_counts(counts: Vec<u64>, samples: u64, seed: u64, symmetrize: bool) -> SphereHistogram {
    let bins = counts.len();
    let width = 2.0 / bins as f64;
    let edges = (0..=bins).map(|i| -1.0 + width * i as f64).collect();
    let per_sample = if symmetrize { 6.0 } else { 1.0 };
    let total = samples as f64 * per_sample;
    let density = counts.iter().map(|&c| 4.0 * PI * c as f64 / total / width).collect();
    SphereHistogram { edges, density, counts, samples, seed, symmetrized: symmetrize, algorithm: MC_ALGORITHM }
}

pub fn mc_pushforward_oracle(samples: u64, seed: u64, bins: usize, symmetrize: bool) -> Result<SphereHistogram> {
    if samples == 0 || bins == 0 {
        return Err(Error::Invalid("samples and bins must be positive".to_string()));
    }
    let mut counts = alloc::vec![0u64; bins];
    for (chunk, n) in mc_chunks(samples) {
        for (acc, c) in counts.iter_mut().zip(mc_chunk_counts(seed, chunk, n, bins, symmetrize)) {
            *acc += c;
        }
    }
    Ok(mc_histogram_from_counts(counts, samples, seed, symmetrize))
}

/// An independent estimate of the density to compare transforms against.
#[derive(Debug, Clone, Copy)]
pub enum DensityOracle<'a> {
    Histogram(&'a SphereHistogram),
    Toric(&'a ToricSlice),
}

impl DensityOracle<'_> {
    pub fn laplace(&self, t: f64) -> f64 {
        match self {
            DensityOracle::Histogram(h) => h.laplace(t),
            DensityOracle::Toric(s) => s.laplace(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub t: f64,
    pub localization: f64,
    pub transform: f64,
    pub internal_error: f64,
    pub oracle_transform: Option<f64>,
    pub oracle_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub rows: Vec<IdentityRow>,
    pub max_internal_error: f64,
    pub max_oracle_error: Option<f64>,
}

/// Compares the fixed-point sum with the exact transform of the density
/// (and with an oracle's transform when given), as relative errors.
pub fn verify_identity(model: &HamiltonianS1Model, ts: &[f64], oracle: Option<DensityOracle<'_>>) -> Result<IdentityReport> {
    let density = dh_density(model);
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let localization = model.localization_value(t)?;
        let transform = density.laplace(t);
        let internal_error = ((localization - transform) / localization).abs();
        let oracle_transform = oracle.map(|o| o.laplace(t));
        let oracle_error = oracle_transform.map(|o| ((localization - o) / localization).abs());
        rows.push(IdentityRow { t, localization, transform, internal_error, oracle_transform, oracle_error });
    }
    let max_internal_error = rows.iter().map(|r| r.internal_error).fold(0.0, f64::max);
    let max_oracle_error = oracle.map(|_| rows.iter().filter_map(|r| r.oracle_error).fold(0.0, f64::max));
    Ok(IdentityReport { rows, max_internal_error, max_oracle_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_localization_matches_closed_form() {
        let s = HamiltonianS1Model::sphere();
        let e = core::f64::consts::E;
        assert!((s.localization_value(1.0).unwrap() - 2.0 * PI * (e - 1.0 / e)).abs() < 1e-12);
        assert!(matches!(s.localization_value(0.0), Err(Error::ZeroParameter)));
        assert!((s.total_volume() - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn sphere_density_is_constant() {
        let d = HamiltonianS1Model::sphere().density();
        for x in [-1.0, -0.5, 0.0, 0.99, 1.0] {
            assert!((d.eval(x) - 2.0 * PI).abs() < 1e-14, "{x}");
        }
        assert_eq!(d.eval(-1.01), 0.0);
        assert_eq!(d.eval(1.01), 0.0);
    }

    #[test]
    fn single_point_is_rejected() {
        let err = HamiltonianS1Model::new(1, "bad", alloc::vec![FixedPoint::new(0.0, alloc::vec![1])]);
        assert!(matches!(err, Err(Error::SupportIdentities(_))));
    }

    #[test]
    fn flipped_weight_is_rejected() {
        let err = HamiltonianS1Model::new(
            2,
            "bad",
            alloc::vec![
                FixedPoint::new(0.0, alloc::vec![1, 2]),
                FixedPoint::new(1.0, alloc::vec![1, 1]),
                FixedPoint::new(2.0, alloc::vec![-2, -1]),
            ],
        );
        match err {
            Err(Error::SupportIdentities(r)) => assert!(r[0].abs() > 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_weight_and_wrong_arity_are_rejected() {
        assert!(HamiltonianS1Model::new(1, "z", alloc::vec![FixedPoint::new(0.0, alloc::vec![0])]).is_err());
        assert!(HamiltonianS1Model::new(2, "a", alloc::vec![FixedPoint::new(0.0, alloc::vec![1])]).is_err());
    }

    #[test]
    fn truncated_moments_agree_across_branches() {
        // the series and the recurrence meet at tL = 1
        let lo = truncated_moments(1.0 - 1e-12, 1.0, 3);
        let hi = truncated_moments(1.0 + 1e-12, 1.0, 3);
        for (a, b) in lo.iter().zip(&hi) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn cp2_from_triangle() {
        let sorted = |m: &HamiltonianS1Model| -> Vec<(f64, Vec<i64>)> {
            m.points()
                .iter()
                .map(|p| {
                    let mut w = p.weights.clone();
                    w.sort();
                    (p.value, w)
                })
                .collect()
        };
        let m = Polytope::unit_triangle().circle_model(&[1, 2]).unwrap();
        assert_eq!(sorted(&m), sorted(&HamiltonianS1Model::cp2()));
    }

    #[test]
    fn nongeneric_direction_is_rejected() {
        assert!(matches!(ToricSlice::new(Polytope::unit_square(), alloc::vec![1, 0]), Err(Error::NonGeneric(_))));
        assert!(Polytope::polygon(alloc::vec![[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn histogram_is_nonnegative_and_deterministic() {
        let a = mc_pushforward_oracle(10_000, 3, 10, false).unwrap();
        let b = mc_pushforward_oracle(10_000, 3, 10, false).unwrap();
        assert_eq!(a, b);
        assert!(a.density.iter().all(|&d| d >= 0.0));
        assert_eq!(a.counts.iter().sum::<u64>(), 10_000);
    }
}
