//! Paths `[0, 1] → g` on a uniform grid and the path-group structure they
//! carry: the transport `A_γ` solving `A' = ad(γ) A`, the product
//! `(γ·δ)(t) = γ(t) + A_γ(t) δ(t)`, inverses, the homotopy functional that
//! tests membership in the identity class, and matrix development.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lie::{LieAlgebra, LieAlgebraHom, MatrixRealization};

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-6;

/// How the path is evaluated at the RK4 half steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Midpoint {
    /// Average of the two neighbouring samples (piecewise-linear path).
    Linear,
    /// Four-point cubic interpolation, one-sided at the two end cells.
    #[default]
    Cubic,
}

/// Samples `γ(k / N)` for `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    algebra: Arc<LieAlgebra>,
    steps: usize,
    samples: Vec<f64>,
}

impl GridPath {
    /// `samples` is row-major with `steps + 1` rows of length `dim`.
    pub fn new(algebra: Arc<LieAlgebra>, steps: usize, samples: Vec<f64>) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Invalid(format!("grid needs N >= 2, got {steps}")));
        }
        let n = algebra.dim();
        if samples.len() != (steps + 1) * n {
            return Err(Error::DimensionMismatch { expected: (steps + 1) * n, got: samples.len() });
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite sample at node {}", pos / n)));
        }
        Ok(Self { algebra, steps, samples })
    }

    pub fn zero(algebra: Arc<LieAlgebra>, steps: usize) -> Result<Self> {
        let n = algebra.dim();
        Self::new(algebra, steps, alloc::vec![0.0; (steps + 1) * n])
    }

    /// Samples `f(t_k)` into `out` (length `dim`) at each node.
    pub fn from_fn<F: FnMut(f64, &mut [f64])>(algebra: Arc<LieAlgebra>, steps: usize, mut f: F) -> Result<Self> {
        let n = algebra.dim();
        let mut samples = alloc::vec![0.0; (steps + 1) * n];
        for (k, row) in samples.chunks_exact_mut(n).enumerate() {
            f(k as f64 / steps as f64, row);
        }
        Self::new(algebra, steps, samples)
    }

    pub fn constant(algebra: Arc<LieAlgebra>, steps: usize, x: &[f64]) -> Result<Self> {
        if x.len() != algebra.dim() {
            return Err(Error::DimensionMismatch { expected: algebra.dim(), got: x.len() });
        }
        Self::from_fn(algebra, steps, |_, out| out.copy_from_slice(x))
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn at(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.samples[k * n..(k + 1) * n]
    }

    /// Supremum over nodes of the Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        self.samples
            .chunks_exact(self.dim())
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &GridPath) -> Result<f64> {
        self.compatible(other)?;
        let n = self.dim();
        Ok(self
            .samples
            .chunks_exact(n)
            .zip(other.samples.chunks_exact(n))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max))
    }

    fn compatible(&self, other: &GridPath) -> Result<()> {
        if self.algebra.constants() != other.algebra.constants() || self.algebra.dim() != other.algebra.dim() {
            return Err(Error::Invalid(format!(
                "paths live in different algebras ({} vs {})",
                self.algebra.label(),
                other.algebra.label()
            )));
        }
        if self.steps != other.steps {
            return Err(Error::Invalid(format!("grid sizes differ ({} vs {})", self.steps, other.steps)));
        }
        Ok(())
    }

    /// Value at the half step between nodes `k` and `k + 1`.
    pub fn midpoint(&self, k: usize, rule: Midpoint, out: &mut [f64]) {
        let n = self.dim();
        let g = |j: usize, i: usize| self.samples[j * n + i];
        match rule {
            Midpoint::Linear => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = 0.5 * (g(k, i) + g(k + 1, i));
                }
            }
            Midpoint::Cubic => {
                let last = self.steps - 1;
                for (i, o) in out.iter_mut().enumerate() {
                    *o = if self.steps < 3 {
                        0.5 * (g(k, i) + g(k + 1, i))
                    } else if k == 0 {
                        (5.0 * g(0, i) + 15.0 * g(1, i) - 5.0 * g(2, i) + g(3, i)) / 16.0
                    } else if k == last {
                        (g(k - 2, i) - 5.0 * g(k - 1, i) + 15.0 * g(k, i) + 5.0 * g(k + 1, i)) / 16.0
                    } else {
                        (-g(k - 1, i) + 9.0 * g(k, i) + 9.0 * g(k + 1, i) - g(k + 2, i)) / 16.0
                    };
                }
            }
        }
    }
}

/// `A_γ(t_k)` at every node.
#[derive(Debug, Clone)]
pub struct Transport {
    path: GridPath,
    matrices: Vec<DMatrix<f64>>,
}

impl Transport {
    pub fn path(&self) -> &GridPath {
        &self.path
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn at(&self, k: usize) -> &DMatrix<f64> {
        &self.matrices[k]
    }

    pub fn last(&self) -> &DMatrix<f64> {
        self.matrices.last().expect("transport has N + 1 nodes")
    }

    /// Max over nodes of `|det A(t_k) − exp ∫ tr ad γ|`, the integral taken
    /// by the trapezoid rule on the grid.
    pub fn liouville_defect(&self) -> f64 {
        let h = 1.0 / self.path.steps as f64;
        let alg = &self.path.algebra;
        let trace = |k: usize| alg.ad_unchecked(self.path.at(k)).trace();
        let mut integral = 0.0;
        let mut prev = trace(0);
        let mut worst = (self.matrices[0].determinant() - 1.0).abs();
        for k in 1..=self.path.steps {
            let cur = trace(k);
            integral += 0.5 * h * (prev + cur);
            prev = cur;
            worst = worst.max((self.matrices[k].determinant() - integral.exp()).abs());
        }
        worst
    }
}

/// Classical RK4 for `Y' = M(t) Y`, `Y(0) = I`, with `M` linear in the
/// path value. `gen` maps a path value to its generator matrix.
fn rk4_linear<G>(path: &GridPath, size: usize, rule: Midpoint, gen: G) -> Result<Vec<DMatrix<f64>>>
where
    G: Fn(&[f64]) -> DMatrix<f64>,
{
    let h = 1.0 / path.steps as f64;
    let mut mid = alloc::vec![0.0; path.dim()];
    let mut y = DMatrix::<f64>::identity(size, size);
    let mut out = Vec::with_capacity(path.steps + 1);
    out.push(y.clone());
    let mut m0 = gen(path.at(0));
    for k in 0..path.steps {
        path.midpoint(k, rule, &mut mid);
        let mh = gen(&mid);
        let m1 = gen(path.at(k + 1));
        let k1 = &m0 * &y;
        let k2 = &mh * (&y + &k1 * (0.5 * h));
        let k3 = &mh * (&y + &k2 * (0.5 * h));
        let k4 = &m1 * (&y + &k3 * h);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup { step: k + 1 });
        }
        out.push(y.clone());
        m0 = m1;
    }
    Ok(out)
}

pub fn transport(path: &GridPath) -> Result<Transport> {
    transport_with(path, Midpoint::default())
}

pub fn transport_with(path: &GridPath, rule: Midpoint) -> Result<Transport> {
    let alg = path.algebra.clone();
    let matrices = rk4_linear(path, alg.dim(), rule, |x| alg.ad_unchecked(x))?;
    Ok(Transport { path: path.clone(), matrices })
}

/// `(γ·δ)(t_k) = γ(t_k) + A_γ(t_k) δ(t_k)` with a precomputed transport of `γ`.
pub fn mul_transported(gamma: &Transport, delta: &GridPath) -> Result<GridPath> {
    let g = &gamma.path;
    g.compatible(delta)?;
    let n = g.dim();
    let mut samples = Vec::with_capacity(g.samples.len());
    for k in 0..=g.steps {
        let d = DVector::from_column_slice(delta.at(k));
        let ad = &gamma.matrices[k] * d;
        samples.extend(g.at(k).iter().zip(ad.iter()).map(|(a, b)| a + b));
    }
    debug_assert_eq!(samples.len(), (g.steps + 1) * n);
    GridPath::new(g.algebra.clone(), g.steps, samples)
}

pub fn path_mul(gamma: &GridPath, delta: &GridPath) -> Result<GridPath> {
    gamma.compatible(delta)?;
    mul_transported(&transport(gamma)?, delta)
}

/// `δ(t_k) = −A_γ(t_k)⁻¹ γ(t_k)`, the right inverse on the grid.
pub fn path_inv(gamma: &GridPath) -> Result<GridPath> {
    let tr = transport(gamma)?;
    let mut samples = Vec::with_capacity(gamma.samples.len());
    for k in 0..=gamma.steps {
        let inv = tr.matrices[k].clone().try_inverse().ok_or(Error::Singular { node: k })?;
        let v = inv * DVector::from_column_slice(gamma.at(k));
        samples.extend(v.iter().map(|x| -x));
    }
    GridPath::new(gamma.algebra.clone(), gamma.steps, samples)
}

/// Applies a homomorphism samplewise.
pub fn push_path(hom: &LieAlgebraHom, gamma: &GridPath) -> Result<GridPath> {
    if hom.source().constants() != gamma.algebra.constants() || hom.source().dim() != gamma.dim() {
        return Err(Error::Invalid("path does not live in the source algebra".to_string()));
    }
    let mut samples = Vec::with_capacity((gamma.steps + 1) * hom.target().dim());
    for k in 0..=gamma.steps {
        let v = hom.matrix() * DVector::from_column_slice(gamma.at(k));
        samples.extend(v.iter().copied());
    }
    GridPath::new(hom.target().clone(), gamma.steps, samples)
}

/// `E(t_k)` solving `E' = ρ(γ) E`, `E(0) = I`, at every node.
pub fn develop_trajectory(gamma: &GridPath, rep: &MatrixRealization) -> Result<Vec<DMatrix<f64>>> {
    if rep.algebra().constants() != gamma.algebra.constants() {
        return Err(Error::Invalid("realization belongs to a different algebra".to_string()));
    }
    rk4_linear(gamma, rep.size(), Midpoint::default(), |x| rep.rho(x))
}

/// `E(1)`, the group element the path develops to.
pub fn develop(gamma: &GridPath, rep: &MatrixRealization) -> Result<DMatrix<f64>> {
    Ok(develop_trajectory(gamma, rep)?.pop().expect("at least one node"))
}

/// `Ad(E)` as an `n × n` matrix: column `i` is `ρ⁻¹(E ρ(e_i) E⁻¹)`.
pub fn adjoint_of(e: &DMatrix<f64>, rep: &MatrixRealization) -> Result<DMatrix<f64>> {
    let inv = e.clone().try_inverse().ok_or(Error::Singular { node: 0 })?;
    let n = rep.algebra().dim();
    let mut out = DMatrix::zeros(n, n);
    for (i, g) in rep.generators().iter().enumerate() {
        let col = rep.preimage(&(e * g * &inv))?;
        out.set_column(i, &col);
    }
    Ok(out)
}

/// `S + 1` paths `γ_{s_j}`, `s_j = j / S`, sharing algebra and grid.
#[derive(Debug, Clone)]
pub struct PathFamily {
    paths: Vec<GridPath>,
}

impl PathFamily {
    pub fn new(paths: Vec<GridPath>) -> Result<Self> {
        if paths.len() < 3 {
            return Err(Error::Invalid(format!("family needs S >= 2, got S = {}", paths.len() as isize - 1)));
        }
        for p in &paths[1..] {
            paths[0].compatible(p)?;
        }
        Ok(Self { paths })
    }

    /// Samples `s ↦ γ_s` at `S + 1` uniform parameters.
    pub fn from_fn<F: FnMut(f64) -> Result<GridPath>>(s_steps: usize, mut f: F) -> Result<Self> {
        let paths = (0..=s_steps).map(|j| f(j as f64 / s_steps as f64)).collect::<Result<Vec<_>>>()?;
        Self::new(paths)
    }

    pub fn paths(&self) -> &[GridPath] {
        &self.paths
    }

    pub fn s_steps(&self) -> usize {
        self.paths.len() - 1
    }
}

/// Values `v(s_j) = ∫₀¹ A_{γ_{s_j}}(t)⁻¹ ∂_s γ(t) dt` of the homotopy functional.
#[derive(Debug, Clone)]
pub struct HomotopyReport {
    pub values: Vec<DVector<f64>>,
    pub max_norm: f64,
    pub tolerance: f64,
}

impl HomotopyReport {
    /// Whether the family stays inside the identity class within tolerance.
    pub fn compatible(&self) -> bool {
        self.max_norm <= self.tolerance
    }
}

pub fn homotopy_functional(family: &PathFamily, tolerance: f64) -> Result<HomotopyReport> {
    let s = family.s_steps();
    let ds = 1.0 / s as f64;
    let paths = &family.paths;
    let steps = paths[0].steps;
    let n = paths[0].dim();
    let h = 1.0 / steps as f64;
    let mut values = Vec::with_capacity(s + 1);
    for j in 0..=s {
        let tr = transport(&paths[j])?;
        let deriv = |k: usize, i: usize| -> f64 {
            let v = |jj: usize| paths[jj].at(k)[i];
            if j == 0 {
                (4.0 * (v(1) - v(0)) - (v(2) - v(0))) / (2.0 * ds)
            } else if j == s {
                (4.0 * (v(s) - v(s - 1)) - (v(s) - v(s - 2))) / (2.0 * ds)
            } else {
                (v(j + 1) - v(j - 1)) / (2.0 * ds)
            }
        };
        let mut acc = DVector::zeros(n);
        for k in 0..=steps {
            let inv = tr.matrices[k].clone().try_inverse().ok_or(Error::Singular { node: k })?;
            let d = DVector::from_fn(n, |i, _| deriv(k, i));
            let w = if k == 0 || k == steps { 0.5 * h } else { h };
            acc += inv * d * w;
        }
        values.push(acc);
    }
    let max_norm = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(HomotopyReport { values, max_norm, tolerance })
}

/// A smooth random path with sup norm one: a random combination of the
/// first few Fourier modes in each coordinate.
pub fn random_unit_path<R: Rng + ?Sized>(algebra: Arc<LieAlgebra>, steps: usize, rng: &mut R) -> Result<GridPath> {
    const MODES: usize = 3;
    let n = algebra.dim();
    let coeffs: Vec<f64> = (0..n * (2 * MODES + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let raw = GridPath::from_fn(algebra, steps, |t, out| {
        for (i, o) in out.iter_mut().enumerate() {
            let c = &coeffs[i * (2 * MODES + 1)..(i + 1) * (2 * MODES + 1)];
            let mut v = c[0];
            for m in 1..=MODES {
                let w = PI * m as f64 * t;
                v += (c[2 * m - 1] * w.cos() + c[2 * m] * w.sin()) / m as f64;
            }
            *o = v;
        }
    })?;
    let norm = raw.sup_norm();
    if norm == 0.0 {
        return Ok(raw);
    }
    let samples = raw.samples.iter().map(|v| v / norm).collect();
    GridPath::new(raw.algebra, raw.steps, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alg(label: &str) -> (Arc<LieAlgebra>, MatrixRealization) {
        LieAlgebra::standard(label).unwrap()
    }

    #[test]
    fn zero_path_transports_to_identity() {
        let (a, _) = alg("so3");
        let tr = transport(&GridPath::zero(a, 50).unwrap()).unwrap();
        assert!(tr.matrices().iter().all(|m| *m == DMatrix::identity(3, 3)));
    }

    #[test]
    fn abelian_transport_is_identity_and_product_adds() {
        let (a, _) = alg("abelian(2)");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_unit_path(a.clone(), 40, &mut rng).unwrap();
        let d = random_unit_path(a, 40, &mut rng).unwrap();
        assert!(transport(&g).unwrap().matrices().iter().all(|m| *m == DMatrix::identity(2, 2)));
        let p = path_mul(&g, &d).unwrap();
        for k in 0..=40 {
            for i in 0..2 {
                assert_eq!(p.at(k)[i], g.at(k)[i] + d.at(k)[i]);
            }
        }
        let inv = path_inv(&g).unwrap();
        assert!(inv.samples().iter().zip(g.samples()).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn heisenberg_constant_path_is_affine_in_t() {
        let (a, _) = alg("heisenberg3");
        let x = [0.7, -1.3, 0.4];
        let tr = transport(&GridPath::constant(a.clone(), 100, &x).unwrap()).unwrap();
        let ad = a.ad(&DVector::from_row_slice(&x)).unwrap();
        for (k, m) in tr.matrices().iter().enumerate() {
            let t = k as f64 / 100.0;
            let expect = DMatrix::identity(3, 3) + &ad * t;
            assert!((m - expect).amax() < 1e-10);
        }
    }

    #[test]
    fn identity_element_is_zero_path() {
        let (a, _) = alg("sl2");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_unit_path(a.clone(), 64, &mut rng).unwrap();
        let z = GridPath::zero(a, 64).unwrap();
        assert_eq!(path_mul(&g, &z).unwrap(), g);
        assert_eq!(path_mul(&z, &g).unwrap(), g);
        assert_eq!(path_inv(&z).unwrap(), z);
    }

    #[test]
    fn grid_validation() {
        let (a, _) = alg("so3");
        assert!(GridPath::zero(a.clone(), 1).is_err());
        assert!(GridPath::new(a.clone(), 2, alloc::vec![0.0; 8]).is_err());
        let mut s = alloc::vec![0.0; 9];
        s[4] = f64::NAN;
        assert!(GridPath::new(a, 2, s).is_err());
    }

    #[test]
    fn mismatched_paths_are_rejected() {
        let (a, _) = alg("so3");
        let (b, _) = alg("sl2");
        let g = GridPath::zero(a.clone(), 10).unwrap();
        assert!(path_mul(&g, &GridPath::zero(b, 10).unwrap()).is_err());
        assert!(path_mul(&g, &GridPath::zero(a, 12).unwrap()).is_err());
    }

    #[test]
    fn blowup_names_the_step() {
        let (a, _) = alg("sl2");
        let big = [1e300, 0.0, 0.0];
        let err = transport(&GridPath::constant(a, 10, &big).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Blowup { step: 1 }));
    }

    #[test]
    fn so3_develops_pi_rotation() {
        let (a, r) = alg("so3");
        let e = develop(&GridPath::constant(a, 1000, &[0.0, 0.0, PI]).unwrap(), &r).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![-1.0, -1.0, 1.0]));
        assert!((e - expect).amax() < 1e-9);
    }

    #[test]
    fn develop_of_zero_is_identity() {
        let (a, r) = alg("heisenberg3");
        let e = develop(&GridPath::zero(a, 10).unwrap(), &r).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
    }

    #[test]
    fn liouville_for_traceless_and_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for label in ["so3", "sl2", "heisenberg3"] {
            let (a, _) = alg(label);
            let g = random_unit_path(a, 200, &mut rng).unwrap();
            assert!(transport(&g).unwrap().liouville_defect() < 1e-8, "{label}");
        }
        // tr ad is nonzero on affine1; a linear path is integrated exactly
        let (a, _) = alg("affine1");
        let g = GridPath::from_fn(a, 200, |t, out| {
            out[0] = 0.5 - t;
            out[1] = 2.0 * t;
        })
        .unwrap();
        assert!(transport(&g).unwrap().liouville_defect() < 1e-8);
    }

    #[test]
    fn constant_family_has_zero_functional() {
        let (a, _) = alg("so3");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_unit_path(a, 100, &mut rng).unwrap();
        let fam = PathFamily::from_fn(4, |_| Ok(g.clone())).unwrap();
        let rep = homotopy_functional(&fam, DEFAULT_MEMBERSHIP_TOL).unwrap();
        assert_eq!(rep.max_norm, 0.0);
        assert!(rep.compatible());
    }

    #[test]
    fn family_needs_two_intervals() {
        let (a, _) = alg("so3");
        let g = GridPath::zero(a, 10).unwrap();
        assert!(PathFamily::new(alloc::vec![g.clone(), g]).is_err());
    }
}
