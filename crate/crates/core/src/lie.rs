//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! Basis elements are indexed from zero; `c(i, j, k)` is the `e_k`
//! coefficient of `[e_i, e_j]`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance for algebraic identities on O(1) inputs.
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Labels accepted by [`LieAlgebra::standard`].
pub const STANDARD_LABELS: [&str; 5] = ["abelian(n)", "heisenberg3", "affine1", "so3", "sl2"];

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<f64>,
    label: String,
}

/// Outcome of checking a raw structure-constant array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub antisymmetry: f64,
    pub jacobi: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.antisymmetry <= ALGEBRA_TOL && self.jacobi <= ALGEBRA_TOL
    }
}

/// Maximal antisymmetry violation and Jacobi residual of a dense
/// `dim^3` array laid out as `c[(i * dim + j) * dim + k]`.
///
/// Works on arrays that need not be antisymmetric, so corrupted data can be
/// diagnosed before it is turned into a [`LieAlgebra`].
pub fn validate_constants(dim: usize, c: &[f64]) -> Result<ValidationReport> {
    if c.len() != dim * dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim * dim, got: c.len() });
    }
    let at = |i: usize, j: usize, k: usize| c[(i * dim + j) * dim + k];
    let mut antisymmetry = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                antisymmetry = antisymmetry.max((at(i, j, k) + at(j, i, k)).abs());
            }
        }
    }
    let mut jacobi = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let mut s = 0.0;
                    for m in 0..dim {
                        s += at(i, j, m) * at(m, k, l)
                            + at(j, k, m) * at(m, i, l)
                            + at(k, i, m) * at(m, j, l);
                    }
                    jacobi = jacobi.max(s.abs());
                }
            }
        }
    }
    Ok(ValidationReport { antisymmetry, jacobi })
}

impl LieAlgebra {
    /// Builds an algebra from its nonzero brackets `(i, j, k, value)`.
    ///
    /// Entries with `i > j` are mirrored onto `(j, i)` with opposite sign, so
    /// the stored array is antisymmetric by construction. Listing both
    /// orientations of a pair, or a diagonal entry, is rejected. The Jacobi
    /// identity is checked before returning.
    pub fn new(dim: usize, label: &str, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("algebra dimension must be positive".to_string()));
        }
        let mut c = alloc::vec![0.0; dim * dim * dim];
        let mut seen = alloc::vec![false; dim * dim * dim];
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::Invalid(format!("index ({i}, {j}, {k}) out of range for dim {dim}")));
            }
            if i == j {
                return Err(Error::Invalid(format!("diagonal bracket [e{i}, e{i}] must vanish")));
            }
            if !v.is_finite() {
                return Err(Error::Invalid(format!("non-finite constant at ({i}, {j}, {k})")));
            }
            let (a, b, s) = if i < j { (i, j, v) } else { (j, i, -v) };
            let idx = (a * dim + b) * dim + k;
            if seen[idx] {
                return Err(Error::Invalid(format!("bracket ({a}, {b}) -> e{k} given twice")));
            }
            seen[idx] = true;
            c[idx] = s;
            c[(b * dim + a) * dim + k] = -s;
        }
        let alg = Self { dim, c, label: label.to_string() };
        let report = alg.validate();
        if !report.passed() {
            return Err(Error::NotALieAlgebra {
                antisymmetry: report.antisymmetry,
                jacobi: report.jacobi,
            });
        }
        Ok(alg)
    }

    /// One of the factory algebras together with its faithful matrix realization.
    pub fn standard(label: &str) -> Result<(Arc<LieAlgebra>, MatrixRealization)> {
        let unknown = || Error::UnknownAlgebra {
            label: label.to_string(),
            known: STANDARD_LABELS.join(", "),
        };
        match label {
            "heisenberg3" => {
                // [X, Y] = Z realized by strictly upper triangular 3x3 matrices
                let alg = Arc::new(Self::new(3, label, &[(0, 1, 2, 1.0)])?);
                let reps = alloc::vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)];
                Ok((alg.clone(), MatrixRealization::new(alg, reps)?))
            }
            "affine1" => {
                // [X, Y] = Y, the affine group of the line
                let alg = Arc::new(Self::new(2, label, &[(0, 1, 1, 1.0)])?);
                let reps = alloc::vec![unit(2, 0, 0), unit(2, 0, 1)];
                Ok((alg.clone(), MatrixRealization::new(alg, reps)?))
            }
            "so3" => {
                let alg = Arc::new(Self::new(
                    3,
                    label,
                    &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)],
                )?);
                let reps = (0..3).map(rotation_generator).collect();
                Ok((alg.clone(), MatrixRealization::new(alg, reps)?))
            }
            "sl2" => {
                // basis (H, E, F)
                let alg = Arc::new(Self::new(
                    3,
                    label,
                    &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)],
                )?);
                let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
                let reps = alloc::vec![h, unit(2, 0, 1), unit(2, 1, 0)];
                Ok((alg.clone(), MatrixRealization::new(alg, reps)?))
            }
            _ => {
                let n = label
                    .strip_prefix("abelian(")
                    .and_then(|s| s.strip_suffix(')'))
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(unknown)?;
                let alg = Arc::new(Self::new(n, label, &[])?);
                let reps = (0..n).map(|i| unit(n, i, i)).collect();
                Ok((alg.clone(), MatrixRealization::new(alg, reps)?))
            }
        }
    }

    /// `gl(d)` with basis the matrix units `E_ab`, index `a * d + b`.
    pub fn gl(d: usize) -> Result<Self> {
        let n = d * d;
        let mut entries = Vec::new();
        for p in 0..n {
            for q in (p + 1)..n {
                let (a, b) = (p / d, p % d);
                let (c, e) = (q / d, q % d);
                // [E_ab, E_ce] = δ_bc E_ae − δ_ea E_cb
                let mut coeffs = alloc::vec![0.0; n];
                if b == c {
                    coeffs[a * d + e] += 1.0;
                }
                if e == a {
                    coeffs[c * d + b] -= 1.0;
                }
                for (k, &v) in coeffs.iter().enumerate() {
                    if v != 0.0 {
                        entries.push((p, q, k, v));
                    }
                }
            }
        }
        Self::new(n, &format!("gl({d})"), &entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    /// Dense constants, `c[(i * dim + j) * dim + k]`.
    pub fn constants(&self) -> &[f64] {
        &self.c
    }

    /// Nonzero entries with `i < j`, the structure-constant file layout.
    pub fn upper_entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in 0..self.dim {
                    let v = self.c(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> ValidationReport {
        validate_constants(self.dim, &self.c).expect("stored array has dim^3 entries")
    }

    fn check(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x)?;
        self.check(y)?;
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += xy * self.c(i, j, k);
                }
            }
        }
        Ok(out)
    }

    /// `ad(X)`: column `j` is `[X, e_j]`.
    pub fn ad(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(self.ad_unchecked(x.as_slice()))
    }

    pub(crate) fn ad_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    m[(k, j)] += xi * self.c(i, j, k);
                }
            }
        }
        m
    }
}

fn unit(d: usize, a: usize, b: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(a, b)] = 1.0;
    m
}

/// Infinitesimal rotation about axis `axis`: `L_i v = e_i × v`.
fn rotation_generator(axis: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3, 3);
    let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
    m[(q, p)] = 1.0;
    m[(p, q)] = -1.0;
    m
}

/// A linear map between algebras that preserves brackets.
#[derive(Debug, Clone)]
pub struct LieAlgebraHom {
    source: Arc<LieAlgebra>,
    target: Arc<LieAlgebra>,
    matrix: DMatrix<f64>,
}

impl LieAlgebraHom {
    pub fn new(source: Arc<LieAlgebra>, target: Arc<LieAlgebra>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != target.dim() || matrix.ncols() != source.dim() {
            return Err(Error::Invalid(format!(
                "hom matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.dim(),
                source.dim()
            )));
        }
        let hom = Self { source, target, matrix };
        let residual = hom.bracket_residual();
        if residual > ALGEBRA_TOL {
            return Err(Error::NotAHomomorphism(residual));
        }
        Ok(hom)
    }

    pub fn identity(a: Arc<LieAlgebra>) -> Self {
        let n = a.dim();
        Self { source: a.clone(), target: a, matrix: DMatrix::identity(n, n) }
    }

    pub fn zero(source: Arc<LieAlgebra>, target: Arc<LieAlgebra>) -> Self {
        let matrix = DMatrix::zeros(target.dim(), source.dim());
        Self { source, target, matrix }
    }

    pub fn source(&self) -> &Arc<LieAlgebra> {
        &self.source
    }

    pub fn target(&self) -> &Arc<LieAlgebra> {
        &self.target
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Max over basis pairs of `|h[e_i, e_j] − [h e_i, h e_j]|`.
    pub fn bracket_residual(&self) -> f64 {
        let n = self.source.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let ei = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
                let ej = DVector::from_fn(n, |k, _| if k == j { 1.0 } else { 0.0 });
                let lhs = &self.matrix * self.source.bracket(&ei, &ej).unwrap();
                let rhs = self
                    .target
                    .bracket(&(&self.matrix * &ei), &(&self.matrix * &ej))
                    .unwrap();
                worst = worst.max((lhs - rhs).amax());
            }
        }
        worst
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.source.check(x)?;
        Ok(&self.matrix * x)
    }
}

/// Matrices `ρ(e_i)` satisfying `[ρ(e_i), ρ(e_j)] = Σ_k c_ijk ρ(e_k)`.
#[derive(Debug, Clone)]
pub struct MatrixRealization {
    algebra: Arc<LieAlgebra>,
    reps: Vec<DMatrix<f64>>,
    d: usize,
}

impl MatrixRealization {
    pub fn new(algebra: Arc<LieAlgebra>, reps: Vec<DMatrix<f64>>) -> Result<Self> {
        if reps.len() != algebra.dim() {
            return Err(Error::DimensionMismatch { expected: algebra.dim(), got: reps.len() });
        }
        let d = reps[0].nrows();
        if reps.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Invalid("realization matrices must share a square size".to_string()));
        }
        let r = Self { algebra, reps, d };
        let residual = r.commutator_residual();
        if residual > ALGEBRA_TOL {
            return Err(Error::NotARealization(residual));
        }
        Ok(r)
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn size(&self) -> usize {
        self.d
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.reps
    }

    pub fn commutator_residual(&self) -> f64 {
        let n = self.algebra.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let comm = &self.reps[i] * &self.reps[j] - &self.reps[j] * &self.reps[i];
                let mut expect = DMatrix::zeros(self.d, self.d);
                for k in 0..n {
                    expect += &self.reps[k] * self.algebra.c(i, j, k);
                }
                worst = worst.max((comm - expect).amax());
            }
        }
        worst
    }

    /// `ρ(X) = Σ X_i ρ(e_i)`.
    pub fn rho(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.d, self.d);
        for (xi, r) in x.iter().zip(&self.reps) {
            if *xi != 0.0 {
                m += r * *xi;
            }
        }
        m
    }

    /// Least-squares preimage of a matrix under `ρ`; exact on the image of a
    /// faithful realization.
    pub fn preimage(&self, m: &DMatrix<f64>) -> Result<DVector<f64>> {
        let n = self.algebra.dim();
        let gram = DMatrix::from_fn(n, n, |i, j| self.reps[i].dot(&self.reps[j]));
        let rhs = DVector::from_fn(n, |i, _| self.reps[i].dot(m));
        gram.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Invalid("realization is not faithful".to_string()))
    }

    /// The realization as a homomorphism into `gl(d)`, flattening row-major.
    pub fn as_hom(&self) -> Result<LieAlgebraHom> {
        let target = Arc::new(LieAlgebra::gl(self.d)?);
        let n = self.algebra.dim();
        let matrix = DMatrix::from_fn(self.d * self.d, n, |p, i| self.reps[i][(p / self.d, p % self.d)]);
        LieAlgebraHom::new(self.algebra.clone(), target, matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn abelian_constants_vanish() {
        let (a, _) = LieAlgebra::standard("abelian(3)").unwrap();
        assert!(a.constants().iter().all(|&c| c == 0.0));
        let x = DVector::from_vec(alloc::vec![1.0, 2.0, 3.0]);
        assert_eq!(a.bracket(&x, &e(3, 1)).unwrap(), DVector::zeros(3));
    }

    #[test]
    fn so3_bracket_is_cross_product() {
        let (a, _) = LieAlgebra::standard("so3").unwrap();
        assert_eq!(a.bracket(&e(3, 0), &e(3, 1)).unwrap(), e(3, 2));
        assert_eq!(a.bracket(&e(3, 1), &e(3, 2)).unwrap(), e(3, 0));
        assert_eq!(a.bracket(&e(3, 2), &e(3, 0)).unwrap(), e(3, 1));
    }

    #[test]
    fn self_bracket_vanishes() {
        for label in ["so3", "sl2", "heisenberg3", "affine1"] {
            let (a, _) = LieAlgebra::standard(label).unwrap();
            let x = DVector::from_fn(a.dim(), |i, _| 0.3 + i as f64);
            assert!(a.bracket(&x, &x).unwrap().amax() < 1e-15);
        }
    }

    #[test]
    fn so3_ad_e3_rotates_first_plane() {
        let (a, _) = LieAlgebra::standard("so3").unwrap();
        let ad = a.ad(&e(3, 2)).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(ad, expect);
        assert_eq!(a.ad(&DVector::zeros(3)).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn sl2_ad_h_is_diagonal() {
        let (a, _) = LieAlgebra::standard("sl2").unwrap();
        let ad = a.ad(&e(3, 0)).unwrap();
        assert_eq!(ad, DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![0.0, 2.0, -2.0])));
        // [E, F] = H
        assert_eq!(a.bracket(&e(3, 1), &e(3, 2)).unwrap(), e(3, 0));
    }

    #[test]
    fn unknown_label_lists_known_ones() {
        let err = LieAlgebra::standard("e8").unwrap_err();
        match err {
            Error::UnknownAlgebra { known, .. } => assert!(known.contains("so3") && known.contains("heisenberg3")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(LieAlgebra::standard("abelian(0)").is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (a, _) = LieAlgebra::standard("so3").unwrap();
        assert!(matches!(
            a.bracket(&e(2, 0), &e(3, 0)),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(a.ad(&e(4, 0)).is_err());
    }

    #[test]
    fn factory_algebras_validate() {
        for label in ["abelian(5)", "so3", "sl2", "heisenberg3", "affine1"] {
            let (a, r) = LieAlgebra::standard(label).unwrap();
            let rep = a.validate();
            assert!(rep.passed(), "{label}");
            assert_eq!(rep.jacobi, 0.0);
            assert!(r.commutator_residual() <= ALGEBRA_TOL);
        }
    }

    #[test]
    fn perturbed_raw_constants_fail_validation() {
        let (a, _) = LieAlgebra::standard("so3").unwrap();
        let mut c = a.constants().to_vec();
        c[5] += 1e-3;
        let rep = validate_constants(3, &c).unwrap();
        assert!(!rep.passed());
        assert!((rep.jacobi - 1e-3).abs() < 1e-12, "{}", rep.jacobi);
        assert!((rep.antisymmetry - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn jacobi_violation_rejected_at_construction() {
        // [e0,e1]=e1, [e0,e2]=e0, [e1,e2]=e2 violates Jacobi
        let err = LieAlgebra::new(3, "bad", &[(0, 1, 1, 1.0), (0, 2, 0, 1.0), (1, 2, 2, 1.0)]);
        assert!(matches!(err, Err(Error::NotALieAlgebra { .. })));
    }

    #[test]
    fn mirrored_entries_are_antisymmetric() {
        let a = LieAlgebra::new(2, "aff", &[(1, 0, 1, -1.0)]).unwrap();
        assert_eq!(a.c(0, 1, 1), 1.0);
        assert_eq!(a.c(1, 0, 1), -1.0);
        assert_eq!(a.upper_entries(), alloc::vec![(0, 1, 1, 1.0)]);
    }

    #[test]
    fn homs_apply() {
        let (a, r) = LieAlgebra::standard("so3").unwrap();
        let x = DVector::from_vec(alloc::vec![0.5, -1.0, 2.0]);
        assert_eq!(LieAlgebraHom::identity(a.clone()).apply(&x).unwrap(), x);
        assert_eq!(LieAlgebraHom::zero(a.clone(), a.clone()).apply(&x).unwrap(), DVector::zeros(3));
        let h = r.as_hom().unwrap();
        let img = h.apply(&e(3, 0)).unwrap();
        let flat: Vec<f64> = (0..9).map(|p| r.generators()[0][(p / 3, p % 3)]).collect();
        assert_eq!(img.as_slice(), flat.as_slice());
    }

    #[test]
    fn non_bracket_preserving_map_is_rejected() {
        let (a, _) = LieAlgebra::standard("so3").unwrap();
        let m = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 1.0, 2.0]));
        assert!(matches!(LieAlgebraHom::new(a.clone(), a, m), Err(Error::NotAHomomorphism(_))));
    }

    #[test]
    fn preimage_inverts_rho() {
        let (_, r) = LieAlgebra::standard("sl2").unwrap();
        let x = [0.25, -1.5, 3.0];
        let back = r.preimage(&r.rho(&x)).unwrap();
        for i in 0..3 {
            assert!((back[i] - x[i]).abs() < 1e-14);
        }
    }
}
