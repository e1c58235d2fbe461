//! Dense complex linear algebra shared by every other module.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! `nalgebra` dynamic matrices over `Complex64`; the Hermitian eigensolver,
//! SVD, Schur and LU routines of `nalgebra` do the heavy lifting, while the
//! Cholesky reduction of generalized pencils and the matrix exponential are
//! implemented here.

mod expm;

pub use expm::matrix_exponential;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Numerical thresholds used across the crate.
///
/// The defaults are the values every operation documents; callers that need
/// different behavior construct their own record and pass it explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative Hermitian-symmetry tolerance for pencil sides.
    pub hermitian_rel: f64,
    /// Relative tolerance for matrix identities such as `Herm(S) = G_V`.
    pub identity_rel: f64,
    /// Accretivity slack relative to the matrix size.
    pub accretive_rel: f64,
    /// Coercivity margin a certificate must clear.
    pub alpha_min: f64,
    /// Absolute slack for derived inequalities.
    pub inequality_slack: f64,
    /// Condition numbers above this are reported as singular.
    pub max_condition: f64,
    /// Largest state norm a propagation accepts before aborting.
    pub blowup_norm: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian_rel: 1e-12,
        identity_rel: 1e-12,
        accretive_rel: 1e-12,
        alpha_min: 1e-8,
        inequality_slack: 1e-8,
        max_condition: 1e14,
        blowup_norm: 1e12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a complex matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}

pub fn real_vector(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
}

pub fn diag_real(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&real_vector(entries))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `(S + S†) / 2`.
pub fn hermitian_part(s: &CMatrix) -> CMatrix {
    (s + s.adjoint()) * c(0.5, 0.0)
}

/// `(S − S†) / 2i`, the Hermitian matrix with `Im(v†Sv) = v†Kv`.
pub fn imaginary_part(s: &CMatrix) -> CMatrix {
    (s - s.adjoint()) * c(0.0, -0.5)
}

/// `v† G u`, the inner product `(u | v)` induced by the Gram matrix `G`.
pub fn gram_inner(gram: &CMatrix, u: &CVector, v: &CVector) -> Complex64 {
    v.dotc(&(gram * u))
}

pub fn gram_norm_sq(gram: &CMatrix, u: &CVector) -> f64 {
    gram_inner(gram, u, u).re
}

/// Block-diagonal composition `diag(a, b)`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((n, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_hermitian(m: &CMatrix, rel: f64) -> Result<()> {
    let deviation = max_abs(&(m - m.adjoint()));
    let allowed = rel * max_abs(m);
    if deviation <= allowed {
        Ok(())
    } else {
        Err(Error::NotHermitian { deviation, allowed })
    }
}

/// Lower Cholesky factor `L` of a Hermitian positive definite matrix, `M = L L†`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: CMatrix,
}

impl Cholesky {
    pub fn new(m: &CMatrix) -> Result<Self> {
        let n = ensure_square(m)?;
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = c(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &CMatrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `L⁻¹ X`.
    pub fn solve_lower(&self, x: &CMatrix) -> CMatrix {
        self.lower
            .solve_lower_triangular(x)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `L⁻† X`.
    pub fn solve_upper(&self, x: &CMatrix) -> CMatrix {
        self.lower
            .ad_solve_lower_triangular(x)
            .expect("Cholesky factor has a positive diagonal")
    }

    pub fn solve_upper_vec(&self, x: &CVector) -> CVector {
        self.lower
            .ad_solve_lower_triangular(x)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `L⁻¹ S L⁻†`: the matrix `S` expressed in an orthonormal basis of the
    /// Gram inner product.
    pub fn congruence(&self, s: &CMatrix) -> CMatrix {
        let left = self.solve_lower(s);
        self.solve_lower(&left.adjoint()).adjoint()
    }

    /// `L† X L⁻†`: similarity transform into orthonormal coordinates, under
    /// which the Gram-weighted operator norm becomes the spectral norm.
    pub fn similarity(&self, x: &CMatrix) -> CMatrix {
        let lx = self.lower.adjoint() * x;
        self.solve_lower(&lx.adjoint()).adjoint()
    }

    /// Inverse of [`Self::similarity`]: `L⁻† X L†`.
    pub fn inverse_similarity(&self, x: &CMatrix) -> CMatrix {
        self.solve_upper(x) * self.lower.adjoint()
    }
}

/// A Hermitian generalized eigenproblem `lhs·x = λ·rhs·x` with `rhs` positive definite.
#[derive(Debug, Clone)]
pub struct HermitianPencil {
    lhs: CMatrix,
    rhs: CMatrix,
}

impl HermitianPencil {
    pub fn new(lhs: CMatrix, rhs: CMatrix) -> Result<Self> {
        Self::with_tolerances(lhs, rhs, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(lhs: CMatrix, rhs: CMatrix, tol: &Tolerances) -> Result<Self> {
        let n = ensure_square(&lhs)?;
        let m = ensure_square(&rhs)?;
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
        ensure_finite(&lhs, "pencil lhs")?;
        ensure_finite(&rhs, "pencil rhs")?;
        ensure_hermitian(&lhs, tol.hermitian_rel)?;
        ensure_hermitian(&rhs, tol.hermitian_rel)?;
        Ok(Self { lhs, rhs })
    }

    pub fn dim(&self) -> usize {
        self.lhs.nrows()
    }

    pub fn lhs(&self) -> &CMatrix {
        &self.lhs
    }

    pub fn rhs(&self) -> &CMatrix {
        &self.rhs
    }
}

/// Eigenpairs of a Hermitian pencil, eigenvalues ascending; column `k` of
/// `vectors` belongs to `values[k]` and the columns are `rhs`-orthonormal.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl GeneralizedEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("pencil has positive dimension")
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }
}

pub fn hermitian_geig(pencil: &HermitianPencil) -> Result<GeneralizedEigen> {
    let chol = Cholesky::new(pencil.rhs())?;
    hermitian_geig_factored(pencil.lhs(), &chol)
}

/// Generalized eigensolve with a precomputed Cholesky factor of the right-hand side.
pub fn hermitian_geig_factored(lhs: &CMatrix, rhs: &Cholesky) -> Result<GeneralizedEigen> {
    let reduced = hermitian_part(&rhs.congruence(lhs));
    let (values, vectors) = hermitian_eig(reduced)?;
    let vectors = rhs.solve_upper(&vectors);
    Ok(GeneralizedEigen { values, vectors })
}

/// Standard Hermitian eigensolve with ascending eigenvalues.
pub fn hermitian_eig(m: CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = ensure_square(&m)?;
    if n == 0 {
        return Err(Error::Eigen("empty matrix".into()));
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("Hermitian QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(m: &CMatrix) -> Result<f64> {
    let (values, _) = hermitian_eig(hermitian_part(m))?;
    Ok(values[0])
}

pub fn largest_singular_value(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// LU factorization with partial pivoting and a 1-norm condition estimate.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl LinearSolver {
    pub fn new(m: &CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(m: &CMatrix, tol: &Tolerances) -> Result<Self> {
        let n = ensure_square(m)?;
        ensure_finite(m, "linear system")?;
        let lu = m.clone().lu();
        let inverse = lu.try_inverse();
        let condition = match &inverse {
            Some(inv) if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => one_norm(m) * one_norm(inv),
            _ => f64::INFINITY,
        };
        if n > 0 && !(condition <= tol.max_condition) {
            return Err(Error::Singular { condition });
        }
        Ok(Self { lu, condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &CVector) -> Result<CVector> {
        if rhs.len() != self.lu.l().nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.lu.l().nrows(),
                found: rhs.len(),
            });
        }
        self.lu.solve(rhs).ok_or(Error::Singular {
            condition: self.condition,
        })
    }

    pub fn solve_matrix(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.lu.solve(rhs).ok_or(Error::Singular {
            condition: self.condition,
        })
    }
}

/// Solves `M x = rhs` by LU with partial pivoting.
pub fn solve_linear(m: &CMatrix, rhs: &CVector) -> Result<CVector> {
    LinearSolver::new(m)?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn geig_identity() {
        let i2 = CMatrix::identity(2, 2);
        let eig = hermitian_geig(&HermitianPencil::new(i2.clone(), i2).unwrap()).unwrap();
        assert_abs_diff_eq!(eig.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn geig_diagonal_ratio() {
        let p = HermitianPencil::new(diag_real(&[1.0, 4.0]), diag_real(&[1.0, 2.0])).unwrap();
        let eig = hermitian_geig(&p).unwrap();
        assert_abs_diff_eq!(eig.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn geig_two_by_two() {
        // det([[2-λ,1],[1,2-λ]]) = (λ-1)(λ-3)
        let p = HermitianPencil::new(real_matrix(2, 2, &[2.0, 1.0, 1.0, 2.0]), CMatrix::identity(2, 2)).unwrap();
        let eig = hermitian_geig(&p).unwrap();
        assert_abs_diff_eq!(eig.values[0], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(eig.values[1], 3.0, epsilon = 1e-13);
    }

    #[test]
    fn geig_reports_offending_pivot() {
        let p = HermitianPencil::new(CMatrix::identity(3, 3), diag_real(&[1.0, 2.0, -1.0])).unwrap();
        match hermitian_geig(&p) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pencil_rejects_non_hermitian() {
        let err = HermitianPencil::new(real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]), CMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn geig_vectors_are_rhs_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 3, 8, 20] {
            let a = random_matrix(&mut rng, n);
            let b = random_matrix(&mut rng, n);
            let lhs = hermitian_part(&a);
            let rhs = &b * b.adjoint() + CMatrix::identity(n, n) * c(0.1, 0.0);
            let eig = hermitian_geig(&HermitianPencil::new(lhs.clone(), rhs.clone()).unwrap()).unwrap();
            let gram = eig.vectors.adjoint() * &rhs * &eig.vectors;
            assert!(max_abs(&(gram - CMatrix::identity(n, n))) < 1e-10);
            let residual = &lhs * &eig.vectors - &rhs * &eig.vectors * diag_real(&eig.values);
            assert!(max_abs(&residual) < 1e-10 * (1.0 + max_abs(&lhs)));
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn solve_examples() {
        let b = real_vector(&[3.0, -2.0]);
        let x = solve_linear(&CMatrix::identity(2, 2), &b).unwrap();
        assert_abs_diff_eq!(max_abs_vec(&(x - &b)), 0.0, epsilon = 1e-15);

        let x = solve_linear(&diag_real(&[2.0, 4.0]), &real_vector(&[2.0, 8.0])).unwrap();
        assert_abs_diff_eq!(max_abs_vec(&(x - real_vector(&[1.0, 2.0]))), 0.0, epsilon = 1e-15);

        let x = solve_linear(&real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]), &real_vector(&[3.0, 1.0])).unwrap();
        assert_abs_diff_eq!(max_abs_vec(&(x - real_vector(&[2.0, 1.0]))), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn solve_rejects_singular() {
        let err = solve_linear(&real_matrix(2, 2, &[1.0, 2.0, 2.0, 4.0]), &real_vector(&[1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn solve_residual_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(1..10);
            let m = random_matrix(&mut rng, n) + CMatrix::identity(n, n) * c(2.0 * n as f64, 0.0);
            let rhs = CVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let solver = LinearSolver::new(&m).unwrap();
            let x = solver.solve(&rhs).unwrap();
            let residual = (&m * x - &rhs).norm();
            assert!(residual <= 1e-10 * rhs.norm() * solver.condition());
        }
    }

    #[test]
    fn congruence_and_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_matrix(&mut rng, 5);
        let gram = &b * b.adjoint() + CMatrix::identity(5, 5);
        let chol = Cholesky::new(&gram).unwrap();
        let l = chol.lower().clone();
        assert!(max_abs(&(&l * l.adjoint() - &gram)) < 1e-12);
        let s = random_matrix(&mut rng, 5);
        let reduced = chol.congruence(&s);
        assert!(max_abs(&(&l * &reduced * l.adjoint() - &s)) < 1e-12);
        let sim = chol.similarity(&s);
        assert!(max_abs(&(chol.inverse_similarity(&sim) - &s)) < 1e-12);
    }
}
