//! Discrete sesquilinear forms on a pair of Gram-weighted spaces `V ⊂ H`.
//!
//! Coefficient vectors carry the inner products `(u | v)_V = v† G_V u` and
//! `(u | v)_H = v† G_H u`, and a form is stored as the matrix `S` with
//! `a(u, v) = v† S u` (linear in the first slot, conjugate-linear in the
//! second). All constants are suprema over the unit spheres of the relevant
//! Gram norms and are evaluated as extreme eigenvalues or singular values of
//! congruence-reduced matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, ensure_finite, ensure_hermitian, ensure_square, gram_inner, hermitian_geig_factored, hermitian_min_eigenvalue,
    hermitian_part, imaginary_part, largest_singular_value, max_abs, CMatrix, CVector, Cholesky, Tolerances,
};

/// Gram matrices of a discrete pair `V ⊂ H`.
#[derive(Debug, Clone)]
pub struct InnerProductPair {
    gram_v: CMatrix,
    gram_h: CMatrix,
    chol_v: Cholesky,
    chol_h: Cholesky,
    /// Extreme eigenvalues of the pencil `(G_V, G_H)`, i.e. the range of
    /// `‖f‖²_V / ‖f‖²_H`.
    v_over_h: (f64, f64),
}

impl InnerProductPair {
    pub fn new(gram_v: CMatrix, gram_h: CMatrix) -> Result<Self> {
        let n = ensure_square(&gram_v)?;
        let m = ensure_square(&gram_h)?;
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
        if n == 0 {
            return Err(Error::Domain("inner product pair must have positive dimension".into()));
        }
        ensure_finite(&gram_v, "G_V")?;
        ensure_finite(&gram_h, "G_H")?;
        let tol = Tolerances::DEFAULT;
        ensure_hermitian(&gram_v, tol.hermitian_rel)?;
        ensure_hermitian(&gram_h, tol.hermitian_rel)?;
        let chol_v = Cholesky::new(&gram_v)?;
        let chol_h = Cholesky::new(&gram_h)?;
        let eig = hermitian_geig_factored(&gram_v, &chol_h)?;
        let v_over_h = (eig.min(), eig.max());
        Ok(Self {
            gram_v,
            gram_h,
            chol_v,
            chol_h,
            v_over_h,
        })
    }

    pub fn dim(&self) -> usize {
        self.gram_v.nrows()
    }

    pub fn gram_v(&self) -> &CMatrix {
        &self.gram_v
    }

    pub fn gram_h(&self) -> &CMatrix {
        &self.gram_h
    }

    pub fn chol_v(&self) -> &Cholesky {
        &self.chol_v
    }

    pub fn chol_h(&self) -> &Cholesky {
        &self.chol_h
    }

    /// Smallest `c` with `‖f‖_H ≤ c‖f‖_V`.
    pub fn embedding_constant(&self) -> f64 {
        1.0 / self.v_over_h.0.sqrt()
    }

    /// Largest `‖f‖²_V / ‖f‖²_H` over nonzero `f`.
    pub fn max_v_over_h(&self) -> f64 {
        self.v_over_h.1
    }

    pub fn min_v_over_h(&self) -> f64 {
        self.v_over_h.0
    }

    /// `inf ‖f‖²_H / ‖f‖²_V`: the V-coercivity that the shift term
    /// `ω‖f‖²_H` supplies on its own, per unit of `ω`.
    pub fn h_floor(&self) -> f64 {
        1.0 / self.v_over_h.1
    }

    pub fn norm_v(&self, u: &CVector) -> f64 {
        gram_inner(&self.gram_v, u, u).re.max(0.0).sqrt()
    }

    pub fn norm_h(&self, u: &CVector) -> f64 {
        gram_inner(&self.gram_h, u, u).re.max(0.0).sqrt()
    }
}

/// A sesquilinear form `a(u, v) = v† S u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SesquilinearForm {
    matrix: CMatrix,
}

impl SesquilinearForm {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        ensure_square(&matrix)?;
        ensure_finite(&matrix, "form matrix")?;
        Ok(Self { matrix })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eval(&self, u: &CVector, v: &CVector) -> Complex64 {
        v.dotc(&(&self.matrix * u))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            matrix: &self.matrix * s,
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    /// The form with its slots exchanged and conjugated, `a*(u, v) = conj a(v, u)`.
    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    fn check_dim(&self, pair: &InnerProductPair) -> Result<()> {
        if self.dim() != pair.dim() {
            return Err(Error::DimensionMismatch {
                expected: pair.dim(),
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// Certified `Re a(u,u) ≥ alpha‖u‖²_V − omega‖u‖²_H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityCertificate {
    pub alpha: f64,
    pub omega: f64,
}

/// Spectrally realized interpolation space `H_α` between `V` and `H`.
#[derive(Debug, Clone)]
pub struct InterpolationScale {
    pub alpha_exp: f64,
    pub gram_alpha: CMatrix,
}

impl InterpolationScale {
    pub fn norm(&self, u: &CVector) -> f64 {
        gram_inner(&self.gram_alpha, u, u).re.max(0.0).sqrt()
    }
}

/// `0, 1, 2, 4, …, 2^10`.
pub fn default_omega_grid() -> Vec<f64> {
    std::iter::once(0.0).chain((0..=10).map(|k| 2f64.powi(k))).collect()
}

/// `sup |v† S u| / (‖u‖_first ‖v‖_second)`.
pub fn cross_continuity_constant(s: &CMatrix, first: &Cholesky, second: &Cholesky) -> f64 {
    let left = second.solve_lower(s);
    let reduced = first.solve_lower(&left.adjoint()).adjoint();
    largest_singular_value(&reduced)
}

/// `M_a = sup |a(u,v)| / (‖u‖_V ‖v‖_V)`.
pub fn continuity_constant(form: &SesquilinearForm, pair: &InnerProductPair) -> Result<f64> {
    form.check_dim(pair)?;
    Ok(largest_singular_value(&pair.chol_v.congruence(&form.matrix)))
}

/// The continuity constant together with vectors attaining it.
#[derive(Debug, Clone)]
pub struct ContinuityWitness {
    pub constant: f64,
    pub u: CVector,
    pub v: CVector,
}

impl ContinuityWitness {
    /// `|a(u,v)| / (‖u‖_V ‖v‖_V)` at the stored vectors.
    pub fn attained(&self, form: &SesquilinearForm, pair: &InnerProductPair) -> f64 {
        form.eval(&self.u, &self.v).norm() / (pair.norm_v(&self.u) * pair.norm_v(&self.v))
    }
}

pub fn continuity_witness(form: &SesquilinearForm, pair: &InnerProductPair) -> Result<ContinuityWitness> {
    form.check_dim(pair)?;
    let reduced = pair.chol_v.congruence(&form.matrix);
    let svd = reduced.svd(true, true);
    let (k, constant) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, s)| if s > best.1 { (i, s) } else { best },
        );
    let left = svd.u.as_ref().expect("requested U").column(k).into_owned();
    let right = svd.v_t.as_ref().expect("requested Vᵀ").row(k).adjoint();
    let u = pair.chol_v.solve_upper_vec(&right);
    let v = pair.chol_v.solve_upper_vec(&left);
    Ok(ContinuityWitness { constant, u, v })
}

/// Smallest eigenvalue of the pencil `(herm + ω·gram_h, gram_v)`.
pub(crate) fn coercivity_of(herm: &CMatrix, gram_h: &CMatrix, chol_v: &Cholesky, omega: f64) -> Result<f64> {
    let shifted = herm + gram_h * c(omega, 0.0);
    Ok(hermitian_geig_factored(&shifted, chol_v)?.min())
}

/// `α(ω) = inf (Re a(u,u) + ω‖u‖²_H) / ‖u‖²_V`.
pub fn coercivity_at(form: &SesquilinearForm, pair: &InnerProductPair, omega: f64) -> Result<f64> {
    form.check_dim(pair)?;
    coercivity_of(&hermitian_part(&form.matrix), &pair.gram_h, &pair.chol_v, omega)
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("omega grid is empty".into()));
    }
    if grid.iter().any(|w| !w.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("omega grid must be finite and ascending".into()));
    }
    Ok(())
}

/// Scans `grid` and returns the first `ω` whose coercivity clears the margin.
///
/// A finite-dimensional shift `ω‖u‖²_H` is itself V-coercive with constant
/// `ω·floor`, so an `α(ω)` that only reflects the shift says nothing about
/// the form. A certificate is accepted when `α(ω) − ω·floor ≥ alpha_min`,
/// i.e. when the form contributes coercivity beyond what the shift buys.
pub(crate) fn certify<F>(
    grid: &[f64],
    floor: f64,
    alpha_min: f64,
    mut coercivity: F,
) -> Result<Option<EllipticityCertificate>>
where
    F: FnMut(f64) -> Result<f64>,
{
    validate_grid(grid)?;
    for &omega in grid {
        let alpha = coercivity(omega)?;
        if alpha - omega.max(0.0) * floor >= alpha_min {
            return Ok(Some(EllipticityCertificate { alpha, omega }));
        }
    }
    Ok(None)
}

pub fn ellipticity_constants(
    form: &SesquilinearForm,
    pair: &InnerProductPair,
    omega_grid: &[f64],
    tol: &Tolerances,
) -> Result<Option<EllipticityCertificate>> {
    form.check_dim(pair)?;
    let herm = hermitian_part(&form.matrix);
    certify(omega_grid, pair.h_floor(), tol.alpha_min, |omega| {
        coercivity_of(&herm, &pair.gram_h, &pair.chol_v, omega)
    })
}

/// `Re a(u,u) ≥ 0` for all `u`.
pub fn accretivity_check(form: &SesquilinearForm, pair: &InnerProductPair, tol: &Tolerances) -> Result<bool> {
    form.check_dim(pair)?;
    let lowest = hermitian_min_eigenvalue(&form.matrix)?;
    Ok(lowest >= -tol.accretive_rel * max_abs(&form.matrix))
}

/// `Re a(u,v) = Re (u | v)_V` for all `u, v`, i.e. `Herm(S) = G_V`.
pub fn re_equals_v_inner(form: &SesquilinearForm, pair: &InnerProductPair, tol: &Tolerances) -> bool {
    if form.dim() != pair.dim() {
        return false;
    }
    max_abs(&(hermitian_part(&form.matrix) - &pair.gram_v)) <= tol.identity_rel * max_abs(&pair.gram_v)
}

const IMAG_GRID_POINTS: usize = 64;

/// `sup |Im a(u,u)| / (‖u‖_H ‖u‖_V)`.
///
/// Uses `‖u‖_H‖u‖_V = inf_s (s‖u‖²_H + ‖u‖²_V / s) / 2`; for fixed `s` the
/// supremum is the spectral radius of the pencil `(2K, s·G_H + G_V/s)` with
/// `K = (S − S†)/2i`, and the outer supremum over `s` is located on a
/// logarithmic grid and refined by golden-section search.
pub fn imag_bound_constant(form: &SesquilinearForm, pair: &InnerProductPair) -> Result<f64> {
    form.check_dim(pair)?;
    let k = imaginary_part(&form.matrix);
    if max_abs(&k) == 0.0 {
        return Ok(0.0);
    }
    let two_k = &k * c(2.0, 0.0);
    let value = |log_s: f64| -> Result<f64> {
        let s = log_s.exp();
        let weight = pair.gram_h() * c(s, 0.0) + pair.gram_v() * c(1.0 / s, 0.0);
        let chol = Cholesky::new(&weight)?;
        let eig = hermitian_geig_factored(&two_k, &chol)?;
        Ok(eig.max().max(-eig.min()))
    };
    // the maximizing s is ‖u‖_V/‖u‖_H, which lies in [√μ_min, √μ_max].
    let lo = (pair.min_v_over_h() * 1e-3).min(pair.min_v_over_h().sqrt() * 1e-3);
    let hi = (1e3f64).max(pair.max_v_over_h().sqrt() * 1e3);
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let step = (log_hi - log_lo) / (IMAG_GRID_POINTS - 1) as f64;
    let mut samples = Vec::with_capacity(IMAG_GRID_POINTS);
    for i in 0..IMAG_GRID_POINTS {
        let x = log_lo + step * i as f64;
        samples.push((x, value(x)?));
    }
    let (best, _) = samples.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, &(_, f))| if f > acc.1 { (i, f) } else { acc },
    );
    let mut a = samples[best.saturating_sub(1)].0;
    let mut b = samples[(best + 1).min(IMAG_GRID_POINTS - 1)].0;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = value(x1)?;
    let mut f2 = value(x2)?;
    let mut best_value = samples[best].1.max(f1).max(f2);
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = value(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = value(x1)?;
        }
        best_value = best_value.max(f1).max(f2);
    }
    Ok(best_value)
}

/// Smallest `M(ε)` with `2·M·M_α·ρ^{1+α} ≤ ε·ρ² + M(ε)` for all `ρ ≥ 0`.
pub fn young_shift(m: f64, m_alpha: f64, alpha_exp: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if !(0.0..1.0).contains(&alpha_exp) {
        return Err(Error::Domain(format!(
            "interpolation exponent {alpha_exp} outside [0, 1)"
        )));
    }
    if m < 0.0 || m_alpha < 0.0 {
        return Err(Error::Domain("constants must be nonnegative".into()));
    }
    let k = m * m_alpha;
    if k == 0.0 {
        return Ok(0.0);
    }
    let rho = (k * (1.0 + alpha_exp) / eps).powf(1.0 / (1.0 - alpha_exp));
    Ok(2.0 * k * rho.powf(1.0 + alpha_exp) - eps * rho * rho)
}

/// Certificate for `a0 + a1 + a2` from one for `a0`, where `a1: V × H_α` and
/// `a2: H_α × V` have continuity constants `m1`, `m2`.
pub fn perturbed_ellipticity(
    a0: &EllipticityCertificate,
    m1: f64,
    m2: f64,
    scale: &InterpolationScale,
) -> Result<EllipticityCertificate> {
    let eps = a0.alpha / 2.0;
    let shift = young_shift(m1 + m2, 1.0, scale.alpha_exp, eps)?;
    Ok(EllipticityCertificate {
        alpha: eps,
        omega: a0.omega + shift,
    })
}

/// `‖f‖²_{H_α} = Σ μ_k^α |c_k|²` in the `G_H`-orthonormal eigenbasis of `(G_V, G_H)`.
pub fn build_interpolation_scale(pair: &InnerProductPair, alpha_exp: f64) -> Result<InterpolationScale> {
    if !(0.0..1.0).contains(&alpha_exp) {
        return Err(Error::Domain(format!(
            "interpolation exponent {alpha_exp} outside [0, 1)"
        )));
    }
    let eig = hermitian_geig_factored(&pair.gram_v, &pair.chol_h)?;
    let weights = CMatrix::from_diagonal(&CVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|mu| c(mu.max(0.0).powf(alpha_exp), 0.0)),
    ));
    let basis = &pair.gram_h * &eig.vectors;
    let gram_alpha = hermitian_part(&(&basis * weights * basis.adjoint()));
    Ok(InterpolationScale { alpha_exp, gram_alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, hermitian_geig, real_matrix, HermitianPencil};
    use crate::sampling::Sampler;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::DEFAULT
    }

    fn random_pair(sampler: &mut Sampler, n: usize) -> InnerProductPair {
        let gh = sampler.hpd_matrix(n, 0.5);
        let gv = sampler.hpd_matrix(n, 0.5) * c(5.0, 0.0) + &gh;
        InnerProductPair::new(gv, gh).unwrap()
    }

    #[test]
    fn embedding_constant_matches_pencil() {
        let mut s = Sampler::new(1);
        let pair = random_pair(&mut s, 6);
        let eig = hermitian_geig(&HermitianPencil::new(pair.gram_h().clone(), pair.gram_v().clone()).unwrap()).unwrap();
        assert_relative_eq!(pair.embedding_constant().powi(2), eig.max(), max_relative = 1e-10);
        assert_relative_eq!(pair.h_floor(), eig.min(), max_relative = 1e-10);
    }

    #[test]
    fn pair_rejects_indefinite_gram() {
        let err = InnerProductPair::new(diag_real(&[1.0, -1.0]), CMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn continuity_examples() {
        let pair = InnerProductPair::new(diag_real(&[1.0]), diag_real(&[1.0])).unwrap();
        let form = SesquilinearForm::new(diag_real(&[2.0])).unwrap();
        assert_relative_eq!(continuity_constant(&form, &pair).unwrap(), 2.0, max_relative = 1e-14);

        let mut s = Sampler::new(2);
        let pair = random_pair(&mut s, 5);
        let form = SesquilinearForm::new(pair.gram_v().clone()).unwrap();
        assert_relative_eq!(continuity_constant(&form, &pair).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn continuity_identity_over_weighted_pair_matches_brute_force() {
        // brute force over the V-unit sphere of C² restricted to real angles
        // and phases: sup |v†u| / (‖u‖_V‖v‖_V) with G_V = diag(1, 4).
        let pair = InnerProductPair::new(diag_real(&[1.0, 4.0]), CMatrix::identity(2, 2)).unwrap();
        let form = SesquilinearForm::new(CMatrix::identity(2, 2)).unwrap();
        let mut best: f64 = 0.0;
        let steps = 400;
        for i in 0..steps {
            let t = std::f64::consts::PI * i as f64 / steps as f64;
            // u = v maximizes for a positive form; scan u = (cos t, sin t / 2)
            let u = CVector::from_vec(vec![c(t.cos(), 0.0), c(t.sin() / 2.0, 0.0)]);
            for j in 0..steps {
                let r = std::f64::consts::PI * j as f64 / steps as f64;
                let v = CVector::from_vec(vec![c(r.cos(), 0.0), c(r.sin() / 2.0, 0.0)]);
                let ratio = form.eval(&u, &v).norm() / (pair.norm_v(&u) * pair.norm_v(&v));
                best = best.max(ratio);
            }
        }
        assert_relative_eq!(best, 1.0, max_relative = 1e-9);
        assert_relative_eq!(continuity_constant(&form, &pair).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn continuity_witness_attains_constant() {
        let mut s = Sampler::new(3);
        let pair = random_pair(&mut s, 7);
        let form = SesquilinearForm::new(s.complex_matrix(7, 7)).unwrap();
        let w = continuity_witness(&form, &pair).unwrap();
        assert_relative_eq!(
            w.constant,
            continuity_constant(&form, &pair).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(w.attained(&form, &pair), w.constant, max_relative = 1e-10);
    }

    #[test]
    fn continuity_is_symmetric_in_slots() {
        let mut s = Sampler::new(4);
        for _ in 0..10 {
            let pair = random_pair(&mut s, 6);
            let form = SesquilinearForm::new(s.complex_matrix(6, 6)).unwrap();
            let m = continuity_constant(&form, &pair).unwrap();
            let mt = continuity_constant(&form.adjoint(), &pair).unwrap();
            assert_relative_eq!(m, mt, max_relative = 1e-12);
        }
    }

    #[test]
    fn ellipticity_examples() {
        let mut s = Sampler::new(5);
        let pair = random_pair(&mut s, 5);
        let form = SesquilinearForm::new(pair.gram_v().clone()).unwrap();
        let cert = ellipticity_constants(&form, &pair, &default_omega_grid(), &tol())
            .unwrap()
            .unwrap();
        assert_eq!(cert.omega, 0.0);
        assert_relative_eq!(cert.alpha, 1.0, max_relative = 1e-12);

        // ratios ‖f‖²_H/‖f‖²_V span [0.1, 1]: ω = 0 fails, ω = 3 restores α = 1.
        let pair = InnerProductPair::new(diag_real(&[1.0, 10.0]), diag_real(&[1.0, 1.0])).unwrap();
        let shifted = SesquilinearForm::new(pair.gram_v() - pair.gram_h() * c(3.0, 0.0)).unwrap();
        let cert = ellipticity_constants(&shifted, &pair, &[0.0, 3.0], &tol())
            .unwrap()
            .unwrap();
        assert_eq!(cert.omega, 3.0);
        assert_relative_eq!(cert.alpha, 1.0, max_relative = 1e-12);

        let zero = SesquilinearForm::zero(2);
        assert!(ellipticity_constants(&zero, &pair, &default_omega_grid(), &tol())
            .unwrap()
            .is_none());
    }

    #[test]
    fn ellipticity_rejects_bad_grid() {
        let pair = InnerProductPair::new(diag_real(&[1.0]), diag_real(&[1.0])).unwrap();
        let form = SesquilinearForm::zero(1);
        assert!(ellipticity_constants(&form, &pair, &[], &tol()).is_err());
        assert!(ellipticity_constants(&form, &pair, &[2.0, 1.0], &tol()).is_err());
    }

    #[test]
    fn coercivity_is_monotone_in_omega() {
        let mut s = Sampler::new(6);
        let pair = random_pair(&mut s, 6);
        let form = SesquilinearForm::new(s.complex_matrix(6, 6)).unwrap();
        let values: Vec<f64> = default_omega_grid()
            .iter()
            .map(|&w| coercivity_at(&form, &pair, w).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn accretivity_examples() {
        let pair = InnerProductPair::new(CMatrix::identity(2, 2), CMatrix::identity(2, 2)).unwrap();
        let id = SesquilinearForm::new(CMatrix::identity(2, 2)).unwrap();
        assert!(accretivity_check(&id, &pair, &tol()).unwrap());
        assert!(!accretivity_check(&id.scaled(c(-1.0, 0.0)), &pair, &tol()).unwrap());
        let nil = SesquilinearForm::new(real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(!accretivity_check(&nil, &pair, &tol()).unwrap());
    }

    #[test]
    fn accretive_both_signs_means_skew() {
        let mut s = Sampler::new(7);
        let pair = random_pair(&mut s, 4);
        let k = s.complex_matrix(4, 4);
        let skew = SesquilinearForm::new(&k - k.adjoint()).unwrap();
        assert!(accretivity_check(&skew, &pair, &tol()).unwrap());
        assert!(accretivity_check(&skew.scaled(c(-1.0, 0.0)), &pair, &tol()).unwrap());
        assert!(max_abs(&hermitian_part(skew.matrix())) < 1e-14);
    }

    #[test]
    fn re_equals_v_inner_examples() {
        let mut s = Sampler::new(8);
        let pair = random_pair(&mut s, 4);
        let gv = pair.gram_v().clone();
        assert!(re_equals_v_inner(
            &SesquilinearForm::new(gv.clone()).unwrap(),
            &pair,
            &tol()
        ));
        let k = hermitian_part(&s.complex_matrix(4, 4));
        let perturbed = SesquilinearForm::new(&gv + k * c(0.0, 1.0)).unwrap();
        assert!(re_equals_v_inner(&perturbed, &pair, &tol()));
        let doubled = SesquilinearForm::new(&gv * c(2.0, 0.0)).unwrap();
        assert!(!re_equals_v_inner(&doubled, &pair, &tol()));
    }

    #[test]
    fn imag_bound_examples() {
        let mut s = Sampler::new(9);
        let pair = random_pair(&mut s, 5);
        let real_sym = SesquilinearForm::new(hermitian_part(&s.real_matrix(5, 5))).unwrap();
        assert_eq!(imag_bound_constant(&real_sym, &pair).unwrap(), 0.0);

        // |Im i|u|²| / (|u|·2|u|) = 1/2
        let pair = InnerProductPair::new(diag_real(&[4.0]), diag_real(&[1.0])).unwrap();
        let form = SesquilinearForm::new(CMatrix::from_element(1, 1, c(0.0, 1.0))).unwrap();
        assert_relative_eq!(imag_bound_constant(&form, &pair).unwrap(), 0.5, max_relative = 1e-9);
    }

    #[test]
    fn imag_bound_dominates_monte_carlo_and_respects_upper_bound() {
        let mut s = Sampler::new(10);
        let pair = random_pair(&mut s, 6);
        let form = SesquilinearForm::new(s.complex_matrix(6, 6)).unwrap();
        let constant = imag_bound_constant(&form, &pair).unwrap();
        let mut sample_max: f64 = 0.0;
        for _ in 0..100_000 {
            let u = s.complex_vector(6);
            let ratio = form.eval(&u, &u).im.abs() / (pair.norm_h(&u) * pair.norm_v(&u));
            sample_max = sample_max.max(ratio);
        }
        assert!(constant >= sample_max, "{constant} < {sample_max}");
        // |u†Ku| ≤ ‖K‖_{V→H'} ‖u‖_V ‖u‖_H
        let k = imaginary_part(form.matrix());
        let upper = cross_continuity_constant(&k, pair.chol_v(), pair.chol_h());
        assert!(constant <= upper + 1e-8, "{constant} > {upper}");
    }

    #[test]
    fn young_shift_examples() {
        assert_eq!(young_shift(0.0, 1.0, 0.3, 1.0).unwrap(), 0.0);
        assert_relative_eq!(young_shift(1.0, 1.0, 0.0, 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(young_shift(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(young_shift(1.0, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn interpolation_scale_endpoints() {
        let mut s = Sampler::new(11);
        let pair = random_pair(&mut s, 5);
        let scale = build_interpolation_scale(&pair, 0.0).unwrap();
        assert!(max_abs(&(&scale.gram_alpha - pair.gram_h())) < 1e-10 * max_abs(pair.gram_h()));

        let mu = [1.0, 3.0, 10.0];
        let pair = InnerProductPair::new(diag_real(&mu), CMatrix::identity(3, 3)).unwrap();
        let near_one = build_interpolation_scale(&pair, 1.0 - 1e-9).unwrap();
        assert!(max_abs(&(near_one.gram_alpha - diag_real(&mu))) < 1e-7);
    }

    #[test]
    fn interpolation_inequality_holds_with_unit_constant() {
        let mut s = Sampler::new(12);
        let pair = random_pair(&mut s, 6);
        let scale = build_interpolation_scale(&pair, 0.5).unwrap();
        for _ in 0..1000 {
            let f = s.complex_vector(6);
            let lhs = scale.norm(&f);
            let rhs = pair.norm_v(&f).powf(0.5) * pair.norm_h(&f).powf(0.5);
            assert!(rhs - lhs >= -1e-12 * rhs, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn perturbed_ellipticity_examples() {
        let scale = InterpolationScale {
            alpha_exp: 0.0,
            gram_alpha: CMatrix::identity(1, 1),
        };
        let a0 = EllipticityCertificate { alpha: 2.0, omega: 0.0 };
        let same = perturbed_ellipticity(&a0, 0.0, 0.0, &scale).unwrap();
        assert_eq!(same, EllipticityCertificate { alpha: 1.0, omega: 0.0 });
        let shifted = perturbed_ellipticity(&a0, 0.4, 0.6, &scale).unwrap();
        assert_relative_eq!(shifted.alpha, 1.0);
        assert_relative_eq!(shifted.omega, 1.0, max_relative = 1e-14);
    }
}
