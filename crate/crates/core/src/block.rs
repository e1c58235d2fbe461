//! First-order reduction of `ü + Au + Bu̇ = 0` as a form on `V × V`.
//!
//! The block form is
//! `𝐚(𝐮, 𝐯) = −(u₂ | v₁)_V + a(u₁, v₂) + b(u₂, v₂)` on `𝐕 = V × V` with pivot
//! space `𝐇 = V × H`, stored as the `2n × 2n` matrix `[[0, −G_V], [S_a, S_b]]`.
//! The operator associated with it on `𝐇` is `𝐀 = G_𝐇⁻¹ S_𝐚`; we keep the
//! generator `G = −𝐀 = [[0, I], [−G_H⁻¹S_a, −G_H⁻¹S_b]]`, so that the
//! evolution reads `u̇₁ = u₂`, `G_H u̇₂ = −(S_a u₁ + S_b u₂)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{
    certify, coercivity_of, continuity_constant, imag_bound_constant, EllipticityCertificate, InnerProductPair,
    SesquilinearForm,
};
use crate::linalg::{
    block_diag, c, gram_inner, hermitian_part, largest_singular_value, max_abs, CMatrix, CVector, Cholesky,
    LinearSolver, Tolerances, ONE,
};
use crate::sampling::{Sampler, SELF_CHECK_SEED};

const ASSEMBLY_SAMPLES: usize = 100;
const PAIRING_SAMPLES: usize = 20;

/// Splits a phase-space vector into its displacement and velocity halves.
pub fn split(x: &CVector) -> (CVector, CVector) {
    let n = x.len() / 2;
    (x.rows(0, n).into_owned(), x.rows(n, n).into_owned())
}

pub fn join(u1: &CVector, u2: &CVector) -> CVector {
    let mut x = CVector::zeros(u1.len() + u2.len());
    x.rows_mut(0, u1.len()).copy_from(u1);
    x.rows_mut(u1.len(), u2.len()).copy_from(u2);
    x
}

/// `Σ |v_i| |S_ij| |u_j|`, the magnitude against which rounding in `v†Su` is judged.
fn magnitude(s: &CMatrix, u: &CVector, v: &CVector) -> f64 {
    let mut total = 0.0;
    for (i, vi) in v.iter().enumerate() {
        let vi = vi.norm();
        if vi == 0.0 {
            continue;
        }
        for (j, uj) in u.iter().enumerate() {
            total += vi * s[(i, j)].norm() * uj.norm();
        }
    }
    total
}

#[derive(Debug, Clone)]
pub struct BlockForm {
    a: SesquilinearForm,
    b: SesquilinearForm,
    pair: InnerProductPair,
    second: InnerProductPair,
    block_pair: InnerProductPair,
    matrix: CMatrix,
}

/// Assembles `𝐚` on `V × V` with pivot `V × H`.
pub fn assemble_block_form(a: SesquilinearForm, b: SesquilinearForm, pair: InnerProductPair) -> Result<BlockForm> {
    let second = pair.clone();
    BlockForm::with_second_slot(a, b, pair, second)
}

impl BlockForm {
    /// Block form whose velocity slot carries its own pair of Gram matrices.
    ///
    /// `pair` supplies the `V` inner product of the coupling term and of the
    /// displacement slot; `second` supplies the norms of the velocity slot.
    /// With `second = pair` this is the plain block form.
    pub fn with_second_slot(
        a: SesquilinearForm,
        b: SesquilinearForm,
        pair: InnerProductPair,
        second: InnerProductPair,
    ) -> Result<Self> {
        let n = pair.dim();
        for found in [a.dim(), b.dim(), second.dim()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        let mut matrix = CMatrix::zeros(2 * n, 2 * n);
        matrix.view_mut((0, n), (n, n)).copy_from(&(-pair.gram_v()));
        matrix.view_mut((n, 0), (n, n)).copy_from(a.matrix());
        matrix.view_mut((n, n), (n, n)).copy_from(b.matrix());
        let block_pair = InnerProductPair::new(
            block_diag(pair.gram_v(), second.gram_v()),
            block_diag(pair.gram_v(), second.gram_h()),
        )?;
        let form = Self {
            a,
            b,
            pair,
            second,
            block_pair,
            matrix,
        };
        form.verify_assembly()?;
        Ok(form)
    }

    fn verify_assembly(&self) -> Result<()> {
        let n = self.dim();
        let mut sampler = Sampler::new(SELF_CHECK_SEED);
        for _ in 0..ASSEMBLY_SAMPLES {
            let u = sampler.complex_vector(2 * n);
            let v = sampler.complex_vector(2 * n);
            let direct = self.eval(&u, &v);
            let terms = self.eval_terms(&u, &v);
            let scale = magnitude(&self.matrix, &u, &v).max(f64::MIN_POSITIVE);
            if (direct - terms).norm() > 1e-12 * scale {
                return Err(Error::Consistency(format!(
                    "block matrix does not reproduce the three-term form (error {:e})",
                    (direct - terms).norm() / scale
                )));
            }
        }
        Ok(())
    }

    /// `−(u₂ | v₁)_V + a(u₁, v₂) + b(u₂, v₂)` evaluated term by term.
    pub fn eval_terms(&self, u: &CVector, v: &CVector) -> Complex64 {
        let (u1, u2) = split(u);
        let (v1, v2) = split(v);
        -gram_inner(self.pair.gram_v(), &u2, &v1) + self.a.eval(&u1, &v2) + self.b.eval(&u2, &v2)
    }

    /// `𝐯† S_𝐚 𝐮`.
    pub fn eval(&self, u: &CVector, v: &CVector) -> Complex64 {
        v.dotc(&(&self.matrix * u))
    }

    /// Half dimension `n`; the block form acts on `2n`-vectors.
    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    pub fn a(&self) -> &SesquilinearForm {
        &self.a
    }

    pub fn b(&self) -> &SesquilinearForm {
        &self.b
    }

    pub fn pair(&self) -> &InnerProductPair {
        &self.pair
    }

    pub fn second_slot(&self) -> &InnerProductPair {
        &self.second
    }

    /// `(G_𝐕, G_𝐇) = (diag(G_V, G_V), diag(G_V, G_H))`.
    pub fn block_pair(&self) -> &InnerProductPair {
        &self.block_pair
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn as_form(&self) -> SesquilinearForm {
        SesquilinearForm::new(self.matrix.clone()).expect("assembled block matrix is finite")
    }
}

/// `sqrt(M_a/2 + M_a·M_b + max{M_a², 1, M_b²})`.
pub fn block_continuity_bound(ma: f64, mb: f64) -> f64 {
    (ma / 2.0 + ma * mb + ma.powi(2).max(1.0).max(mb.powi(2))).sqrt()
}

/// Spectral norm of `[[0, 1], [M_a, M_b]]`.
///
/// From `|𝐚(𝐮,𝐯)| ≤ ‖u₂‖‖v₁‖ + M_a‖u₁‖‖v₂‖ + M_b‖u₂‖‖v₂‖` this bounds the
/// block continuity constant for every pair of forms with the given
/// constants, and is attained when `a`, `b` are multiples of `(·|·)_V`.
pub fn composite_block_continuity_bound(ma: f64, mb: f64) -> f64 {
    let trace = ma * ma + 1.0 + mb * mb;
    let det = ma * ma;
    ((trace + (trace * trace - 4.0 * det).max(0.0).sqrt()) / 2.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConstants {
    /// Continuity constant of `a` on `V × V`.
    pub ma_direct: f64,
    /// Continuity constant of `b` on `V × V`.
    pub mb_direct: f64,
    /// `sup |Im b(u,u)| / (‖u‖_H ‖u‖_V)`.
    pub mb_imag: f64,
    /// Continuity constant of `𝐚` on `𝐕 × 𝐕`.
    pub mblock_direct: f64,
    /// Closed-form constant `block_continuity_bound(ma, mb)`.
    pub mblock_bound: f64,
    /// `composite_block_continuity_bound(ma, mb)`.
    pub mblock_composite: f64,
    /// `sup |Im 𝐚(𝐮,𝐮)| / (‖𝐮‖_𝐇 ‖𝐮‖_𝐕)`.
    pub block_imag_direct: f64,
    /// `1 + M_a + M_b` with the continuity constant of `b`.
    pub block_imag_bound: f64,
    /// `1 + M_a + M_b` with the imaginary-part constant of `b`.
    pub block_imag_bound_imag: f64,
}

impl BlockConstants {
    pub fn continuity_within_bound(&self, slack: f64) -> bool {
        self.mblock_direct <= self.mblock_bound + slack
    }

    pub fn continuity_within_composite(&self, slack: f64) -> bool {
        self.mblock_direct <= self.mblock_composite + slack
    }

    pub fn imag_within_bound(&self, slack: f64) -> bool {
        self.block_imag_direct <= self.block_imag_bound + slack
    }

    pub fn imag_within_imag_bound(&self, slack: f64) -> bool {
        self.block_imag_direct <= self.block_imag_bound_imag + slack
    }
}

pub fn block_constants(bf: &BlockForm) -> Result<BlockConstants> {
    let ma = continuity_constant(&bf.a, &bf.pair)?;
    let mb = continuity_constant(&bf.b, &bf.pair)?;
    let mb_imag = imag_bound_constant(&bf.b, &bf.pair)?;
    let block = bf.as_form();
    let mblock_direct = continuity_constant(&block, &bf.block_pair)?;
    let block_imag_direct = imag_bound_constant(&block, &bf.block_pair)?;
    Ok(BlockConstants {
        ma_direct: ma,
        mb_direct: mb,
        mb_imag,
        mblock_direct,
        mblock_bound: block_continuity_bound(ma, mb),
        mblock_composite: composite_block_continuity_bound(ma, mb),
        block_imag_direct,
        block_imag_bound: 1.0 + ma + mb,
        block_imag_bound_imag: 1.0 + ma + mb_imag,
    })
}

/// `α(ω)` of `𝐚` with respect to `(G_𝐕, G_𝐇)`.
pub fn block_coercivity_at(bf: &BlockForm, omega: f64) -> Result<f64> {
    coercivity_of(
        &hermitian_part(&bf.matrix),
        bf.block_pair.gram_h(),
        bf.block_pair.chol_v(),
        omega,
    )
}

/// Certificate for `Re 𝐚(𝐮,𝐮) ≥ α‖𝐮‖²_𝐕 − ω‖𝐮‖²_𝐇`.
pub fn block_ellipticity(
    bf: &BlockForm,
    omega_grid: &[f64],
    tol: &Tolerances,
) -> Result<Option<EllipticityCertificate>> {
    let herm = hermitian_part(&bf.matrix);
    certify(omega_grid, bf.block_pair.h_floor(), tol.alpha_min, |omega| {
        coercivity_of(&herm, bf.block_pair.gram_h(), bf.block_pair.chol_v(), omega)
    })
}

/// The generator `G = −𝐀` as a dense matrix together with the `𝐇` geometry.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    matrix: CMatrix,
    omega: f64,
    gram_h: CMatrix,
    chol_h: Cholesky,
    velocity_gram: Option<LinearSolver>,
}

impl BlockOperator {
    /// An arbitrary generator on a space with Gram matrix `gram_h`.
    pub fn from_parts(matrix: CMatrix, gram_h: CMatrix) -> Result<Self> {
        if matrix.shape() != gram_h.shape() {
            return Err(Error::DimensionMismatch {
                expected: gram_h.nrows(),
                found: matrix.nrows(),
            });
        }
        crate::linalg::ensure_finite(&matrix, "generator")?;
        let chol_h = Cholesky::new(&gram_h)?;
        Ok(Self {
            matrix,
            omega: 0.0,
            gram_h,
            chol_h,
            velocity_gram: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn with_shift(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    /// `G − ω·I`.
    pub fn shifted_matrix(&self) -> CMatrix {
        &self.matrix - CMatrix::identity(self.dim(), self.dim()) * c(self.omega, 0.0)
    }

    pub fn gram_h(&self) -> &CMatrix {
        &self.gram_h
    }

    pub fn chol_h(&self) -> &Cholesky {
        &self.chol_h
    }

    /// `‖𝐱‖²_𝐇`.
    pub fn energy(&self, x: &CVector) -> f64 {
        gram_inner(&self.gram_h, x, x).re
    }

    /// `G` in `𝐇`-orthonormal coordinates, where the `𝐇` operator norm is the spectral norm.
    pub fn orthonormal_matrix(&self) -> CMatrix {
        self.chol_h.similarity(&self.matrix)
    }

    /// Maps an `H`-load vector `f` (moments `(f | φ_i)`) of the velocity slot
    /// to the coefficient vector `G_H⁻¹ f`.
    pub fn velocity_coefficients(&self, load: &CVector) -> Result<CVector> {
        match &self.velocity_gram {
            Some(solver) => solver.solve(load),
            None => Err(Error::Precondition("generator has no velocity slot structure".into())),
        }
    }
}

pub(crate) fn generator_matrix(sa: &CMatrix, sb: &CMatrix, velocity_gram: &LinearSolver) -> Result<CMatrix> {
    let n = sa.nrows();
    let a_op = velocity_gram.solve_matrix(sa)?;
    let b_op = velocity_gram.solve_matrix(sb)?;
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    g.view_mut((0, n), (n, n)).fill_with_identity();
    g.view_mut((n, 0), (n, n)).copy_from(&(-a_op));
    g.view_mut((n, n), (n, n)).copy_from(&(-b_op));
    Ok(g)
}

/// Extracts the generator and checks `𝐚(𝐮,𝐯) = −(G𝐮 | 𝐯)_𝐇` on sampled pairs.
pub fn extract_operator(bf: &BlockForm) -> Result<BlockOperator> {
    let velocity_gram = LinearSolver::new(bf.second.gram_h())?;
    let g = generator_matrix(bf.a.matrix(), bf.b.matrix(), &velocity_gram)?;
    let gram_h = bf.block_pair.gram_h().clone();
    let op = BlockOperator {
        matrix: g,
        omega: 0.0,
        chol_h: bf.block_pair.chol_h().clone(),
        gram_h,
        velocity_gram: Some(velocity_gram),
    };
    let mut sampler = Sampler::new(SELF_CHECK_SEED.rotate_left(17));
    let n = bf.dim();
    for _ in 0..PAIRING_SAMPLES {
        let u = sampler.complex_vector(2 * n);
        let v = sampler.complex_vector(2 * n);
        let form = bf.eval(&u, &v);
        let pairing = -gram_inner(&op.gram_h, &(&op.matrix * &u), &v);
        let scale = magnitude(&bf.matrix, &u, &v).max(f64::MIN_POSITIVE);
        if (form - pairing).norm() > 1e-10 * scale {
            return Err(Error::Consistency(format!(
                "generator does not represent the block form (relative error {:e})",
                (form - pairing).norm() / scale
            )));
        }
    }
    Ok(op)
}

/// Checks `−G𝐮 = (−u₂, B(ρu₁ + u₂))` when `a = ρ·b`; returns the largest
/// relative residual of the velocity row over sampled states.
pub fn rho_characterization_check(bf: &BlockForm, rho: Complex64, tol: &Tolerances) -> Result<f64> {
    let sa = bf.a.matrix();
    let sb = bf.b.matrix();
    let scale = max_abs(sa).max(rho.norm() * max_abs(sb));
    let mismatch = max_abs(&(sa - sb * rho));
    if mismatch > tol.identity_rel * scale {
        return Err(Error::Precondition(format!(
            "a = rho·b fails by {mismatch:e} (scale {scale:e})"
        )));
    }
    let op = extract_operator(bf)?;
    let velocity_gram = LinearSolver::new(bf.second.gram_h())?;
    let n = bf.dim();
    let mut sampler = Sampler::new(SELF_CHECK_SEED ^ 0xabcd);
    let mut worst: f64 = 0.0;
    for _ in 0..ASSEMBLY_SAMPLES {
        let u = sampler.complex_vector(2 * n);
        let (u1, u2) = split(&u);
        let applied = -(op.matrix() * &u);
        let (top, bottom) = split(&applied);
        let expected = velocity_gram.solve(&(sb * (&u1 * rho + &u2)))?;
        let top_residual = (&top + &u2).norm() / u2.norm().max(f64::MIN_POSITIVE);
        let denom = expected.norm();
        let bottom_residual = if denom == 0.0 {
            bottom.norm()
        } else {
            (&bottom - &expected).norm() / denom
        };
        worst = worst.max(top_residual).max(bottom_residual);
    }
    Ok(worst)
}

/// `b` Hermitian and `a = −(·|·)_V`.
pub fn selfadjointness_check(bf: &BlockForm, tol: &Tolerances) -> bool {
    let sb = bf.b.matrix();
    let b_hermitian = max_abs(&(sb - sb.adjoint())) <= tol.identity_rel * max_abs(sb);
    let gv = bf.pair.gram_v();
    let a_matches = max_abs(&(bf.a.matrix() + gv)) <= tol.identity_rel * max_abs(gv);
    b_hermitian && a_matches
}

/// Whether `𝐚(𝐮,𝐯) = conj 𝐚(𝐯,𝐮)`, read off the assembled matrix.
pub fn block_matrix_is_hermitian(bf: &BlockForm, tol: &Tolerances) -> bool {
    let m = &bf.matrix;
    max_abs(&(m - m.adjoint())) <= tol.identity_rel * max_abs(m)
}

#[derive(Debug, Clone)]
pub struct NoncoercivityWitness {
    pub state: CVector,
    pub re_form: f64,
    pub norm_v_sq: f64,
}

impl NoncoercivityWitness {
    pub fn holds(&self) -> bool {
        self.norm_v_sq > 0.0 && self.re_form.abs() <= 1e-14 * self.norm_v_sq
    }
}

/// Evaluates `Re 𝐚(𝐮,𝐮)` at `𝐮 = (u₁, 0)`; `u₁` defaults to the first unit vector.
pub fn noncoercivity_witness(bf: &BlockForm, u1: Option<&CVector>) -> Result<NoncoercivityWitness> {
    let n = bf.dim();
    let u1 = match u1 {
        Some(u) if u.len() == n => u.clone(),
        Some(u) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u.len(),
            })
        }
        None => {
            let mut e = CVector::zeros(n);
            e[0] = ONE;
            e
        }
    };
    let state = join(&u1, &CVector::zeros(n));
    let re_form = bf.eval(&state, &state).re;
    let norm_v_sq = gram_inner(bf.block_pair.gram_v(), &state, &state).re;
    Ok(NoncoercivityWitness {
        state,
        re_form,
        norm_v_sq,
    })
}

/// Spectral norm of a `2 × 2` real matrix given row-major; used by tests of the bounds.
pub fn spectral_norm_2x2(entries: [[f64; 2]; 2]) -> f64 {
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(entries[0][0], 0.0),
            c(entries[0][1], 0.0),
            c(entries[1][0], 0.0),
            c(entries[1][1], 0.0),
        ],
    );
    largest_singular_value(&m)
}
