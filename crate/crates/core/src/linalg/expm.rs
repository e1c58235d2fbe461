//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degree selection follows Higham (2005): the smallest degree
//! m ∈ {3, 5, 7, 9, 13} whose backward-error threshold θ_m covers the 1-norm
//! is used; otherwise the matrix is scaled by 2^-s into the θ_13 ball and the
//! degree-13 approximant is squared s times.

use num_complex::Complex64;

use super::{c, one_norm, CMatrix, LinearSolver, Tolerances};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const MAX_SQUARINGS: i32 = 1024;

/// Coefficients of the numerator of the [m/m] Padé approximant to e^x,
/// normalized so that the constant term is 1.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(m + 1);
    let mut ci = 1.0;
    coeffs.push(ci);
    for i in 0..m {
        ci *= (m - i) as f64 / ((2 * m - i) as f64 * (i + 1) as f64);
        coeffs.push(ci);
    }
    coeffs
}

fn scaled_identity(n: usize, s: f64) -> CMatrix {
    CMatrix::identity(n, n) * c(s, 0.0)
}

fn pade(x: &CMatrix, m: usize) -> Result<CMatrix> {
    let n = x.nrows();
    let coeffs = pade_coefficients(m);
    let x2 = x * x;
    // even part V(X²) and odd part X·W(X²), both by Horner in X².
    let horner = |start: usize| -> CMatrix {
        let idx: Vec<usize> = (start..=m).step_by(2).collect();
        let mut acc = scaled_identity(n, coeffs[*idx.last().unwrap()]);
        for &k in idx.iter().rev().skip(1) {
            acc = &acc * &x2 + scaled_identity(n, coeffs[k]);
        }
        acc
    };
    let v = horner(0);
    let u = x * horner(1);
    let solver = LinearSolver::with_tolerances(
        &(&v - &u),
        &Tolerances {
            max_condition: f64::INFINITY,
            ..Tolerances::DEFAULT
        },
    )?;
    solver.solve_matrix(&(&v + &u))
}

/// Computes `exp(t·M)`.
pub fn matrix_exponential(m: &CMatrix, t: f64) -> Result<CMatrix> {
    let n = super::ensure_square(m)?;
    if !t.is_finite() {
        return Err(Error::Domain(format!("time {t} is not finite")));
    }
    super::ensure_finite(m, "matrix exponential argument")?;
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let x = m * Complex64::new(t, 0.0);
    let norm = one_norm(&x);
    if !norm.is_finite() {
        return Err(Error::Range { norm });
    }
    if norm == 0.0 {
        return Ok(CMatrix::identity(n, n));
    }
    for &(degree, theta) in &THETA[..4] {
        if norm <= theta {
            return pade(&x, degree);
        }
    }
    let theta13 = THETA[4].1;
    let s = (norm / theta13).log2().ceil().max(0.0) as i32;
    if s > MAX_SQUARINGS {
        return Err(Error::Range { norm });
    }
    let scaled = &x * c(2f64.powi(-s), 0.0);
    let mut r = pade(&scaled, 13).map_err(|_| Error::Range { norm })?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(r)
    } else {
        Err(Error::Range { norm })
    }
}
