//! Spectrum, field of values and resolvent estimates of block systems.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::block::{BlockForm, BlockOperator};
use crate::error::{Error, Result};
use crate::forms::{continuity_constant, imag_bound_constant, EllipticityCertificate};
use crate::linalg::{c, gram_norm_sq, hermitian_geig_factored, hermitian_part, CMatrix, CVector, Cholesky, I};

pub const DEFAULT_ANGLE_COUNT: usize = 256;
const SCHUR_ITERATIONS: usize = 100_000;

/// Eigenvalues of the generator, ordered by real part and then imaginary part.
pub fn spectrum(op: &BlockOperator) -> Result<Vec<Complex64>> {
    eigenvalues(op.matrix())
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_ITERATIONS)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let values = schur
        .eigenvalues()
        .ok_or_else(|| Error::Eigen("Schur form is not triangular".into()))?;
    let mut values: Vec<Complex64> = values.iter().copied().collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(values)
}

#[derive(Debug, Clone)]
pub struct NumericalRangeSample {
    pub angles: Vec<f64>,
    pub support_points: Vec<Complex64>,
    /// Maximizing vector for each angle, normalized to unit `𝐇`-norm.
    pub vectors: Vec<CVector>,
    /// `max Re(e^{iθ} z)` over the field of values, for each angle.
    pub support_values: Vec<f64>,
}

impl NumericalRangeSample {
    /// Whether `z` lies in the intersection of the supporting half-planes, up to `slack`.
    pub fn encloses(&self, z: Complex64, slack: f64) -> bool {
        self.angles
            .iter()
            .zip(&self.support_values)
            .all(|(&theta, &h)| (Complex64::from_polar(1.0, theta) * z).re <= h + slack)
    }
}

/// Support points of the `𝐇`-normalized field of values of `𝐚`.
pub fn numerical_range(bf: &BlockForm, angle_count: usize) -> Result<NumericalRangeSample> {
    field_of_values(bf.matrix(), bf.block_pair().chol_h(), angle_count)
}

/// Support points of `{ u†Su / u†Gu }` where `G = L L†` is given by `chol`.
pub fn field_of_values(s: &CMatrix, chol: &Cholesky, angle_count: usize) -> Result<NumericalRangeSample> {
    if angle_count < 8 {
        return Err(Error::Domain(format!("angle count {angle_count} is below 8")));
    }
    let gram = chol.lower() * chol.lower().adjoint();
    let angles: Vec<f64> = (0..angle_count)
        .map(|j| 2.0 * PI * j as f64 / angle_count as f64)
        .collect();
    let results: Vec<Result<(Complex64, CVector, f64)>> = angles
        .par_iter()
        .map(|&theta| {
            let rotated = hermitian_part(&(s * Complex64::from_polar(1.0, theta)));
            let eig = hermitian_geig_factored(&rotated, chol)?;
            let top = eig.values.len() - 1;
            let mut u = eig.vector(top);
            let scale = gram_norm_sq(&gram, &u).sqrt();
            u /= c(scale, 0.0);
            let z = u.dotc(&(s * &u)) / c(gram_norm_sq(&gram, &u), 0.0);
            Ok((z, u, eig.values[top]))
        })
        .collect();
    let mut sample = NumericalRangeSample {
        angles,
        support_points: Vec::with_capacity(angle_count),
        vectors: Vec::with_capacity(angle_count),
        support_values: Vec::with_capacity(angle_count),
    };
    for r in results {
        let (z, u, h) = r?;
        sample.support_points.push(z);
        sample.vectors.push(u);
        sample.support_values.push(h);
    }
    Ok(sample)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorCheck {
    pub max_angle: f64,
    /// `arctan(M/α)`.
    pub bound_angle: f64,
    /// `π/2 − arctan M`, the analyticity angle expressed with the continuity constant alone.
    pub generation_angle: f64,
    pub pass: bool,
}

pub fn sector_check(
    bf: &BlockForm,
    cert: &EllipticityCertificate,
    sample: &NumericalRangeSample,
) -> Result<SectorCheck> {
    let m = continuity_constant(&bf.as_form(), bf.block_pair())?;
    Ok(sector_check_with(m, cert, sample))
}

/// Sector containment with a given continuity constant `m`.
pub fn sector_check_with(m: f64, cert: &EllipticityCertificate, sample: &NumericalRangeSample) -> SectorCheck {
    let bound_angle = (m / cert.alpha).atan();
    let max_angle = sample
        .support_points
        .iter()
        .map(|z| (z + cert.omega).arg().abs())
        .fold(0.0, f64::max);
    SectorCheck {
        max_angle,
        bound_angle,
        generation_angle: FRAC_PI_2 - m.atan(),
        pass: max_angle <= bound_angle + 1e-8,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParabolaCheck {
    pub constant: f64,
    /// Smallest `(C²/α)(Re z + ω) − (Im z)²` over the sample.
    pub margin: f64,
    pub pass: bool,
}

pub fn parabola_check(
    bf: &BlockForm,
    cert: &EllipticityCertificate,
    sample: &NumericalRangeSample,
) -> Result<ParabolaCheck> {
    let constant = imag_bound_constant(&bf.as_form(), bf.block_pair())?;
    Ok(parabola_check_with(constant, cert, sample))
}

/// `(Im z)² ≤ (C²/α)(Re z + ω)` for every sampled `z`, with a given constant `C`.
pub fn parabola_check_with(
    constant: f64,
    cert: &EllipticityCertificate,
    sample: &NumericalRangeSample,
) -> ParabolaCheck {
    let k = constant * constant / cert.alpha;
    let margin = sample
        .support_points
        .iter()
        .map(|z| k * (z.re + cert.omega) - z.im * z.im)
        .fold(f64::INFINITY, f64::min);
    ParabolaCheck {
        constant,
        margin,
        pass: margin >= -1e-8,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyResponseCurve {
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub sup_norm: f64,
}

/// `±` logarithmic grid with `per_sign` points per sign, `|λ| ∈ [lo, hi]`, ascending.
pub fn log_lambda_grid(lo: f64, hi: f64, per_sign: usize) -> Vec<f64> {
    let positive: Vec<f64> = if per_sign == 1 {
        vec![lo]
    } else {
        let (a, b) = (lo.log10(), hi.log10());
        (0..per_sign)
            .map(|k| 10f64.powf(a + (b - a) * k as f64 / (per_sign - 1) as f64))
            .collect()
    };
    positive
        .iter()
        .rev()
        .map(|&x| -x)
        .chain(positive.iter().copied())
        .collect()
}

pub fn default_lambda_grid() -> Vec<f64> {
    log_lambda_grid(1e-2, 1e4, 200)
}

/// `‖λ (iλ − (G − ω))⁻¹‖_𝐇` over the grid.
pub fn frequency_response(op: &BlockOperator, lambda_grid: &[f64]) -> Result<FrequencyResponseCurve> {
    if let Some(&bad) = lambda_grid.iter().find(|l| **l == 0.0 || !l.is_finite()) {
        return Err(Error::Domain(format!("lambda grid contains {bad}")));
    }
    let shifted = op.chol_h().similarity(&op.shifted_matrix());
    let n = shifted.nrows();
    let norms: Vec<Result<f64>> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let resolvent_inverse = CMatrix::identity(n, n) * (I * lambda) - &shifted;
            let sv = resolvent_inverse.singular_values();
            let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
            let smax = sv.iter().copied().fold(0.0, f64::max);
            if !(smin > 1e-14 * smax.max(1.0)) {
                return Err(Error::Resolvent { lambda });
            }
            Ok(lambda.abs() / smin)
        })
        .collect();
    let norms = norms.into_iter().collect::<Result<Vec<f64>>>()?;
    let sup_norm = norms.iter().copied().fold(0.0, f64::max);
    Ok(FrequencyResponseCurve {
        lambdas: lambda_grid.to_vec(),
        norms,
        sup_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{assemble_block_form, extract_operator};
    use crate::forms::{InnerProductPair, SesquilinearForm};
    use crate::linalg::diag_real;
    use crate::sampling::Sampler;
    use approx::assert_relative_eq;

    fn scalar_block(a: f64, b: f64) -> BlockForm {
        let pair = InnerProductPair::new(diag_real(&[1.0]), diag_real(&[1.0])).unwrap();
        assemble_block_form(
            SesquilinearForm::new(diag_real(&[a])).unwrap(),
            SesquilinearForm::new(diag_real(&[b])).unwrap(),
            pair,
        )
        .unwrap()
    }

    fn assert_spectrum(values: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(values.len(), want.len());
        for (v, w) in values.iter().zip(want) {
            assert!((v - w).norm() < tol, "{v} vs {w}");
        }
    }

    #[test]
    fn scalar_spectra() {
        let op = extract_operator(&scalar_block(1.0, 2.0)).unwrap();
        assert_spectrum(&spectrum(&op).unwrap(), &[c(-1.0, 0.0), c(-1.0, 0.0)], 1e-7);
        let op = extract_operator(&scalar_block(1.0, 0.0)).unwrap();
        assert_spectrum(&spectrum(&op).unwrap(), &[c(0.0, -1.0), c(0.0, 1.0)], 1e-12);
        let op = extract_operator(&scalar_block(0.0, 1.0)).unwrap();
        assert_spectrum(&spectrum(&op).unwrap(), &[c(-1.0, 0.0), c(0.0, 0.0)], 1e-12);
    }

    #[test]
    fn hermitian_psd_range_is_real_nonnegative() {
        let mut s = Sampler::new(41);
        let b = s.complex_matrix(5, 5);
        let m = &b * b.adjoint();
        let chol = Cholesky::new(&s.hpd_matrix(5, 1.0)).unwrap();
        let sample = field_of_values(&m, &chol, 32).unwrap();
        for z in &sample.support_points {
            assert!(z.im.abs() < 1e-10 && z.re >= -1e-10);
        }
    }

    #[test]
    fn witness_direction_reaches_imaginary_axis() {
        let sample = numerical_range(&scalar_block(1.0, 1.0), 256).unwrap();
        let leftmost = sample.support_points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        assert!(leftmost.abs() < 1e-3, "{leftmost}");
        assert!(sample.encloses(c(0.0, 0.0), 1e-12));
    }

    #[test]
    fn scalar_imaginary_form() {
        let s = CMatrix::from_element(1, 1, I);
        let chol = Cholesky::new(&diag_real(&[1.0])).unwrap();
        let sample = field_of_values(&s, &chol, 8).unwrap();
        for z in &sample.support_points {
            assert!((z - I).norm() < 1e-15);
        }
        assert_eq!(
            field_of_values(&s, &chol, 7).unwrap_err(),
            Error::Domain("angle count 7 is below 8".into())
        );
    }

    #[test]
    fn support_points_are_realized() {
        let mut s = Sampler::new(42);
        let gh = s.hpd_matrix(4, 0.5);
        let gv = s.hpd_matrix(4, 0.5) + &gh;
        let pair = InnerProductPair::new(gv, gh).unwrap();
        let bf = assemble_block_form(
            SesquilinearForm::new(s.complex_matrix(4, 4)).unwrap(),
            SesquilinearForm::new(s.complex_matrix(4, 4)).unwrap(),
            pair,
        )
        .unwrap();
        let sample = numerical_range(&bf, 64).unwrap();
        for (z, u) in sample.support_points.iter().zip(&sample.vectors) {
            assert_relative_eq!(bf.block_pair().norm_h(u), 1.0, max_relative = 1e-12);
            assert!((bf.eval(u, u) - z).norm() < 1e-10);
        }
    }

    #[test]
    fn spectrum_lies_in_field_of_values() {
        let mut s = Sampler::new(43);
        let gh = s.hpd_matrix(3, 0.5);
        let gv = s.hpd_matrix(3, 0.5) + &gh;
        let pair = InnerProductPair::new(gv, gh).unwrap();
        let bf = assemble_block_form(
            SesquilinearForm::new(s.complex_matrix(3, 3)).unwrap(),
            SesquilinearForm::new(s.complex_matrix(3, 3)).unwrap(),
            pair,
        )
        .unwrap();
        let op = extract_operator(&bf).unwrap();
        let sample = numerical_range(&bf, 256).unwrap();
        for mu in spectrum(&op).unwrap() {
            assert!(sample.encloses(-mu, 1e-9), "{mu}");
        }
    }

    #[test]
    fn scalar_frequency_response() {
        let op = BlockOperator::from_parts(diag_real(&[-1.0]), diag_real(&[1.0])).unwrap();
        let grid = default_lambda_grid();
        let curve = frequency_response(&op, &grid).unwrap();
        for (l, n) in curve.lambdas.iter().zip(&curve.norms) {
            assert_relative_eq!(*n, l.abs() / (1.0 + l * l).sqrt(), max_relative = 1e-12);
        }
        assert!(curve.sup_norm < 1.0 && curve.sup_norm > 1.0 - 1e-8);
        let small = frequency_response(&op, &[1e-8]).unwrap();
        assert!(small.norms[0] < 1e-7);
    }

    #[test]
    fn resolvent_singularity_reports_lambda() {
        let op = BlockOperator::from_parts(CMatrix::from_element(1, 1, I * 2.0), diag_real(&[1.0])).unwrap();
        let err = frequency_response(&op, &[1.0, 2.0]).unwrap_err();
        assert_eq!(err, Error::Resolvent { lambda: 2.0 });
        assert!(matches!(frequency_response(&op, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn grid_shape() {
        let grid = default_lambda_grid();
        assert_eq!(grid.len(), 400);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_relative_eq!(grid[0], -1e4, max_relative = 1e-12);
        assert_relative_eq!(grid[200], 1e-2, max_relative = 1e-12);
    }
}
