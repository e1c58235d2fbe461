//! Time stepping of `𝐮̇ = G𝐮` and its semilinear and time-dependent variants.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::block::{generator_matrix, join, split, BlockOperator};
use crate::error::{Error, Result};
use crate::forms::{certify, coercivity_of, EllipticityCertificate, InnerProductPair};
use crate::linalg::{
    block_diag, c, gram_norm_sq, hermitian_part, largest_singular_value, matrix_exponential, CMatrix, CVector,
    LinearSolver, Tolerances,
};

/// Displacement and velocity coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u1: CVector,
    pub u2: CVector,
}

impl State {
    pub fn new(u1: CVector, u2: CVector) -> Result<Self> {
        if u1.len() != u2.len() {
            return Err(Error::DimensionMismatch {
                expected: u1.len(),
                found: u2.len(),
            });
        }
        if u1
            .iter()
            .chain(u2.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("state"));
        }
        Ok(Self { u1, u2 })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            u1: CVector::zeros(n),
            u2: CVector::zeros(n),
        }
    }

    pub fn from_vector(x: &CVector) -> Self {
        let (u1, u2) = split(x);
        Self { u1, u2 }
    }

    pub fn to_vector(&self) -> CVector {
        join(&self.u1, &self.u2)
    }

    pub fn dim(&self) -> usize {
        self.u1.len()
    }

    pub fn max_imag(&self) -> f64 {
        self.u1
            .iter()
            .chain(self.u2.iter())
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `‖𝐮(t)‖²_𝐇`.
    pub energies: Vec<f64>,
    pub semigroup_norms: Option<Vec<f64>>,
    /// Largest `|Im|` entry of each state.
    pub reality_drift: Vec<f64>,
}

impl TrajectoryRecord {
    fn start(t0: f64, s0: State, energy: f64) -> Self {
        let drift = s0.max_imag();
        Self {
            times: vec![t0],
            states: vec![s0],
            energies: vec![energy],
            semigroup_norms: None,
            reality_drift: vec![drift],
        }
    }

    fn push(&mut self, t: f64, s: State, energy: f64) {
        self.reality_drift.push(s.max_imag());
        self.times.push(t);
        self.states.push(s);
        self.energies.push(energy);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_reality_drift(&self) -> f64 {
        self.reality_drift.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactExponential,
    CrankNicolson,
}

fn validate_times(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::Domain("time list is empty".into())),
        Some(&t0) if t0 != 0.0 => return Err(Error::Domain(format!("times start at {t0}, not 0"))),
        _ => {}
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("times must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn check_state(op: &BlockOperator, s0: &State) -> Result<()> {
    if 2 * s0.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim() / 2,
            found: s0.dim(),
        });
    }
    Ok(())
}

fn guard(x: &CVector, step: usize, last_time: f64, limit: f64) -> Result<()> {
    let norm = x.norm();
    if !norm.is_finite() || norm > limit {
        return Err(Error::BlowUp { step, last_time, limit });
    }
    Ok(())
}

fn step_error(dt: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::Step {
        dt,
        source: Box::new(e),
    }
}

/// One-step maps cached by step length.
struct Stepper<'a> {
    g: &'a CMatrix,
    method: Method,
    exact: HashMap<u64, CMatrix>,
    implicit: HashMap<u64, (LinearSolver, CMatrix)>,
}

impl<'a> Stepper<'a> {
    fn new(g: &'a CMatrix, method: Method) -> Self {
        Self {
            g,
            method,
            exact: HashMap::new(),
            implicit: HashMap::new(),
        }
    }

    fn advance(&mut self, x: &CVector, dt: f64) -> Result<CVector> {
        let key = dt.to_bits();
        let n = self.g.nrows();
        match self.method {
            Method::ExactExponential => {
                if !self.exact.contains_key(&key) {
                    let e = matrix_exponential(self.g, dt).map_err(step_error(dt))?;
                    self.exact.insert(key, e);
                }
                Ok(&self.exact[&key] * x)
            }
            Method::CrankNicolson => {
                if !self.implicit.contains_key(&key) {
                    let half = self.g * c(dt / 2.0, 0.0);
                    let id = CMatrix::identity(n, n);
                    let solver = LinearSolver::new(&(&id - &half)).map_err(step_error(dt))?;
                    self.implicit.insert(key, (solver, id + half));
                }
                let (solver, explicit) = &self.implicit[&key];
                solver.solve(&(explicit * x)).map_err(step_error(dt))
            }
        }
    }
}

/// Propagates `s0` through `times` (starting at 0) with the given method.
pub fn propagate_linear(op: &BlockOperator, s0: &State, times: &[f64], method: Method) -> Result<TrajectoryRecord> {
    validate_times(times)?;
    check_state(op, s0)?;
    let limit = Tolerances::DEFAULT.blowup_norm;
    let mut stepper = Stepper::new(op.matrix(), method);
    let mut x = s0.to_vector();
    let mut record = TrajectoryRecord::start(times[0], s0.clone(), op.energy(&x));
    for (k, w) in times.windows(2).enumerate() {
        x = stepper.advance(&x, w[1] - w[0])?;
        guard(&x, k + 1, w[0], limit)?;
        record.push(w[1], State::from_vector(&x), op.energy(&x));
    }
    Ok(record)
}

/// `‖e^{tG}‖_𝐇` for each `t`.
pub fn semigroup_norm_curve(op: &BlockOperator, times: &[f64]) -> Result<Vec<f64>> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Domain("semigroup times must be finite and nonnegative".into()));
    }
    let g = op.orthonormal_matrix();
    times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                Ok(1.0)
            } else {
                Ok(largest_singular_value(&matrix_exponential(&g, t)?))
            }
        })
        .collect()
}

/// Largest imaginary entry met while propagating `s0` exactly.
pub fn reality_drift(op: &BlockOperator, s0: &State, times: &[f64]) -> Result<f64> {
    Ok(propagate_linear(op, s0, times, Method::ExactExponential)?.max_reality_drift())
}

/// Right-hand side `f(t, u₁, u₂)` of the velocity equation, as moments against the basis.
pub trait Nonlinearity {
    fn eval(&self, t: f64, u1: &CVector, u2: &CVector) -> CVector;
}

impl<F> Nonlinearity for F
where
    F: Fn(f64, &CVector, &CVector) -> CVector,
{
    fn eval(&self, t: f64, u1: &CVector, u2: &CVector) -> CVector {
        self(t, u1, u2)
    }
}

/// `e^{dt·G}` and `∫₀^{dt} e^{sG} ds`, read off the exponential of `[[G, I], [0, 0]]·dt`.
fn exponential_euler_maps(g: &CMatrix, dt: f64) -> Result<(CMatrix, CMatrix)> {
    let n = g.nrows();
    let mut aug = CMatrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(g);
    aug.view_mut((0, n), (n, n)).fill_with_identity();
    let e = matrix_exponential(&aug, dt)?;
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, n)).into_owned()))
}

/// Exponential Euler on `[0, t_end]`; the last step is shortened to land on `t_end`.
pub fn propagate_semilinear<N: Nonlinearity + ?Sized>(
    op: &BlockOperator,
    nonlinearity: &N,
    s0: &State,
    dt: f64,
    t_end: f64,
) -> Result<TrajectoryRecord> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("time step {dt} is not positive")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("final time {t_end} is not admissible")));
    }
    check_state(op, s0)?;
    let limit = Tolerances::DEFAULT.blowup_norm;
    let n = s0.dim();
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut maps: HashMap<u64, (CMatrix, CMatrix)> = HashMap::new();
    let mut x = s0.to_vector();
    let mut record = TrajectoryRecord::start(0.0, s0.clone(), op.energy(&x));
    let mut t = 0.0;
    for k in 0..steps {
        let next = if k + 1 == steps { t_end } else { (k + 1) as f64 * dt };
        let h = next - t;
        let key = h.to_bits();
        let (e, phi) = &*match maps.entry(key) {
            Entry::Occupied(slot) => slot.into_mut(),
            Entry::Vacant(slot) => slot.insert(exponential_euler_maps(op.matrix(), h).map_err(step_error(h))?),
        };
        let (u1, u2) = split(&x);
        let load = nonlinearity.eval(t, &u1, &u2);
        if load.len() != n || load.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Nonlinearity { step: k + 1 });
        }
        let forcing = join(&CVector::zeros(n), &op.velocity_coefficients(&load)?);
        x = e * &x + phi * forcing;
        guard(&x, k + 1, t, limit)?;
        t = next;
        record.push(t, State::from_vector(&x), op.energy(&x));
    }
    Ok(record)
}

pub type CoefficientSampler = dyn Fn(f64) -> Result<(CMatrix, CMatrix)> + Send + Sync;

/// Time-dependent forms `a_t`, `b_t` on a fixed pair, sampled on `[0, horizon]`.
pub struct NonautonomousFamily {
    sampler: Box<CoefficientSampler>,
    pair: InnerProductPair,
    horizon: f64,
    velocity_gram: LinearSolver,
    block_gram_h: CMatrix,
}

impl std::fmt::Debug for NonautonomousFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonautonomousFamily")
            .field("dim", &self.pair.dim())
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl NonautonomousFamily {
    pub fn new(sampler: Box<CoefficientSampler>, pair: InnerProductPair, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!("horizon {horizon} is not positive")));
        }
        let velocity_gram = LinearSolver::new(pair.gram_h())?;
        let block_gram_h = block_diag(pair.gram_v(), pair.gram_h());
        Ok(Self {
            sampler,
            pair,
            horizon,
            velocity_gram,
            block_gram_h,
        })
    }

    pub fn pair(&self) -> &InnerProductPair {
        &self.pair
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `(S_a(t), S_b(t))`.
    pub fn sample(&self, t: f64) -> Result<(CMatrix, CMatrix)> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        let (sa, sb) = (self.sampler)(t)?;
        let n = self.pair.dim();
        for m in [&sa, &sb] {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows(),
                });
            }
        }
        Ok((sa, sb))
    }

    pub fn generator(&self, t: f64) -> Result<CMatrix> {
        let (sa, sb) = self.sample(t)?;
        generator_matrix(&sa, &sb, &self.velocity_gram)
    }

    pub fn energy(&self, x: &CVector) -> f64 {
        gram_norm_sq(&self.block_gram_h, x)
    }
}

/// A certificate `(α, ω)` valid for every `b_t` with `t` in the grid.
pub fn equi_ellipticity_check(
    family: &NonautonomousFamily,
    t_grid: &[f64],
    omega_grid: &[f64],
    tol: &Tolerances,
) -> Result<Option<EllipticityCertificate>> {
    if t_grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    let herms = t_grid
        .iter()
        .map(|&t| Ok(hermitian_part(&family.sample(t)?.1)))
        .collect::<Result<Vec<_>>>()?;
    let pair = family.pair();
    certify(omega_grid, pair.h_floor(), tol.alpha_min, |omega| {
        herms.iter().try_fold(f64::INFINITY, |acc, h| {
            Ok(acc.min(coercivity_of(h, pair.gram_h(), pair.chol_v(), omega)?))
        })
    })
}

/// Implicit Euler with the generator frozen at the left end of each step.
pub fn propagate_nonautonomous(family: &NonautonomousFamily, s0: &State, times: &[f64]) -> Result<TrajectoryRecord> {
    validate_times(times)?;
    if s0.dim() != family.pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.pair.dim(),
            found: s0.dim(),
        });
    }
    let limit = Tolerances::DEFAULT.blowup_norm;
    let dim = 2 * s0.dim();
    let mut x = s0.to_vector();
    let mut record = TrajectoryRecord::start(times[0], s0.clone(), family.energy(&x));
    for (k, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let g = family.generator(w[0])?;
        let m = CMatrix::identity(dim, dim) - g * c(dt, 0.0);
        x = LinearSolver::new(&m)
            .and_then(|s| s.solve(&x))
            .map_err(step_error(dt))?;
        guard(&x, k + 1, w[0], limit)?;
        record.push(w[1], State::from_vector(&x), family.energy(&x));
    }
    Ok(record)
}

/// `log₂(‖x_h − x_{h/2}‖ / ‖x_{h/2} − x_{h/4}‖)` measured in the Gram norm.
pub fn self_convergence_order(coarse: &CVector, medium: &CVector, fine: &CVector, gram: &CMatrix) -> f64 {
    let d1 = gram_norm_sq(gram, &(coarse - medium)).sqrt();
    let d2 = gram_norm_sq(gram, &(medium - fine)).sqrt();
    (d1 / d2).log2()
}

/// `log₂(e_h / e_{h/2})` for errors against a reference.
pub fn observed_order(error_coarse: f64, error_fine: f64) -> f64 {
    (error_coarse / error_fine).log2()
}

/// Evenly spaced times `0, dt, …, t_end`; `t_end` must be a multiple of `dt` up to rounding.
pub fn uniform_times(dt: f64, t_end: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Domain("time step and final time must be positive".into()));
    }
    let steps = (t_end / dt).round();
    if ((steps * dt) - t_end).abs() > 1e-9 * t_end {
        return Err(Error::Domain(format!("final time {t_end} is not a multiple of {dt}")));
    }
    let steps = steps as usize;
    Ok((0..=steps)
        .map(|k| if k == steps { t_end } else { k as f64 * dt })
        .collect())
}
