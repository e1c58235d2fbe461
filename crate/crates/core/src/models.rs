//! One-dimensional P1 discretizations of `u_tt − ∂ₓ(α ∂ₓu + β ∂ₓu_t) = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::block::{assemble_block_form, BlockForm};
use crate::error::{Error, Result};
use crate::evolution::{Nonlinearity, State};
use crate::forms::{InnerProductPair, SesquilinearForm};
use crate::linalg::{c, gram_norm_sq, CMatrix, CVector, ONE};

/// Uniform mesh of `[0, length]` with `cells` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    length: f64,
    cells: usize,
}

impl Mesh1D {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Domain(format!("mesh length {length} is not positive")));
        }
        if cells < 2 {
            return Err(Error::Domain(format!("mesh needs at least 2 cells, got {cells}")));
        }
        Ok(Self { length, cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|j| j as f64 * self.spacing()).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.cells).map(|j| (j as f64 + 0.5) * self.spacing()).collect()
    }
}

/// A coefficient `x ↦ c(x)` from a small fixed family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSpec {
    Const(Complex64),
    /// `c0 + c1·x`.
    Linear(Complex64, Complex64),
    /// `c0 + amp·sin(πx/L)`.
    Sine(Complex64, Complex64),
}

impl CoefficientSpec {
    pub fn at(&self, x: f64, length: f64) -> Complex64 {
        match *self {
            CoefficientSpec::Const(v) => v,
            CoefficientSpec::Linear(c0, c1) => c0 + c1 * x,
            CoefficientSpec::Sine(c0, amp) => c0 + amp * (PI * x / length).sin(),
        }
    }

    pub fn constant_value(&self) -> Option<Complex64> {
        match *self {
            CoefficientSpec::Const(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientField {
    pub alpha: CoefficientSpec,
    pub beta: CoefficientSpec,
}

impl CoefficientField {
    pub fn constant(alpha: Complex64, beta: f64) -> Self {
        Self {
            alpha: CoefficientSpec::Const(alpha),
            beta: CoefficientSpec::Const(c(beta, 0.0)),
        }
    }

    fn sample(&self, mesh: &Mesh1D) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let mut alpha = Vec::with_capacity(mesh.cells());
        let mut beta = Vec::with_capacity(mesh.cells());
        for x in mesh.midpoints() {
            let a = self.alpha.at(x, mesh.length());
            let b = self.beta.at(x, mesh.length());
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::Coefficient {
                    x,
                    reason: "alpha is not finite".into(),
                });
            }
            if b.im != 0.0 || !(b.re > 0.0) || !b.re.is_finite() {
                return Err(Error::Coefficient {
                    x,
                    reason: format!("beta = {b} is not a positive real"),
                });
            }
            alpha.push(a);
            beta.push(b);
        }
        Ok((alpha, beta))
    }
}

/// `∫ w ∂ₓφⱼ ∂ₓφᵢ` over all nodes, with `w` constant per cell.
fn weighted_stiffness(mesh: &Mesh1D, weights: &[Complex64]) -> CMatrix {
    let n = mesh.cells();
    let h = mesh.spacing();
    let mut k = CMatrix::zeros(n + 1, n + 1);
    for (e, w) in weights.iter().enumerate() {
        let s = w / h;
        k[(e, e)] += s;
        k[(e + 1, e + 1)] += s;
        k[(e, e + 1)] -= s;
        k[(e + 1, e)] -= s;
    }
    k
}

fn mass(mesh: &Mesh1D) -> CMatrix {
    let n = mesh.cells();
    let h = mesh.spacing();
    let mut m = CMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        m[(e, e)] += c(h / 3.0, 0.0);
        m[(e + 1, e + 1)] += c(h / 3.0, 0.0);
        m[(e, e + 1)] += c(h / 6.0, 0.0);
        m[(e + 1, e)] += c(h / 6.0, 0.0);
    }
    m
}

fn interior(m: &CMatrix) -> CMatrix {
    let n = m.nrows() - 2;
    m.view((1, 1), (n, n)).into_owned()
}

#[derive(Debug, Clone)]
pub struct DirichletModel {
    pub mesh: Mesh1D,
    pub pair: InnerProductPair,
    pub a: SesquilinearForm,
    pub b: SesquilinearForm,
}

impl DirichletModel {
    pub fn block_form(&self) -> Result<BlockForm> {
        assemble_block_form(self.a.clone(), self.b.clone(), self.pair.clone())
    }
}

/// Interior-node P1 model: `G_V` stiffness, `G_H` mass, `S_a`, `S_b` weighted stiffness.
pub fn assemble_dirichlet_model(mesh: &Mesh1D, coeffs: &CoefficientField) -> Result<DirichletModel> {
    let (alpha, beta) = coeffs.sample(mesh)?;
    let ones = vec![ONE; mesh.cells()];
    let pair = InnerProductPair::new(interior(&weighted_stiffness(mesh, &ones)), interior(&mass(mesh)))?;
    Ok(DirichletModel {
        mesh: *mesh,
        pair,
        a: SesquilinearForm::new(interior(&weighted_stiffness(mesh, &alpha)))?,
        b: SesquilinearForm::new(interior(&weighted_stiffness(mesh, &beta)))?,
    })
}

/// `λ_k` of the discrete pencil (stiffness, mass) on interior nodes.
pub fn discrete_eigenvalue(mesh: &Mesh1D, k: usize) -> Result<f64> {
    check_mode(mesh, k)?;
    let h = mesh.spacing();
    let cos = (k as f64 * PI / mesh.cells() as f64).cos();
    Ok(6.0 / (h * h) * (1.0 - cos) / (2.0 + cos))
}

/// Sine eigenvector `v_j = sin(jkπ/n)` scaled to unit mass norm.
pub fn mode_vector(mesh: &Mesh1D, k: usize) -> Result<CVector> {
    check_mode(mesh, k)?;
    let n = mesh.cells();
    let theta = k as f64 * PI / n as f64;
    let v = CVector::from_fn(n - 1, |j, _| c(((j + 1) as f64 * theta).sin(), 0.0));
    let norm = gram_norm_sq(&interior(&mass(mesh)), &v).sqrt();
    Ok(v / c(norm, 0.0))
}

fn check_mode(mesh: &Mesh1D, k: usize) -> Result<()> {
    if k == 0 || k >= mesh.cells() {
        return Err(Error::Domain(format!(
            "mode index {k} outside 1..={}",
            mesh.cells() - 1
        )));
    }
    Ok(())
}

/// `sinh(z)/z`.
fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        ONE + z * z / 6.0 + z * z * z * z / 120.0
    } else {
        z.sinh() / z
    }
}

/// `(η(t), η̇(t))` for `η̈ + βλη̇ + αλη = 0`, `η(0) = η0`, `η̇(0) = ξ0`.
pub fn mode_amplitude(
    alpha: Complex64,
    beta: f64,
    lambda: f64,
    eta0: Complex64,
    xi0: Complex64,
    t: f64,
) -> (Complex64, Complex64) {
    let mean = c(-beta * lambda / 2.0, 0.0);
    let delta = (c(beta * beta * lambda * lambda, 0.0) - alpha * (4.0 * lambda)).sqrt() / 2.0;
    let z = delta * t;
    let p = xi0 - mean * eta0;
    if z.norm() <= 1.0 {
        let decay = (mean * t).exp();
        let eta = decay * (eta0 * z.cosh() + p * t * sinhc(z));
        let deta = mean * eta + decay * (eta0 * delta * z.sinh() + p * z.cosh());
        (eta, deta)
    } else {
        let (r1, r2) = (mean + delta, mean - delta);
        let (e1, e2) = ((r1 * t).exp(), (r2 * t).exp());
        // η = c1 e^{r1 t} + c2 e^{r2 t}
        let c1 = (xi0 - r2 * eta0) / (r1 - r2);
        let c2 = (r1 * eta0 - xi0) / (r1 - r2);
        (c1 * e1 + c2 * e2, c1 * r1 * e1 + c2 * r2 * e2)
    }
}

/// Exact solution from the data `(v_k, 0)` for constant coefficients.
pub fn analytic_mode_oracle(mesh: &Mesh1D, alpha: Complex64, beta: f64, k: usize, t: f64) -> Result<State> {
    let lambda = discrete_eigenvalue(mesh, k)?;
    let v = mode_vector(mesh, k)?;
    let (eta, deta) = mode_amplitude(alpha, beta, lambda, ONE, c(0.0, 0.0), t);
    State::new(&v * eta, &v * deta)
}

/// The dynamic boundary condition model with `β ≡ 1` and constant `α`.
///
/// First-slot coordinates are all `n + 1` nodal values of `f1`, second-slot those
/// of `f2`; the boundary component `f3 = L f2` is implied.
#[derive(Debug, Clone)]
pub struct DynamicBcSystem {
    pub mesh: Mesh1D,
    pub alpha: Complex64,
    pub pair: InnerProductPair,
    pub trace: CMatrix,
    block: BlockForm,
}

pub const BOUNDARY_DIM: usize = 2;

pub fn trace_map(mesh: &Mesh1D) -> CMatrix {
    let n = mesh.cells();
    let mut l = CMatrix::zeros(BOUNDARY_DIM, n + 1);
    l[(0, 0)] = ONE;
    l[(1, n)] = ONE;
    l
}

pub fn assemble_dynamic_bc(mesh: &Mesh1D, alpha: Complex64) -> Result<DynamicBcSystem> {
    let ones = vec![ONE; mesh.cells()];
    let k = weighted_stiffness(mesh, &ones);
    let m = mass(mesh);
    let l = trace_map(mesh);
    let ltl = l.adjoint() * &l;
    let gram_v = &k + &m;
    let pair = InnerProductPair::new(gram_v.clone(), m.clone())?;
    let second = InnerProductPair::new(&gram_v + &ltl, &m + &ltl)?;
    let a = SesquilinearForm::new(&k * alpha)?;
    let b = SesquilinearForm::new(k)?;
    let block = BlockForm::with_second_slot(a, b, pair.clone(), second)?;
    Ok(DynamicBcSystem {
        mesh: *mesh,
        alpha,
        pair,
        trace: l,
        block,
    })
}

impl DynamicBcSystem {
    pub fn block_form(&self) -> &BlockForm {
        &self.block
    }

    pub fn nodes(&self) -> usize {
        self.mesh.cells() + 1
    }

    /// Number of phase-space coordinates, `2(n + 1)`.
    pub fn coordinate_dim(&self) -> usize {
        2 * self.nodes()
    }

    /// Dimension of the pivot space including the boundary component.
    pub fn hilbert_dim(&self) -> usize {
        self.coordinate_dim() + BOUNDARY_DIM
    }

    /// `diag(G_V, G_H, I₂)` on `(f1, f2, f3)`.
    pub fn hilbert_gram(&self) -> CMatrix {
        let n = self.nodes();
        let d = self.hilbert_dim();
        let mut g = CMatrix::zeros(d, d);
        g.view_mut((0, 0), (n, n)).copy_from(self.pair.gram_v());
        g.view_mut((n, n), (n, n)).copy_from(self.pair.gram_h());
        g.view_mut((2 * n, 2 * n), (BOUNDARY_DIM, BOUNDARY_DIM))
            .fill_with_identity();
        g
    }

    pub fn constraint_rank(&self) -> usize {
        self.trace.clone().svd(false, false).rank(1e-12)
    }

    /// `(f1, f2) ↦ (f1, f2, L f2)`.
    pub fn embed(&self, state: &State) -> CVector {
        let n = self.nodes();
        let mut x = CVector::zeros(self.hilbert_dim());
        x.rows_mut(0, n).copy_from(&state.u1);
        x.rows_mut(n, n).copy_from(&state.u2);
        x.rows_mut(2 * n, BOUNDARY_DIM).copy_from(&(&self.trace * &state.u2));
        x
    }
}

/// Largest `‖L u₂ − u₃‖` over embedded states.
pub fn dynamic_bc_invariant_check(system: &DynamicBcSystem, embedded: &[CVector]) -> f64 {
    let n = system.nodes();
    embedded
        .iter()
        .map(|x| {
            let u2 = x.rows(n, n).into_owned();
            let u3 = x.rows(2 * n, BOUNDARY_DIM).into_owned();
            (&system.trace * u2 - u3).norm()
        })
        .fold(0.0, f64::max)
}

/// Klein–Gordon load `−m²u₁ − u₁³`, pointwise on nodes and tested against the mass matrix.
#[derive(Debug, Clone)]
pub struct KleinGordon {
    pub mass_sq: f64,
    pub gram_h: CMatrix,
}

impl Nonlinearity for KleinGordon {
    fn eval(&self, _t: f64, u1: &CVector, _u2: &CVector) -> CVector {
        let pointwise = u1.map(|z| -z * self.mass_sq - z * z * z);
        &self.gram_h * pointwise
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_geig, max_abs, HermitianPencil};
    use approx::assert_relative_eq;

    #[test]
    fn two_cell_entries() {
        let mesh = Mesh1D::new(1.0, 2).unwrap();
        let model = assemble_dirichlet_model(&mesh, &CoefficientField::constant(ONE, 1.0)).unwrap();
        assert_relative_eq!(model.pair.gram_v()[(0, 0)].re, 4.0, max_relative = 1e-15);
        assert_relative_eq!(model.pair.gram_h()[(0, 0)].re, 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn mesh_validation() {
        assert!(Mesh1D::new(1.0, 1).is_err());
        assert!(Mesh1D::new(0.0, 4).is_err());
        assert_eq!(Mesh1D::new(2.0, 4).unwrap().nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn matched_and_proportional_coefficients() {
        let mesh = Mesh1D::new(1.0, 8).unwrap();
        let m = assemble_dirichlet_model(&mesh, &CoefficientField::constant(ONE, 1.0)).unwrap();
        assert!(max_abs(&(m.a.matrix() - m.pair.gram_v())) == 0.0);
        assert!(max_abs(&(m.b.matrix() - m.pair.gram_v())) == 0.0);
        let rho = c(0.5, 2.0);
        let m = assemble_dirichlet_model(&mesh, &CoefficientField::constant(rho * 3.0, 3.0)).unwrap();
        assert!(max_abs(&(m.a.matrix() - m.b.matrix() * rho)) < 1e-13);
    }

    #[test]
    fn beta_must_be_positive() {
        let mesh = Mesh1D::new(1.0, 4).unwrap();
        let field = CoefficientField {
            alpha: CoefficientSpec::Const(ONE),
            beta: CoefficientSpec::Linear(c(-0.2, 0.0), c(1.0, 0.0)),
        };
        let err = assemble_dirichlet_model(&mesh, &field).unwrap_err();
        assert!(matches!(err, Error::Coefficient { x, .. } if x == 0.125));
        let complex_beta = CoefficientField::constant(ONE, 1.0);
        let complex_beta = CoefficientField {
            beta: CoefficientSpec::Const(c(1.0, 0.1)),
            ..complex_beta
        };
        assert!(assemble_dirichlet_model(&mesh, &complex_beta).is_err());
    }

    #[test]
    fn discrete_modes_are_eigenpairs() {
        let mesh = Mesh1D::new(1.5, 12).unwrap();
        let pencil =
            HermitianPencil::new(interior(&weighted_stiffness(&mesh, &[ONE; 12])), interior(&mass(&mesh))).unwrap();
        let eig = hermitian_geig(&pencil).unwrap();
        for k in 1..12 {
            let lambda = discrete_eigenvalue(&mesh, k).unwrap();
            assert_relative_eq!(lambda, eig.values[k - 1], max_relative = 1e-10);
            let v = mode_vector(&mesh, k).unwrap();
            let residual = pencil.lhs() * &v - pencil.rhs() * &v * c(lambda, 0.0);
            assert!(residual.norm() < 1e-9 * lambda);
        }
        assert!(discrete_eigenvalue(&mesh, 12).is_err());
        assert!(mode_vector(&mesh, 0).is_err());
    }

    #[test]
    fn amplitude_initial_values_and_ode() {
        let lambda = 10.0;
        for (alpha, beta) in [
            (c(2.0, 0.0), 1.0),
            (c(1.0, 0.5), 0.01),
            (c(2.5, 0.0), 1.0),
            (c(0.1, 0.0), 3.0),
        ] {
            let (eta, deta) = mode_amplitude(alpha, beta, lambda, ONE, c(0.3, 0.0), 0.0);
            assert!((eta - ONE).norm() < 1e-15 && (deta - c(0.3, 0.0)).norm() < 1e-15);
            // central second difference of η versus the ODE
            let (t, h) = (0.7, 1e-4);
            let at = |s| mode_amplitude(alpha, beta, lambda, ONE, c(0.3, 0.0), s);
            let (e0, d0) = at(t);
            let second = (at(t + h).0 - e0 * 2.0 + at(t - h).0) / (h * h);
            let residual = second + d0 * (beta * lambda) + alpha * lambda * e0;
            assert!(residual.norm() < 1e-4 * (1.0 + e0.norm() * lambda));
            let first = (at(t + h).0 - at(t - h).0) / (2.0 * h);
            assert!((first - d0).norm() < 1e-6 * (1.0 + d0.norm()));
        }
    }

    #[test]
    fn critical_damping_double_root() {
        let lambda = 4.0;
        let beta = 1.0;
        let alpha = c(beta * beta * lambda / 4.0, 0.0);
        let root: f64 = -beta * lambda / 2.0;
        for t in [0.0, 0.5, 1.0, 3.0] {
            let (eta, _) = mode_amplitude(alpha, beta, lambda, ONE, c(0.0, 0.0), t);
            assert_relative_eq!(eta.re, (1.0 - root * t) * (root * t).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn dynamic_bc_bookkeeping() {
        let mesh = Mesh1D::new(1.0, 6).unwrap();
        let sys = assemble_dynamic_bc(&mesh, ONE).unwrap();
        assert_eq!(sys.coordinate_dim(), 14);
        assert_eq!(sys.hilbert_dim(), 16);
        assert_eq!(sys.constraint_rank(), 2);
        let constant = CVector::from_element(7, c(2.5, 0.0));
        assert_eq!(&sys.trace * &constant, CVector::from_element(2, c(2.5, 0.0)));
        let state = State::new(CVector::from_element(7, ONE), constant).unwrap();
        let mut x = sys.embed(&state);
        assert_eq!(dynamic_bc_invariant_check(&sys, &[x.clone()]), 0.0);
        x[15] += c(1e-3, 0.0);
        assert!(dynamic_bc_invariant_check(&sys, &[x]) > 0.0);
    }

    #[test]
    fn dynamic_bc_gram_restricts_to_coordinates() {
        let mesh = Mesh1D::new(1.0, 5).unwrap();
        let sys = assemble_dynamic_bc(&mesh, c(1.0, 0.3)).unwrap();
        let state = State::new(
            CVector::from_fn(6, |j, _| c(j as f64, 1.0)),
            CVector::from_fn(6, |j, _| c(1.0, -(j as f64))),
        )
        .unwrap();
        let full = gram_norm_sq(&sys.hilbert_gram(), &sys.embed(&state));
        let coords = gram_norm_sq(sys.block_form().block_pair().gram_h(), &state.to_vector());
        assert_relative_eq!(full, coords, max_relative = 1e-13);
    }

    #[test]
    fn klein_gordon_load() {
        let kg = KleinGordon {
            mass_sq: 4.0,
            gram_h: CMatrix::identity(2, 2),
        };
        let u = CVector::from_vec(vec![c(1.0, 0.0), c(-2.0, 0.0)]);
        let f = kg.eval(0.0, &u, &u);
        assert_eq!(f, CVector::from_vec(vec![c(-5.0, 0.0), c(16.0, 0.0)]));
    }
}
