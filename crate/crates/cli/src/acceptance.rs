//! The acceptance suite run by `dwlab verify`.

use dwlab_core::block::{
    block_constants, block_continuity_bound, block_ellipticity, extract_operator, noncoercivity_witness,
    rho_characterization_check, BlockForm,
};
use dwlab_core::evolution::{
    equi_ellipticity_check, propagate_linear, propagate_nonautonomous, propagate_semilinear, reality_drift,
    self_convergence_order, semigroup_norm_curve, uniform_times, Method, NonautonomousFamily, State,
};
use dwlab_core::forms::{
    accretivity_check, build_interpolation_scale, coercivity_at, continuity_witness, cross_continuity_constant,
    default_omega_grid, ellipticity_constants, perturbed_ellipticity, re_equals_v_inner, young_shift,
    EllipticityCertificate, SesquilinearForm,
};
use dwlab_core::linalg::{c, gram_norm_sq, max_abs, CMatrix, CVector, Cholesky, Tolerances};
use dwlab_core::models::{
    analytic_mode_oracle, assemble_dirichlet_model, assemble_dynamic_bc, dynamic_bc_invariant_check, mode_vector,
    CoefficientField, CoefficientSpec, DirichletModel, KleinGordon, Mesh1D,
};
use dwlab_core::sampling::Sampler;
use dwlab_core::spectral::{
    default_lambda_grid, frequency_response, numerical_range, parabola_check, parabola_check_with, sector_check,
    sector_check_with, spectrum, DEFAULT_ANGLE_COUNT,
};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::commands::SHIFT_MARGIN;
use crate::export::json_string;
use crate::report::{Check, VerificationReport};
use crate::CliError;

pub const CRITERIA: usize = 15;

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Halves the named bound so that its check must fail.
    pub corrupt_bound: Option<String>,
    pub only: Option<Vec<usize>>,
}

pub type SuiteReport = VerificationReport;

type Outcome = Result<Check, CliError>;

struct Criterion {
    name: &'static str,
    anchor: &'static str,
    run: fn(&Ctx) -> Outcome,
}

struct Ctx {
    seed: u64,
    corrupt: Option<String>,
}

impl Ctx {
    fn sampler(&self, criterion: u64) -> Sampler {
        Sampler::new(self.seed ^ (criterion << 32))
    }

    fn corrupted(&self, bound: &str) -> bool {
        self.corrupt.as_deref() == Some(bound)
    }

    fn factor(&self, bound: &str) -> f64 {
        if self.corrupted(bound) {
            0.5
        } else {
            1.0
        }
    }
}

const SUITE: [Criterion; CRITERIA - 1] = [
    Criterion {
        name: "c01-angle-bound",
        anchor: "block continuity constant within the closed-form bound in M_a, M_b; sub-constants attained",
        run: angle_bound,
    },
    Criterion {
        name: "c02-ellipticity-iff",
        anchor: "block form H-elliptic exactly when b is",
        run: ellipticity_iff,
    },
    Criterion {
        name: "c03-perturbation",
        anchor: "Young shift for V x H_alpha perturbations and re-verified certificate",
        run: perturbation,
    },
    Criterion {
        name: "c04-noncoercivity",
        anchor: "Re a((u,0),(u,0)) = 0 on every model",
        run: noncoercivity,
    },
    Criterion {
        name: "c05-rho-identity",
        anchor: "alpha = rho beta gives A u = (-u2, B(rho u1 + u2))",
        run: rho_identity,
    },
    Criterion {
        name: "c06-contractivity",
        anchor: "Re a = (.|.)_V and b accretive give a contraction semigroup",
        run: contractivity,
    },
    Criterion {
        name: "c07-mode-oracle",
        anchor: "exact propagation against the modal ODE solution",
        run: mode_oracle,
    },
    Criterion {
        name: "c08-reality",
        anchor: "real coefficients and data stay real",
        run: reality,
    },
    Criterion {
        name: "c09-frequency-response",
        anchor: "resolvent bound on the imaginary axis after the shift, stable under refinement",
        run: frequency,
    },
    Criterion {
        name: "c10-parabola",
        anchor: "|Im a| chain and parabola containment of the numerical range",
        run: parabola,
    },
    Criterion {
        name: "c11-sector",
        anchor: "shifted numerical range inside the sector |Im z| <= (M/alpha) Re z",
        run: sector,
    },
    Criterion {
        name: "c12-dynamic-bc",
        anchor: "dynamic boundary model: ellipticity, spectrum bound and trace constraint",
        run: dynamic_bc,
    },
    Criterion {
        name: "c13-semilinear",
        anchor: "Klein-Gordon perturbation: bounded, first order, blow-up guard",
        run: semilinear,
    },
    Criterion {
        name: "c14-nonautonomous",
        anchor: "b_t = (1+t) b: equi-ellipticity and frozen-coefficient convergence",
        run: nonautonomous,
    },
];

pub const DETERMINISM_NAME: &str = "c15-determinism";

/// Runs the selected criteria; criterion 15 reruns the others and compares the serialized reports.
pub fn run_suite(options: &SuiteOptions) -> SuiteReport {
    let ctx = Ctx {
        seed: options.seed,
        corrupt: options.corrupt_bound.clone(),
    };
    let selected: Vec<usize> = match &options.only {
        Some(list) => (1..=CRITERIA).filter(|k| list.contains(k)).collect(),
        None => (1..=CRITERIA).collect(),
    };
    let body: Vec<usize> = selected.iter().copied().filter(|&k| k < CRITERIA).collect();
    let mut checks = run_criteria(&ctx, &body);
    if selected.contains(&CRITERIA) {
        let rerun_set = if body.is_empty() {
            (1..CRITERIA).collect()
        } else {
            body.clone()
        };
        let first = if body.is_empty() {
            run_criteria(&ctx, &rerun_set)
        } else {
            checks.clone()
        };
        let second = run_criteria(&ctx, &rerun_set);
        let a = json_string(&VerificationReport::new("verify", "suite", ctx.seed, first));
        let b = json_string(&VerificationReport::new("verify", "suite", ctx.seed, second));
        checks.push(
            Check::new(
                DETERMINISM_NAME,
                "repeat run with the same seed gives byte-identical JSON",
            )
            .value("criteria_rerun", rerun_set.len())
            .value("bytes", a.len())
            .value("identical", a == b)
            .verdict(a == b),
        );
    }
    VerificationReport::new("verify", "suite", ctx.seed, checks)
}

fn run_criteria(ctx: &Ctx, which: &[usize]) -> Vec<Check> {
    which
        .par_iter()
        .map(|&k| {
            let crit = &SUITE[k - 1];
            (crit.run)(ctx).unwrap_or_else(|e| {
                Check::new(crit.name, crit.anchor)
                    .note(format!("error: {e}"))
                    .verdict(false)
            })
        })
        .collect()
}

/// `PASS  name` / `FAIL  name` lines in suite order.
pub fn summary_lines(report: &SuiteReport) -> Vec<String> {
    report
        .checks
        .iter()
        .map(|c| format!("{}  {}", if c.pass { "PASS" } else { "FAIL" }, c.name))
        .collect()
}

fn check(k: usize) -> Check {
    let crit = &SUITE[k - 1];
    Check::new(crit.name, crit.anchor)
}

fn tol() -> Tolerances {
    Tolerances::DEFAULT
}

fn dirichlet(n: usize, alpha: CoefficientSpec, beta: CoefficientSpec) -> Result<DirichletModel, CliError> {
    let mesh = Mesh1D::new(1.0, n)?;
    Ok(assemble_dirichlet_model(&mesh, &CoefficientField { alpha, beta })?)
}

fn constant(n: usize, alpha: Complex64, beta: f64) -> Result<DirichletModel, CliError> {
    let mesh = Mesh1D::new(1.0, n)?;
    Ok(assemble_dirichlet_model(
        &mesh,
        &CoefficientField::constant(alpha, beta),
    )?)
}

fn certificate(bf: &BlockForm) -> Result<Option<EllipticityCertificate>, CliError> {
    Ok(block_ellipticity(bf, &default_omega_grid(), &tol())?)
}

fn require_certificate(bf: &BlockForm) -> Result<EllipticityCertificate, CliError> {
    certificate(bf)?
        .ok_or_else(|| CliError::Numerical(dwlab_core::Error::Consistency("no ellipticity certificate".into())))
}

fn complex_model(n: usize) -> Result<DirichletModel, CliError> {
    constant(n, c(1.0, 0.5), 1.0)
}

fn relative_h_error(gram: &CMatrix, x: &CVector, reference: &CVector) -> f64 {
    (gram_norm_sq(gram, &(x - reference)) / gram_norm_sq(gram, reference)).sqrt()
}

fn angle_bound(ctx: &Ctx) -> Outcome {
    let mut out = check(1);
    let mut pass = true;
    for n in [16, 32, 64] {
        let m = complex_model(n)?;
        let bf = m.block_form()?;
        let k = block_constants(&bf)?;
        let bound = block_continuity_bound(k.ma_direct, k.mb_direct) * ctx.factor("angle-bound");
        let wa = continuity_witness(&m.a, &m.pair)?;
        let wb = continuity_witness(&m.b, bf.second_slot())?;
        let gap_a = (wa.attained(&m.a, &m.pair) - wa.constant).abs() / wa.constant;
        let gap_b = (wb.attained(&m.b, bf.second_slot()) - wb.constant).abs() / wb.constant;
        let ok = k.mblock_direct <= bound + 1e-8 && gap_a <= 1e-10 && gap_b <= 1e-10;
        pass &= ok;
        out = out
            .value(&format!("n{n}_m_a"), k.ma_direct)
            .value(&format!("n{n}_m_b"), k.mb_direct)
            .value(&format!("n{n}_m_block"), k.mblock_direct)
            .value(&format!("n{n}_witness_gap_a"), gap_a)
            .value(&format!("n{n}_witness_gap_b"), gap_b)
            .bound(&format!("n{n}_bound"), bound);
    }
    Ok(out.verdict(pass))
}

/// Pair of the interior P1 model on `n + 1` cells.
fn stiffness_pair(n: usize) -> Result<DirichletModel, CliError> {
    constant(n + 1, c(1.0, 0.0), 1.0)
}

fn ellipticity_iff(ctx: &Ctx) -> Outcome {
    let base = stiffness_pair(12)?;
    let pair = base.pair.clone();
    let gv = pair.gram_v().clone();
    let scale = max_abs(&gv);
    let n = pair.dim();
    let mut s = ctx.sampler(2);
    let (mut mismatches, mut elliptic, mut not_elliptic) = (0usize, 0usize, 0usize);
    for i in 0..20 {
        let a = &gv * c(s.uniform(0.5, 2.0), s.uniform(-1.0, 1.0)) + s.complex_matrix(n, n) * c(0.2 * scale, 0.0);
        let b = match i % 5 {
            0 => CMatrix::zeros(n, n),
            1 => gv.clone(),
            2 => &gv + s.complex_matrix(n, n) * c(0.3 * scale, 0.0),
            3 => -&gv + s.complex_matrix(n, n) * c(0.05 * scale, 0.0),
            _ => {
                let w = s.real_vector(n);
                let gw = &gv * &w;
                let weight = s.uniform(0.0, 2.0) / gram_norm_sq(&gv, &w);
                &gv - &gw * gw.adjoint() * c(weight, 0.0)
            }
        };
        let bf =
            dwlab_core::block::assemble_block_form(SesquilinearForm::new(a)?, SesquilinearForm::new(b)?, pair.clone())?;
        let block = certificate(&bf)?.is_some();
        let single = ellipticity_constants(bf.b(), bf.second_slot(), &default_omega_grid(), &tol())?.is_some();
        mismatches += usize::from(block != single);
        if single {
            elliptic += 1;
        } else {
            not_elliptic += 1;
        }
    }
    Ok(check(2)
        .value("instances", 20)
        .value("b_elliptic", elliptic)
        .value("b_not_elliptic", not_elliptic)
        .value("mismatches", mismatches)
        .bound("max_mismatches", 0.0)
        .verdict(mismatches == 0))
}

/// `max_{ρ ≥ 0} 2Kρ^{1+α} − ερ²` by a log-spaced scan refined with golden sections.
fn brute_young(k: f64, alpha_exp: f64, eps: f64) -> f64 {
    let f = |log_rho: f64| {
        let rho = log_rho.exp();
        2.0 * k * rho.powf(1.0 + alpha_exp) - eps * rho * rho
    };
    let (lo, hi, points) = (-30.0f64, 30.0f64, 6001);
    let step = (hi - lo) / (points - 1) as f64;
    let best = (0..points)
        .map(|i| lo + step * i as f64)
        .fold((lo, f(lo)), |acc, x| if f(x) > acc.1 { (x, f(x)) } else { acc });
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-13 {
        let x1 = b - r * (b - a);
        let x2 = a + r * (b - a);
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    f(0.5 * (a + b)).max(best.1).max(0.0)
}

fn perturbation(ctx: &Ctx) -> Outcome {
    let base = stiffness_pair(12)?;
    let pair = base.pair.clone();
    let gv = pair.gram_v().clone();
    let n = pair.dim();
    let scale = max_abs(&gv);
    let mut s = ctx.sampler(3);
    let (mut worst_rel, mut worst_slack) = (0.0f64, f64::INFINITY);
    for i in 0..10 {
        let alpha_exp = [0.0, 0.3, 0.7][i % 3];
        let interp = build_interpolation_scale(&pair, alpha_exp)?;
        let chol_alpha = Cholesky::new(&interp.gram_alpha)?;
        let skew = s.complex_matrix(n, n);
        let skew = (&skew - skew.adjoint()) * c(0.25 * scale, 0.0);
        let a0 = SesquilinearForm::new(&gv + skew)?;
        let cert0 = ellipticity_constants(&a0, &pair, &default_omega_grid(), &tol())?.ok_or_else(|| {
            CliError::Numerical(dwlab_core::Error::Consistency("unperturbed form not elliptic".into()))
        })?;
        let x1 = s.complex_matrix(n, n) * c(0.3 * scale.sqrt(), 0.0);
        let x2 = s.complex_matrix(n, n) * c(0.3 * scale.sqrt(), 0.0);
        let m1 = cross_continuity_constant(&x1, pair.chol_v(), &chol_alpha);
        let m2 = cross_continuity_constant(&x2, &chol_alpha, pair.chol_v());
        let eps = cert0.alpha / 2.0;
        let shift = young_shift(m1 + m2, 1.0, alpha_exp, eps)?;
        let oracle = brute_young(m1 + m2, alpha_exp, eps);
        worst_rel = worst_rel.max((shift - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE));
        let cert = perturbed_ellipticity(&cert0, m1, m2, &interp)?;
        let total = SesquilinearForm::new(a0.matrix() + &x1 + &x2)?;
        let direct = coercivity_at(&total, &pair, cert.omega)?;
        worst_slack = worst_slack.min(direct - cert.alpha);
    }
    Ok(check(3)
        .value("instances", 10)
        .value("max_relative_shift_error", worst_rel)
        .value("min_certificate_slack", worst_slack)
        .bound("relative_tolerance", 1e-6)
        .bound("slack_floor", -1e-10)
        .verdict(worst_rel <= 1e-6 && worst_slack >= -1e-10))
}

fn noncoercivity(ctx: &Ctx) -> Outcome {
    let mesh16 = Mesh1D::new(1.0, 16)?;
    let forms = vec![
        ("dirichlet-complex", complex_model(16)?.block_form()?),
        (
            "dirichlet-sine",
            dirichlet(
                32,
                CoefficientSpec::Sine(c(1.0, 0.3), c(0.5, 0.0)),
                CoefficientSpec::Sine(c(1.0, 0.0), c(0.5, 0.0)),
            )?
            .block_form()?,
        ),
        (
            "dirichlet-linear",
            dirichlet(
                24,
                CoefficientSpec::Linear(c(2.0, 0.0), c(-0.5, 0.2)),
                CoefficientSpec::Const(c(0.5, 0.0)),
            )?
            .block_form()?,
        ),
        (
            "dynamic-bc",
            assemble_dynamic_bc(&mesh16, c(1.0, 0.0))?.block_form().clone(),
        ),
        ("scalar", scalar_form(c(1.0, 0.0), c(2.0, 0.0))?),
    ];
    let mut s = ctx.sampler(4);
    let mut out = check(4);
    let mut pass = true;
    for (name, bf) in &forms {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let u1 = s.complex_vector(bf.dim());
            let w = noncoercivity_witness(bf, Some(&u1))?;
            worst = worst.max(w.re_form.abs() / w.norm_v_sq);
            pass &= w.holds();
        }
        out = out.value(&format!("{name}_max_relative_re"), worst);
    }
    Ok(out.bound("limit", 1e-14).verdict(pass))
}

fn scalar_form(a: Complex64, b: Complex64) -> Result<BlockForm, CliError> {
    let pair = dwlab_core::forms::InnerProductPair::new(CMatrix::identity(1, 1), CMatrix::identity(1, 1))?;
    Ok(dwlab_core::block::assemble_block_form(
        SesquilinearForm::new(CMatrix::from_element(1, 1, a))?,
        SesquilinearForm::new(CMatrix::from_element(1, 1, b))?,
        pair,
    )?)
}

fn rho_identity(_: &Ctx) -> Outcome {
    let rho = c(2.0, 1.0);
    let m = dirichlet(
        32,
        CoefficientSpec::Sine(rho, rho * 0.5),
        CoefficientSpec::Sine(c(1.0, 0.0), c(0.5, 0.0)),
    )?;
    let residual = rho_characterization_check(&m.block_form()?, rho, &tol())?;
    Ok(check(5)
        .value("residual", residual)
        .bound("limit", 1e-12)
        .verdict(residual <= 1e-12))
}

fn contractivity(_: &Ctx) -> Outcome {
    let m = constant(32, c(1.0, 0.0), 1.0)?;
    let exact_v = re_equals_v_inner(&m.a, &m.pair, &tol());
    let accretive = accretivity_check(&m.b, &m.pair, &tol())?;
    let op = extract_operator(&m.block_form()?)?;
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let norms = semigroup_norm_curve(&op, &times)?;
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let max_increase = norms.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(check(6)
        .value("re_a_equals_v_inner", exact_v)
        .value("b_accretive", accretive)
        .value("max_norm", max_norm)
        .value("max_increase", max_increase)
        .bound("norm_limit", 1.0 + 1e-10)
        .bound("increase_limit", 1e-10)
        .verdict(exact_v && accretive && max_norm <= 1.0 + 1e-10 && max_increase <= 1e-10))
}

fn mode_oracle(_: &Ctx) -> Outcome {
    let (alpha, beta) = (c(2.0, 0.0), 1.0);
    let m = constant(64, alpha, beta)?;
    let bf = m.block_form()?;
    let op = extract_operator(&bf)?;
    let gram = bf.block_pair().gram_h();
    let mut out = check(7);
    let mut worst = 0.0f64;
    for k in [1, 2, 4, 8] {
        let s0 = State::new(mode_vector(&m.mesh, k)?, CVector::zeros(m.pair.dim()))?;
        let run = propagate_linear(&op, &s0, &[0.0, 1.0], Method::ExactExponential)?;
        let exact = analytic_mode_oracle(&m.mesh, alpha, beta, k, 1.0)?;
        let err = relative_h_error(gram, &run.final_state().to_vector(), &exact.to_vector());
        worst = worst.max(err);
        out = out.value(&format!("mode{k}_relative_error"), err);
    }
    Ok(out.bound("limit", 1e-8).verdict(worst <= 1e-8))
}

fn reality(_: &Ctx) -> Outcome {
    let m = dirichlet(
        32,
        CoefficientSpec::Sine(c(1.0, 0.0), c(0.5, 0.0)),
        CoefficientSpec::Sine(c(0.5, 0.0), c(0.25, 0.0)),
    )?;
    let op = extract_operator(&m.block_form()?)?;
    let u1 = mode_vector(&m.mesh, 1)? + mode_vector(&m.mesh, 3)? * c(0.5, 0.0);
    let s0 = State::new(u1, mode_vector(&m.mesh, 2)?)?;
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let drift = reality_drift(&op, &s0, &times)?;
    Ok(check(8)
        .value("max_reality_drift", drift)
        .bound("limit", 1e-12)
        .verdict(drift <= 1e-12))
}

fn frequency(_: &Ctx) -> Outcome {
    let grid = default_lambda_grid();
    let mut sups = Vec::new();
    let mut finite = true;
    for n in [32, 64] {
        let bf = complex_model(n)?.block_form()?;
        let cert = require_certificate(&bf)?;
        let op = extract_operator(&bf)?.with_shift(cert.omega + SHIFT_MARGIN);
        let curve = frequency_response(&op, &grid)?;
        finite &= curve.norms.iter().all(|v| v.is_finite());
        sups.push(curve.sup_norm);
    }
    let spread = (sups[0] - sups[1]).abs() / sups[0].max(sups[1]);
    Ok(check(9)
        .value("grid_points", grid.len())
        .value("all_finite", finite)
        .value("sup_norm_n32", sups[0])
        .value("sup_norm_n64", sups[1])
        .value("relative_spread", spread)
        .bound("spread_limit", 0.15)
        .verdict(finite && spread <= 0.15))
}

fn parabola(ctx: &Ctx) -> Outcome {
    let bf = complex_model(32)?.block_form()?;
    let k = block_constants(&bf)?;
    let chain_bound = 1.0 + k.ma_direct + k.mb_direct;
    let cert = require_certificate(&bf)?;
    let sample = numerical_range(&bf, DEFAULT_ANGLE_COUNT)?;
    let p = parabola_check(&bf, &cert, &sample)?;
    let p = if ctx.corrupted("parabola") {
        parabola_check_with(p.constant * 0.5, &cert, &sample)
    } else {
        p
    };
    let chain = k.block_imag_direct <= chain_bound + 1e-8;
    Ok(check(10)
        .value("block_imag", k.block_imag_direct)
        .value("alpha", cert.alpha)
        .value("omega", cert.omega)
        .value("support_points", sample.support_points.len())
        .value("parabola_margin", p.margin)
        .bound("one_plus_ma_plus_mb", chain_bound)
        .bound("parabola_constant", p.constant)
        .verdict(chain && p.pass))
}

fn sector(ctx: &Ctx) -> Outcome {
    let bf = complex_model(32)?.block_form()?;
    let k = block_constants(&bf)?;
    let cert = require_certificate(&bf)?;
    let sample = numerical_range(&bf, DEFAULT_ANGLE_COUNT)?;
    let sc = if ctx.corrupted("sector") {
        sector_check_with(k.mblock_direct * 0.5, &cert, &sample)
    } else {
        sector_check(&bf, &cert, &sample)?
    };
    let slope = k.mblock_direct * ctx.factor("sector") / cert.alpha;
    let excess = sample
        .support_points
        .iter()
        .map(|z| z.im.abs() - slope * (z.re + cert.omega))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(check(11)
        .value("max_angle", sc.max_angle)
        .value("max_excess", excess)
        .value("alpha", cert.alpha)
        .value("omega", cert.omega)
        .bound("bound_angle", sc.bound_angle)
        .bound("slope", slope)
        .verdict(sc.pass && excess <= 1e-8))
}

fn dynamic_bc(ctx: &Ctx) -> Outcome {
    let mut out = check(12);
    let mut pass = true;
    let mut s = ctx.sampler(12);
    for n in [32, 64] {
        let sys = assemble_dynamic_bc(&Mesh1D::new(1.0, n)?, c(1.0, 0.0))?;
        let bf = sys.block_form();
        let cert = certificate(bf)?;
        let op = extract_operator(bf)?;
        let max_re = spectrum(&op)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let s0 = State::new(s.real_vector(sys.nodes()), s.real_vector(sys.nodes()))?;
        let run = propagate_linear(&op, &s0, &uniform_times(0.05, 1.0)?, Method::ExactExponential)?;
        let embedded: Vec<CVector> = run.states.iter().map(|st| sys.embed(st)).collect();
        let violation = dynamic_bc_invariant_check(&sys, &embedded);
        let omega = cert.map_or(f64::NAN, |c| c.omega);
        pass &= cert.is_some() && max_re <= omega + 1e-8 && violation <= 1e-8 && sys.constraint_rank() == 2;
        out = out
            .value(&format!("n{n}_certified"), cert.is_some())
            .value(&format!("n{n}_omega"), omega)
            .value(&format!("n{n}_max_real_part"), max_re)
            .value(&format!("n{n}_constraint_violation"), violation)
            .value(&format!("n{n}_constraint_rank"), sys.constraint_rank());
    }
    Ok(out.bound("violation_limit", 1e-8).verdict(pass))
}

fn semilinear(_: &Ctx) -> Outcome {
    let m = constant(64, c(1.0, 0.0), 1.0)?;
    let bf = m.block_form()?;
    let op = extract_operator(&bf)?;
    let kg = KleinGordon {
        mass_sq: 1.0,
        gram_h: m.pair.gram_h().clone(),
    };
    let mode = mode_vector(&m.mesh, 1)?;
    let s0 = State::new(&mode * c(0.1, 0.0), CVector::zeros(m.pair.dim()))?;
    let runs = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| propagate_semilinear(&op, &kg, &s0, dt, 1.0))
        .collect::<Result<Vec<_>, _>>()?;
    let e0 = runs[0].energies[0];
    let max_energy = runs.iter().flat_map(|r| r.energies.iter().copied()).fold(0.0, f64::max);
    let bounded = max_energy.is_finite() && max_energy <= 10.0 * e0;
    let finals: Vec<CVector> = runs.iter().map(|r| r.final_state().to_vector()).collect();
    let order = self_convergence_order(&finals[0], &finals[1], &finals[2], bf.block_pair().gram_h());

    let big = State::new(&mode * c(1e3, 0.0), CVector::zeros(m.pair.dim()))?;
    let (exit_code, last_time) = match propagate_semilinear(&op, &kg, &big, 0.02, 1.0) {
        Ok(_) => (0, f64::NAN),
        Err(e) => {
            let last = match &e {
                dwlab_core::Error::BlowUp { last_time, .. } => *last_time,
                _ => f64::NAN,
            };
            (CliError::from(e).exit_code(), last)
        }
    };
    let guard = exit_code == crate::exit::BLOW_UP;
    Ok(check(13)
        .value("initial_energy", e0)
        .value("max_energy", max_energy)
        .value("observed_order", order)
        .value("blow_up_exit_code", exit_code)
        .value("blow_up_last_time", last_time)
        .bound("order_low", 0.8)
        .bound("order_high", 1.2)
        .bound("energy_growth_limit", 10.0)
        .verdict(bounded && (0.8..=1.2).contains(&order) && guard))
}

fn nonautonomous(_: &Ctx) -> Outcome {
    let m = constant(16, c(2.0, 0.0), 1.0)?;
    let (sa, sb) = (m.a.matrix().clone(), m.b.matrix().clone());
    let family = NonautonomousFamily::new(
        Box::new(move |t| Ok((sa.clone(), &sb * c(1.0 + t, 0.0)))),
        m.pair.clone(),
        1.0,
    )?;
    let t_grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let cert = equi_ellipticity_check(&family, &t_grid, &default_omega_grid(), &tol())?;
    let s0 = State::new(mode_vector(&m.mesh, 1)?, CVector::zeros(m.pair.dim()))?;
    let finals = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            Ok(propagate_nonautonomous(&family, &s0, &uniform_times(dt, 1.0)?)?
                .final_state()
                .to_vector())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let gram = dwlab_core::linalg::block_diag(m.pair.gram_v(), m.pair.gram_h());
    let order = self_convergence_order(&finals[0], &finals[1], &finals[2], &gram);
    let mut out = check(14)
        .value("certified", cert.is_some())
        .value("observed_order", order);
    if let Some(cert) = cert {
        out = out.value("alpha", cert.alpha).value("omega", cert.omega);
    }
    Ok(out
        .bound("order_low", 0.7)
        .bound("order_high", 1.3)
        .verdict(cert.is_some() && (0.7..=1.3).contains(&order)))
}
