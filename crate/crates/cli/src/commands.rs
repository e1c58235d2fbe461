//! The `analyze`, `spectrum`, `evolve` and `verify` subcommands.

use std::f64::consts::PI;
use std::path::Path;

use dwlab_core::block::{
    assemble_block_form, block_constants, block_ellipticity, block_matrix_is_hermitian, extract_operator,
    noncoercivity_witness, rho_characterization_check, selfadjointness_check, BlockForm, BlockOperator,
};
use dwlab_core::evolution::{
    propagate_linear, propagate_nonautonomous, propagate_semilinear, self_convergence_order, uniform_times, Method,
    NonautonomousFamily, State, TrajectoryRecord,
};
use dwlab_core::forms::{ellipticity_constants, EllipticityCertificate, InnerProductPair, SesquilinearForm};
use dwlab_core::linalg::{c, diag_real, gram_norm_sq, CMatrix, CVector};
use dwlab_core::models::{
    analytic_mode_oracle, assemble_dirichlet_model, assemble_dynamic_bc, dynamic_bc_invariant_check, mode_vector,
    CoefficientField, DirichletModel, DynamicBcSystem, KleinGordon, Mesh1D,
};
use dwlab_core::sampling::Sampler;
use dwlab_core::spectral::{
    frequency_response, numerical_range, parabola_check, sector_check, spectrum, NumericalRangeSample,
};
use serde::Serialize;

use crate::acceptance::{self, SuiteOptions};
use crate::config::{EvolveMethod, ModelConfig, ModelKind, RunConfig};
use crate::export::{complex_list_csv, matrix_csv, Csv, Sink};
use crate::report::{Check, VerificationReport};
use crate::CliError;

/// Margin added to the certified shift before sampling the resolvent.
pub const SHIFT_MARGIN: f64 = 1e-6;
const WITNESS_SAMPLES: usize = 100;

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    Dirichlet(DirichletModel),
    DynamicBc(DynamicBcSystem),
    Scalar(BlockForm),
}

pub fn build_model(cfg: &ModelConfig) -> Result<Model, CliError> {
    match cfg.kind {
        ModelKind::Dirichlet => {
            let mesh = Mesh1D::new(cfg.length, cfg.n)?;
            let field = CoefficientField {
                alpha: cfg.alpha,
                beta: cfg.beta,
            };
            Ok(Model::Dirichlet(assemble_dirichlet_model(&mesh, &field)?))
        }
        ModelKind::DynamicBc => {
            let mesh = Mesh1D::new(cfg.length, cfg.n)?;
            let alpha = cfg
                .alpha
                .constant_value()
                .ok_or_else(|| CliError::Config("dynamic-bc needs a constant alpha".into()))?;
            Ok(Model::DynamicBc(assemble_dynamic_bc(&mesh, alpha)?))
        }
        ModelKind::Scalar => {
            let pair = InnerProductPair::new(diag_real(&[1.0]), diag_real(&[1.0]))?;
            let a = SesquilinearForm::new(CMatrix::from_element(1, 1, cfg.a))?;
            let b = SesquilinearForm::new(CMatrix::from_element(1, 1, cfg.b))?;
            Ok(Model::Scalar(assemble_block_form(a, b, pair)?))
        }
    }
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Dirichlet(_) => "dirichlet",
            Model::DynamicBc(_) => "dynamic-bc",
            Model::Scalar(_) => "scalar",
        }
    }

    pub fn block_form(&self) -> Result<BlockForm, CliError> {
        match self {
            Model::Dirichlet(m) => Ok(m.block_form()?),
            Model::DynamicBc(s) => Ok(s.block_form().clone()),
            Model::Scalar(bf) => Ok(bf.clone()),
        }
    }

    /// Mode `k` scaled by `amplitude`, at rest; `k = 0` or zero amplitude gives zero data.
    pub fn initial_state(&self, k: usize, amplitude: f64) -> Result<State, CliError> {
        let u1 = match self {
            Model::Dirichlet(m) => {
                if k == 0 {
                    CVector::zeros(m.pair.dim())
                } else {
                    mode_vector(&m.mesh, k)?
                }
            }
            Model::DynamicBc(s) => {
                let len = s.mesh.length();
                CVector::from_iterator(
                    s.nodes(),
                    s.mesh.nodes().iter().map(|x| c((k as f64 * PI * x / len).cos(), 0.0)),
                )
            }
            Model::Scalar(_) => CVector::from_element(1, c(1.0, 0.0)),
        };
        let n = u1.len();
        Ok(State::new(u1 * c(amplitude, 0.0), CVector::zeros(n))?)
    }
}

fn ellipticity(bf: &BlockForm, cfg: &RunConfig) -> Result<Option<EllipticityCertificate>, CliError> {
    Ok(block_ellipticity(
        bf,
        &cfg.analysis.omega_grid,
        &cfg.analysis.tolerances,
    )?)
}

fn range_csv(sample: &NumericalRangeSample) -> String {
    let mut csv = Csv::with_header(&["theta", "re_z", "im_z"]);
    for (theta, z) in sample.angles.iter().zip(&sample.support_points) {
        csv.row(&[*theta, z.re, z.im]);
    }
    csv.as_str().to_string()
}

#[derive(Serialize)]
struct OperatorSidecar {
    n: usize,
    omega: f64,
    convention: &'static str,
}

fn export_operator(sink: &Sink, op: &BlockOperator) -> Result<(), CliError> {
    sink.csv("generator.csv", &matrix_csv(op.matrix()))?;
    sink.json(
        "generator.json",
        &OperatorSidecar {
            n: op.dim() / 2,
            omega: op.omega(),
            convention: "generator=-A",
        },
    )
}

/// Checks on the block form of the configured model.
pub fn analyze_checks(
    model: &Model,
    cfg: &RunConfig,
    seed: u64,
) -> Result<(Vec<Check>, Option<EllipticityCertificate>, NumericalRangeSample), CliError> {
    let bf = model.block_form()?;
    let slack = cfg.analysis.tolerances.inequality_slack;
    let tol = &cfg.analysis.tolerances;
    let k = block_constants(&bf)?;
    let mut checks = vec![
        Check::new("block-continuity", "continuity of the block form from that of a and b")
            .value("m_a", k.ma_direct)
            .value("m_b", k.mb_direct)
            .value("m_block", k.mblock_direct)
            .value("closed_form_holds", k.continuity_within_bound(slack))
            .bound("composite", k.mblock_composite)
            .bound("closed_form", k.mblock_bound)
            .verdict(k.continuity_within_composite(slack)),
        Check::new(
            "imaginary-part-chain",
            "|Im a(u,u)| against the H and V norms of the block form",
        )
        .value("block_imag", k.block_imag_direct)
        .value("m_b_imag", k.mb_imag)
        .value("continuity_form_holds", k.imag_within_bound(slack))
        .bound("one_plus_ma_plus_mb_imag", k.block_imag_bound_imag)
        .bound("one_plus_ma_plus_mb", k.block_imag_bound)
        .verdict(k.imag_within_imag_bound(slack)),
    ];

    let cert = ellipticity(&bf, cfg)?;
    let b_cert = ellipticity_constants(bf.b(), bf.second_slot(), &cfg.analysis.omega_grid, tol)?;
    let mut check = Check::new("block-ellipticity", "block form is H-elliptic iff b is")
        .value("b_elliptic", b_cert.is_some())
        .value("block_elliptic", cert.is_some());
    if let Some(c) = &cert {
        check = check.value("alpha", c.alpha).value("omega", c.omega);
    }
    checks.push(check.verdict(cert.is_some() && b_cert.is_some()));

    let sample = numerical_range(&bf, cfg.analysis.angle_count)?;
    match &cert {
        Some(cert) => {
            let s = sector_check(&bf, cert, &sample)?;
            checks.push(
                Check::new(
                    "sector",
                    "shifted numerical range lies in the sector of half-angle arctan(M/alpha)",
                )
                .value("max_angle", s.max_angle)
                .value("generation_angle", s.generation_angle)
                .bound("bound_angle", s.bound_angle)
                .verdict(s.pass),
            );
            let p = parabola_check(&bf, cert, &sample)?;
            checks.push(
                Check::new("parabola", "numerical range lies in a parabola")
                    .value("margin", p.margin)
                    .bound("constant", p.constant)
                    .verdict(p.pass),
            );
        }
        None => {
            for name in ["sector", "parabola"] {
                checks.push(
                    Check::new(name, "requires an ellipticity certificate").note("no certificate on the omega grid"),
                );
            }
        }
    }

    let sa = selfadjointness_check(&bf, tol);
    let herm = block_matrix_is_hermitian(&bf, tol);
    checks.push(
        Check::new(
            "selfadjointness",
            "b self-adjoint and a = -(.|.)_V iff the block form is symmetric",
        )
        .value("selfadjoint_data", sa)
        .value("block_symmetric", herm)
        .verdict(sa == herm),
    );

    let mut sampler = Sampler::new(seed);
    let mut worst: f64 = 0.0;
    let mut holds = true;
    for i in 0..=WITNESS_SAMPLES {
        let u1 = if i == 0 {
            None
        } else {
            Some(sampler.complex_vector(bf.dim()))
        };
        let w = noncoercivity_witness(&bf, u1.as_ref())?;
        worst = worst.max(w.re_form.abs() / w.norm_v_sq);
        holds &= w.holds();
    }
    checks.push(
        Check::new("noncoercivity-witness", "Re a((u,0),(u,0)) = 0")
            .value("max_relative_re", worst)
            .bound("limit", 1e-14)
            .verdict(holds),
    );

    if let Some(rho) = cfg.model()?.rho {
        let mut check = Check::new("rho-characterization", "a = rho b gives A u = (-u2, B(rho u1 + u2))")
            .value("rho_re", rho.re)
            .value("rho_im", rho.im)
            .bound("limit", 1e-12);
        check = match rho_characterization_check(&bf, rho, tol) {
            Ok(r) => check.value("residual", r).verdict(r <= 1e-12),
            Err(dwlab_core::Error::Precondition(m)) => check.note(m),
            Err(e) => return Err(e.into()),
        };
        checks.push(check);
    }
    Ok((checks, cert, sample))
}

pub fn analyze(cfg: &RunConfig, seed: u64, sink: &Sink) -> Result<VerificationReport, CliError> {
    let model = build_model(cfg.model()?)?;
    let (checks, cert, sample) = analyze_checks(&model, cfg, seed)?;
    let bf = model.block_form()?;
    let op = extract_operator(&bf)?.with_shift(cert.map_or(0.0, |c| c.omega));
    sink.csv("numerical_range.csv", &range_csv(&sample))?;
    export_operator(sink, &op)?;
    let report = VerificationReport::new("analyze", model.name(), seed, checks);
    sink.json("analyze.json", &report)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct SpectrumSummary {
    pub model: String,
    pub omega: f64,
    pub certified_shift: bool,
    pub eigenvalue_count: usize,
    pub max_real_part: f64,
    pub sup_norm: f64,
    pub max_angle: Option<f64>,
    pub bound_angle: Option<f64>,
    pub parabola_constant: Option<f64>,
    pub sector_pass: bool,
    pub parabola_pass: bool,
    pub pass: bool,
}

pub fn spectrum_command(cfg: &RunConfig, sink: &Sink) -> Result<SpectrumSummary, CliError> {
    let model = build_model(cfg.model()?)?;
    let bf = model.block_form()?;
    let op = extract_operator(&bf)?;
    let eig = spectrum(&op)?;
    let max_real_part = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let cert = ellipticity(&bf, cfg)?;
    let omega = match &cert {
        Some(c) => c.omega + SHIFT_MARGIN,
        None => max_real_part.max(0.0) + SHIFT_MARGIN,
    };
    let shifted = op.with_shift(omega);
    let curve = frequency_response(&shifted, &cfg.analysis.lambda_grid)?;
    let sample = numerical_range(&bf, cfg.analysis.angle_count)?;
    let (sector, parabola) = match &cert {
        Some(c) => (
            Some(sector_check(&bf, c, &sample)?),
            Some(parabola_check(&bf, c, &sample)?),
        ),
        None => (None, None),
    };
    let summary = SpectrumSummary {
        model: model.name().to_string(),
        omega,
        certified_shift: cert.is_some(),
        eigenvalue_count: eig.len(),
        max_real_part,
        sup_norm: curve.sup_norm,
        max_angle: sector.map(|s| s.max_angle),
        bound_angle: sector.map(|s| s.bound_angle),
        parabola_constant: parabola.map(|p| p.constant),
        sector_pass: sector.is_some_and(|s| s.pass),
        parabola_pass: parabola.is_some_and(|p| p.pass),
        pass: cert.is_some() && sector.is_some_and(|s| s.pass) && parabola.is_some_and(|p| p.pass),
    };
    sink.csv("eigenvalues.csv", &complex_list_csv(&eig))?;
    let mut fr = Csv::with_header(&["lambda", "norm"]);
    for (l, n) in curve.lambdas.iter().zip(&curve.norms) {
        fr.row(&[*l, *n]);
    }
    sink.csv("frequency_response.csv", fr.as_str())?;
    sink.csv("numerical_range.csv", &range_csv(&sample))?;
    export_operator(sink, &shifted)?;
    sink.json("spectrum.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct EvolveSummary {
    pub model: String,
    pub method: String,
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_norm_h: f64,
    pub max_reality_drift: f64,
    pub observed_order: Option<f64>,
    pub oracle_relative_error: Option<f64>,
    pub constraint_violation: Option<f64>,
}

fn method_name(m: EvolveMethod) -> &'static str {
    match m {
        EvolveMethod::Exact => "exact-exponential",
        EvolveMethod::CrankNicolson => "crank-nicolson",
        EvolveMethod::Semilinear => "semilinear",
        EvolveMethod::Nonautonomous => "nonautonomous",
    }
}

fn read_initial_file(path: &Path, n: usize) -> Result<State, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let mut u1 = Vec::new();
    let mut u2 = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(|ch: char| ch.is_ascii_alphabetic()) {
            continue;
        }
        let cells: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match cells.as_deref() {
            Ok([a, b, c2, d]) => {
                u1.push(c(*a, *b));
                u2.push(c(*c2, *d));
            }
            _ => {
                return Err(CliError::ConfigAt {
                    origin: path.display().to_string(),
                    line: idx + 1,
                    message: "expected u1_re,u1_im,u2_re,u2_im".into(),
                })
            }
        }
    }
    if u1.len() != n {
        return Err(CliError::Config(format!(
            "{}: {} rows for {n} degrees of freedom",
            path.display(),
            u1.len()
        )));
    }
    Ok(State::new(CVector::from_vec(u1), CVector::from_vec(u2))?)
}

struct Run {
    record: TrajectoryRecord,
    energy_gram: CMatrix,
}

fn run_method(model: &Model, cfg: &RunConfig, s0: &State, dt: f64) -> Result<Run, CliError> {
    let bf = model.block_form()?;
    let op = extract_operator(&bf)?;
    let ev = &cfg.evolve;
    let energy_gram = bf.block_pair().gram_h().clone();
    let record = match ev.method {
        EvolveMethod::Exact | EvolveMethod::CrankNicolson => {
            let method = if ev.method == EvolveMethod::Exact {
                Method::ExactExponential
            } else {
                Method::CrankNicolson
            };
            propagate_linear(&op, s0, &uniform_times(dt, ev.t_end)?, method)?
        }
        EvolveMethod::Semilinear => {
            let kg = KleinGordon {
                mass_sq: ev.mass * ev.mass,
                gram_h: bf.pair().gram_h().clone(),
            };
            propagate_semilinear(&op, &kg, s0, dt, ev.t_end)?
        }
        EvolveMethod::Nonautonomous => {
            if matches!(model, Model::DynamicBc(_)) {
                return Err(CliError::Config(
                    "the nonautonomous method supports the dirichlet and scalar models".into(),
                ));
            }
            let (sa, sb) = (bf.a().matrix().clone(), bf.b().matrix().clone());
            let family = NonautonomousFamily::new(
                Box::new(move |t| Ok((sa.clone(), &sb * c(1.0 + t, 0.0)))),
                bf.pair().clone(),
                ev.t_end,
            )?;
            propagate_nonautonomous(&family, s0, &uniform_times(dt, ev.t_end)?)?
        }
    };
    Ok(Run { record, energy_gram })
}

fn trajectory_csv(model: &Model, record: &TrajectoryRecord) -> String {
    let n = record.states[0].dim();
    let boundary = matches!(model, Model::DynamicBc(_));
    let mut header = vec!["time".to_string(), "energy".to_string(), "reality_drift".to_string()];
    let slots: &[&str] = if boundary { &["u1", "u2", "u3"] } else { &["u1", "u2"] };
    for slot in slots {
        let len = if *slot == "u3" {
            dwlab_core::models::BOUNDARY_DIM
        } else {
            n
        };
        for j in 0..len {
            header.push(format!("{slot}_{j}_re"));
            header.push(format!("{slot}_{j}_im"));
        }
    }
    let mut csv = Csv::with_header(&header);
    for k in 0..record.len() {
        let mut row = vec![record.times[k], record.energies[k], record.reality_drift[k]];
        let x = match model {
            Model::DynamicBc(s) => s.embed(&record.states[k]),
            _ => record.states[k].to_vector(),
        };
        row.extend(x.iter().flat_map(|z| [z.re, z.im]));
        csv.row(&row);
    }
    csv.as_str().to_string()
}

pub fn evolve(cfg: &RunConfig, sink: &Sink) -> Result<EvolveSummary, CliError> {
    let model = build_model(cfg.model()?)?;
    let ev = &cfg.evolve;
    let dim = model.block_form()?.dim();
    let s0 = match &ev.initial_file {
        Some(path) => read_initial_file(path, dim)?,
        None => model.initial_state(ev.mode, ev.amplitude)?,
    };
    let run = run_method(&model, cfg, &s0, ev.dt)?;
    let record = &run.record;

    let observed_order = if ev.method == EvolveMethod::Exact {
        None
    } else {
        let half = run_method(&model, cfg, &s0, ev.dt / 2.0)?;
        let quarter = run_method(&model, cfg, &s0, ev.dt / 4.0)?;
        let order = self_convergence_order(
            &record.final_state().to_vector(),
            &half.record.final_state().to_vector(),
            &quarter.record.final_state().to_vector(),
            &run.energy_gram,
        );
        order.is_finite().then_some(order)
    };

    let oracle_relative_error = match (&model, ev.method, ev.initial_file.is_none(), ev.mode) {
        (Model::Dirichlet(m), EvolveMethod::Exact | EvolveMethod::CrankNicolson, true, k) if k > 0 => {
            let cfg_model = cfg.model()?;
            match (cfg_model.alpha.constant_value(), cfg_model.beta.constant_value()) {
                (Some(alpha), Some(beta)) if beta.im == 0.0 => {
                    let exact = analytic_mode_oracle(&m.mesh, alpha, beta.re, k, ev.t_end)?;
                    let exact = exact.to_vector() * c(ev.amplitude, 0.0);
                    let diff = record.final_state().to_vector() - &exact;
                    let denom = gram_norm_sq(&run.energy_gram, &exact).sqrt();
                    (denom > 0.0).then(|| gram_norm_sq(&run.energy_gram, &diff).sqrt() / denom)
                }
                _ => None,
            }
        }
        _ => None,
    };

    let constraint_violation = match &model {
        Model::DynamicBc(s) => {
            let embedded: Vec<CVector> = record.states.iter().map(|st| s.embed(st)).collect();
            Some(dynamic_bc_invariant_check(s, &embedded))
        }
        _ => None,
    };

    let summary = EvolveSummary {
        model: model.name().to_string(),
        method: method_name(ev.method).to_string(),
        steps: record.len() - 1,
        dt: ev.dt,
        t_end: ev.t_end,
        initial_energy: record.energies[0],
        final_energy: *record.energies.last().expect("nonempty"),
        final_norm_h: record.energies.last().expect("nonempty").sqrt(),
        max_reality_drift: record.max_reality_drift(),
        observed_order,
        oracle_relative_error,
        constraint_violation,
    };
    sink.csv("trajectory.csv", &trajectory_csv(&model, record))?;
    sink.json("evolve.json", &summary)?;
    Ok(summary)
}

pub fn verify(cfg: Option<&RunConfig>, seed: u64, sink: &Sink) -> Result<acceptance::SuiteReport, CliError> {
    let options = SuiteOptions {
        seed,
        corrupt_bound: cfg.and_then(|c| c.verify.corrupt_bound.clone()),
        only: cfg.and_then(|c| c.verify.only.clone()),
    };
    let report = acceptance::run_suite(&options);
    sink.json("verify.json", &report)?;
    Ok(report)
}
