//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [model]
//! model = dirichlet        # dirichlet | dynamic-bc | scalar
//! n = 16
//! L = 1
//! alpha = const 1+0.5i     # const c | linear c0 c1 | sine c0 amp
//! beta = const 1
//!
//! [analysis]
//! angle_count = 256
//! lambda_grid = log 1e-2 1e4 200
//! omega_grid = range 0 1024 1
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dwlab_core::forms::default_omega_grid;
use dwlab_core::linalg::Tolerances;
use dwlab_core::models::CoefficientSpec;
use dwlab_core::spectral::{default_lambda_grid, log_lambda_grid, DEFAULT_ANGLE_COUNT};
use num_complex::Complex64;

use crate::CliError;

const SECTIONS: &[(&str, &[&str])] = &[
    ("model", &["model", "n", "L", "alpha", "beta", "rho", "a", "b"]),
    (
        "analysis",
        &[
            "angle_count",
            "lambda_grid",
            "omega_grid",
            "alpha_min",
            "inequality_slack",
        ],
    ),
    (
        "evolve",
        &["method", "dt", "T", "mode", "amplitude", "mass", "initial_file"],
    ),
    ("output", &["directory", "format"]),
    ("verify", &["corrupt_bound", "only"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "both" => Some(Format::Both),
            _ => None,
        }
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Dirichlet,
    DynamicBc,
    Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n: usize,
    pub length: f64,
    pub alpha: CoefficientSpec,
    pub beta: CoefficientSpec,
    pub rho: Option<Complex64>,
    /// Scalar model coefficients.
    pub a: Complex64,
    pub b: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub angle_count: usize,
    pub lambda_grid: Vec<f64>,
    pub omega_grid: Vec<f64>,
    pub tolerances: Tolerances,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            angle_count: DEFAULT_ANGLE_COUNT,
            lambda_grid: default_lambda_grid(),
            omega_grid: default_omega_grid(),
            tolerances: Tolerances::DEFAULT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveMethod {
    Exact,
    CrankNicolson,
    Semilinear,
    Nonautonomous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub method: EvolveMethod,
    pub dt: f64,
    pub t_end: f64,
    pub mode: usize,
    pub amplitude: f64,
    /// Klein–Gordon mass for the semilinear method.
    pub mass: f64,
    pub initial_file: Option<PathBuf>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            method: EvolveMethod::Exact,
            dt: 0.01,
            t_end: 1.0,
            mode: 1,
            amplitude: 1.0,
            mass: 1.0,
            initial_file: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyConfig {
    /// A bound to halve, making the corresponding check fail.
    pub corrupt_bound: Option<String>,
    /// Restrict the suite to these criterion numbers.
    pub only: Option<Vec<usize>>,
}

pub const CORRUPTIBLE_BOUNDS: &[&str] = &["angle-bound", "parabola", "sector"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    pub analysis: AnalysisConfig,
    pub evolve: EvolveConfig,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [model] section".into()))
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Parser {
    origin: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    section_lines: BTreeMap<String, usize>,
}

impl Parser {
    fn error(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::ConfigAt {
            origin: self.origin.clone(),
            line,
            message: message.into(),
        }
    }

    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.sections.get_mut(section).and_then(|s| s.remove(key))
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn parse_with<T>(
        &mut self,
        section: &str,
        key: &str,
        f: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        match self.take(section, key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .map_err(|m| self.error(e.line, format!("[{section}] {key}: {m}"))),
        }
    }

    fn require<T>(&mut self, section: &str, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<T, CliError> {
        let line = self.section_lines.get(section).copied().unwrap_or(0);
        match self.parse_with(section, key, f)? {
            Some(v) => Ok(v),
            None => Err(self.error(line, format!("[{section}] missing required key '{key}'"))),
        }
    }
}

fn lex(text: &str, origin: &str) -> Result<Parser, CliError> {
    let mut parser = Parser {
        origin: origin.to_string(),
        sections: BTreeMap::new(),
        section_lines: BTreeMap::new(),
    };
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parser.error(line, "unterminated section header"))?
                .trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(parser.error(line, format!("unknown section [{name}]")));
            }
            if parser.sections.contains_key(name) {
                return Err(parser.error(line, format!("section [{name}] appears twice")));
            }
            parser.sections.insert(name.to_string(), BTreeMap::new());
            parser.section_lines.insert(name.to_string(), line);
            current = Some(name.to_string());
            continue;
        }
        let Some(section) = current.clone() else {
            return Err(parser.error(line, "key outside of any section"));
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parser.error(line, format!("expected 'key = value', found '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let allowed = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(parser.error(line, format!("unknown key '{key}' in [{section}]")));
        }
        let entries = parser.sections.get_mut(&section).expect("section registered");
        if entries.contains_key(key) {
            return Err(parser.error(line, format!("duplicate key '{key}' in [{section}]")));
        }
        entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(parser)
}

/// Parses `1`, `-2.5e-3`, `0.5i`, `-i`, `1+0.5i`, `2-1e-3i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let s = s.trim();
    let bad = || format!("'{s}' is not a complex number");
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return match s.parse::<f64>() {
            Ok(re) if re.is_finite() => Ok(Complex64::new(re, 0.0)),
            _ => Err(bad()),
        };
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re.is_empty() {
        0.0
    } else {
        re.parse::<f64>().map_err(|_| bad())?
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| bad())?,
    };
    if !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn parse_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a finite number")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let v = parse_real(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be nonnegative"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("'{s}' is not a nonnegative integer"))
}

pub fn parse_coefficient(s: &str) -> Result<CoefficientSpec, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    let args = |n: usize| -> Result<Vec<Complex64>, String> {
        if words.len() != n + 1 {
            return Err(format!("'{}' expects {n} argument(s)", words[0]));
        }
        words[1..].iter().map(|w| parse_complex(w)).collect()
    };
    match words.first() {
        None => Err("empty coefficient".into()),
        Some(&"const") => Ok(CoefficientSpec::Const(args(1)?[0])),
        Some(&"linear") => {
            let v = args(2)?;
            Ok(CoefficientSpec::Linear(v[0], v[1]))
        }
        Some(&"sine") => {
            let v = args(2)?;
            Ok(CoefficientSpec::Sine(v[0], v[1]))
        }
        Some(_) if words.len() == 1 => Ok(CoefficientSpec::Const(parse_complex(words[0])?)),
        Some(other) => Err(format!("unknown coefficient kind '{other}' (const, linear, sine)")),
    }
}

fn parse_lambda_grid(s: &str) -> Result<Vec<f64>, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    let grid = match words.as_slice() {
        [] => return Err("lambda grid is empty".into()),
        ["default"] => default_lambda_grid(),
        ["log", lo, hi, per_sign] => {
            let (lo, hi) = (positive(lo)?, positive(hi)?);
            let per_sign = count(per_sign)?;
            if lo >= hi || per_sign == 0 {
                return Err("log grid needs 0 < lo < hi and at least one point".into());
            }
            log_lambda_grid(lo, hi, per_sign)
        }
        ["list", rest @ ..] => rest.iter().map(|w| parse_real(w)).collect::<Result<_, _>>()?,
        _ => return Err("expected 'default', 'log lo hi per_sign' or 'list v...'".into()),
    };
    if grid.is_empty() {
        return Err("lambda grid is empty".into());
    }
    if grid.contains(&0.0) {
        return Err("lambda grid must exclude 0".into());
    }
    Ok(grid)
}

fn parse_omega_grid(s: &str) -> Result<Vec<f64>, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    let grid: Vec<f64> = match words.as_slice() {
        [] => return Err("omega grid is empty".into()),
        ["default"] => default_omega_grid(),
        ["range", start, stop, step] => {
            let (start, stop, step) = (parse_real(start)?, parse_real(stop)?, positive(step)?);
            if stop < start {
                return Err("range stop is below start".into());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|k| start + k as f64 * step).collect()
        }
        ["list", rest @ ..] => rest.iter().map(|w| parse_real(w)).collect::<Result<_, _>>()?,
        _ => return Err("expected 'default', 'range start stop step' or 'list v...'".into()),
    };
    if grid.is_empty() {
        return Err("omega grid is empty".into());
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err("omega grid must be ascending".into());
    }
    Ok(grid)
}

/// Parses configuration text; `origin` labels diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let mut p = lex(text, origin)?;

    let model = if p.has_section("model") {
        let kind = p.require("model", "model", |s| match s {
            "dirichlet" => Ok(ModelKind::Dirichlet),
            "dynamic-bc" => Ok(ModelKind::DynamicBc),
            "scalar" => Ok(ModelKind::Scalar),
            _ => Err(format!("unknown model '{s}' (dirichlet, dynamic-bc, scalar)")),
        })?;
        let model = match kind {
            ModelKind::Scalar => ModelConfig {
                kind,
                n: 1,
                length: 1.0,
                alpha: CoefficientSpec::Const(Complex64::new(1.0, 0.0)),
                beta: CoefficientSpec::Const(Complex64::new(1.0, 0.0)),
                rho: p.parse_with("model", "rho", parse_complex)?,
                a: p.require("model", "a", parse_complex)?,
                b: p.require("model", "b", parse_complex)?,
            },
            ModelKind::Dirichlet | ModelKind::DynamicBc => {
                let n = p.require("model", "n", |s| match count(s)? {
                    n if n >= 2 => Ok(n),
                    n => Err(format!("{n} cells; at least 2 are needed")),
                })?;
                let length = p.parse_with("model", "L", positive)?.unwrap_or(1.0);
                let alpha = p.require("model", "alpha", parse_coefficient)?;
                let beta = if kind == ModelKind::DynamicBc {
                    let beta = p.parse_with("model", "beta", parse_coefficient)?;
                    match beta {
                        None => CoefficientSpec::Const(Complex64::new(1.0, 0.0)),
                        Some(CoefficientSpec::Const(v)) if v == Complex64::new(1.0, 0.0) => CoefficientSpec::Const(v),
                        Some(_) => {
                            return Err(CliError::Config(
                                "[model] beta: the dynamic-bc model requires beta = const 1".into(),
                            ))
                        }
                    }
                } else {
                    p.require("model", "beta", parse_coefficient)?
                };
                if kind == ModelKind::DynamicBc && alpha.constant_value().is_none() {
                    return Err(CliError::Config(
                        "[model] alpha: the dynamic-bc model requires a constant alpha".into(),
                    ));
                }
                ModelConfig {
                    kind,
                    n,
                    length,
                    alpha,
                    beta,
                    rho: p.parse_with("model", "rho", parse_complex)?,
                    a: Complex64::new(0.0, 0.0),
                    b: Complex64::new(0.0, 0.0),
                }
            }
        };
        Some(model)
    } else {
        None
    };

    let mut analysis = AnalysisConfig::default();
    if let Some(v) = p.parse_with("analysis", "angle_count", |s| match count(s)? {
        n if n >= 8 => Ok(n),
        n => Err(format!("{n} angles; at least 8 are needed")),
    })? {
        analysis.angle_count = v;
    }
    if let Some(v) = p.parse_with("analysis", "lambda_grid", parse_lambda_grid)? {
        analysis.lambda_grid = v;
    }
    if let Some(v) = p.parse_with("analysis", "omega_grid", parse_omega_grid)? {
        analysis.omega_grid = v;
    }
    if let Some(v) = p.parse_with("analysis", "alpha_min", positive)? {
        analysis.tolerances.alpha_min = v;
    }
    if let Some(v) = p.parse_with("analysis", "inequality_slack", nonnegative)? {
        analysis.tolerances.inequality_slack = v;
    }

    let mut evolve = EvolveConfig::default();
    if let Some(v) = p.parse_with("evolve", "method", |s| match s {
        "exact" | "exact-exponential" => Ok(EvolveMethod::Exact),
        "crank-nicolson" => Ok(EvolveMethod::CrankNicolson),
        "semilinear" => Ok(EvolveMethod::Semilinear),
        "nonautonomous" => Ok(EvolveMethod::Nonautonomous),
        _ => Err(format!(
            "unknown method '{s}' (exact, crank-nicolson, semilinear, nonautonomous)"
        )),
    })? {
        evolve.method = v;
    }
    if let Some(v) = p.parse_with("evolve", "dt", positive)? {
        evolve.dt = v;
    }
    if let Some(v) = p.parse_with("evolve", "T", positive)? {
        evolve.t_end = v;
    }
    if let Some(v) = p.parse_with("evolve", "mode", count)? {
        evolve.mode = v;
    }
    if let Some(v) = p.parse_with("evolve", "amplitude", parse_real)? {
        evolve.amplitude = v;
    }
    if let Some(v) = p.parse_with("evolve", "mass", nonnegative)? {
        evolve.mass = v;
    }
    evolve.initial_file = p.parse_with("evolve", "initial_file", |s| Ok(PathBuf::from(s)))?;

    let output = OutputConfig {
        directory: p.parse_with("output", "directory", |s| Ok(PathBuf::from(s)))?,
        format: p.parse_with("output", "format", |s| {
            Format::parse(s).ok_or_else(|| format!("unknown format '{s}' (csv, json, both)"))
        })?,
    };

    let verify = VerifyConfig {
        corrupt_bound: p.parse_with("verify", "corrupt_bound", |s| {
            if CORRUPTIBLE_BOUNDS.contains(&s) {
                Ok(s.to_string())
            } else {
                Err(format!("unknown bound '{s}' ({})", CORRUPTIBLE_BOUNDS.join(", ")))
            }
        })?,
        only: p.parse_with("verify", "only", |s| {
            let ids: Vec<usize> = s
                .split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(count)
                .collect::<Result<_, _>>()?;
            if ids.is_empty() || ids.iter().any(|&k| k == 0 || k > 15) {
                return Err("criterion numbers must lie in 1..=15".into());
            }
            Ok(ids)
        })?,
    };

    // keys valid in general but not for the chosen model
    for (section, entries) in &p.sections {
        if let Some((key, entry)) = entries.iter().next() {
            return Err(p.error(
                entry.line,
                format!("key '{key}' in [{section}] does not apply to this model"),
            ));
        }
    }

    Ok(RunConfig {
        model,
        analysis,
        evolve,
        output,
        verify,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}
