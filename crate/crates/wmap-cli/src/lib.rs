//! Report building and file emission behind the `wmap` binary.
//!
//! Everything here is deterministic: the same inputs produce byte-identical
//! output. JSON uses serde's shortest round-trip float encoding; CSV uses
//! 17 significant digits. Step functions are emitted as `left,right,value`
//! rows in ascending order, contiguous over [0,1].

use serde::Serialize;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use wmap::{
    cross_validate, escape_rate, fixed_vector, invariant_density, matrix_second_eigenvalue,
    second_eigenvalue, sign_sets, simulate_residence, theorem_bracket, Error,
    MapParams, MarkovInstance64, ResidenceStats, StepFunction64,
};

/// Frozen reference values for the two standard cases at s1 = s2 = 2,
/// r = 1/4, with the tolerances the summary report checks against.
pub mod reference {
    pub const A_M5: f64 = 0.14789903570478;
    pub const A_M7: f64 = 0.077390319202550;
    pub const LAMBDA_M5: f64 = 0.8732372308;
    pub const LAMBDA_M7: f64 = 0.9365803433;
    pub const K_M5: f64 = 3.819456626;
    pub const K_M7: f64 = 8.987509817;

    pub const TOL_A: f64 = 1e-10;
    pub const TOL_LAMBDA: f64 = 1e-8;
    pub const TOL_K: f64 = 1e-5;
}

/// Problems a command can hit, mapped to exit codes by the binary:
/// usage 2, numeric/validation 3, I/O 4.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(Error),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error[Usage]: {msg}"),
            CliError::Numeric(e) => write!(f, "error[{}]: {e}", e.name()),
            CliError::Io(e) => write!(f, "error[Io]: {e}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Params {
    pub s1: f64,
    pub s2: f64,
    pub r: f64,
    pub a: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeSection {
    pub plus: f64,
    pub minus: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UlamSection {
    pub n: usize,
    pub lambda: f64,
    pub err_lambda: f64,
    pub err_density_l1: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub fixed: f64,
    pub second: Option<f64>,
}

/// Cross-check block: the second eigenvalue from the bisection route and
/// from power iteration on the matrix, with their agreement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumSection {
    pub lambda1: f64,
    pub lambda2_bisection: f64,
    pub lambda2_power: f64,
    pub route_disagreement: f64,
    pub power_converged: bool,
}

/// The stable report document; keys are always present, unfilled sections
/// are null.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub params: Params,
    pub lambda: Option<f64>,
    pub lambda_bounds: Option<[f64; 2]>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub escape: Option<EscapeSection>,
    pub ulam: Option<UlamSection>,
    pub residuals: Residuals,
    pub matrix_spectrum: Option<SpectrumSection>,
}

/// Builds the Markov instance from either the return index or the
/// amplitude (exactly one must be given; with an amplitude, the nearest
/// integer index is validated).
pub fn resolve_instance(
    s1: f64,
    s2: f64,
    r: f64,
    m: Option<usize>,
    a: Option<f64>,
) -> CliResult<MarkovInstance64> {
    match (m, a) {
        (Some(m), None) => Ok(MarkovInstance64::solve(s1, s2, r, m)?),
        (None, Some(a)) => {
            let m_real = wmap::m_from_a(s1, s2, r, a)?;
            let m = m_real.round();
            if m < 1.0 {
                return Err(CliError::Numeric(Error::NotMarkov {
                    reason: format!("amplitude {a} gives return index {m_real:.3} below 1"),
                }));
            }
            let map = MapParams::new(s1, s2, r, a)?;
            Ok(MarkovInstance64::build(map, m as usize)?)
        }
        _ => Err(CliError::Usage(
            "exactly one of --m and --a must be supplied".into(),
        )),
    }
}

fn params_of(inst: &MarkovInstance64) -> Params {
    let map = inst.map();
    Params {
        s1: map.s1(),
        s2: map.s2(),
        r: map.r(),
        a: map.a(),
        m: inst.m(),
    }
}

/// The full spectral report: eigenvalue, bracket, K norm, exact escape
/// rates of the sign sets, and eigen residuals.
pub fn build_report(inst: &MarkovInstance64) -> CliResult<Report> {
    let fixed = fixed_vector(inst);
    let pair = second_eigenvalue(inst)?;
    let (lo, hi) = theorem_bracket(inst);
    let sets = sign_sets(&pair.function)?;
    let density = invariant_density(inst);
    let bound = -pair.lambda.ln();
    let plus = escape_rate(inst.map(), &density, &sets.plus)?;
    let minus = escape_rate(inst.map(), &density, &sets.minus)?;
    Ok(Report {
        params: params_of(inst),
        lambda: Some(pair.lambda),
        lambda_bounds: Some([lo, hi]),
        k: pair.k_norm,
        escape: Some(EscapeSection {
            plus: plus.escape_rate,
            minus: minus.escape_rate,
            bound,
        }),
        ulam: None,
        residuals: Residuals {
            fixed: fixed.residual,
            second: Some(pair.residual),
        },
        matrix_spectrum: None,
    })
}

/// Report plus the two-route eigenvalue cross-check.
pub fn build_spectrum_report(inst: &MarkovInstance64) -> CliResult<Report> {
    let mut report = build_report(inst)?;
    let power = matrix_second_eigenvalue(inst);
    let bisect = report.lambda.unwrap();
    report.matrix_spectrum = Some(SpectrumSection {
        lambda1: 1.0,
        lambda2_bisection: bisect,
        lambda2_power: power.lambda,
        route_disagreement: (power.lambda - bisect).abs(),
        power_converged: power.converged,
    });
    Ok(report)
}

/// Report with the discretization section filled.
pub fn build_ulam_report(inst: &MarkovInstance64, n_bins: usize) -> CliResult<Report> {
    let mut report = build_report(inst)?;
    let cv = cross_validate(inst, n_bins)?;
    report.ulam = Some(UlamSection {
        n: cv.n,
        lambda: cv.lambda_ulam,
        err_lambda: cv.err_lambda,
        err_density_l1: cv.err_density_l1,
    });
    Ok(report)
}

/// Residence-time simulation over the sign-set partition.
pub fn run_simulation(inst: &MarkovInstance64, steps: u64, seed: u64) -> CliResult<SimulationReport> {
    let pair = second_eigenvalue(inst)?;
    let sets = sign_sets(&pair.function)?;
    let stats = simulate_residence(inst.map(), &sets.plus, None, steps, seed)?;
    Ok(SimulationReport {
        params: params_of(inst),
        lambda: pair.lambda,
        stats,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub params: Params,
    pub lambda: f64,
    pub stats: ResidenceStats,
}

/// 17-significant-digit float formatting for CSV (exact round trip).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180-plain CSV for a step function: header `left,right,value`,
/// ascending contiguous rows covering [0,1].
pub fn step_to_csv(f: &StepFunction64) -> String {
    let mut out = String::from("left,right,value\n");
    let bp = f.breakpoints();
    for (i, v) in f.values().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt_g17(bp[i]), fmt_g17(bp[i + 1]), fmt_g17(*v));
    }
    out
}

/// JSON document for a step function.
#[derive(Debug, Clone, Serialize)]
pub struct StepDocument {
    pub params: Params,
    pub kind: &'static str,
    pub rows: Vec<StepRow>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepRow {
    pub left: f64,
    pub right: f64,
    pub value: f64,
}

pub fn step_document(inst: &MarkovInstance64, kind: &'static str, f: &StepFunction64) -> StepDocument {
    let bp = f.breakpoints();
    StepDocument {
        params: params_of(inst),
        kind,
        rows: f
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| StepRow {
                left: bp[i],
                right: bp[i + 1],
                value: v,
            })
            .collect(),
    }
}

/// One case of the figure-reproduction summary.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryCase {
    pub m: usize,
    pub a: f64,
    pub a_ref: f64,
    pub a_tol: f64,
    pub a_pass: bool,
    pub lambda: f64,
    pub lambda_ref: f64,
    pub lambda_tol: f64,
    pub lambda_pass: bool,
    pub k: f64,
    pub k_ref: f64,
    pub k_tol: f64,
    pub k_pass: bool,
    /// integral of h/K (zero up to rounding)
    pub integral_over_k: f64,
    /// integral of |h|/K (one by construction)
    pub abs_integral_over_k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub cases: Vec<SummaryCase>,
    pub all_pass: bool,
}

/// Emits the two normalized eigenfunctions (m = 5 and m = 7 at the
/// default slopes) as CSV files plus a summary comparing the solved
/// numbers against the frozen references. Returns the summary.
pub fn reproduce_figure(out_dir: &Path) -> CliResult<Summary> {
    std::fs::create_dir_all(out_dir)?;
    let mut cases = Vec::new();
    for (m, a_ref, lambda_ref, k_ref) in [
        (5usize, reference::A_M5, reference::LAMBDA_M5, reference::K_M5),
        (7, reference::A_M7, reference::LAMBDA_M7, reference::K_M7),
    ] {
        let inst = MarkovInstance64::solve(2.0, 2.0, 0.25, m)?;
        let a = inst.map().a();
        let pair = second_eigenvalue(&inst)?;
        let k = pair.k_norm.expect("second pair carries its K norm");
        let normalized = pair.function.scale(1.0 / k);
        let path = out_dir.join(format!("eigenfunction_m{m}.csv"));
        std::fs::write(&path, step_to_csv(&normalized))?;
        cases.push(SummaryCase {
            m,
            a,
            a_ref,
            a_tol: reference::TOL_A,
            a_pass: (a - a_ref).abs() <= reference::TOL_A,
            lambda: pair.lambda,
            lambda_ref,
            lambda_tol: reference::TOL_LAMBDA,
            lambda_pass: (pair.lambda - lambda_ref).abs() <= reference::TOL_LAMBDA,
            k,
            k_ref,
            k_tol: reference::TOL_K,
            k_pass: (k - k_ref).abs() <= reference::TOL_K,
            integral_over_k: normalized.integral(),
            abs_integral_over_k: normalized.abs_integral(),
        });
    }
    let all_pass = cases
        .iter()
        .all(|c| c.a_pass && c.lambda_pass && c.k_pass);
    let summary = Summary { cases, all_pass };
    let json = to_json_string(&summary);
    std::fs::write(out_dir.join("summary.json"), json)?;
    Ok(summary)
}

/// Pretty JSON with a trailing newline; serde's float encoding is the
/// shortest exact round trip.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
