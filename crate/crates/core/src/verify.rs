//! Self-verification: the solver against an exhaustive grid oracle, and the
//! information matrix against Monte-Carlo maximum-likelihood fits.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::Family;
use crate::mle::{covariance_check, CovarianceReport, SimConfig};
use crate::model::{Bounds, Design, ModelParams};
use crate::solver::{
    brute_force_oracle, dilution_design, placement_conditions, solve_with, DetCriterion, Fixed, OracleResult,
    SolveOptions,
};
use crate::tables::{preset_bounds, preset_params, TABLE1_FAMILIES};

pub const VERIFY_SCHEMA: &str = "mitscherlich-verify/v1";

/// Largest tolerated relative deviation of an empirical variance from the
/// asymptotic one.
pub const COVARIANCE_TOLERANCE: f64 = 0.10;

/// How much of the design the oracle searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    /// All three stimuli on the grid.
    Full,
    /// Stimuli that the placement conditions pin to an endpoint are held
    /// there; the rest are searched. The decision uses only the conditions,
    /// never the solver's answer.
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub family: Family,
    pub params: ModelParams,
    pub bounds: Bounds,
}

/// The six preset rows for every family of the first table, then the six
/// inverse Gaussian rows.
pub fn preset_cases() -> Vec<OracleCase> {
    let bounds = preset_bounds();
    let mut cases = Vec::with_capacity(42);
    for params in preset_params() {
        for family in TABLE1_FAMILIES {
            cases.push(OracleCase { family, params, bounds });
        }
    }
    for params in preset_params() {
        cases.push(OracleCase { family: Family::InverseGaussian, params, bounds });
    }
    cases
}

/// Which stimuli the oracle holds fixed for `case` under `mode`.
pub fn oracle_fixed(case: &OracleCase, mode: OracleMode, opts: &SolveOptions) -> Result<Fixed> {
    if mode == OracleMode::Full {
        return Ok(Fixed::default());
    }
    let (lo, hi) = (case.bounds.lower, case.bounds.upper);
    let (c, degenerate) = placement_conditions(&case.family, &case.params, &case.bounds, opts)?;
    Ok(if c.all() {
        Fixed::ends(lo, hi)
    } else if (c.c1 && c.c2) || degenerate {
        Fixed::lower(lo)
    } else {
        Fixed::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRun {
    pub case: OracleCase,
    pub fixed: Fixed,
    pub result: OracleResult,
}

/// Runs the oracle for every case. Independent of any solver settings except
/// the grid step and cell cap.
pub fn run_oracles(cases: &[OracleCase], mode: OracleMode, opts: &SolveOptions) -> Result<Vec<OracleRun>> {
    cases
        .iter()
        .map(|case| {
            let fixed = oracle_fixed(case, mode, opts)?;
            let criterion = DetCriterion { weight: &case.family, params: case.params, n: [1, 1, 1] };
            let result = brute_force_oracle(&criterion, &case.bounds, opts.grid_step, fixed, opts.max_cells)?;
            Ok(OracleRun { case: *case, fixed, result })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAgreement {
    pub family: Family,
    pub params: ModelParams,
    pub oracle: [f64; 3],
    /// `None` when the solver failed; see `error`.
    pub solver: Option<[f64; 3]>,
    pub error: Option<String>,
    /// Which stimuli the oracle held fixed.
    pub fixed: [bool; 3],
    /// `+∞` when the solver failed.
    #[serde(with = "crate::serde_f64")]
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub cells: u64,
    pub pass: bool,
}

/// Compares the solver (with `opts`, which may carry a fault) against
/// precomputed oracle runs. Agreement means every stimulus within one grid step.
pub fn compare_solver(runs: &[OracleRun], opts: &SolveOptions) -> Vec<OracleAgreement> {
    let tolerance = opts.grid_step * (1.0 + 1e-9);
    runs.iter()
        .map(|run| {
            let c = &run.case;
            let oracle = run.result.design.x;
            let fixed = [run.fixed.x1.is_some(), run.fixed.x2.is_some(), run.fixed.x3.is_some()];
            let (solver, error, diff) = match solve_with(c.family, &c.params, &c.bounds, opts) {
                Ok(r) => {
                    let d = (0..3).map(|i| (r.design.x[i] - oracle[i]).abs()).fold(0.0, f64::max);
                    (Some(r.design.x), None, d)
                }
                Err(e) => (None, Some(e.to_string()), f64::INFINITY),
            };
            OracleAgreement {
                family: c.family,
                params: c.params,
                oracle,
                solver,
                error,
                fixed,
                max_abs_diff: diff,
                tolerance,
                cells: run.result.cells,
                pass: diff <= tolerance,
            }
        })
        .collect()
}

/// Empirical against asymptotic covariance at one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCheck {
    pub report: CovarianceReport,
    pub tolerance: f64,
    pub pass: bool,
}

/// Log generalized variance of `β̂` at one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedVariance {
    pub label: String,
    pub design: Design,
    pub log_generalized_variance: f64,
    pub se: f64,
}

/// The optimal design against perturbed competitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DOptimalityCheck {
    pub family: Family,
    pub params: ModelParams,
    pub optimal: GeneralizedVariance,
    pub candidates: Vec<GeneralizedVariance>,
    /// The optimal log generalized variance may exceed a candidate's by at
    /// most twice the standard error of the difference.
    pub pass: bool,
}

/// Five competitors to the optimal design `(L, x₂, U)`.
pub fn perturbed_designs(optimal: &Design, bounds: &Bounds) -> Result<Vec<(&'static str, Design)>> {
    let [lo, x2, hi] = optimal.x;
    Ok(vec![
        ("x2 * 0.6", Design::unit([lo, lo + 0.6 * (x2 - lo), hi])?),
        ("x2 * 1.5", Design::unit([lo, lo + 1.5 * (x2 - lo), hi])?),
        ("x1 raised", Design::unit([lo + 0.2 * (x2 - lo), x2, hi])?),
        ("x3 lowered", Design::unit([lo, x2, x2 + 0.75 * (hi - x2)])?),
        ("dilution d=15", dilution_design(bounds.upper, 15.0)?),
    ])
}

fn gv(label: &'static str, r: &CovarianceReport) -> GeneralizedVariance {
    GeneralizedVariance {
        label: label.to_string(),
        design: r.design,
        log_generalized_variance: r.log_generalized_variance,
        se: r.log_generalized_variance_se,
    }
}

/// Covariance check at the optimal design plus the generalized-variance
/// comparison against [`perturbed_designs`].
pub fn monte_carlo_checks(
    family: Family,
    params: &ModelParams,
    bounds: &Bounds,
    config: &SimConfig,
    opts: &SolveOptions,
) -> Result<(CovarianceCheck, DOptimalityCheck)> {
    let optimal = solve_with(family, params, bounds, opts)?.design;
    let report = covariance_check(family, params, &optimal, config)?;
    let cov = CovarianceCheck {
        pass: report.max_relative_diagonal_deviation < COVARIANCE_TOLERANCE,
        tolerance: COVARIANCE_TOLERANCE,
        report,
    };
    let best = gv("optimal", &cov.report);
    let mut candidates = Vec::new();
    for (label, design) in perturbed_designs(&optimal, bounds)? {
        candidates.push(gv(label, &covariance_check(family, params, &design, config)?));
    }
    let pass = candidates.iter().all(|c| {
        let se = (best.se * best.se + c.se * c.se).sqrt();
        best.log_generalized_variance <= c.log_generalized_variance + 2.0 * se
    });
    let dopt = DOptimalityCheck { family, params: *params, optimal: best, candidates, pass };
    Ok((cov, dopt))
}

/// Settings for a full verification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub mode: OracleMode,
    pub solve: SolveOptions,
    /// Monte-Carlo settings; `None` skips the simulation checks.
    pub simulation: Option<SimConfig>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { mode: OracleMode::Conditional, solve: SolveOptions::default(), simulation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub oracle_mode: OracleMode,
    pub grid_step: f64,
    pub oracle: Vec<OracleAgreement>,
    pub covariance: Vec<CovarianceCheck>,
    pub d_optimality: Vec<DOptimalityCheck>,
    /// One line per failed check.
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Monte-Carlo scenarios: Poisson and Gaussian on the preset window.
pub fn monte_carlo_scenarios() -> [(Family, ModelParams); 2] {
    [
        (Family::Poisson, ModelParams { b1: 0.5, b2: 1.0, b3: 1.0 }),
        (Family::Gaussian, ModelParams { b1: 1.0, b2: 1.0, b3: 1.0 }),
    ]
}

pub fn verify(config: &VerifyConfig) -> Result<VerifyReport> {
    let runs = run_oracles(&preset_cases(), config.mode, &config.solve)?;
    let oracle = compare_solver(&runs, &config.solve);
    let mut failures: Vec<String> = oracle
        .iter()
        .filter(|a| !a.pass)
        .map(|a| {
            let p = a.params;
            match &a.error {
                Some(e) => format!("oracle agreement: {} ({}, {}, {}): solver error: {e}", a.family, p.b1, p.b2, p.b3),
                None => format!(
                    "oracle agreement: {} ({}, {}, {}): |solver - oracle| = {:.4} > {}",
                    a.family, p.b1, p.b2, p.b3, a.max_abs_diff, config.solve.grid_step
                ),
            }
        })
        .collect();

    let mut covariance = Vec::new();
    let mut d_optimality = Vec::new();
    if let Some(sim) = config.simulation {
        for (family, params) in monte_carlo_scenarios() {
            let (cov, dopt) = monte_carlo_checks(family, &params, &preset_bounds(), &sim, &config.solve)?;
            if !cov.pass {
                failures.push(format!(
                    "covariance: {family}: max relative diagonal deviation {:.4} >= {}",
                    cov.report.max_relative_diagonal_deviation, cov.tolerance
                ));
            }
            if !dopt.pass {
                failures.push(format!("d-optimality: {family}: a perturbed design has smaller generalized variance"));
            }
            covariance.push(cov);
            d_optimality.push(dopt);
        }
    }
    Ok(VerifyReport {
        schema: VERIFY_SCHEMA.to_string(),
        oracle_mode: config.mode,
        grid_step: config.solve.grid_step,
        oracle,
        covariance,
        d_optimality,
        passed: failures.is_empty(),
        failures,
    })
}
