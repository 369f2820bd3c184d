//! Locally D-optimal three-point designs.
//!
//! With `w = g'` (or any [`InfoWeight`]) non-negative and non-increasing on
//! the mean range, the smallest stimulus sits at `L`. If in addition
//! `μ w'(μ) + 2 w(μ) ≥ 0`, the largest sits at `U`, and the middle stimulus is
//! the root of
//!
//! `F(x₂) = β₂β₃ w'(μ₂) M(x) + 2 w(μ₂) S(x)`, with
//! `S(x) = β₃x₁^β₃ log(x₂/x₁) + β₃x₃^β₃ log(x₃/x₂) + x₁^β₃ − x₃^β₃`,
//!
//! bracketed by `(x₁, x₂⁰]` where `β₃ log x₂⁰ = [z₃ log z₃ − z₁ log z₁]/(z₃ − z₁) − 1`
//! and `z = x^β₃`. When the last condition fails the search runs over a
//! `(x₂, x₃)` grid with `x₁ = L`; when the first two fail, over all three
//! stimuli.

pub mod grid;
mod root;
pub mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ConditionReport, Family, InfoWeight};
use crate::fisher::{bracket, HeteroSpec, VarianceFn};
use crate::model::{Bounds, Design, ModelParams};

pub use grid::{brute_force_oracle, grid_points, DetCriterion, Fixed, OracleResult, DEFAULT_CELL_CAP};
pub use transform::{TransformSpec, Transformed};

use grid::{argmax, design_det, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    RootFind,
    #[serde(rename = "grid-search-1d")]
    GridSearch1D,
    #[serde(rename = "grid-search-2d")]
    GridSearch2D,
    #[serde(rename = "grid-search-3d")]
    GridSearch3D,
}

/// Placement conditions at the ends of the mean range, and whether each holds
/// on the whole range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    /// `None` when `μ(L)` is a degenerate mean such as a Poisson mean of zero.
    pub at_lower: Option<ConditionReport>,
    pub at_upper: ConditionReport,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

impl Conditions {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub design: Design,
    /// `|I₃ₓ₃|` with one replicate per stimulus; `+∞` when `μ(L)` is degenerate.
    #[serde(with = "crate::serde_f64")]
    pub det: f64,
    pub method: Method,
    pub conditions: Conditions,
    /// `(x₁, x₂⁰]`: the interval the middle stimulus is known to lie in.
    pub x2_interval: [f64; 2],
    /// Root-finding iterations.
    pub iterations: usize,
    /// Grid cells evaluated.
    pub cells: u64,
    pub grid_step: Option<f64>,
    pub degenerate_lower: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub grid_step: f64,
    /// Fall back to grid search when the placement conditions fail.
    pub allow_grid_fallback: bool,
    /// Number of means at which the conditions are checked.
    pub condition_points: usize,
    pub max_cells: u64,
    /// Flips the sign of the `w'` term of the middle-stimulus equation.
    /// Exists only so verification can prove it detects a broken solver.
    #[doc(hidden)]
    pub corrupt_x2_equation: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grid_step: 0.01,
            allow_grid_fallback: true,
            condition_points: 101,
            max_cells: DEFAULT_CELL_CAP,
            corrupt_x2_equation: false,
        }
    }
}

/// Upper bound `x₂⁰` on the optimal middle stimulus given the outer two.
/// With `x₁ = 0` this is `x₃ e^{−1/β₃}`.
pub fn x2_upper_bound(b3: f64, x1: f64, x3: f64) -> f64 {
    if x1 == 0.0 {
        return x3 * (-1.0 / b3).exp();
    }
    // [z₃ log z₃ − z₁ log z₁]/(z₃ − z₁) / β₃ = log x₃ + r log(x₃/x₁)/(1 − r), r = (x₁/x₃)^β₃.
    let log_ratio = (x3 / x1).ln();
    let r = (-b3 * log_ratio).exp();
    let one_minus_r = -(-b3 * log_ratio).exp_m1();
    x3 * (r * log_ratio / one_minus_r - 1.0 / b3).exp()
}

/// Closed-form optimal middle stimulus for constant weight (normal responses):
/// `exp{[U^β₃ log U − L^β₃ log L]/[U^β₃ − L^β₃] − 1/β₃}`.
pub fn gaussian_x2_closed_form(params: &ModelParams, bounds: &Bounds) -> f64 {
    x2_upper_bound(params.b3, bounds.lower, bounds.upper)
}

/// `[U e^{−2/β₃}, U e^{−1/β₃}]`, which holds the Poisson middle stimulus when `L = 0`.
pub fn poisson_x2_bounds(params: &ModelParams, upper: f64) -> [f64; 2] {
    [upper * (-2.0 / params.b3).exp(), upper * (-1.0 / params.b3).exp()]
}

/// The two terms of the middle-stimulus equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct X2Terms {
    /// `β₂β₃ w'(μ₂) M(x)`.
    pub curvature: f64,
    /// `2 w(μ₂) S(x)`.
    pub slope: f64,
}

impl X2Terms {
    pub fn value(&self) -> f64 {
        self.curvature + self.slope
    }

    /// Scale against which a residual is judged.
    pub fn scale(&self) -> f64 {
        self.curvature.abs().max(self.slope.abs())
    }
}

fn x2_terms_raw(
    weight: &dyn InfoWeight,
    params: &ModelParams,
    x1: f64,
    x3: f64,
    x2: f64,
    flip: bool,
) -> Result<X2Terms> {
    if !(x1 >= 0.0 && x1 < x2 && x2 < x3 && x3.is_finite()) {
        return Err(Error::Order([x1, x2, x3]));
    }
    let b3 = params.b3;
    let (w, dw) = weight.weight(params.mu(x2))?;
    let z1 = x1.powf(b3);
    let z3 = x3.powf(b3);
    let low = if x1 > 0.0 { b3 * z1 * (x2 / x1).ln() } else { 0.0 };
    let s = low + b3 * z3 * (x3 / x2).ln() + z1 - z3;
    let curvature = params.b2 * b3 * dw * bracket(b3, [x1, x2, x3]);
    Ok(X2Terms { curvature: if flip { -curvature } else { curvature }, slope: 2.0 * w * s })
}

/// Both terms of the middle-stimulus equation at `x₂`.
pub fn x2_equation_terms<W: InfoWeight>(
    weight: &W,
    params: &ModelParams,
    x1: f64,
    x3: f64,
    x2: f64,
) -> Result<X2Terms> {
    x2_terms_raw(weight, params, x1, x3, x2, false)
}

/// Left-hand side of the middle-stimulus equation. With `x₁ = 0` it reduces to
/// `β₂β₃ w'(μ₂) x₂^β₃ x₃^β₃ log(x₃/x₂) + 2 w(μ₂) x₃^β₃ [β₃ log(x₃/x₂) − 1]`.
pub fn x2_equation<W: InfoWeight>(weight: &W, params: &ModelParams, x1: f64, x3: f64, x2: f64) -> Result<f64> {
    Ok(x2_equation_terms(weight, params, x1, x3, x2)?.value())
}

/// Middle-stimulus equation for normal responses with variance `σ² μᵖ` and
/// `x₁ = 0`, as the difference of
/// `β₃[(2−p)/(σ²μ₂ᵖ) + pβ₁/(σ²μ₂^{p+1}) + p²β₁/μ₂³] log(x₃/x₂)` and
/// `p²/μ₂² + 2/(σ²μ₂ᵖ)`.
pub fn hetero_x2_equation(sigma2: f64, p: f64, params: &ModelParams, x3: f64, x2: f64) -> Result<f64> {
    if !(0.0 < x2 && x2 < x3) {
        return Err(Error::Order([0.0, x2, x3]));
    }
    let mu = params.mu(x2);
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("power variance needs mean > 0, got {mu}")));
    }
    let mp = mu.powf(p);
    let b1 = params.b1;
    let lhs = params.b3
        * ((2.0 - p) / (sigma2 * mp) + p * b1 / (sigma2 * mp * mu) + p * p * b1 / mu.powi(3))
        * (x3 / x2).ln();
    let rhs = p * p / (mu * mu) + 2.0 / (sigma2 * mp);
    Ok(lhs - rhs)
}

/// Middle-stimulus equation for `√μ` under a log link:
/// `−0.75β₂β₃ M(x) + μ₂ S(x)`.
pub fn sqrt_log_x2_equation(params: &ModelParams, lower: f64, upper: f64, x2: f64) -> Result<f64> {
    let b3 = params.b3;
    if !(lower >= 0.0 && lower < x2 && x2 < upper) {
        return Err(Error::Order([lower, x2, upper]));
    }
    let zl = lower.powf(b3);
    let zu = upper.powf(b3);
    let low = if lower > 0.0 { b3 * zl * (x2 / lower).ln() } else { 0.0 };
    let s = low + b3 * zu * (upper / x2).ln() + zl - zu;
    Ok(-0.75 * params.b2 * b3 * bracket(b3, [lower, x2, upper]) + params.mu(x2) * s)
}

type X2Eq<'a> = &'a dyn Fn(f64, f64, f64) -> Result<f64>;

struct Problem<'a> {
    weight: &'a dyn InfoWeight,
    params: ModelParams,
    bounds: Bounds,
    opts: SolveOptions,
    /// Replaces the generic middle-stimulus equation; arguments `(x₁, x₃, x₂)`.
    equation: Option<X2Eq<'a>>,
    /// Exclusive cap on `x₂`.
    x2_cap: Option<f64>,
}

impl Problem<'_> {
    fn f(&self, x1: f64, x3: f64, x2: f64) -> Result<f64> {
        match self.equation {
            Some(eq) => eq(x1, x3, x2),
            None => Ok(x2_terms_raw(self.weight, &self.params, x1, x3, x2, self.opts.corrupt_x2_equation)?.value()),
        }
    }

    fn interval(&self, x1: f64, x3: f64) -> [f64; 2] {
        let ub = x2_upper_bound(self.params.b3, x1, x3);
        [x1, self.x2_cap.map_or(ub, |c| ub.min(c))]
    }

    fn root(&self, x1: f64, x3: f64) -> Result<(f64, usize)> {
        let eps = 1e-9 * (x3 - x1);
        let lo = x1 + eps;
        let [_, ub] = self.interval(x1, x3);
        let hi = (x3 - eps).min(ub);
        root::brent(|x2| self.f(x1, x3, x2), lo, hi).map_err(|e| match e {
            Error::Convergence(msg) => Error::Convergence(format!(
                "middle-stimulus equation on ({lo}, {hi}] for {}: {msg}",
                self.weight.label()
            )),
            other => other,
        })
    }

    /// Replaces a grid `x₂` by the stationary point within one step, when
    /// bracketed and not worse.
    fn polish(&self, x: [f64; 3]) -> Result<(f64, usize)> {
        let step = self.opts.grid_step;
        let eps = 1e-9 * (x[2] - x[0]);
        let lo = (x[1] - step).max(x[0] + eps);
        let mut hi = (x[1] + step).min(x[2] - eps);
        if let Some(cap) = self.x2_cap {
            hi = hi.min(cap * (1.0 - 1e-12));
        }
        let (Ok(flo), Ok(fhi)) = (self.f(x[0], x[2], lo), self.f(x[0], x[2], hi)) else {
            return Ok((x[1], 0));
        };
        if !(lo < hi) || flo.signum() == fhi.signum() {
            return Ok((x[1], 0));
        }
        let (x2, it) = root::brent(|v| self.f(x[0], x[2], v), lo, hi)?;
        let before = design_det(self.weight, &self.params, x, [1, 1, 1])?;
        let after = design_det(self.weight, &self.params, [x[0], x2, x[2]], [1, 1, 1])?;
        Ok(if after >= before { (x2, it) } else { (x[1], 0) })
    }

    fn check_conditions(&self) -> Result<(Conditions, bool)> {
        let p = &self.params;
        let (lo, hi) = (self.bounds.lower, self.bounds.upper);
        let mu_l = p.mu(lo);
        let mu_u = p.mu(hi);
        if !mu_u.is_finite() {
            return Err(Error::Range(format!("mean overflows at U = {hi}")));
        }
        let degenerate = self.weight.admits_degenerate_mean(mu_l);
        let eval = |mu: f64| -> Result<ConditionReport> {
            let (w, dw) = self.weight.weight(mu).map_err(|e| match e {
                Error::Domain(msg) if mu == 0.0 && lo == 0.0 => Error::Infeasible(format!(
                    "{} requires beta1 > 0 when L = 0 ({msg})",
                    self.weight.label()
                )),
                Error::Domain(msg) => Error::Infeasible(format!(
                    "mean range [{mu_l}, {mu_u}] leaves the domain of {}: {msg}",
                    self.weight.label()
                )),
                other => other,
            })?;
            Ok(ConditionReport::from_derivatives(mu, w, dw))
        };
        let at_lower = if degenerate { None } else { Some(eval(mu_l)?) };
        let at_upper = eval(mu_u)?;
        let n = self.opts.condition_points.max(2);
        let (mut c1, mut c2, mut c3) = (true, true, true);
        for k in 0..n {
            let mu = if k == n - 1 { mu_u } else { mu_l + (mu_u - mu_l) * k as f64 / (n - 1) as f64 };
            if degenerate && k == 0 {
                continue;
            }
            let r = eval(mu)?;
            c1 &= r.c1;
            c2 &= r.c2;
            c3 &= r.c3;
        }
        Ok((Conditions { at_lower, at_upper, c1, c2, c3 }, degenerate))
    }

    fn run(&self) -> Result<SolveReport> {
        self.params.validate()?;
        let bounds = Bounds::new(self.bounds.lower, self.bounds.upper)?;
        let step = self.opts.grid_step;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("grid step {step} must be positive")));
        }
        if bounds.width() < 10.0 * step {
            return Err(Error::Infeasible(format!(
                "window [{}, {}] is narrower than ten grid steps of {step}",
                bounds.lower, bounds.upper
            )));
        }
        let (conditions, degenerate) = self.check_conditions()?;
        let (lo, hi) = (bounds.lower, bounds.upper);
        let mut notes = Vec::new();

        let (x, method, iterations, cells, grid_step) = if conditions.all() {
            if self.weight.is_constant() && self.equation.is_none() {
                let x2 = gaussian_x2_closed_form(&self.params, &bounds);
                ([lo, x2, hi], Method::ClosedForm, 0, 0, None)
            } else {
                let (x2, it) = self.root(lo, hi)?;
                ([lo, x2, hi], Method::RootFind, it, 0, None)
            }
        } else if !self.opts.allow_grid_fallback {
            return Err(Error::Unsupported(format!(
                "placement conditions fail for {} (c1={}, c2={}, c3={}) and grid fallback is disabled",
                self.weight.label(),
                conditions.c1,
                conditions.c2,
                conditions.c3
            )));
        } else if (conditions.c1 && conditions.c2) || degenerate {
            if !(conditions.c1 && conditions.c2) {
                notes.push("x1 held at L because its mean is degenerate (infinite information)".into());
            }
            let (x, cells) = self.grid_2d()?;
            let (x2, it) = self.polish(x)?;
            ([x[0], x2, x[2]], Method::GridSearch2D, it, cells, Some(step))
        } else {
            notes.push(format!(
                "placement conditions fail on the mean range (c1={}, c2={}); optimal on the grid only",
                conditions.c1, conditions.c2
            ));
            let (x, cells) = self.grid_3d()?;
            let (x2, it) = self.polish(x)?;
            ([x[0], x2, x[2]], Method::GridSearch3D, it, cells, Some(step))
        };

        let design = Design::unit(x)?;
        let det = design_det(self.weight, &self.params, x, [1, 1, 1])?;
        Ok(SolveReport {
            design,
            det,
            method,
            conditions,
            x2_interval: self.interval(x[0], x[2]),
            iterations,
            cells,
            grid_step,
            degenerate_lower: degenerate,
            notes,
        })
    }

    fn x2_axis(&self, pts: &[f64]) -> Vec<f64> {
        pts.iter().copied().filter(|v| self.x2_cap.map_or(true, |c| *v < c)).collect()
    }

    fn grid_2d(&self) -> Result<([f64; 3], u64)> {
        let pts = grid_points(&self.bounds, self.opts.grid_step)?;
        let a1 = Axis::new(self.weight, &self.params, vec![self.bounds.lower], true)?;
        let a2 = Axis::new(self.weight, &self.params, self.x2_axis(&pts[1..]), false)?;
        let a3 = Axis::new(self.weight, &self.params, pts[1..].to_vec(), false)?;
        let (idx, _, cells) = argmax([&a1, &a2, &a3], self.opts.max_cells)?
            .ok_or_else(|| Error::Infeasible("no admissible (x2, x3) on the grid".into()))?;
        Ok(([a1.x[idx[0]], a2.x[idx[1]], a3.x[idx[2]]], cells))
    }

    /// Coarse grid at ten steps, then the full-resolution grid within two
    /// coarse steps of the coarse maximizer.
    fn grid_3d(&self) -> Result<([f64; 3], u64)> {
        const RATIO: usize = 10;
        let pts = grid_points(&self.bounds, self.opts.grid_step)?;
        let last = pts.len() - 1;
        let mut coarse: Vec<usize> = (0..pts.len()).step_by(RATIO).collect();
        if *coarse.last().unwrap() != last {
            coarse.push(last);
        }
        let pick = |idx: &[usize]| idx.iter().map(|&i| pts[i]).collect::<Vec<_>>();
        let cx = pick(&coarse);
        let axis = Axis::new(self.weight, &self.params, cx.clone(), false)?;
        let a2 = Axis::new(self.weight, &self.params, self.x2_axis(&cx), false)?;
        let (ci, _, coarse_cells) = argmax([&axis, &a2, &axis], self.opts.max_cells)?
            .ok_or_else(|| Error::Infeasible("no admissible design on the coarse grid".into()))?;
        let centre = [
            coarse[ci[0]],
            coarse[cx.iter().position(|v| *v == a2.x[ci[1]]).unwrap()],
            coarse[ci[2]],
        ];
        let window = |c: usize| {
            let from = c.saturating_sub(2 * RATIO);
            let to = (c + 2 * RATIO).min(last);
            pts[from..=to].to_vec()
        };
        let f1 = Axis::new(self.weight, &self.params, window(centre[0]), false)?;
        let f2 = Axis::new(self.weight, &self.params, self.x2_axis(&window(centre[1])), false)?;
        let f3 = Axis::new(self.weight, &self.params, window(centre[2]), false)?;
        let (fi, _, fine_cells) = argmax([&f1, &f2, &f3], self.opts.max_cells)?
            .ok_or_else(|| Error::Infeasible("no admissible design on the fine grid".into()))?;
        Ok(([f1.x[fi[0]], f2.x[fi[1]], f3.x[fi[2]]], coarse_cells + fine_cells))
    }
}

/// Optimal design for any information weight.
pub fn solve_weighted(
    weight: &dyn InfoWeight,
    params: &ModelParams,
    bounds: &Bounds,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    Problem { weight, params: *params, bounds: *bounds, opts: *opts, equation: None, x2_cap: None }.run()
}

/// Placement conditions over the mean range on `bounds`, and whether `μ(L)`
/// is a degenerate mean.
pub fn placement_conditions(
    weight: &dyn InfoWeight,
    params: &ModelParams,
    bounds: &Bounds,
    opts: &SolveOptions,
) -> Result<(Conditions, bool)> {
    params.validate()?;
    Problem { weight, params: *params, bounds: *bounds, opts: *opts, equation: None, x2_cap: None }.check_conditions()
}

/// Optimal design for a built-in family.
pub fn solve(family: Family, params: &ModelParams, bounds: &Bounds) -> Result<SolveReport> {
    solve_with(family, params, bounds, &SolveOptions::default())
}

pub fn solve_with(family: Family, params: &ModelParams, bounds: &Bounds, opts: &SolveOptions) -> Result<SolveReport> {
    if family == Family::InverseGaussian && bounds.lower == 0.0 {
        return invgauss_solve_with(params, bounds, opts);
    }
    solve_weighted(&family, params, bounds, opts)
}

/// `(2β₁/β₂)^{1/β₃}`, beyond which the inverse Gaussian middle stimulus never goes.
pub fn invgauss_x2_cap(params: &ModelParams) -> f64 {
    (2.0 * params.b1 / params.b2).powf(1.0 / params.b3)
}

/// Inverse Gaussian design with `L = 0`: grid search over `(x₂, x₃)` with
/// `x₂ < (2β₁/β₂)^{1/β₃}`, then the stationary `x₂` at the grid `x₃`.
pub fn invgauss_solve(params: &ModelParams, bounds: &Bounds, grid_step: f64) -> Result<SolveReport> {
    invgauss_solve_with(params, bounds, &SolveOptions { grid_step, ..SolveOptions::default() })
}

fn invgauss_solve_with(params: &ModelParams, bounds: &Bounds, opts: &SolveOptions) -> Result<SolveReport> {
    params.validate()?;
    if bounds.lower != 0.0 {
        return Err(Error::Unsupported(format!(
            "the inverse Gaussian cap applies with L = 0, got L = {}",
            bounds.lower
        )));
    }
    if params.b1 == 0.0 {
        return Err(Error::Infeasible("inverse Gaussian requires beta1 > 0 when L = 0".into()));
    }
    let cap = invgauss_x2_cap(params);
    let mut report = Problem {
        weight: &Family::InverseGaussian,
        params: *params,
        bounds: *bounds,
        opts: *opts,
        equation: None,
        x2_cap: Some(cap),
    }
    .run()?;
    report.notes.push(format!("x2 restricted below {cap}"));
    Ok(report)
}

/// Design for normal responses with variance `σ² φ(μ)`. For `φ = μᵖ`,
/// `0 < p ≤ 2` and `L = 0` the middle stimulus solves the power-variance
/// equation directly.
pub fn hetero_solve(spec: &HeteroSpec, params: &ModelParams, bounds: &Bounds) -> Result<SolveReport> {
    hetero_solve_with(spec, params, bounds, &SolveOptions::default())
}

pub fn hetero_solve_with(
    spec: &HeteroSpec,
    params: &ModelParams,
    bounds: &Bounds,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if !matches!(spec.variance, VarianceFn::Constant) {
        let mu_l = params.mu(bounds.lower);
        if !(mu_l > 0.0) {
            return Err(Error::Domain(format!("variance function needs mean > 0, got mu(L) = {mu_l}")));
        }
    }
    let sigma2 = spec.sigma2;
    let power_eq = move |_x1: f64, x3: f64, x2: f64| match spec.variance {
        VarianceFn::Power { p } => hetero_x2_equation(sigma2, p, params, x3, x2),
        _ => unreachable!(),
    };
    let equation: Option<X2Eq<'_>> = match spec.variance {
        VarianceFn::Power { p } if p <= 2.0 && bounds.lower == 0.0 => Some(&power_eq),
        _ => None,
    };
    Problem { weight: spec, params: *params, bounds: *bounds, opts: *opts, equation, x2_cap: None }.run()
}

/// Design for a transformed mean `ψ(μ)` under a family's canonical link.
pub fn transformed_solve(
    family: Family,
    psi: TransformSpec,
    params: &ModelParams,
    bounds: &Bounds,
) -> Result<SolveReport> {
    transformed_solve_with(family, psi, params, bounds, &SolveOptions::default())
}

pub fn transformed_solve_with(
    family: Family,
    psi: TransformSpec,
    params: &ModelParams,
    bounds: &Bounds,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if psi == TransformSpec::Identity {
        return solve_with(family, params, bounds, opts);
    }
    let weight = Transformed { family, psi };
    let log_link = matches!(family, Family::Poisson | Family::NegativeBinomial);
    let sqrt_eq = |x1: f64, x3: f64, x2: f64| sqrt_log_x2_equation(params, x1, x3, x2);
    let equation: Option<X2Eq<'_>> = if psi == TransformSpec::Sqrt && log_link { Some(&sqrt_eq) } else { None };
    Problem { weight: &weight, params: *params, bounds: *bounds, opts: *opts, equation, x2_cap: None }.run()
}

/// Relative efficiency of a candidate design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    /// `|I(candidate)| / |I(optimal)|`.
    pub ratio: f64,
    /// Cube root of the ratio.
    pub d_efficiency: f64,
}

pub fn efficiency<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    candidate: &Design,
    optimal: &Design,
) -> Result<Efficiency> {
    let c = design_det(weight, params, candidate.x, candidate.n)?;
    let o = design_det(weight, params, optimal.x, optimal.n)?;
    if !(o > 0.0 && o.is_finite() && c.is_finite()) {
        return Err(Error::Range(format!("efficiency undefined for determinants {c} and {o}")));
    }
    let ratio = c / o;
    Ok(Efficiency { ratio, d_efficiency: ratio.cbrt() })
}

/// Dilution design `{U/d², U/d, U}`.
pub fn dilution_design(upper: f64, d: f64) -> Result<Design> {
    if !(d > 1.0 && d.is_finite()) {
        return Err(Error::Config(format!("dilution factor {d} must exceed 1")));
    }
    Design::unit([upper / (d * d), upper / d, upper])
}
