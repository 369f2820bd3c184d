//! Monte-Carlo check of the information matrix: simulate responses at a
//! design, fit `β` by Fisher scoring and compare the spread of `β̂` with the
//! inverse information.
//!
//! Replicate `r`, stimulus `i` draws from ChaCha8 seeded with the run seed on
//! stream `4r + i`, so datasets do not depend on thread count or on the order
//! in which replicates are processed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, InverseGaussian, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, InfoWeight};
use crate::linalg::{add_assign, condition1, det3, inverse3, matmul, matvec, outer};
use crate::model::{Design, Matrix3, ModelParams};

pub const COVARIANCE_SCHEMA: &str = "mitscherlich-covariance/v1";

/// Simulation settings.
///
/// `dispersion` is the family's nuisance value: `σ²` for Gaussian, the shape
/// `k` for Gamma and negative binomial, and `λ` for inverse Gaussian. It is
/// ignored by Poisson and binomial responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replicates: usize,
    pub n_per_point: u32,
    pub dispersion: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { seed: 1, replicates: 2000, n_per_point: 500, dispersion: 1.0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n_per_point == 0 {
            return Err(Error::Config("n_per_point must be at least 1".into()));
        }
        if !(self.dispersion > 0.0 && self.dispersion.is_finite()) {
            return Err(Error::Config(format!(
                "dispersion {} must be positive and finite",
                self.dispersion
            )));
        }
        Ok(())
    }
}

/// Responses at the three stimuli of one simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: [Vec<f64>; 3],
}

impl Dataset {
    pub fn totals(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.samples[i].iter().sum())
    }

    pub fn counts(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.samples[i].len() as f64)
    }

    pub fn means(&self) -> [f64; 3] {
        let t = self.totals();
        let n = self.counts();
        [0, 1, 2].map(|i| t[i] / n[i])
    }
}

fn stream_rng(seed: u64, replicate: usize, point: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64 * 4 + point as u64);
    rng
}

fn bad(e: impl std::fmt::Display) -> Error {
    Error::Domain(e.to_string())
}

fn draw<R: Rng>(family: Family, mu: f64, dispersion: f64, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !family.mean_domain().contains(mu) {
        if family.admits_degenerate_mean(mu) {
            return Ok(vec![0.0; count]);
        }
        return Err(Error::Domain(format!("mean {mu} outside the {} mean domain", family.name())));
    }
    let out = match family {
        Family::Gaussian => {
            let d = Normal::new(mu, dispersion.sqrt()).map_err(bad)?;
            (0..count).map(|_| d.sample(rng)).collect()
        }
        Family::Poisson => {
            let d = Poisson::new(mu).map_err(bad)?;
            (0..count).map(|_| d.sample(rng)).collect()
        }
        Family::NegativeBinomial => {
            let g = Gamma::new(dispersion, mu / dispersion).map_err(bad)?;
            let mut v = Vec::with_capacity(count);
            for _ in 0..count {
                let lambda: f64 = g.sample(rng);
                v.push(if lambda > 0.0 { Poisson::new(lambda).map_err(bad)?.sample(rng) } else { 0.0 });
            }
            v
        }
        Family::Gamma => {
            let d = Gamma::new(dispersion, mu / dispersion).map_err(bad)?;
            (0..count).map(|_| d.sample(rng)).collect()
        }
        Family::Binomial { trials } => {
            let d = Binomial::new(u64::from(trials), mu / f64::from(trials)).map_err(bad)?;
            (0..count).map(|_| d.sample(rng) as f64).collect()
        }
        Family::InverseGaussian => {
            let d = InverseGaussian::new(mu, dispersion).map_err(bad)?;
            (0..count).map(|_| d.sample(rng)).collect()
        }
    };
    Ok(out)
}

/// One replicate; identical to entry `replicate` of [`simulate`].
pub fn simulate_replicate(
    family: Family,
    params: &ModelParams,
    design: &Design,
    config: &SimConfig,
    replicate: usize,
) -> Result<Dataset> {
    config.validate()?;
    let mut samples: [Vec<f64>; 3] = Default::default();
    for i in 0..3 {
        let mu = params.mean(design.x[i])?;
        let count = design.n[i] as usize * config.n_per_point as usize;
        let mut rng = stream_rng(config.seed, replicate, i);
        samples[i] = draw(family, mu, config.dispersion, count, &mut rng)?;
    }
    Ok(Dataset { samples })
}

/// `config.replicates` independent datasets with `nᵢ · n_per_point` draws at stimulus `i`.
pub fn simulate(family: Family, params: &ModelParams, design: &Design, config: &SimConfig) -> Result<Vec<Dataset>> {
    config.validate()?;
    (0..config.replicates)
        .into_par_iter()
        .map(|r| simulate_replicate(family, params, design, config, r))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Known `a(φ)`. Scales score and information alike, so `β̂` does not
    /// depend on it; only the reported log-likelihood does.
    pub dispersion: f64,
    pub max_iter: usize,
    /// Convergence when `max |∂ℓ/∂βₖ| < tol · n` (score taken with `a(φ) = 1`).
    pub tol: f64,
    /// Information matrices with a larger 1-norm condition estimate are rejected.
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { dispersion: 1.0, max_iter: 200, tol: 1e-8, max_condition: 1e12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: ModelParams,
    pub converged: bool,
    pub iterations: usize,
    /// Kernel log-likelihood `Σ [yᵢ. g(μᵢ) − nᵢ b(g(μᵢ))] / a(φ)`.
    pub loglik: f64,
    /// `max |∂ℓ/∂βₖ|` at `β̂`, with `a(φ) = 1`.
    pub score_max: f64,
}

struct Eval {
    loglik: f64,
    score: [f64; 3],
    info: Matrix3,
}

fn evaluate(family: Family, beta: &ModelParams, x: &[f64; 3], tot: &[f64; 3], n: &[f64; 3]) -> Option<Eval> {
    let mut loglik = 0.0;
    let mut score = [0.0; 3];
    let mut info = [[0.0; 3]; 3];
    for i in 0..3 {
        let mu = beta.mu(x[i]);
        if !family.mean_domain().contains(mu) {
            return None;
        }
        let (g1, _) = family.link_derivatives(mu).ok()?;
        loglik += tot[i] * family.link(mu).ok()? - n[i] * family.cumulant(mu).ok()?;
        let grad = beta.gradient(x[i]);
        let r = (tot[i] - n[i] * mu) * g1;
        for k in 0..3 {
            score[k] += r * grad[k];
        }
        add_assign(&mut info, &outer(&grad, &grad), n[i] * g1);
    }
    let finite = loglik.is_finite() && score.iter().all(|s| s.is_finite());
    finite.then_some(Eval { loglik, score, info })
}

/// Maximum-likelihood fit by Fisher scoring with step halving.
pub fn fit(family: Family, dataset: &Dataset, design: &Design, start: &ModelParams) -> Result<FitResult> {
    fit_with(family, dataset, design, start, &FitOptions::default())
}

pub fn fit_with(
    family: Family,
    dataset: &Dataset,
    design: &Design,
    start: &ModelParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    if !(opts.dispersion > 0.0 && opts.dispersion.is_finite()) {
        return Err(Error::Config(format!("a(phi) = {} must be positive", opts.dispersion)));
    }
    let x = design.x;
    let tot = dataset.totals();
    let n = dataset.counts();
    let n_total: f64 = n.iter().sum();
    let threshold = opts.tol * n_total;
    let mut beta = *start;
    let mut cur = evaluate(family, &beta, &x, &tot, &n)
        .ok_or_else(|| Error::Domain(format!("starting values {start:?} give means outside the domain")))?;
    let score_max = |e: &Eval| e.score.iter().fold(0.0f64, |m, s| m.max(s.abs()));

    for iter in 0..=opts.max_iter {
        let smax = score_max(&cur);
        if smax < threshold {
            return Ok(FitResult {
                beta_hat: beta,
                converged: true,
                iterations: iter,
                loglik: cur.loglik / opts.dispersion,
                score_max: smax,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        // Scoring step with a(φ) applied to both sides.
        let info = cur.info.map(|r| r.map(|v| v / opts.dispersion));
        let condition = condition1(&info);
        if !(condition <= opts.max_condition) {
            return Err(Error::SingularInformation { condition });
        }
        let inv = inverse3(&info).ok_or(Error::SingularInformation { condition: f64::INFINITY })?;
        let step = matvec(&inv, &cur.score.map(|s| s / opts.dispersion));
        let b = beta.as_array();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = ModelParams::from_array([0, 1, 2].map(|k| b[k] + t * step[k]));
            if let Some(e) = evaluate(family, &cand, &x, &tot, &n) {
                if e.loglik >= cur.loglik - 1e-12 * cur.loglik.abs() {
                    accepted = Some((cand, e));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, e)) => {
                beta = cand;
                cur = e;
            }
            None => break,
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, score: score_max(&cur) })
}

/// Crude cold start: a grid over `β₃` with least squares for `β₁, β₂` on the
/// stimulus means.
pub fn grid_start(dataset: &Dataset, design: &Design) -> Result<ModelParams> {
    let y = dataset.means();
    let w = dataset.counts();
    let mut best: Option<(f64, ModelParams)> = None;
    for k in 1..=300 {
        let b3 = 0.01 * k as f64;
        let z = design.x.map(|x| x.powf(b3));
        let sw: f64 = w.iter().sum();
        let zbar = (0..3).map(|i| w[i] * z[i]).sum::<f64>() / sw;
        let ybar = (0..3).map(|i| w[i] * y[i]).sum::<f64>() / sw;
        let szz: f64 = (0..3).map(|i| w[i] * (z[i] - zbar).powi(2)).sum();
        if szz == 0.0 {
            continue;
        }
        let b2 = (0..3).map(|i| w[i] * (z[i] - zbar) * (y[i] - ybar)).sum::<f64>() / szz;
        let b1 = ybar - b2 * zbar;
        let sse: f64 = (0..3).map(|i| w[i] * (y[i] - b1 - b2 * z[i]).powi(2)).sum();
        if best.map_or(true, |(s, _)| sse < s) {
            best = Some((sse, ModelParams { b1, b2, b3 }));
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| Error::Domain("no usable starting value".into()))
}

/// Empirical covariance of `β̂` against the asymptotic reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub schema: String,
    pub family: Family,
    pub params: ModelParams,
    pub design: Design,
    pub config: SimConfig,
    pub mean_beta_hat: [f64; 3],
    pub empirical: Matrix3,
    /// `A⁻¹ B A⁻¹` with `A = Σ Nᵢ g'(μᵢ) ∇μᵢ∇μᵢᵀ` and
    /// `B = Σ Nᵢ g'(μᵢ)² Var(yᵢ) ∇μᵢ∇μᵢᵀ`; for exponential families this is
    /// the inverse information `[I/a(φ)]⁻¹`.
    pub reference: Matrix3,
    /// `(empirical − reference) / reference` for every element.
    pub relative_deviation: Matrix3,
    pub max_relative_diagonal_deviation: f64,
    pub log_generalized_variance: f64,
    pub log_generalized_variance_reference: f64,
    /// Approximate Monte-Carlo standard error of `log_generalized_variance`.
    pub log_generalized_variance_se: f64,
}

/// Asymptotic covariance of `β̂` for `n_per_point` copies of the design.
pub fn reference_covariance(
    family: Family,
    params: &ModelParams,
    design: &Design,
    n_per_point: u32,
    dispersion: f64,
) -> Result<Matrix3> {
    let mut a = [[0.0; 3]; 3];
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        let mu = params.mean(design.x[i])?;
        let (g1, _) = family.link_derivatives(mu)?;
        let var = family.variance(mu, dispersion)?;
        let ni = f64::from(design.n[i]) * f64::from(n_per_point);
        let gg = outer(&params.gradient(design.x[i]), &params.gradient(design.x[i]));
        add_assign(&mut a, &gg, ni * g1);
        add_assign(&mut b, &gg, ni * g1 * g1 * var);
    }
    let ai = inverse3(&a).ok_or(Error::SingularInformation { condition: f64::INFINITY })?;
    Ok(matmul(&matmul(&ai, &b), &ai))
}

/// Simulates, fits every replicate from `1.1 β` and summarizes.
pub fn covariance_check(
    family: Family,
    params: &ModelParams,
    design: &Design,
    config: &SimConfig,
) -> Result<CovarianceReport> {
    config.validate()?;
    let start = ModelParams::from_array(params.as_array().map(|b| 1.1 * b));
    let fits: Vec<[f64; 3]> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let data = simulate_replicate(family, params, design, config, r)?;
            Ok(fit(family, &data, design, &start)?.beta_hat.as_array())
        })
        .collect::<Result<_>>()?;

    let r = fits.len() as f64;
    let mut mean = [0.0; 3];
    for f in &fits {
        for k in 0..3 {
            mean[k] += f[k] / r;
        }
    }
    let mut emp = [[0.0; 3]; 3];
    for f in &fits {
        let d = [0, 1, 2].map(|k| f[k] - mean[k]);
        add_assign(&mut emp, &outer(&d, &d), 1.0 / (r - 1.0).max(1.0));
    }
    let reference = reference_covariance(family, params, design, config.n_per_point, config.dispersion)?;
    let rel = [0, 1, 2].map(|i| [0, 1, 2].map(|j| (emp[i][j] - reference[i][j]) / reference[i][j]));
    let max_diag = (0..3).map(|i| rel[i][i].abs()).fold(0.0, f64::max);
    Ok(CovarianceReport {
        schema: COVARIANCE_SCHEMA.to_string(),
        family,
        params: *params,
        design: *design,
        config: *config,
        mean_beta_hat: mean,
        empirical: emp,
        reference,
        relative_deviation: rel,
        max_relative_diagonal_deviation: max_diag,
        log_generalized_variance: det3(&emp).ln(),
        log_generalized_variance_reference: det3(&reference).ln(),
        log_generalized_variance_se: (6.0 / (r - 1.0).max(1.0)).sqrt(),
    })
}
