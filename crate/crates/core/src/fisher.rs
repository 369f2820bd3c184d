//! Fisher information for three-point designs.
//!
//! The dispersion factor `a(φ)` is fixed to one throughout: it only scales the
//! matrix and never moves the argmax. Three algebraically independent routes
//! to the determinant are provided and cross-checked in the tests:
//!
//! * [`info_matrix`] sums weighted outer products of the mean gradient;
//! * [`weighted_lsq_det`] forms `XᵀWX` by explicit matrix products;
//! * [`det_explicit`] evaluates the closed form
//!   `β₂² M(x)² Π nᵢ w(μᵢ)` with
//!   `M(x) = (x₁x₂)^β₃ log(x₂/x₁) − (x₁x₃)^β₃ log(x₃/x₁) + (x₂x₃)^β₃ log(x₃/x₂)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::InfoWeight;
use crate::linalg::{add_assign, det3, diag, matmul, outer, transpose};
use crate::model::{design_matrix, Design, Matrix3, ModelParams};

fn weights_at<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    design: &Design,
) -> Result<[f64; 3]> {
    let mut w = [0.0; 3];
    for (i, &x) in design.x.iter().enumerate() {
        w[i] = weight.weight(params.mu(x))?.0;
    }
    Ok(w)
}

/// `Σᵢ nᵢ w(μᵢ) ∇μᵢ ∇μᵢᵀ` with `a(φ) = 1`.
pub fn info_matrix<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    design: &Design,
) -> Result<Matrix3> {
    let w = weights_at(weight, params, design)?;
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        let g = params.gradient(design.x[i]);
        add_assign(&mut m, &outer(&g, &g), f64::from(design.n[i]) * w[i]);
    }
    Ok(m)
}

/// The bracket `M(x)` of the closed-form determinant. Accepts stimuli in any
/// order; a zero stimulus contributes the limit value zero to each term it
/// appears in.
pub fn bracket(b3: f64, x: [f64; 3]) -> f64 {
    let term = |a: f64, b: f64| {
        if a == 0.0 || b == 0.0 {
            0.0
        } else {
            (a * b).powf(b3) * (b / a).ln()
        }
    };
    term(x[0], x[1]) - term(x[0], x[2]) + term(x[1], x[2])
}

/// Closed-form determinant `β₂² M(x)² Π nᵢ w(μᵢ)` for stimuli in any order.
pub fn det_from_stimuli<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    x: [f64; 3],
    n: [u32; 3],
) -> Result<f64> {
    let mut prod = 1.0;
    for i in 0..3 {
        if !(x[i] >= 0.0) {
            return Err(Error::Domain(format!("stimulus {} must be >= 0", x[i])));
        }
        prod *= f64::from(n[i]) * weight.weight(params.mu(x[i]))?.0;
    }
    let m = bracket(params.b3, x);
    Ok(params.b2 * params.b2 * m * m * prod)
}

/// Closed-form determinant of the information matrix.
pub fn det_explicit<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    design: &Design,
) -> Result<f64> {
    det_from_stimuli(weight, params, design.x, design.n)
}

/// `|XᵀWX|` with `X` the linearized design matrix and `W = diag(nᵢ w(μᵢ))`.
pub fn weighted_lsq_det<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    design: &Design,
) -> Result<f64> {
    let x = design_matrix(params, design.x)?;
    let w = weights_at(weight, params, design)?;
    let wd = diag([0, 1, 2].map(|i| f64::from(design.n[i]) * w[i]));
    Ok(det3(&matmul(&matmul(&transpose(&x), &wd), &x)))
}

/// Residual variance function `φ(μ)` of the heteroscedastic normal model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VarianceFn {
    /// `φ ≡ 1`.
    Constant,
    /// `φ(μ) = μᵖ`, defined for `μ > 0`.
    Power { p: f64 },
    /// Caller-supplied `φ`, `φ'` and `φ''`, assumed positive and twice
    /// differentiable wherever it is evaluated.
    #[serde(skip)]
    Custom {
        phi: fn(f64) -> f64,
        dphi: fn(f64) -> f64,
        d2phi: fn(f64) -> f64,
    },
}

impl VarianceFn {
    /// `(φ, φ', φ'')` at `mu`.
    pub fn eval(&self, mu: f64) -> Result<(f64, f64, f64)> {
        match *self {
            VarianceFn::Constant => Ok((1.0, 0.0, 0.0)),
            VarianceFn::Power { p } => {
                if !(mu > 0.0) {
                    return Err(Error::Domain(format!("power variance needs mean > 0, got {mu}")));
                }
                let phi = mu.powf(p);
                Ok((phi, p * phi / mu, p * (p - 1.0) * phi / (mu * mu)))
            }
            VarianceFn::Custom { phi, dphi, d2phi } => {
                let v = phi(mu);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Domain(format!("variance function is {v} at mean {mu}")));
                }
                Ok((v, dphi(mu), d2phi(mu)))
            }
        }
    }

    pub fn power(&self) -> Option<f64> {
        match *self {
            VarianceFn::Power { p } => Some(p),
            _ => None,
        }
    }
}

/// Normal responses with variance `σ² φ(μ)` and known `σ²`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeteroSpec {
    pub sigma2: f64,
    pub variance: VarianceFn,
}

impl HeteroSpec {
    pub fn new(sigma2: f64, variance: VarianceFn) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("sigma2 = {sigma2} must be positive and finite")));
        }
        if let VarianceFn::Power { p } = variance {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Config(format!("power p = {p} must be positive")));
            }
        }
        Ok(HeteroSpec { sigma2, variance })
    }

    pub fn power(sigma2: f64, p: f64) -> Result<Self> {
        HeteroSpec::new(sigma2, VarianceFn::Power { p })
    }

    /// `h(μ) = ½[φ'(μ)/φ(μ)]² + [σ² φ(μ)]⁻¹` and its derivative.
    pub fn h_and_derivative(&self, mu: f64) -> Result<(f64, f64)> {
        let s2 = self.sigma2;
        if let VarianceFn::Power { p } = self.variance {
            if !(mu > 0.0) {
                return Err(Error::Domain(format!("power variance needs mean > 0, got {mu}")));
            }
            let mp = mu.powf(-p);
            let h = 0.5 * p * p / (mu * mu) + mp / s2;
            let dh = -p * (p / mu.powi(3) + mp / (s2 * mu));
            return Ok((h, dh));
        }
        let (phi, d1, d2) = self.variance.eval(mu)?;
        let r = d1 / phi;
        let h = 0.5 * r * r + 1.0 / (s2 * phi);
        let dr = d2 / phi - r * r;
        let dh = r * dr - d1 / (s2 * phi * phi);
        Ok((h, dh))
    }
}

impl InfoWeight for HeteroSpec {
    fn weight(&self, mu: f64) -> Result<(f64, f64)> {
        self.h_and_derivative(mu)
    }

    fn is_constant(&self) -> bool {
        matches!(self.variance, VarianceFn::Constant)
    }

    fn label(&self) -> String {
        match self.variance {
            VarianceFn::Constant => format!("normal(sigma2={})", self.sigma2),
            VarianceFn::Power { p } => format!("normal(sigma2={}, phi=mu^{p})", self.sigma2),
            VarianceFn::Custom { .. } => format!("normal(sigma2={}, custom phi)", self.sigma2),
        }
    }
}

/// `h(μ)` for the heteroscedastic normal model.
pub fn hetero_h(spec: &HeteroSpec, mu: f64) -> Result<f64> {
    Ok(spec.h_and_derivative(mu)?.0)
}

/// Information matrix for β under heteroscedastic normal responses.
pub fn hetero_info_matrix(spec: &HeteroSpec, params: &ModelParams, design: &Design) -> Result<Matrix3> {
    info_matrix(spec, params, design)
}

/// Variances and covariances of the score functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreCovariances {
    /// Covariance matrix of the three β scores.
    pub var_beta: Matrix3,
    /// Variance of the dispersion score. Only available in closed form for the
    /// heteroscedastic normal model (as the σ² score).
    pub var_phi: Option<f64>,
    /// Covariances between each β score and the dispersion score.
    pub cov_beta_phi: [f64; 3],
}

/// Score covariances for an exponential family with `a(φ) = 1`: the β block
/// is the information matrix and the β–φ covariances vanish.
pub fn score_covariances<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    design: &Design,
) -> Result<ScoreCovariances> {
    Ok(ScoreCovariances {
        var_beta: info_matrix(weight, params, design)?,
        var_phi: None,
        cov_beta_phi: [0.0; 3],
    })
}

/// Score covariances for `(β, σ²)` under `N(μ, σ² φ(μ))`.
pub fn hetero_score_covariances(
    spec: &HeteroSpec,
    params: &ModelParams,
    design: &Design,
) -> Result<ScoreCovariances> {
    let var_beta = hetero_info_matrix(spec, params, design)?;
    let mut cov = [0.0; 3];
    for i in 0..3 {
        let mu = params.mu(design.x[i]);
        let (phi, d1, _) = spec.variance.eval(mu)?;
        let g = params.gradient(design.x[i]);
        let f = f64::from(design.n[i]) * d1 / phi;
        for k in 0..3 {
            cov[k] += f * g[k];
        }
    }
    let cov_beta_phi = cov.map(|c| c / (2.0 * spec.sigma2));
    let var_phi = f64::from(design.total()) / (2.0 * spec.sigma2 * spec.sigma2);
    Ok(ScoreCovariances { var_beta, var_phi: Some(var_phi), cov_beta_phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn gaussian_info_is_xtx() {
        let p = ModelParams::new(0.7, 1.3, 0.8).unwrap();
        let d = Design::unit([0.0, 1.0, 2.0]).unwrap();
        let m = info_matrix(&Family::Gaussian, &p, &d).unwrap();
        let x = design_matrix(&p, d.x).unwrap();
        let xtx = matmul(&transpose(&x), &x);
        for r in 0..3 {
            for c in 0..3 {
                assert!((m[r][c] - xtx[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn poisson_info_by_direct_summation() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        let d = Design::unit([0.0, 2.67, 15.0]).unwrap();
        let m = info_matrix(&Family::Poisson, &p, &d).unwrap();
        let mut expect = [[0.0; 3]; 3];
        for &x in &d.x {
            let mu = 0.5 + x;
            let g = [1.0, x, if x > 0.0 { x * x.ln() } else { 0.0 }];
            for r in 0..3 {
                for c in 0..3 {
                    expect[r][c] += g[r] * g[c] / mu;
                }
            }
        }
        for r in 0..3 {
            for c in 0..3 {
                assert!(rel(m[r][c], expect[r][c]) < 1e-13 || (m[r][c] - expect[r][c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn info_scales_linearly_in_replicates() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let d1 = Design::new([0.5, 3.0, 9.0], [1, 1, 1]).unwrap();
        let d3 = Design::new([0.5, 3.0, 9.0], [3, 3, 3]).unwrap();
        let a = info_matrix(&Family::Gamma, &p, &d1).unwrap();
        let b = info_matrix(&Family::Gamma, &p, &d3).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!(rel(3.0 * a[r][c], b[r][c]) < 1e-14);
            }
        }
    }

    #[test]
    fn inverse_gaussian_table_value() {
        let p = ModelParams::new(0.5, 1.2, 0.9).unwrap();
        let d = Design::unit([0.0, 0.26, 5.21]).unwrap();
        let det = det_explicit(&Family::InverseGaussian, &p, &d).unwrap();
        assert!((det - 1.455).abs() < 0.005, "{det}");
    }

    #[test]
    fn repeated_stimulus_gives_zero() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        for fam in [Family::Gaussian, Family::Poisson, Family::InverseGaussian] {
            let det = det_from_stimuli(&fam, &p, [0.5, 4.0, 4.0], [1, 1, 1]).unwrap();
            assert_eq!(det, 0.0);
        }
    }

    #[test]
    fn replicate_product_factor() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        let a = weighted_lsq_det(&Family::Poisson, &p, &Design::new([0.0, 3.0, 15.0], [1, 1, 1]).unwrap()).unwrap();
        let b = weighted_lsq_det(&Family::Poisson, &p, &Design::new([0.0, 3.0, 15.0], [2, 3, 4]).unwrap()).unwrap();
        assert!(rel(b / a, 24.0) < 1e-12);
    }

    #[test]
    fn out_of_domain_means_error() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let d = Design::unit([0.0, 5.0, 15.0]).unwrap();
        let fam = Family::Binomial { trials: 10 };
        assert!(matches!(info_matrix(&fam, &p, &d), Err(Error::Domain(_))));
        assert!(matches!(det_explicit(&fam, &p, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn hetero_h_examples() {
        let s = HeteroSpec::power(1.0, 2.0).unwrap();
        assert!((hetero_h(&s, 1.0).unwrap() - 3.0).abs() < 1e-15);
        let c = HeteroSpec::new(2.5, VarianceFn::Constant).unwrap();
        assert_eq!(hetero_h(&c, -3.0).unwrap(), 1.0 / 2.5);
        assert!(hetero_h(&s, 0.0).is_err());
        assert!(hetero_h(&s, -1.0).is_err());
    }

    #[test]
    fn hetero_constant_reduces_to_scaled_gaussian() {
        let p = ModelParams::new(0.5, 1.0, 1.2).unwrap();
        let d = Design::new([0.0, 2.0, 10.0], [2, 1, 3]).unwrap();
        let s = HeteroSpec::new(4.0, VarianceFn::Constant).unwrap();
        let h = hetero_info_matrix(&s, &p, &d).unwrap();
        let g = info_matrix(&Family::Gaussian, &p, &d).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((h[r][c] - g[r][c] / 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hetero_score_covariance_examples() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        let d = Design::unit([0.5, 2.0, 10.0]).unwrap();
        let s = HeteroSpec::power(1.0, 2.0).unwrap();
        let sc = hetero_score_covariances(&s, &p, &d).unwrap();
        assert_eq!(sc.var_phi, Some(1.5));
        assert!(sc.cov_beta_phi.iter().all(|c| *c != 0.0), "{:?}", sc.cov_beta_phi);

        // Independent evaluation: (1/2σ²) Σ (φ'/φ) ∂μ/∂β with φ'/φ = p/μ.
        let mut expect = [0.0; 3];
        for &x in &d.x {
            let mu = 0.5 + x;
            let g = [1.0, x, x * x.ln()];
            for k in 0..3 {
                expect[k] += 0.5 * (2.0 / mu) * g[k];
            }
        }
        for k in 0..3 {
            assert!(rel(sc.cov_beta_phi[k], expect[k]) < 1e-13);
        }

        let c = HeteroSpec::new(1.0, VarianceFn::Constant).unwrap();
        assert_eq!(hetero_score_covariances(&c, &p, &d).unwrap().cov_beta_phi, [0.0; 3]);
        let hom = score_covariances(&Family::Poisson, &p, &d).unwrap();
        assert_eq!(hom.cov_beta_phi, [0.0; 3]);
        assert_eq!(hom.var_phi, None);
    }

    #[test]
    fn custom_variance_matches_power_closed_form() {
        fn phi(m: f64) -> f64 {
            m.powf(1.7)
        }
        fn dphi(m: f64) -> f64 {
            1.7 * m.powf(0.7)
        }
        fn d2phi(m: f64) -> f64 {
            1.7 * 0.7 * m.powf(-0.3)
        }
        let custom = HeteroSpec::new(0.6, VarianceFn::Custom { phi, dphi, d2phi }).unwrap();
        let power = HeteroSpec::power(0.6, 1.7).unwrap();
        for mu in [0.3, 1.0, 4.0, 17.0] {
            let (a, da) = custom.h_and_derivative(mu).unwrap();
            let (b, db) = power.h_and_derivative(mu).unwrap();
            assert!(rel(a, b) < 1e-13);
            assert!(rel(da, db) < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn families() -> impl Strategy<Value = Family> {
            prop_oneof![
                Just(Family::Gaussian),
                Just(Family::Poisson),
                Just(Family::NegativeBinomial),
                Just(Family::Gamma),
                Just(Family::Binomial { trials: 500 }),
                Just(Family::InverseGaussian),
            ]
        }

        fn design() -> impl Strategy<Value = Design> {
            // Spread designs: nearly collinear gradients make the matrix route
            // lose digits in proportion to the condition number.
            (prop_oneof![Just(0.0), 0.0..1.0f64], 1.0..6.0f64, 2.0..10.0f64, 1u32..6, 1u32..6, 1u32..6)
                .prop_map(|(a, d1, d2, n1, n2, n3)| Design::new([a, a + d1, a + d1 + d2], [n1, n2, n3]).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn determinant_routes_agree(
                fam in families(), b1 in 0.1..2.0f64, b2 in 0.5..2.0f64, b3 in 0.7..1.5f64, d in design(),
            ) {
                let p = ModelParams::new(b1, b2, b3).unwrap();
                let explicit = det_explicit(&fam, &p, &d).unwrap();
                let from_matrix = det3(&info_matrix(&fam, &p, &d).unwrap());
                let wls = weighted_lsq_det(&fam, &p, &d).unwrap();
                prop_assert!(explicit > 0.0);
                prop_assert!(rel(explicit, from_matrix) < 1e-10, "{} vs {}", explicit, from_matrix);
                prop_assert!(rel(explicit, wls) < 1e-10, "{} vs {}", explicit, wls);
            }

            #[test]
            fn hetero_determinant_matches_closed_form(
                p_pow in 0.1..4.0f64, s2 in 0.1..5.0f64, b1 in 0.1..2.0f64, b2 in 0.5..2.0f64,
                b3 in 0.7..1.5f64, d in design(),
            ) {
                let spec = HeteroSpec::power(s2, p_pow).unwrap();
                let p = ModelParams::new(b1, b2, b3).unwrap();
                let m = det3(&hetero_info_matrix(&spec, &p, &d).unwrap());
                let explicit = det_explicit(&spec, &p, &d).unwrap();
                prop_assert!(rel(m, explicit) < 1e-10);
            }

            #[test]
            fn hetero_h_matches_symbolic_form(p_pow in 0.1..4.0f64, s2 in 0.1..5.0f64, mu in 0.01..50.0f64) {
                let spec = HeteroSpec::power(s2, p_pow).unwrap();
                let phi = mu.powf(p_pow);
                let dphi = p_pow * mu.powf(p_pow - 1.0);
                let expect = 0.5 * (dphi / phi).powi(2) + 1.0 / (s2 * phi);
                prop_assert!(rel(hetero_h(&spec, mu).unwrap(), expect) < 1e-12);
            }

            #[test]
            fn determinant_invariant_under_permutation(
                fam in families(), d in design(), perm in 0usize..6,
            ) {
                let p = ModelParams::new(0.5, 1.0, 1.1).unwrap();
                let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
                let o = orders[perm];
                let x = o.map(|i| d.x[i]);
                let n = o.map(|i| d.n[i]);
                let a = det_explicit(&fam, &p, &d).unwrap();
                let b = det_from_stimuli(&fam, &p, x, n).unwrap();
                prop_assert!(rel(a, b) < 1e-12);
            }

            #[test]
            fn sigma_score_variance_is_free_of_beta(
                b1 in 0.1..2.0f64, b2 in 0.2..2.0f64, b3 in 0.5..1.5f64, d in design(), s in -1.0..1.0f64,
            ) {
                let spec = HeteroSpec::power(0.7, 1.5).unwrap();
                let p = ModelParams::new(b1, b2, b3).unwrap();
                let q = ModelParams::new(b1 * (1.0 + 0.1 * s), b2 * (1.0 - 0.1 * s), b3 * (1.0 + 0.1 * s)).unwrap();
                let a = hetero_score_covariances(&spec, &p, &d).unwrap();
                let b = hetero_score_covariances(&spec, &q, &d).unwrap();
                prop_assert_eq!(a.var_phi, b.var_phi);
            }
        }
    }
}
