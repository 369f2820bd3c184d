//! Exponential-family response distributions with their canonical links.
//!
//! For a canonical link the weight `g'(μ)` equals `1 / b''(θ)`, so the
//! per-observation Fisher information for the mean is `g'(μ) / a(φ)`. All the
//! placement results only need `g'` and `g''`; the [`InfoWeight`] trait
//! abstracts exactly that pair so the same solver also drives the
//! heteroscedastic normal model and transformed mean functions.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// An information weight `w(μ)` with its derivative `w'(μ)`.
///
/// For exponential families `w = g'` and `w' = g''`. The information matrix
/// is `Σ nᵢ w(μᵢ) ∇μᵢ ∇μᵢᵀ`.
pub trait InfoWeight: Sync {
    /// Returns `(w(μ), w'(μ))`, or a domain error for inadmissible `μ`.
    fn weight(&self, mu: f64) -> Result<(f64, f64)>;

    /// True when `w` is constant, so the optimal middle stimulus has a closed form.
    fn is_constant(&self) -> bool {
        false
    }

    /// True when `μ` sits on the edge of the mean domain but is attainable by
    /// a degenerate (point-mass) response, e.g. a Poisson count with mean zero.
    fn admits_degenerate_mean(&self, _mu: f64) -> bool {
        false
    }

    /// Short human-readable label.
    fn label(&self) -> String;
}

/// Open interval of admissible means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDomain {
    pub lower: f64,
    pub upper: f64,
}

impl MeanDomain {
    pub fn contains(&self, mu: f64) -> bool {
        mu > self.lower && mu < self.upper
    }
}

impl fmt::Display for MeanDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// The six built-in exponential-family members, each with its canonical link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Family {
    Gaussian,
    Poisson,
    /// Shares the log link with Poisson; only the dispersion differs.
    NegativeBinomial,
    Gamma,
    Binomial {
        trials: u32,
    },
    InverseGaussian,
}

impl Family {
    pub const ALL_NAMES: [&'static str; 6] = [
        "gaussian",
        "poisson",
        "negative-binomial",
        "gamma",
        "binomial",
        "inverse-gaussian",
    ];

    pub fn binomial(trials: u32) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidParams("binomial trial count must be positive".into()));
        }
        Ok(Family::Binomial { trials })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Poisson => "poisson",
            Family::NegativeBinomial => "negative-binomial",
            Family::Gamma => "gamma",
            Family::Binomial { .. } => "binomial",
            Family::InverseGaussian => "inverse-gaussian",
        }
    }

    pub fn mean_domain(&self) -> MeanDomain {
        let (lower, upper) = match *self {
            Family::Gaussian => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Poisson | Family::NegativeBinomial | Family::Gamma | Family::InverseGaussian => {
                (0.0, f64::INFINITY)
            }
            Family::Binomial { trials } => (0.0, f64::from(trials)),
        };
        MeanDomain { lower, upper }
    }

    /// Whether the variance of the dispersion score is free of β. Holds for
    /// every built-in family; this is a recorded fact, not a symbolic check.
    pub fn dispersion_score_independent(&self) -> bool {
        true
    }

    fn check(&self, mu: f64) -> Result<()> {
        let domain = self.mean_domain();
        if mu.is_nan() || !domain.contains(mu) {
            return Err(Error::Domain(format!(
                "mean {mu} outside the {} mean domain {domain}",
                self.name()
            )));
        }
        Ok(())
    }

    /// The canonical link `θ = g(μ)`.
    pub fn link(&self, mu: f64) -> Result<f64> {
        self.check(mu)?;
        Ok(match *self {
            Family::Gaussian => mu,
            Family::Poisson | Family::NegativeBinomial => mu.ln(),
            Family::Gamma => -1.0 / mu,
            Family::Binomial { trials } => (mu / (f64::from(trials) - mu)).ln(),
            Family::InverseGaussian => -0.5 / (mu * mu),
        })
    }

    /// `(g'(μ), g''(μ))` of the canonical link.
    pub fn link_derivatives(&self, mu: f64) -> Result<(f64, f64)> {
        self.check(mu)?;
        Ok(match *self {
            Family::Gaussian => (1.0, 0.0),
            Family::Poisson | Family::NegativeBinomial => (1.0 / mu, -1.0 / (mu * mu)),
            Family::Gamma => (mu.powi(-2), -2.0 * mu.powi(-3)),
            Family::Binomial { trials } => {
                let n = f64::from(trials);
                let v = mu * (n - mu);
                (n / v, -n * (n - 2.0 * mu) / (v * v))
            }
            Family::InverseGaussian => (mu.powi(-3), -3.0 * mu.powi(-4)),
        })
    }

    /// `b(g(μ))`, the cumulant evaluated at the canonical parameter.
    pub fn cumulant(&self, mu: f64) -> Result<f64> {
        self.check(mu)?;
        Ok(match *self {
            Family::Gaussian => 0.5 * mu * mu,
            Family::Poisson | Family::NegativeBinomial => mu,
            Family::Gamma => mu.ln(),
            Family::Binomial { trials } => {
                let n = f64::from(trials);
                -n * (-mu / n).ln_1p()
            }
            Family::InverseGaussian => -1.0 / mu,
        })
    }

    /// Variance of a single response with mean `mu`.
    ///
    /// `nuisance` is σ² (Gaussian), the shape k (Gamma, variance μ²/k), the
    /// size k (negative binomial, variance μ + μ²/k) or the shape λ (inverse
    /// Gaussian, variance μ³/λ). Poisson and binomial ignore it.
    pub fn variance(&self, mu: f64, nuisance: f64) -> Result<f64> {
        self.check(mu)?;
        Ok(match *self {
            Family::Gaussian => nuisance,
            Family::Poisson => mu,
            Family::NegativeBinomial => mu + mu * mu / nuisance,
            Family::Gamma => mu * mu / nuisance,
            Family::Binomial { trials } => mu * (f64::from(trials) - mu) / f64::from(trials),
            Family::InverseGaussian => mu.powi(3) / nuisance,
        })
    }

    /// Whether the family's sampling model uses the nuisance value.
    pub fn uses_nuisance(&self) -> bool {
        !matches!(self, Family::Poisson | Family::Binomial { .. })
    }

    /// Reports the three placement conditions at `mu`.
    pub fn theorem_conditions(&self, mu: f64) -> Result<ConditionReport> {
        let (g1, g2) = self.link_derivatives(mu)?;
        Ok(ConditionReport::from_derivatives(mu, g1, g2))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Binomial { trials } => write!(f, "binomial(N={trials})"),
            other => f.write_str(other.name()),
        }
    }
}

impl InfoWeight for Family {
    fn weight(&self, mu: f64) -> Result<(f64, f64)> {
        self.link_derivatives(mu)
    }

    fn is_constant(&self) -> bool {
        matches!(self, Family::Gaussian)
    }

    fn admits_degenerate_mean(&self, mu: f64) -> bool {
        // A count with mean zero is identically zero.
        matches!(
            self,
            Family::Poisson | Family::NegativeBinomial | Family::Binomial { .. }
        ) && mu == 0.0
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

/// Free-function form of [`Family::link_derivatives`].
pub fn link_derivatives(family: &Family, mu: f64) -> Result<(f64, f64)> {
    family.link_derivatives(mu)
}

/// Free-function form of [`Family::theorem_conditions`].
pub fn theorem_conditions(family: &Family, mu: f64) -> Result<ConditionReport> {
    family.theorem_conditions(mu)
}

/// The three sufficient conditions used for endpoint placement:
/// `c1: w ≥ 0`, `c2: w' ≤ 0`, `c3: μ w' + 2 w ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub mu: f64,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

impl ConditionReport {
    pub fn from_derivatives(mu: f64, w: f64, dw: f64) -> Self {
        ConditionReport {
            mu,
            c1: w >= 0.0,
            c2: dw <= 0.0,
            // Gamma sits exactly on the boundary; allow for rounding.
            c3: mu * dw + 2.0 * w >= -1e-12 * (mu * dw).abs().max(2.0 * w.abs()),
        }
    }

    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAMILIES: [Family; 6] = [
        Family::Gaussian,
        Family::Poisson,
        Family::NegativeBinomial,
        Family::Gamma,
        Family::Binomial { trials: 25 },
        Family::InverseGaussian,
    ];

    #[test]
    fn link_derivative_examples() {
        assert_eq!(Family::Gaussian.link_derivatives(3.7).unwrap(), (1.0, 0.0));
        assert_eq!(Family::Poisson.link_derivatives(2.0).unwrap(), (0.5, -0.25));
        assert_eq!(
            Family::InverseGaussian.link_derivatives(2.0).unwrap(),
            (0.125, -0.1875)
        );
    }

    #[test]
    fn boundary_means_are_rejected() {
        assert!(matches!(Family::Poisson.link_derivatives(0.0), Err(Error::Domain(_))));
        assert!(matches!(Family::Gamma.link_derivatives(-1.0), Err(Error::Domain(_))));
        let b = Family::Binomial { trials: 10 };
        assert!(b.link_derivatives(10.0).is_err());
        assert!(b.link_derivatives(0.0).is_err());
        assert!(b.link_derivatives(9.999).is_ok());
        assert!(Family::Gaussian.link_derivatives(f64::NAN).is_err());
    }

    #[test]
    fn condition_examples() {
        let ig = Family::InverseGaussian.theorem_conditions(1.0).unwrap();
        assert!(ig.c1 && ig.c2 && !ig.c3);
        let bin = Family::Binomial { trials: 25 }.theorem_conditions(13.0).unwrap();
        assert!(!bin.c2);
        assert!(Family::Poisson.theorem_conditions(5.0).unwrap().all());
    }

    #[test]
    fn binomial_concavity_flips_at_half_trials() {
        let b = Family::Binomial { trials: 25 };
        assert!(b.theorem_conditions(12.5 - 1e-6).unwrap().c2);
        assert!(!b.theorem_conditions(12.5 + 1e-6).unwrap().c2);
    }

    #[test]
    fn derivatives_match_finite_differences_of_link() {
        for fam in FAMILIES {
            for &mu in &[0.3, 1.0, 2.5, 7.0] {
                let h = 1e-5 * mu;
                let fd1 = (fam.link(mu + h).unwrap() - fam.link(mu - h).unwrap()) / (2.0 * h);
                let (g1, g2) = fam.link_derivatives(mu).unwrap();
                let fd2 = (fam.link_derivatives(mu + h).unwrap().0
                    - fam.link_derivatives(mu - h).unwrap().0)
                    / (2.0 * h);
                assert!((fd1 - g1).abs() <= 1e-6 * g1.abs().max(1.0), "{fam} {mu}");
                assert!((fd2 - g2).abs() <= 1e-5 * g2.abs().max(1e-3), "{fam} {mu}");
            }
        }
    }

    #[test]
    fn canonical_weight_is_inverse_unit_variance() {
        for fam in FAMILIES {
            for &mu in &[0.5, 2.0, 6.0] {
                let (g1, _) = fam.link_derivatives(mu).unwrap();
                if fam == Family::NegativeBinomial {
                    continue;
                }
                let v = fam.variance(mu, 1.0).unwrap();
                assert!((g1 * v - 1.0).abs() < 1e-12, "{fam}");
            }
        }
    }

    #[test]
    fn cumulant_derivative_recovers_mean() {
        // d b(θ)/dθ = μ, so d b(g(μ))/dμ = μ g'(μ).
        for fam in FAMILIES {
            let mu = 3.0;
            let h = 1e-6;
            let db = (fam.cumulant(mu + h).unwrap() - fam.cumulant(mu - h).unwrap()) / (2.0 * h);
            let (g1, _) = fam.link_derivatives(mu).unwrap();
            assert!((db - mu * g1).abs() < 1e-6, "{fam}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mean_in(fam: Family) -> BoxedStrategy<f64> {
            match fam {
                Family::Gaussian => (-1e3..1e3f64).boxed(),
                Family::Binomial { trials } => (1e-6..f64::from(trials) - 1e-6).boxed(),
                _ => (1e-6..1e4f64).boxed(),
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn link_is_strictly_increasing(idx in 0usize..6, u in 0.0..1.0f64) {
                let fam = FAMILIES[idx];
                let mu = match fam {
                    Family::Gaussian => -1e3 + 2e3 * u,
                    Family::Binomial { trials } => 1e-6 + u * (f64::from(trials) - 2e-6),
                    _ => 1e-6 + u * 1e4,
                };
                let (g1, _) = fam.link_derivatives(mu).unwrap();
                prop_assert!(g1 > 0.0);
            }

            #[test]
            fn concavity_holds_on_documented_ranges(mu in mean_in(Family::Gamma)) {
                for fam in [Family::Gaussian, Family::Poisson, Family::NegativeBinomial, Family::Gamma, Family::InverseGaussian] {
                    prop_assert!(fam.link_derivatives(mu).unwrap().1 <= 0.0);
                }
            }
        }
    }
}
