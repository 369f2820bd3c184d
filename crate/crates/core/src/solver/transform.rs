//! Transformed mean functions `ψ(β₁ + β₂ x^β₃)` with a canonical link.
//!
//! The determinant keeps its form with `g'` replaced by
//! `g̃'(μ) = g'(ψ(μ)) ψ'(μ)²`, so the same solver applies with
//! `g̃''(μ) = g''(ψ(μ)) ψ'(μ)³ + 2 g'(ψ(μ)) ψ''(μ) ψ'(μ)`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::family::{Family, InfoWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformSpec {
    Identity,
    Sqrt,
    Exp,
}

impl TransformSpec {
    /// `(ψ, ψ', ψ'')` at `mu`.
    pub fn eval(&self, mu: f64) -> Result<(f64, f64, f64)> {
        match self {
            TransformSpec::Identity => Ok((mu, 1.0, 0.0)),
            TransformSpec::Sqrt => {
                if !(mu > 0.0) {
                    return Err(Error::Domain(format!("sqrt transform needs mean > 0, got {mu}")));
                }
                let s = mu.sqrt();
                Ok((s, 0.5 / s, -0.25 / (s * mu)))
            }
            TransformSpec::Exp => {
                let e = mu.exp();
                if !e.is_finite() {
                    return Err(Error::Range(format!("exp transform overflows at mean {mu}")));
                }
                Ok((e, e, e))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformSpec::Identity => "id",
            TransformSpec::Sqrt => "sqrt",
            TransformSpec::Exp => "exp",
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "id" | "identity" => Ok(TransformSpec::Identity),
            "sqrt" => Ok(TransformSpec::Sqrt),
            "exp" => Ok(TransformSpec::Exp),
            other => Err(Error::Config(format!("unknown transform '{other}' (expected id, sqrt or exp)"))),
        }
    }
}

/// A family composed with a transformation of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transformed {
    pub family: Family,
    pub psi: TransformSpec,
}

impl Transformed {
    /// `(g̃'(μ), g̃''(μ))`.
    pub fn derivatives(&self, mu: f64) -> Result<(f64, f64)> {
        if self.psi == TransformSpec::Identity {
            return self.family.link_derivatives(mu);
        }
        let (psi, d1, d2) = self.psi.eval(mu)?;
        let (g1, g2) = self.family.link_derivatives(psi)?;
        Ok((g1 * d1 * d1, g2 * d1 * d1 * d1 + 2.0 * g1 * d2 * d1))
    }
}

impl InfoWeight for Transformed {
    fn weight(&self, mu: f64) -> Result<(f64, f64)> {
        self.derivatives(mu)
    }

    fn is_constant(&self) -> bool {
        self.psi == TransformSpec::Identity && self.family.is_constant()
    }

    fn admits_degenerate_mean(&self, mu: f64) -> bool {
        match self.psi.eval(mu) {
            Ok((psi, _, _)) => self.family.admits_degenerate_mean(psi),
            Err(_) => false,
        }
    }

    fn label(&self) -> String {
        format!("{} with {} transform", self.family, self.psi)
    }
}
