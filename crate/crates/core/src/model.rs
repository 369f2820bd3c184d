//! The Mitscherlich mean curve `μ(x) = β₁ + β₂ x^β₃`, its gradient, the
//! linearized design matrix and the exponential-stimulus parametrizations
//! used elsewhere in the literature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the mean curve. Designs require `β₁ ≥ 0`, `β₂ > 0`, `β₃ > 0`;
/// fitted estimates are stored in the same type without that guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl ModelParams {
    pub fn new(b1: f64, b2: f64, b3: f64) -> Result<Self> {
        let p = ModelParams { b1, b2, b3 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b1.is_finite() && self.b2.is_finite() && self.b3.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite parameters {self:?}")));
        }
        if self.b1 < 0.0 {
            return Err(Error::InvalidParams(format!("beta1 = {} must be >= 0", self.b1)));
        }
        if self.b2 <= 0.0 || self.b3 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta2 = {} and beta3 = {} must both be > 0",
                self.b2, self.b3
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.b1, self.b2, self.b3]
    }

    pub fn from_array(b: [f64; 3]) -> Self {
        ModelParams { b1: b[0], b2: b[1], b3: b[2] }
    }

    /// Mean at `x` without argument checks.
    #[inline]
    pub fn mu(&self, x: f64) -> f64 {
        self.b1 + self.b2 * x.powf(self.b3)
    }

    /// Mean at `x ≥ 0`; at `x = 0` this is exactly `β₁`.
    pub fn mean(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("stimulus {x} must be >= 0")));
        }
        let m = self.mu(x);
        if !m.is_finite() {
            return Err(Error::Range(format!("mean overflows at x = {x}")));
        }
        Ok(m)
    }

    /// `(∂μ/∂β₁, ∂μ/∂β₂, ∂μ/∂β₃) = (1, x^β₃, β₂ x^β₃ log x)`, with the limit
    /// `x^β₃ log x → 0` at `x = 0`.
    #[inline]
    pub fn gradient(&self, x: f64) -> [f64; 3] {
        if x == 0.0 {
            return [1.0, 0.0, 0.0];
        }
        let p = x.powf(self.b3);
        [1.0, p, self.b2 * p * x.ln()]
    }
}

/// Free-function form of [`ModelParams::mean`].
pub fn mean(params: &ModelParams, x: f64) -> Result<f64> {
    params.mean(x)
}

/// Free-function form of [`ModelParams::gradient`].
pub fn mean_gradient(params: &ModelParams, x: f64) -> [f64; 3] {
    params.gradient(x)
}

/// Stimulus window `0 ≤ L < U < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0 && upper.is_finite() && lower < upper) {
            return Err(Error::Infeasible(format!(
                "bounds must satisfy 0 <= L < U < inf, got [{lower}, {upper}]"
            )));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Three stimuli `x₁ < x₂ < x₃` with replicate counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub x: [f64; 3],
    pub n: [u32; 3],
}

impl Design {
    pub fn new(x: [f64; 3], n: [u32; 3]) -> Result<Self> {
        check_order(&x)?;
        if n.contains(&0) {
            return Err(Error::Config(format!("replicate counts must be positive, got {n:?}")));
        }
        Ok(Design { x, n })
    }

    /// Design with a single replicate per stimulus.
    pub fn unit(x: [f64; 3]) -> Result<Self> {
        Design::new(x, [1, 1, 1])
    }

    pub fn total(&self) -> u32 {
        self.n.iter().sum()
    }

    pub fn with_replicates(&self, n: [u32; 3]) -> Result<Self> {
        Design::new(self.x, n)
    }
}

pub(crate) fn check_order(x: &[f64; 3]) -> Result<()> {
    let ok = x.iter().all(|v| v.is_finite()) && x[0] >= 0.0 && x[0] < x[1] && x[1] < x[2];
    if ok {
        Ok(())
    } else {
        Err(Error::Order(*x))
    }
}

pub type Matrix3 = [[f64; 3]; 3];

/// Linearized design matrix; row `i` is the mean gradient at `xᵢ`.
pub fn design_matrix(params: &ModelParams, x: [f64; 3]) -> Result<Matrix3> {
    check_order(&x)?;
    Ok([params.gradient(x[0]), params.gradient(x[1]), params.gradient(x[2])])
}

/// Alternative parametrizations with a log-scale stimulus `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Parametrization {
    /// `β₁ + β₂ x^β₃` with `x = z`.
    Native(ModelParams),
    /// `β₁ − β₂ exp(−β₃ z)` with `x = exp(z)`.
    BoxLucas { b1: f64, b2: f64, b3: f64 },
    /// `β₁ + β₂ exp(−β₃ z)` with `x = exp(−z)`.
    HanChaloner { b1: f64, b2: f64, b3: f64 },
    /// `β₁ + β₂ exp(z / β̃₃)` with `x = exp(z)` and `β₃ = 1 / β̃₃`.
    Dette { b1: f64, b2: f64, b3_tilde: f64 },
}

/// Native parameters and stimuli produced by [`to_native`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NativeDesign {
    /// For Box–Lucas both `b2` and `b3` come out negative.
    pub params: ModelParams,
    /// Native stimuli in increasing order.
    pub x: [f64; 3],
    /// True when the stimulus map reverses order (Han–Chaloner).
    pub reversed: bool,
}

impl Parametrization {
    pub fn native_params(&self) -> ModelParams {
        match *self {
            Parametrization::Native(p) => p,
            Parametrization::BoxLucas { b1, b2, b3 } => ModelParams { b1, b2: -b2, b3: -b3 },
            Parametrization::HanChaloner { b1, b2, b3 } => ModelParams { b1, b2, b3 },
            Parametrization::Dette { b1, b2, b3_tilde } => ModelParams { b1, b2, b3: 1.0 / b3_tilde },
        }
    }

    /// Maps a z-stimulus to the native stimulus.
    pub fn stimulus(&self, z: f64) -> f64 {
        match self {
            Parametrization::Native(_) => z,
            Parametrization::BoxLucas { .. } | Parametrization::Dette { .. } => z.exp(),
            Parametrization::HanChaloner { .. } => (-z).exp(),
        }
    }

    /// Inverse of [`Parametrization::stimulus`].
    pub fn z_of(&self, x: f64) -> f64 {
        match self {
            Parametrization::Native(_) => x,
            Parametrization::BoxLucas { .. } | Parametrization::Dette { .. } => x.ln(),
            Parametrization::HanChaloner { .. } => -x.ln(),
        }
    }

    pub fn reverses_order(&self) -> bool {
        matches!(self, Parametrization::HanChaloner { .. })
    }

    /// Mean in the parametrization's own coordinates.
    pub fn mean_z(&self, z: f64) -> f64 {
        match *self {
            Parametrization::Native(p) => p.mu(z),
            Parametrization::BoxLucas { b1, b2, b3 } => b1 - b2 * (-b3 * z).exp(),
            Parametrization::HanChaloner { b1, b2, b3 } => b1 + b2 * (-b3 * z).exp(),
            Parametrization::Dette { b1, b2, b3_tilde } => b1 + b2 * (z / b3_tilde).exp(),
        }
    }

    /// Closed-form optimal middle z-stimulus for homoscedastic normal responses,
    /// given the smallest and largest allowed z.
    ///
    /// The returned triple is ordered like the native stimuli, so Han–Chaloner
    /// places `z₁ = z_max` and `z₃ = z_min`.
    pub fn gaussian_optimal_z(&self, z_min: f64, z_max: f64) -> Result<[f64; 3]> {
        match *self {
            Parametrization::Native(p) => {
                let b = crate::model::Bounds::new(z_min, z_max)?;
                Ok([z_min, crate::solver::gaussian_x2_closed_form(&p, &b), z_max])
            }
            Parametrization::Dette { b3_tilde, .. } => {
                Ok([z_min, z2_optimal_dette(b3_tilde, z_min, z_max)?, z_max])
            }
            Parametrization::BoxLucas { b3, .. } => {
                Ok([z_min, z2_exponential(-1.0 / b3, z_min, z_max)?, z_max])
            }
            Parametrization::HanChaloner { b3, .. } => {
                Ok([z_max, z2_exponential(-1.0 / b3, z_max, z_min)?, z_min])
            }
        }
    }
}

/// Converts a z-design to native parameters and increasing native stimuli.
pub fn to_native(p: &Parametrization, z: [f64; 3]) -> Result<NativeDesign> {
    if !(z[0] < z[1] && z[1] < z[2]) {
        return Err(Error::Order(z));
    }
    let mut x = z.map(|v| p.stimulus(v));
    let reversed = p.reverses_order();
    if reversed {
        x.reverse();
    }
    Ok(NativeDesign { params: p.native_params(), x, reversed })
}

/// Optimal middle log-stimulus for `β₁ + β₂ exp(z / β̃₃)` under homoscedastic
/// normal errors:
/// `[z₃ e^{z₃/β̃₃} − z₁ e^{z₁/β̃₃}] / [e^{z₃/β̃₃} − e^{z₁/β̃₃}] − β̃₃`.
pub fn z2_optimal_dette(beta3_tilde: f64, z1: f64, z3: f64) -> Result<f64> {
    if !(beta3_tilde > 0.0) {
        return Err(Error::InvalidParams(format!("beta3_tilde = {beta3_tilde} must be > 0")));
    }
    if z1 > z3 {
        return Err(Error::Order([z1, f64::NAN, z3]));
    }
    z2_exponential(beta3_tilde, z1, z3)
}

/// Same formula for any non-zero scale; `z1` and `z3` may come in either order.
pub(crate) fn z2_exponential(scale: f64, z1: f64, z3: f64) -> Result<f64> {
    let spread = z3 - z1;
    let size = 1.0 + z1.abs().max(z3.abs());
    if !(spread.abs() > 1e-10 * size) || scale == 0.0 {
        return Err(Error::Precision(format!(
            "z-window [{z1}, {z3}] is degenerate for the closed form"
        )));
    }
    // Divide through by the larger exponential. With r = e^{(z₁−z₃)/s} ≤ 1:
    //   z₂ = z₃ + (z₃ − z₁) r / (1 − r) − s,
    // otherwise with q = 1/r < 1:
    //   z₂ = z₁ + (z₃ − z₁) q / (q − 1) − s.
    let t = (z1 - z3) / scale;
    let z2 = if t <= 0.0 {
        let denom = -t.exp_m1();
        if denom == 0.0 {
            return Err(Error::Precision("zero denominator in closed form".into()));
        }
        z3 + spread * t.exp() / denom - scale
    } else {
        let denom = (-t).exp_m1();
        if denom == 0.0 {
            return Err(Error::Precision("zero denominator in closed form".into()));
        }
        z1 + spread * (-t).exp() / denom - scale
    };
    if !z2.is_finite() {
        return Err(Error::Precision("closed form is not finite".into()));
    }
    Ok(z2)
}
