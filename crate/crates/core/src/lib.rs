//! Locally D-optimal three-point designs for the Mitscherlich curve
//! `μ(x) = β₁ + β₂ x^β₃` under exponential-family responses.
//!
//! ```
//! use mitscherlich::{solve, Bounds, Family, ModelParams};
//!
//! let params = ModelParams::new(0.5, 1.0, 1.0).unwrap();
//! let bounds = Bounds::new(0.0, 15.0).unwrap();
//! let report = solve(Family::Poisson, &params, &bounds).unwrap();
//! assert_eq!(report.design.x[0], 0.0);
//! assert_eq!(report.design.x[2], 15.0);
//! assert!((report.design.x[1] - 2.67).abs() < 0.01);
//! ```

pub mod error;
pub mod family;
pub mod fisher;
pub mod linalg;
pub mod mle;
pub mod model;
mod serde_f64;
pub mod solver;
pub mod tables;
pub mod verify;

pub use error::{Error, Result};
pub use family::{ConditionReport, Family, InfoWeight, MeanDomain};
pub use fisher::{
    det_explicit, det_from_stimuli, hetero_h, hetero_info_matrix, hetero_score_covariances, info_matrix,
    score_covariances, weighted_lsq_det, HeteroSpec, ScoreCovariances, VarianceFn,
};
pub use model::{Bounds, Design, Matrix3, ModelParams, Parametrization};
pub use solver::{
    brute_force_oracle, dilution_design, efficiency, gaussian_x2_closed_form, hetero_solve, invgauss_solve, placement_conditions,
    poisson_x2_bounds, solve, solve_weighted, solve_with, transformed_solve, x2_equation, DetCriterion,
    Efficiency, Fixed, Method, SolveOptions, SolveReport, TransformSpec,
};
