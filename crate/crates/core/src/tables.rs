//! Built-in illustration: six parameter rows on the window `[0, 15]`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::Family;
use crate::model::{Bounds, Design, ModelParams};
use crate::solver::{dilution_design, efficiency, solve_with, Efficiency, Method, SolveOptions};

pub const PRESET_LOWER: f64 = 0.0;
pub const PRESET_UPPER: f64 = 15.0;

/// `(β₁, β₂, β₃)` for the six preset rows.
pub const PRESET_ROWS: [[f64; 3]; 6] = [
    [0.5, 1.2, 0.9],
    [0.5, 1.0, 1.0],
    [0.5, 0.8, 1.1],
    [1.0, 1.2, 0.9],
    [1.0, 1.0, 1.0],
    [1.0, 0.8, 1.1],
];

pub const TABLE1_FAMILIES: [Family; 6] = [
    Family::Gaussian,
    Family::Poisson,
    Family::Gamma,
    Family::Binomial { trials: 25 },
    Family::Binomial { trials: 50 },
    Family::Binomial { trials: 100 },
];

/// Dilution factors compared against the inverse Gaussian optimum.
pub const DILUTIONS: [f64; 3] = [60.0, 30.0, 15.0];

pub fn preset_bounds() -> Bounds {
    Bounds { lower: PRESET_LOWER, upper: PRESET_UPPER }
}

pub fn preset_params() -> [ModelParams; 6] {
    PRESET_ROWS.map(ModelParams::from_array)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub params: ModelParams,
    /// Middle stimulus per family, in [`TABLE1_FAMILIES`] order.
    pub x2: [f64; 6],
    pub designs: [Design; 6],
    pub methods: [Method; 6],
}

/// Optimal middle stimulus for the four families (three binomial sizes).
pub fn table1(opts: &SolveOptions) -> Result<Vec<Table1Row>> {
    preset_params()
        .iter()
        .map(|p| {
            let mut designs = Vec::with_capacity(6);
            let mut methods = Vec::with_capacity(6);
            for fam in TABLE1_FAMILIES {
                let r = solve_with(fam, p, &preset_bounds(), opts)?;
                designs.push(r.design);
                methods.push(r.method);
            }
            let designs: [Design; 6] = designs.try_into().expect("six families");
            Ok(Table1Row {
                params: *p,
                x2: designs.map(|d| d.x[1]),
                designs,
                methods: methods.try_into().expect("six families"),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilutionEfficiency {
    pub d: f64,
    pub design: Design,
    pub efficiency: Efficiency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub params: ModelParams,
    pub design: Design,
    pub det: f64,
    pub dilutions: Vec<DilutionEfficiency>,
}

/// Inverse Gaussian optima and the efficiency of the dilution designs.
pub fn table2(opts: &SolveOptions) -> Result<Vec<Table2Row>> {
    let fam = Family::InverseGaussian;
    preset_params()
        .iter()
        .map(|p| {
            let r = solve_with(fam, p, &preset_bounds(), opts)?;
            let dilutions = DILUTIONS
                .iter()
                .map(|&d| {
                    let design = dilution_design(PRESET_UPPER, d)?;
                    Ok(DilutionEfficiency { d, design, efficiency: efficiency(&fam, p, &design, &r.design)? })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table2Row { params: *p, design: r.design, det: r.det, dilutions })
        })
        .collect()
}
