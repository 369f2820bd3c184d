//! Exhaustive determinant maximization over a stimulus grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::InfoWeight;
use crate::model::{Bounds, Design, ModelParams};

/// Default cap on the number of evaluated grid cells.
pub const DEFAULT_CELL_CAP: u64 = 1_000_000_000;

/// The D-criterion `|I₃ₓ₃|` for a weight, parameter guess and replicate counts.
#[derive(Clone, Copy)]
pub struct DetCriterion<'a> {
    pub weight: &'a dyn InfoWeight,
    pub params: ModelParams,
    pub n: [u32; 3],
}

/// Stimuli held fixed during a grid search.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Fixed {
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    pub x3: Option<f64>,
}

impl Fixed {
    pub fn ends(lower: f64, upper: f64) -> Self {
        Fixed { x1: Some(lower), x2: None, x3: Some(upper) }
    }

    pub fn lower(lower: f64) -> Self {
        Fixed { x1: Some(lower), ..Fixed::default() }
    }

    fn as_array(&self) -> [Option<f64>; 3] {
        [self.x1, self.x2, self.x3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub design: Design,
    /// Determinant at the maximizing design (`+∞` when a fixed stimulus has a
    /// degenerate mean).
    pub det: f64,
    /// Number of evaluated cells.
    pub cells: u64,
}

/// Grid `L, L + h, L + 2h, …` below `U`, with `U` appended.
pub fn grid_points(bounds: &Bounds, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("grid step {step} must be positive")));
    }
    let count = (bounds.width() / step).floor();
    if count > 1e8 {
        return Err(Error::Budget { cells: count as u64, cap: 100_000_000 });
    }
    let mut pts: Vec<f64> = (0..=count as u64)
        .map(|k| bounds.lower + k as f64 * step)
        .filter(|x| *x < bounds.upper - 1e-9 * step)
        .collect();
    pts.push(bounds.upper);
    Ok(pts)
}

/// Per-stimulus quantities reused across cells: `z = x^β₃`, `z log x`, and the
/// weight `w(μ)` (one for a fixed coordinate, whose factor is a constant).
pub(crate) struct Axis {
    pub x: Vec<f64>,
    z: Vec<f64>,
    zl: Vec<f64>,
    w: Vec<f64>,
}

impl Axis {
    pub fn new(weight: &dyn InfoWeight, params: &ModelParams, x: Vec<f64>, fixed: bool) -> Result<Self> {
        let mut z = Vec::with_capacity(x.len());
        let mut zl = Vec::with_capacity(x.len());
        let mut w = Vec::with_capacity(x.len());
        for &xi in &x {
            let zi = xi.powf(params.b3);
            z.push(zi);
            zl.push(if xi > 0.0 { zi * xi.ln() } else { 0.0 });
            if fixed {
                w.push(1.0);
                continue;
            }
            let mu = params.mu(xi);
            if weight.admits_degenerate_mean(mu) {
                return Err(Error::Domain(format!(
                    "mean is degenerate at x = {xi}; hold that stimulus fixed"
                )));
            }
            w.push(weight.weight(mu)?.0);
        }
        Ok(Axis { x, z, zl, w })
    }
}

fn count_cells(axes: [&Axis; 3]) -> u64 {
    let mut cells = 0u64;
    for &a in &axes[0].x {
        let start = axes[1].x.partition_point(|b| *b <= a);
        for &b in &axes[1].x[start..] {
            let c0 = axes[2].x.partition_point(|c| *c <= b);
            cells += (axes[2].x.len() - c0) as u64;
        }
    }
    cells
}

/// Index triple maximizing the criterion over ordered cells `x₁ < x₂ < x₃`
/// drawn from the three axes; the criterion value is returned up to the
/// constant `β₂² Π nᵢ`. The first maximizer in lexicographic order wins.
pub(crate) fn argmax(axes: [&Axis; 3], cap: u64) -> Result<Option<([usize; 3], f64, u64)>> {
    let cells = count_cells(axes);
    if cells > cap {
        return Err(Error::Budget { cells, cap });
    }
    let [a1, a2, a3] = axes;
    let per_outer: Vec<Option<([usize; 3], f64)>> = (0..a1.x.len())
        .into_par_iter()
        .map(|i| {
            let mut best: Option<([usize; 3], f64)> = None;
            let xa = a1.x[i];
            let (za, zla, wa) = (a1.z[i], a1.zl[i], a1.w[i]);
            let start = a2.x.partition_point(|b| *b <= xa);
            for j in start..a2.x.len() {
                let (zb, zlb) = (a2.z[j], a2.zl[j]);
                let base = za * zlb - zla * zb;
                let dz = zb - za;
                let dzl = zlb - zla;
                let wab = wa * a2.w[j];
                let k0 = a3.x.partition_point(|c| *c <= a2.x[j]);
                let mut local: Option<(usize, f64)> = None;
                for k in k0..a3.x.len() {
                    let m = base + a3.zl[k] * dz - a3.z[k] * dzl;
                    let v = m * m * a3.w[k];
                    if local.map_or(true, |(_, bv)| v > bv) {
                        local = Some((k, v));
                    }
                }
                if let Some((k, v)) = local {
                    let v = v * wab;
                    if best.map_or(true, |(_, bv)| v > bv) {
                        best = Some(([i, j, k], v));
                    }
                }
            }
            best
        })
        .collect();
    let mut best: Option<([usize; 3], f64)> = None;
    for cand in per_outer.into_iter().flatten() {
        if best.map_or(true, |(_, bv)| cand.1 > bv) {
            best = Some(cand);
        }
    }
    Ok(best.map(|(idx, v)| (idx, v, cells)))
}

/// Determinant of a design, with `+∞` when a stimulus sits at an attainable
/// degenerate mean (e.g. a Poisson mean of zero).
pub(crate) fn design_det<W: InfoWeight + ?Sized>(
    weight: &W,
    params: &ModelParams,
    x: [f64; 3],
    n: [u32; 3],
) -> Result<f64> {
    if x.iter().any(|&xi| weight.admits_degenerate_mean(params.mu(xi))) {
        return Ok(f64::INFINITY);
    }
    crate::fisher::det_from_stimuli(weight, params, x, n)
}

/// Exhaustively maximizes the determinant over the `grid_step` grid on
/// `bounds`, holding any `fixed` stimuli. Ties go to the lexicographically
/// smallest design.
pub fn brute_force_oracle(
    criterion: &DetCriterion<'_>,
    bounds: &Bounds,
    grid_step: f64,
    fixed: Fixed,
    max_cells: u64,
) -> Result<OracleResult> {
    let pts = grid_points(bounds, grid_step)?;
    let mut axes: Vec<Axis> = Vec::with_capacity(3);
    for v in fixed.as_array() {
        // Points that cannot follow the previous coordinate are dropped.
        let floor = axes.last().map_or(f64::NEG_INFINITY, |a| a.x[0]);
        let axis = match v {
            Some(x) => {
                if !(x >= bounds.lower && x <= bounds.upper) {
                    return Err(Error::Domain(format!("fixed stimulus {x} lies outside the bounds")));
                }
                Axis::new(criterion.weight, &criterion.params, vec![x], true)?
            }
            None => {
                let xs: Vec<f64> = pts.iter().copied().filter(|x| *x > floor).collect();
                if xs.is_empty() {
                    return Err(Error::Infeasible("no ordered design on the grid".into()));
                }
                Axis::new(criterion.weight, &criterion.params, xs, false)?
            }
        };
        axes.push(axis);
    }
    let found = argmax([&axes[0], &axes[1], &axes[2]], max_cells)?;
    let Some((idx, _, cells)) = found else {
        return Err(Error::Infeasible("no ordered design on the grid".into()));
    };
    let x = [axes[0].x[idx[0]], axes[1].x[idx[1]], axes[2].x[idx[2]]];
    let design = Design::new(x, criterion.n)?;
    let det = design_det(criterion.weight, &criterion.params, x, criterion.n)?;
    Ok(OracleResult { design, det, cells })
}
