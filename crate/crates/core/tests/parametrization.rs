//! The optimal design does not depend on how the curve is parametrized: the
//! native optimum, mapped to each log-stimulus form, maximizes that form's own
//! determinant on a fine grid.

use mitscherlich::solver::gaussian_x2_closed_form;
use mitscherlich::{solve, Bounds, Family, Parametrization};

const STEP: f64 = 1e-4;

/// `∂μ/∂θ` in the form's own parameters and stimulus.
fn gradient(p: &Parametrization, z: f64) -> [f64; 3] {
    match *p {
        Parametrization::BoxLucas { b2, b3, .. } => {
            let e = (-b3 * z).exp();
            [1.0, -e, b2 * z * e]
        }
        Parametrization::HanChaloner { b2, b3, .. } => {
            let e = (-b3 * z).exp();
            [1.0, e, -b2 * z * e]
        }
        Parametrization::Dette { b2, b3_tilde, .. } => {
            let e = (z / b3_tilde).exp();
            [1.0, e, -b2 * z * e / (b3_tilde * b3_tilde)]
        }
        Parametrization::Native(_) => unreachable!(),
    }
}

/// `|G|²` for the 3×3 gradient matrix, which is the normal-response determinant.
fn det_z(p: &Parametrization, z: [f64; 3]) -> f64 {
    let g = z.map(|v| gradient(p, v));
    let d = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    d * d
}

fn grid_argmax(p: &Parametrization, lo: f64, hi: f64) -> f64 {
    let n = ((hi - lo) / STEP).floor() as usize;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 1..n {
        let z2 = lo + k as f64 * STEP;
        let d = det_z(p, [lo, z2, hi]);
        if d > best.0 {
            best = (d, z2);
        }
    }
    best.1
}

#[test]
fn optimum_is_invariant_across_parametrizations() {
    let upper = 15f64;
    let native_bounds = Bounds::new(1.0, upper).unwrap();
    let forms = [
        (Parametrization::BoxLucas { b1: 3.0, b2: 1.5, b3: 0.7 }, 0.0, upper.ln()),
        (Parametrization::HanChaloner { b1: 0.4, b2: 1.1, b3: 0.9 }, -upper.ln(), 0.0),
        (Parametrization::Dette { b1: 0.2, b2: 0.8, b3_tilde: 1.3 }, 0.0, upper.ln()),
        (Parametrization::Dette { b1: 0.5, b2: 1.0, b3_tilde: 0.5 }, 0.0, upper.ln()),
    ];
    for (form, lo, hi) in forms {
        let z_oracle = grid_argmax(&form, lo, hi);

        let z = form.gaussian_optimal_z(lo, hi).unwrap();
        assert!((z[1] - z_oracle).abs() <= STEP, "{form:?}: closed form {} vs grid {z_oracle}", z[1]);

        // The native optimum on the matching stimulus window, mapped back.
        let native = form.native_params();
        let x2 = if native.b2 > 0.0 {
            solve(Family::Gaussian, &native, &native_bounds).unwrap().design.x[1]
        } else {
            gaussian_x2_closed_form(&native, &native_bounds)
        };
        let z2 = form.z_of(x2);
        assert!((z2 - z_oracle).abs() <= STEP, "{form:?}: native {z2} vs grid {z_oracle}");
    }
}

#[test]
fn ends_stay_at_the_window_edges() {
    // With z₂ at its optimum, moving either end inward lowers the determinant.
    let form = Parametrization::Dette { b1: 0.2, b2: 0.8, b3_tilde: 1.3 };
    let (lo, hi) = (0.0, 15f64.ln());
    let z = form.gaussian_optimal_z(lo, hi).unwrap();
    let best = det_z(&form, z);
    for eps in [1e-3, 1e-2, 1e-1] {
        assert!(det_z(&form, [lo + eps, z[1], hi]) < best);
        assert!(det_z(&form, [lo, z[1], hi - eps]) < best);
    }
}
