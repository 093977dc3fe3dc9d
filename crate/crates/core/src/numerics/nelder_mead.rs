//! Derivative-free simplex search in two dimensions.

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
    /// `false` when the evaluation budget ran out first.
    pub converged: bool,
}

/// Minimizes `f` from `start` inside the box `bounds`; trial points are
/// clipped to the box. Deterministic. Returns the best point evaluated.
pub fn nelder_mead_2d<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    bounds: [[f64; 2]; 2],
    budget: usize,
) -> NelderMeadResult {
    let clip = |p: [f64; 2]| -> [f64; 2] {
        [
            p[0].clamp(bounds[0][0], bounds[0][1]),
            p[1].clamp(bounds[1][0], bounds[1][1]),
        ]
    };
    let mut evals = 0usize;
    let mut eval = |p: [f64; 2], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let x0 = clip(start);
    let step = |i: usize| {
        let s = 0.1 * x0[i].abs();
        if s > 0.0 {
            s
        } else {
            0.1 * (bounds[i][1] - bounds[i][0]).min(1.0)
        }
    };
    let mut simplex = [
        x0,
        clip([x0[0] + step(0), x0[1]]),
        clip([x0[0], x0[1] + step(1)]),
    ];
    // a vertex clipped back onto x0 would make the simplex degenerate
    for (i, v) in simplex.iter_mut().enumerate().skip(1) {
        if *v == x0 {
            v[i - 1] = (x0[i - 1] - step(i - 1)).clamp(bounds[i - 1][0], bounds[i - 1][1]);
        }
    }
    let abs_floor = 1e-12 * step(0).max(step(1));
    let mut values = [0.0; 3];
    for i in 0..3 {
        values[i] = eval(simplex[i], &mut evals);
    }

    let mut converged = false;
    while evals < budget {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        values = [values[order[0]], values[order[1]], values[order[2]]];

        let size = (1..3)
            .map(|i| (simplex[i][0] - simplex[0][0]).abs().max((simplex[i][1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        let scale = simplex[0][0].abs().max(simplex[0][1].abs());
        if size <= 1e-10 * scale + abs_floor {
            converged = true;
            break;
        }

        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            clip([
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ])
        };
        let xr = along(-1.0);
        let fr = eval(xr, &mut evals);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(xe, &mut evals);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[2] {
            let xc = along(-0.5);
            (xc, eval(xc, &mut evals))
        } else {
            let xc = along(0.5);
            (xc, eval(xc, &mut evals))
        };
        if fc < values[2].min(fr) {
            simplex[2] = xc;
            values[2] = fc;
            continue;
        }
        for i in 1..3 {
            simplex[i] = clip([
                simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
            ]);
            values[i] = eval(simplex[i], &mut evals);
        }
    }
    let best = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    NelderMeadResult {
        x: simplex[best],
        value: values[best],
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WIDE: [[f64; 2]; 2] = [[-10.0, 10.0], [-10.0, 10.0]];

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead_2d(|p| (p[0] - 1.0).powi(2) + (p[1] - 2.0).powi(2), [0.0, 0.0], WIDE, 1000);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 2.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn rosenbrock() {
        let r = nelder_mead_2d(
            |p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2),
            [0.0, 0.0],
            WIDE,
            500,
        );
        assert!(r.value < 1e-3, "{r:?}");
        assert!(r.evaluations <= 500 + 3);
    }

    #[test]
    fn start_at_optimum() {
        let r = nelder_mead_2d(|p| p[0] * p[0] + p[1] * p[1], [0.0, 0.0], WIDE, 1000);
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn respects_bounds() {
        let r = nelder_mead_2d(|p| (p[0] + 5.0).powi(2) + p[1].powi(2), [1.0, 1.0], [[0.0, 10.0], [0.0, 10.0]], 1000);
        assert!(r.x[0] >= 0.0 && r.x[0] < 1e-6 && r.x[1] < 1e-6, "{r:?}");
    }

    #[test]
    fn deterministic() {
        let f = |p: [f64; 2]| (p[0] - 0.3).powi(4) + (p[1] + 0.7).powi(2) + p[0] * p[1];
        assert_eq!(nelder_mead_2d(f, [1.0, 1.0], WIDE, 300), nelder_mead_2d(f, [1.0, 1.0], WIDE, 300));
    }
}
