//! Brute-force oracles for the inner solvers of the robust designs.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satbeam::linalg::{power, rel_frobenius, trace_re, CMat};
use satbeam::numerics::{dykstra_project, IntersectionProjector};
use satbeam::robust::{
    mmse_ia_closed_form, precoder_from_multipliers, solve_multipliers, solve_multipliers_search, wmmse_mse, wmmse_update_u,
};

use common::{random_matrix, random_problem};

fn weighted_mse(p: &CMat, u: &[satbeam::linalg::C64], w: &[f64], prob: &satbeam::problem::RobustProblem) -> f64 {
    wmmse_mse(p, u, &prob.users).iter().zip(w).map(|(e, w)| e * w).sum()
}

/// For fixed (u, w) the best feasible member of the multiplier family,
/// found on a dense log grid, matches the dual-route solver to 0.1%.
#[test]
fn multiplier_solver_matches_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..4 {
        let prob0 = random_problem(&mut rng, 3, 1.0);
        let (p0, _) = mmse_ia_closed_form(0.0, &prob0).unwrap();
        // tighten the threshold so the interference constraint is active
        let prob = prob0.with_threshold(prob0.avg_interference(&p0) * rng.random_range(0.05..0.5));
        let u = wmmse_update_u(&p0, &prob.users);
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..2.0)).collect();

        let sol = solve_multipliers(&u, &w, &prob).unwrap();
        assert!(prob.is_feasible(&sol.p, 1e-6), "case {case}: solver output infeasible");
        let f_solver = weighted_mse(&sol.p, &u, &w, &prob);

        let m = prob.users.num_antennas() as f64;
        let lam_scale = trace_re(&prob.users.upsilon_ss()) / m;
        let mu_scale = prob.k_g as f64 * lam_scale / (trace_re(&prob.interference.matrix) / m);
        // log10 offsets from the scales; dense grid, then zoom on the incumbent
        let n = 200;
        let (mut lo, mut hi) = ([-6.0, -4.0], [3.0, 5.0]);
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for _ in 0..4 {
            let step = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
            for i in 0..n {
                let a = lo[0] + step[0] * i as f64;
                for j in 0..n {
                    let b = lo[1] + step[1] * j as f64;
                    let p = precoder_from_multipliers(lam_scale * 10f64.powf(a), mu_scale * 10f64.powf(b), &u, &w, &prob)
                        .unwrap();
                    if power(&p) <= prob.p_t_w && prob.avg_interference(&p) <= prob.i_thr_w {
                        let f = weighted_mse(&p, &u, &w, &prob);
                        if f < best.0 {
                            best = (f, [a, b]);
                        }
                    }
                }
            }
            lo = [best.1[0] - 3.0 * step[0], best.1[1] - 3.0 * step[1]];
            hi = [best.1[0] + 3.0 * step[0], best.1[1] + 3.0 * step[1]];
        }
        let best = best.0;
        assert!(best.is_finite(), "case {case}: grid found no feasible point");
        let gap = (f_solver - best) / best;
        assert!(gap.abs() <= 1e-3, "case {case}: solver {f_solver} grid {best} gap {gap}");
        // the derivative-free route never beats the dual route
        let search = solve_multipliers_search(&u, &w, &prob).unwrap();
        assert!(weighted_mse(&search.p, &u, &w, &prob) >= f_solver * (1.0 - 1e-9));
    }
}

#[test]
fn projector_agrees_with_dykstra() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..10 {
        let prob = random_problem(&mut rng, 3, 1.0);
        let x = random_matrix(&mut rng, 16, 3);
        let radius = power(&x) * rng.random_range(0.2..1.5);
        let bound = trace_re(&(x.adjoint() * &prob.interference.matrix * &x)) * rng.random_range(0.1..1.5);
        let fast = IntersectionProjector::new(&prob.interference.matrix, radius, bound).unwrap().project(&x);
        let slow = dykstra_project(&x, &prob.interference.matrix, radius, bound, 200_000, 1e-14).unwrap();
        assert!(rel_frobenius(&fast, &slow) < 1e-6, "gap {}", rel_frobenius(&fast, &slow));
    }
}
