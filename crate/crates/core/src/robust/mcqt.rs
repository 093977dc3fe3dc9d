//! Quadratic-transform (MCQT) ascent: closed-form auxiliary variables and a
//! projected-gradient solver for the concave precoder subproblem.

use std::f64::consts::LN_2;

use crate::baseline::{Algorithm, Multipliers, PrecoderResult, TraceEntry};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64};
use crate::numerics::IntersectionProjector;
use crate::problem::{RobustProblem, Users};

use super::{initial_point, projector};

/// `xi_k = h_bar_k^H p_k / (sum_i p_i^H Ups_k p_i - |h_bar_k^H p_k|^2 + sigma_k^2)`.
pub fn mcqt_update_xi(p: &CMat, users: &Users) -> Vec<C64> {
    let cross = users.cross(p);
    let d = users.total_received(&cross);
    let n = users.useful(&cross);
    (0..users.num_users())
        .map(|k| users.mean_gain[k].conj() * cross[(k, k)] / (d[k] - n[k]))
        .collect()
}

/// Per-user log arguments `A_k` of the surrogate.
fn log_arguments(xi: &[C64], cross: &CMat, users: &Users) -> Vec<f64> {
    let d = users.total_received(cross);
    let n = users.useful(cross);
    (0..users.num_users())
        .map(|k| {
            let t = users.mean_gain[k].conj() * cross[(k, k)];
            1.0 + 2.0 * (xi[k].conj() * t).re - xi[k].norm_sqr() * (d[k] - n[k])
        })
        .collect()
}

/// `sum_k a_k log2(1 + 2 Re{xi_k^* h_bar_k^H p_k} - |xi_k|^2 (...))`.
pub fn mcqt_objective(xi: &[C64], p: &CMat, users: &Users) -> Result<f64> {
    check_xi(xi, users)?;
    let args = log_arguments(xi, &users.cross(p), users);
    let mut f = 0.0;
    for (k, &a) in args.iter().enumerate() {
        if !(a > 0.0) {
            return Err(Error::NonPositiveLogArgument { user: k, value: a });
        }
        f += users.weight[k] * a.log2();
    }
    Ok(f)
}

fn check_xi(xi: &[C64], users: &Users) -> Result<()> {
    if xi.len() != users.num_users() {
        return Err(Error::DimensionMismatch {
            context: "auxiliary variables",
            expected: format!("{}", users.num_users()),
            actual: format!("{}", xi.len()),
        });
    }
    Ok(())
}

/// Steepest-ascent direction `2 df/dP^*` of the surrogate for fixed `xi`.
pub fn mcqt_gradient(xi: &[C64], p: &CMat, users: &Users) -> Result<CMat> {
    check_xi(xi, users)?;
    let cross = users.cross(p);
    let args = log_arguments(xi, &cross, users);
    if let Some(k) = args.iter().position(|a| !(*a > 0.0)) {
        return Err(Error::NonPositiveLogArgument { user: k, value: args[k] });
    }
    Ok(gradient_from(xi, &cross, &args, users))
}

fn gradient_from(xi: &[C64], cross: &CMat, args: &[f64], users: &Users) -> CMat {
    let k_s = users.num_users();
    let coef: Vec<f64> = (0..k_s).map(|k| users.weight[k] / (args[k] * LN_2)).collect();
    let mut m = CMat::zeros(k_s, k_s);
    for k in 0..k_s {
        let s = -coef[k] * xi[k].norm_sqr() * users.gain_power[k];
        for j in 0..k_s {
            m[(k, j)] = cross[(k, j)] * s;
        }
        let g = users.mean_gain[k];
        m[(k, k)] += coef[k] * (xi[k] * g + xi[k].norm_sqr() * g.norm_sqr() * cross[(k, k)]);
    }
    (&users.steering * m) * c(2.0, 0.0)
}

/// Value and gradient, or `None` outside the log domain.
fn value_grad(xi: &[C64], y: &CMat, users: &Users) -> Option<(f64, CMat)> {
    let cross = users.cross(y);
    let args = log_arguments(xi, &cross, users);
    if args.iter().any(|a| !(*a > 0.0)) {
        return None;
    }
    let f = args.iter().zip(&users.weight).map(|(a, w)| w * a.log2()).sum();
    Some((f, gradient_from(xi, &cross, &args, users)))
}

fn value(xi: &[C64], y: &CMat, users: &Users) -> f64 {
    let args = log_arguments(xi, &users.cross(y), users);
    if args.iter().any(|a| !(*a > 0.0)) {
        return f64::NEG_INFINITY;
    }
    args.iter().zip(&users.weight).map(|(a, w)| w * a.log2()).sum()
}

fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[derive(Clone, Debug)]
pub struct SubproblemOutcome {
    pub p: CMat,
    pub objective: f64,
    pub iterations: usize,
    pub projected_gradient_norm: f64,
    /// Backtracking ran out before satisfying the sufficient-increase test.
    pub line_search_failed: bool,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct InnerOptions {
    pub max_iter: usize,
    pub pg_tol: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            max_iter: 3000,
            pg_tol: 1e-8,
        }
    }
}

/// Projected gradient ascent with Barzilai-Borwein steps and Armijo
/// backtracking along the projection arc, in the projector's eigen
/// coordinates (`users.steering` must already be expressed there).
pub(crate) fn inner_ascent(
    xi: &[C64],
    users: &Users,
    proj: &IntersectionProjector,
    y0: &CMat,
    opts: InnerOptions,
) -> SubproblemOutcome {
    let mut y = proj.project_eigen(y0);
    let Some((mut f, mut g)) = value_grad(xi, &y, users) else {
        // start outside the log domain: scale toward zero where A_k = 1
        let zero = CMat::zeros(y.nrows(), y.ncols());
        return inner_ascent(xi, users, proj, &zero, opts);
    };
    // curvature scale of the quadratic part
    let lip: f64 = (0..users.num_users())
        .map(|k| 2.0 * users.weight[k] / LN_2 * xi[k].norm_sqr() * users.gain_power[k])
        .sum::<f64>()
        .max(1e-12);
    let mut t = 1.0 / lip;
    let mut pg = (proj.project_eigen(&(&y + &g)) - &y).norm();
    let mut failed = false;
    let mut stalls = 0;
    let mut it = 0;
    while it < opts.max_iter && pg > opts.pg_tol {
        it += 1;
        let mut accepted = None;
        for _ in 0..60 {
            let yt = proj.project_eigen(&(&y + &g * c(t, 0.0)));
            let d = &yt - &y;
            let ft = value(xi, &yt, users);
            if ft >= f + 1e-4 * re_inner(&g, &d) && ft >= f {
                accepted = Some((yt, d, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((yt, s, ft)) = accepted else {
            failed = true;
            break;
        };
        let (_, gt) = value_grad(xi, &yt, users).expect("accepted point lies in the log domain");
        let sy = -re_inner(&s, &(&gt - &g));
        let ss = s.norm_squared();
        t = if sy > 0.0 { (ss / sy).clamp(1e-12 / lip, 1e12 / lip) } else { 2.0 * t };
        stalls = if (ft - f) <= 1e-15 * f.abs().max(1.0) { stalls + 1 } else { 0 };
        y = yt;
        f = ft;
        g = gt;
        pg = (proj.project_eigen(&(&y + &g)) - &y).norm();
        if ss == 0.0 || stalls >= 5 {
            break;
        }
    }
    SubproblemOutcome {
        p: y,
        objective: f,
        iterations: it,
        projected_gradient_norm: pg,
        line_search_failed: failed,
    }
}

/// Maximizes the surrogate over the power ball and interference ellipsoid
/// for fixed `xi` (original units), starting from `p_init`.
pub fn solve_wsr_subproblem(xi: &[C64], problem: &RobustProblem, p_init: &CMat) -> Result<SubproblemOutcome> {
    problem.validate()?;
    check_xi(xi, &problem.users)?;
    let norm = problem.normalize();
    let proj = projector(&norm)?;
    let q = proj.eigenvectors();
    let mut users = norm.users.clone();
    users.steering = q.adjoint() * &users.steering;
    // xi and P for canonical, normalized users
    let xi_n: Vec<C64> = xi
        .iter()
        .zip(&problem.users.noise_power)
        .map(|(x, s)| x * s.sqrt())
        .collect();
    let p_canon = crate::problem::rotate_columns(p_init, &norm.rotations.iter().map(|r| r.conj()).collect::<Vec<_>>());
    let y0 = proj.to_eigen(&norm.from_canonical_original(&p_canon));
    let mut out = inner_ascent(&xi_n, &users, &proj, &y0, InnerOptions::default());
    out.p = norm.restore(&proj.from_eigen(&out.p));
    Ok(out)
}

/// Alternates the auxiliary-variable update and the precoder subproblem.
pub fn wqtia(problem: &RobustProblem) -> Result<PrecoderResult> {
    problem.validate()?;
    let norm = problem.normalize();
    let proj = projector(&norm)?;
    let q = proj.eigenvectors().clone();
    let mut users = norm.users.clone();
    users.steering = q.adjoint() * &users.steering;

    let restore = |y: &CMat| norm.restore(&(&q * y));
    let mut y = proj.to_eigen(&initial_point(problem, &norm, &proj)?);
    let mut f_prev = users.lower_bound_rate(&y);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: f_prev,
        avg_interference_w: problem.avg_interference(&restore(&y)),
    }];
    let mut flags = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for n in 1..=problem.iter_max {
        iterations = n;
        let xi = mcqt_update_xi(&y, &users);
        let inner = inner_ascent(&xi, &users, &proj, &y, InnerOptions::default());
        if inner.line_search_failed {
            flags.push(format!("iteration {n}: line search failed in precoder subproblem"));
        }
        y = inner.p;
        let f = users.lower_bound_rate(&y);
        let p = restore(&y);
        let i_avg = problem.avg_interference(&p);
        trace.push(TraceEntry {
            iteration: n,
            objective: f,
            avg_interference_w: i_avg,
        });
        let feasible = problem.is_feasible(&p, 1e-9);
        if (f - f_prev).abs() < problem.tolerance && feasible {
            converged = true;
            break;
        }
        f_prev = f;
    }
    if !converged {
        flags.push(format!("not converged after {} iterations", problem.iter_max));
    }
    Ok(PrecoderResult {
        p: restore(&y),
        beta: None,
        algorithm: Algorithm::Wqtia,
        multipliers: Multipliers::default(),
        trace,
        iterations,
        converged,
        flags,
    })
}
