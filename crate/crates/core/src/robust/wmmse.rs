//! Weighted-MMSE route: receive scalars, MSE weights, the Lagrangian closed
//! form for the precoder and the search for its two multipliers.

use crate::baseline::{Algorithm, Multipliers, PrecoderResult, TraceEntry};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_part, quad_trace, solve_hpd, CMat, HermitianEigen, C64};
use crate::numerics::nelder_mead_2d;
use crate::problem::{RobustProblem, Users};

use super::{initial_point, projector};

/// `u_k = p_k^H h_bar_k / (sum_i gamma_k^2 |v_k^H p_i|^2 + sigma_k^2)`.
pub fn wmmse_update_u(p: &CMat, users: &Users) -> Vec<C64> {
    let cross = users.cross(p);
    let d = users.total_received(&cross);
    (0..users.num_users())
        .map(|k| users.mean_gain[k] * cross[(k, k)].conj() / d[k])
        .collect()
}

/// `e_k = |u_k|^2 D_k - 2 Re{u_k h_bar_k^H p_k} + 1` for arbitrary `u`.
pub fn wmmse_mse(p: &CMat, u: &[C64], users: &Users) -> Vec<f64> {
    let cross = users.cross(p);
    let d = users.total_received(&cross);
    (0..users.num_users())
        .map(|k| {
            let t = users.mean_gain[k].conj() * cross[(k, k)];
            u[k].norm_sqr() * d[k] - 2.0 * (u[k] * t).re + 1.0
        })
        .collect()
}

/// `w_k = a_k / e_k`.
pub fn wmmse_update_w(e: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    if e.len() != a.len() {
        return Err(Error::DimensionMismatch {
            context: "MSE weights",
            expected: format!("{}", a.len()),
            actual: format!("{}", e.len()),
        });
    }
    e.iter()
        .zip(a)
        .enumerate()
        .map(|(k, (&ek, &ak))| {
            if ek > 0.0 {
                Ok(ak / ek)
            } else {
                Err(Error::Invariant(format!("MSE of user {k} is {ek}, must be positive")))
            }
        })
        .collect()
}

/// Receive scalars, weights and multipliers (original units).
#[derive(Clone, Debug)]
pub struct WmmseState {
    pub u: Vec<C64>,
    pub w: Vec<f64>,
    pub p: CMat,
    pub lambda: f64,
    pub mu: f64,
}

/// `Upsilon_hat = sum_k |u_k|^2 w_k gamma_k^2 v_k v_k^H`.
fn upsilon_hat(u: &[C64], w: &[f64], users: &Users) -> CMat {
    let coef: Vec<f64> = (0..users.num_users())
        .map(|k| u[k].norm_sqr() * w[k] * users.gain_power[k])
        .collect();
    users.weighted_outer(&coef)
}

/// `H_bar diag(w_k u_k^*)`.
fn rhs(u: &[C64], w: &[f64], users: &Users) -> CMat {
    let mut r = users.mean_channel();
    for k in 0..users.num_users() {
        let s = u[k].conj() * w[k];
        let col = r.column(k) * s;
        r.set_column(k, &col);
    }
    r
}

/// `P = (Upsilon_hat + lambda I + (mu / K_G) Upsilon_sg)^{-1} H_bar W U^H`
/// in original units.
pub fn precoder_from_multipliers(
    lambda: f64,
    mu: f64,
    u: &[C64],
    w: &[f64],
    problem: &RobustProblem,
) -> Result<CMat> {
    if !(lambda >= 0.0 && mu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "multipliers must be nonnegative, got ({lambda}, {mu})"
        )));
    }
    let users = &problem.users;
    let mut a = upsilon_hat(u, w, users);
    if mu > 0.0 {
        a += &problem.interference.matrix * c(mu / problem.k_g as f64, 0.0);
    }
    for i in 0..a.nrows() {
        a[(i, i)] += c(lambda, 0.0);
    }
    let a = hermitian_part(&a);
    let Some(ch) = a.clone().cholesky() else {
        return Err(Error::Singular(
            "precoder system is singular; use a positive lambda floor".into(),
        ));
    };
    Ok(ch.solve(&rhs(u, w, users)))
}

/// `2 dL/dP^*` of the weighted-MSE Lagrangian at `p` (original units).
pub fn lagrangian_gradient(
    p: &CMat,
    lambda: f64,
    mu: f64,
    u: &[C64],
    w: &[f64],
    problem: &RobustProblem,
) -> CMat {
    let users = &problem.users;
    let mut a = upsilon_hat(u, w, users);
    a += &problem.interference.matrix * c(mu / problem.k_g as f64, 0.0);
    let g = &a * p + p * c(lambda, 0.0) - rhs(u, w, users);
    g * c(2.0, 0.0)
}

/// Result of the multiplier search (normalized units inside the solvers).
#[derive(Clone, Debug)]
pub struct MultiplierSolution {
    pub lambda: f64,
    pub mu: f64,
    pub p: CMat,
    /// `sum_k w_k e_k` at the returned precoder.
    pub objective: f64,
    /// `Tr(P P^H)` relative to the power budget.
    pub power_ratio: f64,
    /// Interference relative to the threshold (0 when unconstrained).
    pub interference_ratio: f64,
    pub evaluations: usize,
    pub flags: Vec<String>,
}

/// Precoder family `X(lambda, mu) = (Ups_hat + lambda I + mu Ups)^{-1} R`
/// with constraint functionals `||X||^2 <= 1` and `Tr(X^H Ups X) <= bound`.
struct Family<'a> {
    ups_hat: CMat,
    r: CMat,
    ups: &'a CMat,
    bound: f64,
    floor: f64,
    evaluations: usize,
}

struct FamilyPoint {
    lambda: f64,
    x: CMat,
    power: f64,
    interference: f64,
}

impl<'a> Family<'a> {
    fn new(ups_hat: CMat, r: CMat, ups: &'a CMat, bound: f64) -> Self {
        let scale = crate::linalg::trace_re(&ups_hat).max(crate::linalg::trace_re(ups)) / ups_hat.nrows() as f64;
        Self {
            ups_hat,
            r,
            ups,
            bound,
            floor: 1e-12 * scale.max(1e-300),
            evaluations: 0,
        }
    }

    fn eigen(&self, mu: f64) -> HermitianEigen {
        if mu > 0.0 {
            HermitianEigen::new(&(&self.ups_hat + self.ups * c(mu, 0.0)))
        } else {
            HermitianEigen::new(&self.ups_hat)
        }
    }

    fn point(&self, eig: &HermitianEigen, z: &CMat, lambda: f64) -> FamilyPoint {
        let mut y = z.clone();
        for (i, &d) in eig.values.iter().enumerate() {
            y.row_mut(i).scale_mut(1.0 / (d.max(0.0) + lambda));
        }
        let x = &eig.vectors * y;
        let power = crate::linalg::power(&x);
        let interference = quad_trace(&x, self.ups);
        FamilyPoint {
            lambda,
            x,
            power,
            interference,
        }
    }

    /// Smallest `lambda >= floor` with `||X||^2 <= 1` for this `mu`
    /// (Newton on `1/||X|| - 1`, monotone from the left).
    fn at_mu(&mut self, mu: f64) -> FamilyPoint {
        self.evaluations += 1;
        let eig = self.eigen(mu);
        let z = eig.vectors.adjoint() * &self.r;
        let s: Vec<f64> = (0..z.nrows()).map(|i| z.row(i).norm_squared()).collect();
        let d: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
        let pw = |l: f64| -> (f64, f64) {
            let mut p = 0.0;
            let mut dp = 0.0;
            for (si, di) in s.iter().zip(&d) {
                let q = di + l;
                p += si / (q * q);
                dp += si / (q * q * q);
            }
            (p, dp)
        };
        let mut lambda = self.floor;
        let (p0, _) = pw(lambda);
        if p0 > 1.0 {
            for _ in 0..200 {
                let (p, dp) = pw(lambda);
                // phi = p^{-1/2} - 1, phi' = p^{-3/2} dp
                let phi = 1.0 / p.sqrt() - 1.0;
                let step = -phi * p * p.sqrt() / dp;
                let next = lambda + step;
                if !(next > lambda) || (next - lambda) <= 1e-15 * next {
                    lambda = next.max(lambda);
                    break;
                }
                lambda = next;
            }
        }
        self.point(&eig, &z, lambda)
    }
}

/// Exact multipliers for fixed `(u, w)` from the concave dual: for each `mu`
/// the power multiplier solves the secular equation, and the interference
/// residual is nonincreasing in `mu`, so `mu` is bracketed and refined by
/// Illinois regula falsi in `log mu`. Normalized units.
fn dual_multipliers(family: &mut Family, flags: &mut Vec<String>) -> (f64, FamilyPoint) {
    let base = family.at_mu(0.0);
    if family.bound.is_infinite() || base.interference <= family.bound {
        return (0.0, base);
    }
    let target = family.bound;
    // log-residual, positive when infeasible
    let resid = |fam: &mut Family, mu: f64| -> (f64, FamilyPoint) {
        let pt = fam.at_mu(mu);
        ((pt.interference / target).ln(), pt)
    };
    let mut hi = 1.0f64;
    let (mut r_hi, mut p_hi) = resid(family, hi);
    let mut lo;
    let mut r_lo;
    if r_hi > 0.0 {
        lo = hi;
        r_lo = r_hi;
        let mut n = 0;
        while r_hi > 0.0 {
            n += 1;
            if n > 400 {
                flags.push("interference multiplier bracket not found".into());
                return (hi, p_hi);
            }
            lo = hi;
            r_lo = r_hi;
            hi *= 4.0;
            (r_hi, p_hi) = resid(family, hi);
        }
    } else {
        lo = hi;
        r_lo = r_hi;
        let mut n = 0;
        while r_lo <= 0.0 {
            n += 1;
            if n > 400 {
                // the threshold is met for any positive mu in floating point
                return (hi, p_hi);
            }
            hi = lo;
            r_hi = r_lo;
            p_hi = family.at_mu(hi);
            lo *= 0.25;
            (r_lo, _) = resid(family, lo);
        }
    }
    let (mut t_lo, mut t_hi) = (lo.ln(), hi.ln());
    let mut side = 0i8;
    for _ in 0..200 {
        if r_hi > -1e-10 || (t_hi - t_lo) < 1e-14 * t_hi.abs().max(1.0) {
            break;
        }
        let t = t_hi - r_hi * (t_hi - t_lo) / (r_hi - r_lo);
        let t = if t > t_lo && t < t_hi { t } else { 0.5 * (t_lo + t_hi) };
        let (r, p) = resid(family, t.exp());
        if r > 0.0 {
            t_lo = t;
            r_lo = r;
            if side == -1 {
                r_hi *= 0.5;
            }
            side = -1;
        } else {
            t_hi = t;
            r_hi = r;
            p_hi = p;
            if side == 1 {
                r_lo *= 0.5;
            }
            side = 1;
        }
    }
    (t_hi.exp(), p_hi)
}

/// Rescales `x` homogeneously onto the feasible side of both constraints.
fn clamp_feasible(pt: &mut FamilyPoint, bound: f64) {
    let mut s: f64 = 1.0;
    if pt.power > 1.0 {
        s = s.min(1.0 / pt.power);
    }
    if pt.interference > bound {
        s = s.min(bound / pt.interference);
    }
    if s < 1.0 {
        pt.x *= c(s.sqrt(), 0.0);
        pt.power *= s;
        pt.interference *= s;
    }
}

fn weighted_mse(x: &CMat, u: &[C64], w: &[f64], users: &Users) -> f64 {
    wmmse_mse(x, u, users).iter().zip(w).map(|(e, w)| e * w).sum()
}

/// Normalized-unit multiplier search shared by the public wrapper and the
/// main loop.
pub(crate) fn solve_multipliers_normalized(
    u: &[C64],
    w: &[f64],
    users: &Users,
    ups: &CMat,
    bound: f64,
) -> (f64, f64, CMat, usize, Vec<String>) {
    let mut family = Family::new(upsilon_hat(u, w, users), rhs(u, w, users), ups, bound);
    let mut flags = Vec::new();
    let (mu, mut pt) = dual_multipliers(&mut family, &mut flags);
    clamp_feasible(&mut pt, bound);
    (pt.lambda, mu, pt.x, family.evaluations, flags)
}

fn normalized_context(problem: &RobustProblem, u: &[C64]) -> (crate::problem::Normalized, Vec<C64>) {
    let norm = problem.normalize();
    let u_n = u
        .iter()
        .zip(&problem.users.noise_power)
        .map(|(x, s)| x * s.sqrt())
        .collect();
    (norm, u_n)
}

fn solution_from(
    problem: &RobustProblem,
    norm: &crate::problem::Normalized,
    u: &[C64],
    w: &[f64],
    lambda_n: f64,
    mu_n: f64,
    x: &CMat,
    evaluations: usize,
    flags: Vec<String>,
) -> MultiplierSolution {
    let p = norm.restore(x);
    let interference_ratio = if problem.i_thr_w.is_finite() {
        problem.avg_interference(&p) / problem.i_thr_w
    } else {
        0.0
    };
    MultiplierSolution {
        lambda: lambda_n / problem.p_t_w,
        mu: if problem.i_thr_w.is_finite() { mu_n / problem.i_thr_w } else { 0.0 },
        objective: weighted_mse(&p, u, w, &problem.users),
        power_ratio: crate::linalg::power(&p) / problem.p_t_w,
        interference_ratio,
        p,
        evaluations,
        flags,
    }
}

/// Multipliers `(lambda, mu)` for fixed `(u, w)` (original units): the
/// precoder minimizing the weighted MSE over the power ball and the
/// interference ellipsoid, obtained through its dual.
pub fn solve_multipliers(u: &[C64], w: &[f64], problem: &RobustProblem) -> Result<MultiplierSolution> {
    problem.validate()?;
    let (norm, u_n) = normalized_context(problem, u);
    let (l, m, x, evals, flags) = solve_multipliers_normalized(&u_n, w, &norm.users, &norm.ups, norm.bound);
    Ok(solution_from(problem, &norm, u, w, l, m, &x, evals, flags))
}

/// Derivative-free alternative: 16 x 16 log grid followed by Nelder-Mead
/// on an exact-penalty objective. Kept as an independent route for
/// cross-checking the dual solver.
pub fn solve_multipliers_search(u: &[C64], w: &[f64], problem: &RobustProblem) -> Result<MultiplierSolution> {
    problem.validate()?;
    let (norm, u_n) = normalized_context(problem, &u);
    let users = &norm.users;
    let mut family = Family::new(upsilon_hat(&u_n, w, users), rhs(&u_n, w, users), &norm.ups, norm.bound);
    let scale = (crate::linalg::trace_re(&family.ups_hat) / users.num_antennas() as f64).max(1e-300);
    let ups_scale = (crate::linalg::trace_re(&norm.ups) / users.num_antennas() as f64).max(1e-300);
    let constrained = norm.bound.is_finite();
    let lo = [-8.0, -8.0];
    let hi = [4.0, 4.0];
    let mut evals = 0usize;
    let mut eval = |lm: [f64; 2]| -> (f64, CMat) {
        evals += 1;
        let lambda = scale * 10f64.powf(lm[0]);
        let mu = if constrained { ups_scale.recip() * scale * 10f64.powf(lm[1]) } else { 0.0 };
        let mut a = family.ups_hat.clone();
        if mu > 0.0 {
            a += family.ups * c(mu, 0.0);
        }
        for i in 0..a.nrows() {
            a[(i, i)] += c(lambda, 0.0);
        }
        let x = solve_hpd(&a, &family.r).unwrap_or_else(|_| CMat::zeros(a.nrows(), family.r.ncols()));
        let pw = crate::linalg::power(&x);
        let it = if constrained { quad_trace(&x, family.ups) / norm.bound } else { 0.0 };
        let obj = weighted_mse(&x, &u_n, w, users);
        let penalty = 1e3 * ((pw - 1.0).max(0.0) + (it - 1.0).max(0.0));
        (obj + penalty, x)
    };
    let mut best = (f64::INFINITY, [lo[0], lo[1]]);
    for i in 0..16 {
        for j in 0..16 {
            let lm = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / 15.0,
                lo[1] + (hi[1] - lo[1]) * j as f64 / 15.0,
            ];
            let (v, _) = eval(lm);
            // strict improvement keeps the lexicographically lowest tie
            if v < best.0 {
                best = (v, lm);
            }
        }
    }
    let nm = nelder_mead_2d(|lm| eval(lm).0, best.1, [[lo[0], hi[0]], [lo[1], hi[1]]], 2000);
    let (_, x) = eval(nm.x);
    family.evaluations = evals;
    let mut pt = FamilyPoint {
        lambda: scale * 10f64.powf(nm.x[0]),
        power: crate::linalg::power(&x),
        interference: quad_trace(&x, &norm.ups),
        x,
    };
    clamp_feasible(&mut pt, norm.bound);
    let mu_n = if constrained { ups_scale.recip() * scale * 10f64.powf(nm.x[1]) } else { 0.0 };
    let mut flags = Vec::new();
    if !nm.converged {
        flags.push("multiplier search budget exhausted".into());
    }
    Ok(solution_from(problem, &norm, u, w, pt.lambda, mu_n, &pt.x, evals, flags))
}

/// `sum_k (w_k e_k - a_k ln w_k)` at the optimal `(u, w)` for `x`; this is
/// `sum_k a_k (1 - ln a_k) - ln(2) R_lb(x)`.
fn wmmse_cost(x: &CMat, users: &Users) -> f64 {
    let u = wmmse_update_u(x, users);
    let e = wmmse_mse(x, &u, users);
    e.iter()
        .zip(&users.weight)
        .map(|(&ek, &a)| {
            let w = a / ek;
            w * ek - a * w.ln()
        })
        .sum()
}

/// Alternating `u`, `w` and closed-form precoder updates with the
/// interference constraint handled by its multiplier.
pub fn wweia(problem: &RobustProblem) -> Result<PrecoderResult> {
    wweia_with_state(problem).map(|(r, _)| r)
}

/// As [`wweia`], also returning the last `(u, w, lambda, mu)`.
pub fn wweia_with_state(problem: &RobustProblem) -> Result<(PrecoderResult, WmmseState)> {
    problem.validate()?;
    let norm = problem.normalize();
    let proj = projector(&norm)?;
    let users = &norm.users;
    let mut x = initial_point(problem, &norm, &proj)?;
    let mut cost = wmmse_cost(&x, users);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        objective: cost,
        avg_interference_w: problem.avg_interference(&norm.restore(&x)),
    }];
    let mut flags = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last = (vec![C64::new(0.0, 0.0); users.num_users()], users.weight.clone(), 0.0, 0.0);
    for n in 1..=problem.iter_max {
        iterations = n;
        let u = wmmse_update_u(&x, users);
        let e = wmmse_mse(&x, &u, users);
        let w = wmmse_update_w(&e, &users.weight)?;
        let (lambda, mu, x_new, _, f) = solve_multipliers_normalized(&u, &w, users, &norm.ups, norm.bound);
        flags.extend(f.into_iter().map(|s| format!("iteration {n}: {s}")));
        let new_cost = wmmse_cost(&x_new, users);
        if new_cost > cost + 1e-12 * cost.abs().max(1.0) {
            flags.push(format!("iteration {n}: step increased the weighted MSE and was rejected"));
            break;
        }
        let delta = cost - new_cost;
        x = x_new;
        cost = new_cost;
        last = (u, w, lambda, mu);
        let p = norm.restore(&x);
        trace.push(TraceEntry {
            iteration: n,
            objective: cost,
            avg_interference_w: problem.avg_interference(&p),
        });
        if delta.abs() < problem.tolerance && problem.is_feasible(&p, 1e-9) {
            converged = true;
            break;
        }
    }
    if !converged {
        flags.push(format!("not converged after {iterations} iterations"));
    }
    let p = norm.restore(&x);
    let (u_n, w, lambda_n, mu_n) = last;
    let u: Vec<C64> = u_n
        .iter()
        .zip(&problem.users.noise_power)
        .map(|(x, s)| x / s.sqrt())
        .collect();
    let lambda = lambda_n / problem.p_t_w;
    let mu = if problem.i_thr_w.is_finite() { mu_n / problem.i_thr_w } else { 0.0 };
    let result = PrecoderResult {
        p: p.clone(),
        beta: None,
        algorithm: Algorithm::Wweia,
        multipliers: Multipliers {
            lambda: Some(lambda),
            mu: Some(mu),
            varsigma: None,
        },
        trace,
        iterations,
        converged,
        flags,
    };
    Ok((result, WmmseState { u, w, p, lambda, mu }))
}

/// Weighted-MMSE baseline: the same iteration without the threshold.
pub fn wmmse_baseline(problem: &RobustProblem) -> Result<PrecoderResult> {
    let mut r = wweia(&problem.with_threshold(f64::INFINITY))?;
    r.algorithm = Algorithm::Wmmse;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rician_mean_gain, upa_steering};
    use crate::interference::{InterferenceModel, Provenance};
    use crate::linalg::{cexp_i, CVec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_problem(rng: &mut ChaCha8Rng, k: usize, i_thr: f64) -> RobustProblem {
        let mut steering = CMat::zeros(4, k);
        for j in 0..k {
            let v = upa_steering(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9), 2, 2, 0.5).unwrap();
            steering.set_column(j, &v);
        }
        let gains: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let users = Users {
            steering,
            gain_power: gains.iter().map(|g| g * g).collect(),
            mean_gain: gains
                .iter()
                .map(|&g| rician_mean_gain(g, rng.random_range(1.0..20.0)) * cexp_i(rng.random_range(0.0..6.0)))
                .collect(),
            noise_power: vec![rng.random_range(0.05..0.5); k],
            weight: (0..k).map(|_| rng.random_range(0.5..1.5)).collect(),
        };
        let vg = upa_steering(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9), 2, 2, 0.5).unwrap();
        let vh = upa_steering(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9), 2, 2, 0.5).unwrap();
        let ups = hermitian_part(&(&vg * vg.adjoint() + &vh * vh.adjoint() * c(0.3, 0.0)));
        let model = InterferenceModel {
            matrix: ups,
            provenance: Provenance::PositionAided,
            fingerprint: String::new(),
            total_users: 2,
        };
        RobustProblem::new(users, model, i_thr, 1.0).unwrap()
    }

    #[test]
    fn u_and_mse_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let prob = random_problem(&mut rng, 2, 0.1);
        let zero = CMat::zeros(4, 2);
        let u = wmmse_update_u(&zero, &prob.users);
        assert!(u.iter().all(|x| *x == c(0.0, 0.0)));
        assert_eq!(wmmse_mse(&zero, &u, &prob.users), vec![1.0, 1.0]);
        assert_eq!(wmmse_update_w(&[1.0, 0.5], &[1.0, 1.0]).unwrap(), vec![1.0, 2.0]);
        assert!(wmmse_update_w(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn optimal_u_mse_equals_simplified_form_and_beats_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let prob = random_problem(&mut rng, 3, 0.1);
            let p = CMat::from_fn(4, 3, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let users = &prob.users;
            let u = wmmse_update_u(&p, users);
            let e = wmmse_mse(&p, &u, users);
            let cross = users.cross(&p);
            let d = users.total_received(&cross);
            let n = users.useful(&cross);
            for k in 0..3 {
                assert!((e[k] - (1.0 - n[k] / d[k])).abs() < 1e-12);
                assert!(e[k] > 0.0 && e[k] <= 1.0);
            }
            for _ in 0..100 {
                let up: Vec<C64> = u
                    .iter()
                    .map(|x| x + c(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)))
                    .collect();
                let ep = wmmse_mse(&p, &up, users);
                for k in 0..3 {
                    assert!(ep[k] >= e[k] - 1e-14);
                }
            }
        }
    }

    #[test]
    fn mse_decreases_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let prob = random_problem(&mut rng, 2, 0.1);
        let p = CMat::from_fn(4, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut quiet = prob.users.clone();
        quiet.noise_power.iter_mut().for_each(|s| *s *= 0.5);
        let e1 = wmmse_mse(&p, &wmmse_update_u(&p, &prob.users), &prob.users);
        let e2 = wmmse_mse(&p, &wmmse_update_u(&p, &quiet), &quiet);
        assert!(e2.iter().zip(&e1).all(|(a, b)| a < b));
    }

    #[test]
    fn precoder_zeroes_lagrangian_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let prob = random_problem(&mut rng, 3, 0.1);
            let p = CMat::from_fn(4, 3, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let u = wmmse_update_u(&p, &prob.users);
            let w = wmmse_update_w(&wmmse_mse(&p, &u, &prob.users), &prob.users.weight).unwrap();
            let (l, m) = (rng.random_range(0.01..1.0), rng.random_range(0.0..2.0));
            let x = precoder_from_multipliers(l, m, &u, &w, &prob).unwrap();
            let g = lagrangian_gradient(&x, l, m, &u, &w, &prob);
            assert!(g.norm() < 1e-8 * rhs(&u, &w, &prob.users).norm());
            // finite-difference oracle on the Lagrangian itself
            let lag = |x: &CMat| -> f64 {
                let e = wmmse_mse(x, &u, &prob.users);
                e.iter().zip(&w).map(|(e, w)| e * w).sum::<f64>()
                    + l * crate::linalg::power(x)
                    + m / prob.k_g as f64 * quad_trace(x, &prob.interference.matrix)
            };
            let fd = crate::numerics::finite_difference_gradient(lag, &x, 1e-6);
            assert!(fd.norm() < 1e-6 * rhs(&u, &w, &prob.users).norm().max(1.0));
        }
    }

    #[test]
    fn single_user_zero_mu_is_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let prob = random_problem(&mut rng, 1, f64::INFINITY);
        let p = CMat::from_fn(4, 1, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let u = wmmse_update_u(&p, &prob.users);
        let w = vec![1.3];
        let x = precoder_from_multipliers(0.2, 0.0, &u, &w, &prob).unwrap();
        let v: CVec = prob.users.steering.column(0).into();
        let cos = v.dotc(&x.column(0).into_owned()).norm() / x.norm();
        assert!(cos > 1.0 - 1e-12);
    }

    #[test]
    fn slack_interference_gives_zero_mu_and_full_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let prob = random_problem(&mut rng, 2, 1e6);
        let p = CMat::from_fn(4, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let u = wmmse_update_u(&p, &prob.users);
        let w = wmmse_update_w(&wmmse_mse(&p, &u, &prob.users), &prob.users.weight).unwrap();
        let s = solve_multipliers(&u, &w, &prob).unwrap();
        assert!(s.mu < 1e-8);
        assert!((s.power_ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dual_and_search_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for i_thr in [1e-3, 1e-2, 0.1, f64::INFINITY] {
            let prob = random_problem(&mut rng, 2, i_thr);
            let p = CMat::from_fn(4, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let u = wmmse_update_u(&p, &prob.users);
            let w = wmmse_update_w(&wmmse_mse(&p, &u, &prob.users), &prob.users.weight).unwrap();
            let a = solve_multipliers(&u, &w, &prob).unwrap();
            let b = solve_multipliers_search(&u, &w, &prob).unwrap();
            assert!(a.power_ratio <= 1.0 + 1e-6 && a.interference_ratio <= 1.0 + 1e-6);
            // the dual route is the constrained optimum: never worse than the search
            assert!(a.objective <= b.objective + 1e-9 * b.objective.abs(), "{} {}", a.objective, b.objective);
            // the simplex search stalls on the penalty kink but lands close
            assert!((a.objective - b.objective).abs() <= 1e-2 * a.objective.abs());
        }
    }
}
