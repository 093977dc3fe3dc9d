//! Penalized MMSE closed form with the penalty factor tuned by bisection.

use crate::baseline::{mmse_closed_form, Algorithm, Multipliers, PrecoderResult, TraceEntry};
use crate::error::{Error, Result};
use crate::linalg::{c, solve_hpd, trace_re, CMat};
use crate::numerics::{bisect_monotone, BisectionSpec};
use crate::problem::RobustProblem;
use crate::units::linear_to_db;

/// `beta (Upsilon_ss + varsigma Upsilon_sg + (K_S sigma^2 / P_T) I)^{-1} H_bar`
/// at full power; returns `(P, beta)`.
pub fn mmse_ia_closed_form(varsigma: f64, problem: &RobustProblem) -> Result<(CMat, f64)> {
    if !(varsigma >= 0.0) || varsigma.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "penalty factor must be finite and nonnegative, got {varsigma}"
        )));
    }
    let extra = (varsigma > 0.0).then_some((&problem.interference.matrix, varsigma));
    mmse_closed_form(&problem.users, problem.p_t_w, extra)
}

/// MSE-type objective of the closed form as a function of the regularizer
/// `zeta` for fixed `varsigma`:
/// `Tr(A^-1 B A^-1 H H^H) - 2 Tr(A^-1 H H^H) + K_S + (K_S sigma^2 / P_T) Tr(A^-2 H H^H)`
/// with `B = Upsilon_ss + varsigma Upsilon_sg` and `A = B + zeta I`.
/// Stationary at `zeta = K_S sigma^2 / P_T`.
pub fn mmse_objective_in_zeta(zeta: f64, varsigma: f64, problem: &RobustProblem) -> Result<f64> {
    let users = &problem.users;
    let m = users.num_antennas();
    let k = users.num_users() as f64;
    let reg = k * users.common_noise_power() / problem.p_t_w;
    let mut b = users.upsilon_ss();
    if varsigma > 0.0 {
        b += &problem.interference.matrix * c(varsigma, 0.0);
    }
    let mut a = b.clone();
    for i in 0..m {
        a[(i, i)] += c(zeta, 0.0);
    }
    let h = users.mean_channel();
    let ah = solve_hpd(&a, &h)?; // A^-1 H
    let hh_a = ah.adjoint(); // H^H A^-1
    let t1 = trace_re(&(&hh_a * &b * &ah));
    let t2 = trace_re(&(h.adjoint() * &ah));
    let t3 = ah.norm_squared();
    Ok(t1 - 2.0 * t2 + k + reg * t3)
}

/// Closed form with the smallest penalty (to 0.01 dB) meeting the threshold.
pub fn mmse_ia(problem: &RobustProblem) -> Result<PrecoderResult> {
    problem.validate()?;
    let mut trace = Vec::new();
    let push = |trace: &mut Vec<TraceEntry>, p: &CMat| {
        trace.push(TraceEntry {
            iteration: trace.len(),
            objective: problem.users.lower_bound_rate(p),
            avg_interference_w: problem.avg_interference(p),
        })
    };
    let finish = |p: CMat, beta: f64, varsigma: f64, trace: Vec<TraceEntry>, converged: bool, flags: Vec<String>| {
        PrecoderResult {
            p,
            beta: Some(beta),
            algorithm: Algorithm::Mmseia,
            multipliers: Multipliers {
                varsigma: Some(varsigma),
                ..Default::default()
            },
            iterations: trace.len().saturating_sub(1),
            trace,
            converged,
            flags,
        }
    };
    let (p0, b0) = mmse_ia_closed_form(0.0, problem)?;
    push(&mut trace, &p0);
    if problem.i_thr_w.is_infinite() || problem.avg_interference(&p0) <= problem.i_thr_w {
        return Ok(finish(p0, b0, 0.0, trace, true, vec![]));
    }
    // natural scale of the penalty: sigma^2 / (K_G I_thr)
    let scale = problem.users.common_noise_power() / (problem.k_g as f64 * problem.i_thr_w);
    let thr_db = linear_to_db(problem.i_thr_w);
    let i_db = |s: f64| -> Result<f64> {
        let (p, _) = mmse_ia_closed_form(s * scale, problem)?;
        Ok(linear_to_db(problem.avg_interference(&p)))
    };
    let mut flags = Vec::new();
    let mut hi = 1.0f64;
    let mut lo;
    if i_db(hi)? > thr_db {
        let mut n = 0;
        loop {
            lo = hi;
            hi *= 2.0;
            n += 1;
            if i_db(hi)? <= thr_db {
                break;
            }
            if n >= 60 {
                flags.push("penalty bracket not found after 60 doublings".into());
                let (p, b) = mmse_ia_closed_form(hi * scale, problem)?;
                push(&mut trace, &p);
                return Ok(finish(p, b, hi * scale, trace, false, flags));
            }
        }
    } else {
        lo = hi;
        let mut n = 0;
        while i_db(lo)? <= thr_db {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n >= 60 {
                // feasible for any representable positive penalty
                let (p, b) = mmse_ia_closed_form(hi * scale, problem)?;
                push(&mut trace, &p);
                return Ok(finish(p, b, hi * scale, trace, true, flags));
            }
        }
    }
    let mut err = None;
    let res = bisect_monotone(
        |t| match i_db(t.exp()) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        BisectionSpec {
            lo: lo.ln(),
            hi: hi.ln(),
            target: thr_db - 0.005,
            tol: 0.005,
            max_iter: 200,
        },
    );
    if let Some(e) = err {
        return Err(e);
    }
    let res = res?;
    let t = if (res.value - (thr_db - 0.005)).abs() <= 0.005 { res.x } else { res.hi };
    let varsigma = t.exp() * scale;
    let (p, b) = mmse_ia_closed_form(varsigma, problem)?;
    push(&mut trace, &p);
    let ok = problem.avg_interference(&p) <= problem.i_thr_w;
    if !ok {
        flags.push("bisection ended on the infeasible side".into());
    }
    Ok(finish(p, b, varsigma, trace, ok, flags))
}
