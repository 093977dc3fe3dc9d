//! Interference-aware designs: quadratic-transform ascent (WQTIA),
//! weighted-MMSE with a Lagrangian closed form (WWEIA) and the penalized
//! MMSE closed form (MMSEIA), plus their position-aided variants.
//!
//! The iterative designs run in normalized units (unit noise, unit power
//! budget, unit interference bound) on users whose mean gains are rotated to
//! a common phase. Rates and interference do not depend on those phases, and
//! the optimizers are column-equivariant in them, so the returned precoder is
//! rotated back at the end.

pub mod mcqt;
pub mod mmse_ia;
pub mod wmmse;

pub use mcqt::{mcqt_gradient, mcqt_objective, mcqt_update_xi, solve_wsr_subproblem, wqtia, SubproblemOutcome};
pub use mmse_ia::{mmse_ia, mmse_ia_closed_form, mmse_objective_in_zeta};
pub use wmmse::{
    lagrangian_gradient, precoder_from_multipliers, solve_multipliers, solve_multipliers_search, wmmse_baseline,
    wmmse_mse, wmmse_update_u, wmmse_update_w, wweia, wweia_with_state, MultiplierSolution, WmmseState,
};

use crate::baseline::{mmse_closed_form, mrt, rzf_mmse, zf, Algorithm, PrecoderResult};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::numerics::IntersectionProjector;
use crate::problem::{Normalized, RobustProblem};

/// Runs `algorithm` on `problem`. Position-aided variants expect the
/// problem to carry the base-station approximation; baselines ignore the
/// threshold.
pub fn run_algorithm(algorithm: Algorithm, problem: &RobustProblem) -> Result<PrecoderResult> {
    if algorithm.is_position_aided() && !problem.interference.is_position_aided() {
        return Err(Error::InvalidParameter(format!(
            "{algorithm} needs the position-aided interference model"
        )));
    }
    let mut out = match algorithm.parent() {
        Algorithm::Mrt => mrt(&problem.users, problem.p_t_w),
        Algorithm::Zf => zf(&problem.users, problem.p_t_w),
        Algorithm::Mmse => rzf_mmse(&problem.users, problem.p_t_w),
        Algorithm::Wmmse => wmmse_baseline(problem),
        Algorithm::Wqtia => wqtia(problem),
        Algorithm::Wweia => wweia(problem),
        Algorithm::Mmseia => mmse_ia(problem),
        _ => unreachable!("parent() maps PA variants"),
    }?;
    out.algorithm = algorithm;
    Ok(out)
}

/// Projector for the normalized constraint set.
pub(crate) fn projector(norm: &Normalized) -> Result<IntersectionProjector> {
    IntersectionProjector::new(&norm.ups, 1.0, norm.bound)
}

/// MMSE start (no penalty) in normalized canonical units, projected onto the
/// constraint set when it violates the threshold.
pub(crate) fn initial_point(problem: &RobustProblem, norm: &Normalized, proj: &IntersectionProjector) -> Result<CMat> {
    let (p, _) = mmse_closed_form(&norm.canonical, problem.p_t_w, None)?;
    let x = p * c(1.0 / norm.amplitude, 0.0);
    Ok(proj.project(&x))
}
