//! User sets, the constrained beamforming problem and its normalized form.

use std::f64::consts::{FRAC_PI_4, LN_2};

use crate::error::{dims, Error, Result};
use crate::geometry::SatUserStats;
use crate::interference::InterferenceModel;
use crate::linalg::{c, cexp_i, quad_trace, CMat, C64};

/// Column-stacked statistical CSI of the served users.
#[derive(Clone, Debug, PartialEq)]
pub struct Users {
    /// `M_S x K_S`, column `k` is `v_k`.
    pub steering: CMat,
    pub gain_power: Vec<f64>,
    pub mean_gain: Vec<C64>,
    pub noise_power: Vec<f64>,
    pub weight: Vec<f64>,
}

impl Users {
    pub fn from_stats(stats: &[SatUserStats]) -> Result<Self> {
        let first = stats
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty user list".into()))?;
        let m = first.steering.len();
        let mut steering = CMat::zeros(m, stats.len());
        for (k, s) in stats.iter().enumerate() {
            if s.steering.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "user steering vectors",
                    expected: dims(m, 1),
                    actual: dims(s.steering.len(), 1),
                });
            }
            if !(s.noise_power_w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "user {k} has non-positive noise power {}",
                    s.noise_power_w
                )));
            }
            if s.mean_gain.norm_sqr() > s.gain_power * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "user {k}: |mean gain|^2 exceeds gain power"
                )));
            }
            steering.set_column(k, &s.steering);
        }
        Ok(Self {
            steering,
            gain_power: stats.iter().map(|s| s.gain_power).collect(),
            mean_gain: stats.iter().map(|s| s.mean_gain).collect(),
            noise_power: stats.iter().map(|s| s.noise_power_w).collect(),
            weight: stats.iter().map(|s| s.weight).collect(),
        })
    }

    pub fn num_users(&self) -> usize {
        self.steering.ncols()
    }

    pub fn num_antennas(&self) -> usize {
        self.steering.nrows()
    }

    /// `H_bar`, column `k` is `g_bar_k v_k`.
    pub fn mean_channel(&self) -> CMat {
        let mut h = self.steering.clone();
        for (k, g) in self.mean_gain.iter().enumerate() {
            let col = h.column(k) * *g;
            h.set_column(k, &col);
        }
        h
    }

    /// `Upsilon_ss = sum_k gamma_k^2 v_k v_k^H`.
    pub fn upsilon_ss(&self) -> CMat {
        self.weighted_outer(&self.gain_power)
    }

    /// `sum_k c_k v_k v_k^H`, exactly Hermitian.
    pub fn weighted_outer(&self, coef: &[f64]) -> CMat {
        let mut scaled = self.steering.clone();
        for (k, &ck) in coef.iter().enumerate() {
            scaled.column_mut(k).scale_mut(ck);
        }
        crate::linalg::hermitian_part(&(scaled * self.steering.adjoint()))
    }

    /// `C = V^H P`, `C[k, i] = v_k^H p_i`.
    pub fn cross(&self, p: &CMat) -> CMat {
        self.steering.adjoint() * p
    }

    /// `D_k = sum_i gamma_k^2 |v_k^H p_i|^2 + sigma_k^2`.
    pub fn total_received(&self, cross: &CMat) -> Vec<f64> {
        (0..self.num_users())
            .map(|k| {
                let s: f64 = cross.row(k).iter().map(|z| z.norm_sqr()).sum();
                self.gain_power[k] * s + self.noise_power[k]
            })
            .collect()
    }

    /// Useful mean power `|h_bar_k^H p_k|^2`.
    pub fn useful(&self, cross: &CMat) -> Vec<f64> {
        (0..self.num_users())
            .map(|k| self.mean_gain[k].norm_sqr() * cross[(k, k)].norm_sqr())
            .collect()
    }

    /// Per-user lower-bound SINR `|h_bar^H p_k|^2 / (D_k - |h_bar^H p_k|^2)`.
    pub fn lower_bound_sinr(&self, p: &CMat) -> Vec<f64> {
        let cross = self.cross(p);
        let d = self.total_received(&cross);
        let n = self.useful(&cross);
        d.iter().zip(&n).map(|(&dk, &nk)| nk / (dk - nk)).collect()
    }

    /// `sum_k a_k log2(1 + SINR_k^lb)`.
    pub fn lower_bound_rate(&self, p: &CMat) -> f64 {
        self.lower_bound_sinr(p)
            .iter()
            .zip(&self.weight)
            .map(|(s, a)| a * s.ln_1p() / LN_2)
            .sum()
    }

    /// Same users with SINR-preserving scaling: gains multiplied by
    /// `P_T / sigma_k^2`, unit noise. A precoder `X` with `||X||^2 <= 1`
    /// here corresponds to `sqrt(P_T) X` in the original units.
    pub fn normalized(&self, p_t: f64) -> Self {
        let s: Vec<f64> = self.noise_power.iter().map(|n| p_t / n).collect();
        Self {
            steering: self.steering.clone(),
            gain_power: self.gain_power.iter().zip(&s).map(|(g, s)| g * s).collect(),
            mean_gain: self.mean_gain.iter().zip(&s).map(|(g, s)| g * s.sqrt()).collect(),
            noise_power: vec![1.0; self.num_users()],
            weight: self.weight.clone(),
        }
    }

    /// Users with every mean gain rotated to phase pi/4, and the rotations
    /// `exp(j (arg g_bar_k - pi/4))` that map a precoder for the canonical
    /// users back to one for `self` (column-wise multiplication).
    pub fn canonical(&self) -> (Self, Vec<C64>) {
        let mut out = self.clone();
        let mut rot = Vec::with_capacity(self.num_users());
        for (k, g) in self.mean_gain.iter().enumerate() {
            let mag = g.norm();
            if mag == 0.0 {
                rot.push(c(1.0, 0.0));
                continue;
            }
            let psi = g.arg() - FRAC_PI_4;
            if psi == 0.0 {
                rot.push(c(1.0, 0.0));
            } else {
                rot.push(cexp_i(psi));
                out.mean_gain[k] = cexp_i(FRAC_PI_4) * mag;
            }
        }
        (out, rot)
    }

    /// Common noise power used by the MMSE closed forms (mean over users).
    pub fn common_noise_power(&self) -> f64 {
        self.noise_power.iter().sum::<f64>() / self.num_users() as f64
    }
}

/// Multiplies column `k` of `p` by `rot[k]`.
pub fn rotate_columns(p: &CMat, rot: &[C64]) -> CMat {
    let mut out = p.clone();
    for (k, r) in rot.iter().enumerate() {
        if *r != c(1.0, 0.0) {
            let col = out.column(k) * *r;
            out.set_column(k, &col);
        }
    }
    out
}

/// The constrained weighted-sum-rate problem.
#[derive(Clone, Debug)]
pub struct RobustProblem {
    pub users: Users,
    pub interference: InterferenceModel,
    /// Per-terrestrial-user average interference threshold; `INFINITY`
    /// removes the constraint.
    pub i_thr_w: f64,
    pub p_t_w: f64,
    pub k_g: usize,
    pub tolerance: f64,
    pub iter_max: usize,
}

impl RobustProblem {
    pub fn new(users: Users, interference: InterferenceModel, i_thr_w: f64, p_t_w: f64) -> Result<Self> {
        let k_g = interference.total_users;
        let p = Self {
            users,
            interference,
            i_thr_w,
            p_t_w,
            k_g,
            tolerance: 1e-4,
            iter_max: 100,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.users.num_antennas();
        if self.interference.matrix.nrows() != m || self.interference.matrix.ncols() != m {
            return Err(Error::DimensionMismatch {
                context: "interference covariance vs array size",
                expected: dims(m, m),
                actual: dims(self.interference.matrix.nrows(), self.interference.matrix.ncols()),
            });
        }
        if !(self.i_thr_w > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interference threshold must be positive, got {}",
                self.i_thr_w
            )));
        }
        if !(self.p_t_w > 0.0 && self.p_t_w.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid power budget {}", self.p_t_w)));
        }
        if self.k_g == 0 {
            return Err(Error::InvalidParameter("K_G must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) || self.iter_max == 0 {
            return Err(Error::InvalidParameter("tolerance and iter_max must be positive".into()));
        }
        Ok(())
    }

    pub fn with_threshold(&self, i_thr_w: f64) -> Self {
        Self {
            i_thr_w,
            ..self.clone()
        }
    }

    pub fn avg_interference(&self, p: &CMat) -> f64 {
        quad_trace(p, &self.interference.matrix).max(0.0) / self.k_g as f64
    }

    pub fn is_feasible(&self, p: &CMat, rel_tol: f64) -> bool {
        crate::linalg::power(p) <= self.p_t_w * (1.0 + rel_tol)
            && self.avg_interference(p) <= self.i_thr_w * (1.0 + rel_tol)
    }

    pub(crate) fn normalize(&self) -> Normalized {
        let (canon, rotations) = self.users.canonical();
        let users = canon.normalized(self.p_t_w);
        let (ups, bound) = if self.i_thr_w.is_infinite() {
            (CMat::zeros(self.users.num_antennas(), self.users.num_antennas()), f64::INFINITY)
        } else {
            let s = self.p_t_w / (self.k_g as f64 * self.i_thr_w);
            (&self.interference.matrix * c(s, 0.0), 1.0)
        };
        Normalized {
            users,
            canonical: canon,
            rotations,
            ups,
            bound,
            amplitude: self.p_t_w.sqrt(),
        }
    }
}

/// Problem in normalized units: unit noise, `||X||^2 <= 1`,
/// `Tr(X^H ups X) <= bound`, canonical mean-gain phases.
#[derive(Clone, Debug)]
pub(crate) struct Normalized {
    pub users: Users,
    /// Canonical users in original units.
    pub canonical: Users,
    pub rotations: Vec<C64>,
    pub ups: CMat,
    pub bound: f64,
    pub amplitude: f64,
}

impl Normalized {
    /// Original-units precoder for the caller's users.
    pub fn restore(&self, x: &CMat) -> CMat {
        rotate_columns(&(x * c(self.amplitude, 0.0)), &self.rotations)
    }

    /// Normalized precoder for canonical users from an original-units one
    /// for canonical users.
    pub fn from_canonical_original(&self, p: &CMat) -> CMat {
        p * c(1.0 / self.amplitude, 0.0)
    }
}
