//! Conventional linear precoders on statistical CSI, and the result type
//! shared with the interference-aware designs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, power, solve_hpd, CMat, HermitianEigen};
use crate::problem::{rotate_columns, Users};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Mrt,
    Zf,
    Mmse,
    Wmmse,
    Wqtia,
    Wweia,
    Mmseia,
    WqtiaPa,
    WweiaPa,
    MmseiaPa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Mrt,
        Algorithm::Zf,
        Algorithm::Mmse,
        Algorithm::Wmmse,
        Algorithm::Wqtia,
        Algorithm::Wweia,
        Algorithm::Mmseia,
        Algorithm::WqtiaPa,
        Algorithm::WweiaPa,
        Algorithm::MmseiaPa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mrt => "MRT",
            Algorithm::Zf => "ZF",
            Algorithm::Mmse => "MMSE",
            Algorithm::Wmmse => "WMMSE",
            Algorithm::Wqtia => "WQTIA",
            Algorithm::Wweia => "WWEIA",
            Algorithm::Mmseia => "MMSEIA",
            Algorithm::WqtiaPa => "WQTIA-PA",
            Algorithm::WweiaPa => "WWEIA-PA",
            Algorithm::MmseiaPa => "MMSEIA-PA",
        }
    }

    /// Designs that enforce the interference threshold.
    pub fn is_interference_aware(self) -> bool {
        !matches!(self, Algorithm::Mrt | Algorithm::Zf | Algorithm::Mmse | Algorithm::Wmmse)
    }

    /// Variants that design against the base-station approximation.
    pub fn is_position_aided(self) -> bool {
        matches!(self, Algorithm::WqtiaPa | Algorithm::WweiaPa | Algorithm::MmseiaPa)
    }

    /// The integral-model algorithm a PA variant is derived from.
    pub fn parent(self) -> Algorithm {
        match self {
            Algorithm::WqtiaPa => Algorithm::Wqtia,
            Algorithm::WweiaPa => Algorithm::Wweia,
            Algorithm::MmseiaPa => Algorithm::Mmseia,
            a => a,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|ch| *ch != '-' && *ch != '_')
            .collect::<String>()
            .to_ascii_uppercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().replace('-', "") == norm)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub varsigma: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub avg_interference_w: f64,
}

#[derive(Clone, Debug)]
pub struct PrecoderResult {
    pub p: CMat,
    pub beta: Option<f64>,
    pub algorithm: Algorithm,
    pub multipliers: Multipliers,
    pub trace: Vec<TraceEntry>,
    pub iterations: usize,
    pub converged: bool,
    /// Non-fatal warnings (iteration cap, line-search failure, ...).
    pub flags: Vec<String>,
}

impl PrecoderResult {
    pub(crate) fn closed_form(p: CMat, beta: Option<f64>, algorithm: Algorithm) -> Self {
        Self {
            p,
            beta,
            algorithm,
            multipliers: Multipliers::default(),
            trace: Vec::new(),
            iterations: 0,
            converged: true,
            flags: Vec::new(),
        }
    }
}

fn check_budget(p_t: f64) -> Result<()> {
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid power budget {p_t}")));
    }
    Ok(())
}

/// Scales `d` to `Tr(P P^H) = P_T`; returns `(P, c)`.
fn normalize_power(d: CMat, p_t: f64) -> Result<(CMat, f64)> {
    let pw = power(&d);
    if !(pw > 0.0 && pw.is_finite()) {
        return Err(Error::Singular(format!("precoder direction has power {pw}")));
    }
    let s = (p_t / pw).sqrt();
    Ok((d * c(s, 0.0), s))
}

/// `P = c H_bar` at full power.
pub fn mrt(users: &Users, p_t: f64) -> Result<PrecoderResult> {
    check_budget(p_t)?;
    let h = users.mean_channel();
    if h.iter().all(|z| *z == c(0.0, 0.0)) {
        return Err(Error::InvalidParameter("mean channel is zero".into()));
    }
    let (p, s) = normalize_power(h, p_t)?;
    Ok(PrecoderResult::closed_form(p, Some(s), Algorithm::Mrt))
}

/// `P = c H_bar (H_bar^H H_bar)^{-1}` at full power.
pub fn zf(users: &Users, p_t: f64) -> Result<PrecoderResult> {
    check_budget(p_t)?;
    let h = users.mean_channel();
    let k = h.ncols();
    let gram = h.adjoint() * &h;
    let diag: Vec<f64> = (0..k).map(|i| gram[(i, i)].re).collect();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::RankDeficient { user_a: i, user_b: i });
    }
    let corr = CMat::from_fn(k, k, |i, j| gram[(i, j)] / (diag[i] * diag[j]).sqrt());
    if k > h.nrows() || HermitianEigen::new(&corr).min() < 1e-10 {
        let (mut a, mut b, mut best) = (0, 1.min(k - 1), -1.0);
        for i in 0..k {
            for j in i + 1..k {
                let v = corr[(i, j)].norm();
                if v > best {
                    (a, b, best) = (i, j, v);
                }
            }
        }
        return Err(Error::RankDeficient { user_a: a, user_b: b });
    }
    let d = &h * solve_hpd(&gram, &CMat::identity(k, k))?;
    let (p, s) = normalize_power(d, p_t)?;
    Ok(PrecoderResult::closed_form(p, Some(s), Algorithm::Zf))
}

/// `beta (Upsilon_ss + varsigma Upsilon + (K_S sigma^2 / P_T) I)^{-1} H_bar`
/// with `beta` setting full power. `extra = None` is the plain MMSE.
/// Computed for canonical mean-gain phases and rotated back, so the result
/// is column-wise equivariant in the mean-gain phases.
pub(crate) fn mmse_closed_form(
    users: &Users,
    p_t: f64,
    extra: Option<(&CMat, f64)>,
) -> Result<(CMat, f64)> {
    check_budget(p_t)?;
    let (canon, rot) = users.canonical();
    let m = canon.num_antennas();
    let k = canon.num_users();
    let zeta = k as f64 * canon.common_noise_power() / p_t;
    let mut a = canon.upsilon_ss();
    for i in 0..m {
        a[(i, i)] += c(zeta, 0.0);
    }
    if let Some((ups, varsigma)) = extra {
        if !(varsigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("penalty factor must be nonnegative, got {varsigma}")));
        }
        if varsigma > 0.0 {
            a += ups * c(varsigma, 0.0);
        }
    }
    let d = solve_hpd(&a, &canon.mean_channel())?;
    let (p, beta) = normalize_power(d, p_t)?;
    Ok((rotate_columns(&p, &rot), beta))
}

/// Regularized (MMSE) precoder on statistical CSI.
pub fn rzf_mmse(users: &Users, p_t: f64) -> Result<PrecoderResult> {
    let (p, beta) = mmse_closed_form(users, p_t, None)?;
    let mut r = PrecoderResult::closed_form(p, Some(beta), Algorithm::Mmse);
    r.multipliers.varsigma = Some(0.0);
    Ok(r)
}
