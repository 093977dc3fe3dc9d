//! Rate and interference metrics of a fixed precoder.

use std::f64::consts::{FRAC_PI_4, LN_2};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{upa_steering, SystemConfig};
use crate::linalg::{c, cexp_i, CMat, C64};
use crate::problem::Users;
use crate::units::linear_to_db;

/// One gain draw with the given second moment and mean; the scattered part
/// is rotated together with the mean phase.
pub fn sample_gain<R: Rng + ?Sized>(gain_power: f64, mean: C64, rng: &mut R) -> C64 {
    let var = (gain_power - mean.norm_sqr()).max(0.0);
    let std = (0.5 * var).sqrt();
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let scatter = c(std * a, std * b);
    if mean.norm() > 0.0 {
        (c(mean.norm(), 0.0) * cexp_i(FRAC_PI_4) + scatter) * cexp_i(mean.arg() - FRAC_PI_4)
    } else {
        scatter
    }
}

/// Weighted sum rate for channel gains `|g_k|^2` given `C = V^H P`.
fn rate_for_draw(cross: &CMat, g2: &[f64], users: &Users) -> f64 {
    (0..users.num_users())
        .map(|k| {
            let total: f64 = cross.row(k).iter().map(|z| z.norm_sqr()).sum();
            let own = cross[(k, k)].norm_sqr();
            let sinr = g2[k] * own / (g2[k] * (total - own) + users.noise_power[k]);
            users.weight[k] * sinr.ln_1p() / LN_2
        })
        .sum()
}

/// Monte Carlo estimate of `E{ sum_k a_k log2(1 + SINR_k) }`: `(mean, stderr)`.
pub fn ergodic_sum_rate<R: Rng + ?Sized>(p: &CMat, users: &Users, n_samples: usize, rng: &mut R) -> Result<(f64, f64)> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {n_samples}")));
    }
    let cross = users.cross(p);
    let k_s = users.num_users();
    let mut g2 = vec![0.0; k_s];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    // Welford-free two-moment accumulation is fine at these magnitudes;
    // shift by the first sample to avoid cancellation
    let mut shift = None;
    for _ in 0..n_samples {
        for (k, slot) in g2.iter_mut().enumerate() {
            *slot = sample_gain(users.gain_power[k], users.mean_gain[k], rng).norm_sqr();
        }
        let r = rate_for_draw(&cross, &g2, users);
        let s = *shift.get_or_insert(r);
        sum += r - s;
        sum_sq += (r - s) * (r - s);
    }
    let n = n_samples as f64;
    let s = shift.unwrap_or(0.0);
    let mean_shifted = sum / n;
    let var = ((sum_sq - n * mean_shifted * mean_shifted) / (n - 1.0)).max(0.0);
    Ok((s + mean_shifted, (var / n).sqrt()))
}

/// Closed-form lower bound `sum_k a_k log2(1 + |h_bar^H p_k|^2 / (...))`.
pub fn lower_bound_rate(p: &CMat, users: &Users) -> f64 {
    users.lower_bound_rate(p)
}

/// Received-power map in dB: `10 log10(sum_k |v(x,y)^H p_k|^2 gamma^2(d))`
/// on the ground grid `xs x ys` (row per `y`, column per `x`).
pub fn beam_pattern(p: &CMat, config: &SystemConfig, xs: &[f64], ys: &[f64]) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    if p.nrows() != config.num_antennas() {
        return Err(Error::DimensionMismatch {
            context: "precoder vs array size",
            expected: format!("{}x{}", config.num_antennas(), p.ncols()),
            actual: format!("{}x{}", p.nrows(), p.ncols()),
        });
    }
    let r = config.coverage_radius_m;
    ys.iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| {
                    if x * x + y * y > r * r * (1.0 + 1e-12) {
                        return Err(Error::InvalidParameter(format!(
                            "pattern point ({x}, {y}) lies outside the coverage radius"
                        )));
                    }
                    let v = upa_steering(x / r, y / r, config.m_x, config.m_y, config.element_spacing_ratio)?;
                    let d = (config.orbit_altitude_m.powi(2) + x * x + y * y).sqrt();
                    let g: f64 = (v.adjoint() * p).iter().map(|z| z.norm_sqr()).sum();
                    Ok(linear_to_db(g * config.gain_power(d)))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rician_mean_gain;
    use crate::rng::SimRng;

    fn toy(kappa: f64) -> Users {
        let mut steering = CMat::zeros(4, 2);
        steering.set_column(0, &upa_steering(0.1, 0.2, 2, 2, 0.5).unwrap());
        steering.set_column(1, &upa_steering(-0.4, 0.3, 2, 2, 0.5).unwrap());
        Users {
            steering,
            gain_power: vec![1.0, 0.5],
            mean_gain: vec![rician_mean_gain(1.0, kappa), rician_mean_gain(0.5f64.sqrt(), kappa)],
            noise_power: vec![0.1, 0.2],
            weight: vec![1.0, 1.0],
        }
    }

    fn toy_p() -> CMat {
        CMat::from_fn(4, 2, |i, j| c(0.3 + 0.1 * i as f64, 0.2 * j as f64 - 0.1))
    }

    #[test]
    fn zero_precoder_has_zero_rate() {
        let mut rng = SimRng::new(1);
        let (m, s) = ergodic_sum_rate(&CMat::zeros(4, 2), &toy(10.0), 100, &mut rng).unwrap();
        assert_eq!((m, s), (0.0, 0.0));
        assert_eq!(lower_bound_rate(&CMat::zeros(4, 2), &toy(10.0)), 0.0);
    }

    #[test]
    fn pure_los_is_deterministic() {
        let u = toy(f64::INFINITY);
        let mut rng = SimRng::new(2);
        let (m, s) = ergodic_sum_rate(&toy_p(), &u, 50, &mut rng).unwrap();
        assert_eq!(s, 0.0);
        assert!((m - u.lower_bound_rate(&toy_p())).abs() < 1e-6);
    }

    #[test]
    fn matches_per_draw_scalar_arithmetic() {
        let u = toy(3.0);
        let p = toy_p();
        let (m, s) = ergodic_sum_rate(&p, &u, 4000, &mut SimRng::new(3)).unwrap();
        // independent route: full channel vectors and explicit SINR per draw
        let mut rng = SimRng::new(4);
        let n = 4000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut r = 0.0;
            let b: Vec<_> = (0..2)
                .map(|k| u.steering.column(k) * sample_gain(u.gain_power[k], u.mean_gain[k], &mut rng))
                .collect();
            for k in 0..2 {
                let sig = b[k].dotc(&p.column(k)).norm_sqr();
                let int: f64 = (0..2).filter(|&i| i != k).map(|i| b[k].dotc(&p.column(i)).norm_sqr()).sum();
                r += (1.0 + sig / (int + u.noise_power[k])).log2();
            }
            acc += r;
        }
        let other = acc / n as f64;
        assert!((m - other).abs() < 4.0 * s * 2f64.sqrt(), "{m} vs {other} (stderr {s})");
    }

    #[test]
    fn jensen_bound_holds_on_random_precoders() {
        use rand::SeedableRng;
        let mut prng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let u = toy(2.0);
        for t in 0..20 {
            let p = CMat::from_fn(4, 2, |_, _| c(prng.random_range(-1.0..1.0), prng.random_range(-1.0..1.0)));
            let (m, s) = ergodic_sum_rate(&p, &u, 2000, &mut SimRng::new(100 + t)).unwrap();
            assert!(lower_bound_rate(&p, &u) <= m + 3.0 * s);
        }
    }

    #[test]
    fn sample_gain_moments() {
        let mut rng = SimRng::new(5);
        let mean = rician_mean_gain(2.0, 4.0) * cexp_i(1.1);
        let n = 200_000;
        let mut m = c(0.0, 0.0);
        let mut p = 0.0;
        for _ in 0..n {
            let g = sample_gain(4.0, mean, &mut rng);
            m += g;
            p += g.norm_sqr();
        }
        m /= n as f64;
        p /= n as f64;
        assert!((m - mean).norm() < 0.02);
        assert!((p - 4.0).abs() < 0.04);
    }

    #[test]
    fn pattern_peaks_at_steered_point_and_scales_with_power() {
        let cfg = SystemConfig::default();
        let r = cfg.coverage_radius_m;
        let (x0, y0) = (0.25 * r, -0.125 * r);
        let v = upa_steering(x0 / r, y0 / r, cfg.m_x, cfg.m_y, cfg.element_spacing_ratio).unwrap();
        let p = CMat::from_column_slice(64, 1, v.as_slice());
        let xs: Vec<f64> = (-8..=8).map(|i| x0 + i as f64 * r / 64.0).collect();
        let ys: Vec<f64> = (-8..=8).map(|i| y0 + i as f64 * r / 64.0).collect();
        let map = beam_pattern(&p, &cfg, &xs, &ys).unwrap();
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in map.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        assert_eq!((best.0, best.1), (8, 8));
        let double = beam_pattern(&(&p * c(2f64.sqrt(), 0.0)), &cfg, &xs, &ys).unwrap();
        for (a, b) in map.iter().flatten().zip(double.iter().flatten()) {
            assert!((b - a - 10.0 * 2f64.log10()).abs() < 1e-9);
        }
        assert!(beam_pattern(&p, &cfg, &[2.0 * r], &[0.0]).is_err());
    }
}
