#![allow(dead_code)]

use rand::Rng;
use satbeam::geometry::{rician_mean_gain, upa_steering};
use satbeam::interference::{InterferenceModel, Provenance};
use satbeam::linalg::{c, cexp_i, hermitian_part, CMat};
use satbeam::problem::{RobustProblem, Users};

/// Random 4x4-array instance with `k` users and a rank-3-plus-floor
/// interference covariance.
pub fn random_problem<R: Rng>(rng: &mut R, k: usize, i_thr: f64) -> RobustProblem {
    let mut steering = CMat::zeros(16, k);
    for j in 0..k {
        let v = upa_steering(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), 4, 4, 0.5).unwrap();
        steering.set_column(j, &v);
    }
    let gain: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
    let users = Users {
        steering,
        mean_gain: gain
            .iter()
            .map(|g| rician_mean_gain(g.sqrt(), rng.random_range(1.0..20.0)) * cexp_i(rng.random_range(0.0..6.3)))
            .collect(),
        gain_power: gain,
        noise_power: vec![rng.random_range(0.05..0.5); k],
        weight: (0..k).map(|_| rng.random_range(0.5..1.5)).collect(),
    };
    let mut ups = CMat::identity(16, 16) * c(1e-3, 0.0);
    for _ in 0..3 {
        let v = upa_steering(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), 4, 4, 0.5).unwrap();
        ups += &v * v.adjoint() * c(rng.random_range(0.5..2.0), 0.0);
    }
    let model = InterferenceModel {
        matrix: hermitian_part(&ups),
        provenance: Provenance::PositionAided,
        fingerprint: String::new(),
        total_users: 5,
    };
    RobustProblem::new(users, model, i_thr, 1.0).unwrap()
}

pub fn random_matrix<R: Rng>(rng: &mut R, m: usize, k: usize) -> CMat {
    CMat::from_fn(m, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}
