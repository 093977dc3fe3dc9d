//! Euclidean projection onto `{X : ||X||_F^2 <= p, Tr(X^H A X) <= b}` for
//! Hermitian PSD `A`.
//!
//! Both constraints are diagonal in the eigenbasis of `A`, so the KKT point
//! has the form `Y_i / (1 + alpha + nu d_i)` row-wise in that basis. The
//! multipliers are found from the concave dual: for fixed `alpha` the inner
//! `nu` solves a convex decreasing secular equation by Newton from the left,
//! and the power residual is monotone in `alpha`.

use crate::error::{Error, Result};
use crate::linalg::{c, check_hermitian_psd, power, quad_trace, CMat, HermitianEigen};

/// Projector with a cached eigendecomposition of the ellipsoid matrix.
#[derive(Clone, Debug)]
pub struct IntersectionProjector {
    q: CMat,
    d: Vec<f64>,
    power_radius: f64,
    bound: f64,
}

const FEAS_SLACK: f64 = 1e-12;

impl IntersectionProjector {
    /// `power_radius` is the bound on `||X||_F^2`; `bound` the bound on
    /// `Tr(X^H A X)` (`f64::INFINITY` disables it).
    pub fn new(a: &CMat, power_radius: f64, bound: f64) -> Result<Self> {
        check_hermitian_psd(a)?;
        if !(power_radius >= 0.0) || !(bound >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "projection radii must be nonnegative, got {power_radius} and {bound}"
            )));
        }
        let eig = HermitianEigen::new(a);
        let top = eig.max().max(0.0);
        let d = eig
            .values
            .iter()
            .map(|&x| if x <= 1e-14 * top { 0.0 } else { x })
            .collect();
        Ok(Self {
            q: eig.vectors,
            d,
            power_radius,
            bound,
        })
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.q
    }

    /// Eigenvalues of `A`, ascending, with numerical zeros flushed.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.d
    }

    pub fn power_radius(&self) -> f64 {
        self.power_radius
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `(||X||^2, Tr(X^H A X))` for `Y = Q^H X` given in eigen coordinates.
    pub fn constraint_values_eigen(&self, y: &CMat) -> (f64, f64) {
        let mut pw = 0.0;
        let mut el = 0.0;
        for (i, &di) in self.d.iter().enumerate() {
            let s: f64 = y.row(i).iter().map(|z| z.norm_sqr()).sum();
            pw += s;
            el += di * s;
        }
        (pw, el)
    }

    pub fn is_feasible_eigen(&self, y: &CMat) -> bool {
        let (pw, el) = self.constraint_values_eigen(y);
        pw <= self.power_radius * (1.0 + FEAS_SLACK) && el <= self.bound * (1.0 + FEAS_SLACK)
    }

    pub fn to_eigen(&self, x: &CMat) -> CMat {
        self.q.adjoint() * x
    }

    pub fn from_eigen(&self, y: &CMat) -> CMat {
        &self.q * y
    }

    pub fn project(&self, x: &CMat) -> CMat {
        let y = self.to_eigen(x);
        if self.is_feasible_eigen(&y) {
            return x.clone();
        }
        self.from_eigen(&self.project_eigen(&y))
    }

    /// Projection in eigen coordinates.
    pub fn project_eigen(&self, y: &CMat) -> CMat {
        if self.is_feasible_eigen(y) {
            return y.clone();
        }
        let s: Vec<f64> = (0..y.nrows())
            .map(|i| y.row(i).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let (alpha, nu) = self.multipliers(&s);
        let mut out = y.clone();
        for (i, &di) in self.d.iter().enumerate() {
            let denom = shrink(alpha, nu, di);
            if denom.is_infinite() {
                out.row_mut(i).fill(c(0.0, 0.0));
            } else {
                out.row_mut(i).scale_mut(1.0 / denom);
            }
        }
        // remove residual rounding excess with a homogeneous rescale
        let (pw, el) = self.constraint_values_eigen(&out);
        let mut t: f64 = 1.0;
        if pw > self.power_radius {
            t = t.min((self.power_radius / pw).sqrt());
        }
        if el > self.bound {
            t = t.min((self.bound / el).sqrt());
        }
        if t < 1.0 {
            out.scale_mut(t);
        }
        out
    }

    fn f1(&self, s: &[f64], alpha: f64, nu: f64) -> f64 {
        s.iter()
            .zip(&self.d)
            .map(|(&si, &di)| {
                let den = shrink(alpha, nu, di);
                if den.is_infinite() {
                    0.0
                } else {
                    si / (den * den)
                }
            })
            .sum()
    }

    /// `nu >= 0` with `F2(alpha, nu) = bound`, or 0 if already below.
    fn inner_nu(&self, s: &[f64], alpha: f64) -> f64 {
        let b = self.bound;
        let f2 = |nu: f64| -> (f64, f64) {
            let mut v = 0.0;
            let mut dv = 0.0;
            for (&si, &di) in s.iter().zip(&self.d) {
                if di == 0.0 {
                    continue;
                }
                let den = 1.0 + alpha + nu * di;
                let t = di * si / (den * den);
                v += t;
                dv -= 2.0 * di * t / den;
            }
            (v, dv)
        };
        if b.is_infinite() || f2(0.0).0 <= b {
            return 0.0;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        // Newton on a convex decreasing function from the left is monotone.
        let mut nu = 0.0f64;
        for _ in 0..500 {
            let (v, dv) = f2(nu);
            if v <= b * (1.0 + 1e-15) || dv == 0.0 {
                break;
            }
            let next = nu - (v - b) / dv;
            if !(next > nu) || (next - nu) <= 1e-16 * next {
                nu = next.max(nu);
                break;
            }
            nu = next;
        }
        nu
    }

    fn multipliers(&self, s: &[f64]) -> (f64, f64) {
        let p = self.power_radius;
        let total: f64 = s.iter().sum();
        if p == 0.0 {
            return (f64::INFINITY, 0.0);
        }
        // ellipsoid only
        let nu0 = self.inner_nu(s, 0.0);
        if self.f1(s, 0.0, nu0) <= p * (1.0 + FEAS_SLACK) {
            return (0.0, nu0);
        }
        // ball only
        let alpha_ball = (total / p).sqrt() - 1.0;
        if self.inner_nu(s, alpha_ball) == 0.0 {
            return (alpha_ball, 0.0);
        }
        // both active: F1(alpha, nu(alpha)) is nonincreasing in alpha
        let mut lo = 0.0f64;
        let mut hi = alpha_ball.max(1e-300);
        while self.f1(s, hi, self.inner_nu(s, hi)) > p {
            lo = hi;
            hi *= 2.0;
            if hi.is_infinite() {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.f1(s, mid, self.inner_nu(s, mid)) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (hi, self.inner_nu(s, hi))
    }
}

fn shrink(alpha: f64, nu: f64, di: f64) -> f64 {
    if di == 0.0 {
        1.0 + alpha
    } else {
        1.0 + alpha + nu * di
    }
}

/// Dykstra alternating projections onto the ball and the ellipsoid. Slower
/// than [`IntersectionProjector::project`]; kept as an independent check.
pub fn dykstra_project(
    x: &CMat,
    a: &CMat,
    power_radius: f64,
    bound: f64,
    max_iter: usize,
    tol: f64,
) -> Result<CMat> {
    let ball = IntersectionProjector::new(a, power_radius, f64::INFINITY)?;
    let ell = IntersectionProjector::new(a, f64::INFINITY, bound)?;
    let mut y = x.clone();
    let mut p = CMat::zeros(x.nrows(), x.ncols());
    let mut q = CMat::zeros(x.nrows(), x.ncols());
    for _ in 0..max_iter {
        let z = ball.project(&(&y + &p));
        p = &y + &p - &z;
        let next = ell.project(&(&z + &q));
        q = &z + &q - &next;
        let change = (&next - &y).norm();
        y = next;
        if change <= tol * y.norm().max(f64::MIN_POSITIVE)
            && power(&y) <= power_radius * (1.0 + 1e-9)
            && quad_trace(&y, a) <= bound * (1.0 + 1e-9)
        {
            break;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rel_frobenius, CVec};
    use crate::rng::SimRng;
    use rand::Rng;

    fn random_matrix(rng: &mut SimRng, r: usize, col: usize) -> CMat {
        CMat::from_fn(r, col, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_psd(rng: &mut SimRng, n: usize, rank: usize) -> CMat {
        let g = random_matrix(rng, n, rank);
        &g * g.adjoint()
    }

    #[test]
    fn feasible_input_is_unchanged() {
        let mut rng = SimRng::new(1);
        let a = random_psd(&mut rng, 4, 2);
        let x = random_matrix(&mut rng, 4, 2) * c(0.01, 0.0);
        let proj = IntersectionProjector::new(&a, 1.0, 1.0).unwrap();
        assert_eq!(proj.project(&x), x);
    }

    #[test]
    fn identity_ellipsoid_is_radial_scaling() {
        let mut rng = SimRng::new(2);
        let x = random_matrix(&mut rng, 3, 2) * c(10.0, 0.0);
        let a = CMat::identity(3, 3);
        let proj = IntersectionProjector::new(&a, 2.0, 0.5).unwrap();
        let got = proj.project(&x);
        let expected = &x * c((0.5 / power(&x)).sqrt(), 0.0);
        assert!(rel_frobenius(&got, &expected) < 1e-12);
    }

    #[test]
    fn two_ellipses_match_rejection_sampling() {
        // 2x1 real toy: ball radius^2 1, ellipse x^2/4 + 4 y^2 <= 0.5 on the
        // real slice. The projection of a real point stays real.
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(0.25, 0.0), c(4.0, 0.0)]));
        let x = CMat::from_column_slice(2, 1, &[c(1.5, 0.0), c(0.9, 0.0)]);
        let proj = IntersectionProjector::new(&a, 1.0, 0.5).unwrap();
        let got = proj.project(&x);
        assert!(got[0].im.abs() < 1e-15 && got[1].im.abs() < 1e-15);

        // nearest feasible point lies on the boundary of one of the two
        // ellipses; sample both curves densely and keep points feasible for
        // the other constraint
        let n = 1_000_000;
        let mut best = f64::INFINITY;
        let mut best_pt = (0.0, 0.0);
        let mut consider = |u: f64, v: f64| {
            if u * u + v * v <= 1.0 + 1e-12 && 0.25 * u * u + 4.0 * v * v <= 0.5 + 1e-12 {
                let d = (u - 1.5).powi(2) + (v - 0.9).powi(2);
                if d < best {
                    best = d;
                    best_pt = (u, v);
                }
            }
        };
        for i in 0..n {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            consider(t.cos(), t.sin());
            consider(2f64.sqrt() * t.cos(), 0.125f64.sqrt() * t.sin());
        }
        let dist = ((got[0].re - 1.5).powi(2) + (got[1].re - 0.9).powi(2)).sqrt();
        assert!(dist <= best.sqrt() + 1e-12);
        assert!((got[0].re - best_pt.0).abs() < 1e-4 && (got[1].re - best_pt.1).abs() < 1e-4);
    }

    #[test]
    fn agrees_with_dykstra_and_is_nonexpansive() {
        let mut rng = SimRng::new(4);
        for trial in 0..20 {
            let a = random_psd(&mut rng, 6, 1 + trial % 6);
            let x1 = random_matrix(&mut rng, 6, 3) * c(3.0, 0.0);
            let x2 = random_matrix(&mut rng, 6, 3) * c(3.0, 0.0);
            let ell = quad_trace(&x1, &a);
            let proj = IntersectionProjector::new(&a, 0.7 * power(&x1), 0.2 * ell).unwrap();
            let p1 = proj.project(&x1);
            let p2 = proj.project(&x2);
            assert!(power(&p1) <= proj.power_radius() * (1.0 + 1e-10));
            assert!(quad_trace(&p1, &a) <= proj.bound() * (1.0 + 1e-10));
            assert!((&p1 - &p2).norm() <= (&x1 - &x2).norm() * (1.0 + 1e-12));
            assert!(rel_frobenius(&proj.project(&p1), &p1) < 1e-14);
            let dyk = dykstra_project(&x1, &a, 0.7 * power(&x1), 0.2 * ell, 20_000, 1e-13).unwrap();
            assert!(rel_frobenius(&p1, &dyk) < 1e-6, "trial {trial}: {}", rel_frobenius(&p1, &dyk));
        }
    }

    #[test]
    fn projection_beats_feasible_probes() {
        let mut rng = SimRng::new(5);
        let a = random_psd(&mut rng, 4, 2);
        let x = random_matrix(&mut rng, 4, 2) * c(4.0, 0.0);
        let proj = IntersectionProjector::new(&a, 1.0, 0.05).unwrap();
        let px = proj.project(&x);
        let d = (&x - &px).norm();
        for _ in 0..2000 {
            let y = proj.project(&random_matrix(&mut rng, 4, 2));
            assert!(d <= (&x - &y).norm() + 1e-12);
        }
    }

    #[test]
    fn zero_bound_keeps_nullspace_component() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let x = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.5, 0.0)]);
        let p = IntersectionProjector::new(&a, 1.0, 0.0).unwrap().project(&x);
        assert!(p[0].norm() < 1e-15 && (p[1] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_psd() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
        assert!(IntersectionProjector::new(&a, 1.0, 1.0).is_err());
    }
}
