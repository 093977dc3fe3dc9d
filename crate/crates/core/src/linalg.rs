//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn cexp_i(phase: f64) -> C64 {
    let (s, co) = phase.sin_cos();
    Complex::new(co, s)
}

/// Real part of `Tr{P^H A P}`.
pub fn quad_trace(p: &CMat, a: &CMat) -> f64 {
    let ap = a * p;
    p.iter().zip(ap.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `Tr{P P^H}`, i.e. the squared Frobenius norm.
pub fn power(p: &CMat) -> f64 {
    p.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending
/// order.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(a: &CMat) -> Self {
        let eig = SymmetricEigen::new(hermitian_part(a));
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let n = a.nrows();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Checks Hermitian symmetry (to `1e-12` of the largest entry) and positive
/// semidefiniteness (min eigenvalue `>= -1e-10 * trace`).
pub fn check_hermitian_psd(a: &CMat) -> Result<()> {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if hermitian_defect(a) > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Invariant(format!(
            "matrix not Hermitian (defect {:e})",
            hermitian_defect(a)
        )));
    }
    let tr = trace_re(a);
    let min = HermitianEigen::new(a).min();
    if min < -1e-10 * tr.abs() {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            trace: tr,
        });
    }
    Ok(())
}

/// Solves `A X = B` for Hermitian positive definite `A`, falling back to LU.
pub fn solve_hpd(a: &CMat, b: &CMat) -> Result<CMat> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("linear system has no unique solution".into()))
}

/// Relative Frobenius distance `||A - B|| / ||B||`.
pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
