//! Small complex vector/matrix helpers shared by the eigensolvers.

use num_complex::Complex64;

/// Inner product with conjugation on the left argument.
pub(crate) fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

pub(crate) fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// y += c * x
pub(crate) fn axpy(y: &mut [Complex64], c: Complex64, x: &[Complex64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += c * xi;
    }
}

pub(crate) fn scale(a: &mut [Complex64], s: f64) {
    for x in a.iter_mut() {
        *x *= s;
    }
}

/// Remove the components of `v` along each (unit-norm) vector in `basis`,
/// one modified Gram-Schmidt pass.
pub(crate) fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for q in basis {
        let c = cdot(q, v);
        axpy(v, -c, q);
    }
}

/// Dense row-major complex matrix, sized for Krylov-scale problems.
#[derive(Debug, Clone)]
pub(crate) struct CMat {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![Complex64::ZERO; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.a[i * self.n + j]
    }
}
