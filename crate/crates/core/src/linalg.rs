//! Small dense linear-algebra helpers shared by the state and mixing code.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

/// `max |A - A^dag|` over all entries.
pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for c in 0..m.ncols() {
        for r in 0..n.min(c + 1) {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// `max |W^dag W - I|` over all entries.
pub fn unitarity_deviation(w: &DMatrix<C64>) -> f64 {
    let prod = w.adjoint() * w;
    let mut dev = 0.0_f64;
    for c in 0..prod.ncols() {
        for r in 0..prod.nrows() {
            let id = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((prod[(r, c)] - C64::new(id, 0.0)).norm());
        }
    }
    dev
}

/// Eigenvalues of the Hermitian part `(A + A^dag) / 2`, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> alloc::vec::Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let mut ev: alloc::vec::Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_hermitian_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `exp(-i h)` for Hermitian `h`, through its eigendecomposition.
pub fn expm_minus_i_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::new(0.0, -lambda).exp();
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// `sqrt(n!)` for `n = 0..len`, built by recurrence.
pub fn sqrt_factorials(len: usize) -> alloc::vec::Vec<f64> {
    let mut out = alloc::vec::Vec::with_capacity(len);
    let mut acc = 1.0_f64;
    for n in 0..len {
        if n > 0 {
            acc *= (n as f64).sqrt();
        }
        out.push(acc);
    }
    out
}

/// Largest absolute entry of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Solves `A x = b` for a small dense real system (LU with partial pivoting).
/// Returns `None` for a singular matrix.
pub fn solve_dense(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().lu().solve(b)
}

pub(crate) fn is_finite(z: C64) -> bool {
    Float::is_finite(z.re) && Float::is_finite(z.im)
}
