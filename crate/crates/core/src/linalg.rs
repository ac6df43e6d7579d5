//! Small dense helpers on top of `nalgebra` shared by every module.
//!
//! All matrices in this crate are tiny (n ≤ 16), so everything is dense and
//! heap-allocated through `DMatrix`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Real part of `Tr(AB)`; exact for Hermitian `A`, `B`.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_product(a, b).re
}

/// Largest entrywise modulus of `A − A*`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_entry(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part is used.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(a);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending with
/// eigenvectors as the matching columns.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitian_part(a);
    let eig = h.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_map(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = eigh(a);
    let n = a.nrows();
    let mut d = CMatrix::zeros(n, n);
    for (k, v) in vals.iter().enumerate() {
        d[(k, k)] = Complex64::new(f(*v), 0.0);
    }
    &vecs * d * vecs.adjoint()
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    eigvalsh(a).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(a: &CMatrix) -> f64 {
    eigvalsh(a).last().copied().unwrap_or(0.0)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn real_to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Symmetrizes a real matrix in place against rounding drift.
pub fn symmetrize(a: &mut RMatrix) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

pub fn min_eigenvalue_sym(a: &RMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let mut s = a.clone();
    symmetrize(&mut s);
    s.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// The Pauli matrices σ₁, σ₂, σ₃ (trace-norm 2 convention).
pub fn pauli() -> [CMatrix; 3] {
    let s1 = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let s2 = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let s3 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [s1, s2, s3]
}

/// `(I + v·σ)/2` for a real 3-vector in the Pauli convention.
pub fn qubit_from_pauli_vector(v: [f64; 3]) -> CMatrix {
    let [s1, s2, s3] = pauli();
    (identity(2) + s1.scale(v[0]) + s2.scale(v[1]) + s3.scale(v[2])).scale(0.5)
}
