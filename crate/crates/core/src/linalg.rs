//! Small dense complex linear-algebra helpers shared by the model, kernel
//! and modular code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `a * b` through a blocked complex GEMM, split over column chunks of `b`;
/// small products stay in nalgebra.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    if m * k * n < 32 * 32 * 32 {
        return a * b;
    }
    let mut c = CMat::zeros(m, n);
    if m == 0 {
        return c;
    }
    let work = m * k * n;
    let chunks = (work / (64 * 64 * 64)).clamp(1, rayon::current_num_threads());
    let cols = n.div_ceil(chunks);
    let b_data = b.as_slice();
    c.as_mut_slice()
        .par_chunks_mut(m * cols)
        .enumerate()
        .for_each(|(i, out)| {
            let width = out.len() / m;
            let b_chunk = &b_data[i * cols * k..(i * cols + width) * k];
            // SAFETY: `Complex<f64>` is `repr(C)` with the layout of
            // `[f64; 2]`; all three buffers are contiguous column-major with
            // the shapes passed here.
            unsafe {
                matrixmultiply::zgemm(
                    matrixmultiply::CGemmOption::Standard,
                    matrixmultiply::CGemmOption::Standard,
                    m,
                    k,
                    width,
                    [1.0, 0.0],
                    a.as_ptr() as *const [f64; 2],
                    1,
                    m as isize,
                    b_chunk.as_ptr() as *const [f64; 2],
                    1,
                    k as isize,
                    [0.0, 0.0],
                    out.as_mut_ptr() as *mut [f64; 2],
                    1,
                    m as isize,
                );
            }
        });
    c
}

pub fn conj_mat(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn conj_vec(v: &CVec) -> CVec {
    v.map(|z| z.conj())
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(f64::INFINITY)
}

/// `f(m)` for a Hermitian `m`, computed through its eigen-decomposition.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= fv);
    }
    matmul(&scaled, &vecs.adjoint())
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() {
        matmul(&m.adjoint(), m)
    } else {
        matmul(m, &m.adjoint())
    };
    let (vals, _) = hermitian_eigen(&gram);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Orthonormal basis (columns) of the column span of `m`, dropping
/// directions whose singular value is below `tol` times the largest one.
pub fn orthonormal_span(m: &CMat, tol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol * smax.max(f64::MIN_POSITIVE))
        .collect();
    CMat::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

pub fn rank(m: &CMat, tol: f64) -> usize {
    orthonormal_span(m, tol).ncols()
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal column bases of equal dimension.  Returns 1 if the
/// dimensions differ.
pub fn subspace_sin_angle(q1: &CMat, q2: &CMat) -> f64 {
    if q1.ncols() != q2.ncols() {
        return 1.0;
    }
    if q1.ncols() == 0 {
        return 0.0;
    }
    let residual = q2 - q1 * (q1.adjoint() * q2);
    spectral_norm(&residual)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn real_vec(v: &[f64]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&x| re(x)))
}

pub fn imag_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
}
