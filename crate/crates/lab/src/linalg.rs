//! Dense linear-algebra helpers on complex grid matrices.
//!
//! Products split matrices into real and imaginary parts so that real inputs
//! (Hamiltonians, position operators, real projectors) use real GEMM.

use crate::{Matrix, RealMatrix};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;

/// Real and imaginary parts of `a`; the imaginary part is `None` when exactly zero.
pub fn split(a: &Matrix) -> (RealMatrix, Option<RealMatrix>) {
    let re = a.map(|z| z.re);
    let im = if a.iter().any(|z| z.im != 0.0) {
        Some(a.map(|z| z.im))
    } else {
        None
    };
    (re, im)
}

/// Assemble a complex matrix from real and optional imaginary parts.
pub fn combine(re: RealMatrix, im: Option<RealMatrix>) -> Matrix {
    match im {
        None => re.map(|x| Complex64::new(x, 0.0)),
        Some(im) => re.zip_map(&im, Complex64::new),
    }
}

/// Embed a real matrix.
pub fn from_real(a: &RealMatrix) -> Matrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// `true` when every entry has zero imaginary part.
pub fn is_real(a: &Matrix) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

/// Matrix product `a·b` through real GEMM on the split parts.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    product_parts(&ar, ai.as_ref(), &br, bi.as_ref())
}

fn product_parts(
    ar: &RealMatrix,
    ai: Option<&RealMatrix>,
    br: &RealMatrix,
    bi: Option<&RealMatrix>,
) -> Matrix {
    let re_im = match (ai, bi) {
        (None, None) => (ar * br, None),
        (None, Some(bi)) => (ar * br, Some(ar * bi)),
        (Some(ai), None) => (ar * br, Some(ai * br)),
        (Some(ai), Some(bi)) => (ar * br - ai * bi, Some(ar * bi + ai * br)),
    };
    combine(re_im.0, re_im.1)
}

/// Product of three matrices `a·b·c`.
pub fn matmul3(a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    matmul(&matmul(a, b), c)
}

/// Conjugate transpose.
pub fn adjoint(a: &Matrix) -> Matrix {
    a.adjoint()
}

/// Commutator `ab - ba`.
pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    matmul(a, b) - matmul(b, a)
}

/// Largest absolute entry.
pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Maximal entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian check with tolerance `tol·max|a_ij|`.
pub fn is_hermitian(a: &Matrix, rel_tol: f64) -> bool {
    a.is_square() && hermitian_defect(a) <= rel_tol * max_abs(a).max(f64::MIN_POSITIVE)
}

/// Symmetrized part `(a + a*)/2`.
pub fn hermitian_part(a: &Matrix) -> Matrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Trace.
pub fn trace(a: &Matrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `Tr(a·b)` without forming the product.
pub fn trace_product(a: &Matrix, b: &Matrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Frobenius norm.
pub fn frobenius(a: &Matrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `a / max|a_ij|` with entries below `1e-30` flushed to zero, and the scale.
///
/// Householder reductions square entries without rescaling, so entries near the
/// underflow threshold otherwise produce `0/0`.
fn conditioned(a: &Matrix) -> (Matrix, f64) {
    let scale = max_abs(a);
    if scale == 0.0 || !scale.is_finite() {
        return (a.clone(), 1.0);
    }
    let b = a.map(|z| {
        let w = z / scale;
        Complex64::new(if w.re.abs() < 1e-30 { 0.0 } else { w.re }, if w.im.abs() < 1e-30 { 0.0 } else { w.im })
    });
    (b, scale)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending with a
/// stable tie order; eigenvectors are the matching columns.
pub fn hermitian_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    let (a, scale) = conditioned(a);
    let a = &a;
    let (re, im) = split(a);
    let (values, vectors): (Vec<f64>, Matrix) = match im {
        None => {
            let sym = (&re + re.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            (eig.eigenvalues.iter().copied().collect(), from_real(&eig.eigenvectors))
        }
        Some(_) => {
            let eig = SymmetricEigen::new(hermitian_part(a));
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let sorted_values = order.iter().map(|&i| values[i] * scale).collect();
    let sorted_vectors = Matrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &Matrix) -> Vec<f64> {
    let (a, scale) = conditioned(a);
    let a = &a;
    let (re, im) = split(a);
    let mut values: Vec<f64> = match im {
        None => {
            let sym = (&re + re.transpose()) * 0.5;
            sym.symmetric_eigenvalues().iter().copied().collect()
        }
        Some(_) => hermitian_part(a).symmetric_eigenvalues().iter().copied().collect(),
    };
    values.iter_mut().for_each(|v| *v *= scale);
    values.sort_by(f64::total_cmp);
    values
}

/// Singular values in descending order.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let (a, scale) = conditioned(a);
    let a = &a;
    let purely_imaginary = a.iter().all(|z| z.re == 0.0);
    let mut values: Vec<f64> = if purely_imaginary {
        a.map(|z| z.im).singular_values().iter().copied().collect()
    } else if a.is_square() && hermitian_defect(a) == 0.0 {
        hermitian_eigenvalues(a).into_iter().map(f64::abs).collect()
    } else {
        let (re, im) = split(a);
        match im {
            None => re.singular_values().iter().copied().collect(),
            Some(_) => a.singular_values().iter().copied().collect(),
        }
    };
    values.iter_mut().for_each(|v| *v *= scale);
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

/// Operator norm (largest singular value).
pub fn operator_norm(a: &Matrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Trace norm (sum of singular values).
pub fn trace_norm(a: &Matrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Apply a real function to a Hermitian matrix through its eigen-decomposition.
pub fn hermitian_function(a: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let (values, vectors) = hermitian_eigen(a);
    spectral_synthesis(&values.iter().map(|&x| f(x)).collect::<Vec<_>>(), &vectors)
}

/// `U diag(w) U*` for a unitary `U`.
pub fn spectral_synthesis(weights: &[f64], vectors: &Matrix) -> Matrix {
    let mut scaled = vectors.clone();
    for (c, &w) in weights.iter().enumerate() {
        scaled.column_mut(c).scale_mut(w);
    }
    matmul(&scaled, &vectors.adjoint())
}

/// Diagonal matrix from real entries.
pub fn diagonal(values: &[f64]) -> Matrix {
    let n = values.len();
    let mut m = Matrix::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = Complex64::new(v, 0.0);
    }
    m
}

/// Identity of size `n`.
pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}
