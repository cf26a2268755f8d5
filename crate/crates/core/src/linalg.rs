//! Dense complex helpers on top of nalgebra.
//!
//! Everything here works on `CMatrix = DMatrix<Complex64>`. Hermitian inputs are
//! symmetrized on entry so that round-off in the caller never leaks into the
//! eigen or Cholesky routines.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Real part of `tr(A·B)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(a: &CMatrix) -> Self {
        let n = a.nrows();
        if n == 0 {
            return HermitianEigen {
                values: vec![],
                vectors: CMatrix::zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(hermitian_part(a));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
        HermitianEigen { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `U · diag(f(λ)) · Uᴴ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let d = DVector::from_iterator(n, self.values.iter().map(|&v| c(f(v))));
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[j];
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }
}

/// Symmetrizes `a`, rejects eigenvalues below `-floor_tol` and clamps the
/// remaining negative ones to zero.
pub fn repair_psd(a: &CMatrix, floor_tol: f64) -> Result<CMatrix> {
    let h = hermitian_part(a);
    if h.nrows() == 0 {
        return Ok(h);
    }
    let eig = HermitianEigen::new(&h);
    let min = eig.min();
    if min < -floor_tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    if min < 0.0 {
        Ok(eig.reconstruct_with(|v| v.max(0.0)))
    } else {
        Ok(h)
    }
}

/// Principal square root of a Hermitian PSD matrix, negative eigenvalues
/// clamped at zero.
pub fn sqrtm_psd(a: &CMatrix) -> CMatrix {
    if a.nrows() == 0 {
        return a.clone();
    }
    HermitianEigen::new(a).reconstruct_with(|v| v.max(0.0).sqrt())
}

fn cholesky(a: &CMatrix) -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
    Cholesky::new(hermitian_part(a))
        .ok_or_else(|| Error::Conditioning(format!("{}x{} matrix is not positive definite", a.nrows(), a.ncols())))
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inv_hpd(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    Ok(hermitian_part(&cholesky(a)?.inverse()))
}

/// `log det A` for Hermitian positive definite `A`, via the Cholesky factor.
pub fn logdet_hpd(a: &CMatrix) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let l = cholesky(a)?;
    Ok(2.0 * l.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>())
}

/// General inverse via LU, used for the non-Hermitian `I + F·Q` products.
pub fn inv_general(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    let lu = a.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Conditioning("singular matrix in general inverse".into()))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Conditioning("non-finite entries in general inverse".into()));
    }
    Ok(inv)
}

/// Spectral norm of a Hermitian matrix.
pub fn spectral_norm_herm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let e = HermitianEigen::new(a);
    e.max().abs().max(e.min().abs())
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && max_abs_diff(a, &a.adjoint()) <= tol
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let m = b.nrows();
        out.view_mut((off, off), (m, m)).copy_from(b);
        off += m;
    }
    out
}

/// Diagonal block `[offset, offset + size)` of a square matrix.
pub fn diag_block(a: &CMatrix, offset: usize, size: usize) -> CMatrix {
    a.view((offset, offset), (size, size)).into_owned()
}

/// Offsets of consecutive blocks with the given sizes.
pub fn offsets(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect()
}
