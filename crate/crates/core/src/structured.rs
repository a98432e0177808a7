//! Dense structured matrices behind the t-product.
//!
//! These are brute-force constructions (block circulant, block Toeplitz,
//! block Hankel, block diagonal, Kronecker products) used to check the fast
//! transform-domain algebra in [`crate::tsvd`]. Memory is quadratic in
//! `m * m3`, so they are only meant for small tensors.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{BlockVector, Tensor3};
use crate::transform::{dct_matrix, dft_matrix, TransformKind, TubeTransform};

/// Largest `m1 * m3` (or `m2 * m3`) accepted by [`verify_diagonalization`].
pub const MAX_DENSE_SIDE: usize = 512;

/// Drops the first frontal slice and appends a zero slice.
pub fn shift(a: &Tensor3) -> Tensor3 {
    let [m1, m2, m3] = a.dims();
    Tensor3::from_fn(m1, m2, m3, |i, j, k| {
        if k + 1 < m3 {
            a.get(i, j, k + 1)
        } else {
            0.0
        }
    })
}

/// The unique `A` with `X = A + shift(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDecomposition {
    pub a: Tensor3,
}

impl ShiftDecomposition {
    pub fn reconstruct(&self) -> Tensor3 {
        &self.a + &shift(&self.a)
    }
}

/// Backward recurrence: `A^(m3) = X^(m3)`, `A^(k) = X^(k) - A^(k+1)`.
pub fn shift_decompose(x: &Tensor3) -> ShiftDecomposition {
    let [m1, m2, m3] = x.dims();
    let mut a = Tensor3::zeros(m1, m2, m3);
    for k in (0..m3).rev() {
        for i in 0..m1 {
            for j in 0..m2 {
                let next = if k + 1 < m3 { a.get(i, j, k + 1) } else { 0.0 };
                a.set(i, j, k, x.get(i, j, k) - next);
            }
        }
    }
    ShiftDecomposition { a }
}

/// Assembles an `m3 x m3` grid of `m1 x m2` blocks; `pick(r, c)` names the
/// slice of `x` for block `(r, c)`, or `None` for a zero block.
fn block_matrix(x: &Tensor3, pick: impl Fn(usize, usize) -> Option<usize>) -> DMatrix<f64> {
    let [m1, m2, m3] = x.dims();
    let slices = x.frontal_slices();
    let mut out = DMatrix::zeros(m1 * m3, m2 * m3);
    for r in 0..m3 {
        for c in 0..m3 {
            if let Some(k) = pick(r, c) {
                out.view_mut((r * m1, c * m2), (m1, m2))
                    .copy_from(&slices[k]);
            }
        }
    }
    out
}

/// Block circulant matrix: block `(r, c)` is `X^((r - c) mod m3)`.
pub fn bcirc(x: &Tensor3) -> DMatrix<f64> {
    let m3 = x.dims()[2];
    block_matrix(x, |r, c| Some((r + m3 - c) % m3))
}

/// Block Toeplitz matrix: block `(r, c)` is `A^(|r - c|)`.
pub fn bt(a: &Tensor3) -> DMatrix<f64> {
    block_matrix(a, |r, c| Some(r.abs_diff(c)))
}

/// Block Hankel matrix. With one-based block indices and `s = r + c`, block
/// `(r, c)` is `A^(s)` for `s <= m3`, zero on the anti-diagonal `s = m3 + 1`,
/// and the reflection `A^(2 m3 + 2 - s)` below it.
pub fn bh(a: &Tensor3) -> DMatrix<f64> {
    let m3 = a.dims()[2];
    block_matrix(a, |r, c| {
        let s = r + c + 2;
        match s.cmp(&(m3 + 1)) {
            std::cmp::Ordering::Less => Some(s - 1),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(2 * m3 + 1 - s),
        }
    })
}

/// Block Toeplitz-plus-Hankel matrix `bt(A) + bh(A)`.
pub fn btph(a: &Tensor3) -> DMatrix<f64> {
    bt(a) + bh(a)
}

/// Block diagonal matrix of the frontal slices.
pub fn bdiag(x: &Tensor3) -> DMatrix<f64> {
    block_matrix(x, |r, c| (r == c).then_some(r))
}

/// Block diagonal matrix of complex frontal slices.
pub fn bdiag_complex(x: &crate::transform::ComplexTensor3) -> DMatrix<Complex64> {
    let [m1, m2, m3] = x.dims();
    let mut out = DMatrix::zeros(m1 * m3, m2 * m3);
    for k in 0..m3 {
        let s = x.frontal_slice(k).expect("slice index in range");
        out.view_mut((k * m1, k * m2), (m1, m2)).copy_from(&s);
    }
    out
}

/// Inverse of [`bdiag`]. Rejects input carrying more than `1e-10` off the
/// block diagonal.
pub fn unbdiag(m: &DMatrix<f64>, m3: usize) -> Result<Tensor3> {
    if m3 == 0 || !m.nrows().is_multiple_of(m3) || !m.ncols().is_multiple_of(m3) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix cannot hold {m3} uniform diagonal blocks",
            m.nrows(),
            m.ncols()
        )));
    }
    let (m1, m2) = (m.nrows() / m3, m.ncols() / m3);
    let mut mass = 0.0_f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r / m1 != c / m2 {
                mass = mass.max(m[(r, c)].abs());
            }
        }
    }
    if mass > 1e-10 {
        return Err(Error::NotBlockDiagonal { mass });
    }
    Ok(Tensor3::from_fn(m1, m2, m3, |i, j, k| {
        m[(k * m1 + i, k * m2 + j)]
    }))
}

/// Kronecker product of a transform matrix with `I_m`.
fn kron_identity<T: ComplexField + Copy>(c: &DMatrix<T>, m: usize) -> DMatrix<T> {
    let mut out = DMatrix::zeros(c.nrows() * m, c.ncols() * m);
    for r in 0..c.nrows() {
        for q in 0..c.ncols() {
            for i in 0..m {
                out[(r * m + i, q * m + i)] = c[(r, q)];
            }
        }
    }
    out
}

/// Max-abs residuals of the two block diagonalization identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalizationResidual {
    /// `bdiag(dct_diag(X)) - (C ⊗ I) btph(A) (Cᵀ ⊗ I)`
    pub dct: f64,
    /// `bdiag(fft(X)) - (F ⊗ I) bcirc(X) (Fᴴ ⊗ I)` with unitary `F`
    pub dft: f64,
}

impl DiagonalizationResidual {
    pub fn max(&self) -> f64 {
        self.dct.max(self.dft)
    }
}

pub fn verify_diagonalization(x: &Tensor3) -> Result<DiagonalizationResidual> {
    let [m1, m2, m3] = x.dims();
    if m1 * m3 > MAX_DENSE_SIDE || m2 * m3 > MAX_DENSE_SIDE {
        return Err(Error::TooLarge(format!(
            "dense check needs m*m3 <= {MAX_DENSE_SIDE}, got {}x{}x{}",
            m1, m2, m3
        )));
    }

    let c = dct_matrix(m3)?;
    let a = shift_decompose(x).a;
    let lhs = bdiag(&TubeTransform::new(TransformKind::DctDiag, m3)?.forward_real(x)?);
    let rhs = kron_identity(&c, m1) * btph(&a) * kron_identity(&c.transpose(), m2);
    let dct = (lhs - rhs).amax();

    let f = dft_matrix(m3, true)?;
    let xt = TubeTransform::new(TransformKind::Dft, m3)?.forward_complex(x)?;
    let lhs = bdiag_complex(&xt);
    let circ = bcirc(x).map(|v| Complex64::new(v, 0.0));
    let rhs = kron_identity(&f, m1) * circ * kron_identity(&f.adjoint(), m2);
    let dft = (lhs - rhs).iter().fold(0.0_f64, |m, z| m.max(z.norm()));

    Ok(DiagonalizationResidual { dct, dft })
}

/// Stride permutation taking block-major index `k * block + i` to tube-major
/// index `i * m3 + k`. `P * M * Qᵀ` (with `Q` built for the column block size)
/// gathers the entries of each tube into contiguous `m3 x m3` blocks.
pub fn stride_permutation(m3: usize, block: usize) -> DMatrix<f64> {
    let n = m3 * block;
    let mut p = DMatrix::zeros(n, n);
    for k in 0..m3 {
        for i in 0..block {
            p[(i * m3 + k, k * block + i)] = 1.0;
        }
    }
    p
}

/// `fold(btph(A) unfold(Y))`, the cosine t-product computed densely.
pub fn btph_product(x: &Tensor3, y: &Tensor3) -> Result<Tensor3> {
    dense_product(&btph(&shift_decompose(x).a), x, y)
}

/// `fold(bcirc(X) unfold(Y))`, the Fourier t-product computed densely.
pub fn bcirc_product(x: &Tensor3, y: &Tensor3) -> Result<Tensor3> {
    dense_product(&bcirc(x), x, y)
}

fn dense_product(block: &DMatrix<f64>, x: &Tensor3, y: &Tensor3) -> Result<Tensor3> {
    let [_, m2, m3] = x.dims();
    let [n2, _, n3] = y.dims();
    if m2 != n2 || m3 != n3 {
        return Err(Error::ShapeMismatch(format!(
            "cannot multiply {:?} by {:?}",
            x.dims(),
            y.dims()
        )));
    }
    let z = block * y.unfold().to_matrix();
    BlockVector::from_matrix(&z, m3)?.fold()
}
