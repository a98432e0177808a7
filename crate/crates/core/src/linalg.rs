//! Per-slice dense SVD helpers shared by the t-SVD, the prox, and rank queries.

use nalgebra::{ComplexField, DMatrix, QR};

use crate::error::{Error, Result};

/// Singular triplets of one transform-domain slice.
#[derive(Debug, Clone)]
pub(crate) struct SliceSvd<T: ComplexField> {
    /// `m x r` (thin) or `m x m` (full)
    pub u: DMatrix<T>,
    /// `min(m, n)` values, descending
    pub s: Vec<f64>,
    /// `n x r` (thin) or `n x n` (full)
    pub v: DMatrix<T>,
}

fn iteration_budget(m: usize, n: usize) -> usize {
    10_000 + 1_000 * m.min(n)
}

/// Thin SVD `a = u diag(s) vᴴ` with the sign convention applied: the
/// largest-magnitude entry of each column of `u` is real and positive.
pub(crate) fn thin_svd<T>(a: DMatrix<T>, slice: usize) -> Result<SliceSvd<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    if a.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite entry in transform-domain slice {slice}"
        )));
    }
    let svd = a
        .try_svd(true, true, f64::EPSILON, iteration_budget(m, n))
        .ok_or(Error::SvdNotConverged { slice })?;
    let mut u = svd.u.expect("u requested");
    let mut v = svd.v_t.expect("v requested").adjoint();
    normalize_phases(&mut u, &mut v);
    Ok(SliceSvd {
        u,
        s: svd.singular_values.iter().copied().collect(),
        v,
    })
}

/// Singular values only, descending.
pub(crate) fn singular_values<T>(a: DMatrix<T>, slice: usize) -> Result<Vec<f64>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    let svd = a
        .try_svd(false, false, f64::EPSILON, iteration_budget(m, n))
        .ok_or(Error::SvdNotConverged { slice })?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Full SVD with square `u` (`m x m`) and `v` (`n x n`).
pub(crate) fn full_svd<T>(a: DMatrix<T>, slice: usize) -> Result<SliceSvd<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    let thin = thin_svd(a, slice)?;
    let mut u = complete_basis(&thin.u, m);
    let mut v = complete_basis(&thin.v, n);
    let r = thin.s.len();
    // Only the completion columns still need the sign convention.
    normalize_tail(&mut u, r);
    normalize_tail(&mut v, r);
    Ok(SliceSvd { u, s: thin.s, v })
}

fn column_phase<T>(m: &DMatrix<T>, c: usize) -> Option<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let col = m.column(c);
    let (mut best, mut best_abs) = (0, -1.0);
    for (i, z) in col.iter().enumerate() {
        let a = z.modulus();
        if a > best_abs {
            best = i;
            best_abs = a;
        }
    }
    (best_abs > 0.0).then(|| {
        let z = col[best];
        (z / T::from_real(best_abs)).conjugate()
    })
}

fn normalize_phases<T>(u: &mut DMatrix<T>, v: &mut DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    for c in 0..u.ncols() {
        if let Some(p) = column_phase(u, c) {
            scale_column(u, c, p);
            scale_column(v, c, p);
        }
    }
}

fn normalize_tail<T>(m: &mut DMatrix<T>, from: usize)
where
    T: ComplexField<RealField = f64> + Copy,
{
    for c in from..m.ncols() {
        if let Some(p) = column_phase(m, c) {
            scale_column(m, c, p);
        }
    }
}

fn scale_column<T: ComplexField + Copy>(m: &mut DMatrix<T>, c: usize, p: T) {
    for z in m.column_mut(c).iter_mut() {
        *z *= p;
    }
}

/// Extends the orthonormal columns of `q` (`m x k`) to an `m x m` unitary matrix.
fn complete_basis<T>(q: &DMatrix<T>, m: usize) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let k = q.ncols();
    if k >= m {
        return q.clone();
    }
    let mut aug = DMatrix::<T>::zeros(m, k + m);
    aug.view_mut((0, 0), (m, k)).copy_from(q);
    for i in 0..m {
        aug[(i, k + i)] = T::one();
    }
    let mut full = QR::new(aug).q();
    full.view_mut((0, 0), (m, k)).copy_from(q);
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sample(m: usize, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |i, j| {
            ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * i as f64
        })
    }

    #[test]
    fn full_factors_are_square_and_orthogonal() {
        for (m, n) in [(5, 3), (3, 5), (4, 4), (1, 3), (3, 1)] {
            let a = sample(m, n);
            let f = full_svd(a.clone(), 0).unwrap();
            assert_eq!(f.u.shape(), (m, m));
            assert_eq!(f.v.shape(), (n, n));
            assert!((f.u.transpose() * &f.u - DMatrix::identity(m, m)).amax() < 1e-12);
            assert!((f.v.transpose() * &f.v - DMatrix::identity(n, n)).amax() < 1e-12);
            let mut s = DMatrix::zeros(m, n);
            for (i, v) in f.s.iter().enumerate() {
                s[(i, i)] = *v;
            }
            assert!((&f.u * s * f.v.transpose() - a).amax() < 1e-12);
            assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn sign_convention() {
        let f = thin_svd(sample(4, 3), 0).unwrap();
        for c in 0..f.u.ncols() {
            let col = f.u.column(c);
            let big = col
                .iter()
                .copied()
                .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn complex_full_svd() {
        let a = DMatrix::from_fn(3, 4, |i, j| {
            Complex64::new(i as f64 - j as f64, (i * j) as f64 * 0.5)
        });
        let f = full_svd(a.clone(), 0).unwrap();
        assert!((f.u.adjoint() * &f.u - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((f.v.adjoint() * &f.v - DMatrix::identity(4, 4)).norm() < 1e-12);
        let mut s = DMatrix::<Complex64>::zeros(3, 4);
        for (i, v) in f.s.iter().enumerate() {
            s[(i, i)] = Complex64::new(*v, 0.0);
        }
        let back = &f.u * s * f.v.adjoint();
        assert!((back - a).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn zero_matrix() {
        let f = full_svd(DMatrix::<f64>::zeros(3, 2), 0).unwrap();
        assert!(f.s.iter().all(|&v| v == 0.0));
        assert!((f.u.transpose() * &f.u - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn nan_is_reported() {
        let mut a = sample(3, 3);
        a[(1, 1)] = f64::NAN;
        assert!(matches!(thin_svd(a, 4), Err(Error::Numerical(_))));
    }
}
