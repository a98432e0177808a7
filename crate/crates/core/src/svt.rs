//! Tensor singular value thresholding, the proximal operator of the tensor
//! nuclear norm.
//!
//! With the orthonormal DCT, `svt(z, tau)` is the exact minimizer of
//! `tnn(y) + ||y - z||_F^2 / (2 tau)`. With the DFT the same per-slice
//! threshold `tau` gives the exact prox of the `1/m3`-scaled Fourier norm,
//! because the unnormalized DFT scales squared Frobenius norms by `m3`.

use std::time::Instant;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::tensor::Tensor3;
use crate::transform::{ComplexTensor3, TransformKind, TubeTransform};
use crate::tsvd::{distinct_slices, self_conjugate, tnn, StageTimes};

#[derive(Debug, Clone)]
pub struct SvtResult {
    pub y: Tensor3,
    pub threshold: f64,
    /// `(sigma - threshold)+` for every transform-domain slice, descending.
    pub shrunk: Vec<Vec<f64>>,
    pub kind: TransformKind,
}

impl SvtResult {
    /// Tensor nuclear norm of `y`, read off the shrunk singular values.
    pub fn nuclear_norm(&self) -> f64 {
        let sum: f64 = self.shrunk.iter().flatten().sum();
        match self.kind {
            TransformKind::Dft => sum / self.shrunk.len().max(1) as f64,
            _ => sum,
        }
    }
}

fn shrink_slice<T>(a: DMatrix<T>, tau: f64, slice: usize) -> Result<(DMatrix<T>, Vec<f64>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    if a.iter().all(|z| z.is_zero()) {
        return Ok((a, vec![0.0; m.min(n)]));
    }
    let f = thin_svd(a, slice)?;
    let shrunk: Vec<f64> = f.s.iter().map(|s| (s - tau).max(0.0)).collect();
    let keep = shrunk.iter().take_while(|&&d| d > 0.0).count();
    let mut out = DMatrix::<T>::zeros(m, n);
    if keep > 0 {
        let mut ud = f.u.columns(0, keep).into_owned();
        for (c, d) in shrunk.iter().take(keep).enumerate() {
            for z in ud.column_mut(c).iter_mut() {
                *z *= T::from_real(*d);
            }
        }
        out = ud * f.v.columns(0, keep).adjoint();
    }
    Ok((out, shrunk))
}

/// Soft-thresholds the transform-domain singular values of `z` by `tau`.
pub fn svt(z: &Tensor3, tau: f64, t: &TubeTransform) -> Result<SvtResult> {
    svt_timed(z, tau, t, &mut StageTimes::default())
}

pub(crate) fn svt_timed(
    z: &Tensor3,
    tau: f64,
    t: &TubeTransform,
    times: &mut StageTimes,
) -> Result<SvtResult> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold must be positive and finite, got {tau}"
        )));
    }
    let start = Instant::now();
    let [m1, m2, m3] = z.dims();

    let (y, shrunk) = match t.kind() {
        TransformKind::Dft => {
            let clock = Instant::now();
            let zt = t.forward_complex(z)?;
            times.add_transform(clock.elapsed());

            let clock = Instant::now();
            let half: Vec<(DMatrix<Complex64>, Vec<f64>)> = (0..distinct_slices(t.kind(), m3))
                .into_par_iter()
                .map(|k| {
                    let slice = zt.frontal_slice(k)?;
                    if self_conjugate(k, m3) {
                        let (d, s) = shrink_slice(slice.map(|v| v.re), tau, k)?;
                        Ok((d.map(|v| Complex64::new(v, 0.0)), s))
                    } else {
                        shrink_slice(slice, tau, k)
                    }
                })
                .collect::<Result<_>>()?;
            let mut yt = ComplexTensor3::zeros(m1, m2, m3);
            let mut shrunk = vec![Vec::new(); m3];
            for (k, (d, s)) in half.into_iter().enumerate() {
                let mirror = (m3 - k) % m3;
                if mirror != k {
                    yt.set_frontal_slice(mirror, &d.map(|v| v.conj()))?;
                    shrunk[mirror] = s.clone();
                }
                yt.set_frontal_slice(k, &d)?;
                shrunk[k] = s;
            }
            times.add_svd(clock.elapsed());

            let clock = Instant::now();
            let y = t.inverse_complex(&yt)?;
            times.add_transform(clock.elapsed());
            (y, shrunk)
        }
        _ => {
            let clock = Instant::now();
            let zb = t.forward_real(z)?;
            times.add_transform(clock.elapsed());

            let clock = Instant::now();
            let slices: Vec<(DMatrix<f64>, Vec<f64>)> = (0..m3)
                .into_par_iter()
                .map(|k| shrink_slice(zb.frontal_slice(k)?, tau, k))
                .collect::<Result<_>>()?;
            let mut yb = Tensor3::zeros(m1, m2, m3);
            let mut shrunk = Vec::with_capacity(m3);
            for (k, (d, s)) in slices.into_iter().enumerate() {
                yb.set_frontal_slice(k, &d)?;
                shrunk.push(s);
            }
            times.add_svd(clock.elapsed());

            let clock = Instant::now();
            let y = t.inverse_real(&yb)?;
            times.add_transform(clock.elapsed());
            (y, shrunk)
        }
    };
    times.total += start.elapsed().as_secs_f64();
    Ok(SvtResult {
        y,
        threshold: tau,
        shrunk,
        kind: t.kind(),
    })
}

/// `tnn(y) + ||y - z||_F^2 / (2 tau)`.
pub fn prox_objective(y: &Tensor3, z: &Tensor3, tau: f64, t: &TubeTransform) -> Result<f64> {
    let fit = y.zip_map(z, |a, b| a - b)?.norm_squared();
    Ok(tnn(y, t)? + fit / (2.0 * tau))
}

/// Objective of `candidate` minus the objective of `svt(z, tau)`. Nonnegative
/// (up to rounding) for every candidate when `svt` is the exact prox.
pub fn prox_objective_gap(
    z: &Tensor3,
    tau: f64,
    candidate: &Tensor3,
    t: &TubeTransform,
) -> Result<f64> {
    if z.dims() != candidate.dims() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            z.dims(),
            candidate.dims()
        )));
    }
    let best = svt(z, tau, t)?;
    Ok(prox_objective(candidate, z, tau, t)? - prox_objective(&best.y, z, tau, t)?)
}
