//! Transform-domain tensor algebra: t-product, t-SVD, ranks and nuclear norms.
//!
//! Every operation maps tubes into the transform domain, works on frontal
//! slices independently, and maps back. For the DFT only slices
//! `0..=m3/2` are factored; the remaining ones are complex conjugates of
//! their mirrors `m3 - k`, which halves the number of complex SVDs.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{full_svd, singular_values, SliceSvd};
use crate::tensor::Tensor3;
use crate::transform::{ComplexTensor3, Spectrum, TransformKind, TubeTransform};

/// Slices that must be factored for a spectrum of length `m3`.
pub(crate) fn distinct_slices(kind: TransformKind, m3: usize) -> usize {
    match kind {
        TransformKind::Dft => m3 / 2 + 1,
        _ => m3,
    }
}

/// Whether DFT slice `k` equals its own conjugate (and so is real).
pub(crate) fn self_conjugate(k: usize, m3: usize) -> bool {
    k == 0 || 2 * k == m3
}

fn transform_for(x: &Tensor3, t: &TubeTransform) -> Result<()> {
    if x.dims()[2] != t.len() {
        return Err(Error::ShapeMismatch(format!(
            "transform length {} does not match tube length {}",
            t.len(),
            x.dims()[2]
        )));
    }
    Ok(())
}

/// Tensor transpose compatible with the t-product of `kind`.
///
/// For the cosine transforms this transposes every frontal slice. For the DFT
/// it also reverses slices `1..m3`, so that each Fourier-domain slice is
/// conjugate-transposed.
pub fn t_transpose(x: &Tensor3, kind: TransformKind) -> Tensor3 {
    let [m1, m2, m3] = x.dims();
    match kind {
        TransformKind::Dft => Tensor3::from_fn(m2, m1, m3, |i, j, k| x.get(j, i, (m3 - k) % m3)),
        _ => x.transpose_slices(),
    }
}

/// Identity element of the t-product under `t`: the inverse transform of a
/// spectrum whose slices all equal `I_n`. For [`TransformKind::DctDiag`] and
/// [`TransformKind::Dft`] this is the tensor with first slice `I_n` and all
/// other slices zero.
pub fn identity_tensor(n: usize, t: &TubeTransform) -> Result<Tensor3> {
    let m3 = t.len();
    match t.kind() {
        TransformKind::DctOrtho => {
            let spectrum = Tensor3::from_fn(n, n, m3, |i, j, _| if i == j { 1.0 } else { 0.0 });
            t.inverse_real(&spectrum)
        }
        _ => Ok(Tensor3::identity(n, m3)),
    }
}

/// `x * y` under the t-product defined by `t`: slice-wise matrix products in
/// the transform domain.
pub fn t_product(x: &Tensor3, y: &Tensor3, t: &TubeTransform) -> Result<Tensor3> {
    let [m1, m2, m3] = x.dims();
    let [n2, m4, n3] = y.dims();
    if m2 != n2 || m3 != n3 {
        return Err(Error::ShapeMismatch(format!(
            "cannot t-multiply {:?} by {:?}",
            x.dims(),
            y.dims()
        )));
    }
    transform_for(x, t)?;
    match t.kind() {
        TransformKind::Dft => {
            let xt = t.forward_complex(x)?;
            let yt = t.forward_complex(y)?;
            let mut zt = ComplexTensor3::zeros(m1, m4, m3);
            for k in 0..distinct_slices(t.kind(), m3) {
                let z = xt.frontal_slice(k)? * yt.frontal_slice(k)?;
                zt.set_frontal_slice(k, &z)?;
                let mirror = (m3 - k) % m3;
                if mirror != k {
                    zt.set_frontal_slice(mirror, &z.map(|v| v.conj()))?;
                }
            }
            t.inverse_complex(&zt)
        }
        _ => {
            let xb = t.forward_real(x)?;
            let yb = t.forward_real(y)?;
            let mut zb = Tensor3::zeros(m1, m4, m3);
            for k in 0..m3 {
                zb.set_frontal_slice(k, &(xb.frontal_slice(k)? * yb.frontal_slice(k)?))?;
            }
            t.inverse_real(&zb)
        }
    }
}

/// `U * S * Vᵀ` factorization produced by [`t_svd`].
#[derive(Debug, Clone)]
pub struct TSvdFactors {
    /// `m1 x m1 x m3`, orthogonal
    pub u: Tensor3,
    /// `m1 x m2 x m3`, f-diagonal in the transform domain
    pub s: Tensor3,
    /// `m2 x m2 x m3`, orthogonal
    pub v: Tensor3,
    pub transform: TubeTransform,
}

impl TSvdFactors {
    /// Recomputes `U * S * Vᵀ`.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        let us = t_product(&self.u, &self.s, &self.transform)?;
        t_product(
            &us,
            &t_transpose(&self.v, self.transform.kind()),
            &self.transform,
        )
    }

    /// Transform-domain singular values, one descending list per slice.
    pub fn singular_values(&self) -> Result<Vec<Vec<f64>>> {
        let [m1, m2, m3] = self.s.dims();
        let r = m1.min(m2);
        Ok(match self.transform.forward(&self.s)? {
            Spectrum::Real(sb) => (0..m3)
                .map(|k| (0..r).map(|i| sb.get(i, i, k)).collect())
                .collect(),
            Spectrum::Complex(st) => (0..m3)
                .map(|k| (0..r).map(|i| st.get(i, i, k).re).collect())
                .collect(),
        })
    }
}

/// Wall-clock split of a t-SVD.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimes {
    /// Forward and inverse tube transforms, in seconds
    pub transform: f64,
    /// Slice SVDs, in seconds
    pub svd: f64,
    pub total: f64,
}

impl StageTimes {
    pub(crate) fn add_transform(&mut self, d: Duration) {
        self.transform += d.as_secs_f64();
    }

    pub(crate) fn add_svd(&mut self, d: Duration) {
        self.svd += d.as_secs_f64();
    }

    pub fn accumulate(&mut self, other: &StageTimes) {
        self.transform += other.transform;
        self.svd += other.svd;
        self.total += other.total;
    }
}

pub fn t_svd(x: &Tensor3, t: &TubeTransform) -> Result<TSvdFactors> {
    t_svd_timed(x, t).map(|(f, _)| f)
}

/// [`t_svd`] that also reports how long the transform and SVD stages took.
pub fn t_svd_timed(x: &Tensor3, t: &TubeTransform) -> Result<(TSvdFactors, StageTimes)> {
    transform_for(x, t)?;
    let start = Instant::now();
    let mut times = StageTimes::default();
    let [m1, m2, m3] = x.dims();

    let factors = match t.kind() {
        TransformKind::Dft => {
            let clock = Instant::now();
            let xt = t.forward_complex(x)?;
            times.add_transform(clock.elapsed());

            let clock = Instant::now();
            let count = distinct_slices(t.kind(), m3);
            let svds: Vec<SliceSvd<Complex64>> = (0..count)
                .into_par_iter()
                .map(|k| {
                    let slice = xt.frontal_slice(k)?;
                    if self_conjugate(k, m3) {
                        let real = full_svd(slice.map(|z| z.re), k)?;
                        Ok(SliceSvd {
                            u: real.u.map(|v| Complex64::new(v, 0.0)),
                            s: real.s,
                            v: real.v.map(|v| Complex64::new(v, 0.0)),
                        })
                    } else {
                        full_svd(slice, k)
                    }
                })
                .collect::<Result<_>>()?;
            let mut ut = ComplexTensor3::zeros(m1, m1, m3);
            let mut st = ComplexTensor3::zeros(m1, m2, m3);
            let mut vt = ComplexTensor3::zeros(m2, m2, m3);
            for (k, f) in svds.iter().enumerate() {
                let mut s = DMatrix::<Complex64>::zeros(m1, m2);
                for (i, sv) in f.s.iter().enumerate() {
                    s[(i, i)] = Complex64::new(*sv, 0.0);
                }
                ut.set_frontal_slice(k, &f.u)?;
                st.set_frontal_slice(k, &s)?;
                vt.set_frontal_slice(k, &f.v)?;
                let mirror = (m3 - k) % m3;
                if mirror != k {
                    ut.set_frontal_slice(mirror, &f.u.map(|z| z.conj()))?;
                    st.set_frontal_slice(mirror, &s)?;
                    vt.set_frontal_slice(mirror, &f.v.map(|z| z.conj()))?;
                }
            }
            times.add_svd(clock.elapsed());

            let clock = Instant::now();
            let factors = TSvdFactors {
                u: t.inverse_complex(&ut)?,
                s: t.inverse_complex(&st)?,
                v: t.inverse_complex(&vt)?,
                transform: *t,
            };
            times.add_transform(clock.elapsed());
            factors
        }
        _ => {
            let clock = Instant::now();
            let xb = t.forward_real(x)?;
            times.add_transform(clock.elapsed());

            let clock = Instant::now();
            let svds: Vec<SliceSvd<f64>> = (0..m3)
                .into_par_iter()
                .map(|k| full_svd(xb.frontal_slice(k)?, k))
                .collect::<Result<_>>()?;
            let mut ub = Tensor3::zeros(m1, m1, m3);
            let mut sb = Tensor3::zeros(m1, m2, m3);
            let mut vb = Tensor3::zeros(m2, m2, m3);
            for (k, f) in svds.iter().enumerate() {
                ub.set_frontal_slice(k, &f.u)?;
                vb.set_frontal_slice(k, &f.v)?;
                for (i, sv) in f.s.iter().enumerate() {
                    sb.set(i, i, k, *sv);
                }
            }
            times.add_svd(clock.elapsed());

            let clock = Instant::now();
            let factors = TSvdFactors {
                u: t.inverse_real(&ub)?,
                s: t.inverse_real(&sb)?,
                v: t.inverse_real(&vb)?,
                transform: *t,
            };
            times.add_transform(clock.elapsed());
            factors
        }
    };
    times.total = start.elapsed().as_secs_f64();
    Ok((factors, times))
}

/// Singular values of every transform-domain slice (descending), `m3` lists.
pub fn spectral_singular_values(x: &Tensor3, t: &TubeTransform) -> Result<Vec<Vec<f64>>> {
    transform_for(x, t)?;
    let m3 = x.dims()[2];
    match t.forward(x)? {
        Spectrum::Real(xb) => (0..m3)
            .into_par_iter()
            .map(|k| singular_values(xb.frontal_slice(k)?, k))
            .collect(),
        Spectrum::Complex(xt) => {
            let half: Vec<Vec<f64>> = (0..distinct_slices(t.kind(), m3))
                .into_par_iter()
                .map(|k| singular_values(xt.frontal_slice(k)?, k))
                .collect::<Result<_>>()?;
            Ok((0..m3).map(|k| half[k.min(m3 - k)].clone()).collect())
        }
    }
}

/// Per-slice ranks in the transform domain and their maximum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiRank {
    pub ranks: Vec<usize>,
    pub tubal_rank: usize,
}

/// Default relative rank tolerance: `max(m1, m2) * 2^-52`.
pub fn default_rank_tol(dims: [usize; 3]) -> f64 {
    dims[0].max(dims[1]) as f64 * f64::EPSILON
}

/// Counts, per transform-domain slice, the singular values above
/// `tol * sigma_max(slice)`.
pub fn multi_rank(x: &Tensor3, t: &TubeTransform, tol: f64) -> Result<MultiRank> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must be nonnegative, got {tol}"
        )));
    }
    let ranks: Vec<usize> = spectral_singular_values(x, t)?
        .iter()
        .map(|s| {
            let cutoff = tol * s.first().copied().unwrap_or(0.0);
            s.iter().filter(|&&v| v > cutoff).count()
        })
        .collect();
    let tubal_rank = ranks.iter().copied().max().unwrap_or(0);
    Ok(MultiRank { ranks, tubal_rank })
}

/// Tensor nuclear norm. Cosine kinds: sum of the nuclear norms of the
/// transform-domain slices. DFT: the same sum divided by `m3`.
pub fn tnn(x: &Tensor3, t: &TubeTransform) -> Result<f64> {
    let sum: f64 = spectral_singular_values(x, t)?
        .iter()
        .map(|s| s.iter().sum::<f64>())
        .sum();
    Ok(match t.kind() {
        TransformKind::Dft => sum / x.dims()[2] as f64,
        _ => sum,
    })
}

/// Whether every transform-domain slice of `q` is orthogonal (unitary) to
/// within `tol` in max-abs deviation from the identity.
pub fn is_orthogonal(q: &Tensor3, t: &TubeTransform, tol: f64) -> Result<bool> {
    let [m1, m2, m3] = q.dims();
    if m1 != m2 {
        return Err(Error::ShapeMismatch(format!(
            "orthogonality needs square slices, got {m1}x{m2}"
        )));
    }
    transform_for(q, t)?;
    let deviation = match t.forward(q)? {
        Spectrum::Real(qb) => (0..m3)
            .map(|k| {
                let s = qb.frontal_slice(k).expect("in range");
                let id = DMatrix::<f64>::identity(m1, m1);
                (s.transpose() * &s - &id)
                    .amax()
                    .max((&s * s.transpose() - id).amax())
            })
            .fold(0.0_f64, f64::max),
        Spectrum::Complex(qt) => (0..m3)
            .map(|k| {
                let s = qt.frontal_slice(k).expect("in range");
                let id = DMatrix::<Complex64>::identity(m1, m1);
                let a = s.adjoint() * &s - &id;
                let b = &s * s.adjoint() - id;
                a.iter()
                    .chain(b.iter())
                    .fold(0.0_f64, |m, z| m.max(z.norm()))
            })
            .fold(0.0_f64, f64::max),
    };
    Ok(deviation <= tol)
}

/// Whether every transform-domain slice of `s` is diagonal to within `tol`.
pub fn is_f_diagonal(s: &Tensor3, t: &TubeTransform, tol: f64) -> Result<bool> {
    transform_for(s, t)?;
    let [m1, m2, m3] = s.dims();
    let off = |f: &dyn Fn(usize, usize, usize) -> f64| {
        let mut worst = 0.0_f64;
        for k in 0..m3 {
            for i in 0..m1 {
                for j in 0..m2 {
                    if i != j {
                        worst = worst.max(f(i, j, k));
                    }
                }
            }
        }
        worst
    };
    let worst = match t.forward(s)? {
        Spectrum::Real(sb) => off(&|i, j, k| sb.get(i, j, k).abs()),
        Spectrum::Complex(st) => off(&|i, j, k| st.get(i, j, k).norm()),
    };
    Ok(worst <= tol)
}
