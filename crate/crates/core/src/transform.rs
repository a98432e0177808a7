//! Invertible transforms applied along every tube (mode-3 fiber) of a tensor.
//!
//! Three kinds are provided:
//!
//! * [`TransformKind::DctOrtho`]: the orthonormal DCT-II. Preserves the
//!   Frobenius norm, so singular value thresholding in this domain is the exact
//!   proximal operator of the cosine tensor nuclear norm. Used by the
//!   completion solver.
//! * [`TransformKind::DctDiag`]: the orthonormal DCT-II divided elementwise by
//!   `w = C e1`. These are the eigenvalues of the block Toeplitz-plus-Hankel
//!   matrix, so the t-product and the identity tensor (first slice `I`, the
//!   rest zero) take their classical form.
//! * [`TransformKind::Dft`]: the unnormalized DFT, the classical t-SVD
//!   baseline. Produces complex spectra.
//!
//! The DCT is computed in `O(n log n)` with a single length-`n` complex FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Absolute imaginary residue tolerated when an inverse DFT must yield a real
/// tensor. Scaled by the magnitude of the result when that exceeds one.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    DctOrtho,
    DctDiag,
    Dft,
}

impl TransformKind {
    pub fn is_real(self) -> bool {
        !matches!(self, TransformKind::Dft)
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::DctOrtho => "dct-ortho",
            TransformKind::DctDiag => "dct-diag",
            TransformKind::Dft => "dft",
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dct-ortho" | "dct" => Ok(TransformKind::DctOrtho),
            "dct-diag" => Ok(TransformKind::DctDiag),
            "dft" | "fft" => Ok(TransformKind::Dft),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform '{other}' (expected dct, dct-diag or dft)"
            ))),
        }
    }
}

/// A transform kind bound to a tube length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TubeTransform {
    kind: TransformKind,
    len: usize,
}

/// Complex tensor with the same slice-major layout as [`Tensor3`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor3 {
    dims: [usize; 3],
    data: Vec<Complex64>,
}

/// Transform-domain representation: real for the DCT kinds, complex for the DFT.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    Real(Tensor3),
    Complex(ComplexTensor3),
}

impl ComplexTensor3 {
    pub fn zeros(m1: usize, m2: usize, m3: usize) -> Self {
        Self {
            dims: [m1, m2, m3],
            data: vec![Complex64::new(0.0, 0.0); m1 * m2 * m3],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::ShapeMismatch(format!(
                "{dims:?} tensor needs {} values, got {}",
                dims[0] * dims[1] * dims[2],
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[(k * self.dims[0] + i) * self.dims[1] + j]
    }

    pub fn slice_data(&self, k: usize) -> &[Complex64] {
        let n = self.dims[0] * self.dims[1];
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slice_data_mut(&mut self, k: usize) -> &mut [Complex64] {
        let n = self.dims[0] * self.dims[1];
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn frontal_slice(&self, k: usize) -> Result<DMatrix<Complex64>> {
        if k >= self.dims[2] {
            return Err(Error::IndexOutOfRange {
                what: "frontal slice",
                index: k,
                size: self.dims[2],
            });
        }
        Ok(DMatrix::from_row_slice(
            self.dims[0],
            self.dims[1],
            self.slice_data(k),
        ))
    }

    pub fn set_frontal_slice(&mut self, k: usize, m: &DMatrix<Complex64>) -> Result<()> {
        if k >= self.dims[2] {
            return Err(Error::IndexOutOfRange {
                what: "frontal slice",
                index: k,
                size: self.dims[2],
            });
        }
        if m.shape() != (self.dims[0], self.dims[1]) {
            return Err(Error::ShapeMismatch(format!(
                "slice must be {}x{}, got {}x{}",
                self.dims[0],
                self.dims[1],
                m.nrows(),
                m.ncols()
            )));
        }
        let m2 = self.dims[1];
        for (idx, v) in self.slice_data_mut(k).iter_mut().enumerate() {
            *v = m[(idx / m2, idx % m2)];
        }
        Ok(())
    }

    /// Largest deviation from the symmetry `slice[k] == conj(slice[(m3 - k) % m3])`
    /// that the DFT of a real tensor satisfies.
    pub fn conjugate_symmetry_residue(&self) -> f64 {
        let m3 = self.dims[2];
        let mut worst = 0.0_f64;
        for k in 0..m3 {
            let mirror = (m3 - k) % m3;
            for (a, b) in self.slice_data(k).iter().zip(self.slice_data(mirror)) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Spectrum {
    pub fn dims(&self) -> [usize; 3] {
        match self {
            Spectrum::Real(t) => t.dims(),
            Spectrum::Complex(c) => c.dims(),
        }
    }
}

/// Orthonormal DCT-II matrix: `C[j,k] = sqrt(2/n) c_j cos(pi j (2k+1) / (2n))`,
/// `c_0 = 1/sqrt(2)`, `c_j = 1` otherwise.
pub fn dct_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("DCT size must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(DMatrix::from_fn(n, n, |j, k| {
        let scale = if j == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        scale * (PI * j as f64 * (2 * k + 1) as f64 / (2.0 * nf)).cos()
    }))
}

/// DFT matrix `F[j,k] = exp(-2 pi i j k / n)`, optionally scaled by `1/sqrt(n)`
/// to make it unitary.
pub fn dft_matrix(n: usize, unitary: bool) -> Result<DMatrix<Complex64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("DFT size must be at least 1".into()));
    }
    let scale = if unitary {
        1.0 / (n as f64).sqrt()
    } else {
        1.0
    };
    Ok(DMatrix::from_fn(n, n, |j, k| {
        let phase = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    }))
}

/// The orthonormal DCT of `e1`, i.e. the first column of [`dct_matrix`].
/// Every entry is strictly positive.
pub fn dct_diag_weights(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            scale * (PI * k as f64 / (2.0 * nf)).cos()
        })
        .collect()
}

/// Returns `(||x||_F, ||dct_ortho(x)||_F)`; the two agree by Parseval.
pub fn parseval_check(x: &Tensor3) -> (f64, f64) {
    let t = TubeTransform {
        kind: TransformKind::DctOrtho,
        len: x.dims()[2],
    };
    let xbar = t
        .forward_real(x)
        .expect("transform length matches by construction");
    (x.frobenius_norm(), xbar.frobenius_norm())
}

/// DCT-II / DCT-III of a single length-`n` sequence via one complex FFT.
struct DctPlan {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `exp(-i pi k / (2n))`
    twiddle: Vec<Complex64>,
    /// Orthonormal scale factors `sqrt(1/n)`, `sqrt(2/n)`, ...
    scale: Vec<f64>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl DctPlan {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let nf = n as f64;
        Self {
            n,
            fwd,
            inv,
            twiddle: (0..n)
                .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * nf)))
                .collect(),
            scale: (0..n)
                .map(|k| {
                    if k == 0 {
                        (1.0 / nf).sqrt()
                    } else {
                        (2.0 / nf).sqrt()
                    }
                })
                .collect(),
            buf: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// Orthonormal DCT-II in place.
    fn forward(&mut self, x: &mut [f64]) {
        let n = self.n;
        for m in 0..n.div_ceil(2) {
            self.buf[m] = Complex64::new(x[2 * m], 0.0);
        }
        for m in 0..n / 2 {
            self.buf[n - 1 - m] = Complex64::new(x[2 * m + 1], 0.0);
        }
        self.fwd
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for (k, v) in x.iter_mut().enumerate().take(n) {
            *v = (self.buf[k] * self.twiddle[k]).re * self.scale[k];
        }
    }

    /// Orthonormal DCT-III (inverse of [`DctPlan::forward`]) in place.
    fn inverse(&mut self, y: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let yk = y[k] / self.scale[k];
            let ynk = if k == 0 {
                0.0
            } else {
                y[n - k] / self.scale[n - k]
            };
            self.buf[k] = self.twiddle[k].conj() * Complex64::new(yk, -ynk);
        }
        self.inv
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let nf = n as f64;
        for m in 0..n.div_ceil(2) {
            y[2 * m] = self.buf[m].re / nf;
        }
        for m in 0..n / 2 {
            y[2 * m + 1] = self.buf[n - 1 - m].re / nf;
        }
    }
}

/// Copies every tube into a contiguous row of a `(m1*m2) x m3` buffer.
fn gather_tubes<T: Copy>(data: &[T], plane: usize, m3: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(data.len());
    for p in 0..plane {
        for k in 0..m3 {
            out.push(data[k * plane + p]);
        }
    }
    out
}

fn scatter_tubes<T: Copy>(tubes: &[T], out: &mut [T], plane: usize, m3: usize) {
    for p in 0..plane {
        for k in 0..m3 {
            out[k * plane + p] = tubes[p * m3 + k];
        }
    }
}

impl TubeTransform {
    pub fn new(kind: TransformKind, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidArgument(
                "tube length must be at least 1".into(),
            ));
        }
        Ok(Self { kind, len })
    }

    /// Transform matching the tube length of `x`.
    pub fn for_tensor(kind: TransformKind, x: &Tensor3) -> Self {
        Self {
            kind,
            len: x.dims()[2].max(1),
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check_len(&self, m3: usize) -> Result<()> {
        if m3 != self.len {
            return Err(Error::ShapeMismatch(format!(
                "transform length {} does not match tube length {m3}",
                self.len
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor3) -> Result<Spectrum> {
        match self.kind {
            TransformKind::Dft => self.forward_complex(x).map(Spectrum::Complex),
            _ => self.forward_real(x).map(Spectrum::Real),
        }
    }

    pub fn inverse(&self, s: &Spectrum) -> Result<Tensor3> {
        match s {
            Spectrum::Real(t) => self.inverse_real(t),
            Spectrum::Complex(c) => self.inverse_complex(c),
        }
    }

    /// Forward transform for the two DCT kinds.
    pub fn forward_real(&self, x: &Tensor3) -> Result<Tensor3> {
        let [m1, m2, m3] = x.dims();
        self.check_len(m3)?;
        if self.kind == TransformKind::Dft {
            return Err(Error::InvalidArgument(
                "the DFT produces a complex spectrum; use forward_complex".into(),
            ));
        }
        let plane = m1 * m2;
        let mut tubes = gather_tubes(x.data(), plane, m3);
        let mut plan = DctPlan::new(m3);
        let weights = (self.kind == TransformKind::DctDiag).then(|| dct_diag_weights(m3));
        for tube in tubes.chunks_exact_mut(m3) {
            plan.forward(tube);
            if let Some(w) = &weights {
                for (v, wk) in tube.iter_mut().zip(w) {
                    *v /= wk;
                }
            }
        }
        let mut out = Tensor3::zeros(m1, m2, m3);
        scatter_tubes(&tubes, out.data_mut(), plane, m3);
        Ok(out)
    }

    /// Inverse transform for the two DCT kinds.
    pub fn inverse_real(&self, xbar: &Tensor3) -> Result<Tensor3> {
        let [m1, m2, m3] = xbar.dims();
        self.check_len(m3)?;
        if self.kind == TransformKind::Dft {
            return Err(Error::InvalidArgument(
                "the inverse DFT takes a complex spectrum; use inverse_complex".into(),
            ));
        }
        let plane = m1 * m2;
        let mut tubes = gather_tubes(xbar.data(), plane, m3);
        let mut plan = DctPlan::new(m3);
        let weights = (self.kind == TransformKind::DctDiag).then(|| dct_diag_weights(m3));
        for tube in tubes.chunks_exact_mut(m3) {
            if let Some(w) = &weights {
                for (v, wk) in tube.iter_mut().zip(w) {
                    *v *= wk;
                }
            }
            plan.inverse(tube);
        }
        let mut out = Tensor3::zeros(m1, m2, m3);
        scatter_tubes(&tubes, out.data_mut(), plane, m3);
        Ok(out)
    }

    /// Unnormalized DFT along every tube.
    pub fn forward_complex(&self, x: &Tensor3) -> Result<ComplexTensor3> {
        let [m1, m2, m3] = x.dims();
        self.check_len(m3)?;
        if self.kind != TransformKind::Dft {
            return Err(Error::InvalidArgument(
                "forward_complex is only defined for the DFT".into(),
            ));
        }
        let plane = m1 * m2;
        let mut tubes: Vec<Complex64> = gather_tubes(x.data(), plane, m3)
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect();
        if !tubes.is_empty() {
            FftPlanner::new().plan_fft_forward(m3).process(&mut tubes);
        }
        let mut out = ComplexTensor3::zeros(m1, m2, m3);
        scatter_tubes(&tubes, out.data_mut(), plane, m3);
        Ok(out)
    }

    /// Inverse DFT along every tube, returning the real part. Fails when the
    /// imaginary residue exceeds [`IMAG_RESIDUE_TOL`] (relative to the result
    /// magnitude when that exceeds one).
    pub fn inverse_complex(&self, xt: &ComplexTensor3) -> Result<Tensor3> {
        let [m1, m2, m3] = xt.dims();
        self.check_len(m3)?;
        if self.kind != TransformKind::Dft {
            return Err(Error::InvalidArgument(
                "inverse_complex is only defined for the DFT".into(),
            ));
        }
        let plane = m1 * m2;
        let mut tubes = gather_tubes(xt.data(), plane, m3);
        if !tubes.is_empty() {
            FftPlanner::new().plan_fft_inverse(m3).process(&mut tubes);
        }
        let nf = m3 as f64;
        let mut residue = 0.0_f64;
        let mut magnitude = 0.0_f64;
        let real: Vec<f64> = tubes
            .iter()
            .map(|z| {
                residue = residue.max((z.im / nf).abs());
                magnitude = magnitude.max((z.re / nf).abs());
                z.re / nf
            })
            .collect();
        if residue > IMAG_RESIDUE_TOL * magnitude.max(1.0) {
            return Err(Error::NotConjugateSymmetric { residue });
        }
        let mut out = Tensor3::zeros(m1, m2, m3);
        scatter_tubes(&real, out.data_mut(), plane, m3);
        Ok(out)
    }
}
