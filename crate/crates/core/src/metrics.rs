//! Recovery quality metrics. A band is one frontal slice.
//!
//! SSIM is the single-window form computed from whole-band statistics
//! (population moments), with `c1 = (0.01 L)^2` and `c2 = (0.03 L)^2`.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::tsvd::StageTimes;

fn check_same(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "bands have {} and {} entries",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn check_dims(a: &Tensor3, b: &Tensor3) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

/// `10 log10(n peak^2 / ||est - ref||^2)`; `+inf` for identical bands.
pub fn psnr(reference: &[f64], estimate: &[f64], peak: f64) -> Result<f64> {
    check_same(reference, estimate)?;
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "peak must be positive, got {peak}"
        )));
    }
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (reference.len() as f64 * peak * peak / err).log10())
}

pub fn ssim_global(reference: &[f64], estimate: &[f64], dynamic_range: f64) -> Result<f64> {
    check_same(reference, estimate)?;
    if reference.is_empty() {
        return Ok(1.0);
    }
    let n = reference.len() as f64;
    let mx = reference.iter().sum::<f64>() / n;
    let my = estimate.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (a, b) in reference.iter().zip(estimate) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cov += (a - mx) * (b - my);
    }
    vx /= n;
    vy /= n;
    cov /= n;
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
    let den = (mx * mx + my * my + c1) * (vx + vy + c2);
    if den == 0.0 {
        // Only reachable with L = 0 and two all-zero bands.
        return Ok(1.0);
    }
    Ok(num / den)
}

/// Mean angle in radians between reference and estimate tubes. Tubes where
/// either vector is zero are skipped; returns 0 when every tube is skipped.
pub fn sam(reference: &Tensor3, estimate: &Tensor3) -> Result<f64> {
    check_dims(reference, estimate)?;
    let [m1, m2, m3] = reference.dims();
    let plane = m1 * m2;
    let (rd, ed) = (reference.data(), estimate.data());
    let mut total = 0.0;
    let mut count = 0usize;
    for p in 0..plane {
        let (mut nr, mut ne) = (0.0, 0.0);
        for k in 0..m3 {
            nr += rd[k * plane + p] * rd[k * plane + p];
            ne += ed[k * plane + p] * ed[k * plane + p];
        }
        if nr == 0.0 || ne == 0.0 {
            continue;
        }
        let (nr, ne) = (nr.sqrt(), ne.sqrt());
        // 2 atan2(|a - b|, |a + b|) for unit a, b; stable near 0 unlike acos.
        let (mut diff, mut sum) = (0.0, 0.0);
        for k in 0..m3 {
            let (a, b) = (rd[k * plane + p] / nr, ed[k * plane + p] / ne);
            diff += (a - b) * (a - b);
            sum += (a + b) * (a + b);
        }
        total += 2.0 * diff.sqrt().atan2(sum.sqrt());
        count += 1;
    }
    Ok(if count == 0 {
        0.0
    } else {
        total / count as f64
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ergas {
    pub value: f64,
    /// Bands whose reference mean is zero.
    pub excluded_bands: Vec<usize>,
}

/// `100 ratio sqrt(mean_b MSE_b / mu_b^2)` over bands with nonzero
/// reference mean.
pub fn ergas(reference: &Tensor3, estimate: &Tensor3, ratio: f64) -> Result<Ergas> {
    check_dims(reference, estimate)?;
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ratio must be positive, got {ratio}"
        )));
    }
    let m3 = reference.dims()[2];
    let mut excluded_bands = Vec::new();
    let mut acc = 0.0;
    for k in 0..m3 {
        let (r, e) = (reference.slice_data(k), estimate.slice_data(k));
        let n = r.len().max(1) as f64;
        let mu = r.iter().sum::<f64>() / n;
        if mu == 0.0 {
            excluded_bands.push(k);
            continue;
        }
        let mse = r.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
        acc += mse / (mu * mu);
    }
    let used = m3 - excluded_bands.len();
    let value = if used == 0 {
        0.0
    } else {
        100.0 * ratio * (acc / used as f64).sqrt()
    };
    Ok(Ergas {
        value,
        excluded_bands,
    })
}

/// Writes infinite values as the strings `"inf"` / `"-inf"`.
fn finite_or_tag<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

fn finite_or_tag_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_infinite() {
            seq.serialize_element(if *x > 0.0 { "inf" } else { "-inf" })?;
        } else {
            seq.serialize_element(x)?;
        }
    }
    seq.end()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricOptions {
    /// SSIM dynamic range `L`. `None` uses the largest absolute reference
    /// entry (1 for an all-zero reference).
    pub dynamic_range: Option<f64>,
    pub ergas_ratio: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            dynamic_range: None,
            ergas_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    #[serde(serialize_with = "finite_or_tag_vec")]
    pub psnr_per_band: Vec<f64>,
    /// Mean of the finite per-band values; `inf` when none is finite.
    #[serde(serialize_with = "finite_or_tag")]
    pub psnr_mean: f64,
    pub ssim_per_band: Vec<f64>,
    pub ssim_mean: f64,
    pub ssim_form: &'static str,
    pub dynamic_range: f64,
    pub sam: f64,
    pub ergas: f64,
    pub ergas_excluded_bands: Vec<usize>,
    pub times: StageTimes,
}

/// Band peak for PSNR: the band maximum, falling back to the largest
/// absolute entry of the band, then to 1.
fn band_peak(band: &[f64]) -> f64 {
    let max = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > 0.0 {
        return max;
    }
    let abs = band.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if abs > 0.0 {
        abs
    } else {
        1.0
    }
}

pub fn evaluate(
    reference: &Tensor3,
    estimate: &Tensor3,
    opts: &MetricOptions,
    times: StageTimes,
) -> Result<MetricReport> {
    check_dims(reference, estimate)?;
    if reference.has_non_finite() || estimate.has_non_finite() {
        return Err(Error::Numerical(
            "non-finite entries in metric input".into(),
        ));
    }
    let m3 = reference.dims()[2];
    let dynamic_range = opts.dynamic_range.unwrap_or_else(|| {
        let m = reference.max_abs();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    });
    let mut psnr_per_band = Vec::with_capacity(m3);
    let mut ssim_per_band = Vec::with_capacity(m3);
    for k in 0..m3 {
        let (r, e) = (reference.slice_data(k), estimate.slice_data(k));
        psnr_per_band.push(psnr(r, e, band_peak(r))?);
        ssim_per_band.push(ssim_global(r, e, dynamic_range)?);
    }
    let finite: Vec<f64> = psnr_per_band
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let psnr_mean = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let ssim_mean = if m3 == 0 {
        1.0
    } else {
        ssim_per_band.iter().sum::<f64>() / m3 as f64
    };
    let e = ergas(reference, estimate, opts.ergas_ratio)?;
    Ok(MetricReport {
        psnr_per_band,
        psnr_mean,
        ssim_per_band,
        ssim_mean,
        ssim_form: "global",
        dynamic_range,
        sam: sam(reference, estimate)?,
        ergas: e.value,
        ergas_excluded_bands: e.excluded_bands,
        times,
    })
}
