//! Timing harness for the DFT and DCT t-SVD on random tensors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::completion::{admm_complete, make_mask, ObservationMask, SolverConfig};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricOptions};
use crate::tensor::Tensor3;
use crate::transform::{TransformKind, TubeTransform};
use crate::tsvd::{t_svd_timed, StageTimes};

pub const DEFAULT_SIZES: [[usize; 3]; 4] = [
    [100, 100, 100],
    [100, 100, 400],
    [200, 200, 100],
    [400, 400, 100],
];

/// Largest `m1 * m2 * m3` accepted by the harness. A t-SVD holds several
/// tensors of this size, plus the factors, at once.
pub const MAX_BENCH_ENTRIES: usize = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub method: TransformKind,
    pub runs: usize,
    /// Mean seconds per run, warm-up excluded.
    pub transform: f64,
    pub svd: f64,
    pub total: f64,
}

pub fn random_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::from_fn(dims[0], dims[1], dims[2], |_, _, _| rng.random::<f64>())
}

pub fn check_size(dims: [usize; 3]) -> Result<()> {
    let n = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .unwrap_or(usize::MAX);
    if n > MAX_BENCH_ENTRIES || dims[0].max(dims[1]).pow(2) * dims[2] > 4 * MAX_BENCH_ENTRIES {
        return Err(Error::TooLarge(format!(
            "{}x{}x{} exceeds the benchmark memory guard",
            dims[0], dims[1], dims[2]
        )));
    }
    Ok(())
}

/// Times `runs` t-SVDs of one random tensor after one untimed warm-up run.
pub fn time_tsvd(x: &Tensor3, kind: TransformKind, runs: usize) -> Result<StageTimes> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let t = TubeTransform::for_tensor(kind, x);
    t_svd_timed(x, &t)?;
    let mut acc = StageTimes::default();
    for _ in 0..runs {
        acc.accumulate(&t_svd_timed(x, &t)?.1);
    }
    let n = runs as f64;
    Ok(StageTimes {
        transform: acc.transform / n,
        svd: acc.svd / n,
        total: acc.total / n,
    })
}

/// One DFT row and one DCT row per size, on the same input.
pub fn run(sizes: &[[usize; 3]], runs: usize, seed: u64) -> Result<Vec<BenchRow>> {
    for &d in sizes {
        check_size(d)?;
    }
    let mut rows = Vec::with_capacity(2 * sizes.len());
    for &dims in sizes {
        let x = random_tensor(dims, seed);
        for method in [TransformKind::Dft, TransformKind::DctOrtho] {
            let t = time_tsvd(&x, method, runs)?;
            rows.push(BenchRow {
                m1: dims[0],
                m2: dims[1],
                m3: dims[2],
                method,
                runs,
                transform: t.transform,
                svd: t.svd,
                total: t.total,
            });
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "size,method,runs,transform_s,svd_s,total_s";

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{}x{}x{},{},{},{:.6e},{:.6e},{:.6e}\n",
            r.m1, r.m2, r.m3, r.method, r.runs, r.transform, r.svd, r.total
        ));
    }
    out
}

/// Parses `100x100x400` style sizes.
pub fn parse_size(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = s.trim().split(['x', 'X']).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "size {s:?} is not m1xm2xm3"
        )));
    }
    let mut dims = [0; 3];
    for (d, p) in dims.iter_mut().zip(parts) {
        *d = p
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("size {s:?} is not m1xm2xm3")))?;
        if *d == 0 {
            return Err(Error::InvalidArgument(format!(
                "size {s:?} has a zero dimension"
            )));
        }
    }
    Ok(dims)
}

/// Sum of three separable terms whose tubes (`1 + 2t`, `exp(1.5t)`,
/// `1 + sin(2.5t)` on `[0, 1]`) are smooth and not periodic, scaled to a
/// peak of 255.
pub fn smooth_tube_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
    let [m1, m2, m3] = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tubes: [fn(f64) -> f64; 3] = [
        |t| 1.0 + 2.0 * t,
        |t| (1.5 * t).exp(),
        |t| 1.0 + (2.5 * t).sin(),
    ];
    let mut factor = |n: usize| -> Vec<Vec<f64>> {
        (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(0.2..1.0)).collect())
            .collect()
    };
    let (a, b) = (factor(m1), factor(m2));
    let x = Tensor3::from_fn(m1, m2, m3, |i, j, k| {
        let t = k as f64 / (m3.max(2) - 1) as f64;
        (0..3).map(|q| a[q][i] * b[q][j] * tubes[q](t)).sum()
    });
    let peak = x.max_abs();
    if peak > 0.0 {
        x.map(|v| 255.0 * v / peak)
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletionQuality {
    pub method: TransformKind,
    pub psnr_mean: f64,
    pub ssim_mean: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothTubeComparison {
    pub dims: [usize; 3],
    pub sampling_rate: f64,
    pub seed: u64,
    pub results: Vec<CompletionQuality>,
    /// DCT mean PSNR at least the DFT mean PSNR. Data-dependent, so callers
    /// treat a `false` here as a warning.
    pub dct_not_worse: bool,
}

/// Completes a smooth-tube tensor from a random `rate` sample with both
/// transforms and compares mean PSNR.
pub fn smooth_tube_comparison(
    dims: [usize; 3],
    rate: f64,
    seed: u64,
) -> Result<SmoothTubeComparison> {
    let truth = smooth_tube_tensor(dims, seed);
    let mask = ObservationMask::observe(make_mask(dims, rate, seed)?, &truth)?;
    let opts = MetricOptions {
        dynamic_range: Some(255.0),
        ..MetricOptions::default()
    };
    let mut results = Vec::new();
    for method in [TransformKind::DctOrtho, TransformKind::Dft] {
        let cfg = SolverConfig {
            transform: method,
            ..SolverConfig::experiment()
        };
        let (x, state) = admm_complete(&mask, &cfg)?;
        let rep = evaluate(&truth, &x, &opts, state.times)?;
        results.push(CompletionQuality {
            method,
            psnr_mean: rep.psnr_mean,
            ssim_mean: rep.ssim_mean,
            iterations: state.iteration,
        });
    }
    let dct_not_worse = results[0].psnr_mean >= results[1].psnr_mean;
    Ok(SmoothTubeComparison {
        dims,
        sampling_rate: rate,
        seed,
        results,
        dct_not_worse,
    })
}
