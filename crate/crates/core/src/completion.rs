//! Low-rank tensor completion by ADMM.
//!
//! Solves `min tnn(X)` subject to `X = B` on the observed set, splitting
//! `X = Y` and iterating
//!
//! ```text
//! Y <- svt(X - M / beta, 1 / beta)
//! X <- (Y + M / beta) off the observed set, B on it
//! M <- M + beta (Y - X)
//! ```
//!
//! until the relative change of `X` drops to `tol` or `max_iters` is reached.
//! The tube transform only enters through the `svt` step.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svt::svt_timed;
use crate::tensor::Tensor3;
use crate::transform::{TransformKind, TubeTransform};
use crate::tsvd::StageTimes;

/// Observed index set of a `m1 x m2 x m3` tensor, in storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    dims: [usize; 3],
    observed: Vec<bool>,
}

impl SamplingPattern {
    pub fn new(dims: [usize; 3], observed: Vec<bool>) -> Result<Self> {
        if observed.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::ShapeMismatch(format!(
                "pattern for {dims:?} needs {} flags, got {}",
                dims[0] * dims[1] * dims[2],
                observed.len()
            )));
        }
        Ok(Self { dims, observed })
    }

    pub fn full(dims: [usize; 3]) -> Self {
        Self {
            dims,
            observed: vec![true; dims[0] * dims[1] * dims[2]],
        }
    }

    /// Reads a 0/1 mask tensor; any other value is rejected.
    pub fn from_tensor(mask: &Tensor3) -> Result<Self> {
        let observed = mask
            .data()
            .iter()
            .map(|&v| {
                if v == 1.0 {
                    Ok(true)
                } else if v == 0.0 {
                    Ok(false)
                } else {
                    Err(Error::InvalidArgument(format!(
                        "mask entries must be 0 or 1, found {v}"
                    )))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dims: mask.dims(),
            observed,
        })
    }

    pub fn to_tensor(&self) -> Tensor3 {
        Tensor3::from_vec(
            self.dims,
            self.observed
                .iter()
                .map(|&o| if o { 1.0 } else { 0.0 })
                .collect(),
        )
        .expect("pattern length matches dims")
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Sorted storage-order indices of the observed entries.
    pub fn indices(&self) -> Vec<usize> {
        self.observed
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
            .collect()
    }

    pub fn sampling_rate(&self) -> f64 {
        if self.observed.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.observed.len() as f64
        }
    }
}

/// Draws `floor(rate * m1 * m2 * m3)` distinct entries uniformly at random.
/// The result depends only on `(dims, rate, seed)`.
pub fn make_mask(dims: [usize; 3], rate: f64, seed: u64) -> Result<SamplingPattern> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must lie in [0, 1], got {rate}"
        )));
    }
    let n = dims[0] * dims[1] * dims[2];
    // The epsilon keeps products such as 0.29 * 100 from flooring one short.
    let count = ((rate * n as f64 + 1e-9).floor() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![false; n];
    for i in sample(&mut rng, n, count) {
        observed[i] = true;
    }
    Ok(SamplingPattern { dims, observed })
}

/// The completion data: an index set and the observed values `B`
/// (zero off the index set).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    pattern: SamplingPattern,
    values: Tensor3,
}

impl ObservationMask {
    /// Observes `full` on `pattern`.
    pub fn observe(pattern: SamplingPattern, full: &Tensor3) -> Result<Self> {
        if pattern.dims != full.dims() {
            return Err(Error::ShapeMismatch(format!(
                "pattern {:?} vs data {:?}",
                pattern.dims,
                full.dims()
            )));
        }
        let data = full
            .data()
            .iter()
            .zip(&pattern.observed)
            .map(|(&v, &o)| if o { v } else { 0.0 })
            .collect();
        let values = Tensor3::from_vec(full.dims(), data)?;
        Ok(Self { pattern, values })
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn values(&self) -> &Tensor3 {
        &self.values
    }

    pub fn dims(&self) -> [usize; 3] {
        self.pattern.dims
    }

    pub fn sampling_rate(&self) -> f64 {
        self.pattern.sampling_rate()
    }

    /// `||(x - B)_Omega||_F`.
    pub fn residual(&self, x: &Tensor3) -> f64 {
        x.data()
            .iter()
            .zip(self.values.data())
            .zip(&self.pattern.observed)
            .filter(|(_, &o)| o)
            .map(|((a, b), _)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub beta: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub transform: TransformKind,
    /// Seed for mask generation when the caller samples its own mask.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1e-2,
            tol: 1e-5,
            max_iters: 500,
            transform: TransformKind::DctOrtho,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// The setting used for the video and multispectral experiments: the
    /// defaults with a `1e-8` stopping tolerance.
    pub fn experiment() -> Self {
        Self {
            tol: 1e-8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Monitors recorded after each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    /// `||X^{l+1} - X^l||_F / ||X^l||_F`
    pub relative_change: f64,
    /// `||Y^{l+1} - X^{l+1}||_F`
    pub primal_residual: f64,
    /// `||(X^{l+1} - B)_Omega||_F`, zero by construction
    pub feasibility_residual: f64,
    /// Tensor nuclear norm of `Y^{l+1}`
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: Tensor3,
    pub y: Tensor3,
    pub m: Tensor3,
    pub beta: f64,
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
    pub hit_max_iters: bool,
    pub times: StageTimes,
}

impl AdmmState {
    pub fn feasibility_residual(&self, mask: &ObservationMask) -> f64 {
        mask.residual(&self.x)
    }

    pub fn objective_trace(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.objective).collect()
    }

    pub fn relative_changes(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.relative_change).collect()
    }

    pub fn primal_residual(&self) -> f64 {
        self.history.last().map_or(0.0, |r| r.primal_residual)
    }
}

/// Runs ADMM from `X = B, Y = 0, M = 0` and returns the recovered tensor.
pub fn admm_complete(mask: &ObservationMask, cfg: &SolverConfig) -> Result<(Tensor3, AdmmState)> {
    cfg.validate()?;
    let start = Instant::now();
    let [m1, m2, m3] = mask.dims();
    let t = TubeTransform::new(cfg.transform, m3)?;
    let b = mask.values();
    let observed = mask.pattern().observed();
    let has_unobserved = observed.iter().any(|&o| !o);
    let has_data = b.data().iter().any(|&v| v != 0.0);
    let inv_beta = 1.0 / cfg.beta;

    let mut state = AdmmState {
        x: b.clone(),
        y: Tensor3::zeros(m1, m2, m3),
        m: Tensor3::zeros(m1, m2, m3),
        beta: cfg.beta,
        iteration: 0,
        history: Vec::new(),
        hit_max_iters: false,
        times: StageTimes::default(),
    };

    while state.iteration < cfg.max_iters {
        let z = state.x.zip_map(&state.m, |x, m| x - m * inv_beta)?;
        let prox = svt_timed(&z, inv_beta, &t, &mut state.times)?;
        let objective = prox.nuclear_norm();
        let y = prox.y;

        let mut x_next = Tensor3::zeros(m1, m2, m3);
        for (idx, v) in x_next.data_mut().iter_mut().enumerate() {
            *v = if observed[idx] {
                b.data()[idx]
            } else {
                y.data()[idx] + state.m.data()[idx] * inv_beta
            };
        }
        let m_next = state.m.zip_map(&(&y - &x_next), |m, r| m + cfg.beta * r)?;
        if y.has_non_finite() || x_next.has_non_finite() || m_next.has_non_finite() {
            return Err(Error::Numerical(format!(
                "non-finite iterate at iteration {}",
                state.iteration + 1
            )));
        }

        let prev_norm = state.x.frobenius_norm();
        let step = (&x_next - &state.x).frobenius_norm();
        let relative_change = if prev_norm > 0.0 {
            step / prev_norm
        } else {
            x_next.frobenius_norm()
        };
        let record = IterationRecord {
            relative_change,
            primal_residual: (&y - &x_next).frobenius_norm(),
            feasibility_residual: mask.residual(&x_next),
            objective,
        };

        // While every singular value is still below the threshold, Y stays
        // zero and X cannot move even though the multiplier is growing.
        let warming_up = has_unobserved && has_data && y.data().iter().all(|&v| v == 0.0);

        state.x = x_next;
        state.y = y;
        state.m = m_next;
        state.iteration += 1;
        state.history.push(record);
        if relative_change <= cfg.tol && !warming_up {
            break;
        }
    }
    state.hit_max_iters = state.iteration >= cfg.max_iters
        && state
            .history
            .last()
            .is_some_and(|r| r.relative_change > cfg.tol);
    state.times.total = start.elapsed().as_secs_f64();
    Ok((state.x.clone(), state))
}
