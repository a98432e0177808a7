//! JSON run reports for completion jobs.

use serde::Serialize;

use crate::completion::{AdmmState, IterationRecord, ObservationMask, SolverConfig};
use crate::error::Result;
use crate::metrics::{evaluate, MetricOptions, MetricReport};
use crate::tensor::Tensor3;
use crate::transform::TransformKind;
use crate::tsvd::StageTimes;

/// Everything needed to re-run a completion job, plus its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfigEcho {
    pub method: TransformKind,
    pub beta: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// SSIM dynamic range `L`, when given explicitly.
    pub dynamic_range: Option<f64>,
    pub sampling_rate: f64,
    /// Mask seed, when the mask was sampled rather than read from a file.
    pub seed: Option<u64>,
    pub dims: [usize; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfigEcho,
    pub iterations: usize,
    pub hit_max_iters: bool,
    pub final_relative_change: f64,
    pub primal_residual: f64,
    pub feasibility_residual: f64,
    /// `||X - reference||_F / ||reference||_F`, when a reference is given.
    pub relative_error: Option<f64>,
    pub times: StageTimes,
    pub metrics: Option<MetricReport>,
    pub trace: Vec<IterationRecord>,
}

impl RunReport {
    pub fn new(
        cfg: &SolverConfig,
        mask: &ObservationMask,
        state: &AdmmState,
        seed: Option<u64>,
        reference: Option<&Tensor3>,
        metric_opts: &MetricOptions,
    ) -> Result<Self> {
        let (relative_error, metrics) = match reference {
            Some(r) => {
                let norm = r.frobenius_norm();
                let diff = (&state.x - r).frobenius_norm();
                let rel = if norm > 0.0 { diff / norm } else { diff };
                (
                    Some(rel),
                    Some(evaluate(r, &state.x, metric_opts, state.times)?),
                )
            }
            None => (None, None),
        };
        Ok(Self {
            config: RunConfigEcho {
                method: cfg.transform,
                beta: cfg.beta,
                tol: cfg.tol,
                max_iters: cfg.max_iters,
                dynamic_range: metric_opts.dynamic_range,
                sampling_rate: mask.sampling_rate(),
                seed,
                dims: mask.dims(),
            },
            iterations: state.iteration,
            hit_max_iters: state.hit_max_iters,
            final_relative_change: state.history.last().map_or(0.0, |r| r.relative_change),
            primal_residual: state.primal_residual(),
            feasibility_residual: state.feasibility_residual(mask),
            relative_error,
            times: state.times,
            metrics,
            trace: state.history.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::Error::Format(format!("report serialization: {e}")))
    }
}
