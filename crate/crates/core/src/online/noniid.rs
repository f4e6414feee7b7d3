//! Chains whose copies have step-dependent overlaps.

use serde::{Deserialize, Serialize};

use super::{evaluate_chain, ChainSpec, OverlapSchedule, Task};
use crate::bounds::{binary_zero_error_effective, helstrom_success_effective};
use crate::ensemble::{effective_overlap_product, symmetric_eigenvalues, Overlap};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonIidReport {
    pub online_failure: f64,
    pub global_failure: f64,
    /// Product of the per-copy overlaps.
    pub effective_overlap: f64,
    /// False for three states with mixed signs and a positive product, where
    /// the online chain is not known to be optimal.
    pub optimality_established: bool,
}

/// Exact online failure for the overlap list `overlaps`, against the global
/// bound at the product overlap. `r` is taken from `priors.len()`.
pub fn run_noniid(overlaps: &[Overlap], task: Task, priors: &[f64]) -> Result<NonIidReport> {
    let r = priors.len();
    if r == 3 && overlaps.iter().any(|c| !c.is_real()) {
        return Err(Error::Unsupported(
            "step-dependent three-state chains need real overlaps".into(),
        ));
    }
    let spec = ChainSpec::with_schedule(
        task,
        r,
        OverlapSchedule::PerStep(overlaps.to_vec()),
        priors.to_vec(),
    )?;
    let n = overlaps.len();
    let eval = evaluate_chain(&spec, n)?;
    let normalized: Vec<Overlap> = match &spec.overlaps {
        OverlapSchedule::PerStep(list) => list.clone(),
        OverlapSchedule::Constant(c) => vec![*c],
    };
    let product = effective_overlap_product(&normalized)?.re();

    let (online_failure, global_failure) = match (task, r) {
        (Task::MinError, _) => (
            eval.error,
            1.0 - helstrom_success_effective(priors[0], priors[1], product)?.success,
        ),
        (Task::ZeroError, 2) => (
            eval.failure,
            binary_zero_error_effective(priors[0], priors[1], product)?.inconclusive,
        ),
        (Task::ZeroError, _) => {
            let smallest = symmetric_eigenvalues(Overlap::real(product)?, r)?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            (eval.failure, 1.0 - smallest.max(0.0))
        }
    };
    let optimality_established =
        r == 2 || product < 0.0 || normalized.iter().all(|c| c.re() >= 0.0);
    Ok(NonIidReport {
        online_failure,
        global_failure,
        effective_overlap: product,
        optimality_established,
    })
}
