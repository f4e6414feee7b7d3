//! Online protocols: one copy at a time, each measurement chosen from the
//! current belief only.
//!
//! A chain is described by a [`ChainSpec`]. [`evaluate_chain`] propagates the
//! joint probabilities of every outcome path exactly, [`simulate`] samples
//! them, and [`run_noniid`] compares step-dependent overlaps with the global
//! bound at the product overlap.

mod chain;
mod exact;
mod noniid;
mod simulate;

pub use chain::{evaluate_chain, exact_failure_probability, ChainEvaluation, MAX_MIN_ERROR_DEPTH};
pub use exact::{compute_k0, compute_k0_exact, ExactBinary};
pub use noniid::{run_noniid, NonIidReport};
pub use simulate::{
    simulate, write_trace_jsonl, ProtocolTrace, SimulationConfig, SimulationStats, TraceStep,
    Verdict,
};

use serde::{Deserialize, Serialize};

use crate::ensemble::{canonical_states, is_physical, normalize_overlap, validate_priors, CanonicalStates, Overlap};
use crate::povm::{
    binary_unambiguous_with, exclusion_povm, helstrom_binary, identify_exclude_povm,
    three_state_unambiguous, unambiguous_pair, helstrom_likelihoods, BinaryRegime, OutcomeLabel, Povm,
    PovmKind,
};
use crate::{Error, Result};

/// Largest Born probability tolerated for an outcome the zero-error contract
/// forbids before it is rounded to an exact zero.
pub const STRUCTURAL_ZERO_TOLERANCE: f64 = 1e-10;

const UNIFORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    MinError,
    ZeroError,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::MinError => "min-error",
            Task::ZeroError => "zero-error",
        })
    }
}

/// Posterior over hypotheses after `step` measured copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    priors: Vec<f64>,
    step: usize,
}

impl Belief {
    pub fn new(priors: Vec<f64>) -> Result<Self> {
        validate_priors(&priors, priors.len())?;
        Ok(Self { priors, step: 0 })
    }

    pub fn uniform(r: usize) -> Self {
        Self {
            priors: vec![1.0 / r as f64; r],
            step: 0,
        }
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Hypotheses with nonzero weight.
    pub fn alive(&self) -> Vec<usize> {
        (0..self.priors.len()).filter(|&i| self.priors[i] > 0.0).collect()
    }

    pub(crate) fn key(&self) -> Vec<u64> {
        self.priors.iter().map(|p| p.to_bits()).collect()
    }
}

/// Posterior after observing an outcome with likelihood `likelihoods[i]`
/// under hypothesis `i`.
pub fn bayes_update(belief: &Belief, likelihoods: &[f64]) -> Result<Belief> {
    if likelihoods.len() != belief.priors.len() {
        return Err(Error::DimensionMismatch {
            expected: belief.priors.len(),
            found: likelihoods.len(),
        });
    }
    let joint: Vec<f64> = belief
        .priors
        .iter()
        .zip(likelihoods)
        .map(|(p, l)| p * l)
        .collect();
    let total: f64 = joint.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroProbabilityOutcome);
    }
    Ok(Belief {
        priors: joint.into_iter().map(|w| w / total).collect(),
        step: belief.step + 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapSchedule {
    Constant(Overlap),
    /// Overlap of copy `k` at index `k`.
    PerStep(Vec<Overlap>),
}

impl OverlapSchedule {
    pub fn at(&self, step: usize) -> Result<Overlap> {
        match self {
            OverlapSchedule::Constant(c) => Ok(*c),
            OverlapSchedule::PerStep(list) => list.get(step).copied().ok_or_else(|| {
                Error::Precondition(format!(
                    "no overlap given for copy {} ({} available)",
                    step + 1,
                    list.len()
                ))
            }),
        }
    }

    fn all(&self) -> Vec<Overlap> {
        match self {
            OverlapSchedule::Constant(c) => vec![*c],
            OverlapSchedule::PerStep(list) => list.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub task: Task,
    pub r: usize,
    pub priors: Vec<f64>,
    pub overlaps: OverlapSchedule,
    pub horizon: Option<usize>,
    /// Exact regime bookkeeping for two-state zero-error chains.
    pub exact: Option<ExactBinary>,
}

impl ChainSpec {
    pub fn new(task: Task, r: usize, overlap: Overlap, priors: Vec<f64>) -> Result<Self> {
        Self::with_schedule(task, r, OverlapSchedule::Constant(overlap), priors)
    }

    pub fn with_schedule(task: Task, r: usize, overlaps: OverlapSchedule, priors: Vec<f64>) -> Result<Self> {
        let overlaps = match overlaps {
            OverlapSchedule::Constant(c) => OverlapSchedule::Constant(normalize_overlap(c, r)),
            OverlapSchedule::PerStep(list) => {
                if list.is_empty() {
                    return Err(Error::Precondition("empty overlap list".into()));
                }
                OverlapSchedule::PerStep(list.into_iter().map(|c| normalize_overlap(c, r)).collect())
            }
        };
        let spec = Self {
            task,
            r,
            priors,
            overlaps,
            horizon: None,
            exact: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(task: Task, r: usize, overlap: Overlap) -> Result<Self> {
        Self::new(task, r, overlap, vec![1.0 / r as f64; r])
    }

    pub fn with_horizon(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("horizon must be at least 1".into()));
        }
        self.horizon = Some(n);
        Ok(self)
    }

    pub fn with_exact(mut self, exact: ExactBinary) -> Result<Self> {
        if self.task != Task::ZeroError || self.r != 2 {
            return Err(Error::Unsupported(
                "exact regime tracking applies to two-state zero-error chains".into(),
            ));
        }
        if !matches!(self.overlaps, OverlapSchedule::Constant(_)) {
            return Err(Error::Unsupported(
                "exact regime tracking needs a constant overlap".into(),
            ));
        }
        self.exact = Some(exact);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r != 2 && self.r != 3 {
            return Err(Error::UnsupportedRank(self.r));
        }
        validate_priors(&self.priors, self.r)?;
        if self.task == Task::MinError && self.r != 2 {
            return Err(Error::Unsupported(
                "minimum-error chains are implemented for two states".into(),
            ));
        }
        if self.r == 3 && !is_uniform(&self.priors) {
            return Err(Error::InvalidPriors(
                "three-state chains require equal priors".into(),
            ));
        }
        for c in self.overlaps.all() {
            if !is_physical(c, self.r) {
                return Err(Error::NonPhysical(format!("overlap {c} for r = {}", self.r)));
            }
            if self.task == Task::ZeroError && self.r == 2 && c.magnitude() >= 1.0 - 1e-12 {
                return Err(Error::Precondition(
                    "zero-error identification needs |c| < 1".into(),
                ));
            }
        }
        if let Some(n) = self.horizon {
            if n == 0 {
                return Err(Error::Precondition("horizon must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn initial_belief(&self) -> Belief {
        Belief {
            priors: self.priors.clone(),
            step: 0,
        }
    }
}

fn is_uniform(priors: &[f64]) -> bool {
    let target = 1.0 / priors.len() as f64;
    priors.iter().all(|p| (p - target).abs() <= UNIFORM_TOLERANCE)
}

/// Step-optimal measurement for the current belief. Depends on the belief
/// and the overlap of the copy about to be measured, never on the horizon.
pub fn next_measurement(belief: &Belief, spec: &ChainSpec, local_overlap: Overlap) -> Result<Povm> {
    let states = canonical_states(normalize_overlap(local_overlap, spec.r), spec.r)?;
    measurement_for(spec.task, belief, &states, None)
}

pub(crate) fn measurement_for(
    task: Task,
    belief: &Belief,
    states: &CanonicalStates,
    forced: Option<BinaryRegime>,
) -> Result<Povm> {
    let p = belief.priors();
    if p.len() != states.r() {
        return Err(Error::DimensionMismatch {
            expected: states.r(),
            found: p.len(),
        });
    }
    match (task, states.r()) {
        (Task::MinError, 2) => helstrom_binary(p[0], p[1], states),
        (Task::MinError, r) => Err(Error::Unsupported(format!(
            "minimum-error chains for r = {r}"
        ))),
        (Task::ZeroError, 2) => binary_unambiguous_with(p[0], p[1], states, forced),
        (Task::ZeroError, _) => {
            let alive = belief.alive();
            match alive.as_slice() {
                [_, _, _] => {
                    if !is_uniform(p) {
                        return Err(Error::Precondition(
                            "three live hypotheses must have equal weight".into(),
                        ));
                    }
                    let c = states.overlap();
                    if states.dim() < 3 {
                        exclusion_povm(states)
                    } else if c.is_real() && c.re() < 0.0 {
                        identify_exclude_povm(states)
                    } else {
                        three_state_unambiguous(states)
                    }
                }
                [a, b] => {
                    let total = p[*a] + p[*b];
                    unambiguous_pair(
                        states.state(*a),
                        states.state(*b),
                        (*a, *b),
                        (p[*a] / total, p[*b] / total),
                        None,
                    )
                }
                _ => Err(Error::ExhaustedHypotheses),
            }
        }
    }
}

/// Likelihood of each outcome (rows, in effect order) under each hypothesis
/// (columns). For zero-error tasks the outcomes forbidden by the zero-error
/// contract are checked to be numerically zero and then set to exactly zero.
/// Hypotheses the belief has already ruled out get zero likelihood.
pub(crate) fn outcome_table(
    task: Task,
    povm: &Povm,
    states: &CanonicalStates,
    belief: &Belief,
) -> Result<Vec<Vec<f64>>> {
    if task == Task::MinError && states.r() == 2 && povm.kind() == PovmKind::Helstrom {
        let p = belief.priors();
        return Ok(helstrom_likelihoods(p[0], p[1], states.overlap().magnitude())
            .iter()
            .map(|row| row.to_vec())
            .collect());
    }
    let per_state: Vec<Vec<f64>> = states
        .states()
        .iter()
        .map(|psi| povm.probabilities(psi))
        .collect::<Result<_>>()?;
    let mut table = vec![vec![0.0; states.r()]; povm.effects().len()];
    for (o, effect) in povm.effects().iter().enumerate() {
        for (i, probs) in per_state.iter().enumerate() {
            if belief.priors[i] <= 0.0 {
                continue;
            }
            let p = probs[o];
            let forbidden = task == Task::ZeroError
                && match effect.label {
                    OutcomeLabel::Identify(j) => j != i,
                    OutcomeLabel::Exclude(j) => j == i,
                    OutcomeLabel::Inconclusive => false,
                };
            if forbidden {
                if p > STRUCTURAL_ZERO_TOLERANCE {
                    return Err(Error::InvalidPovm(format!(
                        "outcome {} has probability {p} under state {i}",
                        effect.label
                    )));
                }
                continue;
            }
            table[o][i] = p;
        }
    }
    Ok(table)
}
