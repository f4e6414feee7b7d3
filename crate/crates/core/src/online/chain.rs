//! Exact evaluation of online chains by propagating joint path probabilities.

use serde::{Deserialize, Serialize};

use super::{measurement_for, outcome_table, Belief, ChainSpec, Task};
use crate::ensemble::{canonical_states, CanonicalStates};
use crate::povm::OutcomeLabel;
use crate::{Error, Result};

/// Deepest minimum-error chain evaluated exactly; the outcome tree doubles
/// with every copy.
pub const MAX_MIN_ERROR_DEPTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainEvaluation {
    /// Probability of a correct identification.
    pub success: f64,
    /// Probability that no identification was made within the horizon.
    pub failure: f64,
    /// Probability of a wrong identification.
    pub error: f64,
    /// Largest deviation of `eta0 eta1` from `eta0 eta1 prod c_k^2` over all
    /// visited beliefs of a two-state minimum-error chain; zero otherwise.
    pub max_invariant_deviation: f64,
    /// Number of outcome paths that ended within the horizon or at it.
    pub paths: usize,
}

struct Walker<'a> {
    spec: &'a ChainSpec,
    n: usize,
    states: Vec<CanonicalStates>,
    squared_overlaps: Vec<f64>,
    result: ChainEvaluation,
}

impl Walker<'_> {
    fn visit(&mut self, weights: Vec<f64>, step: usize, expected_product: f64) -> Result<()> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Ok(());
        }
        let belief = Belief {
            priors: weights.iter().map(|w| w / total).collect(),
            step,
        };
        if self.spec.task == Task::MinError {
            let product = belief.priors[0] * belief.priors[1];
            let deviation = (product - expected_product).abs();
            self.result.max_invariant_deviation = self.result.max_invariant_deviation.max(deviation);
        }
        let forced = self.spec.exact.as_ref().map(|ex| ex.regime_at(step));
        let states = &self.states[step];
        let povm = measurement_for(self.spec.task, &belief, states, forced)?;
        let table = outcome_table(self.spec.task, &povm, states, &belief)?;
        let last = step + 1 == self.n;
        let next_product = expected_product * self.squared_overlaps[step];

        for (effect, likelihoods) in povm.effects().iter().zip(table) {
            let joint: Vec<f64> = weights.iter().zip(&likelihoods).map(|(w, l)| w * l).collect();
            let mass: f64 = joint.iter().sum();
            if mass <= 0.0 {
                continue;
            }
            match (self.spec.task, effect.label) {
                (Task::ZeroError, OutcomeLabel::Identify(guess)) => {
                    self.record_guess(&joint, mass, guess);
                }
                (Task::MinError, OutcomeLabel::Identify(guess)) if last => {
                    self.record_guess(&joint, mass, guess);
                }
                (Task::MinError, OutcomeLabel::Identify(_)) => {
                    self.visit(joint, step + 1, next_product)?;
                }
                (Task::ZeroError, _) if last => {
                    self.result.failure += mass;
                    self.result.paths += 1;
                }
                (Task::ZeroError, _) => self.visit(joint, step + 1, next_product)?,
                (Task::MinError, label) => {
                    return Err(Error::InvalidPovm(format!(
                        "minimum-error measurement produced outcome {label}"
                    )))
                }
            }
        }
        Ok(())
    }

    fn record_guess(&mut self, joint: &[f64], mass: f64, guess: usize) {
        self.result.success += joint[guess];
        self.result.error += mass - joint[guess];
        self.result.paths += 1;
    }
}

/// Runs the online chain of `spec` on `n` copies, summing the probability of
/// every outcome path exactly.
pub fn evaluate_chain(spec: &ChainSpec, n: usize) -> Result<ChainEvaluation> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Precondition("at least one copy is required".into()));
    }
    if spec.task == Task::MinError && n > MAX_MIN_ERROR_DEPTH {
        return Err(Error::Unsupported(format!(
            "exact minimum-error evaluation is limited to {MAX_MIN_ERROR_DEPTH} copies"
        )));
    }
    let mut states = Vec::with_capacity(n);
    let mut squared_overlaps = Vec::with_capacity(n);
    for k in 0..n {
        let c = spec.overlaps.at(k)?;
        squared_overlaps.push(c.magnitude() * c.magnitude());
        states.push(canonical_states(c, spec.r)?);
    }
    let mut walker = Walker {
        spec,
        n,
        states,
        squared_overlaps,
        result: ChainEvaluation::default(),
    };
    let product = spec.priors.iter().take(2).product::<f64>();
    walker.visit(spec.priors.clone(), 0, product)?;
    Ok(walker.result)
}

/// Probability that the chain ends without a correct answer: the inconclusive
/// probability for zero-error tasks, the error probability for minimum-error
/// tasks.
pub fn exact_failure_probability(spec: &ChainSpec, n: usize) -> Result<f64> {
    let eval = evaluate_chain(spec, n)?;
    Ok(match spec.task {
        Task::ZeroError => eval.failure,
        Task::MinError => eval.error,
    })
}
