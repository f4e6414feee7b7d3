//! Seeded Monte Carlo runs of online chains.
//!
//! Trial `t` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `t`, so a
//! trial's outcomes do not depend on thread count or scheduling. The first
//! draw picks the true state, then one draw per measured copy picks the
//! outcome.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bayes_update, measurement_for, outcome_table, Belief, ChainSpec, Task};
use crate::ensemble::{canonical_states, CanonicalStates};
use crate::povm::{OutcomeLabel, Povm, PovmKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub trials: u64,
    pub seed: u64,
    /// Number of leading trials whose full traces are returned.
    pub keep_traces: u64,
}

impl SimulationConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            keep_traces: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Identified(usize),
    Failed,
    ExcludedThenIdentified(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub povm: PovmKind,
    pub outcome: OutcomeLabel,
    /// Belief after the outcome.
    pub belief: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub trial: u64,
    pub true_state: usize,
    pub steps: Vec<TraceStep>,
    pub verdict: Verdict,
}

impl ProtocolTrace {
    pub fn is_error(&self) -> bool {
        match self.verdict {
            Verdict::Identified(i) | Verdict::ExcludedThenIdentified(i) => i != self.true_state,
            Verdict::Failed => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationStats {
    pub trials: u64,
    pub identified: u64,
    pub failed: u64,
    pub errors: u64,
    /// Correct identifications reached after an exclusion outcome.
    pub excluded_then_identified: u64,
    pub success_rate: f64,
    pub failure_rate: f64,
    pub error_rate: f64,
    pub max_invariant_deviation: f64,
    pub traces: Vec<ProtocolTrace>,
}

#[derive(Default)]
struct Tally {
    identified: u64,
    failed: u64,
    errors: u64,
    excluded_then_identified: u64,
    max_invariant_deviation: f64,
    traces: Vec<ProtocolTrace>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.identified += other.identified;
        self.failed += other.failed;
        self.errors += other.errors;
        self.excluded_then_identified += other.excluded_then_identified;
        self.max_invariant_deviation = self.max_invariant_deviation.max(other.max_invariant_deviation);
        self.traces.extend(other.traces);
        self
    }
}

type Cached = Arc<(Povm, Vec<Vec<f64>>)>;
type Cache = HashMap<(usize, usize, Vec<u64>), Cached>;

struct Runner<'a> {
    spec: &'a ChainSpec,
    n: usize,
    states: Vec<CanonicalStates>,
    squared_overlaps: Vec<f64>,
    constant: bool,
}

impl Runner<'_> {
    fn measurement(&self, cache: &mut Cache, belief: &Belief) -> Result<Cached> {
        let step = belief.step();
        let state_index = if self.constant { 0 } else { step };
        // exact regimes depend on the step count, not only on the belief
        let step_key = if self.spec.exact.is_some() { step } else { 0 };
        let key = (state_index, step_key, belief.key());
        if let Some(hit) = cache.get(&key) {
            return Ok(Arc::clone(hit));
        }
        let states = &self.states[state_index];
        let forced = self.spec.exact.as_ref().map(|ex| ex.regime_at(step));
        let povm = measurement_for(self.spec.task, belief, states, forced)?;
        let table = outcome_table(self.spec.task, &povm, states, belief)?;
        let entry = Arc::new((povm, table));
        cache.insert(key, Arc::clone(&entry));
        Ok(entry)
    }

    fn trial(&self, cache: &mut Cache, seed: u64, trial: u64) -> Result<(ProtocolTrace, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let true_state = sample(&self.spec.priors, rng.random::<f64>());
        let mut belief = self.spec.initial_belief();
        let mut expected_product: f64 = self.spec.priors.iter().take(2).product();
        let mut deviation: f64 = 0.0;
        let mut excluded = false;
        let mut steps = Vec::new();
        let mut verdict = Verdict::Failed;

        for k in 0..self.n {
            let entry = self.measurement(cache, &belief)?;
            let (povm, table) = (&entry.0, &entry.1);
            let weights: Vec<f64> = table.iter().map(|row| row[true_state]).collect();
            let o = sample(&weights, rng.random::<f64>());
            let label = povm.effects()[o].label;
            belief = bayes_update(&belief, &table[o])?;
            steps.push(TraceStep {
                step: k + 1,
                povm: povm.kind(),
                outcome: label,
                belief: belief.priors().to_vec(),
            });
            if self.spec.task == Task::MinError {
                expected_product *= self.squared_overlaps[k];
                let product = belief.priors()[0] * belief.priors()[1];
                deviation = deviation.max((product - expected_product).abs());
            }
            match (self.spec.task, label) {
                (Task::ZeroError, OutcomeLabel::Identify(i)) => {
                    verdict = if excluded {
                        Verdict::ExcludedThenIdentified(i)
                    } else {
                        Verdict::Identified(i)
                    };
                    break;
                }
                (Task::MinError, OutcomeLabel::Identify(i)) => verdict = Verdict::Identified(i),
                (_, OutcomeLabel::Exclude(_)) => excluded = true,
                (_, OutcomeLabel::Inconclusive) => {}
            }
        }
        Ok((
            ProtocolTrace {
                trial,
                true_state,
                steps,
                verdict,
            },
            deviation,
        ))
    }
}

/// Index drawn from unnormalised `weights` with a uniform variate `u` in [0, 1).
fn sample(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cumulative += w;
        last_positive = i;
        if target < cumulative {
            return i;
        }
    }
    last_positive
}

/// Samples `config.trials` independent runs of the chain on `n` copies.
pub fn simulate(spec: &ChainSpec, n: usize, config: &SimulationConfig) -> Result<SimulationStats> {
    spec.validate()?;
    if n == 0 || config.trials == 0 {
        return Err(Error::Precondition(
            "simulation needs at least one copy and one trial".into(),
        ));
    }
    let constant = matches!(spec.overlaps, super::OverlapSchedule::Constant(_));
    let distinct = if constant { 1 } else { n };
    let mut states = Vec::with_capacity(distinct);
    for k in 0..distinct {
        states.push(canonical_states(spec.overlaps.at(k)?, spec.r)?);
    }
    let squared_overlaps = (0..n)
        .map(|k| spec.overlaps.at(k).map(|c| c.magnitude() * c.magnitude()))
        .collect::<Result<Vec<_>>>()?;
    let runner = Runner {
        spec,
        n,
        states,
        squared_overlaps,
        constant,
    };

    let tally = (0..config.trials)
        .into_par_iter()
        .map_init(Cache::new, |cache, t| -> Result<Tally> {
            let (trace, deviation) = runner.trial(cache, config.seed, t)?;
            let mut tally = Tally {
                max_invariant_deviation: deviation,
                ..Tally::default()
            };
            if trace.is_error() {
                tally.errors = 1;
            } else {
                match trace.verdict {
                    Verdict::Failed => tally.failed = 1,
                    Verdict::ExcludedThenIdentified(_) => {
                        tally.identified = 1;
                        tally.excluded_then_identified = 1;
                    }
                    Verdict::Identified(_) => tally.identified = 1,
                }
            }
            if t < config.keep_traces {
                tally.traces.push(trace);
            }
            Ok(tally)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let mut traces = tally.traces;
    traces.sort_by_key(|t| t.trial);
    let trials = config.trials as f64;
    Ok(SimulationStats {
        trials: config.trials,
        identified: tally.identified,
        failed: tally.failed,
        errors: tally.errors,
        excluded_then_identified: tally.excluded_then_identified,
        success_rate: tally.identified as f64 / trials,
        failure_rate: tally.failed as f64 / trials,
        error_rate: tally.errors as f64 / trials,
        max_invariant_deviation: tally.max_invariant_deviation,
        traces,
    })
}

#[derive(Serialize)]
struct TraceLine<'a> {
    trial: u64,
    step: usize,
    povm: PovmKind,
    outcome: OutcomeLabel,
    belief: &'a [f64],
}

/// Writes one JSON object per measured copy.
pub fn write_trace_jsonl<W: Write>(traces: &[ProtocolTrace], mut out: W) -> std::io::Result<()> {
    for trace in traces {
        for step in &trace.steps {
            let line = TraceLine {
                trial: trace.trial,
                step: step.step,
                povm: step.povm,
                outcome: step.outcome,
                belief: &step.belief,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
