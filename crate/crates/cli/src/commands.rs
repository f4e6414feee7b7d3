//! Subcommand implementations. Each returns a report that is serialized by
//! [`crate::output`].

use serde::{Deserialize, Serialize};
use seqdisc::bounds::{binary_zero_error_q, helstrom_success_n, symmetric_zero_error_q, Regime};
use seqdisc::ensemble::{canonical_states, normalize_overlap, symmetric_eigenvalues};
use seqdisc::online::{
    compute_k0, evaluate_chain, run_noniid, simulate, ChainEvaluation, ChainSpec, ExactBinary,
    NonIidReport, OverlapSchedule, ProtocolTrace, SimulationConfig, Task, MAX_MIN_ERROR_DEPTH,
};
use seqdisc::povm::{
    binary_regime, binary_unambiguous_with, exclusion_povm, helstrom_binary,
    identify_exclude_povm, three_state_unambiguous, BinaryRegime, PovmDocument,
};
use seqdisc::search::{physical_boundary, scan_plane, zero_gap_locus, PolarGrid, ScanRow};
use seqdisc::{Overlap, Povm, PovmKind};

use crate::config::{EnsembleArgs, KindArg, PovmConfig, RunConfig, ScanConfig, SimulateConfig};
use crate::input::{parse_overlap_list, parse_priors, OverlapInput, Priors};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest |z| accepted without a warning.
const Z_WARN: f64 = 3.0;

/// Gap below which a scan cell counts as online-optimal.
const ZERO_GAP: f64 = 1e-6;

impl From<seqdisc::Error> for CliError {
    fn from(e: seqdisc::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Validated ensemble arguments.
struct Ensemble {
    task: Task,
    r: usize,
    inputs: Vec<OverlapInput>,
    overlaps: Vec<Overlap>,
    priors: Priors,
    n: usize,
}

impl Ensemble {
    fn resolve(args: &EnsembleArgs, allow_list: bool) -> Result<Self, CliError> {
        if args.r != 2 && args.r != 3 {
            return Err(seqdisc::Error::UnsupportedRank(args.r).into());
        }
        if args.n == 0 {
            return Err(CliError::Config("--n must be at least 1".into()));
        }
        let inputs = parse_overlap_list(&args.c).map_err(CliError::Config)?;
        if inputs.len() > 1 {
            if !allow_list {
                return Err(CliError::Config(
                    "this command takes a single overlap, not a list".into(),
                ));
            }
            if args.n > inputs.len() {
                return Err(CliError::Config(format!(
                    "--n {} exceeds the {} overlaps given",
                    args.n,
                    inputs.len()
                )));
            }
        }
        let overlaps = inputs
            .iter()
            .map(OverlapInput::overlap)
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::Config)?;
        let priors = parse_priors(args.priors.as_deref(), args.r).map_err(CliError::Config)?;
        Ok(Self {
            task: args.task.into(),
            r: args.r,
            inputs,
            overlaps,
            priors,
            n: args.n,
        })
    }

    fn overlap(&self) -> Overlap {
        self.overlaps[0]
    }

    fn is_list(&self) -> bool {
        self.overlaps.len() > 1
    }

    fn copies(&self) -> Result<u32, CliError> {
        u32::try_from(self.n).map_err(|_| CliError::Config("--n is too large".into()))
    }

    /// Exact rationals for a two-state zero-error chain with a `p/q` overlap.
    fn exact(&self) -> Result<Option<ExactBinary>, CliError> {
        if self.task != Task::ZeroError || self.r != 2 || self.is_list() {
            return Ok(None);
        }
        let (Some(c), Some(p)) = (self.inputs[0].rational(), self.priors.exact.as_ref()) else {
            return Ok(None);
        };
        Ok(Some(ExactBinary::new(c.clone(), p[0].clone(), p[1].clone())?))
    }

    fn spec(&self) -> Result<ChainSpec, CliError> {
        let p = self.priors.values.clone();
        let spec = if self.is_list() {
            ChainSpec::with_schedule(self.task, self.r, OverlapSchedule::PerStep(self.overlaps.clone()), p)?
        } else {
            ChainSpec::new(self.task, self.r, self.overlap(), p)?
        };
        let spec = spec.with_horizon(self.n)?;
        Ok(match self.exact()? {
            Some(exact) => spec.with_exact(exact)?,
            None => spec,
        })
    }

    fn require_uniform(&self) -> Result<(), CliError> {
        let target = 1.0 / self.r as f64;
        if self.priors.values.iter().any(|p| (p - target).abs() > 1e-12) {
            return Err(seqdisc::Error::InvalidPriors(
                "three-state discrimination requires equal priors".into(),
            )
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub success: f64,
    pub inconclusive: f64,
    pub error: f64,
    pub regime: Regime,
    pub priors_swapped: bool,
    /// Gram eigenvalues at the `n`-copy overlap, in natural order.
    pub eigenvalues: Vec<f64>,
}

struct GlobalBound {
    success: f64,
    inconclusive: f64,
    error: f64,
    regime: Regime,
    priors_swapped: bool,
}

fn global_bound(ens: &Ensemble) -> Result<GlobalBound, CliError> {
    let n = ens.copies()?;
    let p = &ens.priors.values;
    let c = ens.overlap();
    let b = match (ens.task, ens.r) {
        (Task::MinError, 2) => helstrom_success_n(p[0], p[1], c.magnitude(), n)?,
        (Task::ZeroError, 2) => binary_zero_error_q(p[0], p[1], c.magnitude(), n)?,
        (Task::ZeroError, _) => {
            ens.require_uniform()?;
            symmetric_zero_error_q(c, ens.r, n)?
        }
        (Task::MinError, r) => {
            return Err(seqdisc::Error::Unsupported(format!(
                "no minimum-error bound for r = {r}"
            ))
            .into())
        }
    };
    let error = match ens.task {
        Task::MinError => 1.0 - b.success,
        Task::ZeroError => 0.0,
    };
    Ok(GlobalBound {
        success: b.success,
        inconclusive: b.inconclusive,
        error,
        regime: b.regime,
        priors_swapped: b.priors_swapped,
    })
}

pub fn bounds(args: &EnsembleArgs) -> Result<BoundsReport, CliError> {
    let ens = Ensemble::resolve(args, false)?;
    let b = global_bound(&ens)?;
    let c = normalize_overlap(ens.overlap(), ens.r);
    let eigenvalues = symmetric_eigenvalues(c.pow(ens.copies()?), ens.r)?;
    Ok(BoundsReport {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Bounds(args.clone()),
        success: b.success,
        inconclusive: b.inconclusive,
        error: b.error,
        regime: b.regime,
        priors_swapped: b.priors_swapped,
        eigenvalues,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub kind: PovmKind,
    pub dimension: usize,
    pub completeness_error: f64,
    pub min_effect_eigenvalue: f64,
    /// `probabilities[j][k]`: outcome `k` of `povm.effects` given state `j`.
    pub probabilities: Vec<Vec<f64>>,
    pub povm: PovmDocument,
}

pub fn povm(config: &PovmConfig) -> Result<PovmReport, CliError> {
    let ens = Ensemble::resolve(&config.ensemble, false)?;
    let c = normalize_overlap(ens.overlap(), ens.r);
    let states = canonical_states(c, ens.r)?;
    let p = &ens.priors.values;
    let need = |r: usize| -> Result<(), CliError> {
        if ens.r == r {
            Ok(())
        } else {
            Err(CliError::Config(format!("this construction needs --r {r}")))
        }
    };
    let built: Povm = match config.kind {
        Some(KindArg::Helstrom) => {
            need(2)?;
            helstrom_binary(p[0], p[1], &states)?
        }
        Some(KindArg::BinaryUnambiguous) => {
            need(2)?;
            binary_unambiguous_with(p[0], p[1], &states, None)?
        }
        Some(KindArg::TrineUnambiguous) => {
            need(3)?;
            three_state_unambiguous(&states)?
        }
        Some(KindArg::TrineExclusion) => {
            need(3)?;
            exclusion_povm(&states)?
        }
        Some(KindArg::IdentifyOrExclude) => {
            need(3)?;
            identify_exclude_povm(&states)?
        }
        None => match ens.exact()? {
            Some(exact) => binary_unambiguous_with(p[0], p[1], &states, Some(exact.regime_at(0)))?,
            None => {
                let spec = ens.spec()?;
                seqdisc::online::next_measurement(&spec.initial_belief(), &spec, ens.overlap())?
            }
        },
    };
    let probabilities = states
        .states()
        .iter()
        .map(|psi| built.probabilities(psi))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PovmReport {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Povm(config.clone()),
        kind: built.kind(),
        dimension: built.dim(),
        completeness_error: built.completeness_error(),
        min_effect_eigenvalue: built.min_effect_eigenvalue(),
        probabilities,
        povm: built.to_document(),
    })
}

/// When a two-state zero-error chain switches from single detection to the
/// three-outcome measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    /// Single-detection steps before the switch; `None` if it never happens.
    pub k0: Option<usize>,
    /// Measurement regime of each copy along the all-inconclusive path.
    pub regimes: Vec<BinaryRegime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub schema_version: u32,
    pub config: RunConfig,
    /// Regimes decided by rational comparison.
    pub exact_arithmetic: bool,
    pub success: f64,
    pub failure: f64,
    pub error: f64,
    pub paths: usize,
    pub max_invariant_deviation: f64,
    pub global_success: f64,
    /// `global_success - success`.
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switching: Option<SwitchReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub non_iid: Option<NonIidReport>,
}

fn switch_report(ens: &Ensemble, exact: Option<&ExactBinary>) -> Option<SwitchReport> {
    if ens.task != Task::ZeroError || ens.r != 2 || ens.is_list() {
        return None;
    }
    let (k0, regimes) = match exact {
        Some(exact) => (exact.k0(), (0..ens.n).map(|k| exact.regime_at(k)).collect()),
        None => {
            let p = &ens.priors.values;
            let c = ens.overlap().magnitude();
            let k0 = compute_k0(p[0], p[1], c);
            let first = binary_regime(p[0], p[1], c);
            let regimes = (0..ens.n)
                .map(|k| if k < k0 { first } else { BinaryRegime::ThreeOutcome })
                .collect();
            (k0, regimes)
        }
    };
    Some(SwitchReport {
        k0: (k0 != usize::MAX).then_some(k0),
        regimes,
    })
}

pub fn chain(args: &EnsembleArgs) -> Result<ChainReport, CliError> {
    let ens = Ensemble::resolve(args, true)?;
    let spec = ens.spec()?;
    let eval = evaluate_chain(&spec, ens.n)?;
    let (global_success, non_iid) = if ens.is_list() {
        let report = run_noniid(&ens.overlaps[..ens.n], ens.task, &ens.priors.values)?;
        (1.0 - report.global_failure, Some(report))
    } else {
        (global_bound(&ens)?.success, None)
    };
    Ok(ChainReport {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Chain(args.clone()),
        exact_arithmetic: spec.exact.is_some(),
        success: eval.success,
        failure: eval.failure,
        error: eval.error,
        paths: eval.paths,
        max_invariant_deviation: eval.max_invariant_deviation,
        global_success,
        gap: global_success - eval.success,
        switching: switch_report(&ens, spec.exact.as_ref()),
        non_iid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub success: f64,
    pub failure: f64,
    pub error: f64,
}

/// `None` marks an infinite score: a nonzero frequency for an outcome of
/// exact probability zero, or vice versa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub success: Option<f64>,
    pub failure: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub trials: u64,
    pub identified: u64,
    pub failed: u64,
    pub errors: u64,
    pub excluded_then_identified: u64,
    pub empirical: Rates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Rates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_scores: Option<ZScores>,
    pub max_invariant_deviation: f64,
    #[serde(rename = "WARN", default, skip_serializing_if = "Option::is_none")]
    pub warn: Option<String>,
}

impl SimulateReport {
    /// Zero-error runs must never identify the wrong state.
    pub fn misidentified(&self) -> bool {
        matches!(&self.config, RunConfig::Simulate(c) if c.ensemble.task == crate::config::TaskArg::ZeroError)
            && self.errors > 0
    }
}

fn z_score(frequency: f64, probability: f64, trials: u64) -> Option<f64> {
    let sigma = (probability * (1.0 - probability) / trials as f64).sqrt();
    if sigma > 0.0 {
        Some((frequency - probability) / sigma)
    } else if (frequency - probability).abs() <= 1e-12 {
        Some(0.0)
    } else {
        None
    }
}

pub fn simulate_run(
    config: &SimulateConfig,
    keep_traces: bool,
) -> Result<(SimulateReport, Vec<ProtocolTrace>), CliError> {
    let ens = Ensemble::resolve(&config.ensemble, true)?;
    if config.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    let spec = ens.spec()?;
    let sim = SimulationConfig {
        trials: config.trials,
        seed: config.seed,
        keep_traces: if keep_traces { config.keep_traces.min(config.trials) } else { 0 },
    };
    let stats = simulate(&spec, ens.n, &sim)?;
    let exact = if ens.task == Task::MinError && ens.n > MAX_MIN_ERROR_DEPTH {
        None
    } else {
        let ChainEvaluation { success, failure, error, .. } = evaluate_chain(&spec, ens.n)?;
        Some(Rates { success, failure, error })
    };
    let z_scores = exact.map(|e| ZScores {
        success: z_score(stats.success_rate, e.success, stats.trials),
        failure: z_score(stats.failure_rate, e.failure, stats.trials),
        error: z_score(stats.error_rate, e.error, stats.trials),
    });
    let mut warnings = Vec::new();
    if ens.task == Task::ZeroError && stats.errors > 0 {
        warnings.push(format!("{} zero-error misidentifications", stats.errors));
    }
    match &z_scores {
        Some(z) => {
            for (name, score) in [("success", z.success), ("failure", z.failure), ("error", z.error)] {
                match score {
                    Some(s) if s.abs() <= Z_WARN => {}
                    Some(s) => warnings.push(format!("{name} z-score {s:.3} exceeds {Z_WARN}")),
                    None => warnings.push(format!("{name} frequency contradicts an exact 0 or 1")),
                }
            }
        }
        None => warnings.push(format!(
            "no exact value beyond {MAX_MIN_ERROR_DEPTH} minimum-error copies"
        )),
    }
    let report = SimulateReport {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Simulate(config.clone()),
        trials: stats.trials,
        identified: stats.identified,
        failed: stats.failed,
        errors: stats.errors,
        excluded_then_identified: stats.excluded_then_identified,
        empirical: Rates {
            success: stats.success_rate,
            failure: stats.failure_rate,
            error: stats.error_rate,
        },
        exact,
        z_scores,
        max_invariant_deviation: stats.max_invariant_deviation,
        warn: (!warnings.is_empty()).then(|| warnings.join("; ")),
    };
    Ok((report, stats.traces))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub physical_cells: usize,
    /// Physical cells with `|gap| < 1e-6`.
    pub zero_gap_cells: usize,
    pub rows: Vec<ScanRow>,
}

pub fn scan(config: &ScanConfig) -> Result<ScanReport, CliError> {
    if config.n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let grid = match config.theta {
        Some(theta) => {
            if !theta.is_finite() {
                return Err(CliError::Config("--theta must be finite".into()));
            }
            let s_max = config.s_max.unwrap_or_else(|| physical_boundary(theta));
            if !(s_max > 0.0 && s_max <= 1.0) {
                return Err(CliError::Config(format!("--s-max {s_max} is outside (0, 1]")));
            }
            PolarGrid::slice(theta, config.radial, s_max)
        }
        None => {
            if config.s_max.is_some() {
                return Err(CliError::Config("--s-max applies only with --theta".into()));
            }
            PolarGrid::uniform(config.radial, config.angular)
        }
    };
    let cells = scan_plane(&grid, config.n, config.restarts)?;
    let rows: Vec<ScanRow> = cells.iter().map(|c| ScanRow::from_cell(c, config.n)).collect();
    Ok(ScanReport {
        schema_version: SCHEMA_VERSION,
        config: RunConfig::Scan(config.clone()),
        physical_cells: cells.iter().filter(|c| c.physical).count(),
        zero_gap_cells: zero_gap_locus(&cells, ZERO_GAP).len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TaskArg;

    fn args(task: TaskArg, c: &str) -> SimulateConfig {
        SimulateConfig {
            ensemble: EnsembleArgs {
                task,
                r: 2,
                c: c.into(),
                priors: None,
                n: 2,
            },
            trials: 500,
            seed: 1,
            keep_traces: 0,
        }
    }

    #[test]
    fn z_scores() {
        assert!((z_score(0.3, 0.25, 10_000).unwrap() - 0.05 / (0.1875f64 / 1e4).sqrt()).abs() < 1e-9);
        assert_eq!(z_score(0.0, 0.0, 10), Some(0.0));
        assert_eq!(z_score(0.1, 0.0, 10), None);
    }

    #[test]
    fn misidentification_gate_applies_to_zero_error_only() {
        let (mut report, _) = simulate_run(&args(TaskArg::ZeroError, "0.5"), false).unwrap();
        assert!(!report.misidentified());
        report.errors = 1;
        assert!(report.misidentified());
        let (report, _) = simulate_run(&args(TaskArg::MinError, "0.9"), false).unwrap();
        assert!(report.errors > 0);
        assert!(!report.misidentified());
    }

    #[test]
    fn float_switching_follows_first_regime() {
        let ens = Ensemble::resolve(
            &EnsembleArgs {
                task: TaskArg::ZeroError,
                r: 2,
                c: "0.5".into(),
                priors: Some("0.99,0.01".into()),
                n: 4,
            },
            false,
        )
        .unwrap();
        let report = switch_report(&ens, None).unwrap();
        assert_eq!(report.k0, Some(3));
        assert_eq!(report.regimes[0], BinaryRegime::DropSecond);
        assert_eq!(report.regimes[3], BinaryRegime::ThreeOutcome);
    }
}
