//! Explicit measurement constructions with validity and zero-error checks.
//!
//! Every constructor returns a [`Povm`] whose effects have been checked for
//! hermiticity, positivity and completeness. Matrices live in the span of the
//! states they act on, in the canonical basis of [`CanonicalStates`].

use serde::{Deserialize, Serialize};

use crate::ensemble::{CanonicalStates, SPAN_TOLERANCE};
use crate::linalg::{self, c64, CMatrix, CVector, C64};
use crate::{Error, Result};

pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;
pub const EFFECT_PSD_TOLERANCE: f64 = 1e-10;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Version of the JSON document produced by [`Povm::to_document`].
pub const POVM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    Identify(usize),
    Exclude(usize),
    Inconclusive,
}

impl std::fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutcomeLabel::Identify(i) => write!(f, "identify({i})"),
            OutcomeLabel::Exclude(i) => write!(f, "exclude({i})"),
            OutcomeLabel::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Which construction produced a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PovmKind {
    Helstrom,
    BinaryUnambiguous,
    /// Two-outcome unambiguous measurement that detects a single state.
    BinarySingleDetection,
    TrineUnambiguous,
    TrineExclusion,
    IdentifyOrExclude,
    /// Weighted family explored by the strategy search.
    Family,
}

impl std::fmt::Display for PovmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PovmKind::Helstrom => "helstrom",
            PovmKind::BinaryUnambiguous => "binary-unambiguous",
            PovmKind::BinarySingleDetection => "binary-single-detection",
            PovmKind::TrineUnambiguous => "trine-unambiguous",
            PovmKind::TrineExclusion => "trine-exclusion",
            PovmKind::IdentifyOrExclude => "identify-or-exclude",
            PovmKind::Family => "family",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct Effect {
    pub label: OutcomeLabel,
    pub matrix: CMatrix,
}

#[derive(Debug, Clone)]
pub struct Povm {
    kind: PovmKind,
    dim: usize,
    effects: Vec<Effect>,
}

impl Povm {
    /// Builds a POVM, rejecting non-Hermitian or negative effects and
    /// incomplete effect sets.
    pub fn new(kind: PovmKind, effects: Vec<Effect>) -> Result<Self> {
        let dim = effects
            .first()
            .map(|e| e.matrix.nrows())
            .ok_or_else(|| Error::InvalidPovm("no effects".into()))?;
        for effect in &effects {
            let m = &effect.matrix;
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.nrows().max(m.ncols()),
                });
            }
            if linalg::hermiticity_error(m) > HERMITIAN_TOLERANCE {
                return Err(Error::InvalidPovm(format!(
                    "effect {} is not Hermitian",
                    effect.label
                )));
            }
            let min = linalg::min_eigenvalue(m);
            if min < -EFFECT_PSD_TOLERANCE {
                return Err(Error::InvalidPovm(format!(
                    "effect {} has eigenvalue {min}",
                    effect.label
                )));
            }
        }
        let povm = Self { kind, dim, effects };
        let err = povm.completeness_error();
        if err > COMPLETENESS_TOLERANCE {
            return Err(Error::InvalidPovm(format!(
                "effects miss the identity by {err}"
            )));
        }
        Ok(povm)
    }

    pub fn kind(&self) -> PovmKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn labels(&self) -> Vec<OutcomeLabel> {
        self.effects.iter().map(|e| e.label).collect()
    }

    pub fn effect(&self, label: OutcomeLabel) -> Option<&Effect> {
        self.effects.iter().find(|e| e.label == label)
    }

    /// Largest entrywise deviation of the effect sum from the identity.
    pub fn completeness_error(&self) -> f64 {
        let sum = self
            .effects
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, e| acc + &e.matrix);
        linalg::max_abs_diff(&sum, &linalg::identity(self.dim))
    }

    pub fn min_effect_eigenvalue(&self) -> f64 {
        self.effects
            .iter()
            .map(|e| linalg::min_eigenvalue(&e.matrix))
            .fold(f64::INFINITY, f64::min)
    }

    /// Born-rule outcome probabilities for a pure state, in effect order.
    pub fn probabilities(&self, psi: &CVector) -> Result<Vec<f64>> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: psi.len(),
            });
        }
        Ok(self
            .effects
            .iter()
            .map(|e| linalg::expectation(psi, &e.matrix).re.max(0.0))
            .collect())
    }

    /// The same measurement written in a permuted basis; see
    /// [`linalg::permute_basis`].
    pub fn in_basis_order(&self, order: &[usize]) -> Povm {
        self.map_matrices(|m| linalg::permute_basis(m, order))
    }

    /// Inverse of [`Povm::in_basis_order`].
    pub fn from_basis_order(&self, order: &[usize]) -> Povm {
        self.map_matrices(|m| linalg::unpermute_basis(m, order))
    }

    fn map_matrices(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Povm {
        Povm {
            kind: self.kind,
            dim: self.dim,
            effects: self
                .effects
                .iter()
                .map(|e| Effect {
                    label: e.label,
                    matrix: f(&e.matrix),
                })
                .collect(),
        }
    }

    pub fn to_document(&self) -> PovmDocument {
        PovmDocument {
            schema_version: POVM_SCHEMA_VERSION,
            kind: self.kind,
            dimension: self.dim,
            effects: self
                .effects
                .iter()
                .map(|e| EffectDocument {
                    label: e.label,
                    matrix: (0..self.dim)
                        .map(|i| {
                            (0..self.dim)
                                .map(|j| [e.matrix[(i, j)].re, e.matrix[(i, j)].im])
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// JSON form of a POVM: labels plus row-major matrices of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmDocument {
    pub schema_version: u32,
    pub kind: PovmKind,
    pub dimension: usize,
    pub effects: Vec<EffectDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectDocument {
    pub label: OutcomeLabel,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl PovmDocument {
    pub fn to_povm(&self) -> Result<Povm> {
        let d = self.dimension;
        let effects = self
            .effects
            .iter()
            .map(|e| {
                if e.matrix.len() != d || e.matrix.iter().any(|row| row.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: e.matrix.len(),
                    });
                }
                Ok(Effect {
                    label: e.label,
                    matrix: CMatrix::from_fn(d, d, |i, j| c64(e.matrix[i][j][0], e.matrix[i][j][1])),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(self.kind, effects)
    }
}

fn remainder(dim: usize, effects: &[Effect]) -> CMatrix {
    effects
        .iter()
        .fold(linalg::identity(dim), |acc, e| acc - &e.matrix)
}

/// Helstrom measurement: projectors onto the positive and negative spectrum
/// of `eta0 |psi0><psi0| - eta1 |psi1><psi1|`.
///
/// Null directions of that operator, which appear only when a prior vanishes,
/// go to the hypothesis with the smaller prior; this is the limit of the
/// nondegenerate measurement.
pub fn helstrom_binary(eta0: f64, eta1: f64, states: &CanonicalStates) -> Result<Povm> {
    if states.r() != 2 {
        return Err(Error::Precondition("Helstrom measurement needs two states".into()));
    }
    check_binary_priors(eta0, eta1)?;
    let gamma = linalg::ket_bra(states.state(0)).scale(eta0)
        - linalg::ket_bra(states.state(1)).scale(eta1);
    let (e0, e1) = sign_split(&gamma, eta0 <= eta1);
    Povm::new(
        PovmKind::Helstrom,
        vec![
            Effect {
                label: OutcomeLabel::Identify(0),
                matrix: e0,
            },
            Effect {
                label: OutcomeLabel::Identify(1),
                matrix: e1,
            },
        ],
    )
}

/// Projectors onto the positive and negative spectrum of a Hermitian matrix.
/// Null directions join the first projector when `null_to_first` is set.
/// Two-dimensional inputs use the closed form `(1 +- (m - t)/r)/2`.
fn sign_split(m: &CMatrix, null_to_first: bool) -> (CMatrix, CMatrix) {
    const NULL: f64 = 1e-15;
    let d = m.nrows();
    let goes_first = |value: f64| value > NULL || (value.abs() <= NULL && null_to_first);
    let mut first = CMatrix::zeros(d, d);
    let mut second = CMatrix::zeros(d, d);
    if d == 2 {
        let t = (m[(0, 0)].re + m[(1, 1)].re) / 2.0;
        let half_gap = (m[(0, 0)].re - m[(1, 1)].re) / 2.0;
        let r = half_gap.hypot(m[(0, 1)].norm());
        let id = linalg::identity(2);
        if r <= NULL {
            return if goes_first(t) { (id, second) } else { (first, id) };
        }
        let plus = (&id + (m - &id.scale(t)).unscale(r)).scale(0.5);
        let minus = &id - &plus;
        for (value, projector) in [(t + r, plus), (t - r, minus)] {
            if goes_first(value) {
                first += projector;
            } else {
                second += projector;
            }
        }
        return (first, second);
    }
    for (value, v) in linalg::hermitian_eigen(m) {
        let projector = linalg::ket_bra(&v);
        if goes_first(value) {
            first += projector;
        } else {
            second += projector;
        }
    }
    (first, second)
}

/// Born probabilities of the Helstrom measurement for two states with real
/// overlap `c`: `table[outcome][state]`.
///
/// Written without cancellation so that rare outcomes keep full relative
/// precision, which matters when the posterior is updated on them.
pub fn helstrom_likelihoods(eta0: f64, eta1: f64, c: f64) -> [[f64; 2]; 2] {
    let c2 = c * c;
    let d = (1.0 - 4.0 * eta0 * eta1 * c2).max(0.0).sqrt();
    if d == 0.0 {
        return [[1.0, 1.0], [0.0, 0.0]];
    }
    // (correct, wrong) for the state whose competitor has prior `other`
    let split = |other: f64| {
        let x = 1.0 - 2.0 * other * c2;
        let small = 2.0 * other * other * c2 * (1.0 - c2) / (d * (d + x.abs()));
        if x >= 0.0 {
            (1.0 - small, small)
        } else {
            (small, 1.0 - small)
        }
    };
    let (ok0, wrong0) = split(eta1);
    let (ok1, wrong1) = split(eta0);
    [[ok0, wrong1], [wrong0, ok1]]
}

fn check_binary_priors(eta0: f64, eta1: f64) -> Result<()> {
    if eta0 < 0.0 || eta1 < 0.0 || (eta0 + eta1 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPriors(format!("({eta0}, {eta1})")));
    }
    Ok(())
}

/// Shape of the optimal binary unambiguous measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryRegime {
    /// Both states can be detected.
    ThreeOutcome,
    /// Detection of the first state is given up (`q_first = 1`).
    DropFirst,
    /// Detection of the second state is given up (`q_second = 1`).
    DropSecond,
}

/// Classifies the prior ratio against `c^2`. The boundary `eta_a / eta_b =
/// c^2` (relative tolerance 1e-12) counts as three-outcome.
pub fn binary_regime(eta_a: f64, eta_b: f64, c: f64) -> BinaryRegime {
    let c2 = c * c;
    let slack = 1.0 - 1e-12;
    if eta_a < c2 * eta_b * slack {
        BinaryRegime::DropFirst
    } else if eta_b < c2 * eta_a * slack {
        BinaryRegime::DropSecond
    } else {
        BinaryRegime::ThreeOutcome
    }
}

/// Optimal conditional failure probabilities `(q_a, q_b)` in a given regime.
pub fn binary_failures(eta_a: f64, eta_b: f64, c: f64, regime: BinaryRegime) -> (f64, f64) {
    let c2 = c * c;
    match regime {
        BinaryRegime::DropFirst => (1.0, c2),
        BinaryRegime::DropSecond => (c2, 1.0),
        BinaryRegime::ThreeOutcome if c == 0.0 => (0.0, 0.0),
        BinaryRegime::ThreeOutcome => (
            (c * (eta_b / eta_a).sqrt()).min(1.0),
            (c * (eta_a / eta_b).sqrt()).min(1.0),
        ),
    }
}

/// Optimal unambiguous discrimination of two arbitrary pure states in a common
/// space. Effects outside the span of the pair fall into the inconclusive
/// outcome. `regime` overrides the floating-point classification.
pub fn unambiguous_pair(
    psi_a: &CVector,
    psi_b: &CVector,
    labels: (usize, usize),
    priors: (f64, f64),
    regime: Option<BinaryRegime>,
) -> Result<Povm> {
    if psi_a.len() != psi_b.len() {
        return Err(Error::DimensionMismatch {
            expected: psi_a.len(),
            found: psi_b.len(),
        });
    }
    let (eta_a, eta_b) = priors;
    check_binary_priors(eta_a, eta_b)?;
    let overlap = linalg::inner(psi_b, psi_a);
    let c = overlap.norm();
    if c >= 1.0 - 1e-12 {
        return Err(Error::Precondition(
            "states are indistinguishable (|c| = 1)".into(),
        ));
    }
    let regime = regime.unwrap_or_else(|| binary_regime(eta_a, eta_b, c));
    let (q_a, q_b) = binary_failures(eta_a, eta_b, c, regime);
    let scale = 1.0 - c * c;

    // |b_perp> is orthogonal to psi_b inside span{psi_a, psi_b}
    let b_perp = (psi_a - psi_b * overlap).normalize();
    let a_perp = (psi_b - psi_a * overlap.conj()).normalize();
    let detect_a = Effect {
        label: OutcomeLabel::Identify(labels.0),
        matrix: linalg::ket_bra(&b_perp).scale((1.0 - q_a) / scale),
    };
    let detect_b = Effect {
        label: OutcomeLabel::Identify(labels.1),
        matrix: linalg::ket_bra(&a_perp).scale((1.0 - q_b) / scale),
    };
    let (kind, mut effects) = match regime {
        BinaryRegime::ThreeOutcome => (PovmKind::BinaryUnambiguous, vec![detect_a, detect_b]),
        BinaryRegime::DropFirst => (PovmKind::BinarySingleDetection, vec![detect_b]),
        BinaryRegime::DropSecond => (PovmKind::BinarySingleDetection, vec![detect_a]),
    };
    let inconclusive = remainder(psi_a.len(), &effects);
    effects.push(Effect {
        label: OutcomeLabel::Inconclusive,
        matrix: inconclusive,
    });
    Povm::new(kind, effects)
}

/// Optimal zero-error measurement for two canonical states with priors
/// `(eta0, eta1)`.
pub fn binary_unambiguous(eta0: f64, eta1: f64, states: &CanonicalStates) -> Result<Povm> {
    binary_unambiguous_with(eta0, eta1, states, None)
}

pub fn binary_unambiguous_with(
    eta0: f64,
    eta1: f64,
    states: &CanonicalStates,
    regime: Option<BinaryRegime>,
) -> Result<Povm> {
    if states.r() != 2 {
        return Err(Error::Precondition("binary measurement needs two states".into()));
    }
    unambiguous_pair(states.state(0), states.state(1), (0, 1), (eta0, eta1), regime)
}

/// Trine eigendata in some ordering of the canonical basis.
struct TrineBasis {
    eigenvalues: [f64; 3],
    phases: [C64; 3],
}

impl TrineBasis {
    fn ordered(states: &CanonicalStates, order: [usize; 3]) -> Self {
        Self {
            eigenvalues: order.map(|k| states.eigenvalues()[k]),
            phases: order.map(|k| states.phases()[k]),
        }
    }

    fn rotate(&self, v: &CVector, power: usize) -> CVector {
        CVector::from_iterator(3, (0..3).map(|i| self.phases[i].powu(power as u32) * v[i]))
    }

    /// `|phi_k> = U^k sum_i (3 lambda_i)^{-1/2} |i>`, with `<phi_i|psi_j> = delta_ij`.
    fn duals(&self) -> Vec<CVector> {
        let fiducial = CVector::from_iterator(
            3,
            self.eigenvalues.iter().map(|l| c64((1.0 / (3.0 * l)).sqrt(), 0.0)),
        );
        (0..3).map(|k| self.rotate(&fiducial, k)).collect()
    }
}

fn require_trine(states: &CanonicalStates) -> Result<()> {
    if states.r() != 3 {
        return Err(Error::Precondition("expected three symmetric states".into()));
    }
    Ok(())
}

fn require_independent(states: &CanonicalStates) -> Result<()> {
    if states.dim() < 3 {
        return Err(Error::Precondition(
            "states are linearly dependent; use the exclusion measurement".into(),
        ));
    }
    Ok(())
}

/// Unnormalised dual vectors `|phi_k>` with `<phi_i|psi_j> = delta_ij`.
pub fn dual_states(states: &CanonicalStates) -> Result<Vec<CVector>> {
    require_trine(states)?;
    require_independent(states)?;
    Ok(TrineBasis::ordered(states, [0, 1, 2]).duals())
}

/// Equal-prior optimal unambiguous measurement for three symmetric states:
/// `F_k = p |phi_k><phi_k|` with `p` the smallest Gram eigenvalue.
pub fn three_state_unambiguous(states: &CanonicalStates) -> Result<Povm> {
    require_trine(states)?;
    require_independent(states)?;
    let p = states
        .eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut effects: Vec<Effect> = dual_states(states)?
        .iter()
        .enumerate()
        .map(|(k, phi)| Effect {
            label: OutcomeLabel::Identify(k),
            matrix: linalg::ket_bra(phi).scale(p),
        })
        .collect();
    let inconclusive = remainder(3, &effects);
    effects.push(Effect {
        label: OutcomeLabel::Inconclusive,
        matrix: inconclusive,
    });
    Povm::new(PovmKind::TrineUnambiguous, effects)
}

/// Exclusion measurement for the linearly dependent trine `c = -1/2`:
/// `E_k = (2/3) |psi_k^perp><psi_k^perp|` on the two-dimensional span.
pub fn exclusion_povm(states: &CanonicalStates) -> Result<Povm> {
    require_trine(states)?;
    let c = states.overlap();
    if !c.is_real() || (c.re() + 0.5).abs() > 1e-10 || states.dim() != 2 {
        return Err(Error::Precondition(format!(
            "exclusion measurement requires c = -1/2, got {c}"
        )));
    }
    let effects = states
        .states()
        .iter()
        .enumerate()
        .map(|(k, psi)| {
            let perp = CVector::from_column_slice(&[-psi[1].conj(), psi[0].conj()]);
            Effect {
                label: OutcomeLabel::Exclude(k),
                matrix: linalg::ket_bra(&perp).scale(2.0 / 3.0),
            }
        })
        .collect();
    Povm::new(PovmKind::TrineExclusion, effects)
}

/// Basis ordering used by [`identify_exclude_povm`]: the two large
/// eigenvalues `1 + |c|` first, the small one `1 - 2|c|` last.
pub fn identify_exclude_order(states: &CanonicalStates) -> [usize; 3] {
    let values = states.eigenvalues();
    let smallest = (0..3)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    let mut order = [0; 3];
    let mut slot = 0;
    for k in (0..3).filter(|&k| k != smallest) {
        order[slot] = k;
        slot += 1;
    }
    order[2] = smallest;
    order
}

/// Identify-or-exclude measurement for real `-1/2 < c < 0`.
///
/// Built in the ordered basis of [`identify_exclude_order`], where
/// `1 - sum F = 3|c|/(1+|c|) diag(1, 1, 0)`, then mapped back to the canonical
/// basis. The exclusion weight is `|c|/(1+|c|)` on `|0> - |1>` and its
/// rotations; the three rotations together fill the `diag(1, 1, 0)` block.
pub fn identify_exclude_povm(states: &CanonicalStates) -> Result<Povm> {
    require_trine(states)?;
    let c = states.overlap();
    if !c.is_real() || c.re() >= 0.0 || c.re() <= -0.5 {
        return Err(Error::Precondition(format!(
            "identify-or-exclude measurement requires -1/2 < c < 0, got {c}"
        )));
    }
    require_independent(states)?;
    let s = c.magnitude();
    let order = identify_exclude_order(states);
    let basis = TrineBasis::ordered(states, order);

    let identify_weight = 1.0 - 2.0 * s;
    let exclude_weight = s / (1.0 + s);
    let exclusion_axis = CVector::from_column_slice(&[c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)]);

    let mut effects: Vec<Effect> = basis
        .duals()
        .iter()
        .enumerate()
        .map(|(k, phi)| Effect {
            label: OutcomeLabel::Identify(k),
            matrix: linalg::ket_bra(phi).scale(identify_weight),
        })
        .collect();
    effects.extend((0..3).map(|k| Effect {
        label: OutcomeLabel::Exclude(k),
        matrix: linalg::ket_bra(&basis.rotate(&exclusion_axis, k)).scale(exclude_weight),
    }));
    let ordered = Povm::new(PovmKind::IdentifyOrExclude, effects)?;
    Ok(ordered.from_basis_order(&order))
}

/// Outcome probabilities of `povm` when the true state is `true_state_index`.
pub fn born_outcome_distribution(
    povm: &Povm,
    true_state_index: usize,
    states: &CanonicalStates,
) -> Result<Vec<f64>> {
    if true_state_index >= states.r() {
        return Err(Error::Precondition(format!(
            "state index {true_state_index} out of range"
        )));
    }
    povm.probabilities(states.state(true_state_index))
}

/// Largest Born probability of an outcome that the zero-error contract forbids:
/// `Identify(i)` under state `j != i`, or `Exclude(k)` under state `k`.
pub fn zero_error_violation(povm: &Povm, states: &[CVector]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (j, psi) in states.iter().enumerate() {
        for (effect, p) in povm.effects().iter().zip(povm.probabilities(psi)?) {
            let forbidden = match effect.label {
                OutcomeLabel::Identify(i) => i != j,
                OutcomeLabel::Exclude(k) => k == j,
                OutcomeLabel::Inconclusive => false,
            };
            if forbidden {
                worst = worst.max(p);
            }
        }
    }
    Ok(worst)
}

/// True when every Gram eigenvalue of `states` is strictly positive.
pub fn linearly_independent(states: &CanonicalStates) -> bool {
    states.eigenvalues().iter().all(|&l| l > SPAN_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{canonical_states, Overlap};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn trine(c: f64) -> CanonicalStates {
        canonical_states(Overlap::real(c).unwrap(), 3).unwrap()
    }

    fn binary(c: f64) -> CanonicalStates {
        canonical_states(Overlap::real(c).unwrap(), 2).unwrap()
    }

    fn prob(povm: &Povm, label: OutcomeLabel, psi: &CVector) -> f64 {
        povm.effect(label)
            .map(|e| linalg::expectation(psi, &e.matrix).re)
            .unwrap_or(0.0)
    }

    /// Success of a two-outcome guess, from the Born rule.
    fn helstrom_success(povm: &Povm, eta0: f64, eta1: f64, states: &CanonicalStates) -> f64 {
        eta0 * prob(povm, OutcomeLabel::Identify(0), states.state(0))
            + eta1 * prob(povm, OutcomeLabel::Identify(1), states.state(1))
    }

    /// `(1 + ||Gamma||_1) / 2` from the roots of the 2x2 characteristic polynomial.
    fn trace_norm_oracle(eta0: f64, eta1: f64, c: f64) -> f64 {
        let trace = eta0 - eta1;
        let det = -eta0 * eta1 * (1.0 - c * c);
        let disc = (trace * trace - 4.0 * det).sqrt();
        let l1 = (trace + disc) / 2.0;
        let l2 = (trace - disc) / 2.0;
        (1.0 + l1.abs() + l2.abs()) / 2.0
    }

    #[test]
    fn helstrom_orthogonal_states() {
        let states = binary(0.0);
        let povm = helstrom_binary(0.5, 0.5, &states).unwrap();
        assert!((helstrom_success(&povm, 0.5, 0.5, &states) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn helstrom_success_examples() {
        let states = binary(0.6);
        let povm = helstrom_binary(0.5, 0.5, &states).unwrap();
        assert!((helstrom_success(&povm, 0.5, 0.5, &states) - 0.9).abs() < 1e-12);

        let states = binary(0.5);
        let povm = helstrom_binary(0.9, 0.1, &states).unwrap();
        let expected = (1.0 + 0.91f64.sqrt()) / 2.0;
        assert!((trace_norm_oracle(0.9, 0.1, 0.5) - expected).abs() < 1e-14);
        assert!((helstrom_success(&povm, 0.9, 0.1, &states) - expected).abs() < 1e-12);
    }

    #[test]
    fn helstrom_null_direction_joins_smaller_prior() {
        let states = binary(0.4);
        let povm = helstrom_binary(1.0, 0.0, &states).unwrap();
        // Gamma = |psi0><psi0| has a null direction; outcome 0 is the projector on psi0
        let e0 = &povm.effect(OutcomeLabel::Identify(0)).unwrap().matrix;
        assert!(linalg::max_abs_diff(e0, &linalg::ket_bra(states.state(0))) < 1e-12);
        let table = helstrom_likelihoods(1.0, 0.0, 0.4);
        assert!((table[0][1] - 0.16).abs() < 1e-15);
    }

    #[test]
    fn identical_states_guess_first() {
        let states = binary(1.0);
        let povm = helstrom_binary(0.5, 0.5, &states).unwrap();
        let p = born_outcome_distribution(&povm, 1, &states).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        assert_eq!(helstrom_likelihoods(0.5, 0.5, 1.0), [[1.0, 1.0], [0.0, 0.0]]);
    }

    #[test]
    fn binary_unambiguous_symmetric() {
        let states = binary(0.5);
        let povm = binary_unambiguous(0.5, 0.5, &states).unwrap();
        assert_eq!(povm.kind(), PovmKind::BinaryUnambiguous);
        let dist = born_outcome_distribution(&povm, 0, &states).unwrap();
        let expected = [0.5, 0.0, 0.5];
        for (p, e) in dist.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12, "{dist:?}");
        }
        let q1 = prob(&povm, OutcomeLabel::Inconclusive, states.state(1));
        assert!((q1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn binary_unambiguous_biased_drops_detection() {
        let states = binary(0.5);
        let povm = binary_unambiguous(0.1, 0.9, &states).unwrap();
        assert_eq!(povm.kind(), PovmKind::BinarySingleDetection);
        assert_eq!(
            povm.labels(),
            vec![OutcomeLabel::Identify(1), OutcomeLabel::Inconclusive]
        );
        let q0 = prob(&povm, OutcomeLabel::Inconclusive, states.state(0));
        let q1 = prob(&povm, OutcomeLabel::Inconclusive, states.state(1));
        assert!((q0 - 1.0).abs() < 1e-12);
        assert!((q1 - 0.25).abs() < 1e-12);

        let mirrored = binary_unambiguous(0.9, 0.1, &states).unwrap();
        assert_eq!(
            mirrored.labels(),
            vec![OutcomeLabel::Identify(0), OutcomeLabel::Inconclusive]
        );
    }

    #[test]
    fn binary_unambiguous_boundary_is_three_outcome() {
        // eta0 / eta1 = c^2: q0 = c sqrt(eta1 / eta0) = 1
        let states = binary(0.5);
        let povm = binary_unambiguous(0.2, 0.8, &states).unwrap();
        assert_eq!(povm.kind(), PovmKind::BinaryUnambiguous);
        let f0 = &povm.effect(OutcomeLabel::Identify(0)).unwrap().matrix;
        assert!(f0.norm() < 1e-12);
        let q0 = prob(&povm, OutcomeLabel::Inconclusive, states.state(0));
        let q1 = prob(&povm, OutcomeLabel::Inconclusive, states.state(1));
        assert!((q0 - 1.0).abs() < 1e-12);
        assert!((q1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn binary_unambiguous_rejects_identical_states() {
        let states = binary(1.0);
        assert!(matches!(
            binary_unambiguous(0.5, 0.5, &states),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trine_orthogonal_is_projective() {
        let states = trine(0.0);
        let povm = three_state_unambiguous(&states).unwrap();
        for k in 0..3 {
            let f = &povm.effect(OutcomeLabel::Identify(k)).unwrap().matrix;
            assert!(linalg::max_abs_diff(f, &linalg::ket_bra(states.state(k))) < 1e-12);
        }
        let fi = &povm.effect(OutcomeLabel::Inconclusive).unwrap().matrix;
        assert!(fi.norm() < 1e-12);
    }

    #[test]
    fn trine_positive_overlap() {
        let states = trine(0.4);
        let povm = three_state_unambiguous(&states).unwrap();
        for j in 0..3 {
            let dist = born_outcome_distribution(&povm, j, &states).unwrap();
            assert!((dist[j] - 0.6).abs() < 1e-12);
            assert!((dist[3] - 0.4).abs() < 1e-12);
        }
        let duals = dual_states(&states).unwrap();
        for (i, phi) in duals.iter().enumerate() {
            for (j, psi) in states.states().iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((linalg::inner(phi, psi) - c64(expected, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn trine_complex_overlap() {
        let c = Overlap::polar(0.3, PI / 4.0).unwrap();
        let states = canonical_states(c, 3).unwrap();
        let povm = three_state_unambiguous(&states).unwrap();
        let p = 1.0 + 0.6 * (PI / 4.0 + 2.0 * PI / 3.0).cos();
        // independent check: smallest eigenvalue from a direct eigensolve
        let numeric = crate::ensemble::gram_of(c, 3).unwrap().eigenvalues()[0];
        assert!((p - numeric).abs() < 1e-12);
        for j in 0..3 {
            let dist = born_outcome_distribution(&povm, j, &states).unwrap();
            assert!((dist[j] - p).abs() < 1e-12);
        }
        let fi = &povm.effect(OutcomeLabel::Inconclusive).unwrap().matrix;
        assert!(linalg::min_eigenvalue(fi) >= -1e-10);
    }

    #[test]
    fn trine_dependent_states_refused() {
        let states = trine(-0.5);
        assert!(matches!(
            three_state_unambiguous(&states),
            Err(Error::Precondition(msg)) if msg.contains("exclusion")
        ));
    }

    #[test]
    fn exclusion_measurement() {
        let states = trine(-0.5);
        let povm = exclusion_povm(&states).unwrap();
        assert_eq!(povm.dim(), 2);
        for j in 0..3 {
            let dist = born_outcome_distribution(&povm, j, &states).unwrap();
            for (k, p) in dist.iter().enumerate() {
                let expected = if k == j { 0.0 } else { 0.5 };
                assert!((p - expected).abs() < 1e-12, "state {j}: {dist:?}");
            }
        }
        assert!(exclusion_povm(&trine(-0.4)).is_err());
    }

    #[test]
    fn identify_exclude_probabilities() {
        let states = trine(-0.3);
        let povm = identify_exclude_povm(&states).unwrap();
        assert_eq!(povm.effects().len(), 6);
        let dist = born_outcome_distribution(&povm, 0, &states).unwrap();
        let labels = povm.labels();
        for (label, p) in labels.iter().zip(&dist) {
            let expected = match label {
                OutcomeLabel::Identify(0) => 0.4,
                OutcomeLabel::Exclude(1) | OutcomeLabel::Exclude(2) => 0.3,
                _ => 0.0,
            };
            assert!((p - expected).abs() < 1e-12, "{label}: {p}");
        }
        let total: f64 = dist.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identify_exclude_remainder_in_ordered_basis() {
        let states = trine(-0.3);
        let order = identify_exclude_order(&states);
        assert_eq!(order, [1, 2, 0]);
        let ordered = identify_exclude_povm(&states).unwrap().in_basis_order(&order);
        let identify_sum = ordered
            .effects()
            .iter()
            .filter(|e| matches!(e.label, OutcomeLabel::Identify(_)))
            .fold(CMatrix::zeros(3, 3), |acc, e| acc + &e.matrix);
        let w = 3.0 * 0.3 / 1.3;
        let expected = linalg::diagonal(&[c64(w, 0.0), c64(w, 0.0), c64(0.0, 0.0)]);
        assert!(linalg::max_abs_diff(&(linalg::identity(3) - identify_sum), &expected) < 1e-10);
    }

    #[test]
    fn identify_exclude_reduces_to_unambiguous_near_zero() {
        let states = trine(-1e-9);
        let povm = identify_exclude_povm(&states).unwrap();
        let plain = three_state_unambiguous(&states).unwrap();
        for k in 0..3 {
            let e = &povm.effect(OutcomeLabel::Exclude(k)).unwrap().matrix;
            assert!(e.norm() < 1e-8);
            let f = &povm.effect(OutcomeLabel::Identify(k)).unwrap().matrix;
            let g = &plain.effect(OutcomeLabel::Identify(k)).unwrap().matrix;
            assert!(linalg::max_abs_diff(f, g) < 1e-8);
        }
    }

    #[test]
    fn identify_exclude_range_checked() {
        assert!(identify_exclude_povm(&trine(0.2)).is_err());
        assert!(identify_exclude_povm(&trine(-0.5)).is_err());
    }

    #[test]
    fn basis_projector_distribution() {
        let states = trine(0.0);
        let povm = three_state_unambiguous(&states).unwrap();
        let dist = born_outcome_distribution(&povm, 0, &states).unwrap();
        assert!((dist[0] - 1.0).abs() < 1e-12);
        assert!(dist[1..].iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn document_round_trip() {
        let states = canonical_states(Overlap::polar(0.3, 1.0).unwrap(), 3).unwrap();
        let povm = three_state_unambiguous(&states).unwrap();
        let json = serde_json::to_string(&povm.to_document()).unwrap();
        let doc: PovmDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, povm.to_document());
        let back = doc.to_povm().unwrap();
        assert_eq!(back.labels(), povm.labels());
        assert!(json.contains("\"identify\":0"));
    }

    #[test]
    fn invalid_povm_rejected() {
        let bad = vec![Effect {
            label: OutcomeLabel::Inconclusive,
            matrix: linalg::identity(2).scale(0.5),
        }];
        assert!(matches!(
            Povm::new(PovmKind::Family, bad),
            Err(Error::InvalidPovm(_))
        ));
    }

    fn check_povm(povm: &Povm, states: &CanonicalStates) -> std::result::Result<(), TestCaseError> {
        prop_assert!(povm.completeness_error() < 1e-10);
        prop_assert!(povm.min_effect_eigenvalue() >= -1e-10);
        for j in 0..states.r() {
            let total: f64 = born_outcome_distribution(povm, j, states).unwrap().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
        Ok(())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(250))]

        #[test]
        fn random_binary_constructions(c in 0.0..0.999f64, eta0 in 0.0..1.0f64) {
            let states = binary(c);
            let eta1 = 1.0 - eta0;
            let helstrom = helstrom_binary(eta0, eta1, &states).unwrap();
            check_povm(&helstrom, &states)?;
            let expected = (1.0 + (1.0 - 4.0 * eta0 * eta1 * c * c).sqrt()) / 2.0;
            prop_assert!((helstrom_success(&helstrom, eta0, eta1, &states) - expected).abs() < 1e-12);

            let table = helstrom_likelihoods(eta0, eta1, c);
            for (j, column) in [0usize, 1].iter().enumerate() {
                let born = born_outcome_distribution(&helstrom, *column, &states).unwrap();
                prop_assert!((born[0] - table[0][j]).abs() < 1e-12);
                prop_assert!((born[1] - table[1][j]).abs() < 1e-12);
            }

            let ua = binary_unambiguous(eta0, eta1, &states).unwrap();
            check_povm(&ua, &states)?;
            prop_assert!(zero_error_violation(&ua, states.states()).unwrap() < 1e-12);
        }

        #[test]
        fn random_trine_constructions(s in 0.0..1.0f64, theta in 0.0..(2.0 * PI)) {
            let c = Overlap::polar(s, theta).unwrap();
            prop_assume!(crate::ensemble::is_physical(c, 3));
            let states = canonical_states(c, 3).unwrap();
            prop_assume!(linearly_independent(&states) && states.eigenvalues().iter().all(|&l| l > 1e-6));
            let povm = three_state_unambiguous(&states).unwrap();
            check_povm(&povm, &states)?;
            prop_assert!(zero_error_violation(&povm, states.states()).unwrap() < 1e-12);
        }

        #[test]
        fn random_identify_exclude(c in -0.4999f64..-1e-6) {
            let states = trine(c);
            let povm = identify_exclude_povm(&states).unwrap();
            check_povm(&povm, &states)?;
            prop_assert!(zero_error_violation(&povm, states.states()).unwrap() < 1e-12);
            for j in 0..3 {
                let dist = born_outcome_distribution(&povm, j, &states).unwrap();
                let identify: f64 = povm.labels().iter().zip(&dist)
                    .filter(|(l, _)| matches!(l, OutcomeLabel::Identify(_))).map(|(_, p)| p).sum();
                let exclude: f64 = povm.labels().iter().zip(&dist)
                    .filter(|(l, _)| matches!(l, OutcomeLabel::Exclude(_))).map(|(_, p)| p).sum();
                prop_assert!((identify + exclude - 1.0).abs() < 1e-12);
                prop_assert!((identify - (1.0 + 2.0 * c)).abs() < 1e-12);
            }
        }
    }
}
