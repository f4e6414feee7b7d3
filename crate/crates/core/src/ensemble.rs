//! Symmetric ensembles, their Gram matrices and canonical state vectors.
//!
//! An ensemble of `r` symmetric pure states is fixed by a single complex
//! overlap `c`. The states are generated from one fiducial vector by powers of
//! a diagonal unitary, so in the eigenbasis of that unitary every state has the
//! same real amplitudes `xi_k = sqrt(lambda_k / r)`, with `lambda_k` the
//! eigenvalues of the Gram matrix.
//!
//! Conventions:
//! - The three-state Gram matrix is circulant, `<psi_0|psi_1> = <psi_1|psi_2>
//!   = <psi_2|psi_0> = c`, so `g_01 = g_12 = g_20 = c`.
//! - Eigenvalues are kept in their natural index order
//!   `lambda_k = 1 + 2 s cos(theta + 2 k pi / 3)`; sorting is explicit.
//! - The generating unitary is `U = diag(e^{-2 pi i k / r})` and
//!   `|psi_j> = U^j |psi_0>`. With this sign the states reproduce `g_01 = c`.
//! - For two states the overlap is taken as `|c|`; its phase is absorbed into
//!   the states.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c64, CMatrix, CVector, C64};
use crate::{Error, Result};

/// Minimum Gram eigenvalue accepted as positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Eigenvalues at or below this are treated as zero when picking the span.
pub const SPAN_TOLERANCE: f64 = 1e-12;

const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

/// Complex overlap `c = s e^{i theta}` between consecutive symmetric states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    re: f64,
    im: f64,
}

impl Overlap {
    pub fn new(value: C64) -> Result<Self> {
        let s = value.norm();
        if !s.is_finite() || s > 1.0 + 1e-12 {
            return Err(Error::OverlapOutOfRange(s));
        }
        Ok(Self {
            re: value.re,
            im: value.im,
        })
    }

    pub fn real(c: f64) -> Result<Self> {
        Self::new(c64(c, 0.0))
    }

    pub fn polar(s: f64, theta: f64) -> Result<Self> {
        if s < 0.0 {
            return Err(Error::OverlapOutOfRange(s));
        }
        Self::new(C64::from_polar(s, theta))
    }

    pub fn value(&self) -> C64 {
        c64(self.re, self.im)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    /// `s = |c|`.
    pub fn magnitude(&self) -> f64 {
        self.value().norm()
    }

    /// `theta = arg c`, in `(-pi, pi]`.
    pub fn phase(&self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn is_real(&self) -> bool {
        self.im.abs() <= 1e-12
    }

    /// The overlap between `n`-fold tensor copies, `c^n`.
    pub fn pow(&self, n: u32) -> Self {
        let value = if self.is_real() {
            c64(self.re.powi(n as i32), 0.0)
        } else {
            self.value().powu(n)
        };
        Self {
            re: value.re,
            im: value.im,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_real() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{}@{}", self.magnitude(), self.phase())
        }
    }
}

fn check_rank(r: usize) -> Result<()> {
    if r == 2 || r == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedRank(r))
    }
}

/// Checks that `priors` is a probability vector of length `r`.
pub fn validate_priors(priors: &[f64], r: usize) -> Result<()> {
    if priors.len() != r {
        return Err(Error::InvalidPriors(format!(
            "expected {r} priors, got {}",
            priors.len()
        )));
    }
    if let Some(p) = priors.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidPriors(format!("prior {p} is negative")));
    }
    let sum: f64 = priors.iter().sum();
    if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
        return Err(Error::InvalidPriors(format!("priors sum to {sum}, not 1")));
    }
    Ok(())
}

/// `r` symmetric pure states with overlap `c` and prior weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricEnsemble {
    r: usize,
    overlap: Overlap,
    priors: Vec<f64>,
}

impl SymmetricEnsemble {
    pub fn new(r: usize, overlap: Overlap, priors: Vec<f64>) -> Result<Self> {
        check_rank(r)?;
        validate_priors(&priors, r)?;
        let overlap = normalize_overlap(overlap, r);
        if !is_physical(overlap, r) {
            return Err(Error::NonPhysical(overlap.to_string()));
        }
        Ok(Self {
            r,
            overlap,
            priors,
        })
    }

    pub fn uniform(r: usize, overlap: Overlap) -> Result<Self> {
        Self::new(r, overlap, vec![1.0 / r as f64; r])
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn overlap(&self) -> Overlap {
        self.overlap
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }
}

/// Two-state overlaps lose their phase; three-state overlaps are kept as is.
pub fn normalize_overlap(c: Overlap, r: usize) -> Overlap {
    if r == 2 {
        Overlap {
            re: c.magnitude(),
            im: 0.0,
        }
    } else {
        c
    }
}

/// Hermitian matrix of pairwise overlaps `g_ij = <psi_i|psi_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(CMatrix);

impl GramMatrix {
    /// Wraps an arbitrary Hermitian matrix with unit diagonal.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if linalg::hermiticity_error(&m) > 1e-12 {
            return Err(Error::Precondition("Gram matrix is not Hermitian".into()));
        }
        if (0..m.nrows()).any(|i| (m[(i, i)] - c64(1.0, 0.0)).norm() > 1e-12) {
            return Err(Error::Precondition("Gram matrix diagonal is not 1".into()));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Numerical eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0)
    }

    pub fn is_psd(&self) -> bool {
        linalg::min_eigenvalue(&self.0) >= -PSD_TOLERANCE
    }
}

fn gram_for(c: Overlap, r: usize) -> CMatrix {
    let c = normalize_overlap(c, r).value();
    CMatrix::from_fn(r, r, |i, j| {
        if i == j {
            c64(1.0, 0.0)
        } else if (i + 1) % r == j {
            c
        } else {
            c.conj()
        }
    })
}

pub fn build_gram(ensemble: &SymmetricEnsemble) -> GramMatrix {
    GramMatrix(gram_for(ensemble.overlap, ensemble.r))
}

/// Gram matrix of the uniform ensemble with overlap `c`.
pub fn gram_of(c: Overlap, r: usize) -> Result<GramMatrix> {
    check_rank(r)?;
    Ok(GramMatrix(gram_for(c, r)))
}

/// Closed-form Gram spectrum in natural index order `k = 0..r`.
pub fn symmetric_eigenvalues(c: Overlap, r: usize) -> Result<Vec<f64>> {
    check_rank(r)?;
    let c = normalize_overlap(c, r);
    let s = c.magnitude();
    Ok(match r {
        2 => vec![1.0 + s, 1.0 - s],
        _ => {
            let theta = c.phase();
            (0..3)
                .map(|k| 1.0 + 2.0 * s * (theta + 2.0 * PI * k as f64 / 3.0).cos())
                .collect()
        }
    })
}

/// The same spectrum sorted ascending.
pub fn sorted_eigenvalues(c: Overlap, r: usize) -> Result<Vec<f64>> {
    let mut values = symmetric_eigenvalues(c, r)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Smallest Gram eigenvalue together with its natural index.
pub fn min_eigenvalue_indexed(c: Overlap, r: usize) -> Result<(usize, f64)> {
    let values = symmetric_eigenvalues(c, r)?;
    let (k, lambda) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("spectrum is never empty");
    Ok((k, lambda))
}

pub fn is_physical(c: Overlap, r: usize) -> bool {
    symmetric_eigenvalues(c, r)
        .map(|values| values.iter().all(|&v| v >= -PSD_TOLERANCE))
        .unwrap_or(false)
}

/// Symmetric states written in the eigenbasis of their generating unitary.
///
/// Vectors live in the span of the ensemble: basis directions whose Gram
/// eigenvalue vanishes are dropped, so for the `c = -1/2` trine the states are
/// two-dimensional.
#[derive(Debug, Clone)]
pub struct CanonicalStates {
    overlap: Overlap,
    eigenvalues: Vec<f64>,
    amplitudes: Vec<f64>,
    phases: Vec<C64>,
    support: Vec<usize>,
    states: Vec<CVector>,
}

/// `e^{-2 pi i k / r}`, exact for the real roots.
fn unit_root_conj(k: usize, r: usize) -> C64 {
    match (k % r, r) {
        (0, _) => c64(1.0, 0.0),
        (1, 2) => c64(-1.0, 0.0),
        _ => linalg::phase(-2.0 * PI * k as f64 / r as f64),
    }
}

pub fn canonical_states(c: Overlap, r: usize) -> Result<CanonicalStates> {
    check_rank(r)?;
    let c = normalize_overlap(c, r);
    if !is_physical(c, r) {
        return Err(Error::NonPhysical(c.to_string()));
    }
    let eigenvalues = symmetric_eigenvalues(c, r)?;
    let amplitudes: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| (l.max(0.0) / r as f64).sqrt())
        .collect();
    let phases: Vec<C64> = (0..r).map(|k| unit_root_conj(k, r)).collect();
    let support: Vec<usize> = (0..r).filter(|&k| eigenvalues[k] > SPAN_TOLERANCE).collect();
    let states = (0..r)
        .map(|j| {
            CVector::from_iterator(
                support.len(),
                support
                    .iter()
                    .map(|&k| phases[k].powu(j as u32) * amplitudes[k]),
            )
        })
        .collect();
    Ok(CanonicalStates {
        overlap: c,
        eigenvalues,
        amplitudes,
        phases,
        support,
        states,
    })
}

impl CanonicalStates {
    pub fn r(&self) -> usize {
        self.phases.len()
    }

    /// Dimension of the span the vectors live in.
    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn overlap(&self) -> Overlap {
        self.overlap
    }

    /// Gram eigenvalues in natural index order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Real nonnegative amplitudes `xi_k` over the full `r`-dimensional basis.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Diagonal of the generating unitary over the full basis.
    pub fn phases(&self) -> &[C64] {
        &self.phases
    }

    /// Full-basis indices kept in the span.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn state(&self, j: usize) -> &CVector {
        &self.states[j]
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    /// The generating unitary restricted to the span.
    pub fn unitary(&self) -> CMatrix {
        let diag: Vec<C64> = self.support.iter().map(|&k| self.phases[k]).collect();
        linalg::diagonal(&diag)
    }

    /// `U^power` restricted to the span.
    pub fn unitary_power(&self, power: usize) -> CMatrix {
        let diag: Vec<C64> = self
            .support
            .iter()
            .map(|&k| self.phases[k].powu(power as u32))
            .collect();
        linalg::diagonal(&diag)
    }

    /// State `j` over the full `r`-dimensional basis, including dropped directions.
    pub fn full_state(&self, j: usize) -> CVector {
        CVector::from_iterator(
            self.r(),
            (0..self.r()).map(|k| self.phases[k].powu(j as u32) * self.amplitudes[k]),
        )
    }

    /// Gram matrix rebuilt from the state vectors.
    pub fn reconstructed_gram(&self) -> CMatrix {
        let r = self.r();
        CMatrix::from_fn(r, r, |i, j| linalg::inner(&self.states[i], &self.states[j]))
    }

    /// `Omega = sum_k |psi_k><psi_k|`.
    pub fn omega(&self) -> CMatrix {
        self.states
            .iter()
            .map(linalg::ket_bra)
            .fold(CMatrix::zeros(self.dim(), self.dim()), |acc, m| acc + m)
    }
}

/// Overlap of product states built from per-copy ensembles: `C = c_1 c_2 ... c_n`.
pub fn effective_overlap_product(overlaps: &[Overlap]) -> Result<Overlap> {
    if overlaps.is_empty() {
        return Err(Error::Precondition("overlap list is empty".into()));
    }
    let all_real = overlaps.iter().all(Overlap::is_real);
    let value = if all_real {
        c64(overlaps.iter().map(Overlap::re).product(), 0.0)
    } else {
        overlaps.iter().map(Overlap::value).product()
    };
    Overlap::new(value)
}
