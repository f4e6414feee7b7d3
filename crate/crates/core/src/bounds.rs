//! Global optima over collective measurements on all copies.

use serde::{Deserialize, Serialize};

use crate::ensemble::{is_physical, symmetric_eigenvalues, validate_priors, GramMatrix, Overlap};
use crate::linalg::{self, c64};
use crate::{Error, Result};

/// Minimum eigenvalue slack accepted by [`verify_sdp_feasibility`].
pub const SDP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    ThreeOutcome,
    TwoOutcomeDrop0,
    TwoOutcomeDrop1,
    OddParity,
    EvenParity,
    NA,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationBound {
    pub success: f64,
    pub inconclusive: f64,
    pub regime: Regime,
    /// Set when the priors were swapped internally so that `eta0 <= eta1`.
    pub priors_swapped: bool,
}

fn check_unit_interval(c: f64, upper_open: bool) -> Result<()> {
    let ok = if upper_open {
        (0.0..1.0).contains(&c)
    } else {
        (0.0..=1.0).contains(&c)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::OverlapOutOfRange(c))
    }
}

fn check_copies(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("at least one copy is required".into()));
    }
    Ok(())
}

/// Minimum-error success for `n` copies of two states with overlap `c`.
pub fn helstrom_success_n(eta0: f64, eta1: f64, c: f64, n: u32) -> Result<DiscriminationBound> {
    check_copies(n)?;
    helstrom_success_effective(eta0, eta1, c.powi(n as i32))
}

/// Minimum-error success for an arbitrary effective overlap, e.g. a product
/// of per-copy overlaps.
pub fn helstrom_success_effective(eta0: f64, eta1: f64, overlap: f64) -> Result<DiscriminationBound> {
    validate_priors(&[eta0, eta1], 2)?;
    check_unit_interval(overlap.abs(), false)?;
    let success = (1.0 + (1.0 - 4.0 * eta0 * eta1 * overlap * overlap).max(0.0).sqrt()) / 2.0;
    Ok(DiscriminationBound {
        success,
        inconclusive: 0.0,
        regime: Regime::NA,
        priors_swapped: false,
    })
}

/// Minimum inconclusive probability for zero-error identification of two
/// states from `n` copies.
pub fn binary_zero_error_q(eta0: f64, eta1: f64, c: f64, n: u32) -> Result<DiscriminationBound> {
    check_copies(n)?;
    check_unit_interval(c, true)?;
    binary_zero_error_effective(eta0, eta1, c.powi(n as i32))
}

/// Zero-error bound for an effective overlap `overlap` in `[0, 1)`.
pub fn binary_zero_error_effective(eta0: f64, eta1: f64, overlap: f64) -> Result<DiscriminationBound> {
    validate_priors(&[eta0, eta1], 2)?;
    let overlap = overlap.abs();
    check_unit_interval(overlap, true)?;
    let swapped = eta0 > eta1;
    let (low, high) = if swapped { (eta1, eta0) } else { (eta0, eta1) };
    let (q, regime) = if low == 0.0 && overlap > 0.0 {
        (high * overlap * overlap, drop_regime(swapped))
    } else if (low / high).sqrt() >= overlap {
        (2.0 * (low * high).sqrt() * overlap, Regime::ThreeOutcome)
    } else {
        (low + high * overlap * overlap, drop_regime(swapped))
    };
    Ok(DiscriminationBound {
        success: 1.0 - q,
        inconclusive: q,
        regime,
        priors_swapped: swapped,
    })
}

fn drop_regime(swapped: bool) -> Regime {
    if swapped {
        Regime::TwoOutcomeDrop1
    } else {
        Regime::TwoOutcomeDrop0
    }
}

/// Equal-prior zero-error bound for `r` symmetric states from `n` copies: the
/// smallest eigenvalue of the Gram matrix with overlap `c^n`.
pub fn symmetric_zero_error_q(c: Overlap, r: usize, n: u32) -> Result<DiscriminationBound> {
    check_copies(n)?;
    if !is_physical(c, r) {
        return Err(Error::NonPhysical(format!("overlap {c} for r = {r}")));
    }
    let cn = c.pow(n);
    let success = symmetric_eigenvalues(cn, r)?
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let regime = if r == 3 && c.is_real() && c.re() < 0.0 {
        if n % 2 == 1 {
            Regime::OddParity
        } else {
            Regime::EvenParity
        }
    } else {
        Regime::NA
    };
    Ok(DiscriminationBound {
        success,
        inconclusive: 1.0 - success,
        regime,
        priors_swapped: false,
    })
}

/// Certificate that conditional success probabilities `p` are reachable with
/// zero error: `G - diag(p)` must be positive semidefinite.
pub fn verify_sdp_feasibility(gram: &GramMatrix, p: &[f64]) -> Result<bool> {
    if p.len() != gram.dim() {
        return Err(Error::DimensionMismatch {
            expected: gram.dim(),
            found: p.len(),
        });
    }
    let diag: Vec<_> = p.iter().map(|&x| c64(x, 0.0)).collect();
    let slack = gram.matrix() - linalg::diagonal(&diag);
    Ok(linalg::min_eigenvalue(&slack) >= -SDP_TOLERANCE)
}
