//! Regime switching for two-state zero-error chains, in floating point and in
//! exact rational arithmetic.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::povm::BinaryRegime;
use crate::{Error, Result};

const RELATIVE_SLACK: f64 = 1.0 - 1e-12;

/// Number of single-detection steps before the first three-outcome
/// measurement: the smallest `k >= 0` with `low / (high c^{2k}) >= c^2`, where
/// `low <= high` are the two priors.
///
/// Returns `usize::MAX` when the smaller prior is zero and `c > 0`, since the
/// chain then never switches.
pub fn compute_k0(eta0: f64, eta1: f64, c: f64) -> usize {
    let (low, high) = if eta0 <= eta1 { (eta0, eta1) } else { (eta1, eta0) };
    let c2 = c * c;
    if c2 == 0.0 {
        return 0;
    }
    if low == 0.0 {
        return usize::MAX;
    }
    let ratio = low / high;
    let mut threshold = c2;
    let mut k = 0;
    while ratio < threshold * RELATIVE_SLACK {
        k += 1;
        threshold *= c2;
    }
    k
}

/// [`compute_k0`] without rounding.
pub fn compute_k0_exact(eta0: &BigRational, eta1: &BigRational, c: &BigRational) -> usize {
    let (low, high) = if eta0 <= eta1 { (eta0, eta1) } else { (eta1, eta0) };
    let c2 = c * c;
    if c2.is_zero() {
        return 0;
    }
    if low.is_zero() {
        return usize::MAX;
    }
    let ratio = low / high;
    let mut threshold = c2.clone();
    let mut k = 0;
    while ratio < threshold {
        k += 1;
        threshold *= &c2;
    }
    k
}

/// Rational overlap and priors for a two-state zero-error chain. Regimes are
/// then decided by exact comparison instead of floating-point tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBinary {
    overlap: BigRational,
    priors: [BigRational; 2],
    k0: usize,
    low: Option<usize>,
}

impl ExactBinary {
    pub fn new(overlap: BigRational, eta0: BigRational, eta1: BigRational) -> Result<Self> {
        let overlap = overlap.abs();
        if overlap >= BigRational::one() {
            return Err(Error::OverlapOutOfRange(overlap.to_f64().unwrap_or(f64::NAN)));
        }
        if eta0.is_negative() || eta1.is_negative() || &eta0 + &eta1 != BigRational::one() {
            return Err(Error::InvalidPriors(format!(
                "exact priors {eta0}, {eta1} must be nonnegative and sum to 1"
            )));
        }
        let k0 = compute_k0_exact(&eta0, &eta1, &overlap);
        let c2 = &overlap * &overlap;
        let low = if &eta0 < &(&c2 * &eta1) {
            Some(0)
        } else if &eta1 < &(&c2 * &eta0) {
            Some(1)
        } else {
            None
        };
        Ok(Self {
            overlap,
            priors: [eta0, eta1],
            k0,
            low,
        })
    }

    pub fn overlap(&self) -> &BigRational {
        &self.overlap
    }

    pub fn priors(&self) -> &[BigRational; 2] {
        &self.priors
    }

    pub fn overlap_f64(&self) -> f64 {
        self.overlap.to_f64().unwrap_or(f64::NAN)
    }

    pub fn priors_f64(&self) -> Vec<f64> {
        self.priors
            .iter()
            .map(|p| p.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    /// Regime of the measurement on copy `step + 1`, given that every earlier
    /// outcome was inconclusive.
    pub fn regime_at(&self, step: usize) -> BinaryRegime {
        match self.low {
            Some(0) if step < self.k0 => BinaryRegime::DropFirst,
            Some(_) if step < self.k0 => BinaryRegime::DropSecond,
            _ => BinaryRegime::ThreeOutcome,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn boundary_ratio_switches_immediately() {
        // eta0 / eta1 = c^2 = 1/4
        assert_eq!(compute_k0(0.2, 0.8, 0.5), 0);
        assert_eq!(compute_k0_exact(&q(1, 5), &q(4, 5), &q(1, 2)), 0);
    }

    #[test]
    fn ratio_just_above_c6() {
        let c: f64 = 0.7;
        let ratio = c.powi(6) * 1.01;
        let eta0 = ratio / (1.0 + ratio);
        assert_eq!(compute_k0(eta0, 1.0 - eta0, c), 2);

        // independent check: iterate the posterior ratio under inconclusive outcomes
        let mut r = ratio;
        let mut k = 0;
        while r < c * c {
            r /= c * c;
            k += 1;
        }
        assert_eq!(k, 2);
    }

    #[test]
    fn short_horizon_never_switches() {
        let c: f64 = 0.6;
        for n in 1..8 {
            let ratio = c.powi(2 * n) * 0.999;
            let eta0 = ratio / (1.0 + ratio);
            assert!(compute_k0(eta0, 1.0 - eta0, c) >= n as usize);
        }
    }

    #[test]
    fn exact_and_float_agree_off_boundary() {
        let exact = compute_k0_exact(&q(1, 100), &q(99, 100), &q(1, 2));
        assert_eq!(exact, compute_k0(0.01, 0.99, 0.5));
        assert_eq!(exact, 3);
    }

    #[test]
    fn exact_regime_schedule() {
        let ex = ExactBinary::new(q(1, 2), q(1, 100), q(99, 100)).unwrap();
        assert_eq!(ex.k0(), 3);
        assert_eq!(ex.regime_at(0), BinaryRegime::DropFirst);
        assert_eq!(ex.regime_at(2), BinaryRegime::DropFirst);
        assert_eq!(ex.regime_at(3), BinaryRegime::ThreeOutcome);

        let mirrored = ExactBinary::new(q(1, 2), q(99, 100), q(1, 100)).unwrap();
        assert_eq!(mirrored.regime_at(0), BinaryRegime::DropSecond);

        let balanced = ExactBinary::new(q(1, 2), q(1, 2), q(1, 2)).unwrap();
        assert_eq!(balanced.regime_at(0), BinaryRegime::ThreeOutcome);

        assert!(ExactBinary::new(q(1, 1), q(1, 2), q(1, 2)).is_err());
        assert!(ExactBinary::new(q(1, 2), q(1, 2), q(1, 3)).is_err());
    }
}
