//! Numerical search over online zero-error strategies for three symmetric
//! states with a complex overlap.
//!
//! Each copy is measured with a member of the family
//! `{f F_k, e E_k, 1 - f sum F - e sum E}`: `F_k = |phi_k><phi_k|` are the dual
//! directions (identify `k`), `E_k = |v_k><v_k|` are exclusion directions
//! (rule out `k`). The exclusion fiducial `v_0` lives on the two basis
//! directions with the larger Gram eigenvalues and is orthogonal to `psi_0`;
//! for real negative overlaps it reduces to the identify-or-exclude
//! measurement.
//!
//! Both effect sums are diagonal in the canonical basis, so an inconclusive
//! outcome leaves the belief uniform and an exclusion leaves the two survivors
//! with equal weight. The best chain on `m` copies therefore obeys
//!
//! `Q(m) = (1 - f - kappa e) Q(m - 1) + kappa e |c|^(m - 1)`, `Q(0) = 1`,
//!
//! where `kappa e` is the exclusion probability and `|c|^(m-1)` the failure of
//! the two-state chain on the remaining copies. The weights for every `m` are
//! found by coordinate descent seeded from a grid over the feasible set and
//! from its vertices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::symmetric_zero_error_q;
use crate::ensemble::{is_physical, symmetric_eigenvalues, Overlap, SPAN_TOLERANCE};
use crate::linalg::{self, c64, CMatrix, CVector, C64};
use crate::{Error, Result};

/// Grid resolution per weight.
pub const GRID_POINTS: usize = 50;
/// Final coordinate-descent step.
pub const REFINE_TOLERANCE: f64 = 1e-8;
/// Feasibility slack on the smallest eigenvalue of the inconclusive effect.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrategyParams {
    pub f_weight: f64,
    pub e_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Copies left including the one being measured.
    pub copies_left: usize,
    pub params: StrategyParams,
    pub f_max: f64,
    pub e_max: f64,
    /// The identification weight is at its maximum, as a greedy local
    /// measurement would choose.
    pub step_optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDiagnostics {
    pub steps: Vec<StepDiagnostics>,
    pub evaluations: u64,
    pub restarts: usize,
    /// False when the dual directions do not exist (linearly dependent states).
    pub identify_available: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub c: Overlap,
    pub n: usize,
    pub best_online_success: f64,
    pub global_success: f64,
    pub gap: f64,
    pub diagnostics: OptimizerDiagnostics,
}

/// Fixed directions of the family for one overlap.
struct Family {
    sum_identify: CMatrix,
    sum_exclude: CMatrix,
    /// Identification probability per unit `f`.
    identify_rate: f64,
    /// Total exclusion probability per unit `e`.
    exclude_rate: f64,
    identify_available: bool,
}

impl Family {
    fn new(c: Overlap) -> Result<Self> {
        let eigenvalues = symmetric_eigenvalues(c, 3)?;
        let phases: Vec<C64> = (0..3)
            .map(|k| linalg::phase(-2.0 * std::f64::consts::PI * k as f64 / 3.0))
            .collect();
        let amplitudes: Vec<f64> = eigenvalues.iter().map(|l| (l.max(0.0) / 3.0).sqrt()).collect();
        let rotate = |v: &CVector, k: usize| {
            CVector::from_iterator(3, (0..3).map(|i| phases[i].powu(k as u32) * v[i]))
        };
        let psi0 = CVector::from_iterator(3, amplitudes.iter().map(|&a| c64(a, 0.0)));
        let states: Vec<CVector> = (0..3).map(|k| rotate(&psi0, k)).collect();

        let smallest = (0..3)
            .min_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]))
            .unwrap_or(0);
        let identify_available = eigenvalues[smallest] > SPAN_TOLERANCE;

        let mut sum_identify = CMatrix::zeros(3, 3);
        let mut identify_rate = 0.0;
        if identify_available {
            let dual0 = CVector::from_iterator(
                3,
                eigenvalues.iter().map(|l| c64((1.0 / (3.0 * l)).sqrt(), 0.0)),
            );
            for k in 0..3 {
                sum_identify += linalg::ket_bra(&rotate(&dual0, k));
            }
            identify_rate = linalg::inner(&dual0, &states[0]).norm_sqr();
        }

        let others: Vec<usize> = (0..3).filter(|&i| i != smallest).collect();
        let (a, b) = (others[0], others[1]);
        let mut v0 = CVector::zeros(3);
        v0[a] = c64(amplitudes[b], 0.0);
        v0[b] = c64(-amplitudes[a], 0.0);
        let v0 = v0.normalize();
        let exclusions: Vec<CVector> = (0..3).map(|k| rotate(&v0, k)).collect();
        let sum_exclude = exclusions
            .iter()
            .fold(CMatrix::zeros(3, 3), |acc, v| acc + linalg::ket_bra(v));
        let exclude_rate = exclusions
            .iter()
            .map(|v| linalg::inner(v, &states[0]).norm_sqr())
            .sum();

        Ok(Self {
            sum_identify,
            sum_exclude,
            identify_rate,
            exclude_rate,
            identify_available,
        })
    }

    fn slack(&self, f: f64, e: f64) -> f64 {
        let rest = linalg::identity(3) - self.sum_identify.scale(f) - self.sum_exclude.scale(e);
        linalg::min_eigenvalue(&rest)
    }

    fn feasible(&self, f: f64, e: f64) -> bool {
        f >= 0.0 && e >= 0.0 && self.slack(f, e) >= -FEASIBILITY_TOLERANCE
    }

    /// Largest feasible value along one weight by bisection.
    fn bisect(&self, feasible: impl Fn(f64) -> bool) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        if feasible(hi) {
            return hi;
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn f_max(&self) -> f64 {
        if !self.identify_available {
            return 0.0;
        }
        self.bisect(|f| self.feasible(f, 0.0))
    }

    fn e_max(&self, f: f64) -> f64 {
        self.bisect(|e| self.feasible(f, e))
    }

    /// Vertices of the feasible set. Both sums are diagonal, so each basis
    /// direction contributes one linear constraint `f a_i + e b_i <= 1`; the
    /// axes `f >= 0`, `e >= 0` close the polygon.
    fn vertices(&self) -> Vec<StrategyParams> {
        let lines: Vec<(f64, f64, f64)> = (0..3)
            .map(|i| (self.sum_identify[(i, i)].re, self.sum_exclude[(i, i)].re, 1.0))
            .chain([(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)])
            .collect();
        let mut out = Vec::new();
        for (i, &(a1, b1, r1)) in lines.iter().enumerate() {
            for &(a2, b2, r2) in &lines[i + 1..] {
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-14 {
                    continue;
                }
                let f = if self.identify_available {
                    ((r1 * b2 - r2 * b1) / det).max(0.0)
                } else {
                    0.0
                };
                let e = ((a1 * r2 - a2 * r1) / det).max(0.0);
                if self.feasible(f, e) {
                    out.push(StrategyParams { f_weight: f, e_weight: e });
                }
            }
        }
        out
    }
}

/// One step of the recursion: failure on `m` copies given the best failure
/// `previous` on `m - 1` copies and the two-state tail failure `tail`.
fn step_failure(family: &Family, p: StrategyParams, previous: f64, tail: f64) -> f64 {
    let identify = family.identify_rate * p.f_weight;
    let exclude = family.exclude_rate * p.e_weight;
    (1.0 - identify - exclude) * previous + exclude * tail
}

struct StepSearch<'a> {
    family: &'a Family,
    previous: f64,
    tail: f64,
    evaluations: u64,
}

impl StepSearch<'_> {
    fn value(&mut self, p: StrategyParams) -> f64 {
        self.evaluations += 1;
        step_failure(self.family, p, self.previous, self.tail)
    }

    fn refine(&mut self, start: StrategyParams, f_max: f64, initial_step: f64) -> (StrategyParams, f64) {
        let mut best = start;
        let mut best_value = self.value(best);
        let mut h = initial_step.max(REFINE_TOLERANCE);
        while h >= REFINE_TOLERANCE {
            let mut improved = false;
            for (df, de) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                let trial = StrategyParams {
                    f_weight: (best.f_weight + df).clamp(0.0, f_max),
                    e_weight: (best.e_weight + de).max(0.0),
                };
                if !self.family.feasible(trial.f_weight, trial.e_weight) {
                    continue;
                }
                let v = self.value(trial);
                if v < best_value - 1e-15 {
                    best = trial;
                    best_value = v;
                    improved = true;
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        (best, best_value)
    }
}

/// Best chain in the family on `n` copies, compared with the global optimum.
///
/// `restarts` is the number of additional grid points, beyond the best one
/// and the corners of the feasible set, used to seed coordinate descent.
pub fn optimize_online(c: Overlap, n: usize, restarts: usize) -> Result<ScanPoint> {
    if n == 0 {
        return Err(Error::Precondition("at least one copy is required".into()));
    }
    if !is_physical(c, 3) {
        return Err(Error::NonPhysical(c.to_string()));
    }
    let family = Family::new(c)?;
    let s = c.magnitude();
    let f_max = family.f_max();
    let mut failure = 1.0;
    let mut evaluations = 0;
    let mut steps = Vec::with_capacity(n);

    for m in 1..=n {
        let tail = s.powi(m as i32 - 1);
        let mut search = StepSearch {
            family: &family,
            previous: failure,
            tail,
            evaluations: 0,
        };

        let mut grid: Vec<(f64, StrategyParams)> = Vec::with_capacity(GRID_POINTS * GRID_POINTS);
        for i in 0..GRID_POINTS {
            let f = f_max * i as f64 / (GRID_POINTS - 1) as f64;
            let e_cap = family.e_max(f);
            for j in 0..GRID_POINTS {
                let p = StrategyParams {
                    f_weight: f,
                    e_weight: e_cap * j as f64 / (GRID_POINTS - 1) as f64,
                };
                grid.push((search.value(p), p));
            }
        }
        grid.sort_by(|a, b| a.0.total_cmp(&b.0));

        let e_at_zero = family.e_max(0.0);
        let corners = [
            StrategyParams::default(),
            StrategyParams {
                f_weight: f_max,
                e_weight: family.e_max(f_max),
            },
            StrategyParams {
                f_weight: 0.0,
                e_weight: e_at_zero,
            },
        ];
        let initial_step = f_max.max(e_at_zero) / GRID_POINTS as f64;
        let mut best = (grid[0].1, f64::INFINITY);
        let starts = grid
            .iter()
            .take(1 + restarts)
            .map(|g| g.1)
            .chain(corners)
            .chain(family.vertices())
            .collect::<Vec<_>>();
        for start in starts {
            let candidate = search.refine(start, f_max, initial_step);
            if candidate.1 < best.1 - 1e-15 {
                best = candidate;
            }
        }
        evaluations += search.evaluations;
        failure = best.1;
        steps.push(StepDiagnostics {
            copies_left: m,
            params: best.0,
            f_max,
            e_max: family.e_max(best.0.f_weight),
            step_optimal: f_max - best.0.f_weight <= 1e-6,
        });
    }
    steps.reverse();

    let global_success = symmetric_zero_error_q(c, 3, n as u32)?.success;
    let best_online_success = 1.0 - failure;
    Ok(ScanPoint {
        c,
        n,
        best_online_success,
        global_success,
        gap: global_success - best_online_success,
        diagnostics: OptimizerDiagnostics {
            steps,
            evaluations,
            restarts,
            identify_available: family.identify_available,
        },
    })
}

/// Polar grid `s e^{i theta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
}

impl PolarGrid {
    /// `s_j = (j + 1) / radial` for `j < radial`, `theta_k = 2 pi k / angular`.
    pub fn uniform(radial: usize, angular: usize) -> Self {
        Self {
            radii: (0..radial).map(|j| (j + 1) as f64 / radial as f64).collect(),
            angles: (0..angular)
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / angular as f64)
                .collect(),
        }
    }

    /// Radii `s_max (j + 1) / radial` along one direction.
    pub fn slice(theta: f64, radial: usize, s_max: f64) -> Self {
        Self {
            radii: (0..radial).map(|j| s_max * (j + 1) as f64 / radial as f64).collect(),
            angles: vec![theta],
        }
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One grid cell, physical or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub s: f64,
    pub theta: f64,
    pub physical: bool,
    pub point: Option<ScanPoint>,
}

impl GridCell {
    pub fn overlap(&self) -> C64 {
        linalg::phase(self.theta) * self.s
    }
}

/// Optimizes every physical cell of `grid`, angle-major and in input order.
pub fn scan_plane(grid: &PolarGrid, n: usize, restarts: usize) -> Result<Vec<GridCell>> {
    if grid.is_empty() {
        return Err(Error::Precondition("scan grid is empty".into()));
    }
    if let Some(s) = grid.radii.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::OverlapOutOfRange(*s));
    }
    let cells: Vec<(f64, f64)> = grid
        .angles
        .iter()
        .flat_map(|&theta| grid.radii.iter().map(move |&s| (s, theta)))
        .collect();
    cells
        .par_iter()
        .map(|&(s, theta)| {
            let c = Overlap::polar(s, theta)?;
            let physical = is_physical(c, 3);
            let point = if physical {
                Some(optimize_online(c, n, restarts)?)
            } else {
                None
            };
            Ok(GridCell {
                s,
                theta,
                physical,
                point,
            })
        })
        .collect()
}

/// Largest physical `|c|` along direction `theta`: the edge of the triangle
/// with vertices at the cube roots of unity.
pub fn physical_boundary(theta: f64) -> f64 {
    (0..3)
        .map(|k| (theta + 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
        .filter(|&x| x < 0.0)
        .map(|x| -1.0 / (2.0 * x))
        .fold(1.0, f64::min)
}

/// Physical cells whose gap is below `tolerance`.
pub fn zero_gap_locus(cells: &[GridCell], tolerance: f64) -> Vec<&GridCell> {
    cells
        .iter()
        .filter(|cell| cell.point.as_ref().is_some_and(|p| p.gap.abs() < tolerance))
        .collect()
}

/// Flat record of one cell: `re, im, s, theta, n, online, global, gap,
/// physical`, with empty metrics outside the physical region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub re: f64,
    pub im: f64,
    pub s: f64,
    pub theta: f64,
    pub n: usize,
    pub online: Option<f64>,
    pub global: Option<f64>,
    pub gap: Option<f64>,
    pub physical: bool,
}

impl ScanRow {
    pub fn from_cell(cell: &GridCell, n: usize) -> Self {
        let c = cell.overlap();
        Self {
            re: c.re,
            im: c.im,
            s: cell.s,
            theta: cell.theta,
            n,
            online: cell.point.as_ref().map(|p| p.best_online_success),
            global: cell.point.as_ref().map(|p| p.global_success),
            gap: cell.point.as_ref().map(|p| p.gap),
            physical: cell.physical,
        }
    }
}
