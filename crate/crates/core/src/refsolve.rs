//! Entropy matching: find the inverse temperature `beta_R` whose Gibbs state
//! has a prescribed von Neumann entropy.
//!
//! The Gibbs entropy is monotone in `beta` on each half-line, so a doubling
//! bracket followed by plain bisection always converges. Targets the branch
//! cannot reach (below the ground-degeneracy floor `ln g0`, or requiring
//! `beta` beyond the cap) come back saturated at the cap instead of failing.

use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix};
use crate::qstate::{boltzmann, DEGENERACY_GAP};
use rayon::prelude::*;

const MAX_ITERATIONS: usize = 200;
const CAP_SCALE: f64 = 1e8;
const TARGET_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    NonNegative,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSolveResult {
    pub beta: f64,
    /// `|S(gibbs(beta)) - s_target|`
    pub residual: f64,
    pub saturated: bool,
    pub branch: Branch,
}

/// Entropy of `e^{-beta E}/Z` over the given levels.
pub fn entropy_of_levels(levels: &[f64], beta: f64) -> f64 {
    let (p, log_z) = boltzmann(levels, beta);
    -levels
        .iter()
        .zip(&p)
        .filter(|(_, &pk)| pk > 0.0)
        .map(|(&e, &pk)| pk * (-beta * e - log_z))
        .sum::<f64>()
}

pub fn gibbs_entropy(h: &ComplexMatrix, beta: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta}")));
    }
    Ok(entropy_of_levels(&eigh(h)?.values, beta))
}

pub fn solve_beta(h: &ComplexMatrix, s_target: f64, branch: Branch) -> Result<BetaSolveResult> {
    solve_beta_levels(&eigh(h)?.values, s_target, branch, None)
}

/// Solves on ascending `levels`; `warm` centers the initial bracket.
pub fn solve_beta_levels(
    levels: &[f64],
    s_target: f64,
    branch: Branch,
    warm: Option<f64>,
) -> Result<BetaSolveResult> {
    let d = levels.len();
    let s_max = (d as f64).ln();
    if !(s_target >= 0.0 && s_target <= s_max + TARGET_TOL) {
        return Err(Error::TargetOutOfRange {
            target: s_target,
            max: s_max,
        });
    }
    let lo_level = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_level = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi_level - lo_level;
    let scale = lo_level.abs().max(hi_level.abs()).max(1.0);
    if !(spread > 1e-14 * scale) {
        return Err(Error::ConstantEntropy);
    }

    // The negative branch is the non-negative one for -H.
    let (work, sign) = match branch {
        Branch::NonNegative => (levels.to_vec(), 1.0),
        Branch::Negative => (levels.iter().map(|x| -x).collect(), -1.0),
    };
    let f = |beta: f64| entropy_of_levels(&work, beta);
    let cap = CAP_SCALE / spread;
    let finish = |beta: f64, saturated: bool| BetaSolveResult {
        beta: sign * beta,
        residual: (f(beta) - s_target).abs(),
        saturated,
        branch,
    };

    if f(0.0) <= s_target {
        return Ok(finish(0.0, false));
    }
    let bottom = work.iter().cloned().fold(f64::INFINITY, f64::min);
    let ground = work
        .iter()
        .filter(|&&x| x - bottom <= DEGENERACY_GAP)
        .count();
    if s_target <= (ground as f64).ln() || f(cap) > s_target {
        log::debug!("entropy target {s_target} unreachable below cap {cap}; saturating");
        return Ok(finish(cap, true));
    }

    let (mut lo, mut hi) = bracket(&f, s_target, warm.map(|w| sign * w).unwrap_or(0.0), cap);
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > s_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f_lo, f_hi) = ((f(lo) - s_target).abs(), (f(hi) - s_target).abs());
    Ok(finish(if f_lo <= f_hi { lo } else { hi }, false))
}

/// Returns `lo < hi` with `f(lo) > s >= f(hi)`, grown outward from `start`.
fn bracket(f: &impl Fn(f64) -> f64, s: f64, start: f64, cap: f64) -> (f64, f64) {
    let b0 = start.clamp(0.0, cap);
    let mut step = if b0 == 0.0 {
        1.0
    } else {
        (0.05 * b0).max(1e-6)
    };
    if f(b0) > s {
        let mut lo = b0;
        loop {
            let hi = (b0 + step).min(cap);
            if f(hi) <= s || hi >= cap {
                return (lo, hi);
            }
            lo = hi;
            step *= 2.0;
        }
    } else {
        let mut hi = b0;
        loop {
            let lo = (b0 - step).max(0.0);
            if f(lo) > s || lo == 0.0 {
                return (lo, hi);
            }
            hi = lo;
            step *= 2.0;
        }
    }
}

/// Per-sample solves along a Hamiltonian protocol, each warm-started from
/// the previous successful result. Failures are kept per sample.
pub fn solve_beta_series<F>(
    h_of_t: F,
    entropies: &[(f64, f64)],
    branch: Branch,
) -> Vec<Result<BetaSolveResult>>
where
    F: Fn(f64) -> Result<ComplexMatrix>,
{
    let mut warm = None;
    entropies
        .iter()
        .map(|&(t, s)| {
            let levels = eigh(&h_of_t(t)?)?.values;
            let r = solve_beta_levels(&levels, s, branch, warm)?;
            if !r.saturated {
                warm = Some(r.beta);
            }
            Ok(r)
        })
        .collect()
}

/// Independent cold-start solves, run in parallel.
pub fn solve_beta_series_cold<F>(
    h_of_t: F,
    entropies: &[(f64, f64)],
    branch: Branch,
) -> Vec<Result<BetaSolveResult>>
where
    F: Fn(f64) -> Result<ComplexMatrix> + Sync,
{
    entropies
        .par_iter()
        .map(|&(t, s)| {
            let levels = eigh(&h_of_t(t)?)?.values;
            solve_beta_levels(&levels, s, branch, None)
        })
        .collect()
}
