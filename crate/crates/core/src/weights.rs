//! Weight selection for the weighted mean-difference estimator.
//!
//! The variance-minimizing weight solves a box-constrained convex
//! quadratic in `(w1, w2)`. The stationary point is used when it lies in
//! the unit square; otherwise the minimum sits on one of the four edges and
//! each edge has a closed-form minimizer.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::{summarize, MissingPattern, Moments, PartiallyPairedSample, SummaryStats};
use crate::wmd::asymptotic_variance;

/// Which rule produced a weight pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Simple,
    CompleteOnly,
    Optimal,
    Bhoj,
    UserFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightPair {
    pub w1: f64,
    pub w2: f64,
    pub strategy: WeightKind,
}

impl WeightPair {
    pub fn new(w1: f64, w2: f64, strategy: WeightKind) -> Result<Self> {
        if !(0.0..=1.0).contains(&w1) || !(0.0..=1.0).contains(&w2) {
            return Err(Error::InvalidParams(format!(
                "weights must lie in [0, 1], got ({w1}, {w2})"
            )));
        }
        Ok(Self { w1, w2, strategy })
    }

    pub fn fixed(w1: f64, w2: f64) -> Result<Self> {
        Self::new(w1, w2, WeightKind::UserFixed)
    }
}

/// A rule for choosing weights from data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightStrategy {
    Simple,
    CompleteOnly,
    Optimal,
    /// `lambda = None` uses the pairing fraction `n0 / n`.
    Bhoj {
        lambda: Option<f64>,
    },
    Fixed {
        w1: f64,
        w2: f64,
    },
}

impl WeightStrategy {
    /// Weights for a summarized sample.
    pub fn resolve(&self, stats: &SummaryStats) -> Result<WeightPair> {
        match *self {
            WeightStrategy::Simple => Ok(simple_from_counts(stats.n0, stats.n1, stats.n2)),
            WeightStrategy::CompleteOnly => Ok(complete_only_weights()),
            WeightStrategy::Optimal => Ok(optimal_weights(&stats.moments)?.weights),
            WeightStrategy::Bhoj { lambda } => {
                let lambda = lambda.unwrap_or(stats.n0 as f64 / stats.n() as f64);
                bhoj_from_stats(stats, lambda)
            }
            WeightStrategy::Fixed { w1, w2 } => WeightPair::fixed(w1, w2),
        }
    }
}

/// Clamp to the unit interval.
pub fn clamp_g(z: f64) -> f64 {
    if z < 0.0 {
        0.0
    } else if z > 1.0 {
        1.0
    } else {
        z
    }
}

/// Group-mean weights `(n0/(n0+n1), n0/(n0+n2))`; equal weight per observation.
pub fn simple_weights(sample: &PartiallyPairedSample) -> WeightPair {
    simple_from_counts(sample.n0(), sample.n1(), sample.n2())
}

fn simple_from_counts(n0: usize, n1: usize, n2: usize) -> WeightPair {
    let ratio = |a: usize, b: usize| {
        if a + b == 0 {
            1.0
        } else {
            a as f64 / (a + b) as f64
        }
    };
    WeightPair {
        w1: ratio(n0, n1),
        w2: ratio(n0, n2),
        strategy: WeightKind::Simple,
    }
}

pub fn complete_only_weights() -> WeightPair {
    WeightPair {
        w1: 1.0,
        w2: 1.0,
        strategy: WeightKind::CompleteOnly,
    }
}

/// Common weight combining the paired and unpaired t statistics.
///
/// `s` is the SD of within-pair differences and `s1` the pooled SD of the
/// two unpaired blocks.
pub fn bhoj_weights(sample: &PartiallyPairedSample, lambda: f64) -> Result<WeightPair> {
    check_bhoj_counts(sample.n0(), sample.n1(), sample.n2())?;
    bhoj_from_stats(&summarize(sample)?, lambda)
}

fn check_bhoj_counts(n0: usize, n1: usize, n2: usize) -> Result<()> {
    if n0 < 2 || n1 < 1 || n2 < 1 {
        return Err(Error::DegenerateBhoj(format!(
            "needs n0 >= 2, n1 >= 1, n2 >= 1 (got {n0}, {n1}, {n2})"
        )));
    }
    if n1 + n2 < 3 {
        return Err(Error::DegenerateBhoj(
            "pooled unpaired SD needs n1 + n2 >= 3".into(),
        ));
    }
    Ok(())
}

fn bhoj_from_stats(stats: &SummaryStats, lambda: f64) -> Result<WeightPair> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParams(format!(
            "lambda must be in [0, 1], got {lambda}"
        )));
    }
    let (n0, n1, n2) = (stats.n0, stats.n1, stats.n2);
    check_bhoj_counts(n0, n1, n2)?;
    let s = stats.diff_sd;
    let s1 = stats.unpaired_pooled_sd.unwrap_or(0.0);
    if s <= 0.0 {
        return Err(Error::DegenerateBhoj(
            "paired differences have zero SD".into(),
        ));
    }
    if s1 <= 0.0 {
        return Err(Error::DegenerateBhoj(
            "unpaired blocks have zero pooled SD".into(),
        ));
    }
    let paired = lambda / (s / (n0 as f64).sqrt());
    let unpaired = (1.0 - lambda) / (s1 / (1.0 / n1 as f64 + 1.0 / n2 as f64).sqrt());
    let w = paired / (paired + unpaired);
    Ok(WeightPair {
        w1: w,
        w2: w,
        strategy: WeightKind::Bhoj,
    })
}

/// Stationary point of the asymptotic variance (both groups incomplete).
///
/// The `sigma^2` factors cancel, leaving the common denominator
/// `p1 p2 - rho^2 (p1 - p12)(p2 - p12)`.
pub fn interior_root(m: &Moments) -> Result<(f64, f64)> {
    let det = interior_determinant(m);
    if det.abs() <= f64::EPSILON * m.p1 * m.p2 {
        return Err(Error::SingularSystem);
    }
    let (a1, a2) = (m.p1 - m.p12, m.p2 - m.p12);
    let w1 = m.p12 * (m.p2 + m.rho * (m.sigma2 / m.sigma1) * a1) / det;
    let w2 = m.p12 * (m.p1 + m.rho * (m.sigma1 / m.sigma2) * a2) / det;
    Ok((w1, w2))
}

fn interior_determinant(m: &Moments) -> f64 {
    m.p1 * m.p2 - m.rho * m.rho * (m.p1 - m.p12) * (m.p2 - m.p12)
}

/// Minimizers of the variance along the four edges of the unit square,
/// in the order `w1 = 0`, `w1 = 1`, `w2 = 0`, `w2 = 1`.
pub fn boundary_candidates(m: &Moments) -> Result<[WeightPair; 4]> {
    m.check()?;
    let (a1, a2) = (m.p1 - m.p12, m.p2 - m.p12);
    let opt = |w1: f64, w2: f64| WeightPair {
        w1,
        w2,
        strategy: WeightKind::Optimal,
    };
    Ok([
        opt(0.0, m.p12 / m.p2),
        opt(
            1.0,
            clamp_g((m.p12 * m.sigma2 + m.rho * m.sigma1 * a2) / (m.p2 * m.sigma2)),
        ),
        opt(m.p12 / m.p1, 0.0),
        opt(
            clamp_g((m.p12 * m.sigma1 + m.rho * m.sigma2 * a1) / (m.p1 * m.sigma1)),
            1.0,
        ),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum SolutionLocation {
    Interior,
    /// Index into [`boundary_candidates`].
    Boundary(usize),
    /// One or both weights are fixed at 1 by the missingness regime.
    Pinned,
    /// Closed form unavailable; best point of a dense grid plus the edges.
    GridFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalWeightSolution {
    pub weights: WeightPair,
    pub location: SolutionLocation,
    /// Asymptotic variance at `weights`.
    pub objective: f64,
    /// Stationary point before the feasibility check, when computed.
    pub interior_root: Option<(f64, f64)>,
}

/// Variance-minimizing weights over `[0, 1]^2` for the regime implied by `m`.
pub fn optimal_weights(m: &Moments) -> Result<OptimalWeightSolution> {
    m.check()?;
    let pinned = |w1: f64, w2: f64| -> Result<OptimalWeightSolution> {
        let weights = WeightPair {
            w1,
            w2,
            strategy: WeightKind::Optimal,
        };
        Ok(OptimalWeightSolution {
            weights,
            location: SolutionLocation::Pinned,
            objective: asymptotic_variance(m, &weights)?,
            interior_root: None,
        })
    };
    match m.pattern() {
        MissingPattern::NoneMissing => pinned(1.0, 1.0),
        // Edge w1 = 1; reduces to g(p1 + rho sigma1/sigma2 (1 - p1)) when p2 = 1.
        MissingPattern::Group1Missing => {
            let a2 = m.p2 - m.p12;
            pinned(
                1.0,
                clamp_g((m.p12 * m.sigma2 + m.rho * m.sigma1 * a2) / (m.p2 * m.sigma2)),
            )
        }
        MissingPattern::Group2Missing => {
            let a1 = m.p1 - m.p12;
            pinned(
                clamp_g((m.p12 * m.sigma1 + m.rho * m.sigma2 * a1) / (m.p1 * m.sigma1)),
                1.0,
            )
        }
        MissingPattern::BothGroups => both_groups(m),
    }
}

fn both_groups(m: &Moments) -> Result<OptimalWeightSolution> {
    let candidates = boundary_candidates(m)?;
    let root = match interior_root(m) {
        Ok(r) => Some(r),
        Err(Error::SingularSystem) => return grid_fallback(m, &candidates),
        Err(e) => return Err(e),
    };
    if let Some((w1, w2)) = root {
        // A negative determinant means a saddle: the stationary point is not a minimum.
        let in_box = (0.0..=1.0).contains(&w1) && (0.0..=1.0).contains(&w2);
        if in_box && interior_determinant(m) > 0.0 {
            let weights = WeightPair {
                w1,
                w2,
                strategy: WeightKind::Optimal,
            };
            return Ok(OptimalWeightSolution {
                weights,
                location: SolutionLocation::Interior,
                objective: asymptotic_variance(m, &weights)?,
                interior_root: root,
            });
        }
    }
    let mut best = (0, asymptotic_variance(m, &candidates[0])?);
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let v = asymptotic_variance(m, c)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    Ok(OptimalWeightSolution {
        weights: candidates[best.0],
        location: SolutionLocation::Boundary(best.0),
        objective: best.1,
        interior_root: root,
    })
}

fn grid_fallback(m: &Moments, candidates: &[WeightPair; 4]) -> Result<OptimalWeightSolution> {
    const STEPS: usize = 200;
    let mut best = candidates[0];
    let mut best_v = asymptotic_variance(m, &best)?;
    for c in &candidates[1..] {
        let v = asymptotic_variance(m, c)?;
        if v < best_v {
            best = *c;
            best_v = v;
        }
    }
    for i in 0..=STEPS {
        for j in 0..=STEPS {
            let w = WeightPair {
                w1: i as f64 / STEPS as f64,
                w2: j as f64 / STEPS as f64,
                strategy: WeightKind::Optimal,
            };
            let v = asymptotic_variance(m, &w)?;
            if v < best_v {
                best = w;
                best_v = v;
            }
        }
    }
    Ok(OptimalWeightSolution {
        weights: best,
        location: SolutionLocation::GridFallback,
        objective: best_v,
        interior_root: None,
    })
}
