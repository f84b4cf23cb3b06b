//! The weighted mean-difference estimator and its Wald test.
//!
//! For weights `(w1, w2)` the estimator is
//!
//! ```text
//! D = {w1 * mean(Y1 complete) + (1 - w1) * mean(Y1 incomplete)}
//!   - {w2 * mean(Y2 complete) + (1 - w2) * mean(Y2 incomplete)}
//! ```
//!
//! and `sqrt(n) (D - (mu1 - mu2))` is asymptotically normal with variance
//! [`asymptotic_variance`] under MCAR, for any root-n consistent weights.

use serde::Serialize;

use crate::bootstrap::bootstrap_se;
use crate::error::{Error, Result};
use crate::sample::{summarize, Moments, PartiallyPairedSample, SummaryStats};
use crate::stats::{normal_cdf, normal_quantile, two_sided_normal_p};
use crate::weights::{WeightPair, WeightStrategy};

/// Number of bootstrap replicates used when none is given.
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 1500;

/// How the standard error of the estimate is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SeMethod {
    /// Plug-in asymptotic variance divided by `n`.
    PlugIn,
    /// SD of the estimate over subject-level resamples.
    Bootstrap { replicates: usize, seed: u64 },
    /// Classical reference distribution of a baseline test.
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub estimate: f64,
    pub std_error: f64,
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    /// `None` for baseline tests.
    pub weights: Option<WeightPair>,
    pub se_method: SeMethod,
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Weighted mean difference for the given weights.
///
/// A weight may only put mass on a non-empty block: `w_g > 0` needs
/// complete pairs and `w_g < 1` needs incomplete observations of group `g`.
pub fn estimate_d(sample: &PartiallyPairedSample, w: &WeightPair) -> Result<f64> {
    let st = summarize(sample)?;
    estimate_from_stats(&st, w)
}

pub(crate) fn estimate_from_stats(st: &SummaryStats, w: &WeightPair) -> Result<f64> {
    let g1 = weighted_mean(1, w.w1, st.n0, st.mean_y1_complete, st.mean_y1_incomplete)?;
    let g2 = weighted_mean(2, w.w2, st.n0, st.mean_y2_complete, st.mean_y2_incomplete)?;
    Ok(g1 - g2)
}

fn weighted_mean(
    group: u8,
    w: f64,
    n0: usize,
    complete: f64,
    incomplete: Option<f64>,
) -> Result<f64> {
    let mismatch = || Error::WeightBlockMismatch { group, weight: w };
    let from_complete = if w > 0.0 {
        if n0 == 0 {
            return Err(mismatch());
        }
        w * complete
    } else {
        0.0
    };
    let from_incomplete = if w < 1.0 {
        (1.0 - w) * incomplete.ok_or_else(mismatch)?
    } else {
        0.0
    };
    Ok(from_complete + from_incomplete)
}

/// Asymptotic variance of `sqrt(n) * D` at weights `w`:
///
/// ```text
/// {w1^2/p12 + (1-w1)^2/(p1-p12)} s1^2 + {w2^2/p12 + (1-w2)^2/(p2-p12)} s2^2
///   - 2 w1 w2 rho s1 s2 / p12
/// ```
///
/// When a group has no incomplete block (`p_g = p12`) its `(1-w_g)^2/(p_g-p12)`
/// term is `0/0 = 0` and requires `w_g = 1`; this covers the one-sided and
/// fully observed regimes.
pub fn asymptotic_variance(m: &Moments, w: &WeightPair) -> Result<f64> {
    m.check()?;
    let term = |group: u8, wg: f64, p: f64, sigma: f64| -> Result<f64> {
        let gap = p - m.p12;
        let tail = if gap > 0.0 {
            (1.0 - wg).powi(2) / gap
        } else if wg == 1.0 {
            0.0
        } else {
            return Err(Error::SingularVariance(format!(
                "w{group} = {wg} with no incomplete observations in group {group}"
            )));
        };
        Ok((wg * wg / m.p12 + tail) * sigma * sigma)
    };
    let v = term(1, w.w1, m.p1, m.sigma1)? + term(2, w.w2, m.p2, m.sigma2)?
        - 2.0 * w.w1 * w.w2 * m.rho * m.sigma1 * m.sigma2 / m.p12;
    Ok(v.max(0.0))
}

/// Runs the WMD test with weights chosen by `strategy`.
pub fn test(
    sample: &PartiallyPairedSample,
    strategy: &WeightStrategy,
    se: SeMethod,
) -> Result<TestResult> {
    let st = summarize(sample)?;
    let weights = strategy.resolve(&st)?;
    let estimate = estimate_from_stats(&st, &weights)?;
    let std_error = match se {
        SeMethod::PlugIn => (asymptotic_variance(&st.moments, &weights)? / st.n() as f64).sqrt(),
        SeMethod::Bootstrap { replicates, seed } => {
            bootstrap_se(sample, strategy, replicates, seed)?
        }
        SeMethod::Classical => {
            return Err(Error::InvalidParams(
                "classical calibration applies to baseline tests only".into(),
            ))
        }
    };
    let statistic = if estimate == 0.0 {
        0.0
    } else if std_error > 0.0 {
        estimate / std_error
    } else {
        return Err(Error::DegenerateSample("standard error is zero".into()));
    };
    Ok(TestResult {
        estimate,
        std_error,
        statistic,
        p_value: two_sided_normal_p(statistic),
        weights: Some(weights),
        se_method: se,
        n0: st.n0,
        n1: st.n1,
        n2: st.n2,
    })
}

/// Population parameters for power calculations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerParams {
    pub moments: Moments,
    pub mu1: f64,
    pub mu2: f64,
}

/// Asymptotic power of the two-sided level-`alpha` WMD test with `n` subjects.
///
/// The non-centrality is `sqrt(n) (mu1 - mu2) / sigma_D(w)`.
pub fn analytic_power(params: &PowerParams, w: &WeightPair, n: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if n == 0 || !params.mu1.is_finite() || !params.mu2.is_finite() {
        return Err(Error::InvalidParams("need n > 0 and finite means".into()));
    }
    let var = asymptotic_variance(&params.moments, w)?;
    if params.mu1 == params.mu2 {
        return Ok(alpha);
    }
    if var <= 0.0 {
        return Ok(1.0);
    }
    let shift = (n as f64).sqrt() * (params.mu1 - params.mu2) / var.sqrt();
    let z = normal_quantile(1.0 - alpha / 2.0);
    // 1 - Phi(z - shift) written as Phi(shift - z) to avoid cancellation
    Ok((normal_cdf(shift - z) + normal_cdf(-z - shift)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{simple_weights, WeightKind};
    use approx::assert_abs_diff_eq;

    fn m(p1: f64, p2: f64, p12: f64, sigma1: f64, sigma2: f64, rho: f64) -> Moments {
        Moments {
            p1,
            p2,
            p12,
            sigma1,
            sigma2,
            rho,
        }
    }

    fn w(w1: f64, w2: f64) -> WeightPair {
        WeightPair::fixed(w1, w2).unwrap()
    }

    fn fixture() -> PartiallyPairedSample {
        PartiallyPairedSample::new(
            vec![1.0, 2.0, 4.0, 3.5],
            vec![1.5, 2.5, 3.0, 5.0],
            vec![0.5, 2.5],
            vec![4.0, 1.0, 2.0],
        )
        .unwrap()
    }

    #[test]
    fn complete_only_is_paired_difference() {
        let d = estimate_d(&fixture(), &w(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(d, (10.5 - 12.0) / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn simple_weights_give_group_means() {
        let s = fixture();
        let d = estimate_d(&s, &simple_weights(&s)).unwrap();
        assert_abs_diff_eq!(d, 13.5 / 6.0 - 19.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn identical_groups_give_zero() {
        let s = PartiallyPairedSample::new(
            vec![1.0, 2.0, 3.0],
            vec![1.0, 2.0, 3.0],
            vec![4.0],
            vec![4.0],
        )
        .unwrap();
        assert_eq!(estimate_d(&s, &w(0.3, 0.3)).unwrap(), 0.0);
    }

    #[test]
    fn weight_on_empty_block() {
        let s =
            PartiallyPairedSample::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.5, 3.0], vec![], vec![4.0])
                .unwrap();
        assert_eq!(
            estimate_d(&s, &w(0.5, 1.0)),
            Err(Error::WeightBlockMismatch {
                group: 1,
                weight: 0.5
            })
        );
        assert!(estimate_d(&s, &w(1.0, 0.5)).is_ok());
    }

    #[test]
    fn variance_at_simple_population_weights() {
        let mm = m(0.8, 0.7, 0.5, 1.3, 0.7, 0.4);
        let v = asymptotic_variance(&mm, &w(0.5 / 0.8, 0.5 / 0.7)).unwrap();
        let want =
            1.3f64.powi(2) / 0.8 + 0.7f64.powi(2) / 0.7 - 2.0 * 0.4 * 1.3 * 0.7 * 0.5 / (0.8 * 0.7);
        assert_abs_diff_eq!(v, want, epsilon = 1e-12);
    }

    #[test]
    fn variance_without_missingness_is_paired() {
        let v = asymptotic_variance(&m(1.0, 1.0, 1.0, 2.0, 3.0, 0.25), &w(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(v, 4.0 + 9.0 - 2.0 * 0.25 * 6.0, epsilon = 1e-14);
    }

    #[test]
    fn variance_term_by_term() {
        // p1=1, p2=0.5, p12=0.5: only group 2 has gaps, so w2 is pinned at 1.
        // w=(0.5, 1), unit SDs, rho=0:
        // group 1: 0.25/0.5 + 0.25/0.5 = 1; group 2: 1/0.5 = 2; no cross term.
        let mm = m(1.0, 0.5, 0.5, 1.0, 1.0, 0.0);
        let v = asymptotic_variance(&mm, &w(0.5, 1.0)).unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-15);
        // with rho = 0.4, SDs (1, 2): cross term 2 * 0.5 * 0.4 * 2 / 0.5 = 1.6
        let mm = m(1.0, 0.5, 0.5, 1.0, 2.0, 0.4);
        let v = asymptotic_variance(&mm, &w(0.5, 1.0)).unwrap();
        assert_abs_diff_eq!(v, 1.0 + 8.0 - 1.6, epsilon = 1e-14);
        // the mirrored weights put mass on the empty group-2 block
        assert!(matches!(
            asymptotic_variance(&mm, &w(1.0, 0.5)),
            Err(Error::SingularVariance(_))
        ));
    }

    #[test]
    fn singular_variance() {
        let r = asymptotic_variance(&m(1.0, 0.5, 0.5, 1.0, 1.0, 0.0), &w(0.9, 0.5));
        assert!(matches!(r, Err(Error::SingularVariance(_))));
        let r = asymptotic_variance(&m(1.0, 0.5, 0.6, 1.0, 1.0, 0.0), &w(1.0, 0.5));
        assert!(matches!(r, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn equal_groups_test_has_unit_p_value() {
        let y: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let s = PartiallyPairedSample::paired(y.clone(), y).unwrap();
        let r = test(&s, &WeightStrategy::Simple, SeMethod::PlugIn).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn statistic_is_estimate_over_se() {
        let r = test(&fixture(), &WeightStrategy::Optimal, SeMethod::PlugIn).unwrap();
        assert_abs_diff_eq!(r.statistic, r.estimate / r.std_error, epsilon = 1e-15);
        assert_abs_diff_eq!(
            r.p_value,
            2.0 * (1.0 - normal_cdf(r.statistic.abs())),
            epsilon = 1e-12
        );
        assert_eq!(r.weights.unwrap().strategy, WeightKind::Optimal);
    }

    #[test]
    fn power_null_and_monotone() {
        let pp = PowerParams {
            moments: m(0.8, 0.7, 0.5, 1.0, 1.0, 0.5),
            mu1: 0.0,
            mu2: 0.0,
        };
        assert_eq!(analytic_power(&pp, &w(0.6, 0.6), 50, 0.05).unwrap(), 0.05);
        let shifted = PowerParams { mu1: 0.3, ..pp };
        let mut last = 1.0;
        for sigma in [0.5, 0.8, 1.0, 1.5, 2.0, 4.0] {
            let p = PowerParams {
                moments: Moments {
                    sigma1: sigma,
                    sigma2: sigma,
                    ..pp.moments
                },
                ..shifted
            };
            let pw = analytic_power(&p, &w(0.6, 0.6), 50, 0.05).unwrap();
            assert!(pw < last);
            last = pw;
        }
        assert!(analytic_power(&pp, &w(0.6, 0.6), 50, 1.5).is_err());
    }
}
