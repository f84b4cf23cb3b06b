//! Comparator tests: paired t and Wilcoxon signed-rank, on complete pairs
//! or after per-group median imputation.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::sample::PartiallyPairedSample;
use crate::stats::{mean, median, midranks, sample_sd, two_sided_normal_p};
use crate::wmd::{SeMethod, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    TPairedComplete,
    TPairedImputed,
    WilcoxonComplete,
    WilcoxonImputed,
}

impl BaselineMethod {
    pub fn run(self, sample: &PartiallyPairedSample) -> Result<TestResult> {
        let (n0, n1, n2) = (sample.n0(), sample.n1(), sample.n2());
        let mut r = match self {
            BaselineMethod::TPairedComplete => paired_t(sample.y1_complete(), sample.y2_complete()),
            BaselineMethod::WilcoxonComplete => {
                wilcoxon_signed_rank(sample.y1_complete(), sample.y2_complete())
            }
            BaselineMethod::TPairedImputed => {
                let full = impute_median(sample)?;
                paired_t(full.y1_complete(), full.y2_complete())
            }
            BaselineMethod::WilcoxonImputed => {
                let full = impute_median(sample)?;
                wilcoxon_signed_rank(full.y1_complete(), full.y2_complete())
            }
        }?;
        (r.n0, r.n1, r.n2) = (n0, n1, n2);
        Ok(r)
    }
}

fn differences(y1: &[f64], y2: &[f64]) -> Vec<f64> {
    y1.iter().zip(y2).map(|(a, b)| a - b).collect()
}

/// Classical paired t test; p-value from Student t with `n0 - 1` df.
pub fn paired_t(y1: &[f64], y2: &[f64]) -> Result<TestResult> {
    if y1.len() != y2.len() {
        return Err(Error::InvalidParams(
            "paired columns differ in length".into(),
        ));
    }
    if y1.len() < 2 {
        return Err(Error::TooFewPairs);
    }
    let d = differences(y1, y2);
    let k = d.len() as f64;
    let sd = sample_sd(&d);
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance("paired differences".into()));
    }
    let estimate = mean(&d);
    let std_error = sd / k.sqrt();
    let statistic = estimate / std_error;
    let dist = StudentsT::new(0.0, 1.0, k - 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    let p_value = (2.0 * dist.cdf(-statistic.abs())).min(1.0);
    Ok(TestResult {
        estimate,
        std_error,
        statistic,
        p_value,
        weights: None,
        se_method: SeMethod::Classical,
        n0: y1.len(),
        n1: 0,
        n2: 0,
    })
}

/// Wilcoxon signed-rank test, normal approximation.
///
/// Zero differences are dropped, tied `|d|` get midranks, the variance is
/// tie-corrected and a 0.5 continuity correction is applied. `estimate` is
/// the centered positive-rank sum `W+ - m(m+1)/4`.
pub fn wilcoxon_signed_rank(y1: &[f64], y2: &[f64]) -> Result<TestResult> {
    if y1.len() != y2.len() {
        return Err(Error::InvalidParams(
            "paired columns differ in length".into(),
        ));
    }
    let d: Vec<f64> = differences(y1, y2)
        .into_iter()
        .filter(|&x| x != 0.0)
        .collect();
    if d.is_empty() {
        return Err(Error::AllZeroDifferences);
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();

    let m = d.len() as f64;
    let centre = m * (m + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes(&abs).map(|t| t * t * t - t).sum();
    let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    let std_error = var.sqrt();
    let estimate = w_plus - centre;
    let corrected = (estimate.abs() - 0.5).max(0.0).copysign(estimate);
    let statistic = if std_error > 0.0 {
        corrected / std_error
    } else {
        0.0
    };
    Ok(TestResult {
        estimate,
        std_error,
        statistic,
        p_value: two_sided_normal_p(statistic),
        weights: None,
        se_method: SeMethod::Classical,
        n0: y1.len(),
        n1: 0,
        n2: 0,
    })
}

fn tie_sizes(xs: &[f64]) -> impl Iterator<Item = f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let j = v[i..].iter().take_while(|&&x| x == v[i]).count();
        if j > 1 {
            sizes.push(j as f64);
        }
        i += j;
    }
    sizes.into_iter()
}

/// Replaces every missing cell with the median of the observed values of
/// its group, yielding a fully paired sample of the same size.
pub fn impute_median(sample: &PartiallyPairedSample) -> Result<PartiallyPairedSample> {
    let g1: Vec<f64> = sample.group1().collect();
    let g2: Vec<f64> = sample.group2().collect();
    let med1 = median(&g1).ok_or(Error::EmptyGroup { group: 1 })?;
    let med2 = median(&g2).ok_or(Error::EmptyGroup { group: 2 })?;
    let (y1, y2): (Vec<f64>, Vec<f64>) = sample
        .rows()
        .map(|(a, b)| (a.unwrap_or(med1), b.unwrap_or(med2)))
        .unzip();
    PartiallyPairedSample::paired(y1, y2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn t_identical_pairs() {
        assert!(matches!(
            paired_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert_eq!(paired_t(&[1.0], &[2.0]), Err(Error::TooFewPairs));
    }

    #[test]
    fn t_symmetric_differences() {
        let r = paired_t(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn t_textbook() {
        let y1 = [5.1, 4.8, 6.0, 5.5, 5.9, 4.7, 5.2];
        let y2 = [4.9, 4.9, 5.3, 5.0, 5.6, 4.4, 5.3];
        let d: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
        let k = d.len() as f64;
        let dbar = d.iter().sum::<f64>() / k;
        let s = (d.iter().map(|x| (x - dbar).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        let t = dbar / (s / k.sqrt());
        let r = paired_t(&y1, &y2).unwrap();
        assert_abs_diff_eq!(r.statistic, t, epsilon = 1e-10);
        // scipy.stats.ttest_rel on the same columns
        assert_abs_diff_eq!(r.statistic, 2.317361807283521, epsilon = 1e-10);
        assert_abs_diff_eq!(r.p_value, 0.059664133059348035, epsilon = 1e-10);
    }

    #[test]
    fn wilcoxon_all_zero() {
        assert_eq!(
            wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::AllZeroDifferences)
        );
    }

    #[test]
    fn wilcoxon_symmetric() {
        let r = wilcoxon_signed_rank(&[3.0, 0.0], &[0.0, 3.0]).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_tie_corrected_variance() {
        // |d| = 1, 1, 2, 3 -> one tie of size 2: var = 4*5*9/24 - 6/48
        let r = wilcoxon_signed_rank(&[1.0, 0.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(r.std_error, (7.5f64 - 0.125).sqrt(), epsilon = 1e-14);
        // W+ = 1.5 + 3 + 4 = 8.5, centre 5
        assert_abs_diff_eq!(r.estimate, 3.5, epsilon = 1e-14);
    }

    #[test]
    fn impute_odd_median() {
        let s =
            PartiallyPairedSample::new(vec![1.0, 2.0], vec![1.0, 3.0], vec![7.0, 9.0], vec![2.0])
                .unwrap();
        let full = impute_median(&s).unwrap();
        assert_eq!(full.n0(), 5);
        assert_eq!(full.n1() + full.n2(), 0);
        // group 2 observed: 1, 3, 2 -> median 2 fills both gaps
        assert_eq!(&full.y2_complete()[2..4], &[2.0, 2.0]);
        // group 1 observed: 1, 2, 7, 9 -> median 4.5
        assert_eq!(full.y1_complete()[4], 4.5);
    }

    #[test]
    fn impute_identity_without_missing() {
        let s = PartiallyPairedSample::paired(vec![1.0, 5.0, 2.0], vec![0.0, 3.0, 8.0]).unwrap();
        assert_eq!(impute_median(&s).unwrap(), s);
    }

    #[test]
    fn impute_empty_group() {
        let s = PartiallyPairedSample::new(vec![], vec![], vec![1.0], vec![]).unwrap();
        assert_eq!(impute_median(&s), Err(Error::EmptyGroup { group: 2 }));
    }

    #[test]
    fn complete_pair_tests_ignore_unpaired_blocks() {
        let a = PartiallyPairedSample::paired(vec![1.0, 2.0, 4.0, 3.0], vec![1.5, 1.0, 2.0, 3.5])
            .unwrap();
        let b = PartiallyPairedSample::new(
            a.y1_complete().to_vec(),
            a.y2_complete().to_vec(),
            vec![100.0, -3.0],
            vec![7.0],
        )
        .unwrap();
        for m in [
            BaselineMethod::TPairedComplete,
            BaselineMethod::WilcoxonComplete,
        ] {
            let (ra, rb) = (m.run(&a).unwrap(), m.run(&b).unwrap());
            assert_eq!(ra.statistic.to_bits(), rb.statistic.to_bits());
            assert_eq!(ra.p_value.to_bits(), rb.p_value.to_bits());
        }
    }
}
