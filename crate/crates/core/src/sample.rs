//! Partially paired samples and their plug-in summary statistics.
//!
//! A sample is stored as four blocks: the two coordinates of the complete
//! pairs, the group-1 values whose group-2 partner is missing, and the
//! group-2 values whose group-1 partner is missing. Subjects missing both
//! values carry no information under MCAR and are never stored.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartiallyPairedSample {
    y1_complete: Vec<f64>,
    y2_complete: Vec<f64>,
    y1_only: Vec<f64>,
    y2_only: Vec<f64>,
}

/// Result of building a sample from raw rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub sample: PartiallyPairedSample,
    /// Rows where both values were missing.
    pub dropped_both_missing: usize,
}

impl PartiallyPairedSample {
    pub fn new(
        y1_complete: Vec<f64>,
        y2_complete: Vec<f64>,
        y1_only: Vec<f64>,
        y2_only: Vec<f64>,
    ) -> Result<Self> {
        if y1_complete.len() != y2_complete.len() {
            return Err(Error::InvalidParams(format!(
                "complete blocks differ in length ({} vs {})",
                y1_complete.len(),
                y2_complete.len()
            )));
        }
        let all = y1_complete
            .iter()
            .chain(&y2_complete)
            .chain(&y1_only)
            .chain(&y2_only);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite value in sample".into()));
        }
        Ok(Self {
            y1_complete,
            y2_complete,
            y1_only,
            y2_only,
        })
    }

    /// A fully paired sample.
    pub fn paired(y1: Vec<f64>, y2: Vec<f64>) -> Result<Self> {
        Self::new(y1, y2, Vec::new(), Vec::new())
    }

    /// Builds a sample from subject rows, `None` marking a missing cell.
    pub fn from_rows<I>(rows: I) -> Result<Ingested>
    where
        I: IntoIterator<Item = (Option<f64>, Option<f64>)>,
    {
        let mut y1c = Vec::new();
        let mut y2c = Vec::new();
        let mut y1o = Vec::new();
        let mut y2o = Vec::new();
        let mut dropped = 0;
        for row in rows {
            match row {
                (Some(a), Some(b)) => {
                    y1c.push(a);
                    y2c.push(b);
                }
                (Some(a), None) => y1o.push(a),
                (None, Some(b)) => y2o.push(b),
                (None, None) => dropped += 1,
            }
        }
        Ok(Ingested {
            sample: Self::new(y1c, y2c, y1o, y2o)?,
            dropped_both_missing: dropped,
        })
    }

    /// Subject rows in block order: complete pairs, group-1-only, group-2-only.
    pub fn rows(&self) -> impl Iterator<Item = (Option<f64>, Option<f64>)> + '_ {
        let complete = self
            .y1_complete
            .iter()
            .zip(&self.y2_complete)
            .map(|(&a, &b)| (Some(a), Some(b)));
        let only1 = self.y1_only.iter().map(|&a| (Some(a), None));
        let only2 = self.y2_only.iter().map(|&b| (None, Some(b)));
        complete.chain(only1).chain(only2)
    }

    pub fn y1_complete(&self) -> &[f64] {
        &self.y1_complete
    }
    pub fn y2_complete(&self) -> &[f64] {
        &self.y2_complete
    }
    pub fn y1_only(&self) -> &[f64] {
        &self.y1_only
    }
    pub fn y2_only(&self) -> &[f64] {
        &self.y2_only
    }

    /// Number of complete pairs.
    pub fn n0(&self) -> usize {
        self.y1_complete.len()
    }
    /// Subjects with only the group-1 value observed.
    pub fn n1(&self) -> usize {
        self.y1_only.len()
    }
    /// Subjects with only the group-2 value observed.
    pub fn n2(&self) -> usize {
        self.y2_only.len()
    }
    pub fn n(&self) -> usize {
        self.n0() + self.n1() + self.n2()
    }

    /// All observed group-1 values (complete block first).
    pub fn group1(&self) -> impl Iterator<Item = f64> + '_ {
        self.y1_complete.iter().chain(&self.y1_only).copied()
    }
    /// All observed group-2 values (complete block first).
    pub fn group2(&self) -> impl Iterator<Item = f64> + '_ {
        self.y2_complete.iter().chain(&self.y2_only).copied()
    }

    pub fn pattern(&self) -> MissingPattern {
        MissingPattern::from_counts(self.n1(), self.n2())
    }
}

/// Where missing values occur.
///
/// Keyed strictly off the block counts: a subject in `y2_only` lacks its
/// group-1 value, so `n2 > 0` means group 1 has missing values, and
/// `n1 > 0` means group 2 has missing values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPattern {
    BothGroups,
    /// Some group-1 values missing, group 2 fully observed (`n1 = 0, n2 > 0`).
    Group1Missing,
    /// Some group-2 values missing, group 1 fully observed (`n1 > 0, n2 = 0`).
    Group2Missing,
    NoneMissing,
}

impl MissingPattern {
    pub fn from_counts(n1: usize, n2: usize) -> Self {
        match (n1 > 0, n2 > 0) {
            (true, true) => MissingPattern::BothGroups,
            (false, true) => MissingPattern::Group1Missing,
            (true, false) => MissingPattern::Group2Missing,
            (false, false) => MissingPattern::NoneMissing,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MissingPattern::BothGroups => "both-groups",
            MissingPattern::Group1Missing => "group1-missing",
            MissingPattern::Group2Missing => "group2-missing",
            MissingPattern::NoneMissing => "none-missing",
        }
    }
}

/// Checks that every plug-in quantity is estimable and returns the regime.
///
/// At least two complete pairs are required in every regime: the
/// correlation enters the variance whenever a complete block exists.
pub fn validate(sample: &PartiallyPairedSample) -> Result<MissingPattern> {
    if sample.n() == 0 {
        return Err(Error::EmptySample);
    }
    if sample.n0() < 2 {
        return Err(Error::DegenerateSample(format!(
            "{} complete pair(s); the correlation needs at least 2",
            sample.n0()
        )));
    }
    Ok(sample.pattern())
}

/// Observation probabilities, standard deviations and correlation.
///
/// Used both for population parameters and for their plug-in estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    /// Probability that the group-1 value is observed.
    pub p1: f64,
    /// Probability that the group-2 value is observed.
    pub p2: f64,
    /// Probability that both are observed.
    pub p12: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl Moments {
    pub fn check(&self) -> Result<()> {
        let Moments {
            p1,
            p2,
            p12,
            sigma1,
            sigma2,
            rho,
        } = *self;
        let finite = [p1, p2, p12, sigma1, sigma2, rho]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite moment".into()));
        }
        if !(p12 > 0.0 && p12 <= p1.min(p2) && p1.max(p2) <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "need 0 < p12 <= min(p1, p2) <= 1, got p1={p1}, p2={p2}, p12={p12}"
            )));
        }
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "standard deviations must be positive, got {sigma1}, {sigma2}"
            )));
        }
        if rho.abs() > 1.0 {
            return Err(Error::InvalidParams(format!("|rho| > 1: {rho}")));
        }
        Ok(())
    }

    /// Regime implied by which incomplete blocks have positive probability.
    pub fn pattern(&self) -> MissingPattern {
        let only1 = self.p1 - self.p12 > 0.0;
        let only2 = self.p2 - self.p12 > 0.0;
        match (only1, only2) {
            (true, true) => MissingPattern::BothGroups,
            (false, true) => MissingPattern::Group1Missing,
            (true, false) => MissingPattern::Group2Missing,
            (false, false) => MissingPattern::NoneMissing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub pattern: MissingPattern,
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    pub mean_y1_complete: f64,
    pub mean_y2_complete: f64,
    /// Absent when the block is empty.
    pub mean_y1_incomplete: Option<f64>,
    pub mean_y2_incomplete: Option<f64>,
    pub moments: Moments,
    /// SD of the within-pair differences.
    pub diff_sd: f64,
    /// Pooled SD of the two unpaired blocks; absent unless both are
    /// non-empty and together hold at least three values.
    pub unpaired_pooled_sd: Option<f64>,
}

impl SummaryStats {
    pub fn n(&self) -> usize {
        self.n0 + self.n1 + self.n2
    }
}

/// Plug-in estimates of every quantity the variance formula needs.
///
/// Group standard deviations pool the complete and incomplete blocks of
/// the group (denominator `m - 1`). The correlation is the Pearson
/// coefficient over complete pairs; it is reported as 0 when one coordinate
/// of the complete pairs is constant, since the sample covariance is then 0.
pub fn summarize(sample: &PartiallyPairedSample) -> Result<SummaryStats> {
    BlockSums::from_sample(sample).summary()
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    count: usize,
    sum: f64,
    sumsq: f64,
}

impl Acc {
    #[inline]
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn merged(self, other: Acc) -> Acc {
        Acc {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sumsq: self.sumsq + other.sumsq,
        }
    }

    /// Centered sum of squares.
    fn css(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.sumsq - self.sum * self.sum / self.count as f64).max(0.0)
    }

    fn sd(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.css() / (self.count - 1) as f64).sqrt()
    }
}

/// Sufficient statistics of a sample, accumulated on values shifted by a
/// per-group reference to keep the one-pass sums well conditioned.
///
/// Resampling loops feed this directly so no resampled sample is built.
#[derive(Debug, Clone)]
pub(crate) struct BlockSums {
    shift1: f64,
    shift2: f64,
    c1: Acc,
    c2: Acc,
    cross: f64,
    o1: Acc,
    o2: Acc,
}

impl BlockSums {
    pub(crate) fn with_shift(shift1: f64, shift2: f64) -> Self {
        Self {
            shift1,
            shift2,
            c1: Acc::default(),
            c2: Acc::default(),
            cross: 0.0,
            o1: Acc::default(),
            o2: Acc::default(),
        }
    }

    pub(crate) fn from_sample(sample: &PartiallyPairedSample) -> Self {
        let (m1, m2) = group_means(sample);
        let mut sums = Self::with_shift(m1, m2);
        for (&a, &b) in sample.y1_complete().iter().zip(sample.y2_complete()) {
            sums.push_pair(a, b);
        }
        for &a in sample.y1_only() {
            sums.push_y1(a);
        }
        for &b in sample.y2_only() {
            sums.push_y2(b);
        }
        sums
    }

    #[inline]
    pub(crate) fn push_pair(&mut self, a: f64, b: f64) {
        let (a, b) = (a - self.shift1, b - self.shift2);
        self.c1.push(a);
        self.c2.push(b);
        self.cross += a * b;
    }

    #[inline]
    pub(crate) fn push_y1(&mut self, a: f64) {
        self.o1.push(a - self.shift1);
    }

    #[inline]
    pub(crate) fn push_y2(&mut self, b: f64) {
        self.o2.push(b - self.shift2);
    }

    pub(crate) fn summary(&self) -> Result<SummaryStats> {
        let (n0, n1, n2) = (self.c1.count, self.o1.count, self.o2.count);
        let n = n0 + n1 + n2;
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if n0 < 2 {
            return Err(Error::DegenerateSample(format!(
                "{n0} complete pair(s); the correlation needs at least 2"
            )));
        }
        let sigma1 = self.c1.merged(self.o1).sd();
        let sigma2 = self.c2.merged(self.o2).sd();
        if !(sigma1 > 0.0) {
            return Err(Error::ZeroVariance("group 1".into()));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::ZeroVariance("group 2".into()));
        }
        let k = n0 as f64;
        let sxy = self.cross - self.c1.sum * self.c2.sum / k;
        let (sxx, syy) = (self.c1.css(), self.c2.css());
        let rho = if sxx > 0.0 && syy > 0.0 {
            (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let diff_sd = ((sxx + syy - 2.0 * sxy).max(0.0) / (k - 1.0)).sqrt();
        let unpaired_pooled_sd = (n1 >= 1 && n2 >= 1 && n1 + n2 >= 3)
            .then(|| ((self.o1.css() + self.o2.css()) / (n1 + n2 - 2) as f64).sqrt());
        let block_mean =
            |acc: &Acc, shift: f64| (acc.count > 0).then(|| shift + acc.sum / acc.count as f64);
        let nf = n as f64;
        Ok(SummaryStats {
            pattern: MissingPattern::from_counts(n1, n2),
            n0,
            n1,
            n2,
            mean_y1_complete: self.shift1 + self.c1.sum / k,
            mean_y2_complete: self.shift2 + self.c2.sum / k,
            mean_y1_incomplete: block_mean(&self.o1, self.shift1),
            mean_y2_incomplete: block_mean(&self.o2, self.shift2),
            moments: Moments {
                p1: (n0 + n1) as f64 / nf,
                p2: (n0 + n2) as f64 / nf,
                p12: k / nf,
                sigma1,
                sigma2,
                rho,
            },
            diff_sd,
            unpaired_pooled_sd,
        })
    }
}

/// Means of all observed values per group (0 for an empty group).
pub(crate) fn group_means(sample: &PartiallyPairedSample) -> (f64, f64) {
    let avg = |it: &mut dyn Iterator<Item = f64>| {
        let (s, c) = it.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
        if c == 0 {
            0.0
        } else {
            s / c as f64
        }
    };
    (avg(&mut sample.group1()), avg(&mut sample.group2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn counts(n0: usize, n1: usize, n2: usize) -> PartiallyPairedSample {
        let c: Vec<f64> = (0..n0).map(|i| i as f64).collect();
        let c2: Vec<f64> = (0..n0).map(|i| (i * i) as f64).collect();
        PartiallyPairedSample::new(
            c,
            c2,
            (0..n1).map(|i| i as f64 * 0.5).collect(),
            (0..n2).map(|i| i as f64 * 1.5).collect(),
        )
        .unwrap()
    }

    #[test]
    fn regime_classification() {
        assert_eq!(
            validate(&counts(10, 0, 5)).unwrap(),
            MissingPattern::Group1Missing
        );
        assert_eq!(
            validate(&counts(10, 5, 0)).unwrap(),
            MissingPattern::Group2Missing
        );
        assert_eq!(
            validate(&counts(10, 5, 5)).unwrap(),
            MissingPattern::BothGroups
        );
        assert_eq!(
            validate(&counts(10, 0, 0)).unwrap(),
            MissingPattern::NoneMissing
        );
    }

    #[test]
    fn validate_errors() {
        assert_eq!(validate(&counts(0, 0, 0)), Err(Error::EmptySample));
        assert!(matches!(
            validate(&counts(0, 3, 3)),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            validate(&counts(1, 3, 3)),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(PartiallyPairedSample::new(vec![1.0], vec![], vec![], vec![]).is_err());
        assert!(PartiallyPairedSample::new(vec![], vec![], vec![f64::NAN], vec![]).is_err());
        assert!(PartiallyPairedSample::new(vec![], vec![], vec![], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn identical_pairs() {
        let s = PartiallyPairedSample::paired(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        let st = summarize(&s).unwrap();
        assert_abs_diff_eq!(st.moments.rho, 1.0, epsilon = 1e-15);
        assert_eq!(st.moments.p1, 1.0);
        assert_eq!(st.moments.p2, 1.0);
        assert_eq!(st.moments.p12, 1.0);
        assert_eq!(st.pattern, MissingPattern::NoneMissing);
        assert_eq!(st.mean_y1_incomplete, None);
    }

    #[test]
    fn probability_arithmetic() {
        let st = summarize(&counts(10, 10, 0)).unwrap();
        assert_eq!(st.moments.p1, 1.0);
        assert_eq!(st.moments.p2, 0.5);
        assert_eq!(st.moments.p12, 0.5);
    }

    #[test]
    fn zero_variance_group() {
        let s =
            PartiallyPairedSample::new(vec![2.0, 2.0, 2.0], vec![1.0, 2.0, 3.0], vec![2.0], vec![])
                .unwrap();
        assert_eq!(summarize(&s), Err(Error::ZeroVariance("group 1".into())));
    }

    #[test]
    fn constant_complete_coordinate_gives_zero_correlation() {
        // group 1 varies only through its incomplete block
        let s =
            PartiallyPairedSample::new(vec![2.0, 2.0, 2.0], vec![1.0, 2.0, 3.0], vec![5.0], vec![])
                .unwrap();
        assert_eq!(summarize(&s).unwrap().moments.rho, 0.0);
    }

    #[test]
    fn rows_round_trip() {
        let s = counts(4, 2, 3);
        let back = PartiallyPairedSample::from_rows(s.rows()).unwrap();
        assert_eq!(back.sample, s);
        assert_eq!(back.dropped_both_missing, 0);
    }

    #[test]
    fn from_rows_drops_double_missing() {
        let rows = vec![
            (Some(1.0), Some(2.0)),
            (None, None),
            (Some(3.0), None),
            (None, Some(4.0)),
            (None, None),
        ];
        let ing = PartiallyPairedSample::from_rows(rows).unwrap();
        assert_eq!(ing.dropped_both_missing, 2);
        assert_eq!(
            (ing.sample.n0(), ing.sample.n1(), ing.sample.n2()),
            (1, 1, 1)
        );
    }

    #[test]
    fn population_pattern() {
        let m = Moments {
            p1: 1.0,
            p2: 0.5,
            p12: 0.5,
            sigma1: 1.0,
            sigma2: 1.0,
            rho: 0.0,
        };
        assert_eq!(m.pattern(), MissingPattern::Group2Missing);
        assert!(m.check().is_ok());
        assert!(Moments { p12: 0.6, ..m }.check().is_err());
        assert!(Moments { rho: 1.2, ..m }.check().is_err());
        assert!(Moments { sigma2: 0.0, ..m }.check().is_err());
    }
}
