//! Monte-Carlo harness for type-I-error and power studies.
//!
//! Data are drawn from a bivariate normal (optionally thresholded into
//! 0-3 interval scores), then each coordinate is masked independently.
//! Subjects that lose both values are redrawn, so every replicate has
//! exactly `n` informative subjects. Replicate `r` draws from ChaCha stream
//! `(seed, r)`; reports are identical for any thread count.

mod report;
mod scenario_file;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::replicate_rng;
use crate::error::{Error, Result};
use crate::method::{Method, SeMode};
use crate::sample::{summarize, Moments, PartiallyPairedSample};
use crate::stats::spearman;
use crate::wmd::PowerParams;

pub use report::{render_records, render_table};
pub use scenario_file::{parse_scenarios, parse_scenarios_file};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Flavor {
    Continuous,
    /// Each coordinate becomes the number of cutpoints below it (0..=3).
    DiscreteInterval {
        cutpoints: [f64; 3],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Correlation of the latent bivariate normal.
    pub rho: f64,
    pub flavor: Flavor,
}

impl PopulationParams {
    pub fn continuous(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, rho: f64) -> Self {
        Self {
            mu1,
            mu2,
            sigma1,
            sigma2,
            rho,
            flavor: Flavor::Continuous,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu1, self.mu2, self.sigma1, self.sigma2, self.rho]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::InvalidParams(
                "need finite means and positive SDs".into(),
            ));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::InvalidParams(format!(
                "rho must lie in (-1, 1), got {}",
                self.rho
            )));
        }
        if let Flavor::DiscreteInterval { cutpoints } = self.flavor {
            let increasing = cutpoints.windows(2).all(|w| w[0] < w[1]);
            if !increasing || cutpoints.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParams(
                    "cutpoints must be finite and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Independent per-group masking probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MissingnessSpec {
    /// Probability that the group-1 value is missing.
    pub q1: f64,
    /// Probability that the group-2 value is missing.
    pub q2: f64,
}

impl MissingnessSpec {
    pub fn validate(&self) -> Result<()> {
        if !((0.0..1.0).contains(&self.q1) && (0.0..1.0).contains(&self.q2)) {
            return Err(Error::InvalidParams(format!(
                "missingness probabilities must lie in [0, 1), got ({}, {})",
                self.q1, self.q2
            )));
        }
        Ok(())
    }

    /// `(p1, p2, p12)` among retained subjects, i.e. conditional on at
    /// least one value being observed.
    pub fn observation_probs(&self) -> (f64, f64, f64) {
        let keep = 1.0 - self.q1 * self.q2;
        let (o1, o2) = (1.0 - self.q1, 1.0 - self.q2);
        (o1 / keep, o2 / keep, o1 * o2 / keep)
    }
}

/// Population quantities the asymptotic theory needs (continuous data).
pub fn population_power_params(
    params: &PopulationParams,
    missing: &MissingnessSpec,
) -> Result<PowerParams> {
    if params.flavor != Flavor::Continuous {
        return Err(Error::InvalidParams(
            "population moments are only available for continuous data".into(),
        ));
    }
    let (p1, p2, p12) = missing.observation_probs();
    Ok(PowerParams {
        moments: Moments {
            p1,
            p2,
            p12,
            sigma1: params.sigma1,
            sigma2: params.sigma2,
            rho: params.rho,
        },
        mu1: params.mu1,
        mu2: params.mu2,
    })
}

fn draw_pair<R: Rng + ?Sized>(params: &PopulationParams, rng: &mut R) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    latent_pair(params, params.rho, z1, z2)
}

fn latent_pair(params: &PopulationParams, rho: f64, z1: f64, z2: f64) -> (f64, f64) {
    let y1 = params.mu1 + params.sigma1 * z1;
    let y2 = params.mu2 + params.sigma2 * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
    match params.flavor {
        Flavor::Continuous => (y1, y2),
        Flavor::DiscreteInterval { cutpoints } => (score(y1, &cutpoints), score(y2, &cutpoints)),
    }
}

fn score(y: f64, cutpoints: &[f64; 3]) -> f64 {
    cutpoints.iter().filter(|&&c| y > c).count() as f64
}

/// Draws `n` informative subjects.
pub fn generate<R: Rng + ?Sized>(
    params: &PopulationParams,
    missing: &MissingnessSpec,
    n: usize,
    rng: &mut R,
) -> PartiallyPairedSample {
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let (y1, y2) = draw_pair(params, rng);
        let lost1 = rng.random::<f64>() < missing.q1;
        let lost2 = rng.random::<f64>() < missing.q2;
        match (lost1, lost2) {
            (true, true) => continue,
            (false, false) => rows.push((Some(y1), Some(y2))),
            (false, true) => rows.push((Some(y1), None)),
            (true, false) => rows.push((None, Some(y2))),
        }
    }
    PartiallyPairedSample::from_rows(rows)
        .expect("generated values are finite")
        .sample
}

/// Latent correlation whose thresholded data have Spearman correlation
/// `target`, found by bisection on common random numbers.
pub fn calibrate_latent_rho(params: &PopulationParams, target: f64, seed: u64) -> Result<f64> {
    const DRAWS: usize = 20_000;
    if !(target > -1.0 && target < 1.0) {
        return Err(Error::InvalidParams(format!(
            "Spearman target must lie in (-1, 1), got {target}"
        )));
    }
    let mut rng = replicate_rng(seed, u64::MAX);
    let z: Vec<(f64, f64)> = (0..DRAWS)
        .map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let realized = |rho: f64| {
        let (a, b): (Vec<f64>, Vec<f64>) = z
            .iter()
            .map(|&(z1, z2)| latent_pair(params, rho, z1, z2))
            .unzip();
        spearman(&a, &b).unwrap_or(0.0)
    };
    let (mut lo, mut hi) = (-0.999, 0.999);
    if target <= realized(lo) {
        return Ok(lo);
    }
    if target >= realized(hi) {
        return Ok(hi);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if realized(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub params: PopulationParams,
    pub missing: MissingnessSpec,
    pub n: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub se: SeMode,
    /// When set, the latent correlation is calibrated to hit this
    /// Spearman correlation and `params.rho` is ignored.
    pub spearman_target: Option<f64>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.missing.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidParams("replicates must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParams("no methods requested".into()));
        }
        for m in &self.methods {
            m.validate()?;
        }
        if let SeMode::Bootstrap { replicates } = self.se {
            if replicates < 2 {
                return Err(Error::InvalidParams(
                    "bootstrap needs at least 2 replicates".into(),
                ));
            }
        }
        Ok(())
    }

    /// Population parameters with the latent correlation resolved.
    pub fn resolved_params(&self) -> Result<PopulationParams> {
        let mut p = self.params;
        if let Some(target) = self.spearman_target {
            p.rho = calibrate_latent_rho(&p, target, self.seed)?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRate {
    pub method: Method,
    pub rejections: usize,
    /// Replicates where the method produced a result.
    pub evaluated: usize,
    pub failures: usize,
    /// Absent when no replicate could be evaluated.
    pub rate: Option<f64>,
    /// `sqrt(r (1 - r) / evaluated)`.
    pub mc_se: Option<f64>,
    pub failure_codes: BTreeMap<String, usize>,
}

/// Averages of plug-in quantities over replicates where they exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedAverages {
    pub p1: f64,
    pub p2: f64,
    pub p12: f64,
    pub rho: f64,
    /// Spearman correlation of the complete pairs.
    pub spearman: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub scenario: ScenarioSpec,
    pub latent_rho: f64,
    pub methods: Vec<MethodRate>,
    pub realized: RealizedAverages,
}

impl SimulationReport {
    pub fn rate(&self, method: &Method) -> Option<&MethodRate> {
        self.methods.iter().find(|m| &m.method == method)
    }
}

struct ReplicateOutcome {
    decisions: Vec<std::result::Result<bool, &'static str>>,
    realized: Option<[f64; 4]>,
    spearman: Option<f64>,
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<SimulationReport> {
    spec.validate()?;
    let params = spec.resolved_params()?;
    let outcomes: Vec<ReplicateOutcome> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, &params, r as u64))
        .collect();

    let methods = spec
        .methods
        .iter()
        .enumerate()
        .map(|(k, method)| {
            let mut rate = MethodRate {
                method: *method,
                rejections: 0,
                evaluated: 0,
                failures: 0,
                rate: None,
                mc_se: None,
                failure_codes: BTreeMap::new(),
            };
            for o in &outcomes {
                match o.decisions[k] {
                    Ok(reject) => {
                        rate.evaluated += 1;
                        rate.rejections += reject as usize;
                    }
                    Err(code) => {
                        rate.failures += 1;
                        *rate.failure_codes.entry(code.to_string()).or_default() += 1;
                    }
                }
            }
            if rate.evaluated > 0 {
                let r = rate.rejections as f64 / rate.evaluated as f64;
                rate.rate = Some(r);
                rate.mc_se = Some((r * (1.0 - r) / rate.evaluated as f64).sqrt());
            }
            rate
        })
        .collect();

    let mut sums = [0.0; 4];
    let mut count = 0usize;
    let (mut sp_sum, mut sp_count) = (0.0, 0usize);
    for o in &outcomes {
        if let Some(v) = o.realized {
            for (s, x) in sums.iter_mut().zip(v) {
                *s += x;
            }
            count += 1;
        }
        if let Some(s) = o.spearman {
            sp_sum += s;
            sp_count += 1;
        }
    }
    let avg = |s: f64, c: usize| if c == 0 { f64::NAN } else { s / c as f64 };
    Ok(SimulationReport {
        scenario: spec.clone(),
        latent_rho: params.rho,
        methods,
        realized: RealizedAverages {
            p1: avg(sums[0], count),
            p2: avg(sums[1], count),
            p12: avg(sums[2], count),
            rho: avg(sums[3], count),
            spearman: avg(sp_sum, sp_count),
            replicates: count,
        },
    })
}

fn run_replicate(spec: &ScenarioSpec, params: &PopulationParams, r: u64) -> ReplicateOutcome {
    let mut rng = replicate_rng(spec.seed, r);
    let sample = generate(params, &spec.missing, spec.n, &mut rng);
    let boot_seed: u64 = rng.random();
    let decisions = spec
        .methods
        .iter()
        .map(|m| {
            m.run(&sample, spec.se, boot_seed)
                .map(|t| t.rejects(spec.alpha))
                .map_err(|e| e.code())
        })
        .collect();
    let realized = summarize(&sample).ok().map(|st| {
        let m = st.moments;
        [m.p1, m.p2, m.p12, m.rho]
    });
    ReplicateOutcome {
        decisions,
        realized,
        spearman: spearman(sample.y1_complete(), sample.y2_complete()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_cdf;

    #[test]
    fn observation_probs_condition_on_retention() {
        let (p1, p2, p12) = MissingnessSpec { q1: 0.5, q2: 0.5 }.observation_probs();
        assert!((p1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((p2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((p12 - 1.0 / 3.0).abs() < 1e-15);
        let (p1, p2, p12) = MissingnessSpec { q1: 0.0, q2: 0.5 }.observation_probs();
        assert_eq!((p1, p2, p12), (1.0, 0.5, 0.5));
    }

    #[test]
    fn near_degenerate_correlation() {
        let params = PopulationParams::continuous(0.0, 0.0, 1.0, 1.0, 0.9999);
        let s = generate(
            &params,
            &MissingnessSpec { q1: 0.0, q2: 0.0 },
            1000,
            &mut replicate_rng(1, 0),
        );
        assert_eq!(s.n0(), 1000);
        assert!(summarize(&s).unwrap().moments.rho > 0.95);
    }

    #[test]
    fn group2_masking_rate() {
        let params = PopulationParams::continuous(0.0, 0.0, 1.0, 1.0, 0.3);
        let n = 10_000;
        let s = generate(
            &params,
            &MissingnessSpec { q1: 0.0, q2: 0.5 },
            n,
            &mut replicate_rng(2, 0),
        );
        // no group-1 gaps, so y2_only stays empty; the masked rows sit in y1_only
        assert_eq!(s.n2(), 0);
        let frac = s.n1() as f64 / n as f64;
        let mc_se = (0.25 / n as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * mc_se, "{frac}");
    }

    #[test]
    fn discrete_quartile_cutpoints() {
        let q = crate::stats::normal_quantile(0.75);
        let params = PopulationParams {
            flavor: Flavor::DiscreteInterval {
                cutpoints: [-q, 0.0, q],
            },
            ..PopulationParams::continuous(0.0, 0.0, 1.0, 1.0, 0.5)
        };
        let n = 100_000;
        let s = generate(
            &params,
            &MissingnessSpec { q1: 0.0, q2: 0.0 },
            n,
            &mut replicate_rng(3, 0),
        );
        let mut freq = [0usize; 4];
        for &v in s.y1_complete() {
            freq[v as usize] += 1;
        }
        // Phi at the cutpoints gives 1/4 per category
        let expected = normal_cdf(-q);
        for f in freq {
            let p = f as f64 / n as f64;
            assert!(
                (p - expected).abs() < 4.0 * (0.25 * 0.75 / n as f64).sqrt(),
                "{freq:?}"
            );
        }
    }

    #[test]
    fn calibration_hits_spearman_target() {
        let params = PopulationParams {
            flavor: Flavor::DiscreteInterval {
                cutpoints: [-0.8, 0.0, 0.9],
            },
            ..PopulationParams::continuous(0.0, 0.0, 1.0, 1.0, 0.0)
        };
        let rho = calibrate_latent_rho(&params, 0.49, 5).unwrap();
        let p = PopulationParams { rho, ..params };
        let s = generate(
            &p,
            &MissingnessSpec { q1: 0.0, q2: 0.0 },
            50_000,
            &mut replicate_rng(9, 0),
        );
        let r = spearman(s.y1_complete(), s.y2_complete()).unwrap();
        assert!((r - 0.49).abs() < 0.02, "{r}");
        assert!(rho > 0.49);
    }

    fn small_spec() -> ScenarioSpec {
        ScenarioSpec {
            name: "small".into(),
            params: PopulationParams::continuous(0.0, 0.0, 1.0, 1.0, 0.6),
            missing: MissingnessSpec { q1: 0.5, q2: 0.5 },
            n: 30,
            replicates: 20,
            alpha: 0.05,
            methods: vec![
                Method::WmdOptimal,
                Method::WmdSimple,
                Method::TPairedComplete,
                Method::WilcoxonImputed,
            ],
            seed: 42,
            se: SeMode::Bootstrap { replicates: 50 },
            spearman_target: None,
        }
    }

    #[test]
    fn deterministic_report() {
        let spec = small_spec();
        let a = serde_json::to_string(&run_scenario(&spec).unwrap()).unwrap();
        let b = serde_json::to_string(&run_scenario(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = ScenarioSpec { seed: 43, ..spec };
        let c = run_scenario(&other).unwrap();
        assert_ne!(a, serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn failures_are_counted() {
        // n = 4 with heavy masking: many replicates lack two complete pairs
        let spec = ScenarioSpec {
            n: 4,
            replicates: 50,
            se: SeMode::PlugIn,
            ..small_spec()
        };
        let rep = run_scenario(&spec).unwrap();
        let wmd = rep.rate(&Method::WmdOptimal).unwrap();
        assert!(wmd.failures > 0);
        assert_eq!(wmd.failures + wmd.evaluated, 50);
        assert_eq!(wmd.failure_codes.values().sum::<usize>(), wmd.failures);
    }

    #[test]
    fn invalid_specs() {
        let s = small_spec();
        assert!(ScenarioSpec {
            replicates: 0,
            ..s.clone()
        }
        .validate()
        .is_err());
        assert!(ScenarioSpec {
            alpha: 1.0,
            ..s.clone()
        }
        .validate()
        .is_err());
        assert!(ScenarioSpec {
            missing: MissingnessSpec { q1: 1.0, q2: 0.0 },
            ..s.clone()
        }
        .validate()
        .is_err());
        let mut bad = s;
        bad.params.flavor = Flavor::DiscreteInterval {
            cutpoints: [0.0, 0.0, 1.0],
        };
        assert!(bad.validate().is_err());
    }
}
