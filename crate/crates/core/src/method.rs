//! Named test methods shared by the CLI, the simulation harness and the FFI.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::baseline::BaselineMethod;
use crate::error::{Error, Result};
use crate::sample::PartiallyPairedSample;
use crate::weights::WeightStrategy;
use crate::wmd::{test, SeMethod, TestResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    WmdOptimal,
    WmdSimple,
    WmdComplete,
    WmdFixed { w1: f64, w2: f64 },
    Bhoj { lambda: Option<f64> },
    TPairedComplete,
    TPairedImputed,
    WilcoxonComplete,
    WilcoxonImputed,
}

/// Standard-error mode for the WMD family; baselines ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SeMode {
    PlugIn,
    Bootstrap { replicates: usize },
}

impl Method {
    pub fn strategy(&self) -> Option<WeightStrategy> {
        match *self {
            Method::WmdOptimal => Some(WeightStrategy::Optimal),
            Method::WmdSimple => Some(WeightStrategy::Simple),
            Method::WmdComplete => Some(WeightStrategy::CompleteOnly),
            Method::WmdFixed { w1, w2 } => Some(WeightStrategy::Fixed { w1, w2 }),
            Method::Bhoj { lambda } => Some(WeightStrategy::Bhoj { lambda }),
            _ => None,
        }
    }

    pub fn baseline(&self) -> Option<BaselineMethod> {
        match self {
            Method::TPairedComplete => Some(BaselineMethod::TPairedComplete),
            Method::TPairedImputed => Some(BaselineMethod::TPairedImputed),
            Method::WilcoxonComplete => Some(BaselineMethod::WilcoxonComplete),
            Method::WilcoxonImputed => Some(BaselineMethod::WilcoxonImputed),
            _ => None,
        }
    }

    pub fn run(&self, sample: &PartiallyPairedSample, se: SeMode, seed: u64) -> Result<TestResult> {
        if let Some(strategy) = self.strategy() {
            let se = match se {
                SeMode::PlugIn => SeMethod::PlugIn,
                SeMode::Bootstrap { replicates } => SeMethod::Bootstrap { replicates, seed },
            };
            return test(sample, &strategy, se);
        }
        match self.baseline() {
            Some(b) => b.run(sample),
            None => Err(Error::Internal(format!("method {self} has no runner"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Method::WmdFixed { w1, w2 }
                if !(0.0..=1.0).contains(&w1) || !(0.0..=1.0).contains(&w2) =>
            {
                Err(Error::InvalidParams(format!(
                    "fixed weights must lie in [0, 1], got ({w1}, {w2})"
                )))
            }
            Method::Bhoj { lambda: Some(l) } if !(0.0..=1.0).contains(&l) => Err(
                Error::InvalidParams(format!("lambda must lie in [0, 1], got {l}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::WmdOptimal => f.write_str("wmd-optimal"),
            Method::WmdSimple => f.write_str("wmd-simple"),
            Method::WmdComplete => f.write_str("wmd-complete"),
            Method::WmdFixed { w1, w2 } => write!(f, "wmd-fixed({w1},{w2})"),
            Method::Bhoj { lambda: None } => f.write_str("bhoj"),
            Method::Bhoj { lambda: Some(l) } => write!(f, "bhoj({l})"),
            Method::TPairedComplete => f.write_str("t-cp"),
            Method::TPairedImputed => f.write_str("t-im"),
            Method::WilcoxonComplete => f.write_str("w-cp"),
            Method::WilcoxonImputed => f.write_str("w-im"),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParams(format!("unknown method '{s}'"));
        let args = |inner: &str| -> Result<Vec<f64>> {
            inner
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        let m = match s {
            "wmd-optimal" | "wmd-o" => Method::WmdOptimal,
            "wmd-simple" | "wmd-s" => Method::WmdSimple,
            "wmd-complete" => Method::WmdComplete,
            "bhoj" => Method::Bhoj { lambda: None },
            "t-cp" => Method::TPairedComplete,
            "t-im" => Method::TPairedImputed,
            "w-cp" => Method::WilcoxonComplete,
            "w-im" => Method::WilcoxonImputed,
            _ => {
                let (head, rest) = s.split_once('(').ok_or_else(bad)?;
                let inner = rest.strip_suffix(')').ok_or_else(bad)?;
                let v = args(inner)?;
                match (head.trim(), v.as_slice()) {
                    ("wmd-fixed", &[w1, w2]) => Method::WmdFixed { w1, w2 },
                    ("bhoj", &[l]) => Method::Bhoj { lambda: Some(l) },
                    _ => return Err(bad()),
                }
            }
        };
        m.validate()?;
        Ok(m)
    }
}
