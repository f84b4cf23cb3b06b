//! Scenario files.
//!
//! A flat `key = value` format. Lines before the first `[name]` header set
//! defaults for every scenario; each header starts a scenario that may
//! override them. `#` starts a comment. A scenario expands into one
//! [`ScenarioSpec`] per entry of its `n` list.
//!
//! | key               | value                                             | default |
//! |-------------------|---------------------------------------------------|---------|
//! | `mu1`, `mu2`      | real                                              | 0       |
//! | `sigma1`,`sigma2` | real > 0                                          | 1       |
//! | `rho`             | latent correlation in (-1, 1)                     | 0       |
//! | `flavor`          | `continuous` or `discrete`                        | continuous |
//! | `cutpoints`       | three increasing reals (discrete only)            | -0.674, 0, 0.674 |
//! | `spearman_target` | calibrate `rho` to this Spearman correlation      | unset   |
//! | `q1`, `q2`        | probability that the group value is missing       | 0       |
//! | `n`               | comma-separated sample sizes                      | required |
//! | `replicates`      | count                                             | 1000    |
//! | `alpha`           | level in (0, 1)                                   | 0.05    |
//! | `methods`         | comma-separated method names                      | wmd-optimal, wmd-simple, t-cp, w-cp |
//! | `se`              | `bootstrap` or `plugin`                           | bootstrap |
//! | `bootstrap_b`     | bootstrap replicates                              | 1500    |
//! | `seed`            | unsigned integer                                  | 1       |

use std::path::Path;

use crate::error::{Error, Result};
use crate::method::{Method, SeMode};
use crate::sim::{Flavor, MissingnessSpec, PopulationParams, ScenarioSpec};
use crate::wmd::DEFAULT_BOOTSTRAP_REPLICATES;

const KEYS: &[&str] = &[
    "mu1",
    "mu2",
    "sigma1",
    "sigma2",
    "rho",
    "flavor",
    "cutpoints",
    "spearman_target",
    "q1",
    "q2",
    "n",
    "replicates",
    "alpha",
    "methods",
    "se",
    "bootstrap_b",
    "seed",
];

pub fn parse_scenarios_file(path: &Path) -> Result<Vec<ScenarioSpec>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenarios(&text)
}

#[derive(Clone, Default)]
struct Entries(Vec<(String, String, usize)>);

impl Entries {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.0
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
    }
}

pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioSpec>> {
    let mut defaults = Entries::default();
    let mut sections: Vec<(String, usize, Entries)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| parse_err(line_no, "malformed section header"))?;
            if sections.iter().any(|(n, _, _)| n == name) {
                return Err(parse_err(line_no, &format!("duplicate scenario '{name}'")));
            }
            sections.push((name.to_string(), line_no, defaults.clone()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected 'key = value'"))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(parse_err(line_no, &format!("unknown key '{key}'")));
        }
        let entry = (key.to_string(), value.trim().to_string(), line_no);
        match sections.last_mut() {
            Some((_, _, entries)) => entries.0.push(entry),
            None => defaults.0.push(entry),
        }
    }
    if sections.is_empty() {
        return Err(parse_err(1, "no [scenario] sections"));
    }

    let mut specs = Vec::new();
    for (name, header_line, entries) in &sections {
        specs.extend(build(name, *header_line, entries)?);
    }
    Ok(specs)
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

fn build(name: &str, header_line: usize, e: &Entries) -> Result<Vec<ScenarioSpec>> {
    let real = |key: &str, default: f64| -> Result<f64> {
        match e.get(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse::<f64>()
                .map_err(|_| parse_err(line, &format!("{key}: '{v}' is not a number"))),
        }
    };
    let count = |key: &str, default: u64| -> Result<u64> {
        match e.get(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse::<u64>()
                .map_err(|_| parse_err(line, &format!("{key}: '{v}' is not an unsigned integer"))),
        }
    };
    let list = |key: &str| {
        e.get(key)
            .map(|(v, line)| (v.split(',').map(str::trim).collect::<Vec<_>>(), line))
    };

    let flavor = match e.get("flavor") {
        None | Some(("continuous", _)) => Flavor::Continuous,
        Some(("discrete", _)) => {
            let cutpoints = match list("cutpoints") {
                None => [-0.674_489_750_196_081_7, 0.0, 0.674_489_750_196_081_7],
                Some((items, line)) => {
                    let v: Vec<f64> = items
                        .iter()
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| parse_err(line, "cutpoints: expected three numbers"))?;
                    <[f64; 3]>::try_from(v.as_slice())
                        .map_err(|_| parse_err(line, "cutpoints: expected three numbers"))?
                }
            };
            Flavor::DiscreteInterval { cutpoints }
        }
        Some((other, line)) => return Err(parse_err(line, &format!("flavor: unknown '{other}'"))),
    };

    let params = PopulationParams {
        mu1: real("mu1", 0.0)?,
        mu2: real("mu2", 0.0)?,
        sigma1: real("sigma1", 1.0)?,
        sigma2: real("sigma2", 1.0)?,
        rho: real("rho", 0.0)?,
        flavor,
    };
    let spearman_target = match e.get("spearman_target") {
        None => None,
        Some(_) => Some(real("spearman_target", 0.0)?),
    };
    let missing = MissingnessSpec {
        q1: real("q1", 0.0)?,
        q2: real("q2", 0.0)?,
    };

    let methods = match list("methods") {
        None => vec![
            Method::WmdOptimal,
            Method::WmdSimple,
            Method::TPairedComplete,
            Method::WilcoxonComplete,
        ],
        Some((_, line)) => {
            // method names may contain commas inside parentheses
            let raw = e.get("methods").map(|(v, _)| v).unwrap_or_default();
            split_methods(raw)
                .iter()
                .map(|s| {
                    s.parse::<Method>()
                        .map_err(|err| parse_err(line, &err.to_string()))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let se = match e.get("se") {
        None | Some(("bootstrap", _)) => SeMode::Bootstrap {
            replicates: count("bootstrap_b", DEFAULT_BOOTSTRAP_REPLICATES as u64)? as usize,
        },
        Some(("plugin", _)) => SeMode::PlugIn,
        Some((other, line)) => return Err(parse_err(line, &format!("se: unknown '{other}'"))),
    };

    let (sizes, n_line) =
        list("n").ok_or_else(|| parse_err(header_line, &format!("scenario '{name}' has no n")))?;
    let sizes: Vec<usize> = sizes
        .iter()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(n_line, "n: expected comma-separated counts"))?;

    let replicates = count("replicates", 1000)? as usize;
    let alpha = real("alpha", 0.05)?;
    let seed = count("seed", 1)?;

    sizes
        .into_iter()
        .map(|n| {
            let spec = ScenarioSpec {
                name: name.to_string(),
                params,
                missing,
                n,
                replicates,
                alpha,
                methods: methods.clone(),
                seed,
                se,
                spearman_target,
            };
            spec.validate()
                .map_err(|err| parse_err(header_line, &format!("scenario '{name}': {err}")))?;
            Ok(spec)
        })
        .collect()
}

/// Splits on commas that are not inside parentheses.
fn split_methods(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in raw.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}
